#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmfnd/metrics.hpp"

namespace mmfnd {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kCsvHeader = "method,accuracy,fake_p,fake_r,fake_f1,real_p,real_r,real_f1";

struct EvaluationReport {
  int schema_version = kReportSchemaVersion;
  std::string method = "mmcfnd";
  BinaryMetrics overall;
  std::map<Language, BinaryMetrics> per_language;
  nlohmann::json config = nlohmann::json::object();
  std::string timestamp;

  double accuracy() const noexcept { return overall.fake.accuracy; }
};

/// Joins predictions with their articles for overall and per-language metrics.
EvaluationReport make_report(std::string method, std::span<const IdPrediction> predictions,
                             std::span<const NewsArticle> articles, nlohmann::json config, std::string timestamp);

/// Current UTC time as ISO-8601.
std::string utc_timestamp();

nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Labelled reports, e.g. the rows of an ablation suite.
struct ReportTable {
  std::string name;
  std::vector<std::pair<std::string, EvaluationReport>> rows;
};

nlohmann::json to_json(const ReportTable& t);
ReportTable report_table_from_json(const nlohmann::json& j);
/// Accepts either a single report or a table; a single report becomes one row.
ReportTable load_report_table(const std::filesystem::path& path);

enum class ReportFormat { json, csv, plots };

/// Parses "json,csv,plots" (any subset). Throws ConfigError on unknown names.
std::vector<ReportFormat> parse_formats(std::string_view list);

/// Writes <stem>.json / <stem>.csv / <stem>_<family>.png into out_dir and
/// returns the written paths.
std::vector<std::filesystem::path> emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir,
                                               std::span<const ReportFormat> formats,
                                               std::string_view stem = "report");
std::vector<std::filesystem::path> emit_report(const ReportTable& table, const std::filesystem::path& out_dir,
                                               std::span<const ReportFormat> formats,
                                               std::string_view stem = "suite");

/// One CSV line per row, values at three decimals.
std::string report_csv(const ReportTable& table);

struct CsvRow {
  std::string method;
  double accuracy = 0.0;
  ClassMetrics fake;
  ClassMetrics real;
};

std::vector<CsvRow> parse_report_csv(std::string_view csv);

/// Grouped bar chart: one group per row, one bar per metric.
struct BarChart {
  std::string title;
  std::string family;  // "fake" or "real"
  std::vector<std::string> groups;
  std::vector<std::string> series;  // metric names
  std::vector<std::vector<double>> values;  // [group][series]
};

/// One chart per metric family (fake class, real class).
std::vector<BarChart> make_charts(const ReportTable& table);
void write_chart_png(const BarChart& chart, const std::filesystem::path& path);

}  // namespace mmfnd
