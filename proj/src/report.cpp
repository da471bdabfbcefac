#include "mmfnd/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mmfnd/error.hpp"

namespace mmfnd {

using nlohmann::json;

namespace {

constexpr const char* kZeroDenominatorRule = "precision=0 when TP+FP=0; recall=0 when TP+FN=0; f1=0 when P+R=0";

json class_json(const ClassMetrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ClassMetrics class_from_json(const json& j) {
  return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}

json binary_json(const BinaryMetrics& b) {
  return {{"n", b.n},
          {"counts",
           {{"tp", b.counts.tp},
            {"tn", b.counts.tn},
            {"fp", b.counts.fp},
            {"fn", b.counts.fn},
            {"positive_label", b.counts.positive_label}}},
          {"fake", class_json(b.fake)},
          {"real", class_json(b.real)}};
}

BinaryMetrics binary_from_json(const json& j) {
  BinaryMetrics b;
  b.n = j.at("n").get<std::size_t>();
  const auto& c = j.at("counts");
  b.counts = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(), c.at("fp").get<std::size_t>(),
              c.at("fn").get<std::size_t>(), c.at("positive_label").get<int>()};
  b.fake = class_from_json(j.at("fake"));
  b.real = class_from_json(j.at("real"));
  return b;
}

// Half away from zero; printf alone rounds exact binary halves to even.
std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", std::round(v * 1000.0) / 1000.0);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("output directory is not writable: " + dir.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

EvaluationReport make_report(std::string method, std::span<const IdPrediction> predictions,
                             std::span<const NewsArticle> articles, json config, std::string timestamp) {
  if (predictions.empty()) throw Error("cannot build a report from zero predictions");
  std::unordered_map<std::string, const NewsArticle*> by_id;
  for (const auto& a : articles) by_id.emplace(a.id, &a);
  std::vector<int> truth;
  std::vector<int> pred;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw Error("prediction has no matching article", p.id);
    truth.push_back(it->second->label);
    pred.push_back(p.label);
  }
  EvaluationReport r;
  r.method = std::move(method);
  r.overall = binary_metrics(truth, pred);
  r.per_language = per_language_breakdown(predictions, articles);
  r.config = std::move(config);
  r.timestamp = std::move(timestamp);
  return r;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const EvaluationReport& r) {
  json langs = json::object();
  for (const auto& [lang, m] : r.per_language) langs[std::string(to_string(lang))] = binary_json(m);
  return {{"schema_version", r.schema_version},
          {"method", r.method},
          {"timestamp", r.timestamp},
          {"accuracy", r.accuracy()},
          {"overall", binary_json(r.overall)},
          {"per_language", std::move(langs)},
          {"config", r.config},
          {"metadata", {{"positive_class", "fake (label 0) for fake metrics, real (label 1) for real metrics"},
                        {"zero_denominator", kZeroDenominatorRule},
                        {"reporting_precision", 3}}}};
}

EvaluationReport report_from_json(const json& j) {
  try {
    EvaluationReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error("unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.method = j.at("method").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.overall = binary_from_json(j.at("overall"));
    for (const auto& [code, m] : j.at("per_language").items()) {
      r.per_language.emplace(parse_language(code), binary_from_json(m));
    }
    r.config = j.at("config");
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

json to_json(const ReportTable& t) {
  json rows = json::array();
  for (const auto& [label, report] : t.rows) rows.push_back({{"label", label}, {"report", to_json(report)}});
  return {{"schema_version", kReportSchemaVersion}, {"name", t.name}, {"rows", std::move(rows)}};
}

ReportTable report_table_from_json(const json& j) {
  if (!j.is_object()) throw Error("malformed report: top level is not an object");
  ReportTable t;
  if (!j.contains("rows")) {
    auto r = report_from_json(j);
    t.name = r.method;
    t.rows.emplace_back(r.method, std::move(r));
    return t;
  }
  try {
    t.name = j.at("name").get<std::string>();
    for (const auto& row : j.at("rows")) {
      t.rows.emplace_back(row.at("label").get<std::string>(), report_from_json(row.at("report")));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  if (t.rows.empty()) throw Error("malformed report: no rows");
  return t;
}

ReportTable load_report_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed report " + path.string() + ": " + e.what());
  }
  return report_table_from_json(j);
}

std::vector<ReportFormat> parse_formats(std::string_view list) {
  std::vector<ReportFormat> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    const auto name = list.substr(pos, end - pos);
    pos = end + 1;
    if (name.empty()) continue;
    ReportFormat f;
    if (name == "json") f = ReportFormat::json;
    else if (name == "csv") f = ReportFormat::csv;
    else if (name == "plots") f = ReportFormat::plots;
    else throw ConfigError("unknown report format '" + std::string(name) + "' (expected json, csv, plots)");
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  }
  if (out.empty()) throw ConfigError("no report format requested");
  return out;
}

std::string report_csv(const ReportTable& table) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& [label, r] : table.rows) {
    const auto& o = r.overall;
    out += csv_field(label) + ',' + fixed3(o.fake.accuracy) + ',' + fixed3(o.fake.precision) + ',' +
           fixed3(o.fake.recall) + ',' + fixed3(o.fake.f1) + ',' + fixed3(o.real.precision) + ',' +
           fixed3(o.real.recall) + ',' + fixed3(o.real.f1) + '\n';
  }
  return out;
}

std::vector<CsvRow> parse_report_csv(std::string_view csv) {
  std::vector<CsvRow> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw Error("empty report csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw Error("unexpected report csv header: " + line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw Error("report csv row has " + std::to_string(f.size()) + " fields");
    CsvRow r;
    try {
      r.method = f[0];
      r.accuracy = std::stod(f[1]);
      r.fake = {r.accuracy, std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
      r.real = {r.accuracy, std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
    } catch (const std::exception&) {
      throw Error("report csv row has a non-numeric value: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<BarChart> make_charts(const ReportTable& table) {
  std::vector<BarChart> charts;
  for (const auto* family : {"fake", "real"}) {
    BarChart c;
    c.family = family;
    c.title = std::string(family == std::string_view("fake") ? "Fake" : "Real") + " news: " + table.name;
    c.series = {"Accuracy", "Precision", "Recall", "F1"};
    for (const auto& [label, r] : table.rows) {
      const auto& m = family == std::string_view("fake") ? r.overall.fake : r.overall.real;
      c.groups.push_back(label);
      c.values.push_back({m.accuracy, m.precision, m.recall, m.f1});
    }
    charts.push_back(std::move(c));
  }
  return charts;
}

void write_chart_png(const BarChart& chart, const std::filesystem::path& path) {
  const int group_w = 44 * static_cast<int>(chart.series.size()) + 40;
  const int left = 70, right = 30, top = 60, bottom = 90;
  const int plot_h = 320;
  const int width = std::max(480, left + right + group_w * static_cast<int>(chart.groups.size()));
  const int height = top + plot_h + bottom;
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  const std::vector<cv::Scalar> colors = {cv::Scalar(180, 119, 31), cv::Scalar(14, 127, 255),
                                          cv::Scalar(44, 160, 44), cv::Scalar(40, 39, 214)};
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  cv::putText(img, chart.title, {left, 30}, font, 0.6, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);

  const int y0 = top + plot_h;
  for (int tick = 0; tick <= 5; ++tick) {
    const int y = y0 - tick * plot_h / 5;
    cv::line(img, {left, y}, {width - right, y}, cv::Scalar(225, 225, 225), 1);
    cv::putText(img, fixed3(tick / 5.0).substr(0, 3), {left - 40, y + 5}, font, 0.4, cv::Scalar(60, 60, 60), 1,
                cv::LINE_AA);
  }
  cv::line(img, {left, top}, {left, y0}, cv::Scalar(0, 0, 0), 1);
  cv::line(img, {left, y0}, {width - right, y0}, cv::Scalar(0, 0, 0), 1);

  for (std::size_t g = 0; g < chart.groups.size(); ++g) {
    const int gx = left + 20 + static_cast<int>(g) * group_w;
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const double v = std::clamp(chart.values[g][s], 0.0, 1.0);
      const int x = gx + static_cast<int>(s) * 44;
      const int h = static_cast<int>(std::lround(v * plot_h));
      cv::rectangle(img, {x, y0 - h}, {x + 36, y0}, colors[s % colors.size()], cv::FILLED);
    }
    cv::putText(img, chart.groups[g], {gx, y0 + 22}, font, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const int x = left + static_cast<int>(s) * 110;
    cv::rectangle(img, {x, height - 40}, {x + 14, height - 26}, colors[s % colors.size()], cv::FILLED);
    cv::putText(img, chart.series[s], {x + 20, height - 28}, font, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  if (!cv::imwrite(path.string(), img)) throw Error("cannot write chart " + path.string());
}

namespace {

std::vector<std::filesystem::path> emit(const ReportTable& table, const json& json_doc,
                                        const std::filesystem::path& out_dir, std::span<const ReportFormat> formats,
                                        std::string_view stem) {
  ensure_dir(out_dir);
  std::vector<std::filesystem::path> files;
  for (auto f : formats) {
    switch (f) {
      case ReportFormat::json: {
        auto p = out_dir / (std::string(stem) + ".json");
        write_text(p, json_doc.dump(2) + "\n");
        files.push_back(p);
        break;
      }
      case ReportFormat::csv: {
        auto p = out_dir / (std::string(stem) + ".csv");
        write_text(p, report_csv(table));
        files.push_back(p);
        break;
      }
      case ReportFormat::plots: {
        for (const auto& chart : make_charts(table)) {
          auto p = out_dir / (std::string(stem) + "_" + chart.family + ".png");
          write_chart_png(chart, p);
          files.push_back(p);
        }
        break;
      }
    }
  }
  return files;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir,
                                               std::span<const ReportFormat> formats, std::string_view stem) {
  ReportTable table{report.method, {{report.method, report}}};
  return emit(table, to_json(report), out_dir, formats, stem);
}

std::vector<std::filesystem::path> emit_report(const ReportTable& table, const std::filesystem::path& out_dir,
                                               std::span<const ReportFormat> formats, std::string_view stem) {
  return emit(table, to_json(table), out_dir, formats, stem);
}

}  // namespace mmfnd
