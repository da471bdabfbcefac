#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mmfnd {

enum class Language { hi, bn, mr, ml, ta, gu, pa, other };

inline constexpr std::array kAllLanguages{Language::hi, Language::bn, Language::mr, Language::ml,
                                          Language::ta, Language::gu, Language::pa, Language::other};

std::string_view to_string(Language lang) noexcept;
/// Unknown codes map to Language::other.
Language parse_language(std::string_view code) noexcept;

inline constexpr int kFakeLabel = 0;
inline constexpr int kRealLabel = 1;

struct NewsArticle {
  std::string id;
  Language language = Language::other;
  std::string text;
  std::optional<std::string> text_en;
  std::optional<std::string> image_ref;
  int label = kFakeLabel;
  std::optional<std::string> source_url;
  std::optional<std::string> published_at;
  std::vector<std::string> tags;
  /// Name of the translator that produced text_en, when the kit filled it in.
  std::optional<std::string> translated_by;

  friend bool operator==(const NewsArticle&, const NewsArticle&) = default;
};

nlohmann::json to_json(const NewsArticle& a);
/// Throws ManifestError on a missing/invalid required field.
NewsArticle article_from_json(const nlohmann::json& j);

struct DatasetManifest {
  std::vector<NewsArticle> records;
  std::filesystem::path root_dir;
  int schema_version = 1;

  std::filesystem::path resolve_image(const NewsArticle& a) const { return root_dir / *a.image_ref; }
  const NewsArticle* find(std::string_view id) const;
};

/// Parses a JSON Lines manifest. `root_dir` defaults to the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::optional<std::filesystem::path> root_dir = std::nullopt);
/// Same rules over in-memory JSONL text.
DatasetManifest parse_manifest(std::string_view jsonl, std::filesystem::path root_dir);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct DroppedRecord {
  std::string id;
  std::string reason;
};

struct ExclusionResult {
  DatasetManifest kept;
  std::vector<DroppedRecord> dropped;

  std::vector<std::string> dropped_ids() const;
};

/// Keeps records whose image_ref is present and decodable, preserving order.
ExclusionResult exclude_incomplete(const DatasetManifest& manifest);

class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string name() const = 0;
  /// Returns English text. Throws TranslationError on failure.
  virtual std::string translate(std::string_view text, Language source) const = 0;
};

/// Returns its input unchanged; never fails.
class IdentityTranslator final : public Translator {
 public:
  std::string name() const override { return "identity"; }
  std::string translate(std::string_view text, Language) const override { return std::string(text); }
};

/// Whole-text table lookup; missing entries are a translation failure.
class LookupTranslator final : public Translator {
 public:
  explicit LookupTranslator(std::map<std::string, std::string> table, std::string name = "lookup")
      : table_(std::move(table)), name_(std::move(name)) {}
  /// Reads a JSON object {"source text": "english text", ...}.
  static LookupTranslator from_file(const std::filesystem::path& path);

  std::string name() const override { return name_; }
  std::string translate(std::string_view text, Language source) const override;

 private:
  std::map<std::string, std::string> table_;
  std::string name_;
};

/// Fills text_en from the cleaned original text when absent.
NewsArticle translate_article(const NewsArticle& article, const Translator& translator);

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Number of training records: round-half-up of ratio * n.
std::size_t train_size(std::size_t n, double ratio);

/// Seeded Fisher-Yates shuffle of the ids (SplitMix64 stream), first
/// train_size(n, ratio) go to train. Requires at least two records.
DatasetSplit split_dataset(const DatasetManifest& manifest, double ratio, std::uint64_t seed);
DatasetSplit split_ids(const std::vector<std::string>& ids, double ratio, std::uint64_t seed);

struct ClassCounts {
  std::size_t real = 0;
  std::size_t fake = 0;
  std::size_t total() const noexcept { return real + fake; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct DatasetStats {
  std::map<Language, ClassCounts> per_language;
  ClassCounts totals;
};

DatasetStats compute_stats(const DatasetManifest& manifest);
nlohmann::json to_json(const DatasetStats& stats);

}  // namespace mmfnd
