#include "mmfnd/dataset.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "mmfnd/error.hpp"
#include "mmfnd/hashing.hpp"
#include "mmfnd/image.hpp"
#include "mmfnd/text.hpp"

namespace mmfnd {

using nlohmann::json;

std::string_view to_string(Language lang) noexcept {
  switch (lang) {
    case Language::hi: return "hi";
    case Language::bn: return "bn";
    case Language::mr: return "mr";
    case Language::ml: return "ml";
    case Language::ta: return "ta";
    case Language::gu: return "gu";
    case Language::pa: return "pa";
    case Language::other: return "other";
  }
  return "other";
}

Language parse_language(std::string_view code) noexcept {
  for (Language l : kAllLanguages) {
    if (to_string(l) == code) return l;
  }
  return Language::other;
}

namespace {

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ManifestError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string required_string(const json& j, const char* key) {
  auto v = optional_string(j, key);
  if (!v) throw ManifestError(std::string("missing field '") + key + "'");
  return *v;
}

bool looks_like_iso_date(const std::string& s) {
  static const std::regex kIso(R"(^\d{4}-\d{2}-\d{2}([T ][0-9:.]+(Z|[+-]\d{2}:?\d{2})?)?$)");
  return std::regex_match(s, kIso);
}

}  // namespace

json to_json(const NewsArticle& a) {
  json j;
  j["id"] = a.id;
  j["language"] = std::string(to_string(a.language));
  j["text"] = a.text;
  if (a.text_en) j["text_en"] = *a.text_en;
  if (a.image_ref) j["image_ref"] = *a.image_ref;
  j["label"] = a.label;
  if (a.source_url) j["source_url"] = *a.source_url;
  if (a.published_at) j["published_at"] = *a.published_at;
  if (!a.tags.empty()) j["tags"] = a.tags;
  if (a.translated_by) j["translated_by"] = *a.translated_by;
  return j;
}

NewsArticle article_from_json(const json& j) {
  if (!j.is_object()) throw ManifestError("record is not a JSON object");
  NewsArticle a;
  a.id = required_string(j, "id");
  if (a.id.empty()) throw ManifestError("field 'id' is empty");
  a.language = parse_language(required_string(j, "language"));
  a.text = required_string(j, "text");
  a.text_en = optional_string(j, "text_en");
  a.image_ref = optional_string(j, "image_ref");
  if (a.image_ref && a.image_ref->empty()) a.image_ref.reset();

  auto label = j.find("label");
  if (label == j.end() || !label->is_number_integer()) {
    throw ManifestError("field 'label' must be an integer");
  }
  const auto value = label->get<std::int64_t>();
  if (value != kFakeLabel && value != kRealLabel) {
    throw ManifestError("label must be 0 (fake) or 1 (real), got " + std::to_string(value));
  }
  a.label = static_cast<int>(value);

  a.source_url = optional_string(j, "source_url");
  a.published_at = optional_string(j, "published_at");
  if (a.published_at && !looks_like_iso_date(*a.published_at)) {
    throw ManifestError("field 'published_at' is not an ISO-8601 date: " + *a.published_at);
  }
  if (auto tags = j.find("tags"); tags != j.end() && !tags->is_null()) {
    if (!tags->is_array()) throw ManifestError("field 'tags' must be an array of strings");
    for (const auto& t : *tags) {
      if (!t.is_string()) throw ManifestError("field 'tags' must be an array of strings");
      a.tags.push_back(t.get<std::string>());
    }
  }
  a.translated_by = optional_string(j, "translated_by");
  return a;
}

const NewsArticle* DatasetManifest::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

DatasetManifest parse_manifest(std::string_view jsonl, std::filesystem::path root_dir) {
  DatasetManifest m;
  m.root_dir = std::move(root_dir);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    NewsArticle a;
    try {
      a = article_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const ManifestError& e) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(a.id).second) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": duplicate id '" + a.id + "'");
    }
    m.records.push_back(std::move(a));
    if (end == jsonl.size()) break;
  }
  if (m.records.empty()) throw ManifestError("empty manifest");
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, std::optional<std::filesystem::path> root_dir) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto root = root_dir ? *root_dir : path.parent_path();
  return parse_manifest(ss.str(), root);
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest: " + path.string());
  for (const auto& r : manifest.records) out << to_json(r).dump() << '\n';
  if (!out) throw Error("failed writing manifest: " + path.string());
}

std::vector<std::string> ExclusionResult::dropped_ids() const {
  std::vector<std::string> ids;
  ids.reserve(dropped.size());
  for (const auto& d : dropped) ids.push_back(d.id);
  return ids;
}

ExclusionResult exclude_incomplete(const DatasetManifest& manifest) {
  ExclusionResult result;
  result.kept.root_dir = manifest.root_dir;
  result.kept.schema_version = manifest.schema_version;
  for (const auto& r : manifest.records) {
    if (!r.image_ref) {
      result.dropped.push_back({r.id, "missing image_ref"});
      continue;
    }
    const auto path = manifest.resolve_image(r);
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file_bytes(path);
    } catch (const Error&) {
      result.dropped.push_back({r.id, "image not readable: " + path.string()});
      continue;
    }
    bool ok = true;
    if (path.extension() == ".tensor") {
      try {
        load_tensor(path);
      } catch (const Error&) {
        ok = false;
      }
    } else {
      ok = is_decodable_image(bytes);
    }
    if (!ok) {
      result.dropped.push_back({r.id, "image decode failed: " + path.string()});
      continue;
    }
    result.kept.records.push_back(r);
  }
  return result;
}

LookupTranslator LookupTranslator::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TranslationError("cannot open translation table: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw TranslationError("malformed translation table " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw TranslationError("translation table must be a JSON object: " + path.string());
  std::map<std::string, std::string> table;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw TranslationError("translation for '" + k + "' is not a string");
    table.emplace(k, v.get<std::string>());
  }
  return LookupTranslator(std::move(table), "lookup:" + path.filename().string());
}

std::string LookupTranslator::translate(std::string_view text, Language) const {
  auto it = table_.find(std::string(text));
  if (it == table_.end()) throw TranslationError("no translation for text");
  return it->second;
}

NewsArticle translate_article(const NewsArticle& article, const Translator& translator) {
  if (article.text_en) return article;
  NewsArticle out = article;
  try {
    out.text_en = translator.translate(clean_text(article.text), article.language);
  } catch (const TranslationError& e) {
    throw TranslationError(std::string("translation failed: ") + e.what(), article.id);
  } catch (const std::exception& e) {
    throw TranslationError(std::string("translation failed: ") + e.what(), article.id);
  }
  out.translated_by = translator.name();
  return out;
}

std::size_t train_size(std::size_t n, double ratio) {
  // Small epsilon absorbs binary representation error of ratios like 0.9.
  const double exact = ratio * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
  return std::min(k, n);
}

DatasetSplit split_ids(const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split ratio must be in (0, 1)");
  if (ids.size() < 2) throw Error("split requires at least 2 records, got " + std::to_string(ids.size()));
  std::vector<std::string> order = ids;
  SplitMix64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }
  const std::size_t k = train_size(order.size(), ratio);
  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  split.test_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  return split;
}

DatasetSplit split_dataset(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(manifest.records.size());
  for (const auto& r : manifest.records) ids.push_back(r.id);
  return split_ids(ids, ratio, seed);
}

DatasetStats compute_stats(const DatasetManifest& manifest) {
  DatasetStats s;
  for (Language l : kAllLanguages) s.per_language[l] = {};
  for (const auto& r : manifest.records) {
    auto& bucket = s.per_language[r.language];
    if (r.label == kRealLabel) {
      ++bucket.real;
      ++s.totals.real;
    } else {
      ++bucket.fake;
      ++s.totals.fake;
    }
  }
  return s;
}

json to_json(const DatasetStats& stats) {
  json j;
  json langs = json::object();
  for (const auto& [lang, c] : stats.per_language) {
    langs[std::string(to_string(lang))] = {{"real", c.real}, {"fake", c.fake}, {"total", c.total()}};
  }
  j["per_language"] = std::move(langs);
  j["totals"] = {{"real", stats.totals.real}, {"fake", stats.totals.fake}, {"total", stats.totals.total()}};
  return j;
}

}  // namespace mmfnd
