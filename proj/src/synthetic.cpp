#include "mmfnd/synthetic.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mmfnd/error.hpp"
#include "mmfnd/hashing.hpp"
#include "mmfnd/text.hpp"

namespace mmfnd {

namespace {

struct Script {
  Language language;
  char32_t first;
  char32_t last;
};

// Consonant ranges of each script.
constexpr std::array<Script, 7> kScripts = {{
    {Language::hi, 0x0915, 0x0939},
    {Language::bn, 0x0995, 0x09B9},
    {Language::mr, 0x0915, 0x0939},
    {Language::ml, 0x0D15, 0x0D39},
    {Language::ta, 0x0B95, 0x0BB9},
    {Language::gu, 0x0A95, 0x0AB9},
    {Language::pa, 0x0A15, 0x0A39},
}};

std::string random_word(SplitMix64& rng, const Script& s) {
  std::string w;
  const auto len = 2 + rng.below(5);
  for (std::uint64_t i = 0; i < len; ++i) {
    append_utf8(w, static_cast<char32_t>(s.first + rng.below(s.last - s.first + 1)));
  }
  return w;
}

std::string random_text(SplitMix64& rng, const Script& s, bool noisy) {
  std::string t;
  const auto words = 6 + rng.below(15);
  for (std::uint64_t i = 0; i < words; ++i) {
    if (i > 0) t += (noisy && rng.below(10) == 0) ? "  \t" : " ";
    t += random_word(rng, s);
  }
  if (noisy) {
    if (rng.below(3) == 0) {
      t += " ";
      append_utf8(t, 0x1F600 + static_cast<char32_t>(rng.below(64)));
    }
    if (rng.below(4) == 0) t += " https://example.org/n/" + std::to_string(rng.below(100000));
  }
  return t;
}

std::string record_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "syn-%06zu", i);
  return buf;
}

}  // namespace

std::vector<NewsArticle> synthetic_articles(const SyntheticCorpusOptions& options) {
  SplitMix64 rng(options.seed);
  std::vector<NewsArticle> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    const auto& script = kScripts[i % kScripts.size()];
    NewsArticle a;
    a.id = record_id(i);
    a.language = script.language;
    a.text = random_text(rng, script, options.noisy_text);
    a.label = static_cast<int>((i / kScripts.size()) % 2);
    if (i >= options.missing_images) a.image_ref = "images/" + a.id + ".png";
    out.push_back(std::move(a));
  }
  return out;
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusOptions& options) {
  if (options.image_size < 1) throw ConfigError("image_size must be >= 1");
  std::filesystem::create_directories(dir / "images");
  DatasetManifest manifest;
  manifest.root_dir = dir;
  manifest.records = synthetic_articles(options);
  SplitMix64 rng(options.seed ^ 0x9E3779B97F4A7C15ULL);
  for (const auto& a : manifest.records) {
    if (!a.image_ref) continue;
    cv::Mat img(options.image_size, options.image_size, CV_8UC3);
    const auto base = rng.next();
    for (int y = 0; y < img.rows; ++y) {
      for (int x = 0; x < img.cols; ++x) {
        auto& px = img.at<cv::Vec3b>(y, x);
        for (int c = 0; c < 3; ++c) {
          px[c] = static_cast<std::uint8_t>(((base >> (8 * c)) & 0xFF) + rng.below(32));
        }
      }
    }
    if (!cv::imwrite((dir / *a.image_ref).string(), img)) throw Error("cannot write synthetic image", a.id);
  }
  const auto path = dir / "manifest.jsonl";
  write_manifest(manifest, path);
  return path;
}

void plant_signal(LabeledBundles& data, double strength, std::uint64_t seed, const PathwayMask& pathways) {
  if (data.empty()) return;
  for (auto p : kPathways) {
    if (!pathways.enabled(p)) continue;
    const auto dim = data.bundles.front()[p].size();
    SplitMix64 rng(seed + static_cast<std::uint64_t>(p));
    std::vector<double> u(dim);
    double norm = 0.0;
    for (auto& x : u) {
      x = rng.uniform() * 2.0 - 1.0;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto& v = data.bundles[i][p];
      if (v.size() != dim) throw ShapeError("bundle pathway length differs across records", data.ids[i]);
      const double sign = data.labels[i] == kRealLabel ? 1.0 : -1.0;
      for (std::size_t k = 0; k < dim; ++k) v[k] = static_cast<float>(v[k] + strength * sign * u[k] / norm);
    }
  }
}

}  // namespace mmfnd
