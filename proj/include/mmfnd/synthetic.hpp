#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmfnd/dataset.hpp"
#include "mmfnd/fusion.hpp"
#include "mmfnd/training.hpp"

namespace mmfnd {

/// Seven-language corpus generator for desk-scale runs and tests.
struct SyntheticCorpusOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 7;
  int image_size = 32;
  /// The first `missing_images` records get no image_ref.
  std::size_t missing_images = 0;
  /// Sprinkle emoji, URLs and odd whitespace into the text.
  bool noisy_text = true;
};

/// Records cycle through hi, bn, mr, ml, ta, gu, pa with alternating labels.
/// image_ref is "images/<id>.png"; no files are written.
std::vector<NewsArticle> synthetic_articles(const SyntheticCorpusOptions& options);

/// Writes manifest.jsonl and images/*.png under `dir`; returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusOptions& options);

/// Adds strength * (2y - 1) * u to every pathway in `pathways`, where u is a
/// seeded unit direction per pathway. Makes the classes linearly separable.
void plant_signal(LabeledBundles& data, double strength, std::uint64_t seed,
                  const PathwayMask& pathways = PathwayMask::only(Pathway::text));

}  // namespace mmfnd
