#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "mmfnd/dataset.hpp"
#include "mmfnd/fusion.hpp"
#include "mmfnd/hub.hpp"
#include "mmfnd/training.hpp"

namespace mmfnd {

struct PreparedDataset {
  DatasetManifest manifest;
  std::vector<DroppedRecord> dropped;
  DatasetStats stats;
};

/// Drops incomplete records, cleans text, fills text_en and preprocesses
/// every image. Nothing is written.
PreparedDataset prepare_records(const DatasetManifest& raw, const Translator& translator,
                                std::vector<ImageTensor>* images = nullptr);

/// prepare_records plus files under out_dir: manifest.jsonl, images/*.tensor,
/// dropped.json and stats.json.
PreparedDataset prepare_dataset(const DatasetManifest& raw, const Translator& translator,
                                const std::filesystem::path& out_dir);

/// Reads <dir>/manifest.jsonl written by prepare_dataset.
DatasetManifest load_prepared(const std::filesystem::path& dir);

/// One bundle per record, in manifest order. Images are loaded only when the
/// mask needs them.
LabeledBundles extract_features(const DatasetManifest& manifest, const EncoderHub& hub, const PathwayMask& mask);

/// Records of `manifest` whose ids are listed, in list order.
std::vector<NewsArticle> select_records(const DatasetManifest& manifest, const std::vector<std::string>& ids);

}  // namespace mmfnd
