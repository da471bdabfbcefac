#include "mmfnd/pipeline.hpp"

#include <fstream>

#include "mmfnd/error.hpp"
#include "mmfnd/hashing.hpp"
#include "mmfnd/image.hpp"
#include "mmfnd/text.hpp"

namespace mmfnd {

using nlohmann::json;

namespace {

std::string tensor_name(const std::string& id) {
  const auto bytes = std::as_bytes(std::span(id.data(), id.size()));
  return "images/" + to_hex(sha256(bytes)).substr(0, 24) + ".tensor";
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

PreparedDataset prepare_records(const DatasetManifest& raw, const Translator& translator,
                                std::vector<ImageTensor>* images) {
  auto excluded = exclude_incomplete(raw);
  PreparedDataset out;
  out.dropped = std::move(excluded.dropped);
  out.manifest.root_dir = raw.root_dir;
  out.manifest.schema_version = raw.schema_version;
  for (const auto& record : excluded.kept.records) {
    auto a = translate_article(record, translator);
    a.text = clean_text(a.text);
    if (images != nullptr) {
      images->push_back(preprocess_image(read_file_bytes(raw.resolve_image(record)), record.id));
    }
    out.manifest.records.push_back(std::move(a));
  }
  out.stats = compute_stats(out.manifest);
  return out;
}

PreparedDataset prepare_dataset(const DatasetManifest& raw, const Translator& translator,
                                const std::filesystem::path& out_dir) {
  std::vector<ImageTensor> images;
  auto prepared = prepare_records(raw, translator, &images);
  std::filesystem::create_directories(out_dir / "images");
  for (std::size_t i = 0; i < prepared.manifest.records.size(); ++i) {
    auto& a = prepared.manifest.records[i];
    const auto name = tensor_name(a.id);
    save_tensor(images[i], out_dir / name);
    a.image_ref = name;
  }
  prepared.manifest.root_dir = out_dir;
  write_manifest(prepared.manifest, out_dir / "manifest.jsonl");

  json dropped = json::array();
  for (const auto& d : prepared.dropped) dropped.push_back({{"id", d.id}, {"reason", d.reason}});
  write_json(out_dir / "dropped.json", {{"count", prepared.dropped.size()}, {"records", dropped}});
  write_json(out_dir / "stats.json", to_json(prepared.stats));
  return prepared;
}

DatasetManifest load_prepared(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.jsonl";
  if (!std::filesystem::exists(path)) throw ManifestError("prepared dataset not found: " + path.string());
  return load_manifest(path, dir);
}

LabeledBundles extract_features(const DatasetManifest& manifest, const EncoderHub& hub, const PathwayMask& mask) {
  LabeledBundles out;
  for (const auto& a : manifest.records) {
    std::optional<ImageTensor> img;
    if (mask.needs_image()) {
      if (!a.image_ref) throw Error("record has no image", a.id);
      img = load_image(manifest.resolve_image(a), a.id);
    }
    out.push_back(a.id, build_feature_bundle(a, img ? &*img : nullptr, hub, mask), a.label);
  }
  return out;
}

std::vector<NewsArticle> select_records(const DatasetManifest& manifest, const std::vector<std::string>& ids) {
  std::vector<NewsArticle> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto* a = manifest.find(id);
    if (a == nullptr) throw ManifestError("unknown record id", id);
    out.push_back(*a);
  }
  return out;
}

}  // namespace mmfnd
