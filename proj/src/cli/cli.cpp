#include "mmfnd/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmfnd/ablation.hpp"
#include "mmfnd/config.hpp"
#include "mmfnd/error.hpp"
#include "mmfnd/pipeline.hpp"
#include "mmfnd/report.hpp"

namespace mmfnd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string cache_dir;
  bool overwrite = false;
};

struct Options {
  Common common;
  std::string manifest, out, translator, image_root;
  std::string data, ckpt, report_dir, formats, split = "test", timestamp;
  std::string suite, in, emit = "plots";
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  cfg.validate();
  return cfg;
}

fs::path cache_root(const Common& c, const RunConfig& cfg, const fs::path& data_dir) {
  if (!c.cache_dir.empty()) return c.cache_dir;
  if (const char* env = std::getenv("MMFND_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  if (cfg.paths.cache_dir) return *cfg.paths.cache_dir;
  return data_dir / "cache";
}

void claim_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw Error("output path exists and is not a directory: " + dir.string());
    if (!fs::is_empty(dir) && !overwrite) {
      throw Error("output directory exists: " + dir.string() + " (pass --overwrite to replace its contents)");
    }
  }
  fs::create_directories(dir);
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json backends_json(const BackendSet& b) {
  json arr = json::array();
  for (const auto& d : b.descriptors()) {
    arr.push_back({{"role", to_string(d.role)},
                   {"backend_id", d.backend_id},
                   {"version", d.version},
                   {"output_dim", d.output_dim}});
  }
  return arr;
}

EncoderHub make_hub(const RunConfig& cfg, const Common& common, const fs::path& data_dir) {
  auto cache = std::make_shared<EmbeddingCache>(cache_root(common, cfg, data_dir));
  return EncoderHub(make_backends(cfg), cfg.max_tokens, std::move(cache));
}

int cmd_prepare(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.common);
  fs::path manifest_path = o.manifest;
  if (manifest_path.empty() && cfg.paths.manifest) manifest_path = *cfg.paths.manifest;
  if (manifest_path.empty()) throw ConfigError("no manifest given (--manifest or paths.manifest)");
  if (!fs::exists(manifest_path)) throw ManifestError("manifest not found: " + manifest_path.string());

  std::optional<fs::path> root;
  if (!o.image_root.empty()) root = o.image_root;
  else if (cfg.paths.image_root) root = cfg.paths.image_root;
  const auto raw = load_manifest(manifest_path, root);
  const auto translator = make_translator(o.translator.empty() ? cfg.translator : o.translator);

  claim_output_dir(o.out, o.common.overwrite);
  const auto prepared = prepare_dataset(raw, *translator, o.out);
  out << "prepared " << prepared.manifest.records.size() << " records, dropped " << prepared.dropped.size()
      << " -> " << o.out << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.common);
  const fs::path data = o.data;
  const auto manifest = load_prepared(data);
  const auto split = split_dataset(manifest, cfg.train.split_ratio, cfg.train.seed);
  auto hub = make_hub(cfg, o.common, data);

  const auto train_manifest = DatasetManifest{select_records(manifest, split.train_ids), manifest.root_dir};
  const auto features = extract_features(train_manifest, hub, cfg.train.mask);

  claim_output_dir(o.out, o.common.overwrite);
  const auto result = train(features, cfg.train, [&out](const EpochLog& e) {
    out << "epoch " << e.epoch << " loss " << e.loss << " accuracy " << e.accuracy << "\n";
  });
  auto ck = result.checkpoint;
  ck.metadata = {{"backends", backends_json(hub.backends())},
                 {"max_tokens", cfg.max_tokens},
                 {"train_records", split.train_ids.size()},
                 {"test_records", split.test_ids.size()}};
  save_checkpoint(ck, fs::path(o.out) / "checkpoint.bin");
  result.log.write_csv(fs::path(o.out) / "train_log.csv");
  write_json_file(fs::path(o.out) / "split.json", {{"seed", split.seed},
                                                   {"ratio", split.ratio},
                                                   {"train_ids", split.train_ids},
                                                   {"test_ids", split.test_ids}});
  out << "wrote " << (fs::path(o.out) / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.common);
  const fs::path data = o.data;
  const auto ck = load_checkpoint(o.ckpt);
  const auto manifest = load_prepared(data);

  auto hub = make_hub(cfg, o.common, data);
  const auto dims = FeatureDims::from_backends(hub.backends());
  const auto& expected = ck.params.config.dims;
  if (!(dims == expected)) {
    throw ShapeError("checkpoint dims do not match the backends: checkpoint " + describe(expected) + ", backends " +
                     describe(dims));
  }

  std::vector<std::string> ids;
  if (o.split == "all") {
    for (const auto& a : manifest.records) ids.push_back(a.id);
  } else {
    ids = split_dataset(manifest, ck.config.split_ratio, ck.config.seed).test_ids;
  }
  const auto records = select_records(manifest, ids);
  const auto features = extract_features(DatasetManifest{records, manifest.root_dir}, hub, ck.params.config.mask);
  const auto preds = evaluate_on_split(ck, features);

  std::vector<IdPrediction> joined;
  for (std::size_t i = 0; i < preds.size(); ++i) joined.push_back({features.ids[i], preds[i].label});
  json echo = to_json(ck.config);
  echo["checkpoint"] = fs::path(o.ckpt).filename().string();
  echo["split"] = o.split;
  const auto report = make_report("mmcfnd", joined, records, echo, o.timestamp.empty() ? utc_timestamp() : o.timestamp);

  const auto formats = o.formats.empty() ? cfg.report_formats : parse_formats(o.formats);
  claim_output_dir(o.report_dir, o.common.overwrite);
  for (const auto& f : emit_report(report, o.report_dir, formats)) out << "wrote " << f.string() << "\n";
  out << "accuracy " << report.accuracy() << " on " << report.overall.n << " records\n";
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.common);
  const auto spec = make_ablation_spec(parse_ablation_suite(o.suite));
  const fs::path data = o.data;
  const auto manifest = load_prepared(data);
  const auto split = split_dataset(manifest, cfg.train.split_ratio, cfg.train.seed);
  auto hub = make_hub(cfg, o.common, data);

  const auto train_records = select_records(manifest, split.train_ids);
  const auto test_records = select_records(manifest, split.test_ids);
  const auto full = PathwayMask::full();
  const auto train_data = extract_features(DatasetManifest{train_records, manifest.root_dir}, hub, full);
  const auto test_data = extract_features(DatasetManifest{test_records, manifest.root_dir}, hub, full);

  claim_output_dir(o.out, o.common.overwrite);
  const auto results = run_ablation_suite(spec, train_data, test_data, test_records, cfg.train,
                                          o.timestamp.empty() ? utc_timestamp() : o.timestamp);
  for (const auto& r : results) {
    out << r.label << ": accuracy " << r.report.accuracy() << " (" << r.invariance_checks
        << " invariance checks)\n";
  }
  const auto formats = o.formats.empty() ? cfg.report_formats : parse_formats(o.formats);
  for (const auto& f : emit_report(to_report_table(spec.suite, results), o.out, formats)) {
    out << "wrote " << f.string() << "\n";
  }
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const fs::path in = o.in;
  if (!fs::exists(in)) throw Error("report not found: " + in.string());
  const auto table = load_report_table(in);
  const auto formats = parse_formats(o.emit);
  const fs::path dir = o.out.empty() ? (in.has_parent_path() ? in.parent_path() : fs::path(".")) : fs::path(o.out);
  const auto stem = in.stem().string() + "_charts";
  if (!o.common.overwrite) {
    for (const auto& entry : {stem + "_fake.png", stem + "_real.png", stem + ".csv", stem + ".json"}) {
      if (fs::exists(dir / entry)) {
        throw Error("output exists: " + (dir / entry).string() + " (pass --overwrite to replace it)");
      }
    }
  }
  for (const auto& f : emit_report(table, dir, formats, stem)) out << "wrote " << f.string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
  cmd->add_option("--config", c.config, "YAML run configuration")->check(CLI::ExistingFile);
  if (with_seed) cmd->add_option("--seed", c.seed, "Overrides train.seed");
  cmd->add_option("--cache-dir", c.cache_dir, "Embedding cache root (else MMFND_CACHE_DIR, config, <data>/cache)");
  cmd->add_flag("--overwrite", c.overwrite, "Replace the contents of an existing output directory");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal multilingual fake-news detection kit", "mmfnd"};
  app.require_subcommand(1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "Clean a manifest, preprocess images, write a prepared dataset");
  prepare->add_option("--manifest", o.manifest, "Input JSONL manifest");
  prepare->add_option("--out", o.out, "Prepared dataset directory")->required();
  prepare->add_option("--translator", o.translator, "identity | lookup:<file.json>");
  prepare->add_option("--image-root", o.image_root, "Directory image_ref paths are relative to");
  add_common(prepare, o.common, false);

  auto* train_cmd = app.add_subcommand("train", "Split, extract features and train a classifier");
  train_cmd->add_option("--data", o.data, "Prepared dataset directory")->required();
  train_cmd->add_option("--out", o.out, "Run directory for checkpoint and log")->required();
  add_common(train_cmd, o.common, true);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the held-out split");
  evaluate->add_option("--ckpt", o.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", o.data, "Prepared dataset directory")->required();
  evaluate->add_option("--report", o.report_dir, "Report output directory")->required();
  evaluate->add_option("--formats", o.formats, "Comma-separated subset of json,csv,plots");
  evaluate->add_option("--split", o.split, "test | all")->check(CLI::IsMember({"test", "all"}));
  evaluate->add_option("--timestamp", o.timestamp, "Fixed report timestamp");
  add_common(evaluate, o.common, false);

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate every row of an ablation suite");
  ablate->add_option("--suite", o.suite, "modality | multimodal | caption")
      ->required()
      ->check(CLI::IsMember({"modality", "multimodal", "caption", "multimodal_pathway", "caption_pathway"}));
  ablate->add_option("--data", o.data, "Prepared dataset directory")->required();
  ablate->add_option("--out", o.out, "Suite output directory")->required();
  ablate->add_option("--formats", o.formats, "Comma-separated subset of json,csv,plots");
  ablate->add_option("--timestamp", o.timestamp, "Fixed report timestamp");
  add_common(ablate, o.common, true);

  auto* report = app.add_subcommand("report", "Render charts from a report or suite JSON");
  report->add_option("--in", o.in, "report.json or suite.json")->required();
  report->add_option("--emit", o.emit, "Comma-separated subset of json,csv,plots");
  report->add_option("--out", o.out, "Output directory (default: next to --in)");
  report->add_flag("--overwrite", o.common.overwrite, "Replace existing chart files");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mmfnd
