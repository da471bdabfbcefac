#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmfnd/error.hpp"
#include "mmfnd/fusion.hpp"

namespace mmfnd {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  int epochs = 10;
  std::uint64_t seed = 42;
  double dropout = 0.2;
  int projection_dim = 256;
  int hidden_dim = 256;
  int hidden_layers = 1;
  double threshold = 0.5;
  PathwayMask mask;
  bool deterministic_mode = true;
  double split_ratio = 0.8;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  ClassifierConfig classifier_config(const FeatureDims& dims) const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update at step `t` (1-based), in place.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               long t, const AdamHyper& hyper);

class AdamOptimizer {
 public:
  AdamOptimizer(const ClassifierParams& shape, AdamHyper hyper);
  /// Applies one update and rounds parameters to float32 storage precision.
  void step(ClassifierParams& params, ClassifierParams& grads);
  long steps() const noexcept { return t_; }

 private:
  AdamHyper hyper_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

struct LabeledBundles {
  std::vector<std::string> ids;
  std::vector<FeatureBundle> bundles;
  std::vector<int> labels;

  std::size_t size() const noexcept { return bundles.size(); }
  bool empty() const noexcept { return bundles.empty(); }
  void push_back(std::string id, FeatureBundle bundle, int label);
  /// Records whose id is in `ids`, in the order of `ids`.
  LabeledBundles subset(std::span<const std::string> ids) const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  /// "epoch,loss,accuracy,seconds" header plus one row per epoch.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct Checkpoint {
  ClassifierParams params;
  TrainConfig config;
  int epoch = 0;
  nlohmann::json metrics = nlohmann::json::object();
  /// Free-form echo of the run (backends, data paths); stored verbatim.
  nlohmann::json metadata = nlohmann::json::object();
};

/// Thrown when a batch produces a non-finite loss or gradient.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, Checkpoint last_good, TrainLog log)
      : NumericalError(what), last_good_(std::move(last_good)), log_(std::move(log)) {}
  const Checkpoint& last_good() const noexcept { return last_good_; }
  const TrainLog& log() const noexcept { return log_; }

 private:
  Checkpoint last_good_;
  TrainLog log_;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainLog log;
};

/// Mini-batch Adam on mean BCE. Batches are drawn from a per-epoch seeded
/// shuffle (final partial batch kept). Initialization, shuffling and dropout
/// all derive from config.seed, so a fixed seed gives bit-identical results.
TrainResult train(const LabeledBundles& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Inference-mode predictions, in input order.
std::vector<Prediction> evaluate_on_split(const Checkpoint& checkpoint, const LabeledBundles& data);

/// Binary layout: "MMFNDCKP", u32 format version, u32 reserved, u64 header
/// length, JSON header (config echo + tensor manifest), then every tensor as
/// little-endian float32 in manifest order, row-major.
std::vector<std::byte> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::byte> bytes, const ClassifierConfig* expected = nullptr);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// With `expected`, tensor shapes must match it exactly.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ClassifierConfig* expected = nullptr);

}  // namespace mmfnd
