#include "mmfnd/training.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mmfnd/image.hpp"

namespace mmfnd {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (optimizer != "adam") throw ConfigError("optimizer must be 'adam', got '" + optimizer + "'");
  if (epochs < 0) throw ConfigError("epochs must be >= 0, got " + std::to_string(epochs));
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (projection_dim < 1) throw ConfigError("projection_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (hidden_layers < 0) throw ConfigError("hidden_layers must be >= 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  mask.validate();
}

ClassifierConfig TrainConfig::classifier_config(const FeatureDims& dims) const {
  ClassifierConfig c;
  c.dims = dims;
  c.projection_dim = projection_dim;
  c.hidden_dim = hidden_dim;
  c.hidden_layers = hidden_layers;
  c.dropout = dropout;
  c.threshold = threshold;
  c.mask = mask;
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", c.optimizer},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"dropout", c.dropout},
          {"projection_dim", c.projection_dim},
          {"hidden_dim", c.hidden_dim},
          {"hidden_layers", c.hidden_layers},
          {"threshold", c.threshold},
          {"mask", to_json(c.mask)},
          {"deterministic_mode", c.deterministic_mode},
          {"split_ratio", c.split_ratio}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("training config must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "optimizer") c.optimizer = value.get<std::string>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "projection_dim") c.projection_dim = value.get<int>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<int>();
      else if (key == "hidden_layers") c.hidden_layers = value.get<int>();
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "mask") c.mask = mask_from_json(value);
      else if (key == "deterministic_mode") c.deterministic_mode = value.get<bool>();
      else if (key == "split_ratio") c.split_ratio = value.get<double>();
      else throw ConfigError("unknown training config field '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("training config field '" + key + "' has the wrong type: " + e.what());
    }
  }
  return c;
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
               long t, const AdamHyper& h) {
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grads[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(const ClassifierParams& shape, AdamHyper hyper) : hyper_(hyper) {
  auto copy = shape;
  for (const auto& b : copy.blocks()) {
    m_.emplace_back(b.size(), 0.0);
    v_.emplace_back(b.size(), 0.0);
  }
}

void AdamOptimizer::step(ClassifierParams& params, ClassifierParams& grads) {
  ++t_;
  auto p_blocks = params.blocks();
  auto g_blocks = grads.blocks();
  if (p_blocks.size() != m_.size() || g_blocks.size() != m_.size()) throw ShapeError("optimizer shape mismatch");
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    adam_step(p_blocks[b].values(), g_blocks[b].values(), m_[b], v_[b], t_, hyper_);
  }
  params.round_to_float32();
}

void LabeledBundles::push_back(std::string id, FeatureBundle bundle, int label) {
  ids.push_back(std::move(id));
  bundles.push_back(std::move(bundle));
  labels.push_back(label);
}

LabeledBundles LabeledBundles::subset(std::span<const std::string> wanted) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  LabeledBundles out;
  for (const auto& id : wanted) {
    auto it = index.find(id);
    if (it == index.end()) throw Error("no feature bundle for id '" + id + "'");
    out.push_back(id, bundles[it->second], labels[it->second]);
  }
  return out;
}

std::string TrainLog::to_csv() const {
  std::ostringstream ss;
  ss << "epoch,loss,accuracy,seconds\n";
  ss << std::setprecision(10);
  for (const auto& e : epochs) ss << e.epoch << ',' << e.loss << ',' << e.accuracy << ',' << e.seconds << '\n';
  return ss.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write train log: " + path.string());
  out << to_csv();
}

namespace {

constexpr std::uint64_t kShuffleSalt = 0x5DEECE66DULL;
constexpr std::uint64_t kDropoutSalt = 0xD1B54A32D192ED03ULL;

FeatureDims check_training_data(const LabeledBundles& data, const TrainConfig& config) {
  if (data.empty()) throw Error("training set is empty");
  if (data.labels.size() != data.bundles.size()) throw Error("label count does not match bundle count");
  const auto dims = data.bundles.front().dims();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& b = data.bundles[i];
    if (!(b.dims() == dims)) {
      throw ShapeError("bundle '" + data.ids[i] + "' has dims " + describe(b.dims()) + ", expected " +
                       describe(dims));
    }
    for (Pathway p : kPathways) {
      if (config.mask.enabled(p) && !b.mask.enabled(p)) {
        throw ShapeError("bundle '" + data.ids[i] + "' lacks pathway " + std::string(to_string(p)) +
                         " required by the training mask");
      }
    }
    if (data.labels[i] != 0 && data.labels[i] != 1) throw Error("label must be 0 or 1", data.ids[i]);
  }
  return dims;
}

}  // namespace

TrainResult train(const LabeledBundles& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  const auto dims = check_training_data(data, config);
  const auto cc = config.classifier_config(dims);

  TrainResult result;
  result.checkpoint.config = config;
  result.checkpoint.params = ClassifierParams::initialize(cc, config.seed);
  auto& params = result.checkpoint.params;
  auto grads = ClassifierParams::zeros(cc);
  AdamOptimizer adam(params, AdamHyper{config.learning_rate});
  SplitMix64 shuffle_rng(config.seed ^ kShuffleSalt);
  SplitMix64 dropout_rng(config.seed ^ kDropoutSalt);

  std::vector<std::size_t> order(data.size());
  std::vector<const FeatureBundle*> batch_ptrs;
  std::vector<int> batch_labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.below(i + 1))]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      batch_ptrs.clear();
      batch_labels.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch_ptrs.push_back(&data.bundles[order[i]]);
        batch_labels.push_back(data.labels[order[i]]);
      }
      const auto batch = make_batch(batch_ptrs, dims);
      BatchResult out;
      try {
        out = forward_backward(batch, params, true, &dropout_rng, batch_labels, &grads);
      } catch (const NumericalError& e) {
        throw TrainingDiverged(std::string("training diverged: ") + e.what(), result.checkpoint, result.log);
      }
      if (!std::isfinite(out.mean_loss) || !grads.all_finite()) {
        throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch),
                               result.checkpoint, result.log);
      }
      adam.step(params, grads);
      loss_sum += out.mean_loss * static_cast<double>(end - begin);
      for (std::size_t i = 0; i < batch_labels.size(); ++i) {
        const int predicted = out.p_real[static_cast<Eigen::Index>(i)] >= config.threshold ? kRealLabel : kFakeLabel;
        if (predicted == batch_labels[i]) ++correct;
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(data.size());
    entry.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(entry);
    result.checkpoint.epoch = epoch;
    result.checkpoint.metrics = {{"train_loss", entry.loss}, {"train_accuracy", entry.accuracy}};
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

std::vector<Prediction> evaluate_on_split(const Checkpoint& checkpoint, const LabeledBundles& data) {
  if (data.empty()) return {};
  const auto& expected = checkpoint.params.config.dims;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data.bundles[i].dims() == expected)) {
      throw ShapeError("checkpoint expects feature dims " + describe(expected) + ", bundle '" + data.ids[i] +
                       "' has " + describe(data.bundles[i].dims()));
    }
  }
  return predict_batch(data.bundles, checkpoint.params);
}

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'M', 'F', 'N', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_le(std::vector<std::byte>& out, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::byte>(v >> (8 * k)));
}

std::uint64_t get_le(std::span<const std::byte> in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= std::uint64_t(std::to_integer<std::uint8_t>(in[offset + k])) << (8 * k);
  return v;
}

std::string shape_str(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

std::vector<std::byte> serialize_checkpoint(const Checkpoint& checkpoint) {
  auto params = checkpoint.params;
  auto blocks = params.blocks();
  json tensors = json::array();
  for (const auto& b : blocks) tensors.push_back({{"name", b.name}, {"shape", {b.rows, b.cols}}});
  const json header = {{"format", "mmfnd-checkpoint"},
                       {"classifier", to_json(params.config)},
                       {"train_config", to_json(checkpoint.config)},
                       {"epoch", checkpoint.epoch},
                       {"metrics", checkpoint.metrics},
                       {"metadata", checkpoint.metadata},
                       {"tensors", tensors}};
  const std::string text = header.dump();

  std::vector<std::byte> out;
  out.reserve(24 + text.size() + params.parameter_count() * 4);
  for (char c : kCheckpointMagic) out.push_back(static_cast<std::byte>(c));
  put_le(out, kCheckpointVersion, 4);
  put_le(out, 0, 4);
  put_le(out, text.size(), 8);
  for (char c : text) out.push_back(static_cast<std::byte>(c));
  for (const auto& b : blocks) {
    for (double v : b.values()) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::byte> bytes, const ClassifierConfig* expected) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw CheckpointError("corrupt checkpoint: bad magic or truncated header");
  }
  if (get_le(bytes, 8, 4) != kCheckpointVersion) throw CheckpointError("unsupported checkpoint format version");
  const auto header_len = get_le(bytes, 16, 8);
  if (header_len > bytes.size() - 24) throw CheckpointError("corrupt checkpoint: truncated header");

  json header;
  try {
    header = json::parse(std::string(reinterpret_cast<const char*>(bytes.data() + 24), header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: unreadable header: ") + e.what());
  }

  Checkpoint ck;
  try {
    const auto cc = classifier_config_from_json(header.at("classifier"));
    ck.config = train_config_from_json(header.at("train_config"));
    ck.epoch = header.at("epoch").get<int>();
    ck.metrics = header.at("metrics");
    ck.metadata = header.at("metadata");
    ck.params = ClassifierParams::zeros(cc);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }

  auto blocks = ck.params.blocks();
  const auto& tensors = header.at("tensors");
  if (!tensors.is_array() || tensors.size() != blocks.size()) {
    throw CheckpointError("corrupt checkpoint: tensor manifest does not match classifier config");
  }

  if (expected != nullptr) {
    auto reference = ClassifierParams::zeros(*expected);
    auto ref_blocks = reference.blocks();
    if (ref_blocks.size() != blocks.size()) {
      throw CheckpointError("checkpoint shape mismatch: expected " + std::to_string(ref_blocks.size()) +
                            " tensors, found " + std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (ref_blocks[i].rows != blocks[i].rows || ref_blocks[i].cols != blocks[i].cols) {
        throw CheckpointError("checkpoint shape mismatch for " + blocks[i].name + ": expected " +
                              shape_str(ref_blocks[i].rows, ref_blocks[i].cols) + ", found " +
                              shape_str(blocks[i].rows, blocks[i].cols));
      }
    }
  }

  std::size_t offset = 24 + header_len;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& t = tensors[i];
    const auto name = t.value("name", std::string{});
    const auto shape = t.value("shape", std::vector<int>{});
    if (name != blocks[i].name || shape.size() != 2 || shape[0] != blocks[i].rows || shape[1] != blocks[i].cols) {
      throw CheckpointError("corrupt checkpoint: tensor " + std::to_string(i) + " is " + name +
                            ", expected " + blocks[i].name + " " + shape_str(blocks[i].rows, blocks[i].cols));
    }
    const auto count = blocks[i].size();
    if (bytes.size() - offset < count * 4) throw CheckpointError("corrupt checkpoint: truncated tensor data");
    for (std::size_t k = 0; k < count; ++k) {
      blocks[i].data[k] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, offset + 4 * k, 4)));
    }
    offset += count * 4;
  }
  if (offset != bytes.size()) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ClassifierConfig* expected) {
  std::vector<std::uint8_t> raw;
  try {
    raw = read_file_bytes(path);
  } catch (const Error&) {
    throw CheckpointError("checkpoint not found or unreadable: " + path.string());
  }
  return deserialize_checkpoint(std::as_bytes(std::span(raw)), expected);
}

}  // namespace mmfnd
