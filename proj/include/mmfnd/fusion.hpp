#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mmfnd/dataset.hpp"
#include "mmfnd/hashing.hpp"
#include "mmfnd/hub.hpp"

namespace mmfnd {

/// Pathways in aggregation order: text, image, multimodal, caption.
enum class Pathway { text = 0, image = 1, multimodal = 2, caption = 3 };
inline constexpr std::array kPathways{Pathway::text, Pathway::image, Pathway::multimodal, Pathway::caption};
inline constexpr std::size_t kPathwayCount = kPathways.size();

std::string_view to_string(Pathway p) noexcept;

struct PathwayMask {
  bool use_caption = true;
  bool use_text = true;
  bool use_image = true;
  bool use_multimodal = true;

  static PathwayMask full() { return {}; }
  static PathwayMask only(Pathway p);
  PathwayMask without(Pathway p) const;

  bool enabled(Pathway p) const noexcept;
  bool any() const noexcept { return use_caption || use_text || use_image || use_multimodal; }
  /// Throws ConfigError when every pathway is disabled.
  void validate() const;
  /// Raw text input feeds at least one enabled pathway.
  bool needs_text() const noexcept { return use_text || use_multimodal; }
  /// Raw image input feeds at least one enabled pathway.
  bool needs_image() const noexcept { return use_image || use_multimodal || use_caption; }

  friend bool operator==(const PathwayMask&, const PathwayMask&) = default;
};

nlohmann::json to_json(const PathwayMask& m);
PathwayMask mask_from_json(const nlohmann::json& j);

struct FeatureDims {
  int text = 0;
  int image = 0;
  int multimodal = 0;
  int caption = 0;

  int of(Pathway p) const noexcept;
  /// text = indic + english, image = conv + patch.
  static FeatureDims from_backends(const BackendSet& backends);
  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

std::string describe(const FeatureDims& d);

/// One vector per pathway. Disabled pathways hold zeros of their nominal size.
struct FeatureBundle {
  std::array<std::vector<float>, kPathwayCount> pathways;
  PathwayMask mask;

  const std::vector<float>& operator[](Pathway p) const { return pathways[static_cast<std::size_t>(p)]; }
  std::vector<float>& operator[](Pathway p) { return pathways[static_cast<std::size_t>(p)]; }
  const std::vector<float>& f_text() const { return (*this)[Pathway::text]; }
  const std::vector<float>& f_img() const { return (*this)[Pathway::image]; }
  const std::vector<float>& f_multimodal() const { return (*this)[Pathway::multimodal]; }
  const std::vector<float>& f_caption() const { return (*this)[Pathway::caption]; }
  FeatureDims dims() const;
};

/// Runs only the encoders the mask needs:
///   f_text = [indic cls(text) | english cls(text_en)]
///   f_img  = [conv(img) | patch(img)]
///   f_multimodal = multimodal cls(text_en, img)
///   f_caption = caption-text cls(generated caption)
FeatureBundle build_feature_bundle(const NewsArticle& article, const ImageTensor* img, const EncoderHub& hub,
                                   const PathwayMask& mask);

/// Zeroes pathways disabled by `mask` and narrows the bundle's mask.
FeatureBundle mask_bundle(FeatureBundle bundle, const PathwayMask& mask);

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ClassifierConfig {
  FeatureDims dims;
  int projection_dim = 256;
  int hidden_dim = 256;
  int hidden_layers = 1;
  double dropout = 0.2;
  double threshold = 0.5;
  PathwayMask mask;

  void validate() const;
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

nlohmann::json to_json(const ClassifierConfig& c);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  double* data = nullptr;

  std::size_t size() const noexcept { return std::size_t(rows) * cols; }
  std::span<double> values() const { return {data, size()}; }
};

/// Per-pathway projections, hidden layers and output unit.
/// Matrices are row-major, shaped (out, in).
struct ClassifierParams {
  ClassifierConfig config;
  std::array<Matrix, kPathwayCount> proj_w;
  std::array<Vector, kPathwayCount> proj_b;
  std::vector<Matrix> hidden_w;
  std::vector<Vector> hidden_b;
  Vector out_w;
  Vector out_b;  // length 1

  static ClassifierParams zeros(const ClassifierConfig& config);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a SplitMix64 stream,
  /// rounded to float32.
  static ClassifierParams initialize(const ClassifierConfig& config, std::uint64_t seed);

  /// Blocks in serialization order.
  std::vector<ParamBlock> blocks();
  std::size_t parameter_count() const;
  void round_to_float32();
  bool all_finite() const;
};

struct Prediction {
  double p_real = 0.5;
  int label = kRealLabel;
  double logit = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

inline constexpr double kProbabilityEpsilon = 1e-7;

double sigmoid(double z) noexcept;
/// -[y log p + (1-y) log(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(int y, double p_real);
double bce_loss_mean(std::span<const int> y, std::span<const double> p_real);

/// Affine + ReLU (+ dropout when training) per enabled pathway, concatenated
/// as [text | image | multimodal | caption]. Disabled pathways yield zeros.
Vector project_and_aggregate(const FeatureBundle& bundle, const ClassifierParams& params, bool training,
                             SplitMix64* rng = nullptr);

/// Hidden ReLU layers (+ dropout when training), logit, sigmoid, threshold.
Prediction classify_forward(const Vector& aggregated, const ClassifierParams& params, bool training,
                            SplitMix64* rng = nullptr);

/// Inference-mode prediction for one bundle.
Prediction predict(const FeatureBundle& bundle, const ClassifierParams& params);

/// Pathway inputs for a batch, one row per sample.
struct BatchInputs {
  std::array<Matrix, kPathwayCount> x;
  std::size_t size() const noexcept { return static_cast<std::size_t>(x[0].rows()); }
};

BatchInputs make_batch(std::span<const FeatureBundle* const> bundles, const FeatureDims& dims);

/// Batched forward pass. When `grad` is non-null also back-propagates the
/// mean BCE over the batch into it (grad must have the params' shapes).
/// Returns the mean BCE when labels are supplied, else 0.
struct BatchResult {
  Vector logits;
  Vector p_real;
  double mean_loss = 0.0;
};

BatchResult forward_backward(const BatchInputs& batch, const ClassifierParams& params, bool training,
                             SplitMix64* rng, std::span<const int> labels = {}, ClassifierParams* grad = nullptr);

std::vector<Prediction> predict_batch(std::span<const FeatureBundle> bundles, const ClassifierParams& params);

/// A classifier bound to an encoder hub under one pathway mask.
class FusionModel {
 public:
  FusionModel(const EncoderHub& hub, ClassifierParams params);

  const PathwayMask& mask() const noexcept { return params_.config.mask; }
  const ClassifierParams& params() const noexcept { return params_; }
  const EncoderHub& hub() const noexcept { return *hub_; }

  FeatureBundle features(const NewsArticle& article, const ImageTensor* img) const;
  Prediction predict(const NewsArticle& article, const ImageTensor* img) const;

 private:
  const EncoderHub* hub_;
  ClassifierParams params_;
};

/// View of `model` whose disabled pathways contribute exact zeros end to end.
FusionModel apply_pathway_mask(const FusionModel& model, const PathwayMask& mask);

}  // namespace mmfnd
