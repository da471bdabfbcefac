#include "mmfnd/fusion.hpp"

#include <cmath>

#include "mmfnd/error.hpp"

namespace mmfnd {

using nlohmann::json;

std::string_view to_string(Pathway p) noexcept {
  switch (p) {
    case Pathway::text: return "text";
    case Pathway::image: return "image";
    case Pathway::multimodal: return "multimodal";
    case Pathway::caption: return "caption";
  }
  return "unknown";
}

PathwayMask PathwayMask::only(Pathway p) {
  PathwayMask m{false, false, false, false};
  switch (p) {
    case Pathway::text: m.use_text = true; break;
    case Pathway::image: m.use_image = true; break;
    case Pathway::multimodal: m.use_multimodal = true; break;
    case Pathway::caption: m.use_caption = true; break;
  }
  return m;
}

PathwayMask PathwayMask::without(Pathway p) const {
  PathwayMask m = *this;
  switch (p) {
    case Pathway::text: m.use_text = false; break;
    case Pathway::image: m.use_image = false; break;
    case Pathway::multimodal: m.use_multimodal = false; break;
    case Pathway::caption: m.use_caption = false; break;
  }
  return m;
}

bool PathwayMask::enabled(Pathway p) const noexcept {
  switch (p) {
    case Pathway::text: return use_text;
    case Pathway::image: return use_image;
    case Pathway::multimodal: return use_multimodal;
    case Pathway::caption: return use_caption;
  }
  return false;
}

void PathwayMask::validate() const {
  if (!any()) throw ConfigError("pathway mask disables every pathway");
}

json to_json(const PathwayMask& m) {
  return {{"caption", m.use_caption}, {"text", m.use_text}, {"image", m.use_image}, {"multimodal", m.use_multimodal}};
}

PathwayMask mask_from_json(const json& j) {
  PathwayMask m;
  m.use_caption = j.value("caption", true);
  m.use_text = j.value("text", true);
  m.use_image = j.value("image", true);
  m.use_multimodal = j.value("multimodal", true);
  return m;
}

int FeatureDims::of(Pathway p) const noexcept {
  switch (p) {
    case Pathway::text: return text;
    case Pathway::image: return image;
    case Pathway::multimodal: return multimodal;
    case Pathway::caption: return caption;
  }
  return 0;
}

FeatureDims FeatureDims::from_backends(const BackendSet& b) {
  b.validate();
  return {b.text_indic->descriptor().output_dim + b.text_english->descriptor().output_dim,
          b.image_conv->descriptor().output_dim + b.image_patch->descriptor().output_dim,
          b.multimodal->descriptor().output_dim, b.caption_text->descriptor().output_dim};
}

std::string describe(const FeatureDims& d) {
  return "(text " + std::to_string(d.text) + ", image " + std::to_string(d.image) + ", multimodal " +
         std::to_string(d.multimodal) + ", caption " + std::to_string(d.caption) + ")";
}

FeatureDims FeatureBundle::dims() const {
  return {static_cast<int>(f_text().size()), static_cast<int>(f_img().size()),
          static_cast<int>(f_multimodal().size()), static_cast<int>(f_caption().size())};
}

namespace {

void append(std::vector<float>& out, const Embedding& e) { out.insert(out.end(), e.values.begin(), e.values.end()); }

}  // namespace

FeatureBundle build_feature_bundle(const NewsArticle& article, const ImageTensor* img, const EncoderHub& hub,
                                   const PathwayMask& mask) {
  mask.validate();
  if (mask.needs_text() && !article.text_en) {
    throw Error("text_en is required by the text/multimodal pathways", article.id);
  }
  if (mask.needs_image() && img == nullptr) {
    throw Error("an image is required by the image/multimodal/caption pathways", article.id);
  }

  const auto dims = FeatureDims::from_backends(hub.backends());
  FeatureBundle b;
  b.mask = mask;
  for (Pathway p : kPathways) {
    if (!mask.enabled(p)) b[p].assign(static_cast<std::size_t>(dims.of(p)), 0.0f);
  }
  try {
    if (mask.use_text) {
      auto& v = b[Pathway::text];
      v.reserve(static_cast<std::size_t>(dims.text));
      append(v, hub.text_cls(EncoderRole::text_indic, article.text));
      append(v, hub.text_cls(EncoderRole::text_english, *article.text_en));
    }
    if (mask.use_image) {
      auto& v = b[Pathway::image];
      v.reserve(static_cast<std::size_t>(dims.image));
      append(v, hub.image(EncoderRole::image_conv, *img));
      append(v, hub.image(EncoderRole::image_patch, *img));
    }
    if (mask.use_multimodal) b[Pathway::multimodal] = hub.multimodal(*article.text_en, *img).values;
    if (mask.use_caption) b[Pathway::caption] = hub.caption(*img, article.id).values;
  } catch (const Error& e) {
    if (!e.article_id().empty()) throw;
    throw Error(e.what(), article.id);
  }
  return b;
}

FeatureBundle mask_bundle(FeatureBundle bundle, const PathwayMask& mask) {
  mask.validate();
  for (Pathway p : kPathways) {
    if (!mask.enabled(p)) std::fill(bundle[p].begin(), bundle[p].end(), 0.0f);
  }
  bundle.mask.use_caption = bundle.mask.use_caption && mask.use_caption;
  bundle.mask.use_text = bundle.mask.use_text && mask.use_text;
  bundle.mask.use_image = bundle.mask.use_image && mask.use_image;
  bundle.mask.use_multimodal = bundle.mask.use_multimodal && mask.use_multimodal;
  return bundle;
}

void ClassifierConfig::validate() const {
  mask.validate();
  for (Pathway p : kPathways) {
    if (dims.of(p) <= 0) {
      throw ConfigError("feature dimension of pathway " + std::string(to_string(p)) + " must be positive");
    }
  }
  if (projection_dim <= 0) throw ConfigError("projection_dim must be positive");
  if (hidden_dim <= 0) throw ConfigError("hidden_dim must be positive");
  if (hidden_layers < 0) throw ConfigError("hidden_layers must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
}

json to_json(const ClassifierConfig& c) {
  return {{"dims",
           {{"text", c.dims.text}, {"image", c.dims.image}, {"multimodal", c.dims.multimodal},
            {"caption", c.dims.caption}}},
          {"projection_dim", c.projection_dim},
          {"hidden_dim", c.hidden_dim},
          {"hidden_layers", c.hidden_layers},
          {"dropout", c.dropout},
          {"threshold", c.threshold},
          {"mask", to_json(c.mask)}};
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  const auto& d = j.at("dims");
  c.dims = {d.at("text").get<int>(), d.at("image").get<int>(), d.at("multimodal").get<int>(),
            d.at("caption").get<int>()};
  c.projection_dim = j.at("projection_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.threshold = j.at("threshold").get<double>();
  c.mask = mask_from_json(j.at("mask"));
  return c;
}

ClassifierParams ClassifierParams::zeros(const ClassifierConfig& config) {
  config.validate();
  ClassifierParams p;
  p.config = config;
  const int P = config.projection_dim;
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    p.proj_w[k] = Matrix::Zero(P, config.dims.of(pw));
    p.proj_b[k] = Vector::Zero(P);
  }
  int in = static_cast<int>(kPathwayCount) * P;
  for (int l = 0; l < config.hidden_layers; ++l) {
    p.hidden_w.push_back(Matrix::Zero(config.hidden_dim, in));
    p.hidden_b.push_back(Vector::Zero(config.hidden_dim));
    in = config.hidden_dim;
  }
  p.out_w = Vector::Zero(in);
  p.out_b = Vector::Zero(1);
  return p;
}

std::vector<ParamBlock> ClassifierParams::blocks() {
  std::vector<ParamBlock> out;
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    const std::string name(to_string(pw));
    out.push_back({"proj." + name + ".weight", static_cast<int>(proj_w[k].rows()), static_cast<int>(proj_w[k].cols()),
                   proj_w[k].data()});
    out.push_back({"proj." + name + ".bias", static_cast<int>(proj_b[k].size()), 1, proj_b[k].data()});
  }
  for (std::size_t l = 0; l < hidden_w.size(); ++l) {
    const auto tag = "hidden." + std::to_string(l);
    out.push_back({tag + ".weight", static_cast<int>(hidden_w[l].rows()), static_cast<int>(hidden_w[l].cols()),
                   hidden_w[l].data()});
    out.push_back({tag + ".bias", static_cast<int>(hidden_b[l].size()), 1, hidden_b[l].data()});
  }
  out.push_back({"output.weight", 1, static_cast<int>(out_w.size()), out_w.data()});
  out.push_back({"output.bias", 1, 1, out_b.data()});
  return out;
}

ClassifierParams ClassifierParams::initialize(const ClassifierConfig& config, std::uint64_t seed) {
  auto p = zeros(config);
  SplitMix64 rng(seed);
  auto fill = [&rng](double* data, Eigen::Index n, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < n; ++i) data[i] = (rng.uniform() * 2.0 - 1.0) * bound;
  };
  for (std::size_t k = 0; k < kPathwayCount; ++k) {
    fill(p.proj_w[k].data(), p.proj_w[k].size(), p.proj_w[k].cols());
    fill(p.proj_b[k].data(), p.proj_b[k].size(), p.proj_w[k].cols());
  }
  for (std::size_t l = 0; l < p.hidden_w.size(); ++l) {
    fill(p.hidden_w[l].data(), p.hidden_w[l].size(), p.hidden_w[l].cols());
    fill(p.hidden_b[l].data(), p.hidden_b[l].size(), p.hidden_w[l].cols());
  }
  fill(p.out_w.data(), p.out_w.size(), p.out_w.size());
  fill(p.out_b.data(), 1, p.out_w.size());
  p.round_to_float32();
  return p;
}

std::size_t ClassifierParams::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(out_w.size() + out_b.size());
  for (std::size_t k = 0; k < kPathwayCount; ++k) n += static_cast<std::size_t>(proj_w[k].size() + proj_b[k].size());
  for (std::size_t l = 0; l < hidden_w.size(); ++l) {
    n += static_cast<std::size_t>(hidden_w[l].size() + hidden_b[l].size());
  }
  return n;
}

void ClassifierParams::round_to_float32() {
  for (auto& block : blocks()) {
    for (double& v : block.values()) v = static_cast<double>(static_cast<float>(v));
  }
}

bool ClassifierParams::all_finite() const {
  for (std::size_t k = 0; k < kPathwayCount; ++k) {
    if (!proj_w[k].allFinite() || !proj_b[k].allFinite()) return false;
  }
  for (std::size_t l = 0; l < hidden_w.size(); ++l) {
    if (!hidden_w[l].allFinite() || !hidden_b[l].allFinite()) return false;
  }
  return out_w.allFinite() && out_b.allFinite();
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_loss(int y, double p_real) {
  if (y != 0 && y != 1) throw Error("label must be 0 or 1, got " + std::to_string(y));
  const double p = std::clamp(p_real, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_loss_mean(std::span<const int> y, std::span<const double> p_real) {
  if (y.size() != p_real.size()) throw Error("label and probability counts differ");
  if (y.empty()) throw Error("cannot average BCE over an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += bce_loss(y[i], p_real[i]);
  return sum / static_cast<double>(y.size());
}

namespace {

struct Trace {
  std::array<Matrix, kPathwayCount> pre;   // X W^T + b
  std::array<Matrix, kPathwayCount> drop;  // dropout scale per unit, empty when unused
  Matrix aggregated;
  std::vector<Matrix> hidden_pre;
  std::vector<Matrix> hidden_drop;
  std::vector<Matrix> hidden_out;
};

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, SplitMix64& rng) {
  Matrix m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  return m;
}

bool use_dropout(const ClassifierParams& params, bool training, SplitMix64* rng) {
  if (!training || params.config.dropout <= 0.0) return false;
  if (rng == nullptr) throw Error("training-mode forward pass needs a dropout RNG");
  return true;
}

void check_batch(const BatchInputs& batch, const ClassifierParams& params) {
  const auto n = batch.x[0].rows();
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    if (batch.x[k].rows() != n) throw ShapeError("batch pathways have different row counts");
    if (batch.x[k].cols() != params.proj_w[k].cols()) {
      throw ShapeError("pathway " + std::string(to_string(pw)) + " has dimension " +
                       std::to_string(batch.x[k].cols()) + ", classifier expects " +
                       std::to_string(params.proj_w[k].cols()));
    }
  }
}

Matrix aggregate(const BatchInputs& batch, const ClassifierParams& params, bool training, SplitMix64* rng,
                 Trace& trace) {
  check_batch(batch, params);
  const bool dropout = use_dropout(params, training, rng);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index P = params.config.projection_dim;
  Matrix agg = Matrix::Zero(n, P * static_cast<Eigen::Index>(kPathwayCount));
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    if (!params.config.mask.enabled(pw)) continue;
    Matrix z = batch.x[k] * params.proj_w[k].transpose();
    z.rowwise() += params.proj_b[k].transpose();
    Matrix g = z.cwiseMax(0.0);
    if (dropout) {
      trace.drop[k] = dropout_mask(n, P, params.config.dropout, *rng);
      g = g.cwiseProduct(trace.drop[k]);
    }
    agg.middleCols(static_cast<Eigen::Index>(k) * P, P) = g;
    trace.pre[k] = std::move(z);
  }
  return agg;
}

Vector head(const Matrix& agg, const ClassifierParams& params, bool training, SplitMix64* rng, Trace& trace) {
  const bool dropout = use_dropout(params, training, rng);
  const Matrix* input = &agg;
  trace.hidden_pre.clear();
  trace.hidden_drop.clear();
  trace.hidden_out.clear();
  for (std::size_t l = 0; l < params.hidden_w.size(); ++l) {
    Matrix a = *input * params.hidden_w[l].transpose();
    a.rowwise() += params.hidden_b[l].transpose();
    Matrix h = a.cwiseMax(0.0);
    if (dropout) {
      trace.hidden_drop.push_back(dropout_mask(h.rows(), h.cols(), params.config.dropout, *rng));
      h = h.cwiseProduct(trace.hidden_drop.back());
    } else {
      trace.hidden_drop.emplace_back();
    }
    if (!h.allFinite()) throw NumericalError("numerical overflow in hidden layer " + std::to_string(l));
    trace.hidden_pre.push_back(std::move(a));
    trace.hidden_out.push_back(std::move(h));
    input = &trace.hidden_out.back();
  }
  Vector logits = *input * params.out_w;
  logits.array() += params.out_b[0];
  if (!logits.allFinite()) throw NumericalError("numerical overflow: non-finite logit");
  return logits;
}

Prediction to_prediction(double logit, double threshold) {
  Prediction p;
  p.logit = logit;
  p.p_real = sigmoid(logit);
  p.label = p.p_real >= threshold ? kRealLabel : kFakeLabel;
  return p;
}

}  // namespace

BatchInputs make_batch(std::span<const FeatureBundle* const> bundles, const FeatureDims& dims) {
  BatchInputs batch;
  const auto n = static_cast<Eigen::Index>(bundles.size());
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    const int d = dims.of(pw);
    batch.x[k].resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& v = (*bundles[static_cast<std::size_t>(i)])[pw];
      if (v.size() != static_cast<std::size_t>(d)) {
        throw ShapeError("pathway " + std::string(to_string(pw)) + " has dimension " + std::to_string(v.size()) +
                         ", expected " + std::to_string(d));
      }
      for (int j = 0; j < d; ++j) batch.x[k](i, j) = static_cast<double>(v[static_cast<std::size_t>(j)]);
    }
  }
  return batch;
}

BatchResult forward_backward(const BatchInputs& batch, const ClassifierParams& params, bool training,
                             SplitMix64* rng, std::span<const int> labels, ClassifierParams* grad) {
  Trace trace;
  trace.aggregated = aggregate(batch, params, training, rng, trace);
  BatchResult result;
  result.logits = head(trace.aggregated, params, training, rng, trace);
  const auto n = result.logits.size();
  result.p_real.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) result.p_real[i] = sigmoid(result.logits[i]);

  if (labels.empty()) return result;
  if (labels.size() != static_cast<std::size_t>(n)) throw Error("label count does not match batch size");
  result.mean_loss = bce_loss_mean(labels, std::span<const double>(result.p_real.data(), static_cast<std::size_t>(n)));
  if (grad == nullptr) return result;

  // dL/dlogit for the mean clamped BCE; p - y inside the clamp, 0 outside.
  Vector d_logit(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = result.p_real[i];
    const bool clamped = p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon;
    d_logit[i] = clamped ? 0.0 : (p - labels[static_cast<std::size_t>(i)]) / static_cast<double>(n);
  }

  const Matrix& last = params.hidden_w.empty() ? trace.aggregated : trace.hidden_out.back();
  grad->out_w = last.transpose() * d_logit;
  grad->out_b[0] = d_logit.sum();
  Matrix d_out = d_logit * params.out_w.transpose();

  for (std::size_t l = params.hidden_w.size(); l-- > 0;) {
    Matrix d_pre = d_out;
    if (trace.hidden_drop[l].size() > 0) d_pre = d_pre.cwiseProduct(trace.hidden_drop[l]);
    d_pre = d_pre.cwiseProduct((trace.hidden_pre[l].array() > 0.0).cast<double>().matrix());
    const Matrix& input = l == 0 ? trace.aggregated : trace.hidden_out[l - 1];
    grad->hidden_w[l] = d_pre.transpose() * input;
    grad->hidden_b[l] = d_pre.colwise().sum().transpose();
    d_out = d_pre * params.hidden_w[l];
  }

  const Eigen::Index P = params.config.projection_dim;
  for (Pathway pw : kPathways) {
    const auto k = static_cast<std::size_t>(pw);
    if (!params.config.mask.enabled(pw)) {
      grad->proj_w[k].setZero();
      grad->proj_b[k].setZero();
      continue;
    }
    Matrix d_pre = d_out.middleCols(static_cast<Eigen::Index>(k) * P, P);
    if (trace.drop[k].size() > 0) d_pre = d_pre.cwiseProduct(trace.drop[k]);
    d_pre = d_pre.cwiseProduct((trace.pre[k].array() > 0.0).cast<double>().matrix());
    grad->proj_w[k] = d_pre.transpose() * batch.x[k];
    grad->proj_b[k] = d_pre.colwise().sum().transpose();
  }
  return result;
}

namespace {

BatchInputs single_batch(const FeatureBundle& bundle, const ClassifierParams& params) {
  for (Pathway pw : kPathways) {
    if (params.config.mask.enabled(pw) && !bundle.mask.enabled(pw)) {
      throw ShapeError("classifier uses pathway " + std::string(to_string(pw)) + " but the bundle disabled it");
    }
  }
  const FeatureBundle* ptr = &bundle;
  return make_batch(std::span(&ptr, 1), params.config.dims);
}

}  // namespace

Vector project_and_aggregate(const FeatureBundle& bundle, const ClassifierParams& params, bool training,
                             SplitMix64* rng) {
  Trace trace;
  Matrix agg = aggregate(single_batch(bundle, params), params, training, rng, trace);
  return agg.row(0).transpose();
}

Prediction classify_forward(const Vector& aggregated, const ClassifierParams& params, bool training,
                            SplitMix64* rng) {
  const auto expected = params.config.projection_dim * static_cast<Eigen::Index>(kPathwayCount);
  if (aggregated.size() != expected) {
    throw ShapeError("aggregated vector has length " + std::to_string(aggregated.size()) + ", expected " +
                     std::to_string(expected));
  }
  if (!aggregated.allFinite()) throw NumericalError("numerical overflow: non-finite aggregated features");
  Trace trace;
  Matrix agg = aggregated.transpose();
  const Vector logits = head(agg, params, training, rng, trace);
  return to_prediction(logits[0], params.config.threshold);
}

Prediction predict(const FeatureBundle& bundle, const ClassifierParams& params) {
  return classify_forward(project_and_aggregate(bundle, params, false), params, false);
}

std::vector<Prediction> predict_batch(std::span<const FeatureBundle> bundles, const ClassifierParams& params) {
  std::vector<Prediction> out;
  out.reserve(bundles.size());
  constexpr std::size_t kChunk = 64;
  std::vector<const FeatureBundle*> ptrs;
  for (std::size_t start = 0; start < bundles.size(); start += kChunk) {
    const auto end = std::min(bundles.size(), start + kChunk);
    ptrs.clear();
    for (std::size_t i = start; i < end; ++i) {
      for (Pathway pw : kPathways) {
        if (params.config.mask.enabled(pw) && !bundles[i].mask.enabled(pw)) {
          throw ShapeError("classifier uses pathway " + std::string(to_string(pw)) + " but bundle " +
                           std::to_string(i) + " disabled it");
        }
      }
      ptrs.push_back(&bundles[i]);
    }
    const auto batch = make_batch(ptrs, params.config.dims);
    const auto result = forward_backward(batch, params, false, nullptr);
    for (Eigen::Index i = 0; i < result.logits.size(); ++i) {
      out.push_back(to_prediction(result.logits[i], params.config.threshold));
    }
  }
  return out;
}

FusionModel::FusionModel(const EncoderHub& hub, ClassifierParams params) : hub_(&hub), params_(std::move(params)) {
  params_.config.validate();
  const auto dims = FeatureDims::from_backends(hub.backends());
  if (!(dims == params_.config.dims)) {
    throw ShapeError("classifier dims " + describe(params_.config.dims) + " do not match encoder dims " +
                     describe(dims));
  }
}

FeatureBundle FusionModel::features(const NewsArticle& article, const ImageTensor* img) const {
  return build_feature_bundle(article, img, *hub_, mask());
}

Prediction FusionModel::predict(const NewsArticle& article, const ImageTensor* img) const {
  return mmfnd::predict(features(article, img), params_);
}

FusionModel apply_pathway_mask(const FusionModel& model, const PathwayMask& mask) {
  mask.validate();
  auto params = model.params();
  params.config.mask = mask;
  return FusionModel(model.hub(), std::move(params));
}

}  // namespace mmfnd
