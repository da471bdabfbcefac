#pragma once

// Central finite differences of the mean batch BCE over every classifier
// parameter, compared with the analytic backward pass.

#include <cmath>
#include <optional>
#include <vector>

#include "mmfnd/fusion.hpp"
#include "mmfnd/hashing.hpp"

namespace oracle {

struct GradInstance {
  mmfnd::ClassifierParams params;
  mmfnd::BatchInputs batch;
  std::vector<int> labels;
};

/// Random small instance; some pathways may be masked out.
inline GradInstance random_grad_instance(std::uint64_t seed, int p, int h, int hidden_layers = 1) {
  mmfnd::SplitMix64 rng(seed);
  mmfnd::ClassifierConfig cfg;
  cfg.dims = {static_cast<int>(3 + rng.below(6)), static_cast<int>(3 + rng.below(6)),
              static_cast<int>(3 + rng.below(6)), static_cast<int>(3 + rng.below(6))};
  cfg.projection_dim = p;
  cfg.hidden_dim = h;
  cfg.hidden_layers = hidden_layers;
  cfg.dropout = 0.2;
  if (rng.below(3) == 0) {
    cfg.mask = mmfnd::PathwayMask::full().without(static_cast<mmfnd::Pathway>(rng.below(4)));
  }
  GradInstance g{mmfnd::ClassifierParams::initialize(cfg, rng.next()), {}, {}};
  // Biases away from zero keep ReLU kinks out of the difference stencil.
  for (auto& block : g.params.blocks()) {
    for (auto& v : block.values()) v += (rng.uniform() - 0.5) * 0.2;
  }
  const int batch = 2 + static_cast<int>(rng.below(5));
  for (auto pw : mmfnd::kPathways) {
    auto& x = g.batch.x[static_cast<std::size_t>(pw)];
    x.resize(batch, cfg.dims.of(pw));
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform() * 2.0 - 1.0;
    }
  }
  for (int i = 0; i < batch; ++i) g.labels.push_back(static_cast<int>(rng.below(2)));
  return g;
}

struct GradComparison {
  double max_relative_error = 0.0;  // over parameter blocks, ||a - n|| / (||a|| + ||n||)
  double max_abs_error = 0.0;
  std::size_t parameters = 0;
};

/// With `dropout_seed`, every evaluation runs in training mode with a fresh
/// RNG from that seed, so the dropout mask is identical across the stencil.
inline GradComparison compare_gradients(GradInstance& g, double step = 1e-5,
                                        std::optional<std::uint64_t> dropout_seed = std::nullopt) {
  auto loss = [&](const mmfnd::ClassifierParams& p, mmfnd::ClassifierParams* grad) {
    if (dropout_seed) {
      mmfnd::SplitMix64 rng(*dropout_seed);
      return mmfnd::forward_backward(g.batch, p, true, &rng, g.labels, grad).mean_loss;
    }
    return mmfnd::forward_backward(g.batch, p, false, nullptr, g.labels, grad).mean_loss;
  };
  auto analytic = mmfnd::ClassifierParams::zeros(g.params.config);
  loss(g.params, &analytic);

  GradComparison out;
  auto blocks = g.params.blocks();
  auto grad_blocks = analytic.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    auto values = blocks[b].values();
    auto grads = grad_blocks[b].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss(g.params, nullptr);
      values[i] = saved - step;
      const double down = loss(g.params, nullptr);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double d = grads[i] - numeric;
      diff_sq += d * d;
      a_sq += grads[i] * grads[i];
      n_sq += numeric * numeric;
      out.max_abs_error = std::max(out.max_abs_error, std::abs(d));
      ++out.parameters;
    }
    const double denom = std::sqrt(a_sq) + std::sqrt(n_sq);
    if (denom > 0.0) out.max_relative_error = std::max(out.max_relative_error, std::sqrt(diff_sq) / denom);
  }
  return out;
}

}  // namespace oracle
