#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmfnd/dataset.hpp"

namespace mmfnd {

/// Counts with respect to `positive_label`. For the fake-class view the
/// positive label is 0: TP = fake predicted fake, FP = real predicted fake.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  int positive_label = kFakeLabel;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  /// Same predictions seen from the other class.
  ConfusionCounts swapped() const noexcept { return {tn, tp, fn, fp, 1 - positive_label}; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct ClassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ConfusionCounts confusion_counts(std::span<const int> y_true, std::span<const int> y_pred, int positive_label);

/// Harmonic mean of precision and recall; 0 when both are 0.
double f1_score(double precision, double recall) noexcept;

/// A = (TP+TN)/N, P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R).
/// A zero denominator makes the affected metric 0. Throws when N = 0.
ClassMetrics compute_metrics(const ConfusionCounts& c);

/// Both class views of one set of predictions.
struct BinaryMetrics {
  ConfusionCounts counts;  // fake-positive view
  ClassMetrics fake;
  ClassMetrics real;
  std::size_t n = 0;
};

BinaryMetrics binary_metrics(std::span<const int> y_true, std::span<const int> y_pred);

struct IdPrediction {
  std::string id;
  int label = kRealLabel;
};

/// Metrics per article language. Languages without predictions are omitted.
/// Throws when a prediction id has no matching article.
std::map<Language, BinaryMetrics> per_language_breakdown(std::span<const IdPrediction> predictions,
                                                         std::span<const NewsArticle> articles);

}  // namespace mmfnd
