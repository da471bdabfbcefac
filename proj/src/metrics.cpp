#include "mmfnd/metrics.hpp"

#include <unordered_map>

#include "mmfnd/error.hpp"

namespace mmfnd {

ConfusionCounts confusion_counts(std::span<const int> y_true, std::span<const int> y_pred, int positive_label) {
  if (y_true.size() != y_pred.size()) {
    throw Error("y_true has " + std::to_string(y_true.size()) + " labels but y_pred has " +
                std::to_string(y_pred.size()));
  }
  if (y_true.empty()) throw Error("confusion counts need at least one prediction");
  if (positive_label != 0 && positive_label != 1) throw Error("positive_label must be 0 or 1");
  ConfusionCounts c;
  c.positive_label = positive_label;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw Error("invalid label at position " + std::to_string(i) + ": labels must be 0 or 1");
    }
    const bool actual = t == positive_label;
    const bool predicted = p == positive_label;
    if (actual && predicted) ++c.tp;
    else if (!actual && !predicted) ++c.tn;
    else if (!actual && predicted) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double f1_score(double precision, double recall) noexcept {
  return precision + recall == 0.0 ? 0.0 : 2.0 * (precision * recall) / (precision + recall);
}

ClassMetrics compute_metrics(const ConfusionCounts& c) {
  const auto n = c.total();
  if (n == 0) throw Error("cannot compute metrics over zero records");
  ClassMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  m.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

BinaryMetrics binary_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  BinaryMetrics b;
  b.counts = confusion_counts(y_true, y_pred, kFakeLabel);
  b.fake = compute_metrics(b.counts);
  b.real = compute_metrics(b.counts.swapped());
  b.n = b.counts.total();
  return b;
}

std::map<Language, BinaryMetrics> per_language_breakdown(std::span<const IdPrediction> predictions,
                                                         std::span<const NewsArticle> articles) {
  std::unordered_map<std::string, const NewsArticle*> by_id;
  for (const auto& a : articles) by_id.emplace(a.id, &a);

  std::map<Language, std::pair<std::vector<int>, std::vector<int>>> groups;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw Error("prediction has no matching article", p.id);
    auto& [truth, pred] = groups[it->second->language];
    truth.push_back(it->second->label);
    pred.push_back(p.label);
  }
  std::map<Language, BinaryMetrics> out;
  for (const auto& [lang, g] : groups) out.emplace(lang, binary_metrics(g.first, g.second));
  return out;
}

}  // namespace mmfnd
