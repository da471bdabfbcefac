#pragma once

// Brute-force per-element counting, used to cross-check the metrics module.

#include <cstddef>
#include <vector>

namespace oracle {

struct Counts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Counts count(const std::vector<int>& truth, const std::vector<int>& pred, int positive) {
  Counts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == positive;
    const bool said = pred[i] == positive;
    if (actual && said) ++c.tp;
    if (!actual && !said) ++c.tn;
    if (!actual && said) ++c.fp;
    if (actual && !said) ++c.fn;
  }
  return c;
}

struct Scores {
  double accuracy, precision, recall, f1;
};

inline Scores score(const Counts& c) {
  const double n = double(c.tp + c.tn + c.fp + c.fn);
  Scores s{};
  s.accuracy = double(c.tp + c.tn) / n;
  s.precision = c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
  s.recall = c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace oracle
