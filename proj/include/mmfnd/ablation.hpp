#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfnd/fusion.hpp"
#include "mmfnd/report.hpp"
#include "mmfnd/training.hpp"

namespace mmfnd {

enum class AblationSuite { modality, multimodal_pathway, caption_pathway };

std::string_view to_string(AblationSuite s) noexcept;
/// Accepts the enum names and the short forms "multimodal" and "caption".
AblationSuite parse_ablation_suite(std::string_view name);

struct AblationRow {
  std::string label;
  PathwayMask mask;
};

struct AblationSpec {
  AblationSuite suite = AblationSuite::modality;
  std::vector<AblationRow> rows;
};

AblationSpec make_ablation_spec(AblationSuite suite);

struct AblationResult {
  std::string label;
  PathwayMask mask;
  EvaluationReport report;
  TrainLog log;
  /// Number of perturbed re-evaluations that matched the original predictions.
  std::size_t invariance_checks = 0;
};

/// Re-predicts every bundle with the disabled pathways replaced by random
/// values and returns the number of checks run. Throws NumericalError on any
/// prediction change.
std::size_t verify_mask_invariance(const ClassifierParams& params, std::span<const FeatureBundle> bundles,
                                   std::uint64_t seed, int rounds = 1);

/// Trains one model per row from the same seed and data, evaluates it on
/// `test` and checks masked-pathway invariance. Rows come back in spec order.
std::vector<AblationResult> run_ablation_suite(const AblationSpec& spec, const LabeledBundles& train_data,
                                               const LabeledBundles& test_data,
                                               std::span<const NewsArticle> test_articles,
                                               const TrainConfig& config, const std::string& timestamp);

ReportTable to_report_table(AblationSuite suite, const std::vector<AblationResult>& results);

}  // namespace mmfnd
