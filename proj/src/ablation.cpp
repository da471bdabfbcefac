#include "mmfnd/ablation.hpp"

#include "mmfnd/error.hpp"
#include "mmfnd/hashing.hpp"

namespace mmfnd {

std::string_view to_string(AblationSuite s) noexcept {
  switch (s) {
    case AblationSuite::modality: return "modality";
    case AblationSuite::multimodal_pathway: return "multimodal_pathway";
    case AblationSuite::caption_pathway: return "caption_pathway";
  }
  return "modality";
}

AblationSuite parse_ablation_suite(std::string_view name) {
  if (name == "modality") return AblationSuite::modality;
  if (name == "multimodal" || name == "multimodal_pathway") return AblationSuite::multimodal_pathway;
  if (name == "caption" || name == "caption_pathway") return AblationSuite::caption_pathway;
  throw ConfigError("unknown ablation suite '" + std::string(name) + "' (expected modality, multimodal, caption)");
}

AblationSpec make_ablation_spec(AblationSuite suite) {
  const auto full = PathwayMask::full();
  AblationSpec spec{suite, {}};
  switch (suite) {
    case AblationSuite::modality: {
      PathwayMask no_text = full.without(Pathway::text).without(Pathway::multimodal);
      spec.rows = {{"w/o Image", PathwayMask::only(Pathway::text)}, {"w/o Text", no_text}, {"Text+Image", full}};
      break;
    }
    case AblationSuite::multimodal_pathway:
      spec.rows = {{"w/o multimodal", full.without(Pathway::multimodal)}, {"with multimodal", full}};
      break;
    case AblationSuite::caption_pathway:
      spec.rows = {{"w/o caption", full.without(Pathway::caption)}, {"with caption", full}};
      break;
  }
  return spec;
}

std::size_t verify_mask_invariance(const ClassifierParams& params, std::span<const FeatureBundle> bundles,
                                   std::uint64_t seed, int rounds) {
  const auto& mask = params.config.mask;
  SplitMix64 rng(seed);
  std::size_t checks = 0;
  const auto baseline = predict_batch(bundles, params);
  for (int round = 0; round < rounds; ++round) {
    std::vector<FeatureBundle> perturbed(bundles.begin(), bundles.end());
    for (auto& b : perturbed) {
      for (auto p : kPathways) {
        if (mask.enabled(p)) continue;
        for (auto& v : b[p]) v = static_cast<float>(rng.uniform() * 20.0 - 10.0);
      }
    }
    const auto again = predict_batch(perturbed, params);
    for (std::size_t i = 0; i < again.size(); ++i) {
      if (!(again[i] == baseline[i])) throw NumericalError("prediction changed when a disabled pathway was perturbed");
      ++checks;
    }
  }
  return checks;
}

std::vector<AblationResult> run_ablation_suite(const AblationSpec& spec, const LabeledBundles& train_data,
                                               const LabeledBundles& test_data,
                                               std::span<const NewsArticle> test_articles,
                                               const TrainConfig& config, const std::string& timestamp) {
  if (spec.rows.empty()) throw ConfigError("ablation spec has no rows");
  std::vector<AblationResult> results;
  for (const auto& row : spec.rows) {
    TrainConfig cfg = config;
    cfg.mask = row.mask;
    cfg.validate();

    LabeledBundles train_masked = train_data;
    for (auto& b : train_masked.bundles) b = mask_bundle(std::move(b), row.mask);
    LabeledBundles test_masked = test_data;
    for (auto& b : test_masked.bundles) b = mask_bundle(std::move(b), row.mask);

    auto trained = train(train_masked, cfg);
    const auto preds = evaluate_on_split(trained.checkpoint, test_masked);

    std::vector<IdPrediction> joined;
    joined.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) joined.push_back({test_masked.ids[i], preds[i].label});

    AblationResult r;
    r.label = row.label;
    r.mask = row.mask;
    r.log = std::move(trained.log);
    r.invariance_checks = verify_mask_invariance(trained.checkpoint.params, test_masked.bundles, cfg.seed ^ 0xA5A5);
    r.report = make_report(row.label, joined, test_articles, to_json(cfg), timestamp);
    results.push_back(std::move(r));
  }
  return results;
}

ReportTable to_report_table(AblationSuite suite, const std::vector<AblationResult>& results) {
  ReportTable t;
  t.name = std::string(to_string(suite));
  for (const auto& r : results) t.rows.emplace_back(r.label, r.report);
  return t;
}

}  // namespace mmfnd
