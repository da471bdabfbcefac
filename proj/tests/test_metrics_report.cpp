#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "mmfnd/ablation.hpp"
#include "mmfnd/error.hpp"
#include "mmfnd/metrics.hpp"
#include "mmfnd/report.hpp"
#include "mmfnd/synthetic.hpp"
#include "oracles/metrics_oracle.hpp"
#include "oracles/paper_tables.hpp"
#include "support.hpp"

using namespace mmfnd;

namespace {

std::vector<NewsArticle> articles_for(const std::vector<std::pair<std::string, std::pair<Language, int>>>& rows) {
  std::vector<NewsArticle> out;
  for (const auto& [id, info] : rows) {
    NewsArticle a;
    a.id = id;
    a.language = info.first;
    a.label = info.second;
    out.push_back(a);
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("confusion_counts by hand") {
  const std::vector<int> t = {0, 0, 1, 1};
  const std::vector<int> p = {0, 1, 1, 1};
  const auto c = confusion_counts(t, p, 0);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp == 0);
  CHECK(c.tn == 2);
  CHECK(confusion_counts(t, p, 1) == c.swapped());
  const auto perfect = confusion_counts(t, t, 0);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);
  CHECK_THROWS(confusion_counts(t, std::vector<int>{0, 1}, 0));
  CHECK_THROWS(confusion_counts(std::vector<int>{0, 2}, std::vector<int>{0, 1}, 0));
  CHECK_THROWS(confusion_counts(std::vector<int>{}, std::vector<int>{}, 0));
}

TEST_CASE("compute_metrics formulas") {
  const auto perfect = compute_metrics({5, 5, 0, 0, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  const auto m = compute_metrics({2, 6, 1, 1, 0});
  CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-15));
  const auto none = compute_metrics({0, 3, 0, 2, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK_THROWS(compute_metrics({0, 0, 0, 0, 0}));
}

TEST_CASE("published MMCFND fake row is F1-consistent") {
  const auto& row = paper::kComparison.back();
  const double f1 = 2 * row.fake.precision * row.fake.recall / (row.fake.precision + row.fake.recall);
  CHECK(std::abs(f1 - 0.996) <= 0.001);
}

TEST_CASE("metrics agree with the brute-force oracle and obey invariants") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 1 + rng.below(200);
    std::vector<int> t(n), p(n);
    for (auto& v : t) v = static_cast<int>(rng.below(2));
    for (auto& v : p) v = static_cast<int>(rng.below(2));
    for (int pos : {0, 1}) {
      const auto c = confusion_counts(t, p, pos);
      const auto o = oracle::count(t, p, pos);
      CHECK(c.tp == o.tp);
      CHECK(c.tn == o.tn);
      CHECK(c.fp == o.fp);
      CHECK(c.fn == o.fn);
      const auto m = compute_metrics(c);
      const auto s = oracle::score(o);
      CHECK(std::abs(m.accuracy - s.accuracy) <= 1e-12);
      CHECK(std::abs(m.precision - s.precision) <= 1e-12);
      CHECK(std::abs(m.recall - s.recall) <= 1e-12);
      CHECK(std::abs(m.f1 - s.f1) <= 1e-12);
      if (m.precision + m.recall > 0) {
        CHECK(std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) < 1e-12);
      }
    }
    const auto b = binary_metrics(t, p);
    CHECK(b.fake.accuracy == b.real.accuracy);
  }
}

TEST_CASE("per_language_breakdown") {
  const auto arts = articles_for({{"h1", {Language::hi, 0}},
                                  {"h2", {Language::hi, 1}},
                                  {"t1", {Language::ta, 0}},
                                  {"t2", {Language::ta, 1}},
                                  {"t3", {Language::ta, 1}}});
  SUBCASE("two languages by hand") {
    const std::vector<IdPrediction> preds = {{"h1", 0}, {"h2", 1}, {"t1", 1}, {"t2", 1}, {"t3", 0}};
    const auto by = per_language_breakdown(preds, arts);
    REQUIRE(by.size() == 2);
    CHECK(by.at(Language::hi).fake.accuracy == 1.0);
    const auto& ta = by.at(Language::ta);
    CHECK(ta.counts.tp == 0);  // fake view
    CHECK(ta.counts.fn == 1);
    CHECK(ta.counts.fp == 1);
    CHECK(ta.counts.tn == 1);
    CHECK(ta.real.precision == doctest::Approx(0.5));
    CHECK(ta.real.recall == doctest::Approx(0.5));
    CHECK(by.count(Language::bn) == 0);
  }
  SUBCASE("single language equals overall") {
    const std::vector<IdPrediction> preds = {{"t1", 0}, {"t2", 0}, {"t3", 1}};
    const auto by = per_language_breakdown(preds, arts);
    REQUIRE(by.size() == 1);
    const auto overall = binary_metrics(std::vector<int>{0, 1, 1}, std::vector<int>{0, 0, 1});
    CHECK(by.at(Language::ta).counts == overall.counts);
  }
  SUBCASE("unknown id") {
    const std::vector<IdPrediction> preds = {{"zz", 0}};
    CHECK_THROWS_WITH(per_language_breakdown(preds, arts), doctest::Contains("zz"));
  }
  SUBCASE("per-language counts sum to overall on generated data") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
      const auto n = 1 + rng.below(150);
      std::vector<NewsArticle> gen;
      std::vector<IdPrediction> preds;
      for (std::uint64_t i = 0; i < n; ++i) {
        NewsArticle a;
        a.id = std::to_string(i);
        a.language = static_cast<Language>(rng.below(8));
        a.label = static_cast<int>(rng.below(2));
        gen.push_back(a);
        preds.push_back({a.id, static_cast<int>(rng.below(2))});
      }
      const auto report = make_report("m", preds, gen, nlohmann::json::object(), "t");
      ConfusionCounts sum;
      for (const auto& [lang, m] : report.per_language) {
        sum.tp += m.counts.tp;
        sum.tn += m.counts.tn;
        sum.fp += m.counts.fp;
        sum.fn += m.counts.fn;
      }
      CHECK(sum == report.overall.counts);
    }
  }
}

TEST_CASE("emit_report formats") {
  testing::TempDir dir;
  const auto arts = articles_for({{"a", {Language::hi, 0}}, {"b", {Language::bn, 1}}, {"c", {Language::bn, 1}}});
  const std::vector<IdPrediction> preds = {{"a", 0}, {"b", 0}, {"c", 1}};
  const auto report = make_report("mmcfnd", preds, arts, {{"seed", 42}}, "2024-01-01T00:00:00Z");

  SUBCASE("json only, round trip") {
    const std::vector<ReportFormat> f = {ReportFormat::json};
    const auto files = emit_report(report, dir / "json", f);
    REQUIRE(files.size() == 1);
    const auto back = report_from_json(nlohmann::json::parse(slurp(files[0])));
    CHECK(to_json(back) == to_json(report));
    const auto j = nlohmann::json::parse(slurp(files[0]));
    CHECK(j.contains("overall"));
    CHECK(j["overall"].contains("fake"));
    CHECK(j["overall"].contains("real"));
    CHECK(j["metadata"]["zero_denominator"].get<std::string>().find("TP+FP=0") != std::string::npos);
  }
  SUBCASE("csv header, values, parse round trip at 3 decimals") {
    const std::vector<ReportFormat> f = {ReportFormat::csv};
    const auto files = emit_report(report, dir.path(), f);
    REQUIRE(files.size() == 1);
    const auto text = slurp(files[0]);
    CHECK(text.substr(0, text.find('\n')) == "method,accuracy,fake_p,fake_r,fake_f1,real_p,real_r,real_f1");
    const auto rows = parse_report_csv(text);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == "mmcfnd");
    CHECK(std::abs(rows[0].accuracy - report.accuracy()) <= 0.0005);
    CHECK(std::abs(rows[0].fake.f1 - report.overall.fake.f1) <= 0.0005);
    CHECK(std::abs(rows[0].real.precision - report.overall.real.precision) <= 0.0005);
  }
  SUBCASE("plots for a three row table") {
    ReportTable t{"modality", {{"w/o Image", report}, {"w/o Text", report}, {"Text+Image", report}}};
    const std::vector<ReportFormat> f = {ReportFormat::plots};
    const auto files = emit_report(t, dir.path(), f);
    CHECK(files.size() == 2);
    for (const auto& p : files) CHECK_FALSE(cv::imread(p.string()).empty());
    const auto charts = make_charts(t);
    REQUIRE(charts.size() == 2);
    CHECK(charts[0].groups.size() == 3);
  }
  SUBCASE("unwritable directory") {
    std::ofstream(dir / "file") << "x";
    const std::vector<ReportFormat> f = {ReportFormat::json};
    CHECK_THROWS(emit_report(report, dir / "file" / "sub", f));
  }
  CHECK_THROWS_AS(parse_formats("json,pdf"), ConfigError);
}

TEST_CASE("csv parse round trip for random metric values") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> t, p;
    const auto n = 1 + rng.below(100);
    std::vector<NewsArticle> arts;
    std::vector<IdPrediction> preds;
    for (std::uint64_t i = 0; i < n; ++i) {
      NewsArticle a;
      a.id = std::to_string(i);
      a.label = static_cast<int>(rng.below(2));
      arts.push_back(a);
      preds.push_back({a.id, static_cast<int>(rng.below(2))});
    }
    const auto r = make_report("row, \"quoted\"", preds, arts, nlohmann::json::object(), "t");
    const auto rows = parse_report_csv(report_csv({"x", {{r.method, r}}}));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == r.method);
    auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
    CHECK(rows[0].fake.precision == doctest::Approx(round3(r.overall.fake.precision)).epsilon(1e-12));
    CHECK(rows[0].real.recall == doctest::Approx(round3(r.overall.real.recall)).epsilon(1e-12));
  }
}

TEST_CASE("ablation specs") {
  const auto modality = make_ablation_spec(AblationSuite::modality);
  REQUIRE(modality.rows.size() == 3);
  CHECK(modality.rows[0].label == "w/o Image");
  CHECK(modality.rows[1].label == "w/o Text");
  CHECK(modality.rows[2].label == "Text+Image");
  CHECK(modality.rows[0].mask == PathwayMask::only(Pathway::text));
  CHECK_FALSE(modality.rows[1].mask.use_text);
  CHECK_FALSE(modality.rows[1].mask.use_multimodal);
  CHECK(modality.rows[2].mask == PathwayMask::full());
  const auto mm = make_ablation_spec(parse_ablation_suite("multimodal"));
  CHECK(mm.rows[0].label == "w/o multimodal");
  CHECK(mm.rows[1].label == "with multimodal");
  const auto cap = make_ablation_spec(parse_ablation_suite("caption_pathway"));
  CHECK(cap.rows[0].label == "w/o caption");
  CHECK(cap.rows[1].label == "with caption");
  CHECK_THROWS_AS(parse_ablation_suite("colour"), ConfigError);
}

TEST_CASE("run_ablation_suite on planted data") {
  SplitMix64 rng(1);
  const FeatureDims dims{8, 8, 8, 8};
  LabeledBundles train_set, test_set;
  std::vector<NewsArticle> test_articles;
  for (int i = 0; i < 80; ++i) {
    FeatureBundle b;
    for (auto p : kPathways) {
      b[p].resize(8);
      for (auto& v : b[p]) v = static_cast<float>(rng.uniform() - 0.5);
    }
    const int label = i % 2;
    const std::string id = "s" + std::to_string(i);
    if (i < 60) {
      train_set.push_back(id, std::move(b), label);
    } else {
      test_set.push_back(id, std::move(b), label);
      NewsArticle a;
      a.id = id;
      a.label = label;
      a.language = i % 3 == 0 ? Language::hi : Language::gu;
      test_articles.push_back(a);
    }
  }
  plant_signal(train_set, 1.0, 9, PathwayMask::full());
  plant_signal(test_set, 1.0, 9, PathwayMask::full());
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.projection_dim = 8;
  cfg.hidden_dim = 8;
  cfg.batch_size = 16;
  for (auto suite : {AblationSuite::modality, AblationSuite::caption_pathway}) {
    const auto spec = make_ablation_spec(suite);
    const auto rows = run_ablation_suite(spec, train_set, test_set, test_articles, cfg, "t");
    REQUIRE(rows.size() == spec.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].label == spec.rows[i].label);
      CHECK(rows[i].report.overall.n == 20);
      CHECK(rows[i].invariance_checks == 20);
      CHECK(rows[i].log.epochs.size() == 2);
    }
    const auto csv = parse_report_csv(report_csv(to_report_table(suite, rows)));
    CHECK(csv.size() == spec.rows.size());
  }
}
