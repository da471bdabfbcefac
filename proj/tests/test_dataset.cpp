#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include <opencv2/imgcodecs.hpp>

#include "mmfnd/dataset.hpp"
#include "mmfnd/error.hpp"
#include "mmfnd/image.hpp"
#include "support.hpp"

using namespace mmfnd;

namespace {

std::string line(const std::string& id, int label, const std::string& extra = "") {
  return R"({"id":")" + id + R"(","language":"hi","text":"t )" + id + R"(","label":)" + std::to_string(label) + extra +
         "}\n";
}

void write_png(const std::filesystem::path& path, int w, int h, int type = CV_8UC3) {
  cv::Mat m(h, w, type, cv::Scalar::all(128));
  REQUIRE(cv::imwrite(path.string(), m));
}

}  // namespace

TEST_CASE("load_manifest keeps file order and rejects bad input") {
  testing::TempDir dir;
  SUBCASE("three valid lines") {
    const auto m = parse_manifest(line("a", 0) + line("b", 1) + "\n" + line("c", 1), dir.path());
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].id == "a");
    CHECK(m.records[2].id == "c");
    CHECK(m.records[1].label == 1);
  }
  SUBCASE("empty") { CHECK_THROWS_WITH_AS(parse_manifest("", dir.path()), "empty manifest", ManifestError); }
  SUBCASE("label out of range names the line") {
    try {
      parse_manifest(line("a", 0) + line("b", 2), dir.path());
      FAIL("expected an error");
    } catch (const ManifestError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    try {
      parse_manifest(line("a", 0) + line("a", 1), dir.path());
      FAIL("expected an error");
    } catch (const ManifestError& e) {
      CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(parse_manifest(line("a", 0) + "{not json}\n", dir.path()), ManifestError);
  }
  SUBCASE("unknown fields ignored, optional fields parsed") {
    const auto m = parse_manifest(
        line("a", 1, R"(,"surprise":3,"text_en":"hello","image_ref":"x.png","published_at":"2023-05-01","tags":["t"])"),
        dir.path());
    CHECK(m.records[0].text_en == std::optional<std::string>("hello"));
    CHECK(m.records[0].tags == std::vector<std::string>{"t"});
  }
  SUBCASE("file round trip") {
    const auto m = parse_manifest(line("a", 0, R"(,"image_ref":"i.png")") + line("b", 1), dir.path());
    write_manifest(m, dir / "m.jsonl");
    const auto back = load_manifest(dir / "m.jsonl");
    CHECK(back.records == m.records);
    CHECK(back.root_dir == dir.path());
  }
}

TEST_CASE("preprocess_image produces 224x224x3 in [0,1]") {
  SUBCASE("640x480 colour") {
    cv::Mat m(480, 640, CV_8UC3);
    cv::randu(m, 0, 255);
    std::vector<std::uint8_t> buf;
    cv::imencode(".png", m, buf);
    const auto t = preprocess_image(buf);
    CHECK(t.has_model_shape());
    CHECK(*std::min_element(t.data.begin(), t.data.end()) >= 0.0f);
    CHECK(*std::max_element(t.data.begin(), t.data.end()) <= 1.0f);
  }
  SUBCASE("224 input keeps pixels") {
    cv::Mat m(224, 224, CV_8UC3, cv::Scalar(0, 51, 255));  // BGR
    std::vector<std::uint8_t> buf;
    cv::imencode(".png", m, buf);
    const auto t = preprocess_image(buf);
    REQUIRE(t.has_model_shape());
    CHECK(t.at(10, 10, 0) == doctest::Approx(1.0));  // R
    CHECK(t.at(10, 10, 1) == doctest::Approx(0.2));
    CHECK(t.at(10, 10, 2) == doctest::Approx(0.0));
  }
  SUBCASE("grayscale is replicated") {
    cv::Mat m(100, 100, CV_8UC1);
    cv::randu(m, 0, 255);
    std::vector<std::uint8_t> buf;
    cv::imencode(".png", m, buf);
    const auto t = preprocess_image(buf);
    REQUIRE(t.has_model_shape());
    for (int y = 0; y < 224; y += 17) {
      for (int x = 0; x < 224; x += 13) {
        CHECK(t.at(y, x, 0) == t.at(y, x, 1));
        CHECK(t.at(y, x, 1) == t.at(y, x, 2));
      }
    }
  }
  SUBCASE("garbage bytes") {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
    try {
      preprocess_image(junk, "art-9");
      FAIL("expected an error");
    } catch (const ImageDecodeError& e) {
      CHECK(std::string(e.what()).find("image decode failed") != std::string::npos);
      CHECK(e.article_id() == "art-9");
    }
  }
}

TEST_CASE("exclude_incomplete drops image-less and corrupt records in order") {
  testing::TempDir dir;
  write_png(dir / "ok1.png", 8, 8);
  write_png(dir / "ok2.png", 8, 6, CV_8UC1);
  {
    std::ofstream bad(dir / "bad.png", std::ios::binary);
    bad << "not an image";
  }
  const std::string jsonl = line("a", 0, R"(,"image_ref":"ok1.png")") + line("b", 1) +
                            line("c", 1, R"(,"image_ref":"bad.png")") + line("d", 0) +
                            line("e", 1, R"(,"image_ref":"ok2.png")") + line("f", 0, R"(,"image_ref":"gone.png")");
  const auto m = parse_manifest(jsonl, dir.path());
  const auto r = exclude_incomplete(m);
  std::vector<std::string> kept;
  for (const auto& a : r.kept.records) kept.push_back(a.id);
  CHECK(kept == std::vector<std::string>{"a", "e"});
  CHECK(r.dropped_ids() == std::vector<std::string>{"b", "c", "d", "f"});

  SUBCASE("all valid is identity") {
    const auto m2 = parse_manifest(line("a", 0, R"(,"image_ref":"ok1.png")"), dir.path());
    const auto r2 = exclude_incomplete(m2);
    CHECK(r2.kept.records == m2.records);
    CHECK(r2.dropped.empty());
  }
}

TEST_CASE("translate_article") {
  NewsArticle a;
  a.id = "x";
  a.language = Language::hi;
  a.text = "  नमस्ते \U0001F600 ";
  SUBCASE("identity uses cleaned text and flags it") {
    const auto t = translate_article(a, IdentityTranslator{});
    CHECK(t.text_en == std::optional<std::string>("नमस्ते"));
    CHECK(t.translated_by == std::optional<std::string>("identity"));
  }
  SUBCASE("existing text_en is untouched") {
    a.text_en = "already";
    CHECK(translate_article(a, IdentityTranslator{}) == a);
  }
  SUBCASE("lookup table") {
    LookupTranslator lookup(std::map<std::string, std::string>{{"नमस्ते", "hello"}});
    CHECK(translate_article(a, lookup).text_en == std::optional<std::string>("hello"));
  }
  SUBCASE("lookup miss carries the id") {
    LookupTranslator lookup({});
    try {
      translate_article(a, lookup);
      FAIL("expected an error");
    } catch (const TranslationError& e) {
      CHECK(e.article_id() == "x");
    }
  }
}

TEST_CASE("split_dataset partitions deterministically") {
  for (double ratio : {0.5, 0.8, 0.9}) {
    for (std::size_t n : {2u, 3u, 5u, 10u, 77u, 100u, 1000u, 10000u}) {
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
      const auto s = split_ids(ids, ratio, 42);
      CAPTURE(n);
      CAPTURE(ratio);
      CHECK(s.train_ids.size() == static_cast<std::size_t>(std::floor(ratio * double(n) + 0.5)));
      std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
      for (const auto& id : s.test_ids) CHECK(all.insert(id).second);
      CHECK(all.size() == n);
      CHECK(split_ids(ids, ratio, 42).train_ids == s.train_ids);
    }
  }
  std::vector<std::string> five = {"a", "b", "c", "d", "e"};
  CHECK(split_ids(five, 0.8, 1).train_ids.size() == 4);
  CHECK(split_ids(five, 0.8, 1).train_ids != split_ids(five, 0.8, 2).train_ids);
  CHECK_THROWS(split_ids({"only"}, 0.8, 1));
  CHECK_THROWS(split_ids(five, 1.0, 1));
  CHECK_THROWS(split_ids(five, 0.0, 1));
}

TEST_CASE("compute_stats counts per language and reconciles") {
  DatasetManifest m;
  const std::pair<Language, int> rows[] = {{Language::hi, 1}, {Language::hi, 1}, {Language::hi, 0},
                                           {Language::ta, 1}, {Language::ta, 1}, {Language::ta, 1},
                                           {Language::ta, 1}, {Language::ta, 0}, {Language::ta, 0},
                                           {Language::hi, 0}};
  int i = 0;
  for (auto [lang, label] : rows) {
    NewsArticle a;
    a.id = std::to_string(i++);
    a.language = lang;
    a.label = label;
    m.records.push_back(a);
  }
  const auto s = compute_stats(m);
  CHECK(s.totals.real == 6);
  CHECK(s.totals.fake == 4);
  CHECK(s.per_language.at(Language::hi) == ClassCounts{2, 2});
  CHECK(s.per_language.at(Language::ta) == ClassCounts{4, 2});
  CHECK(s.per_language.at(Language::bn) == ClassCounts{0, 0});

  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    DatasetManifest g;
    const auto n = rng.below(300);
    for (std::uint64_t k = 0; k < n; ++k) {
      NewsArticle a;
      a.id = std::to_string(k);
      a.language = static_cast<Language>(rng.below(8));
      a.label = static_cast<int>(rng.below(2));
      g.records.push_back(a);
    }
    const auto st = compute_stats(g);
    std::size_t sum = 0;
    for (const auto& [lang, c] : st.per_language) sum += c.total();
    CHECK(sum == n);
    CHECK(st.totals.total() == n);
  }
}
