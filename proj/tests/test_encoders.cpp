#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <thread>

#include "mmfnd/cache.hpp"
#include "mmfnd/encoders.hpp"
#include "mmfnd/error.hpp"
#include "mmfnd/hub.hpp"
#include "oracles/stub_oracle.hpp"
#include "support.hpp"

using namespace mmfnd;

namespace {

std::vector<float> vec(const Embedding& e) { return e.values; }

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::vector<unsigned char> image_bytes_oracle(const ImageTensor& img) { return oracle::le_floats(img.data); }

}  // namespace

TEST_CASE("tokenize_with_specials") {
  WhitespaceTokenizer tok;
  SUBCASE("hello world") {
    const auto s = tokenize_with_specials("hello world", tok, 200);
    REQUIRE(s.tokens.size() == 200);
    CHECK(s.tokens[0] == WhitespaceTokenizer::kCls);
    CHECK(s.tokens[3] == WhitespaceTokenizer::kSep);
    CHECK(s.tokens[4] == WhitespaceTokenizer::kPad);
    CHECK(s.real_length() == 4);
    CHECK(std::count(s.attention_mask.begin(), s.attention_mask.end(), 1) == 4);
  }
  SUBCASE("empty text") {
    const auto s = tokenize_with_specials("", tok, 200);
    CHECK(s.tokens[0] == WhitespaceTokenizer::kCls);
    CHECK(s.tokens[1] == WhitespaceTokenizer::kSep);
    CHECK(s.real_length() == 2);
  }
  SUBCASE("long text truncates content and keeps the earliest tokens") {
    std::string text;
    for (int i = 0; i < 500; ++i) text += "w" + std::to_string(i) + " ";
    const auto s = tokenize_with_specials(text, tok, 200);
    REQUIRE(s.tokens.size() == 200);
    CHECK(s.tokens[199] == WhitespaceTokenizer::kSep);
    CHECK(s.real_length() == 200);
    CHECK(s.tokens[1] == tok.encode("w0").front());
    CHECK(s.tokens[198] == tok.encode("w197").front());
  }
  SUBCASE("mask law for random lengths") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int n_max = 2 + static_cast<int>(rng.below(40));
      const int words = static_cast<int>(rng.below(60));
      std::string text;
      for (int i = 0; i < words; ++i) text += "x" + std::to_string(rng.below(9)) + "  ";
      const auto s = tokenize_with_specials(text, tok, n_max);
      CHECK(static_cast<int>(s.tokens.size()) == n_max);
      CHECK(std::count(s.attention_mask.begin(), s.attention_mask.end(), 1) == 2 + std::min(words, n_max - 2));
    }
  }
  CHECK_THROWS(tokenize_with_specials("x", tok, 1));
}

TEST_CASE("stub text encoder matches the reference oracle") {
  StubTextEncoder enc("stub-text_indic-v1", EncoderRole::text_indic, 32);
  WhitespaceTokenizer tok;
  const auto seq = tokenize_with_specials("नमस्ते दुनिया", tok, 6);
  const auto out = encode_text(seq, enc, EncoderRole::text_indic);
  CHECK(out.last_hidden.rows == 6);
  CHECK(out.last_hidden.cols == 32);
  const auto rows = oracle::stub_rows("stub-text_indic-v1", oracle::utf8("नमस्ते दुनिया"), 32, 6);
  for (int r = 0; r < 6; ++r) {
    const auto row = out.last_hidden.row(r);
    CHECK(bitwise_equal({row.begin(), row.end()}, rows[r]));
  }
  CHECK(bitwise_equal(out.cls.values, rows[0]));
  CHECK(bitwise_equal(encode_text_cls(seq, enc, EncoderRole::text_indic).values, rows[0]));
  CHECK_THROWS_AS(encode_text(seq, enc, EncoderRole::caption_text), EncoderError);

  const auto a = encode_text_cls(tokenize_with_specials("a", tok), enc, EncoderRole::text_indic);
  const auto b = encode_text_cls(tokenize_with_specials("b", tok), enc, EncoderRole::text_indic);
  CHECK(bitwise_equal(a.values, oracle::stub("stub-text_indic-v1", oracle::utf8("a"), 32)));
  CHECK(bitwise_equal(b.values, oracle::stub("stub-text_indic-v1", oracle::utf8("b"), 32)));
  CHECK_FALSE(bitwise_equal(a.values, b.values));
}

TEST_CASE("default stub shapes") {
  const auto backends = make_stub_backends();
  WhitespaceTokenizer tok;
  const auto seq = tokenize_with_specials("hello", tok);
  const auto full = encode_text(seq, *backends.text_english, EncoderRole::text_english);
  CHECK(full.last_hidden.rows == 200);
  CHECK(full.last_hidden.cols == 768);
  CHECK(full.cls.dim() == 768);
  const auto img = testing::random_image(1);
  CHECK(encode_image_patch(img, *backends.image_patch).dim() == 768);
  CHECK(encode_image_conv(img, *backends.image_conv).dim() == 1024);
  CHECK(encode_multimodal("hello", &img, *backends.multimodal).dim() == 768);
  CHECK(encode_caption(img, *backends.caption_gen, *backends.caption_text).dim() == 768);
  for (const auto& d : backends.descriptors()) CHECK(d.output_dim > 0);
}

TEST_CASE("image stubs follow the oracle and react to single pixels") {
  const auto backends = make_stub_backends();
  auto img = testing::random_image(11);
  const auto patch = encode_image_patch(img, *backends.image_patch);
  const auto& pid = backends.image_patch->descriptor().backend_id;
  CHECK(bitwise_equal(patch.values, oracle::stub(pid, image_bytes_oracle(img), 768)));
  CHECK(bitwise_equal(patch.values, vec(encode_image_patch(img, *backends.image_patch))));

  auto other = img;
  other.at(100, 7, 2) += 0.001f;
  CHECK_FALSE(bitwise_equal(patch.values, vec(encode_image_patch(other, *backends.image_patch))));

  const ImageTensor zeros(224, 224, 3);
  CHECK(bitwise_equal(vec(encode_image_conv(zeros, *backends.image_conv)),
                      vec(encode_image_conv(zeros, *backends.image_conv))));

  SUBCASE("fixed 4-pixel image through a conv stub") {
    StubImageEncoder conv("stub-image_conv-v1", EncoderRole::image_conv, 16);
    ImageTensor tiny(2, 2, 1);
    tiny.data = {0.0f, 0.25f, 0.5f, 1.0f};
    const auto got = conv.encode(tiny);
    CHECK(bitwise_equal(got.values, oracle::stub("stub-image_conv-v1", image_bytes_oracle(tiny), 16)));
  }
  SUBCASE("wrong shape is named") {
    const ImageTensor small(10, 12, 3);
    CHECK_THROWS_WITH_AS(encode_image_patch(small, *backends.image_patch), doctest::Contains("10x12x3"), ShapeError);
    CHECK_THROWS_AS(encode_image_patch(img, *backends.image_conv), EncoderError);
  }
}

TEST_CASE("multimodal stub hashes text bytes followed by image bytes") {
  const auto backends = make_stub_backends();
  const auto a = testing::random_image(1);
  const auto b = testing::random_image(2);
  auto bytes = oracle::utf8("some text");
  const auto ib = image_bytes_oracle(a);
  bytes.insert(bytes.end(), ib.begin(), ib.end());
  const auto& id = backends.multimodal->descriptor().backend_id;
  const auto va = encode_multimodal("some text", &a, *backends.multimodal);
  CHECK(bitwise_equal(va.values, oracle::stub(id, bytes, 768)));
  CHECK_FALSE(bitwise_equal(va.values, encode_multimodal("some text", &b, *backends.multimodal).values));
  CHECK_THROWS_AS(encode_multimodal(std::nullopt, &a, *backends.multimodal), EncoderError);
  CHECK_THROWS_AS(encode_multimodal("some text", nullptr, *backends.multimodal), EncoderError);
}

TEST_CASE("caption stub and caption pathway composition") {
  const auto backends = make_stub_backends();
  const auto img = testing::random_image(5);
  const auto bytes = img.canonical_bytes();
  const auto expected = "stub caption " + to_hex(sha256(bytes)).substr(0, 8);
  const auto cap = generate_caption(img, *backends.caption_gen);
  CHECK(cap == expected);
  CHECK(generate_caption(testing::random_image(5), *backends.caption_gen) == cap);

  WhitespaceTokenizer tok;
  const auto direct =
      encode_text_cls(tokenize_with_specials(cap, tok), *backends.caption_text, EncoderRole::caption_text);
  const auto composed = encode_caption(img, *backends.caption_gen, *backends.caption_text);
  CHECK(bitwise_equal(direct.values, composed.values));
  CHECK(bitwise_equal(composed.values,
                      oracle::stub(backends.caption_text->descriptor().backend_id, oracle::utf8(expected), 768)));
  CHECK_FALSE(bitwise_equal(
      composed.values, encode_caption(testing::random_image(6), *backends.caption_gen, *backends.caption_text).values));
}

TEST_CASE("cached_encode") {
  testing::TempDir dir;
  std::vector<std::string> warnings;
  EmbeddingCache cache(dir.path(), [&](const std::string& w) { warnings.push_back(w); });
  StubTextEncoder enc("stub-text_english-v1", EncoderRole::text_english, 64);
  WhitespaceTokenizer tok;
  const auto seq = tokenize_with_specials("cache me", tok);
  const auto key = FeatureCacheKey::from_bytes(text_bytes("cache me"), enc.descriptor().backend_id, "1");
  int computed = 0;
  auto compute = [&] {
    ++computed;
    return enc.encode_cls(seq);
  };

  const auto first = cached_encode(key, enc.descriptor(), compute, cache);
  const auto second = cached_encode(key, enc.descriptor(), compute, cache);
  CHECK(computed == 1);
  CHECK(bitwise_equal(first.values, second.values));
  CHECK(bitwise_equal(second.values, enc.encode_cls(seq).values));
  const auto path = cache.path_for(key);
  CHECK(path == dir.path() / "stub-text_english-v1" / "1" / (key.hex() + ".vec"));
  CHECK(std::filesystem::file_size(path) == 16 + 64 * 4);

  SUBCASE("record layout") {
    std::ifstream in(path, std::ios::binary);
    char header[16];
    in.read(header, 16);
    CHECK(std::string(header, 4) == "MMFV");
    std::uint32_t dim, dtype, marker;
    std::memcpy(&dim, header + 4, 4);
    std::memcpy(&dtype, header + 8, 4);
    std::memcpy(&marker, header + 12, 4);
    CHECK(dim == 64);
    CHECK(dtype == 1);
    CHECK(marker == 0x01020304u);
  }
  SUBCASE("corrupt record is recomputed with a warning") {
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << "MMFVgarbage";
    }
    const auto again = cached_encode(key, enc.descriptor(), compute, cache);
    CHECK(computed == 2);
    CHECK(bitwise_equal(again.values, first.values));
    CHECK(warnings.size() == 1);
    CHECK(cache.recoveries() == 1);
    CHECK(cache.lookup(key, 64).status == EmbeddingCache::Status::hit);
  }
}

TEST_CASE("concurrent writers of one key agree") {
  testing::TempDir dir;
  StubImageEncoder enc("stub-image_patch-v1", EncoderRole::image_patch, 768);
  const auto img = testing::random_image(77);
  const auto key = FeatureCacheKey::from_bytes(img.canonical_bytes(), enc.descriptor().backend_id, "1");
  const auto reference = enc.encode(img).values;

  std::vector<pid_t> children;
  for (int p = 0; p < 3; ++p) {
    const pid_t pid = fork();
    if (pid == 0) {
      EmbeddingCache c(dir.path(), [](const std::string&) {});
      for (int i = 0; i < 20; ++i) c.store(key, reference);
      _exit(0);
    }
    children.push_back(pid);
  }
  EmbeddingCache cache(dir.path(), [](const std::string&) {});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 20; ++i) cached_encode(key, enc.descriptor(), [&] { return enc.encode(img); }, cache);
    });
  }
  for (auto& t : threads) t.join();
  for (auto pid : children) {
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
  }
  const auto final_record = cache.lookup(key, 768);
  REQUIRE(final_record.status == EmbeddingCache::Status::hit);
  CHECK(bitwise_equal(final_record.values, reference));
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("hub caches transparently and counts backend calls") {
  testing::TempDir dir;
  auto cache = std::make_shared<EmbeddingCache>(dir.path(), [](const std::string&) {});
  EncoderHub cached(make_stub_backends(), 200, cache);
  EncoderHub direct(make_stub_backends(), 200);
  const auto img = testing::random_image(8);

  for (int round = 0; round < 2; ++round) {
    CHECK(bitwise_equal(cached.text_cls(EncoderRole::text_indic, "भारत").values,
                        direct.text_cls(EncoderRole::text_indic, "भारत").values));
    CHECK(bitwise_equal(cached.image(EncoderRole::image_conv, img).values,
                        direct.image(EncoderRole::image_conv, img).values));
    CHECK(bitwise_equal(cached.multimodal("x", img).values, direct.multimodal("x", img).values));
    CHECK(bitwise_equal(cached.caption(img).values, direct.caption(img).values));
  }
  CHECK(cached.calls(EncoderRole::text_indic) == 1);
  CHECK(cached.calls(EncoderRole::image_conv) == 1);
  CHECK(cached.calls(EncoderRole::multimodal) == 1);
  CHECK(cached.calls(EncoderRole::caption_gen) == 1);
  CHECK(direct.calls(EncoderRole::text_indic) == 2);
  CHECK_THROWS_AS(direct.text_cls(EncoderRole::image_conv, "x"), EncoderError);
}
