#include "mmfnd/encoders.hpp"

#include <cmath>
#include <cstring>

#include "mmfnd/error.hpp"
#include "mmfnd/text.hpp"

namespace mmfnd {

std::string_view to_string(EncoderRole role) noexcept {
  switch (role) {
    case EncoderRole::text_indic: return "text_indic";
    case EncoderRole::text_english: return "text_english";
    case EncoderRole::image_patch: return "image_patch";
    case EncoderRole::image_conv: return "image_conv";
    case EncoderRole::multimodal: return "multimodal";
    case EncoderRole::caption_gen: return "caption_gen";
    case EncoderRole::caption_text: return "caption_text";
  }
  return "unknown";
}

EncoderRole parse_encoder_role(std::string_view name) {
  for (auto r : {EncoderRole::text_indic, EncoderRole::text_english, EncoderRole::image_patch,
                 EncoderRole::image_conv, EncoderRole::multimodal, EncoderRole::caption_gen,
                 EncoderRole::caption_text}) {
    if (to_string(r) == name) return r;
  }
  throw EncoderError("unknown encoder role '" + std::string(name) + "'");
}

int TokenSequence::real_length() const noexcept {
  int n = 0;
  for (auto m : attention_mask) n += m;
  return n;
}

std::vector<std::int32_t> WhitespaceTokenizer::encode(std::string_view text) const {
  std::vector<std::int32_t> ids;
  const auto cps = decode_utf8(text);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    ids.push_back(kFirstWordId + static_cast<std::int32_t>(fnv1a64(word) % kWordBuckets));
    word.clear();
  };
  for (char32_t cp : cps) {
    if (is_unicode_whitespace(cp)) {
      flush();
    } else {
      append_utf8(word, cp);
    }
  }
  flush();
  return ids;
}

TokenSequence tokenize_with_specials(std::string_view text, const Tokenizer& tokenizer, int n_max) {
  if (n_max < 2) throw EncoderError("n_max must be at least 2, got " + std::to_string(n_max));
  auto content = tokenizer.encode(text);
  const auto keep = std::min<std::size_t>(content.size(), static_cast<std::size_t>(n_max - 2));

  TokenSequence seq;
  seq.n_max = n_max;
  seq.text = std::string(text);
  seq.tokens.assign(static_cast<std::size_t>(n_max), tokenizer.pad_id());
  seq.attention_mask.assign(static_cast<std::size_t>(n_max), 0);
  seq.tokens[0] = tokenizer.cls_id();
  for (std::size_t i = 0; i < keep; ++i) seq.tokens[i + 1] = content[i];
  seq.tokens[keep + 1] = tokenizer.sep_id();
  for (std::size_t i = 0; i < keep + 2; ++i) seq.attention_mask[i] = 1;
  return seq;
}

std::uint64_t stub_seed(std::string_view backend_id, std::span<const std::byte> canonical) {
  Fnv1a64 h;
  h.update(backend_id);
  h.update_byte(0x1F);
  h.update(canonical);
  return h.digest();
}

void stub_fill(SplitMix64& stream, std::span<float> out) {
  std::vector<double> raw(out.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double u = static_cast<double>(stream.next() >> 11) * 0x1.0p-52;
    raw[i] = u * 2.0 - 1.0;
    sq += raw[i] * raw[i];
  }
  const double norm = std::sqrt(sq);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = norm > 0.0 ? static_cast<float>(raw[i] / norm) : 0.0f;
  }
}

std::vector<float> stub_vector(std::string_view backend_id, std::span<const std::byte> canonical, int dim) {
  SplitMix64 stream(stub_seed(backend_id, canonical));
  std::vector<float> v(static_cast<std::size_t>(dim));
  stub_fill(stream, v);
  return v;
}

std::vector<std::byte> text_bytes(std::string_view text) {
  const auto* p = reinterpret_cast<const std::byte*>(text.data());
  return {p, p + text.size()};
}

std::vector<std::byte> multimodal_bytes(std::string_view text_en, const ImageTensor& img) {
  auto bytes = text_bytes(text_en);
  const auto image = img.canonical_bytes();
  bytes.insert(bytes.end(), image.begin(), image.end());
  return bytes;
}

namespace {

EncoderBackendDescriptor make_descriptor(std::string id, EncoderRole role, int dim, std::string version) {
  if (dim <= 0) throw EncoderError("output_dim must be positive for backend " + id);
  return {std::move(id), role, dim, std::move(version), true, false};
}

bool is_text_role(EncoderRole r) {
  return r == EncoderRole::text_indic || r == EncoderRole::text_english || r == EncoderRole::caption_text;
}

void require_role(const EncoderBackendDescriptor& d, EncoderRole expected) {
  if (d.role != expected) {
    throw EncoderError("role mismatch: backend '" + d.backend_id + "' has role " + std::string(to_string(d.role)) +
                       ", expected " + std::string(to_string(expected)));
  }
}

void check_embedding(const Embedding& e, const EncoderBackendDescriptor& d) {
  if (e.dim() != static_cast<std::size_t>(d.output_dim)) {
    throw EncoderError("backend '" + d.backend_id + "' returned " + std::to_string(e.dim()) +
                       " values, declared output_dim " + std::to_string(d.output_dim));
  }
  for (float v : e.values) {
    if (!std::isfinite(v)) throw EncoderError("backend '" + d.backend_id + "' returned a non-finite value");
  }
}

}  // namespace

StubTextEncoder::StubTextEncoder(std::string backend_id, EncoderRole role, int dim, std::string version)
    : desc_(make_descriptor(std::move(backend_id), role, dim, std::move(version))) {
  if (!is_text_role(role)) throw EncoderError("StubTextEncoder needs a text role");
}

TextEncoding StubTextEncoder::encode(const TokenSequence& seq) const {
  const auto bytes = text_bytes(seq.text);
  SplitMix64 stream(stub_seed(desc_.backend_id, bytes));
  TextEncoding out;
  out.last_hidden.rows = seq.n_max;
  out.last_hidden.cols = desc_.output_dim;
  out.last_hidden.values.resize(static_cast<std::size_t>(seq.n_max) * desc_.output_dim);
  for (int r = 0; r < seq.n_max; ++r) {
    stub_fill(stream, std::span<float>(out.last_hidden.values.data() + static_cast<std::size_t>(r) * desc_.output_dim,
                                       static_cast<std::size_t>(desc_.output_dim)));
  }
  const auto row0 = out.last_hidden.row(0);
  out.cls.values.assign(row0.begin(), row0.end());
  out.cls.producer = desc_;
  return out;
}

Embedding StubTextEncoder::encode_cls(const TokenSequence& seq) const {
  return {stub_vector(desc_.backend_id, text_bytes(seq.text), desc_.output_dim), desc_};
}

StubImageEncoder::StubImageEncoder(std::string backend_id, EncoderRole role, int dim, std::string version)
    : desc_(make_descriptor(std::move(backend_id), role, dim, std::move(version))) {
  if (role != EncoderRole::image_patch && role != EncoderRole::image_conv) {
    throw EncoderError("StubImageEncoder needs an image role");
  }
}

Embedding StubImageEncoder::encode(const ImageTensor& img) const {
  return {stub_vector(desc_.backend_id, img.canonical_bytes(), desc_.output_dim), desc_};
}

StubMultimodalEncoder::StubMultimodalEncoder(std::string backend_id, int dim, std::string version)
    : desc_(make_descriptor(std::move(backend_id), EncoderRole::multimodal, dim, std::move(version))) {}

Embedding StubMultimodalEncoder::encode(std::string_view text_en, const ImageTensor& img) const {
  return {stub_vector(desc_.backend_id, multimodal_bytes(text_en, img), desc_.output_dim), desc_};
}

StubCaptionGenerator::StubCaptionGenerator(std::string backend_id, std::string version)
    : desc_(make_descriptor(std::move(backend_id), EncoderRole::caption_gen, 1, std::move(version))) {}

std::string StubCaptionGenerator::generate(const ImageTensor& img) const {
  const auto digest = sha256(img.canonical_bytes());
  return "stub caption " + to_hex(std::span(digest).first(4));
}

void BackendSet::validate() const {
  auto check = [](const EncoderBackend* b, EncoderRole role) {
    if (b == nullptr) throw EncoderError("no backend assigned for role " + std::string(to_string(role)));
    require_role(b->descriptor(), role);
    if (b->descriptor().output_dim <= 0) {
      throw EncoderError("backend '" + b->descriptor().backend_id + "' has non-positive output_dim");
    }
  };
  check(text_indic.get(), EncoderRole::text_indic);
  check(text_english.get(), EncoderRole::text_english);
  check(image_conv.get(), EncoderRole::image_conv);
  check(image_patch.get(), EncoderRole::image_patch);
  check(multimodal.get(), EncoderRole::multimodal);
  check(caption_gen.get(), EncoderRole::caption_gen);
  check(caption_text.get(), EncoderRole::caption_text);
}

std::vector<EncoderBackendDescriptor> BackendSet::descriptors() const {
  std::vector<EncoderBackendDescriptor> out;
  for (const EncoderBackend* b : std::initializer_list<const EncoderBackend*>{
           text_indic.get(), text_english.get(), image_conv.get(), image_patch.get(), multimodal.get(),
           caption_gen.get(), caption_text.get()}) {
    if (b) out.push_back(b->descriptor());
  }
  return out;
}

BackendSet make_stub_backends(const StubDims& dims) {
  BackendSet s;
  s.text_indic = std::make_shared<StubTextEncoder>("stub-text_indic-v1", EncoderRole::text_indic, dims.text_indic);
  s.text_english =
      std::make_shared<StubTextEncoder>("stub-text_english-v1", EncoderRole::text_english, dims.text_english);
  s.image_conv = std::make_shared<StubImageEncoder>("stub-image_conv-v1", EncoderRole::image_conv, dims.image_conv);
  s.image_patch =
      std::make_shared<StubImageEncoder>("stub-image_patch-v1", EncoderRole::image_patch, dims.image_patch);
  s.multimodal = std::make_shared<StubMultimodalEncoder>("stub-multimodal-v1", dims.multimodal);
  s.caption_gen = std::make_shared<StubCaptionGenerator>("stub-caption_gen-v1");
  s.caption_text =
      std::make_shared<StubTextEncoder>("stub-caption_text-v1", EncoderRole::caption_text, dims.caption_text);
  return s;
}

void require_model_image(const ImageTensor& img) {
  if (!img.has_model_shape() || img.data.size() != std::size_t(kImageSide) * kImageSide * kImageChannels) {
    throw ShapeError("expected a 224x224x3 image, got " + img.shape_string());
  }
}

TextEncoding encode_text(const TokenSequence& seq, const TextEncoder& backend, EncoderRole expected_role) {
  if (!is_text_role(expected_role)) {
    throw EncoderError("encode_text requested with non-text role " + std::string(to_string(expected_role)));
  }
  require_role(backend.descriptor(), expected_role);
  auto out = backend.encode(seq);
  const auto& d = backend.descriptor();
  if (out.last_hidden.rows != seq.n_max || out.last_hidden.cols != d.output_dim ||
      out.last_hidden.values.size() != static_cast<std::size_t>(seq.n_max) * d.output_dim) {
    throw ShapeError("backend '" + d.backend_id + "' returned a malformed hidden-state matrix");
  }
  check_embedding(out.cls, d);
  return out;
}

Embedding encode_text_cls(const TokenSequence& seq, const TextEncoder& backend, EncoderRole expected_role) {
  if (!is_text_role(expected_role)) {
    throw EncoderError("encode_text requested with non-text role " + std::string(to_string(expected_role)));
  }
  require_role(backend.descriptor(), expected_role);
  auto e = backend.encode_cls(seq);
  check_embedding(e, backend.descriptor());
  return e;
}

Embedding encode_image_patch(const ImageTensor& img, const ImageEncoder& backend) {
  require_role(backend.descriptor(), EncoderRole::image_patch);
  require_model_image(img);
  auto e = backend.encode(img);
  check_embedding(e, backend.descriptor());
  return e;
}

Embedding encode_image_conv(const ImageTensor& img, const ImageEncoder& backend) {
  require_role(backend.descriptor(), EncoderRole::image_conv);
  require_model_image(img);
  auto e = backend.encode(img);
  check_embedding(e, backend.descriptor());
  return e;
}

Embedding encode_multimodal(std::optional<std::string_view> text_en, const ImageTensor* img,
                            const MultimodalEncoder& backend) {
  require_role(backend.descriptor(), EncoderRole::multimodal);
  if (!text_en) throw EncoderError("multimodal encoder requires English text");
  if (img == nullptr) throw EncoderError("multimodal encoder requires an image");
  require_model_image(*img);
  auto e = backend.encode(*text_en, *img);
  check_embedding(e, backend.descriptor());
  return e;
}

std::string generate_caption(const ImageTensor& img, const CaptionGenerator& backend, std::string_view article_id) {
  require_role(backend.descriptor(), EncoderRole::caption_gen);
  require_model_image(img);
  std::string caption;
  try {
    caption = backend.generate(img);
  } catch (const std::exception& e) {
    throw EncoderError(std::string("caption generation failed: ") + e.what(), std::string(article_id));
  }
  if (caption.empty()) throw EncoderError("caption generator returned an empty caption", std::string(article_id));
  return caption;
}

Embedding encode_caption(const ImageTensor& img, const CaptionGenerator& generator, const TextEncoder& text_backend,
                         int n_max, std::string_view article_id) {
  const auto caption = generate_caption(img, generator, article_id);
  const auto seq = tokenize_with_specials(caption, text_backend.tokenizer(), n_max);
  return encode_text_cls(seq, text_backend, EncoderRole::caption_text);
}

}  // namespace mmfnd
