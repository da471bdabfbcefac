#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfnd/hashing.hpp"
#include "mmfnd/image.hpp"

namespace mmfnd {

enum class EncoderRole { text_indic, text_english, image_patch, image_conv, multimodal, caption_gen, caption_text };

std::string_view to_string(EncoderRole role) noexcept;
EncoderRole parse_encoder_role(std::string_view name);

struct EncoderBackendDescriptor {
  std::string backend_id;
  EncoderRole role = EncoderRole::text_indic;
  int output_dim = 0;
  std::string version;
  bool deterministic = true;
  /// Backend cannot serve concurrent calls; the hub serializes access.
  bool exclusive = false;

  friend bool operator==(const EncoderBackendDescriptor&, const EncoderBackendDescriptor&) = default;
};

struct Embedding {
  std::vector<float> values;
  EncoderBackendDescriptor producer;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Last hidden state, one row per token position.
struct EmbeddingMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  std::span<const float> row(int r) const {
    return {values.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
};

struct TokenSequence {
  std::vector<std::int32_t> tokens;
  std::vector<std::uint8_t> attention_mask;
  int n_max = 0;
  /// Text the sequence was built from; stub encoders hash this.
  std::string text;

  int real_length() const noexcept;
};

inline constexpr int kDefaultMaxTokens = 200;

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::int32_t> encode(std::string_view text) const = 0;
  virtual std::int32_t cls_id() const = 0;
  virtual std::int32_t sep_id() const = 0;
  virtual std::int32_t pad_id() const = 0;
};

/// Splits on Unicode whitespace and hashes each word into a fixed id range.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kCls = 101;
  static constexpr std::int32_t kSep = 102;
  static constexpr std::int32_t kFirstWordId = 1000;
  static constexpr std::uint32_t kWordBuckets = 100000;

  std::vector<std::int32_t> encode(std::string_view text) const override;
  std::int32_t cls_id() const override { return kCls; }
  std::int32_t sep_id() const override { return kSep; }
  std::int32_t pad_id() const override { return kPad; }
};

/// [CLS] + content + [SEP], content truncated (earliest tokens kept) so the
/// total fits n_max, then padded to exactly n_max.
TokenSequence tokenize_with_specials(std::string_view text, const Tokenizer& tokenizer,
                                     int n_max = kDefaultMaxTokens);

// Backend contracts. Implementations must be safe for concurrent const calls
// unless their descriptor sets `exclusive`.

class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual const EncoderBackendDescriptor& descriptor() const = 0;
};

struct TextEncoding {
  EmbeddingMatrix last_hidden;
  Embedding cls;
};

class TextEncoder : public EncoderBackend {
 public:
  virtual const Tokenizer& tokenizer() const = 0;
  virtual TextEncoding encode(const TokenSequence& seq) const = 0;
  /// Class-token vector only; backends may override with a cheaper path.
  virtual Embedding encode_cls(const TokenSequence& seq) const { return encode(seq).cls; }
};

class ImageEncoder : public EncoderBackend {
 public:
  virtual Embedding encode(const ImageTensor& img) const = 0;
};

class MultimodalEncoder : public EncoderBackend {
 public:
  virtual Embedding encode(std::string_view text_en, const ImageTensor& img) const = 0;
};

class CaptionGenerator : public EncoderBackend {
 public:
  virtual std::string generate(const ImageTensor& img) const = 0;
};

// Deterministic stub backends.
//
// seed   = FNV-1a64(backend_id || 0x1F || canonical input bytes)
// stream = SplitMix64(seed)
// x_i    = ((next() >> 11) * 2^-52) * 2 - 1, then the vector is L2-normalized.
//
// Canonical bytes: text -> UTF-8; image -> little-endian float32 row-major;
// multimodal -> text bytes followed by image bytes.

inline constexpr int kStubTransformerDim = 768;
inline constexpr int kStubConvDim = 1024;

std::uint64_t stub_seed(std::string_view backend_id, std::span<const std::byte> canonical);
/// Fills `out` with L2-normalized stub components drawn from `stream`.
void stub_fill(SplitMix64& stream, std::span<float> out);
std::vector<float> stub_vector(std::string_view backend_id, std::span<const std::byte> canonical, int dim);

std::vector<std::byte> text_bytes(std::string_view text);
std::vector<std::byte> multimodal_bytes(std::string_view text_en, const ImageTensor& img);

class StubTextEncoder final : public TextEncoder {
 public:
  StubTextEncoder(std::string backend_id, EncoderRole role, int dim = kStubTransformerDim,
                  std::string version = "1");
  const EncoderBackendDescriptor& descriptor() const override { return desc_; }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  /// Row 0 is the class-token vector; later rows continue the same stream.
  TextEncoding encode(const TokenSequence& seq) const override;
  Embedding encode_cls(const TokenSequence& seq) const override;

 private:
  EncoderBackendDescriptor desc_;
  WhitespaceTokenizer tokenizer_;
};

class StubImageEncoder final : public ImageEncoder {
 public:
  StubImageEncoder(std::string backend_id, EncoderRole role, int dim, std::string version = "1");
  const EncoderBackendDescriptor& descriptor() const override { return desc_; }
  Embedding encode(const ImageTensor& img) const override;

 private:
  EncoderBackendDescriptor desc_;
};

class StubMultimodalEncoder final : public MultimodalEncoder {
 public:
  explicit StubMultimodalEncoder(std::string backend_id, int dim = kStubTransformerDim, std::string version = "1");
  const EncoderBackendDescriptor& descriptor() const override { return desc_; }
  Embedding encode(std::string_view text_en, const ImageTensor& img) const override;

 private:
  EncoderBackendDescriptor desc_;
};

/// Emits "stub caption <first 8 hex digits of SHA-256(image bytes)>".
class StubCaptionGenerator final : public CaptionGenerator {
 public:
  explicit StubCaptionGenerator(std::string backend_id, std::string version = "1");
  const EncoderBackendDescriptor& descriptor() const override { return desc_; }
  std::string generate(const ImageTensor& img) const override;

 private:
  EncoderBackendDescriptor desc_;
};

/// One backend per role.
struct BackendSet {
  std::shared_ptr<const TextEncoder> text_indic;
  std::shared_ptr<const TextEncoder> text_english;
  std::shared_ptr<const ImageEncoder> image_conv;
  std::shared_ptr<const ImageEncoder> image_patch;
  std::shared_ptr<const MultimodalEncoder> multimodal;
  std::shared_ptr<const CaptionGenerator> caption_gen;
  std::shared_ptr<const TextEncoder> caption_text;

  /// Throws EncoderError naming the first unassigned or mis-roled backend.
  void validate() const;
  std::vector<EncoderBackendDescriptor> descriptors() const;
};

struct StubDims {
  int text_indic = kStubTransformerDim;
  int text_english = kStubTransformerDim;
  int image_conv = kStubConvDim;
  int image_patch = kStubTransformerDim;
  int multimodal = kStubTransformerDim;
  int caption_text = kStubTransformerDim;
};

/// Stub backends for every role with ids "stub-<role>-v1".
BackendSet make_stub_backends(const StubDims& dims = {});

// Operations over single backends. Role mismatches and bad shapes throw.

TextEncoding encode_text(const TokenSequence& seq, const TextEncoder& backend, EncoderRole expected_role);
/// Row-0 vector of encode_text, without materializing the hidden-state matrix.
Embedding encode_text_cls(const TokenSequence& seq, const TextEncoder& backend, EncoderRole expected_role);
Embedding encode_image_patch(const ImageTensor& img, const ImageEncoder& backend);
Embedding encode_image_conv(const ImageTensor& img, const ImageEncoder& backend);
Embedding encode_multimodal(std::optional<std::string_view> text_en, const ImageTensor* img,
                            const MultimodalEncoder& backend);
std::string generate_caption(const ImageTensor& img, const CaptionGenerator& backend,
                             std::string_view article_id = {});
/// cls(encode_text(tokenize(generate_caption(img)))) from the caption-text backend.
Embedding encode_caption(const ImageTensor& img, const CaptionGenerator& generator, const TextEncoder& text_backend,
                         int n_max = kDefaultMaxTokens, std::string_view article_id = {});

/// Throws ShapeError unless the image is 224x224x3.
void require_model_image(const ImageTensor& img);

}  // namespace mmfnd
