#include "mmfnd/hub.hpp"

#include "mmfnd/error.hpp"

namespace mmfnd {

namespace {

std::size_t role_index(EncoderRole role) { return static_cast<std::size_t>(role); }

std::string text_version(const EncoderBackendDescriptor& d, int n_max) {
  return d.version + "-n" + std::to_string(n_max);
}

}  // namespace

EncoderHub::EncoderHub(BackendSet backends, int n_max, std::shared_ptr<EmbeddingCache> cache)
    : backends_(std::move(backends)), n_max_(n_max), cache_(std::move(cache)) {
  backends_.validate();
  if (n_max_ < 2) throw EncoderError("n_max must be at least 2, got " + std::to_string(n_max_));
}

std::size_t EncoderHub::calls(EncoderRole role) const noexcept { return calls_[role_index(role)]; }

std::unique_lock<std::mutex> EncoderHub::guard(const EncoderBackend& backend, EncoderRole role) const {
  ++calls_[role_index(role)];
  if (backend.descriptor().exclusive) return std::unique_lock(locks_[role_index(role)]);
  return {};
}

Embedding EncoderHub::through_cache(const FeatureCacheKey& key, const EncoderBackendDescriptor& producer,
                                    const std::function<Embedding()>& compute) const {
  if (!cache_) return compute();
  return cached_encode(key, producer, compute, *cache_);
}

Embedding EncoderHub::text_cls(EncoderRole role, std::string_view text) const {
  const TextEncoder* backend = nullptr;
  switch (role) {
    case EncoderRole::text_indic: backend = backends_.text_indic.get(); break;
    case EncoderRole::text_english: backend = backends_.text_english.get(); break;
    case EncoderRole::caption_text: backend = backends_.caption_text.get(); break;
    default: throw EncoderError("text_cls called with non-text role " + std::string(to_string(role)));
  }
  const auto& d = backend->descriptor();
  auto compute = [&] {
    auto lock = guard(*backend, role);
    const auto seq = tokenize_with_specials(text, backend->tokenizer(), n_max_);
    return encode_text_cls(seq, *backend, role);
  };
  if (!cache_) return compute();
  return through_cache(FeatureCacheKey::from_bytes(text_bytes(text), d.backend_id, text_version(d, n_max_)), d,
                       compute);
}

Embedding EncoderHub::image(EncoderRole role, const ImageTensor& img) const {
  require_model_image(img);
  const ImageEncoder* backend = nullptr;
  switch (role) {
    case EncoderRole::image_conv: backend = backends_.image_conv.get(); break;
    case EncoderRole::image_patch: backend = backends_.image_patch.get(); break;
    default: throw EncoderError("image called with non-image role " + std::string(to_string(role)));
  }
  const auto& d = backend->descriptor();
  auto compute = [&] {
    auto lock = guard(*backend, role);
    return role == EncoderRole::image_conv ? encode_image_conv(img, *backend) : encode_image_patch(img, *backend);
  };
  if (!cache_) return compute();
  return through_cache(FeatureCacheKey::from_bytes(img.canonical_bytes(), d.backend_id, d.version), d, compute);
}

Embedding EncoderHub::multimodal(std::string_view text_en, const ImageTensor& img) const {
  require_model_image(img);
  const auto& backend = *backends_.multimodal;
  const auto& d = backend.descriptor();
  auto compute = [&] {
    auto lock = guard(backend, EncoderRole::multimodal);
    return encode_multimodal(text_en, &img, backend);
  };
  if (!cache_) return compute();
  return through_cache(FeatureCacheKey::from_bytes(multimodal_bytes(text_en, img), d.backend_id, d.version), d,
                       compute);
}

Embedding EncoderHub::caption(const ImageTensor& img, std::string_view article_id) const {
  require_model_image(img);
  const auto& gen = *backends_.caption_gen;
  const auto& text = *backends_.caption_text;
  const auto& d = text.descriptor();
  auto compute = [&] {
    std::string caption;
    {
      auto lock = guard(gen, EncoderRole::caption_gen);
      caption = generate_caption(img, gen, article_id);
    }
    auto lock = guard(text, EncoderRole::caption_text);
    const auto seq = tokenize_with_specials(caption, text.tokenizer(), n_max_);
    return encode_text_cls(seq, text, EncoderRole::caption_text);
  };
  if (!cache_) return compute();
  const auto& g = gen.descriptor();
  return through_cache(FeatureCacheKey::from_bytes(img.canonical_bytes(), g.backend_id + "+" + d.backend_id,
                                                   g.version + "+" + text_version(d, n_max_)),
                       d, compute);
}

}  // namespace mmfnd
