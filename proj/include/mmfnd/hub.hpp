#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <string_view>

#include "mmfnd/cache.hpp"
#include "mmfnd/encoders.hpp"

namespace mmfnd {

/// Routes encoder requests for every role through one place: role and shape
/// checks, the optional embedding cache, and serialization of exclusive backends.
class EncoderHub {
 public:
  explicit EncoderHub(BackendSet backends, int n_max = kDefaultMaxTokens,
                      std::shared_ptr<EmbeddingCache> cache = nullptr);

  const BackendSet& backends() const noexcept { return backends_; }
  int n_max() const noexcept { return n_max_; }
  EmbeddingCache* cache() const noexcept { return cache_.get(); }

  /// Class-token vector of `text` from the text_indic, text_english or caption_text backend.
  Embedding text_cls(EncoderRole role, std::string_view text) const;
  /// image_conv or image_patch.
  Embedding image(EncoderRole role, const ImageTensor& img) const;
  Embedding multimodal(std::string_view text_en, const ImageTensor& img) const;
  Embedding caption(const ImageTensor& img, std::string_view article_id = {}) const;

  /// Number of times the backend of `role` was actually invoked (cache hits excluded).
  std::size_t calls(EncoderRole role) const noexcept;

 private:
  static constexpr std::size_t kRoles = 7;

  std::unique_lock<std::mutex> guard(const EncoderBackend& backend, EncoderRole role) const;
  Embedding through_cache(const FeatureCacheKey& key, const EncoderBackendDescriptor& producer,
                          const std::function<Embedding()>& compute) const;

  BackendSet backends_;
  int n_max_;
  std::shared_ptr<EmbeddingCache> cache_;
  mutable std::array<std::mutex, kRoles> locks_;
  mutable std::array<std::atomic<std::size_t>, kRoles> calls_{};
};

}  // namespace mmfnd
