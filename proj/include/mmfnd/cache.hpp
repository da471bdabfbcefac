#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmfnd/encoders.hpp"
#include "mmfnd/hashing.hpp"

namespace mmfnd {

struct FeatureCacheKey {
  Sha256Digest content_hash{};
  std::string backend_id;
  std::string version;

  static FeatureCacheKey from_bytes(std::span<const std::byte> canonical, std::string backend_id,
                                    std::string version);
  std::string hex() const { return to_hex(content_hash); }
  friend bool operator==(const FeatureCacheKey&, const FeatureCacheKey&) = default;
};

/// Content-addressed store of embedding vectors.
///
/// Layout: <root>/<backend_id>/<version>/<hex sha256>.vec. Each file is a
/// 16-byte header ("MMFV", u32 dim, u32 dtype=1 for float32, u32 0x01020304
/// endianness marker, all little-endian) followed by dim float32 values.
/// Writes go to a unique temp file and are renamed into place, so concurrent
/// writers of one key never expose a partial record.
class EmbeddingCache {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit EmbeddingCache(std::filesystem::path root, WarningSink warn = {});

  enum class Status { hit, miss, corrupt };
  struct Lookup {
    Status status = Status::miss;
    std::vector<float> values;
    std::string detail;
  };

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path_for(const FeatureCacheKey& key) const;
  Lookup lookup(const FeatureCacheKey& key, int expected_dim) const;
  void store(const FeatureCacheKey& key, std::span<const float> values) const;
  void warn(const std::string& message) const;

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }
  std::size_t recoveries() const noexcept { return recoveries_; }

 private:
  friend Embedding cached_encode(const FeatureCacheKey&, const EncoderBackendDescriptor&,
                                 const std::function<Embedding()>&, EmbeddingCache&);

  std::filesystem::path root_;
  WarningSink warn_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
  mutable std::atomic<std::size_t> recoveries_{0};
};

/// Returns the stored vector on a hit. On a miss computes, persists and
/// returns. A corrupt record is recomputed, overwritten and reported through
/// the cache's warning sink.
Embedding cached_encode(const FeatureCacheKey& key, const EncoderBackendDescriptor& producer,
                        const std::function<Embedding()>& compute, EmbeddingCache& cache);

std::vector<std::byte> encode_cache_record(std::span<const float> values);

}  // namespace mmfnd
