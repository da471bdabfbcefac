#include "mmfnd/cache.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "mmfnd/error.hpp"
#include "mmfnd/image.hpp"

namespace mmfnd {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'F', 'V'};
constexpr std::uint32_t kDtypeFloat32 = 1;
constexpr std::uint32_t kEndianMarker = 0x01020304;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::byte>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

void check_path_component(const std::string& s, const char* what) {
  if (s.empty() || s == "." || s == ".." || s.find('/') != std::string::npos ||
      s.find('\\') != std::string::npos || s.find('\0') != std::string::npos) {
    throw Error(std::string("invalid cache ") + what + ": '" + s + "'");
  }
}

std::string temp_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream ss;
  ss << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
     << counter.fetch_add(1);
  return ss.str();
}

}  // namespace

FeatureCacheKey FeatureCacheKey::from_bytes(std::span<const std::byte> canonical, std::string backend_id,
                                            std::string version) {
  return {sha256(canonical), std::move(backend_id), std::move(version)};
}

std::vector<std::byte> encode_cache_record(std::span<const float> values) {
  std::vector<std::byte> out;
  out.reserve(16 + values.size() * 4);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, static_cast<std::uint32_t>(values.size()));
  put_u32(out, kDtypeFloat32);
  put_u32(out, kEndianMarker);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path root, WarningSink warn)
    : root_(std::move(root)), warn_(std::move(warn)) {}

void EmbeddingCache::warn(const std::string& message) const {
  if (warn_) {
    warn_(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

std::filesystem::path EmbeddingCache::path_for(const FeatureCacheKey& key) const {
  check_path_component(key.backend_id, "backend_id");
  check_path_component(key.version, "version");
  return root_ / key.backend_id / key.version / (key.hex() + ".vec");
}

EmbeddingCache::Lookup EmbeddingCache::lookup(const FeatureCacheKey& key, int expected_dim) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {Status::miss, {}, {}};

  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& e) {
    return {Status::corrupt, {}, e.what()};
  }
  auto corrupt = [&](const std::string& why) { return Lookup{Status::corrupt, {}, why + ": " + path.string()}; };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) return corrupt("bad cache header");
  const auto dim = get_u32(bytes.data() + 4);
  if (get_u32(bytes.data() + 8) != kDtypeFloat32) return corrupt("unsupported cache dtype");
  if (get_u32(bytes.data() + 12) != kEndianMarker) return corrupt("bad endianness marker");
  if (expected_dim > 0 && dim != static_cast<std::uint32_t>(expected_dim)) return corrupt("cache dim mismatch");
  if (bytes.size() != 16 + std::size_t(dim) * 4) return corrupt("truncated cache record");

  std::vector<float> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
    if (!std::isfinite(values[i])) return corrupt("non-finite value in cache record");
  }
  return {Status::hit, std::move(values), {}};
}

void EmbeddingCache::store(const FeatureCacheKey& key, std::span<const float> values) const {
  const auto path = path_for(key);
  std::filesystem::create_directories(path.parent_path());
  const auto record = encode_cache_record(values);
  auto tmp = path;
  tmp += temp_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache record: " + tmp.string());
    out.write(reinterpret_cast<const char*>(record.data()), static_cast<std::streamsize>(record.size()));
    if (!out) throw Error("failed writing cache record: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot publish cache record: " + path.string());
  }
}

Embedding cached_encode(const FeatureCacheKey& key, const EncoderBackendDescriptor& producer,
                        const std::function<Embedding()>& compute, EmbeddingCache& cache) {
  auto found = cache.lookup(key, producer.output_dim);
  if (found.status == EmbeddingCache::Status::hit) {
    ++cache.hits_;
    return {std::move(found.values), producer};
  }
  if (found.status == EmbeddingCache::Status::corrupt) {
    ++cache.recoveries_;
    cache.warn("corrupt cache record, recomputing (" + found.detail + ")");
  } else {
    ++cache.misses_;
  }
  Embedding e = compute();
  cache.store(key, e.values);
  return e;
}

}  // namespace mmfnd
