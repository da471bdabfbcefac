#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "mmfnd/hashing.hpp"
#include "mmfnd/image.hpp"

namespace testing {

/// Directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mmfnd") {
    static std::uint64_t counter = 0;
    const auto stamp = std::to_string(std::random_device{}()) + "-" + std::to_string(counter++);
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + stamp);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline mmfnd::ImageTensor random_image(std::uint64_t seed, int side = mmfnd::kImageSide) {
  mmfnd::ImageTensor img(side, side, 3);
  mmfnd::SplitMix64 rng(seed);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace testing
