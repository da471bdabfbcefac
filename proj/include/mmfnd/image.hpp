#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmfnd {

inline constexpr int kImageSide = 224;
inline constexpr int kImageChannels = 3;

/// Row-major HWC float image, values in [0, 1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c) : height(h), width(w), channels(c), data(std::size_t(h) * w * c, 0.0f) {}

  float& at(int y, int x, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(std::size_t(y) * width + x) * channels + c]; }

  bool has_model_shape() const noexcept {
    return height == kImageSide && width == kImageSide && channels == kImageChannels;
  }
  std::string shape_string() const;

  /// Little-endian float32 bytes in row-major order; the canonical encoder input.
  std::vector<std::byte> canonical_bytes() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Decodes PNG/JPEG/BMP/PNM bytes and resizes (bilinear) to 224x224x3.
/// Single-channel input is replicated to three channels first; alpha is dropped.
/// Throws ImageDecodeError("image decode failed") carrying `article_id`.
ImageTensor preprocess_image(std::span<const std::uint8_t> image_bytes, std::string_view article_id = {});

/// True when the bytes decode to a raster image.
bool is_decodable_image(std::span<const std::uint8_t> image_bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Binary tensor file: "MTEN" magic, u32 height, width, channels, then float32 LE data.
void save_tensor(const ImageTensor& img, const std::filesystem::path& path);
ImageTensor load_tensor(const std::filesystem::path& path);

/// Loads a `.tensor` file as-is, or decodes and preprocesses any other image file.
ImageTensor load_image(const std::filesystem::path& path, std::string_view article_id = {});

}  // namespace mmfnd
