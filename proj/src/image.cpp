#include "mmfnd/image.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mmfnd/error.hpp"

namespace mmfnd {

namespace {

static_assert(sizeof(float) == 4);

void write_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

cv::Mat decode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return {};
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  try {
    return cv::imdecode(buf, cv::IMREAD_UNCHANGED | cv::IMREAD_IGNORE_ORIENTATION);
  } catch (const cv::Exception&) {
    return {};
  }
}

}  // namespace

std::string ImageTensor::shape_string() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
}

std::vector<std::byte> ImageTensor::canonical_bytes() const {
  std::vector<std::byte> out(data.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data.data(), out.size());
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(data[i]);
      for (int k = 0; k < 4; ++k) out[i * 4 + k] = static_cast<std::byte>(bits >> (8 * k));
    }
  }
  return out;
}

bool is_decodable_image(std::span<const std::uint8_t> image_bytes) {
  const cv::Mat m = decode(image_bytes);
  return !m.empty();
}

ImageTensor preprocess_image(std::span<const std::uint8_t> image_bytes, std::string_view article_id) {
  cv::Mat raw = decode(image_bytes);
  if (raw.empty()) throw ImageDecodeError("image decode failed", std::string(article_id));

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F: scale = 1.0; break;
    default: throw ImageDecodeError("image decode failed: unsupported pixel depth", std::string(article_id));
  }
  cv::Mat f;
  raw.convertTo(f, CV_32F, scale);

  cv::Mat rgb;
  switch (f.channels()) {
    case 1: cv::cvtColor(f, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(f, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(f, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw ImageDecodeError("image decode failed: unsupported channel count", std::string(article_id));
  }

  cv::Mat resized;
  if (rgb.rows == kImageSide && rgb.cols == kImageSide) {
    resized = rgb;
  } else {
    cv::resize(rgb, resized, cv::Size(kImageSide, kImageSide), 0, 0, cv::INTER_LINEAR);
  }

  ImageTensor out(kImageSide, kImageSide, kImageChannels);
  for (int y = 0; y < kImageSide; ++y) {
    const auto* row = resized.ptr<cv::Vec3f>(y);
    for (int x = 0; x < kImageSide; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = std::clamp(row[x][c], 0.0f, 1.0f);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_tensor(const ImageTensor& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write tensor file: " + path.string());
  out.write("MTEN", 4);
  write_u32(out, static_cast<std::uint32_t>(img.height));
  write_u32(out, static_cast<std::uint32_t>(img.width));
  write_u32(out, static_cast<std::uint32_t>(img.channels));
  const auto bytes = img.canonical_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing tensor file: " + path.string());
}

ImageTensor load_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "MTEN", 4) != 0) {
    throw ImageDecodeError("corrupt tensor file: " + path.string());
  }
  const auto h = read_u32(bytes.data() + 4);
  const auto w = read_u32(bytes.data() + 8);
  const auto c = read_u32(bytes.data() + 12);
  const std::size_t count = std::size_t(h) * w * c;
  if (h == 0 || w == 0 || c == 0 || h > 1u << 15 || w > 1u << 15 || c > 4 ||
      bytes.size() != 16 + count * 4) {
    throw ImageDecodeError("corrupt tensor file: " + path.string());
  }
  ImageTensor img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (std::size_t i = 0; i < count; ++i) {
    img.data[i] = std::bit_cast<float>(read_u32(bytes.data() + 16 + 4 * i));
  }
  return img;
}

ImageTensor load_image(const std::filesystem::path& path, std::string_view article_id) {
  if (path.extension() == ".tensor") return load_tensor(path);
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error&) {
    throw ImageDecodeError("image decode failed: cannot read " + path.string(), std::string(article_id));
  }
  return preprocess_image(bytes, article_id);
}

}  // namespace mmfnd
