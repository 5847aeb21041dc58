#pragma once

// Image containers, binary PPM/PGM codec and the low-level filters used by
// the board detector.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvchess/errors.hpp"

namespace cvchess {

/// 8-bit image, row-major, channels interleaved, origin top-left.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 1 || h < 1) throw ContractViolation("raster dimensions must be positive");
    if (c != 1 && c != 3) throw ContractViolation("raster channels must be 1 or 3");
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool operator==(const Raster&) const = default;
};

/// Single-channel real image with samples nominally in [0, 255].
struct GrayF32 {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayF32() = default;
  GrayF32(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

  bool operator==(const BinaryMask&) const = default;
};

// ---------------------------------------------------------------------------
// PPM / PGM

namespace detail {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* field) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) throw FormatError(std::string("PPM ") + field + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PPM header: malformed ") + field);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_space(const char* field) {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError(std::string("PPM header: missing whitespace after ") + field);
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Raster decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("PPM header: magic must be P5 or P6");
  const int channels = bytes[1] == '6' ? 3 : 1;
  detail::HeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  const long maxval = reader.read_uint("maxval");
  if (width < 1) throw FormatError("PPM header: width must be positive");
  if (height < 1) throw FormatError("PPM header: height must be positive");
  if (maxval != 255) throw FormatError("PPM header: maxval " + std::to_string(maxval) + " unsupported (need 255)");
  reader.expect_single_space("maxval");

  Raster img(static_cast<int>(width), static_cast<int>(height), channels);
  const std::size_t need = img.data.size();
  if (bytes.size() - reader.pos() < need)
    throw FormatError("PPM payload truncated: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(bytes.size() - reader.pos()));
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos()), need, img.data.begin());
  return img;
}

inline std::vector<std::uint8_t> encode_ppm(const Raster& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ContractViolation("encode_ppm: channels must be 1 or 3, got " + std::to_string(img.channels));
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline Raster load_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }
inline void save_ppm(const std::filesystem::path& path, const Raster& img) { write_file_bytes(path, encode_ppm(img)); }

// ---------------------------------------------------------------------------
// Filters

/// BT.601 luma; identity for single-channel input.
inline GrayF32 to_grayscale(const Raster& img) {
  if (img.channels != 1 && img.channels != 3) throw ContractViolation("to_grayscale: channels must be 1 or 3");
  GrayF32 out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (img.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) out.data[i] = img.data[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
      out.data[i] = static_cast<float>(std::clamp(g, 0.0, 255.0));
    }
  }
  return out;
}

inline constexpr double kDefaultBlurSigma = 1.1;

/// Normalized 5-tap Gaussian for offsets -2..2.
inline std::array<double, 5> gaussian_taps_5(double sigma) {
  if (!(sigma > 0)) throw ContractViolation("gaussian sigma must be positive");
  std::array<double, 5> taps{};
  double sum = 0;
  for (int i = -2; i <= 2; ++i) {
    taps[i + 2] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + 2];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Separable 5x5 Gaussian, replicate padding.
inline GrayF32 gaussian_blur_5x5(const GrayF32& img, double sigma = kDefaultBlurSigma) {
  const auto taps = gaussian_taps_5(sigma);
  const int w = img.width, h = img.height;
  GrayF32 tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * img.at(std::clamp(x + k, 0, w - 1), y);
      tmp.at(x, y) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * tmp.at(x, std::clamp(y + k, 0, h - 1));
      out.at(x, y) = static_cast<float>(acc);
    }
  return out;
}

/// 5x5 square structuring element, neighborhoods clamped at the border.
inline BinaryMask dilate_5x5(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  // Separable: a 5x5 box max is a 1x5 max followed by a 5x1 max.
  BinaryMask rows(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int k = std::max(0, x - 2); k <= std::min(w - 1, x + 2) && !any; ++k) any = mask.at(k, y);
      rows.set(x, y, any);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int k = std::max(0, y - 2); k <= std::min(h - 1, y + 2) && !any; ++k) any = rows.at(x, k);
      out.set(x, y, any);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling helpers shared by the geometry, board and feature code.
// Continuous coordinates put pixel (i, j) over [i, i+1) x [j, j+1).

/// Bilinear sample at continuous (x, y); writes `channels` values to out.
/// Returns false (and writes zeros) when the point lies outside the image.
inline bool sample_bilinear(const Raster& img, double x, double y, std::span<double> out) {
  if (!(x >= 0.0 && y >= 0.0 && x < img.width && y < img.height)) {
    std::fill(out.begin(), out.end(), 0.0);
    return false;
  }
  const double fx = x - 0.5, fy = y - 0.5;
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double ax = fx - x0f, ay = fy - y0f;
  const int x0 = std::clamp(static_cast<int>(x0f), 0, img.width - 1);
  const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, img.height - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height - 1);
  for (int c = 0; c < img.channels; ++c) {
    const double top = (1 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
    const double bot = (1 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
    out[c] = (1 - ay) * top + ay * bot;
  }
  return true;
}

inline std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

inline Raster resize_bilinear(const Raster& img, int out_w, int out_h) {
  if (img.width == out_w && img.height == out_h) return img;
  Raster out(out_w, out_h, img.channels);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  std::array<double, 3> px{};
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      // Clamp inside so edge pixels never fall off the source.
      const double cx = std::clamp((x + 0.5) * sx, 0.0, img.width - 1e-9);
      const double cy = std::clamp((y + 0.5) * sy, 0.0, img.height - 1e-9);
      sample_bilinear(img, cx, cy, std::span<double>(px.data(), img.channels));
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = to_u8(px[c]);
    }
  return out;
}

inline Raster crop(const Raster& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > img.width || y0 + h > img.height)
    throw ContractViolation("crop rectangle outside image");
  Raster out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    std::copy_n(img.data.begin() + static_cast<std::ptrdiff_t>(img.index(x0, y0 + y)),
                static_cast<std::size_t>(w) * img.channels, out.data.begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
  return out;
}

/// Rotates clockwise by quarter_turns * 90 degrees.
inline Raster rotate_quarter(const Raster& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  const bool swap = (k % 2) == 1;
  Raster out(swap ? img.height : img.width, swap ? img.width : img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int nx = x, ny = y;
      if (k == 1) { nx = img.height - 1 - y; ny = x; }
      if (k == 2) { nx = img.width - 1 - x; ny = img.height - 1 - y; }
      if (k == 3) { nx = y; ny = img.width - 1 - x; }
      for (int c = 0; c < img.channels; ++c) out.at(nx, ny, c) = img.at(x, y, c);
    }
  return out;
}

inline Raster mask_to_raster(const BinaryMask& m) {
  Raster out(m.width, m.height, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i] ? 255 : 0;
  return out;
}

}  // namespace cvchess
