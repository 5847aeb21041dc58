#pragma once

// Splits the rectified board into its 64 square crops.

#include <array>
#include <cmath>
#include <vector>

#include "cvchess/geometry.hpp"
#include "cvchess/raster.hpp"
#include "cvchess/square.hpp"

namespace cvchess {

inline constexpr int kCropSize = 50;

struct SquareCrop {
  SquareIndex square;
  Raster pixels;
};

/// Crop (row, file) spans [vertical[f], vertical[f+1]) x [horizontal[r],
/// horizontal[r+1]). Cells that are not exactly 50x50 on integer bounds are
/// resampled bilinearly.
inline std::vector<SquareCrop> segment(const Raster& warped, const GridLines& grid = GridLines::uniform()) {
  if (warped.width != kCanonicalSize || warped.height != kCanonicalSize || warped.channels != 3)
    throw ContractViolation("segment expects a 400x400x3 board image");
  if (!grid.valid()) throw ContractViolation("segment: invalid grid lines");

  std::vector<SquareCrop> crops;
  crops.reserve(64);
  std::array<double, 3> px{};
  for (int row = 0; row < 8; ++row)
    for (int file = 0; file < 8; ++file) {
      const double x0 = grid.vertical[file], x1 = grid.vertical[file + 1];
      const double y0 = grid.horizontal[row], y1 = grid.horizontal[row + 1];
      SquareCrop c{SquareIndex(row * 8 + file), Raster(kCropSize, kCropSize, 3)};
      const bool exact = x1 - x0 == kCropSize && y1 - y0 == kCropSize && x0 == std::floor(x0) && y0 == std::floor(y0);
      if (exact) {
        c.pixels = crop(warped, static_cast<int>(x0), static_cast<int>(y0), kCropSize, kCropSize);
      } else {
        const double sx = (x1 - x0) / kCropSize, sy = (y1 - y0) / kCropSize;
        for (int y = 0; y < kCropSize; ++y)
          for (int x = 0; x < kCropSize; ++x) {
            const double cx = std::clamp(x0 + (x + 0.5) * sx, 0.0, kCanonicalSize - 1e-9);
            const double cy = std::clamp(y0 + (y + 0.5) * sy, 0.0, kCanonicalSize - 1e-9);
            sample_bilinear(warped, cx, cy, px);
            for (int ch = 0; ch < 3; ++ch) c.pixels.at(x, y, ch) = to_u8(px[ch]);
          }
      }
      crops.push_back(std::move(c));
    }
  return crops;
}

/// Inverse of a uniform-grid segmentation.
inline Raster assemble(const std::vector<SquareCrop>& crops) {
  if (crops.size() != 64) throw ContractViolation("assemble needs 64 crops");
  Raster out(kCanonicalSize, kCanonicalSize, 3);
  for (const auto& c : crops) {
    const int x0 = c.square.file() * kCropSize, y0 = c.square.row() * kCropSize;
    for (int y = 0; y < kCropSize; ++y)
      for (int x = 0; x < kCropSize; ++x)
        for (int ch = 0; ch < 3; ++ch) out.at(x0 + x, y0 + y, ch) = c.pixels.at(x, y, ch);
  }
  return out;
}

}  // namespace cvchess
