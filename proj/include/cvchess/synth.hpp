#pragma once

// Deterministic synthetic chessboard photographs with exact ground truth.
//
// A flat board is placed in front of a pinhole camera; `tilt` leans the
// camera towards White's side, `pan` swings it left/right and `roll` spins the
// image. Pieces are procedural glyphs (one shape per piece kind, ivory fill
// with a dark outline for White, near-black with a light outline for Black).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cvchess/board.hpp"
#include "cvchess/datakit.hpp"
#include "cvchess/geometry.hpp"
#include "cvchess/notation.hpp"
#include "cvchess/raster.hpp"

namespace cvchess {

using Rgb = std::array<double, 3>;

struct CameraView {
  std::string name = "topdown";
  double tilt_deg = 0;
  double pan_deg = 0;
  double roll_deg = 0;

  /// Angle between the optical axis and the board normal.
  double obliquity_deg() const {
    const double t = tilt_deg * std::numbers::pi / 180, p = pan_deg * std::numbers::pi / 180;
    return std::acos(std::cos(t) * std::cos(p)) * 180 / std::numbers::pi;
  }
};

/// The five capture angles used per position: overhead plus four obliques.
inline std::vector<CameraView> standard_views() {
  return {{"topdown", 0, 0, 0},
          {"near15", -15, 0, 0},
          {"near30", -30, 0, 0},
          {"left", -18, 14, 0},
          {"right", -18, -14, 0}};
}

struct RenderSpec {
  Rgb light{232, 212, 170};
  Rgb dark{156, 110, 72};
  Rgb background{14, 20, 17};
  Rgb white_fill{248, 246, 240};
  Rgb white_outline{24, 24, 24};
  Rgb black_fill{22, 22, 26};
  Rgb black_outline{236, 236, 236};
  CameraView view;
  /// Largest board side as a fraction of the smaller image dimension.
  double board_fraction = 0.78;
  double offset_x = 0;  // fraction of image width
  double offset_y = 0;
  double focal = 2.2;   // in board widths
  double illumination = 0.0;  // relative brightness swing across the frame
  double illumination_angle_deg = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  int width = 640;
  int height = 480;
  int supersample = 2;
};

struct Rendered {
  Raster image;
  Quad corners;        // ground-truth board corners in image pixels
  GridLines grid;      // ground-truth grid in canonical pixels
  Homography canonical_to_image;
  BoardState board;
};

namespace detail {

/// Normalised glyph coordinates: (u, v) in [-0.5, 0.5] around the square
/// centre; `grow` inflates the shape for the outline band.
inline bool glyph_inside(PieceKind kind, double u, double v, double grow) {
  const double r = std::hypot(u, v);
  switch (kind) {
    case PieceKind::Pawn:
      return r <= 0.15 + grow;
    case PieceKind::Knight: {
      // Upward triangle.
      const double top = -0.25 - grow, bottom = 0.2 + grow, half = 0.24 + grow;
      if (v < top || v > bottom) return false;
      return std::abs(u) <= half * (v - top) / (bottom - top);
    }
    case PieceKind::Bishop:
      return std::abs(u) + std::abs(v) <= 0.26 + grow;
    case PieceKind::Rook:
      return std::abs(u) <= 0.2 + grow && std::abs(v) <= 0.2 + grow;
    case PieceKind::Queen:
      return (std::abs(u) <= 0.075 + grow && std::abs(v) <= 0.27 + grow) ||
             (std::abs(v) <= 0.075 + grow && std::abs(u) <= 0.27 + grow);
    case PieceKind::King:
      return (r <= 0.27 + grow && r >= 0.15 - grow) || r <= 0.06 + grow;
  }
  return false;
}

/// Colour of the canonical board plane at continuous (x, y) in [0, 400).
inline Rgb board_color(const RenderSpec& spec, const BoardState& board, double x, double y) {
  if (x < 0 || y < 0 || x >= kCanonicalSize || y >= kCanonicalSize) return spec.background;
  const double cell = kCanonicalSize / 8.0;
  const int file = std::min(7, static_cast<int>(x / cell));
  const int row = std::min(7, static_cast<int>(y / cell));
  const PieceLabel l = board[row * 8 + file];
  if (l != PieceLabel::Empty) {
    const double u = (x - (file + 0.5) * cell) / cell;
    const double v = (y - (row + 0.5) * cell) / cell;
    const PieceKind k = kind_of(l);
    if (glyph_inside(k, u, v, 0.0)) return is_white(l) ? spec.white_fill : spec.black_fill;
    if (glyph_inside(k, u, v, 0.04)) return is_white(l) ? spec.white_outline : spec.black_outline;
  }
  return ((file + row) % 2 == 0) ? spec.light : spec.dark;
}

inline Quad project_view(const RenderSpec& spec) {
  const double d2r = std::numbers::pi / 180;
  const double t = spec.view.tilt_deg * d2r, p = spec.view.pan_deg * d2r, q = spec.view.roll_deg * d2r;
  std::array<Point2, 4> pts{};
  const Quad canon = Quad::canonical();
  for (int i = 0; i < 4; ++i) {
    // Board plane in board widths, centred on the origin.
    double x = canon.corners[i].x / kCanonicalSize - 0.5;
    double y = canon.corners[i].y / kCanonicalSize - 0.5;
    double z = 0;
    // Tilt about the horizontal axis, then pan about the vertical axis.
    const double y1 = y * std::cos(t) - z * std::sin(t), z1 = y * std::sin(t) + z * std::cos(t);
    const double x2 = x * std::cos(p) + z1 * std::sin(p), z2 = -x * std::sin(p) + z1 * std::cos(p);
    x = x2;
    y = y1;
    z = z2 + spec.focal;
    const double px = x / z, py = y / z;
    pts[i] = {px * std::cos(q) - py * std::sin(q), px * std::sin(q) + py * std::cos(q)};
  }
  double minx = 1e9, maxx = -1e9, miny = 1e9, maxy = -1e9;
  for (const auto& pt : pts) {
    minx = std::min(minx, pt.x);
    maxx = std::max(maxx, pt.x);
    miny = std::min(miny, pt.y);
    maxy = std::max(maxy, pt.y);
  }
  const double extent = std::max(maxx - minx, maxy - miny);
  const double scale = spec.board_fraction * std::min(spec.width, spec.height) / extent;
  const double cx = spec.width / 2.0 + spec.offset_x * spec.width;
  const double cy = spec.height / 2.0 + spec.offset_y * spec.height;
  Quad out;
  for (int i = 0; i < 4; ++i)
    out.corners[i] = {cx + (pts[i].x - (minx + maxx) / 2) * scale, cy + (pts[i].y - (miny + maxy) / 2) * scale};
  return out;
}

}  // namespace detail

/// Renders the placement from the spec's camera, then applies the
/// illumination ramp and seeded Gaussian noise.
inline Rendered render(const BoardState& board, const RenderSpec& spec) {
  if (spec.noise_sigma < 0) throw ContractViolation("noise sigma must be >= 0");
  Rendered out;
  out.board = board;
  out.corners = detail::project_view(spec);
  out.grid = GridLines::uniform();
  out.canonical_to_image = homography_from_quad(Quad::canonical(), out.corners);
  const Homography to_board = out.canonical_to_image.inverse();

  out.image = Raster(spec.width, spec.height, 3);
  const int ss = std::max(1, spec.supersample);
  const double ang = spec.illumination_angle_deg * std::numbers::pi / 180;
  const double gx = std::cos(ang), gy = std::sin(ang);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      Rgb acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Point2 b = to_board.apply({x + (sx + 0.5) / ss, y + (sy + 0.5) / ss});
          const Rgb c = detail::board_color(spec, board, b.x, b.y);
          for (int ch = 0; ch < 3; ++ch) acc[ch] += c[ch];
        }
      const double ramp =
          1.0 + spec.illumination * ((x / double(spec.width) - 0.5) * gx + (y / double(spec.height) - 0.5) * gy);
      for (int ch = 0; ch < 3; ++ch) {
        double v = acc[ch] / (ss * ss) * ramp;
        if (spec.noise_sigma > 0) v += spec.noise_sigma * noise(rng);
        out.image.at(x, y, ch) = to_u8(v);
      }
    }
  return out;
}

inline Rendered render(std::string_view fen_placement, const RenderSpec& spec) {
  return render(fen_expand(fen_placement), spec);
}

/// Straight top-down 400x400 rendering of the board plane (what a perfect
/// rectification would produce).
inline Raster render_canonical(const BoardState& board, const RenderSpec& spec = {}) {
  Raster out(kCanonicalSize, kCanonicalSize, 3);
  const int ss = std::max(1, spec.supersample);
  for (int y = 0; y < kCanonicalSize; ++y)
    for (int x = 0; x < kCanonicalSize; ++x) {
      Rgb acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Rgb c = detail::board_color(spec, board, x + (sx + 0.5) / ss, y + (sy + 0.5) / ss);
          for (int ch = 0; ch < 3; ++ch) acc[ch] += c[ch];
        }
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = to_u8(acc[ch] / (ss * ss));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

/// Ranges the dataset generator samples per image.
struct SynthRanges {
  std::vector<CameraView> views = standard_views();
  double roll_jitter_deg = 4.0;
  double tilt_jitter_deg = 2.0;
  double board_fraction_min = 0.70;
  double board_fraction_max = 0.86;
  double offset_jitter = 0.03;
  double illumination_max = 0.25;
  double noise_sigma_max = 4.0;
  int width = 640;
  int height = 480;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SynthSample {
  std::string image_name;
  std::string fen;  // full FEN with the default suffix
  int board_index = 0;
  int view_index = 0;
  Rendered rendered;
};

inline BoardState synth_placement(std::uint64_t seed, int board_index) {
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(board_index), 0xB0A4D));
  return random_placement(rng);
}

inline RenderSpec synth_view_spec(std::uint64_t seed, int board_index, int view_index, const SynthRanges& ranges) {
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(board_index), static_cast<std::uint64_t>(view_index) + 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  RenderSpec spec;
  spec.width = ranges.width;
  spec.height = ranges.height;
  spec.view = ranges.views[static_cast<std::size_t>(view_index) % ranges.views.size()];
  spec.view.roll_deg += between(-ranges.roll_jitter_deg, ranges.roll_jitter_deg);
  if (spec.view.tilt_deg != 0) spec.view.tilt_deg += between(-ranges.tilt_jitter_deg, ranges.tilt_jitter_deg);
  spec.board_fraction = between(ranges.board_fraction_min, ranges.board_fraction_max);
  spec.offset_x = between(-ranges.offset_jitter, ranges.offset_jitter);
  spec.offset_y = between(-ranges.offset_jitter, ranges.offset_jitter);
  spec.illumination = between(0, ranges.illumination_max);
  spec.illumination_angle_deg = between(0, 360);
  spec.noise_sigma = between(0, ranges.noise_sigma_max);
  spec.seed = rng();
  return spec;
}

inline SynthSample synth_sample(std::uint64_t seed, int board_index, int view_index, const SynthRanges& ranges = {}) {
  SynthSample s;
  s.board_index = board_index;
  s.view_index = view_index;
  const BoardState board = synth_placement(seed, board_index);
  s.fen = fen_compress(board) + " " + std::string(kDefaultFenSuffix);
  s.rendered = render(board, synth_view_spec(seed, board_index, view_index, ranges));
  s.image_name = "board" + std::string(board_index < 10 ? "000" : board_index < 100 ? "00" : board_index < 1000 ? "0" : "") +
                 std::to_string(board_index) + "_v" + std::to_string(view_index) + ".ppm";
  return s;
}

struct SynthDataset {
  Manifest manifest;
  LabelStore labels;
  std::array<std::size_t, kNumClasses> class_histogram{};  // over all generated squares
};

inline std::string class_histogram_json(const std::array<std::size_t, kNumClasses>& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (int c = 0; c < kNumClasses; ++c) j[std::string(1, kLabelChars[c])] = h[c];
  return j.dump(2) + "\n";
}

/// Renders n_boards placements from `views` views each. Splits are drawn
/// per board so all views of one position share a split. When `out_dir` is
/// non-empty, writes the images, label.json, manifest.json and
/// class_histogram.json there.
inline SynthDataset make_dataset(int n_boards, int views, std::uint64_t seed, const SynthRanges& ranges = {},
                                 const std::filesystem::path& out_dir = {}, std::array<double, 3> ratios = {0.6, 0.2, 0.2}) {
  if (n_boards < 0 || views < 1) throw ContractViolation("make_dataset needs n_boards >= 0 and views >= 1");
  std::vector<ManifestEntry> boards(n_boards);
  const Manifest board_split = split(std::move(boards), ratios, seed);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  SynthDataset ds;
  for (int b = 0; b < n_boards; ++b)
    for (int v = 0; v < views; ++v) {
      SynthSample s = synth_sample(seed, b, v, ranges);
      for (PieceLabel l : s.rendered.board.squares) ++ds.class_histogram[class_index(l)];
      ds.labels[s.image_name] = s.fen;
      ds.manifest.entries.push_back({s.image_name, s.fen, board_split.entries[b].split, "synth"});
      if (!out_dir.empty()) save_ppm(out_dir / s.image_name, s.rendered.image);
    }
  if (!out_dir.empty()) {
    save_labels(out_dir / "label.json", ds.labels);
    save_manifest(out_dir / "manifest.json", ds.manifest);
    detail::write_text(out_dir / "class_histogram.json", class_histogram_json(ds.class_histogram));
  }
  return ds;
}

}  // namespace cvchess
