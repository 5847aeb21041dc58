#pragma once

// Board localisation and rectification: Canny edges, contour extraction,
// polygon simplification, projective transforms and Hough grid refinement.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include "cvchess/errors.hpp"
#include "cvchess/raster.hpp"

namespace cvchess {

inline constexpr int kCanonicalSize = 400;

struct Point2 {
  double x = 0;
  double y = 0;

  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2&) const = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Corners in order TL, TR, BR, BL.
struct Quad {
  std::array<Point2, 4> corners{};

  const Point2& tl() const { return corners[0]; }
  const Point2& tr() const { return corners[1]; }
  const Point2& br() const { return corners[2]; }
  const Point2& bl() const { return corners[3]; }

  /// Signed shoelace area; positive when clockwise on screen (y down).
  double signed_area() const {
    double a = 0;
    for (int i = 0; i < 4; ++i) a += cross(corners[i], corners[(i + 1) % 4]);
    return a / 2;
  }
  double area() const { return std::abs(signed_area()); }

  bool is_strictly_convex() const {
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
      const Point2 e0 = corners[(i + 1) % 4] - corners[i];
      const Point2 e1 = corners[(i + 2) % 4] - corners[(i + 1) % 4];
      const double c = cross(e0, e1);
      if (std::abs(c) < 1e-12) return false;
      const int s = c > 0 ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) return false;
    }
    return area() > 0;
  }

  static Quad rect(double x0, double y0, double x1, double y1) { return Quad{{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}}; }
  static Quad canonical(double size = kCanonicalSize) { return rect(0, 0, size, size); }
};

/// 3x3 projective matrix, row-major, normalized so m[8] == 1.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Point2 apply(Point2 p) const {
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }

  double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Homography normalized() const {
    Homography h = *this;
    if (std::abs(h.m[8]) < 1e-300) throw DegenerateQuad("homography has zero scale element");
    for (double& v : h.m) v /= m[8];
    return h;
  }

  /// this * other: applies `other` first.
  Homography operator*(const Homography& o) const {
    Homography r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r.normalized();
  }

  Homography inverse() const {
    const double d = determinant();
    if (std::abs(d) < 1e-12) throw DegenerateQuad("homography is singular");
    Homography r;
    r.m = {m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
           m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
           m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
    for (double& v : r.m) v /= d;
    return r.normalized();
  }
};

/// Nine x positions (vertical lines) and nine y positions (horizontal lines)
/// in canonical pixels.
struct GridLines {
  std::array<double, 9> vertical{};
  std::array<double, 9> horizontal{};

  static GridLines uniform(double size = kCanonicalSize) {
    GridLines g;
    for (int i = 0; i < 9; ++i) g.vertical[i] = g.horizontal[i] = size * i / 8.0;
    return g;
  }

  bool valid(double size = kCanonicalSize) const {
    for (const auto* lines : {&vertical, &horizontal}) {
      if ((*lines)[0] < 0 || (*lines)[8] > size) return false;
      for (int i = 0; i < 8; ++i)
        if (!((*lines)[i] < (*lines)[i + 1])) return false;
    }
    return true;
  }

  bool operator==(const GridLines&) const = default;
};

// ---------------------------------------------------------------------------
// Canny

struct CannyParams {
  double low = 50;
  double high = 150;
};

/// Sobel 3x3 (replicate border) -> L2 magnitude -> 4-bin non-maximum
/// suppression -> 8-connected hysteresis.
inline BinaryMask canny(const GrayF32& img, double low = 50, double high = 150) {
  if (!(low > 0 && low < high)) throw ContractViolation("canny: require 0 < low < high");
  const int w = img.width, h = img.height;
  auto px = [&](int x, int y) -> double { return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };

  std::vector<double> mag(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> dir(mag.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      // Gradient angle folded into [0, 180) and binned at 0/45/90/135.
      double a = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (a < 0) a += 180.0;
      if (a < 22.5 || a >= 157.5)
        dir[i] = 0;
      else if (a < 67.5)
        dir[i] = 1;
      else if (a < 112.5)
        dir[i] = 2;
      else
        dir[i] = 3;
    }

  // Neighbour offsets along the gradient for each bin (y grows downwards).
  static constexpr int kDx[4] = {1, 1, 0, -1};
  static constexpr int kDy[4] = {0, 1, 1, 1};
  auto mag_at = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };

  // 0 = suppressed, 1 = weak candidate, 2 = strong.
  std::vector<std::uint8_t> cls(mag.size(), 0);
  std::vector<std::size_t> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m < low) continue;
      const int d = dir[i];
      // Strict on the "before" side and non-strict on the "after" side so a
      // two-pixel plateau keeps exactly one pixel.
      if (!(m > mag_at(x - kDx[d], y - kDy[d]) && m >= mag_at(x + kDx[d], y + kDy[d]))) continue;
      cls[i] = m >= high ? 2 : 1;
      if (cls[i] == 2) stack.push_back(i);
    }

  BinaryMask out(w, h);
  for (std::size_t i : stack) out.data[i] = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (cls[j] != 0 && !out.data[j]) {
          out.data[j] = 1;
          stack.push_back(j);
        }
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contours

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
};

using Contour = std::vector<PixelPoint>;

namespace detail {

// Clockwise on screen starting east: E, SE, S, SW, W, NW, N, NE.
inline constexpr int kDirX[8] = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr int kDirY[8] = {0, 1, 1, 1, 0, -1, -1, -1};

inline int direction_to(PixelPoint from, PixelPoint to) {
  for (int d = 0; d < 8; ++d)
    if (from.x + kDirX[d] == to.x && from.y + kDirY[d] == to.y) return d;
  return -1;
}

/// Suzuki-Abe outer border following from the raster-first pixel of a
/// component.
inline Contour trace_outer_border(const BinaryMask& mask, PixelPoint start) {
  auto on = [&](int x, int y) { return x >= 0 && y >= 0 && x < mask.width && y < mask.height && mask.at(x, y); };

  // Clockwise search from the west neighbour (background by construction).
  int first_dir = -1;
  for (int k = 0; k < 8; ++k) {
    const int d = (4 + k) % 8;
    if (on(start.x + kDirX[d], start.y + kDirY[d])) {
      first_dir = d;
      break;
    }
  }
  if (first_dir < 0) return {start};

  const PixelPoint p1{start.x + kDirX[first_dir], start.y + kDirY[first_dir]};
  PixelPoint prev = p1;
  PixelPoint cur = start;
  Contour chain;
  const std::size_t guard = 4 * mask.data.size() + 8;
  while (chain.size() < guard) {
    chain.push_back(cur);
    // Counter-clockwise search starting just after the previous pixel.
    const int back = direction_to(cur, prev);
    PixelPoint next = cur;
    for (int k = 1; k <= 8; ++k) {
      const int d = ((back - k) % 8 + 8) % 8;
      if (on(cur.x + kDirX[d], cur.y + kDirY[d])) {
        next = {cur.x + kDirX[d], cur.y + kDirY[d]};
        break;
      }
    }
    if (next == start && cur == p1) break;
    prev = cur;
    cur = next;
  }
  return chain;
}

}  // namespace detail

/// Outer borders of the 8-connected foreground regions that are not nested
/// inside a hole of another region. Ordered by each region's first pixel in
/// raster order.
inline std::vector<Contour> find_contours(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  if (w == 0 || h == 0) return {};

  // Background reachable from outside the image (4-connected).
  std::vector<std::uint8_t> outside(mask.data.size(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!mask.data[i] && !outside[i]) {
      outside[i] = 1;
      stack.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }

  std::vector<std::uint8_t> visited(mask.data.size(), 0);
  std::vector<Contour> contours;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i0 = static_cast<std::size_t>(y) * w + x;
      if (!mask.data[i0] || visited[i0]) continue;

      // Flood the component (8-connected) and note whether it touches the
      // exterior.
      bool external = false;
      visited[i0] = 1;
      stack.push_back(i0);
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int cx = static_cast<int>(i % w), cy = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
              external = true;
              continue;
            }
            const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
            if (mask.data[j]) {
              if (!visited[j]) {
                visited[j] = 1;
                stack.push_back(j);
              }
            } else if ((dx == 0 || dy == 0) && outside[j]) {
              external = true;
            }
          }
      }
      if (external) contours.push_back(detail::trace_outer_border(mask, {x, y}));
    }
  return contours;
}

// ---------------------------------------------------------------------------
// Polygon simplification

namespace detail {

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0) return norm(p - a);
  return std::abs(cross(ab, p - a)) / std::sqrt(len2);
}

inline void rdp(const std::vector<Point2>& pts, std::size_t first, std::size_t last, double eps,
                std::vector<std::size_t>& keep) {
  if (last <= first + 1) return;
  double best = -1;
  std::size_t idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      idx = i;
    }
  }
  if (best > eps) {
    rdp(pts, first, idx, eps, keep);
    keep.push_back(idx);
    rdp(pts, idx, last, eps, keep);
  }
}

}  // namespace detail

inline double contour_arc_length(const Contour& c) {
  double len = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const PixelPoint a = c[i], b = c[(i + 1) % c.size()];
    len += std::hypot(a.x - b.x, a.y - b.y);
  }
  return len;
}

/// Ramer-Douglas-Peucker on a closed chain with tolerance
/// epsilon_frac * perimeter. The chain is split at two mutually distant
/// points so the seam never lands mid-edge.
inline std::vector<Point2> approx_polygon(const Contour& contour, double epsilon_frac = 0.02) {
  const std::size_t n = contour.size();
  std::vector<Point2> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {static_cast<double>(contour[i].x), static_cast<double>(contour[i].y)};
  if (n < 3) return pts;
  const double eps = epsilon_frac * contour_arc_length(contour);

  auto farthest_from = [&](std::size_t from) {
    std::size_t best = from;
    double bd = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = norm(pts[i] - pts[from]);
      if (d > bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  };
  std::size_t a = farthest_from(0);
  std::size_t b = farthest_from(a);
  if (a > b) std::swap(a, b);
  if (a == b) return {pts[a]};

  // Rotate so that the chain starts at a; b sits at offset (b - a).
  std::vector<Point2> ring(n + 1);
  for (std::size_t i = 0; i <= n; ++i) ring[i] = pts[(a + i) % n];
  const std::size_t mid = b - a;

  std::vector<std::size_t> keep{0};
  detail::rdp(ring, 0, mid, eps, keep);
  keep.push_back(mid);
  detail::rdp(ring, mid, n, eps, keep);

  std::vector<Point2> out;
  out.reserve(keep.size());
  for (std::size_t k : keep) out.push_back(ring[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Corner ordering and homographies

/// TL is the point minimising x + y (ties: smaller x, then smaller y); the
/// rest follow clockwise on screen. Agrees with the sum/difference rule
/// (BR = max x + y, TR = max x - y, BL = min x - y) whenever that rule
/// yields four distinct points.
inline Quad order_corners(std::array<Point2, 4> pts) {
  Point2 c{0, 0};
  for (const auto& p : pts) c = c + p * 0.25;

  // Any collinear triple makes the quad degenerate.
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k) {
        const Point2 u = pts[j] - pts[i], v = pts[k] - pts[i];
        const double scale = std::max({1.0, dot(u, u), dot(v, v)});
        if (std::abs(cross(u, v)) <= 1e-12 * scale) throw DegenerateQuad("corner points are collinear");
      }

  std::sort(pts.begin(), pts.end(), [&](Point2 a, Point2 b) {
    return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
  });
  std::size_t tl = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    const double si = pts[i].x + pts[i].y, st = pts[tl].x + pts[tl].y;
    if (si < st || (si == st && (pts[i].x < pts[tl].x || (pts[i].x == pts[tl].x && pts[i].y < pts[tl].y)))) tl = i;
  }
  Quad q;
  for (int i = 0; i < 4; ++i) q.corners[i] = pts[(tl + i) % 4];
  if (!q.is_strictly_convex()) throw DegenerateQuad("corner points are not in convex position");
  return q;
}

/// Solves the 8x8 direct linear system for the homography taking each src
/// corner onto the matching dst corner.
inline Homography homography_from_quad(const Quad& src, const Quad& dst) {
  // Similarity-normalise both point sets for conditioning.
  auto normaliser = [](const Quad& q) {
    Point2 c{0, 0};
    for (const auto& p : q.corners) c = c + p * 0.25;
    double d = 0;
    for (const auto& p : q.corners) d += norm(p - c) / 4;
    if (d <= 0) throw DegenerateQuad("quad has zero extent");
    const double s = std::sqrt(2.0) / d;
    Homography t;
    t.m = {s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1};
    return t;
  };
  const Homography ts = normaliser(src), td = normaliser(dst);

  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Point2 s = ts.apply(src.corners[i]);
    const Point2 d = td.apply(dst.corners[i]);
    a.row(2 * i) << s.x, s.y, 1, 0, 0, 0, -s.x * d.x, -s.y * d.x;
    a.row(2 * i + 1) << 0, 0, 0, s.x, s.y, 1, -s.x * d.y, -s.y * d.y;
    b(2 * i) = d.x;
    b(2 * i + 1) = d.y;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < 8) throw DegenerateQuad("homography system is singular");
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);

  Homography hn;
  hn.m = {h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0};
  Homography out = td.inverse() * hn * ts;
  if (std::abs(out.determinant()) < 1e-12) throw DegenerateQuad("homography is singular");
  return out;
}

/// Inverse-maps every canonical pixel through the quad's homography and
/// samples bilinearly; samples outside the source are black.
inline Raster warp_to_canonical(const Raster& img, const Quad& quad, int size = kCanonicalSize) {
  if (!quad.is_strictly_convex()) throw DegenerateQuad("warp quad is not strictly convex");
  const Homography h = homography_from_quad(Quad::canonical(size), quad);
  Raster out(size, size, 3);
  std::array<double, 3> px{};
  for (int v = 0; v < size; ++v)
    for (int u = 0; u < size; ++u) {
      const Point2 p = h.apply({u + 0.5, v + 0.5});
      sample_bilinear(img, p.x, p.y, std::span<double>(px.data(), img.channels));
      for (int c = 0; c < 3; ++c) out.at(u, v, c) = to_u8(px[img.channels == 3 ? c : 0]);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Board detection

struct DetectParams {
  double blur_sigma = kDefaultBlurSigma;
  double canny_low = 50;
  double canny_high = 150;
  double min_area_frac = 0.05;
  double epsilon_frac = 0.02;
  /// Snap each side onto the undilated edge pixels after the contour stage.
  bool refine_edges = true;
};

namespace detail {

struct Line {
  Point2 point;
  Point2 dir;  // unit
};

inline std::optional<Line> fit_line(const std::vector<Point2>& pts) {
  if (pts.size() < 8) return std::nullopt;
  Point2 c{0, 0};
  for (const auto& p : pts) c = c + p;
  c = c * (1.0 / static_cast<double>(pts.size()));
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    const Point2 d = p - c;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double angle = 0.5 * std::atan2(2 * sxy, sxx - syy);
  return Line{c, {std::cos(angle), std::sin(angle)}};
}

inline std::optional<Point2> intersect(const Line& a, const Line& b) {
  const double den = cross(a.dir, b.dir);
  if (std::abs(den) < 1e-9) return std::nullopt;
  const double t = cross(b.point - a.point, b.dir) / den;
  return a.point + a.dir * t;
}

/// Fits each side to Canny pixels in a band around the coarse side, twice
/// with a shrinking band; returns the coarse quad if anything looks off.
inline Quad refine_quad(const Quad& coarse, const BinaryMask& edges) {
  std::array<Line, 4> lines;
  for (int s = 0; s < 4; ++s) {
    const Point2 a = coarse.corners[s], b = coarse.corners[(s + 1) % 4];
    const double len = norm(b - a);
    if (len < 16) return coarse;
    Line line{a, (b - a) * (1.0 / len)};
    for (double band : {5.0, 1.5}) {
      const Point2 n{-line.dir.y, line.dir.x};
      const Point2 a2 = line.point;
      const double t0 = dot(a - a2, line.dir), t1 = dot(b - a2, line.dir);
      const double lo = std::min(t0, t1) + 0.12 * len, hi = std::max(t0, t1) - 0.12 * len;
      // Scan the bounding box of the band.
      const double reach = band + 1;
      const Point2 e0 = a2 + line.dir * lo, e1 = a2 + line.dir * hi;
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(e0.x, e1.x) - reach)));
      const int x1 = std::min(edges.width - 1, static_cast<int>(std::ceil(std::max(e0.x, e1.x) + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(e0.y, e1.y) - reach)));
      const int y1 = std::min(edges.height - 1, static_cast<int>(std::ceil(std::max(e0.y, e1.y) + reach)));
      std::vector<Point2> pts;
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          if (!edges.at(x, y)) continue;
          const Point2 p{x + 0.5, y + 0.5};
          const double t = dot(p - a2, line.dir);
          if (t < lo || t > hi) continue;
          if (std::abs(dot(p - a2, n)) <= band) pts.push_back(p);
        }
      if (pts.size() < static_cast<std::size_t>(0.3 * (hi - lo))) return coarse;
      auto fitted = fit_line(pts);
      if (!fitted) return coarse;
      if (dot(fitted->dir, line.dir) < 0) fitted->dir = fitted->dir * -1.0;
      line = *fitted;
    }
    lines[s] = line;
  }
  Quad out;
  for (int i = 0; i < 4; ++i) {
    // Corner i joins side i-1 (ending at i) and side i (starting at i).
    const auto p = intersect(lines[(i + 3) % 4], lines[i]);
    if (!p || norm(*p - coarse.corners[i]) > 8.0) return coarse;
    out.corners[i] = *p;
  }
  return out.is_strictly_convex() ? out : coarse;
}

}  // namespace detail

/// Every candidate the contour stage produced, for debugging dumps.
struct DetectionTrace {
  BinaryMask edges;
  BinaryMask dilated;
  std::vector<std::vector<Point2>> polygons;
};

inline Quad detect_board_quad(const Raster& img, const DetectParams& params = {}, DetectionTrace* trace = nullptr) {
  const GrayF32 gray = gaussian_blur_5x5(to_grayscale(img), params.blur_sigma);
  BinaryMask edges = canny(gray, params.canny_low, params.canny_high);
  BinaryMask dilated = dilate_5x5(edges);
  const double min_area = params.min_area_frac * img.width * img.height;

  std::optional<Quad> best;
  double best_area = 0;
  for (const Contour& c : find_contours(dilated)) {
    if (c.size() < 4) continue;
    const auto poly = approx_polygon(c, params.epsilon_frac);
    if (trace) trace->polygons.push_back(poly);
    if (poly.size() != 4) continue;
    Quad raw{{poly[0], poly[1], poly[2], poly[3]}};
    if (!raw.is_strictly_convex()) continue;
    const double area = raw.area();
    if (area <= min_area || area <= best_area) continue;
    try {
      best = order_corners(raw.corners);
      best_area = area;
    } catch (const DegenerateQuad&) {
    }
  }
  if (trace) {
    trace->edges = edges;
    trace->dilated = std::move(dilated);
  }
  if (!best) throw NoBoardFound();
  return params.refine_edges ? detail::refine_quad(*best, edges) : *best;
}

// ---------------------------------------------------------------------------
// Hough grid refinement

struct HoughParams {
  double rho_step = 1.0;
  double theta_step_deg = 1.0;
  int vote_threshold = 150;
  double axis_tolerance_deg = 5.0;
  double cluster_px = 8.0;
  double snap_px = 12.0;
  double blur_sigma = kDefaultBlurSigma;
  double canny_low = 50;
  double canny_high = 150;
};

/// Locates the nine file and nine rank boundaries of a rectified board.
/// The seven interior lines of each family must all be found near their
/// uniform positions; the two outer lines fall back to the image border
/// when no peak sits there. Any miss returns the uniform grid.
inline GridLines hough_grid_refine(const Raster& warped, const HoughParams& params = {}) {
  const int size = kCanonicalSize;
  if (warped.width != size || warped.height != size)
    throw ContractViolation("hough_grid_refine expects a 400x400 image");
  const BinaryMask edges =
      canny(gaussian_blur_5x5(to_grayscale(warped), params.blur_sigma), params.canny_low, params.canny_high);

  const double rho_max = std::ceil(std::hypot(size, size));  // 566
  const int n_rho = static_cast<int>(std::floor(2 * rho_max / params.rho_step)) + 1;
  const int n_theta = static_cast<int>(std::round(180.0 / params.theta_step_deg));
  std::vector<double> cos_t(n_theta), sin_t(n_theta);
  for (int t = 0; t < n_theta; ++t) {
    const double th = t * params.theta_step_deg * std::numbers::pi / 180.0;
    cos_t[t] = std::cos(th);
    sin_t[t] = std::sin(th);
  }
  std::vector<int> acc(static_cast<std::size_t>(n_rho) * n_theta, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      if (!edges.at(x, y)) continue;
      const double px = x + 0.5, py = y + 0.5;
      for (int t = 0; t < n_theta; ++t) {
        const double rho = px * cos_t[t] + py * sin_t[t];
        const int r = static_cast<int>(std::lround((rho + rho_max) / params.rho_step));
        ++acc[static_cast<std::size_t>(t) * n_rho + r];
      }
    }
  auto votes = [&](int t, int r) {
    t = (t + n_theta) % n_theta;
    if (r < 0 || r >= n_rho) return 0;
    return acc[static_cast<std::size_t>(t) * n_rho + r];
  };

  struct Peak {
    double pos;
    int votes;
  };
  std::vector<Peak> vertical, horizontal;
  const double mid = size / 2.0;
  for (int t = 0; t < n_theta; ++t) {
    const double theta = t * params.theta_step_deg;
    const bool near_vertical = theta <= params.axis_tolerance_deg || theta >= 180.0 - params.axis_tolerance_deg;
    const bool near_horizontal = std::abs(theta - 90.0) <= params.axis_tolerance_deg;
    if (!near_vertical && !near_horizontal) continue;
    for (int r = 0; r < n_rho; ++r) {
      const int v = votes(t, r);
      if (v < params.vote_threshold) continue;
      bool is_max = true;
      for (int dt = -1; dt <= 1 && is_max; ++dt)
        for (int dr = -1; dr <= 1; ++dr) {
          if (dt == 0 && dr == 0) continue;
          const int o = votes(t + dt, r + dr);
          // Ties resolve towards the lower index so plateaus yield one peak.
          if (o > v || (o == v && (dt < 0 || (dt == 0 && dr < 0)))) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      const double rho = r * params.rho_step - rho_max;
      if (near_vertical)
        vertical.push_back({(rho - mid * sin_t[t]) / cos_t[t], v});
      else
        horizontal.push_back({(rho - mid * cos_t[t]) / sin_t[t], v});
    }
  }

  auto resolve = [&](std::vector<Peak> peaks, std::array<double, 9>& out) {
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.pos < b.pos; });
    std::vector<Peak> clusters;
    double wsum = 0, psum = 0, last = -1e18;
    int vmax = 0;
    for (const Peak& p : peaks) {
      if (wsum > 0 && p.pos - last > params.cluster_px) {
        clusters.push_back({psum / wsum, vmax});
        wsum = psum = 0;
        vmax = 0;
      }
      wsum += p.votes;
      psum += p.votes * p.pos;
      vmax = std::max(vmax, p.votes);
      last = p.pos;
    }
    if (wsum > 0) clusters.push_back({psum / wsum, vmax});

    for (int i = 0; i < 9; ++i) {
      const double target = size * i / 8.0;
      const Peak* best = nullptr;
      for (const Peak& c : clusters)
        if (std::abs(c.pos - target) <= params.snap_px && (!best || c.votes > best->votes)) best = &c;
      if (best)
        out[i] = std::clamp(best->pos, 0.0, static_cast<double>(size));
      else if (i == 0 || i == 8)
        out[i] = target;
      else
        return false;
    }
    for (int i = 0; i < 8; ++i)
      if (!(out[i] < out[i + 1])) return false;
    return true;
  };

  GridLines g;
  if (resolve(std::move(vertical), g.vertical) && resolve(std::move(horizontal), g.horizontal) && g.valid()) return g;
  return GridLines::uniform();
}

}  // namespace cvchess
