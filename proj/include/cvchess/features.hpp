#pragma once

// HOG descriptors for square crops and the scaler/PCA preprocessing used by
// the SVM baseline.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cvchess/board.hpp"
#include "cvchess/errors.hpp"
#include "cvchess/notation.hpp"
#include "cvchess/raster.hpp"

namespace cvchess {

struct HogParams {
  int size = 64;  // crops are resized to size x size
  int cell = 8;
  int block = 2;  // cells per block side, stride one cell
  int bins = 9;   // unsigned orientation over [0, 180)

  int cells() const { return size / cell; }
  int blocks() const { return cells() - block + 1; }
  int dims() const { return blocks() * blocks() * block * block * bins; }
  bool operator==(const HogParams&) const = default;

  void validate() const {
    if (size < 1 || cell < 1 || block < 1 || bins < 1 || size % cell != 0 || cells() < block)
      throw ContractViolation("inconsistent HOG geometry");
  }
};

inline constexpr int kHogDims = 1764;

namespace detail {

/// Pixel-center aligned bilinear resize of a grayscale image.
inline GrayF32 resize_gray(const GrayF32& img, int w, int h) {
  GrayF32 out(w, h);
  const double sx = static_cast<double>(img.width) / w, sy = static_cast<double>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;
      const double top = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
      const double bot = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
      out.at(x, y) = static_cast<float>(top * (1 - ty) + bot * ty);
    }
  }
  return out;
}

}  // namespace detail

/// HOG of an already-resized grayscale image. Gradients are centered
/// differences (zero on the outermost ring); the orientation of each pixel
/// votes its magnitude into the two nearest bins, bin b being centred on
/// (b + 0.5) * 180 / bins degrees.
inline std::vector<double> hog_gray(const GrayF32& g, const HogParams& p = {}) {
  p.validate();
  if (g.width != p.size || g.height != p.size) throw ContractViolation("hog_gray: image must be resized to the HOG size first");
  const int nc = p.cells();
  std::vector<double> hist(static_cast<std::size_t>(nc) * nc * p.bins, 0.0);
  const double bin_width = 180.0 / p.bins;
  for (int y = 1; y < p.size - 1; ++y)
    for (int x = 1; x < p.size - 1; ++x) {
      const double gx = static_cast<double>(g.at(x + 1, y)) - g.at(x - 1, y);
      const double gy = static_cast<double>(g.at(x, y + 1)) - g.at(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (ang < 0) ang += 180.0;
      if (ang >= 180.0) ang -= 180.0;
      const double pos = ang / bin_width - 0.5;
      const int b0 = static_cast<int>(std::floor(pos));
      const double frac = pos - b0;
      double* cell = &hist[(static_cast<std::size_t>(y / p.cell) * nc + x / p.cell) * p.bins];
      cell[(b0 + p.bins) % p.bins] += mag * (1.0 - frac);
      cell[(b0 + 1) % p.bins] += mag * frac;
    }

  std::vector<double> out;
  out.reserve(p.dims());
  std::vector<double> v(static_cast<std::size_t>(p.block) * p.block * p.bins);
  const double eps2 = 1e-10;
  for (int by = 0; by < p.blocks(); ++by)
    for (int bx = 0; bx < p.blocks(); ++bx) {
      std::size_t k = 0;
      for (int cy = 0; cy < p.block; ++cy)
        for (int cx = 0; cx < p.block; ++cx)
          for (int b = 0; b < p.bins; ++b) v[k++] = hist[(static_cast<std::size_t>(by + cy) * nc + bx + cx) * p.bins + b];
      // L2-Hys: normalize, clip at 0.2, normalize again.
      double n = 0.0;
      for (double e : v) n += e * e;
      n = std::sqrt(n + eps2);
      for (double& e : v) e = std::min(e / n, 0.2);
      n = 0.0;
      for (double e : v) n += e * e;
      n = std::sqrt(n + eps2);
      for (double e : v) out.push_back(e / n);
    }
  return out;
}

inline std::vector<double> hog(const Raster& crop, const HogParams& p = {}) {
  return hog_gray(detail::resize_gray(to_grayscale(crop), p.size, p.size), p);
}

inline std::vector<double> hog(const SquareCrop& crop, const HogParams& p = {}) { return hog(crop.pixels, p); }

/// Row-per-sample design matrix.
using FeatureMatrix = Eigen::MatrixXd;

inline FeatureMatrix stack_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return FeatureMatrix(0, 0);
  FeatureMatrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ContractViolation("stack_rows: ragged feature rows");
    X.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
  }
  return X;
}

// ---------------------------------------------------------------------------
// Class balancing

/// Row indices such that each of the `num_classes` classes appears exactly
/// `target` times: a seeded sample without replacement when the class is
/// large enough, with replacement otherwise. Output is grouped by class.
inline std::vector<std::size_t> resample_balanced_indices(const std::vector<int>& labels, int target = 938, std::uint64_t seed = 0,
                                                          int num_classes = kNumClasses) {
  if (target < 1) throw ContractViolation("resample target must be positive");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw ContractViolation("label out of range: " + std::to_string(labels[i]));
    by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(target) * num_classes);
  for (int c = 0; c < num_classes; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) {
      const std::string name = num_classes == kNumClasses ? std::string(1, kLabelChars[c]) : std::to_string(c);
      throw ContractViolation("class '" + name + "' has no samples to resample");
    }
    if (idx.size() >= static_cast<std::size_t>(target)) {
      // Partial Fisher-Yates: first `target` slots become a uniform sample.
      for (std::size_t i = 0; i < static_cast<std::size_t>(target); ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
      out.insert(out.end(), idx.begin(), idx.begin() + target);
    } else {
      for (int i = 0; i < target; ++i) out.push_back(idx[rng() % idx.size()]);
    }
  }
  return out;
}

struct LabeledFeatures {
  FeatureMatrix X;
  std::vector<int> y;
};

inline LabeledFeatures resample_balanced(const LabeledFeatures& in, int target = 938, std::uint64_t seed = 0) {
  if (static_cast<std::size_t>(in.X.rows()) != in.y.size()) throw ContractViolation("resample_balanced: row/label count mismatch");
  const auto idx = resample_balanced_indices(in.y, target, seed);
  LabeledFeatures out{FeatureMatrix(static_cast<Eigen::Index>(idx.size()), in.X.cols()), {}};
  out.y.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = in.X.row(static_cast<Eigen::Index>(idx[i]));
    out.y.push_back(in.y[idx[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

struct ScalerModel {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;  // zero-variance columns stored as 1
};

inline ScalerModel fit_scaler(const FeatureMatrix& X) {
  if (X.rows() == 0) throw ContractViolation("fit_scaler: no samples");
  ScalerModel m;
  m.mean = X.colwise().mean();
  m.std = ((X.rowwise() - m.mean).array().square().colwise().sum() / static_cast<double>(X.rows())).sqrt().matrix();
  for (Eigen::Index j = 0; j < m.std.size(); ++j)
    if (!(m.std[j] > 0.0)) m.std[j] = 1.0;
  return m;
}

inline FeatureMatrix apply_scaler(const ScalerModel& m, const FeatureMatrix& X) {
  if (X.cols() != m.mean.size())
    throw ContractViolation("scaler expects " + std::to_string(m.mean.size()) + " features, got " + std::to_string(X.cols()));
  return ((X.rowwise() - m.mean).array().rowwise() / m.std.array()).matrix();
}

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;  // k x D, orthonormal rows
  Eigen::VectorXd singular_values;

  int k() const { return static_cast<int>(components.rows()); }

  /// Same model restricted to its leading k components.
  PcaModel truncated(int k) const {
    if (k < 1 || k > this->k()) throw ContractViolation("cannot truncate PCA to " + std::to_string(k) + " components");
    return {mean, components.topRows(k), singular_values.head(k)};
  }

  /// Variance along each kept component (population normalization).
  Eigen::VectorXd explained_variance(Eigen::Index n_samples) const {
    return singular_values.array().square() / static_cast<double>(n_samples);
  }
};

inline PcaModel fit_pca(const FeatureMatrix& X, int k = 100) {
  const Eigen::Index limit = std::min(X.rows(), X.cols());
  if (k < 1 || k > limit)
    throw ContractViolation("PCA k=" + std::to_string(k) + " exceeds min(rows, dims)=" + std::to_string(limit));
  PcaModel m;
  m.mean = X.colwise().mean();
  const FeatureMatrix centered = X.rowwise() - m.mean;
  Eigen::BDCSVD<FeatureMatrix> svd(centered, Eigen::ComputeThinV);
  m.components = svd.matrixV().leftCols(k).transpose();
  m.singular_values = svd.singularValues().head(k);
  for (int r = 0; r < k; ++r) {
    Eigen::Index arg = 0;
    m.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (m.components(r, arg) < 0) m.components.row(r) *= -1.0;
  }
  return m;
}

inline FeatureMatrix apply_pca(const PcaModel& m, const FeatureMatrix& X) {
  if (X.cols() != m.mean.size())
    throw ContractViolation("PCA expects " + std::to_string(m.mean.size()) + " features, got " + std::to_string(X.cols()));
  return (X.rowwise() - m.mean) * m.components.transpose();
}

}  // namespace cvchess
