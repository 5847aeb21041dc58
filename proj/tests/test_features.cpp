#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cvchess/features.hpp"

using namespace cvchess;

namespace {

// Direct HOG: per pixel, each bin gets magnitude * max(0, 1 - d / 20) where
// d is the circular distance from the orientation to the bin centre.
std::vector<double> brute_hog(const GrayF32& g) {
  double cells[8][8][9] = {};
  for (int y = 1; y < 63; ++y)
    for (int x = 1; x < 63; ++x) {
      const double gx = g.at(x + 1, y) - g.at(x - 1, y), gy = g.at(x, y + 1) - g.at(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0) continue;
      double a = std::fmod(std::atan2(gy, gx) * 180.0 / M_PI + 360.0, 180.0);
      for (int b = 0; b < 9; ++b) {
        double d = std::abs(a - (b + 0.5) * 20.0);
        d = std::min(d, 180.0 - d);
        cells[y / 8][x / 8][b] += mag * std::max(0.0, 1.0 - d / 20.0);
      }
    }
  std::vector<double> out;
  for (int by = 0; by < 7; ++by)
    for (int bx = 0; bx < 7; ++bx) {
      std::vector<double> v;
      for (int cy = 0; cy < 2; ++cy)
        for (int cx = 0; cx < 2; ++cx)
          for (int b = 0; b < 9; ++b) v.push_back(cells[by + cy][bx + cx][b]);
      for (int pass = 0; pass < 2; ++pass) {
        double n = 1e-10;
        for (double e : v) n += e * e;
        n = std::sqrt(n);
        for (double& e : v) e = pass == 0 ? std::min(e / n, 0.2) : e / n;
      }
      out.insert(out.end(), v.begin(), v.end());
    }
  return out;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

GrayF32 stripes(bool vary_along_y, int period = 8) {
  GrayF32 g(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) g.at(x, y) = ((vary_along_y ? y : x) % period) < period / 2 ? 30.0f : 220.0f;
  return g;
}

double bin_energy(const std::vector<double>& h, int bin) {
  double e = 0;
  for (std::size_t i = bin; i < h.size(); i += 9) e += h[i];
  return e;
}

}  // namespace

TEST(Hog, ConstantCropIsZero) {
  const auto h = hog(Raster(50, 50, 3, 117));
  ASSERT_EQ(h.size(), static_cast<std::size_t>(kHogDims));
  for (double v : h) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(HogParams{}.dims(), 1764);
}

TEST(Hog, MatchesBruteForceOnRandomImages) {
  std::mt19937 rng(17);
  for (int t = 0; t < 5; ++t) {
    GrayF32 g(64, 64);
    for (auto& v : g.data) v = static_cast<float>(rng() % 256);
    const auto got = hog_gray(g), want = brute_hog(g);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << i;
  }
}

TEST(Hog, MatchesBruteForceOnStripes) {
  for (bool along_y : {false, true}) {
    const auto got = hog_gray(stripes(along_y)), want = brute_hog(stripes(along_y));
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(Hog, StripesVaryingVerticallyFillThe90DegreeBin) {
  // Intensity changing along y: every gradient points at 90 degrees, the
  // centre of bin 4.
  const auto h = hog_gray(stripes(true));
  const double e4 = bin_energy(h, 4);
  double rest = 0;
  for (int b = 0; b < 9; ++b)
    if (b != 4) rest += bin_energy(h, b);
  EXPECT_GT(e4, 0);
  EXPECT_LT(rest, 1e-9 * e4);
  for (std::size_t blk = 0; blk < 49; ++blk)
    for (int c = 0; c < 4; ++c) EXPECT_GT(h[blk * 36 + c * 9 + 4], 0.0) << blk;
}

TEST(Hog, StripesVaryingHorizontallySplitAcrossZero) {
  // 0 degrees sits half-way between the first and last bin centres.
  const auto h = hog_gray(stripes(false));
  EXPECT_NEAR(bin_energy(h, 0), bin_energy(h, 8), 1e-9);
  EXPECT_GT(bin_energy(h, 0), 0);
  for (int b = 1; b < 8; ++b) EXPECT_LT(bin_energy(h, b), 1e-12);
}

TEST(Hog, TranslationCovariantAtCellGranularity) {
  auto patch_at = [](int cx) {
    GrayF32 g(64, 64);
    for (int y = 16; y < 32; ++y)
      for (int x = cx * 8; x < cx * 8 + 16; ++x) g.at(x, y) = (y % 4) < 2 ? 40.0f : 200.0f;
    return g;
  };
  const auto a = hog_gray(patch_at(2)), b = hog_gray(patch_at(3));
  for (int by = 0; by < 7; ++by)
    for (int bx = 0; bx < 6; ++bx)
      for (int k = 0; k < 36; ++k)
        EXPECT_NEAR(a[(by * 7 + bx) * 36 + k], b[(by * 7 + bx + 1) * 36 + k], 1e-12);
}

TEST(Hog, BlockNormsAreBounded) {
  std::mt19937 rng(5);
  Raster r(50, 50, 3);
  for (auto& v : r.data) v = static_cast<std::uint8_t>(rng());
  const auto h = hog(r);
  for (int blk = 0; blk < 49; ++blk) {
    double n = 0;
    for (int k = 0; k < 36; ++k) {
      EXPECT_GE(h[blk * 36 + k], 0);
      n += h[blk * 36 + k] * h[blk * 36 + k];
    }
    EXPECT_NEAR(n, 1.0, 1e-6);
  }
}

TEST(Hog, RejectsInconsistentGeometry) {
  HogParams p;
  p.cell = 7;
  EXPECT_THROW(p.validate(), ContractViolation);
  EXPECT_THROW(hog_gray(GrayF32(32, 32)), ContractViolation);
}

TEST(Resample, HistogramIsExactlyUniform) {
  std::mt19937 rng(9);
  std::vector<int> labels;
  for (int i = 0; i < 5000; ++i) labels.push_back(static_cast<int>(rng() % 13) == 12 ? 12 : static_cast<int>(rng() % 13));
  for (int c = 0; c < 13; ++c) labels.push_back(c);  // every class present
  for (int target : {1, 50, 938}) {
    const auto idx = resample_balanced_indices(labels, target, 3);
    ASSERT_EQ(idx.size(), static_cast<std::size_t>(13 * target));
    std::map<int, int> h;
    for (auto i : idx) ++h[labels[i]];
    for (int c = 0; c < 13; ++c) EXPECT_EQ(h[c], target);
  }
}

TEST(Resample, DownsamplingDrawsDistinctRows) {
  std::vector<int> labels(2000, 0);
  for (int i = 0; i < 20; ++i) labels.push_back(1);
  const auto idx = resample_balanced_indices(labels, 100, 1, 2);
  const std::set<std::size_t> first(idx.begin(), idx.begin() + 100);
  EXPECT_EQ(first.size(), 100u);
  EXPECT_EQ(idx, resample_balanced_indices(labels, 100, 1, 2));
  EXPECT_NE(idx, resample_balanced_indices(labels, 100, 2, 2));
}

TEST(Resample, MissingClassIsNamed) {
  std::vector<int> labels{0, 1, 2};  // P, N, B present; R is the first gap
  try {
    resample_balanced_indices(labels, 5);
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("'R'"), std::string::npos) << e.what();
  }
}

TEST(Resample, CarriesFeatureRows) {
  LabeledFeatures in{FeatureMatrix(13, 2), {}};
  for (int i = 0; i < 13; ++i) {
    in.X(i, 0) = i;
    in.X(i, 1) = -i;
    in.y.push_back(i);
  }
  const auto out = resample_balanced(in, 3, 0);
  for (Eigen::Index r = 0; r < out.X.rows(); ++r) EXPECT_EQ(out.X(r, 0), out.y[r]);
}

TEST(Scaler, TwoPointColumn) {
  FeatureMatrix X(2, 2);
  X << 0, 5, 2, 5;
  const ScalerModel m = fit_scaler(X);
  const FeatureMatrix Z = apply_scaler(m, X);
  EXPECT_DOUBLE_EQ(Z(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(Z(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.std[1], 1.0);
  EXPECT_DOUBLE_EQ(Z(0, 1), 0.0);
  EXPECT_THROW(apply_scaler(m, FeatureMatrix(1, 3)), ContractViolation);
}

TEST(Scaler, StandardizedColumnsHaveUnitVariance) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n(3, 7);
  FeatureMatrix X(200, 5);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(rng);
  const FeatureMatrix Z = apply_scaler(fit_scaler(X), X);
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_NEAR(Z.col(j).mean(), 0, 1e-12);
    EXPECT_NEAR(Z.col(j).squaredNorm() / 200, 1, 1e-12);
  }
}

TEST(Pca, PointsOnALineReconstructExactly) {
  FeatureMatrix X(20, 4);
  const Eigen::RowVector4d dir(1, -2, 0.5, 3), origin(4, 1, -1, 2);
  for (int i = 0; i < 20; ++i) X.row(i) = origin + (i * 0.37 - 3) * dir;
  const PcaModel m = fit_pca(X, 1);
  const FeatureMatrix recon = (apply_pca(m, X) * m.components).rowwise() + m.mean;
  EXPECT_LT((recon - X).cwiseAbs().maxCoeff(), 1e-10);
  // Sign rule: the largest-magnitude loading is positive.
  EXPECT_GT(m.components(0, 3), 0);
}

TEST(Pca, ExplainedVarianceMatchesJacobiEigensolve) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-3, 3);
  FeatureMatrix X(10, 6);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  std::vector<std::vector<double>> cov(6, std::vector<double>(6, 0));
  for (int i = 0; i < 10; ++i)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) cov[a][b] += (X(i, a) - mean[a]) * (X(i, b) - mean[b]) / 10.0;
  const auto ev = jacobi_eigenvalues(cov);
  const Eigen::VectorXd got = fit_pca(X, 6).explained_variance(10);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(got[i], ev[i], 1e-10);
}

TEST(Pca, ComponentsOrthonormalAndTruncationConsistent) {
  std::mt19937 rng(22);
  std::normal_distribution<double> n(0, 1);
  FeatureMatrix X(60, 30);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(rng) * (1 + i % 30);
  const PcaModel full = fit_pca(X, 20);
  const Eigen::MatrixXd gram = full.components * full.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-10);
  const PcaModel small = fit_pca(X, 5), cut = full.truncated(5);
  EXPECT_LT((small.components - cut.components).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((apply_pca(small, X) - apply_pca(cut, X)).cwiseAbs().maxCoeff(), 1e-9);
  for (int i = 1; i < 20; ++i) EXPECT_GE(full.singular_values[i - 1], full.singular_values[i]);
  EXPECT_THROW(fit_pca(X, 61), ContractViolation);
  EXPECT_THROW(full.truncated(21), ContractViolation);
}
