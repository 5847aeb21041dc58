#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <optional>
#include <random>

#include "cvchess/svm.hpp"

using namespace cvchess;

namespace {

SvmBinary constant_machine(double f, int dims) {
  SvmBinary s;
  s.support_vectors = Eigen::MatrixXd(0, dims);
  s.coef = Eigen::VectorXd(0);
  s.bias = f;
  return s;
}

// Gaussian blobs around well separated centres.
void blobs(int classes, int per_class, int dims, double spread, std::uint64_t seed, FeatureMatrix& X, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, spread);
  X.resize(classes * per_class, dims);
  y.clear();
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      for (int d = 0; d < dims; ++d) X(r, d) = n(rng) + ((d == c % dims) ? 4.0 * (1 + c / dims) : 0.0);
      y.push_back(c);
    }
}

}  // namespace

TEST(Kernel, RbfValues) {
  const std::vector<double> a{0, 0}, b{1, 2};
  EXPECT_DOUBLE_EQ(rbf_kernel(a, a, 0.3), 1.0);
  EXPECT_NEAR(rbf_kernel(a, b, 0.1), std::exp(-0.5), 1e-15);
  EXPECT_THROW(rbf_kernel(a, std::vector<double>{1}, 1.0), ContractViolation);
}

TEST(Smo, TwoPointsSplitAtTheMidpoint) {
  Eigen::MatrixXd X(2, 1);
  X << 0, 1;
  const SvmBinary m = train_binary(X, {-1, 1}, {10, 1.0});
  EXPECT_NEAR(m.decision(Eigen::RowVectorXd::Constant(1, 0.5)), 0.0, 1e-3);
  EXPECT_LT(m.decision(Eigen::RowVectorXd::Constant(1, 0.0)), 0);
  EXPECT_GT(m.decision(Eigen::RowVectorXd::Constant(1, 1.0)), 0);
}

TEST(Smo, XorIsSeparable) {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y{-1, -1, 1, 1};
  const SvmBinary m = train_binary(X, y, {10, 1.0});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m.decision(X.row(i)) > 0 ? 1 : -1, y[i]);
}

TEST(Smo, DualObjectiveNeverDecreases) {
  FeatureMatrix X;
  std::vector<int> c;
  blobs(2, 40, 3, 2.5, 4, X, c);  // overlapping
  std::vector<int> y;
  for (int v : c) y.push_back(v == 0 ? 1 : -1);
  SmoTrace trace;
  train_binary(X, y, {1.0, 0.5}, &trace);
  ASSERT_GT(trace.objective.size(), 2u);
  for (std::size_t i = 1; i < trace.objective.size(); ++i) EXPECT_GE(trace.objective[i], trace.objective[i - 1] - 1e-12) << i;
}

TEST(Smo, SolutionSatisfiesKkt) {
  FeatureMatrix X;
  std::vector<int> c;
  blobs(2, 30, 2, 2.0, 8, X, c);
  std::vector<int> y;
  for (int v : c) y.push_back(v == 0 ? 1 : -1);
  const double C = 2.0, gamma = 0.7, tol = 1e-3;
  SmoTrace trace;
  const SvmBinary m = train_binary(X, y, {C, gamma, tol}, &trace);
  const Eigen::VectorXd& a = trace.alpha;
  const int n = static_cast<int>(y.size());
  // Recompute the gradient of 1/2 a'Qa - 1'a from scratch.
  double sum_ay = 0, up = -1e300, low = 1e300;
  for (int i = 0; i < n; ++i) {
    EXPECT_GE(a[i], -1e-12);
    EXPECT_LE(a[i], C + 1e-12);
    sum_ay += a[i] * y[i];
    double g = -1;
    for (int j = 0; j < n; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      g += y[i] * y[j] * std::exp(-gamma * d2) * a[j];
    }
    EXPECT_NEAR(g, trace.gradient[i], 1e-8);
    const double v = -y[i] * g;
    if ((y[i] > 0 && a[i] < C) || (y[i] < 0 && a[i] > 0)) up = std::max(up, v);
    if ((y[i] > 0 && a[i] > 0) || (y[i] < 0 && a[i] < C)) low = std::min(low, v);
  }
  EXPECT_NEAR(sum_ay, 0, 1e-9);
  EXPECT_LE(up - low, tol + 1e-12);
  // Decision values agree with the dual expansion.
  for (int i = 0; i < n; ++i) {
    double f = m.bias;
    for (int j = 0; j < n; ++j) f += a[j] * y[j] * std::exp(-gamma * (X.row(i) - X.row(j)).squaredNorm());
    EXPECT_NEAR(m.decision(X.row(i)), f, 1e-9);
  }
}

TEST(Smo, RejectsBadInput) {
  Eigen::MatrixXd X(2, 1);
  X << 0, 1;
  EXPECT_THROW(train_binary(X, {1, 1}), ContractViolation);
  EXPECT_THROW(train_binary(X, {1}), ContractViolation);
  EXPECT_THROW(train_binary(X, {1, -1}, {0.0, 1.0}), ContractViolation);
}

TEST(Multiclass, ThreeSeparableClusters) {
  FeatureMatrix X;
  std::vector<int> y;
  blobs(3, 20, 2, 0.3, 1, X, y);
  SvmMulticlass m;
  train_machines(m, X, y, 10, 0.5);
  ASSERT_EQ(m.machines.size(), 3u);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Vote v = vote_projected(m, X.row(r));
    EXPECT_EQ(v.label, y[r]);
    EXPECT_EQ(v.votes[0] + v.votes[1] + v.votes[2], 3);
  }
}

TEST(Multiclass, ThirteenClassVotesSumTo78) {
  FeatureMatrix X;
  std::vector<int> y;
  blobs(13, 6, 13, 0.2, 2, X, y);
  SvmMulticlass m;
  train_machines(m, X, y, 10, 0.1);
  EXPECT_EQ(m.machines.size(), 78u);
  int correct = 0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Vote v = vote_projected(m, X.row(r));
    int total = 0;
    for (int c : v.votes) total += c;
    EXPECT_EQ(total, 78);
    correct += v.label == y[r];
  }
  EXPECT_EQ(correct, X.rows());
}

TEST(Multiclass, TiesGoToStrongerDuelsThenClassOrder) {
  SvmMulticlass m;
  m.classes = {0, 1, 2};
  // 0 beats 1 (|f| 1), 2 beats 0 (0.5), 1 beats 2 (2): one vote each.
  m.machines = {{0, 1, constant_machine(1.0, 1)}, {0, 2, constant_machine(-0.5, 1)}, {1, 2, constant_machine(2.0, 1)}};
  const Vote v = vote_projected(m, Eigen::RowVectorXd::Zero(1));
  EXPECT_EQ(v.votes, (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(v.label, 1);
  m.machines = {{0, 1, constant_machine(1.0, 1)}, {0, 2, constant_machine(-1.0, 1)}, {1, 2, constant_machine(1.0, 1)}};
  EXPECT_EQ(vote_projected(m, Eigen::RowVectorXd::Zero(1)).label, 0);
}

TEST(Pipeline, PredictsTrainingPointsAndChecksDimension) {
  FeatureMatrix X;
  std::vector<int> y;
  blobs(4, 15, 8, 0.3, 3, X, y);
  const SvmMulticlass m = fit_svm_pipeline(X, y, {4, 10, 0.1});
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    std::vector<double> f(X.cols());
    for (Eigen::Index d = 0; d < X.cols(); ++d) f[d] = X(r, d);
    EXPECT_EQ(class_index(predict(m, f)), y[r]);
  }
  EXPECT_THROW(predict(m, std::vector<double>(3)), ContractViolation);
}

TEST(Folds, StratifiedAndDeterministic) {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10 + 3 * c; ++i) y.push_back(c);
  const auto f = stratified_folds(y, 5, 11);
  EXPECT_EQ(f, stratified_folds(y, 5, 11));
  for (int c = 0; c < 3; ++c) {
    std::map<int, int> per_fold;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) ++per_fold[f[i]];
    int lo = 1 << 30, hi = 0;
    for (int k = 0; k < 5; ++k) {
      lo = std::min(lo, per_fold[k]);
      hi = std::max(hi, per_fold[k]);
    }
    EXPECT_LE(hi - lo, 1);
  }
  EXPECT_THROW(stratified_folds({0, 0, 1}, 2, 0), ContractViolation);
}

TEST(GridSearch, SelectsAMaximalCellWithTheSmallestKey) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 1);
  FeatureMatrix X(120, 6);
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    const int c = i % 2;
    for (int d = 0; d < 6; ++d) X(i, d) = n(rng);
    X(i, 0) += c ? 0.8 : -0.8;
    y.push_back(c);
  }
  const std::vector<SvmParams> grid{{6, 10, 0.01}, {3, 1, 0.001}, {6, 1, 2.0}, {3, 10, 0.01}};
  const auto rep = grid_search(X, y, grid, 5, 0);
  ASSERT_EQ(rep.mean_cv_accuracy.size(), 4u);
  const double top = *std::max_element(rep.mean_cv_accuracy.begin(), rep.mean_cv_accuracy.end());
  std::optional<SvmParams> want;
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (rep.mean_cv_accuracy[g] == top && (!want || grid[g].key() < want->key())) want = grid[g];
  EXPECT_EQ(rep.selected, *want);
  EXPECT_GT(top, 0.7);
  EXPECT_EQ(grid_search(X, y, grid, 5, 0).mean_cv_accuracy, rep.mean_cv_accuracy);
}

TEST(GridSearch, TiesResolveToSmallestKey) {
  FeatureMatrix X;
  std::vector<int> y;
  blobs(2, 10, 3, 0.1, 5, X, y);  // every cell is perfect
  const std::vector<SvmParams> grid{{3, 10, 0.1}, {2, 10, 0.1}, {2, 1, 0.5}, {3, 1, 0.1}};
  const auto rep = grid_search(X, y, grid, 2, 0);
  for (double a : rep.mean_cv_accuracy) EXPECT_DOUBLE_EQ(a, 1.0);
  EXPECT_EQ(rep.selected, (SvmParams{2, 1, 0.5}));
}

TEST(ModelFile, RoundTripIsExact) {
  HogParams hp;
  hp.size = 16;  // 36-dim toy descriptor
  FeatureMatrix X;
  std::vector<int> y;
  blobs(3, 12, hp.dims(), 0.5, 6, X, y);
  const SvmMulticlass m = fit_svm_pipeline(X, y, {5, 10, 0.05}, hp);
  const auto bytes = encode_svm(m);
  const SvmMulticlass back = decode_svm(bytes);
  EXPECT_EQ(encode_svm(back), bytes);
  EXPECT_EQ(back.hog, hp);
  EXPECT_EQ(back.classes, m.classes);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    std::vector<double> f(X.cols());
    for (Eigen::Index d = 0; d < X.cols(); ++d) f[d] = X(r, d);
    EXPECT_EQ(predict(back, f), predict(m, f));
  }
}

TEST(ModelFile, CorruptionIsReported) {
  HogParams hp;
  hp.size = 16;
  FeatureMatrix X;
  std::vector<int> y;
  blobs(2, 8, hp.dims(), 0.5, 7, X, y);
  auto bytes = encode_svm(fit_svm_pipeline(X, y, {3, 10, 0.05}, hp));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_svm(bad_magic), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_THROW(decode_svm(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_svm(trailing), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_svm(bad_version), FormatError);
}
