#pragma once

// RBF-kernel SVM: SMO solver for the binary dual, one-vs-one multiclass
// voting, stratified grid search and the "CVSV" model file.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cvchess/errors.hpp"
#include "cvchess/features.hpp"
#include "cvchess/notation.hpp"

namespace cvchess {

inline double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw ContractViolation("rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

struct SvmBinary {
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd coef;             // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.01;
  double C = 10.0;

  double decision(const Eigen::RowVectorXd& x) const {
    if (x.size() != support_vectors.cols()) throw ContractViolation("SVM feature dimension mismatch");
    const Eigen::VectorXd d2 = (support_vectors.rowwise() - x).rowwise().squaredNorm();
    return coef.dot((-gamma * d2.array()).exp().matrix()) + bias;
  }
};

struct SmoOptions {
  double C = 10.0;
  double gamma = 0.01;
  double tol = 1e-3;
  long max_iter = 1'000'000;
};

/// Diagnostics of one solve. `objective` (the dual, maximization form) is
/// recorded per iteration when requested.
struct SmoTrace {
  long iterations = 0;
  double max_violation = 0.0;
  std::vector<double> objective;
  Eigen::VectorXd alpha;
  Eigen::VectorXd gradient;  // of the minimization form, Q*alpha - 1
};

/// Solves min 1/2 a'Qa - 1'a s.t. y'a = 0, 0 <= a <= C with second-order
/// working-pair selection until the maximal KKT violation drops below tol.
inline SvmBinary train_binary(const Eigen::MatrixXd& X, const std::vector<int>& y, const SmoOptions& opt = {}, SmoTrace* trace = nullptr) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw ContractViolation("train_binary: row/label count mismatch");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 1 && v != -1) throw ContractViolation("train_binary: labels must be -1 or +1");
    (v > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw ContractViolation("train_binary: both classes must be present");
  if (!(opt.C > 0) || !(opt.gamma >= 0) || !(opt.tol > 0)) throw ContractViolation("train_binary: C and tol must be positive, gamma non-negative");

  // Full kernel matrix; the per-machine sample counts here are modest.
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  Eigen::MatrixXd K = X * X.transpose();
  K = ((K * -2.0).colwise() + sq).rowwise() + sq.transpose();
  K = (-opt.gamma * K.array().max(0.0)).exp().matrix();

  Eigen::VectorXd yd(n);
  for (Eigen::Index i = 0; i < n; ++i) yd[i] = y[i];
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
  const double C = opt.C, tau = 1e-12;
  auto up = [&](Eigen::Index t) { return (yd[t] > 0 && alpha[t] < C) || (yd[t] < 0 && alpha[t] > 0); };
  auto low = [&](Eigen::Index t) { return (yd[t] > 0 && alpha[t] > 0) || (yd[t] < 0 && alpha[t] < C); };
  auto objective = [&] { return 0.5 * alpha.sum() - 0.5 * alpha.dot(G); };  // = 1'a - 1/2 a'Qa

  long iter = 0;
  double violation = 0.0;
  if (trace) trace->objective.push_back(objective());
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -yd[t] * G[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) gmin = v;
    }
    violation = gmax - gmin;
    if (i < 0 || violation < opt.tol || iter >= opt.max_iter) break;

    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!low(t)) continue;
      const double b = gmax + yd[t] * G[t];
      if (b <= 0) continue;
      double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
      if (a <= 0) a = tau;
      const double score = -(b * b) / a;
      if (score < best) {
        best = score;
        j = t;
      }
    }
    if (j < 0) break;

    // Analytic two-variable update (clipped to the box along y'a = 0).
    const double old_ai = alpha[i], old_aj = alpha[j];
    const double Qii = K(i, i), Qjj = K(j, j), Qij = yd[i] * yd[j] * K(i, j);
    if (yd[i] != yd[j]) {
      double quad = Qii + Qjj + 2 * Qij;
      if (quad <= 0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Qii + Qjj - 2 * Qij;
      if (quad <= 0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    G.noalias() += (dai * yd[i]) * (yd.cwiseProduct(K.col(i))) + (daj * yd[j]) * (yd.cwiseProduct(K.col(j)));
    ++iter;
    if (trace) trace->objective.push_back(objective());
  }

  // rho: mean of y*G over free vectors, else midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity(), sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yd[t] * G[t];
    if (alpha[t] > 0 && alpha[t] < C) {
      ++n_free;
      sum_free += yg;
    } else if ((alpha[t] >= C && yd[t] < 0) || (alpha[t] <= 0 && yd[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2;

  SvmBinary m;
  m.gamma = opt.gamma;
  m.C = C;
  m.bias = -rho;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0) sv.push_back(t);
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    m.coef[static_cast<Eigen::Index>(k)] = alpha[sv[k]] * yd[sv[k]];
  }
  if (trace) {
    trace->iterations = iter;
    trace->max_violation = violation;
    trace->alpha = alpha;
    trace->gradient = G;
  }
  return m;
}

// ---------------------------------------------------------------------------
// One-vs-one multiclass

struct SvmParams {
  int pca_components = 100;
  double C = 10.0;
  double gamma = 0.01;

  auto key() const { return std::tuple(pca_components, C, gamma); }
  bool operator==(const SvmParams&) const = default;
};

struct SvmMulticlass {
  HogParams hog;
  ScalerModel scaler;
  PcaModel pca;
  std::vector<int> classes;  // class indices, ascending
  struct Machine {
    int a = 0, b = 0;  // positive class a, negative class b
    SvmBinary svm;
  };
  std::vector<Machine> machines;
};

struct Vote {
  int label = -1;
  std::vector<int> votes;  // per entry of `classes`
  std::vector<double> strength;
};

/// Majority vote over pairwise winners; ties go to the larger summed
/// |decision| of the won duels, then to the earlier class.
inline Vote vote_projected(const SvmMulticlass& m, const Eigen::RowVectorXd& z) {
  const std::size_t nc = m.classes.size();
  Vote v{-1, std::vector<int>(nc, 0), std::vector<double>(nc, 0.0)};
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < nc; ++i) pos[m.classes[i]] = i;
  for (const auto& mc : m.machines) {
    const double f = mc.svm.decision(z);
    const std::size_t w = pos.at(f > 0 ? mc.a : mc.b);
    ++v.votes[w];
    v.strength[w] += std::abs(f);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < nc; ++i)
    if (v.votes[i] > v.votes[best] || (v.votes[i] == v.votes[best] && v.strength[i] > v.strength[best])) best = i;
  v.label = m.classes[best];
  return v;
}

/// Trains machines for every class pair on already-projected features.
inline void train_machines(SvmMulticlass& m, const Eigen::MatrixXd& Z, const std::vector<int>& y, double C, double gamma, double tol = 1e-3) {
  std::map<int, std::vector<Eigen::Index>> rows;
  for (std::size_t i = 0; i < y.size(); ++i) rows[y[i]].push_back(static_cast<Eigen::Index>(i));
  if (rows.size() < 2) throw ContractViolation("multiclass SVM needs at least two classes");
  m.classes.clear();
  for (const auto& [c, r] : rows) m.classes.push_back(c);
  m.machines.clear();
  SmoOptions opt{C, gamma, tol};
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    for (std::size_t j = i + 1; j < m.classes.size(); ++j) {
      const auto& ra = rows[m.classes[i]];
      const auto& rb = rows[m.classes[j]];
      Eigen::MatrixXd Xp(static_cast<Eigen::Index>(ra.size() + rb.size()), Z.cols());
      std::vector<int> yp;
      Eigen::Index k = 0;
      for (auto r : ra) {
        Xp.row(k++) = Z.row(r);
        yp.push_back(1);
      }
      for (auto r : rb) {
        Xp.row(k++) = Z.row(r);
        yp.push_back(-1);
      }
      m.machines.push_back({m.classes[i], m.classes[j], train_binary(Xp, yp, opt)});
    }
}

/// scaler -> PCA -> one-vs-one machines, fitted on raw HOG rows.
inline SvmMulticlass fit_svm_pipeline(const FeatureMatrix& X, const std::vector<int>& y, const SvmParams& p, const HogParams& hog = {},
                                      double tol = 1e-3) {
  SvmMulticlass m;
  m.hog = hog;
  m.scaler = fit_scaler(X);
  const FeatureMatrix S = apply_scaler(m.scaler, X);
  m.pca = fit_pca(S, p.pca_components);
  train_machines(m, apply_pca(m.pca, S), y, p.C, p.gamma, tol);
  return m;
}

inline Vote predict_vote(const SvmMulticlass& m, std::span<const double> features) {
  if (static_cast<Eigen::Index>(features.size()) != m.scaler.mean.size())
    throw ContractViolation("SVM expects " + std::to_string(m.scaler.mean.size()) + " features, got " + std::to_string(features.size()));
  const Eigen::Map<const Eigen::RowVectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
  const Eigen::RowVectorXd s = ((x - m.scaler.mean).array() / m.scaler.std.array()).matrix();
  return vote_projected(m, (s - m.pca.mean) * m.pca.components.transpose());
}

inline PieceLabel predict(const SvmMulticlass& m, std::span<const double> features) {
  return label_from_class(predict_vote(m, features).label);
}

inline PieceLabel predict(const SvmMulticlass& m, const SquareCrop& crop) { return predict(m, hog(crop, m.hog)); }

// ---------------------------------------------------------------------------
// Grid search

/// Fold id per sample: each class is shuffled (seeded) and dealt to folds
/// round-robin, so per-fold class counts differ by at most one.
inline std::vector<int> stratified_folds(const std::vector<int>& y, int folds, std::uint64_t seed) {
  if (folds < 2) throw ContractViolation("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<int> fold(y.size(), -1);
  for (auto& [c, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(folds))
      throw ContractViolation("class " + std::to_string(c) + " has " + std::to_string(idx.size()) + " samples, fewer than " +
                              std::to_string(folds) + " folds");
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>(k % folds);
  }
  return fold;
}

struct GridSearchReport {
  std::vector<SvmParams> grid;
  std::vector<double> mean_cv_accuracy;
  SvmParams selected;
};

/// Scaler and PCA are refitted inside every fold; PCA is fitted once per
/// fold at the largest requested k and truncated for smaller ones.
inline GridSearchReport grid_search(const FeatureMatrix& X, const std::vector<int>& y, const std::vector<SvmParams>& grid, int folds = 5,
                                    std::uint64_t seed = 0, double tol = 1e-3) {
  if (grid.empty()) throw ContractViolation("grid_search: empty grid");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ContractViolation("grid_search: row/label count mismatch");
  const auto fold = stratified_folds(y, folds, seed);
  int kmax = 0;
  for (const auto& g : grid) kmax = std::max(kmax, g.pca_components);

  GridSearchReport rep;
  rep.grid = grid;
  rep.mean_cv_accuracy.assign(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
    FeatureMatrix Xtr(static_cast<Eigen::Index>(tr.size()), X.cols()), Xte(static_cast<Eigen::Index>(te.size()), X.cols());
    std::vector<int> ytr, yte;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      Xtr.row(static_cast<Eigen::Index>(k)) = X.row(tr[k]);
      ytr.push_back(y[tr[k]]);
    }
    for (std::size_t k = 0; k < te.size(); ++k) {
      Xte.row(static_cast<Eigen::Index>(k)) = X.row(te[k]);
      yte.push_back(y[te[k]]);
    }
    SvmMulticlass base;
    base.scaler = fit_scaler(Xtr);
    const FeatureMatrix Str = apply_scaler(base.scaler, Xtr), Ste = apply_scaler(base.scaler, Xte);
    const PcaModel full = fit_pca(Str, kmax);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      SvmMulticlass m = base;
      m.pca = full.truncated(grid[g].pca_components);
      train_machines(m, apply_pca(m.pca, Str), ytr, grid[g].C, grid[g].gamma, tol);
      const FeatureMatrix Zte = apply_pca(m.pca, Ste);
      std::size_t ok = 0;
      for (Eigen::Index r = 0; r < Zte.rows(); ++r) ok += vote_projected(m, Zte.row(r)).label == yte[static_cast<std::size_t>(r)];
      rep.mean_cv_accuracy[g] += static_cast<double>(ok) / static_cast<double>(te.size()) / folds;
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (rep.mean_cv_accuracy[g] > rep.mean_cv_accuracy[best] ||
        (rep.mean_cv_accuracy[g] == rep.mean_cv_accuracy[best] && grid[g].key() < grid[best].key()))
      best = g;
  rep.selected = grid[best];
  return rep;
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr char kSvmMagic[4] = {'C', 'V', 'S', 'V'};
inline constexpr std::uint32_t kSvmVersion = 1;

namespace detail {

class SvmWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto b = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(b >> (8 * i)));
  }
  template <typename M>
  void reals(const M& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  std::vector<std::uint8_t> out;
};

class SvmReader {
 public:
  explicit SvmReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    need(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8, what);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64(what);
    return m;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) throw FormatError(std::string("SVM model truncated while reading ") + what);
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_svm(const SvmMulticlass& m) {
  detail::SvmWriter w;
  w.out.assign(kSvmMagic, kSvmMagic + 4);
  w.u32(kSvmVersion);
  w.u32(static_cast<std::uint32_t>(m.hog.size));
  w.u32(static_cast<std::uint32_t>(m.hog.cell));
  w.u32(static_cast<std::uint32_t>(m.hog.block));
  w.u32(static_cast<std::uint32_t>(m.hog.bins));
  const auto dims = static_cast<std::uint32_t>(m.scaler.mean.size());
  w.u32(dims);
  w.reals(m.scaler.mean);
  w.reals(m.scaler.std);
  w.u32(static_cast<std::uint32_t>(m.pca.k()));
  w.reals(m.pca.mean);
  w.reals(m.pca.components);
  w.reals(m.pca.singular_values.transpose());
  w.u32(static_cast<std::uint32_t>(m.classes.size()));
  for (int c : m.classes) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(m.machines.size()));
  for (const auto& mc : m.machines) {
    w.u32(static_cast<std::uint32_t>(mc.a));
    w.u32(static_cast<std::uint32_t>(mc.b));
    w.f64(mc.svm.gamma);
    w.f64(mc.svm.C);
    w.f64(mc.svm.bias);
    w.u32(static_cast<std::uint32_t>(mc.svm.coef.size()));
    w.reals(mc.svm.coef.transpose());
    w.reals(mc.svm.support_vectors);
  }
  return std::move(w.out);
}

inline SvmMulticlass decode_svm(std::span<const std::uint8_t> bytes) {
  detail::SvmReader r(bytes);
  if (bytes.size() < 4 || !std::equal(kSvmMagic, kSvmMagic + 4, bytes.begin())) throw FormatError("not an SVM model file: bad magic");
  (void)r.u32("magic");
  const std::uint32_t version = r.u32("version");
  if (version != kSvmVersion) throw FormatError("unsupported SVM model version " + std::to_string(version));
  SvmMulticlass m;
  m.hog.size = static_cast<int>(r.u32("HOG size"));
  m.hog.cell = static_cast<int>(r.u32("HOG cell"));
  m.hog.block = static_cast<int>(r.u32("HOG block"));
  m.hog.bins = static_cast<int>(r.u32("HOG bins"));
  try {
    m.hog.validate();
  } catch (const ContractViolation&) {
    throw FormatError("SVM model has inconsistent HOG geometry");
  }
  const Eigen::Index dims = r.u32("feature count");
  if (dims != m.hog.dims()) throw FormatError("SVM model feature count does not match its HOG geometry");
  m.scaler.mean = r.matrix(1, dims, "scaler mean");
  m.scaler.std = r.matrix(1, dims, "scaler std");
  const Eigen::Index k = r.u32("PCA component count");
  if (k < 1 || k > dims) throw FormatError("SVM model PCA component count out of range");
  m.pca.mean = r.matrix(1, dims, "PCA mean");
  m.pca.components = r.matrix(k, dims, "PCA components");
  m.pca.singular_values = r.matrix(k, 1, "PCA singular values");
  const std::uint32_t nc = r.u32("class count");
  if (nc < 2 || nc > kNumClasses) throw FormatError("SVM model class count out of range");
  for (std::uint32_t i = 0; i < nc; ++i) {
    const auto c = static_cast<int>(r.u32("class list"));
    if (c >= kNumClasses || (!m.classes.empty() && c <= m.classes.back())) throw FormatError("SVM model class list invalid");
    m.classes.push_back(c);
  }
  const std::uint32_t nm = r.u32("machine count");
  if (nm != nc * (nc - 1) / 2)
    throw FormatError("SVM model has " + std::to_string(nm) + " machines, expected " + std::to_string(nc * (nc - 1) / 2));
  for (std::uint32_t i = 0; i < nm; ++i) {
    SvmMulticlass::Machine mc;
    mc.a = static_cast<int>(r.u32("machine classes"));
    mc.b = static_cast<int>(r.u32("machine classes"));
    if (std::find(m.classes.begin(), m.classes.end(), mc.a) == m.classes.end() ||
        std::find(m.classes.begin(), m.classes.end(), mc.b) == m.classes.end())
      throw FormatError("SVM machine refers to an unknown class");
    mc.svm.gamma = r.f64("gamma");
    mc.svm.C = r.f64("C");
    mc.svm.bias = r.f64("bias");
    const Eigen::Index nsv = r.u32("support vector count");
    mc.svm.coef = r.matrix(nsv, 1, "coefficients");
    mc.svm.support_vectors = r.matrix(nsv, k, "support vectors");
    m.machines.push_back(std::move(mc));
  }
  if (!r.done()) throw FormatError("trailing bytes after SVM model");
  return m;
}

inline void save_svm(const std::filesystem::path& path, const SvmMulticlass& m) { write_file_bytes(path, encode_svm(m)); }
inline SvmMulticlass load_svm(const std::filesystem::path& path) { return decode_svm(read_file_bytes(path)); }

}  // namespace cvchess
