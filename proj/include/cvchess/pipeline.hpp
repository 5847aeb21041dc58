#pragma once

// Photo -> FEN glue shared by the CLI and the end-to-end tests.

#include <algorithm>
#include <array>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cvchess/board.hpp"
#include "cvchess/config.hpp"
#include "cvchess/datakit.hpp"
#include "cvchess/features.hpp"
#include "cvchess/geometry.hpp"
#include "cvchess/net/chessnet.hpp"
#include "cvchess/net/train.hpp"
#include "cvchess/notation.hpp"
#include "cvchess/raster.hpp"
#include "cvchess/svm.hpp"

namespace cvchess {

struct Rectified {
  Quad quad;
  Raster warped;
};

/// Detects the board and warps it to 400x400, then applies `rotate`
/// clockwise quarter turns. Throws NoBoardFound.
inline Rectified rectify(const Raster& photo, const DetectParams& params = {}, int rotate = 0) {
  Rectified r;
  r.quad = detect_board_quad(photo, params);
  r.warped = warp_to_canonical(photo, r.quad);
  if (((rotate % 4) + 4) % 4 != 0) r.warped = rotate_quarter(r.warped, rotate);
  return r;
}

inline BoardState board_from_classes(const std::array<int, 64>& classes) {
  BoardState b;
  for (int s = 0; s < 64; ++s) b[s] = label_from_class(classes[s]);
  return b;
}

inline std::array<int, 64> board_classes(const BoardState& b) {
  std::array<int, 64> out{};
  for (int s = 0; s < 64; ++s) out[s] = class_index(b[s]);
  return out;
}

/// Eval-mode CNN classification of rectified boards, in chunks of `batch`.
template <typename T>
std::vector<BoardState> classify_cnn(net::ChessNet<T>& model, std::span<const Raster* const> boards, int batch = 8) {
  net::NoGradGuard guard;
  std::vector<BoardState> out;
  for (std::size_t i = 0; i < boards.size(); i += batch) {
    const auto chunk = boards.subspan(i, std::min<std::size_t>(batch, boards.size() - i));
    for (const auto& cls : net::argmax_squares(model.forward(net::images_to_tensor<T>(chunk), net::Mode::Eval)))
      out.push_back(board_from_classes(cls));
  }
  return out;
}

template <typename T>
BoardState classify_cnn(net::ChessNet<T>& model, const Raster& board) {
  const Raster* p = &board;
  return classify_cnn(model, std::span<const Raster* const>(&p, 1)).front();
}

/// HOG rows of the 64 crops (a8..h1) of a rectified board.
inline std::vector<std::vector<double>> square_features(const Raster& warped, const GridLines& grid, const HogParams& hog_params) {
  std::vector<std::vector<double>> rows;
  rows.reserve(64);
  for (const auto& c : segment(warped, grid)) rows.push_back(hog(c, hog_params));
  return rows;
}

inline GridLines board_grid(const Raster& warped, const Config& cfg) {
  return cfg.use_hough ? hough_grid_refine(warped, cfg.hough) : GridLines::uniform();
}

inline BoardState classify_svm(const SvmMulticlass& model, const Raster& warped, const GridLines& grid) {
  BoardState b;
  const auto rows = square_features(warped, grid, model.hog);
  for (int s = 0; s < 64; ++s) b[s] = predict(model, rows[s]);
  return b;
}

// ---------------------------------------------------------------------------
// Dataset plumbing

struct RectifiedSet {
  std::vector<net::BoardExample> examples;
  std::vector<const ManifestEntry*> entries;  // parallel to examples
  std::vector<const ManifestEntry*> failures;  // no board found
};

/// Loads and rectifies the manifest entries of one split (all when `which`
/// is empty). Detection failures are recorded, not thrown.
inline RectifiedSet rectify_manifest(const Manifest& m, std::optional<Split> which, const std::filesystem::path& root, const Config& cfg) {
  RectifiedSet out;
  for (const auto& e : m.entries) {
    if (which && e.split != which) continue;
    const Raster photo = load_ppm(root / e.image);
    try {
      Rectified r = rectify(photo, cfg.detect, cfg.rotate);
      out.examples.push_back({std::move(r.warped), board_classes(entry_board(e.fen))});
      out.entries.push_back(&e);
    } catch (const NoBoardFound&) {
      out.failures.push_back(&e);
    }
  }
  return out;
}

/// One HOG row per square of every board, labelled with its class.
inline LabeledFeatures square_corpus(const std::vector<net::BoardExample>& boards, const Config& cfg) {
  std::vector<std::vector<double>> rows;
  LabeledFeatures out;
  for (const auto& b : boards) {
    auto r = square_features(b.image, board_grid(b.image, cfg), cfg.hog);
    for (int s = 0; s < 64; ++s) {
      rows.push_back(std::move(r[s]));
      out.y.push_back(b.labels[s]);
    }
  }
  out.X = stack_rows(rows);
  return out;
}

struct SvmTrainResult {
  SvmMulticlass model;
  SvmParams params;
  std::optional<GridSearchReport> grid;
  double holdout_accuracy = 0;
  std::size_t train_rows = 0, holdout_rows = 0;
};

/// Baseline recipe: balance every class to `resample_target` rows, hold out
/// (1 - train_fraction) of each class, optionally grid-search on the rest,
/// then fit and score on the held-out rows.
inline SvmTrainResult train_svm_baseline(const LabeledFeatures& corpus, const Config& cfg) {
  const LabeledFeatures bal = resample_balanced(corpus, cfg.svm.resample_target, cfg.seed);
  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < bal.y.size(); ++i) by_class[bal.y[i]].push_back(i);
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::vector<std::size_t> tr, te;
  for (auto& idx : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    const auto n_tr = static_cast<std::size_t>(std::llround(cfg.svm.train_fraction * static_cast<double>(idx.size())));
    tr.insert(tr.end(), idx.begin(), idx.begin() + n_tr);
    te.insert(te.end(), idx.begin() + n_tr, idx.end());
  }
  auto take = [&](const std::vector<std::size_t>& idx) {
    LabeledFeatures out{FeatureMatrix(static_cast<Eigen::Index>(idx.size()), bal.X.cols()), {}};
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.X.row(static_cast<Eigen::Index>(k)) = bal.X.row(static_cast<Eigen::Index>(idx[k]));
      out.y.push_back(bal.y[idx[k]]);
    }
    return out;
  };
  const LabeledFeatures train_set = take(tr), hold = take(te);

  SvmTrainResult res;
  res.params = cfg.svm.params;
  if (cfg.svm.grid_search) {
    res.grid = grid_search(train_set.X, train_set.y, cfg.svm.grid(), cfg.svm.folds, cfg.seed, cfg.svm.tol);
    res.params = res.grid->selected;
  }
  res.model = fit_svm_pipeline(train_set.X, train_set.y, res.params, cfg.hog, cfg.svm.tol);
  std::size_t ok = 0;
  for (Eigen::Index r = 0; r < hold.X.rows(); ++r) {
    const Eigen::RowVectorXd row = hold.X.row(r);
    ok += class_index(predict(res.model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())))) == hold.y[static_cast<std::size_t>(r)];
  }
  res.train_rows = tr.size();
  res.holdout_rows = te.size();
  res.holdout_accuracy = te.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(te.size());
  return res;
}

}  // namespace cvchess
