#pragma once

// Mini-batch training loop, optimizers and the per-epoch CSV log.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cvchess/net/chessnet.hpp"

namespace cvchess::net {

struct TrainConfig {
  std::string optimizer = "adam";  // "adam" or "sgd" (with momentum)
  double learning_rate = 1e-3;
  std::string lr_schedule = "constant";  // or "cosine": decays to zero over all steps
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double dropout = kDefaultDropout;
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (optimizer != "adam" && optimizer != "sgd") throw ContractViolation("optimizer must be \"adam\" or \"sgd\", got \"" + optimizer + "\"");
    if (lr_schedule != "constant" && lr_schedule != "cosine") throw ContractViolation("lr_schedule must be \"constant\" or \"cosine\", got \"" + lr_schedule + "\"");
    if (!(learning_rate > 0.0)) throw ContractViolation("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractViolation("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ContractViolation("weight_decay must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractViolation("dropout must lie in [0, 1)");
    if (batch_size < 1) throw ContractViolation("batch_size must be positive");
    if (epochs < 1) throw ContractViolation("epochs must be positive");
  }
};

/// One rectified board and its 64 class labels (a8..h1).
struct BoardExample {
  Raster image;
  std::array<int, 64> labels{};
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0, val_loss = 0;
  double train_acc_all = 0, val_acc_all = 0;
  double train_acc_nonempty = 0, val_acc_nonempty = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;

  std::string to_csv() const {
    std::string out = "epoch,train_loss,val_loss,train_acc_all,val_acc_all,train_acc_nonempty,val_acc_nonempty\n";
    char buf[256];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_loss, e.train_acc_all,
                    e.val_acc_all, e.train_acc_nonempty, e.val_acc_nonempty);
      out += buf;
    }
    return out;
  }
};

/// Running tallies for loss and the two accuracy flavours.
struct Tally {
  double loss_sum = 0;
  std::size_t batches = 0, squares = 0, correct = 0, nonempty = 0, nonempty_correct = 0;

  void add_batch(double loss, const std::vector<std::array<int, 64>>& pred, std::span<const BoardExample* const> truth) {
    loss_sum += loss * static_cast<double>(truth.size());
    batches += truth.size();
    for (std::size_t b = 0; b < truth.size(); ++b)
      for (int s = 0; s < 64; ++s) {
        const int y = truth[b]->labels[s];
        const bool ok = pred[b][s] == y;
        ++squares;
        correct += ok;
        if (y != kEmptyClass) {
          ++nonempty;
          nonempty_correct += ok;
        }
      }
  }
  double loss() const { return batches ? loss_sum / static_cast<double>(batches) : 0.0; }
  double acc_all() const { return squares ? static_cast<double>(correct) / static_cast<double>(squares) : 0.0; }
  double acc_nonempty() const { return nonempty ? static_cast<double>(nonempty_correct) / static_cast<double>(nonempty) : 0.0; }
};

template <typename T>
class Optimizer {
 public:
  Optimizer(std::vector<NamedTensor<T>> params, const TrainConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      if (cfg_.optimizer == "adam") v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }

  void set_lr_scale(double s) { lr_scale_ = s; }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  /// Adam with L2 decay folded into the gradient, or SGD with momentum.
  void step() {
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
    const double lr = cfg_.learning_rate * lr_scale_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<T>& p = params_[i].tensor;
      if (!p.has_grad()) continue;
      auto& w = p.data();
      const auto& g = p.grad();
      auto& m = m_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double gj = static_cast<double>(g[j]) + cfg_.weight_decay * w[j];
        if (cfg_.optimizer == "adam") {
          m[j] = b1 * m[j] + (1 - b1) * gj;
          v_[i][j] = b2 * v_[i][j] + (1 - b2) * gj * gj;
          w[j] = static_cast<T>(w[j] - lr * (m[j] / c1) / (std::sqrt(v_[i][j] / c2) + eps));
        } else {
          m[j] = cfg_.momentum * m[j] + gj;
          w[j] = static_cast<T>(w[j] - lr * m[j]);
        }
      }
    }
  }

 private:
  std::vector<NamedTensor<T>> params_;
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
  double lr_scale_ = 1.0;
};

inline std::vector<int> flat_labels(std::span<const BoardExample* const> batch) {
  std::vector<int> out;
  out.reserve(batch.size() * 64);
  for (const auto* ex : batch) out.insert(out.end(), ex->labels.begin(), ex->labels.end());
  return out;
}

template <typename T>
Tensor<T> batch_tensor(std::span<const BoardExample* const> batch) {
  std::vector<const Raster*> imgs;
  for (const auto* ex : batch) imgs.push_back(&ex->image);
  return images_to_tensor<T>(imgs);
}

/// Eval-mode loss and accuracy over `data`.
template <typename T>
Tally evaluate_examples(ChessNet<T>& net, const std::vector<BoardExample>& data, int batch_size = 8) {
  NoGradGuard guard;
  Tally tally;
  for (std::size_t i = 0; i < data.size(); i += batch_size) {
    std::vector<const BoardExample*> batch;
    for (std::size_t j = i; j < std::min(data.size(), i + batch_size); ++j) batch.push_back(&data[j]);
    Tensor<T> logits = net.forward(batch_tensor<T>(batch), Mode::Eval);
    tally.add_batch(loss_ce(logits, flat_labels(batch)).data()[0], argmax_squares(logits), batch);
  }
  return tally;
}

/// Deterministic Fisher-Yates (independent of the standard library's
/// shuffle implementation).
template <typename Rng>
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
}

/// Trains in place. Train-side metrics come from the training forward
/// passes of each epoch; validation runs in eval mode. When `val` is empty
/// the train metrics choose the best epoch. The weights of the best epoch
/// (highest all-square accuracy, then lowest loss) are restored at the end.
template <typename T>
TrainLog train(ChessNet<T>& net, const std::vector<BoardExample>& data, const std::vector<BoardExample>& val, const TrainConfig& cfg,
               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (data.empty()) throw ContractViolation("train: empty dataset");
  Optimizer<T> opt(net.parameters(), cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  std::vector<std::uint8_t> best;
  double best_acc = -1, best_loss = 0;
  const std::size_t steps_per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    Tally tr;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      std::vector<const BoardExample*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + cfg.batch_size); ++j) batch.push_back(&data[order[j]]);
      if (cfg.lr_schedule == "cosine") opt.set_lr_scale(0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps)));
      ++step;
      opt.zero_grad();
      Tensor<T> logits = net.forward(batch_tensor<T>(batch), Mode::Train);
      Tensor<T> loss = loss_ce(logits, flat_labels(batch));
      tr.add_batch(loss.data()[0], argmax_squares(logits), batch);
      loss.backward();
      opt.step();
    }
    EpochRecord rec{epoch, tr.loss(), 0, tr.acc_all(), 0, tr.acc_nonempty(), 0};
    if (!val.empty()) {
      const Tally vt = evaluate_examples(net, val, cfg.batch_size);
      rec.val_loss = vt.loss();
      rec.val_acc_all = vt.acc_all();
      rec.val_acc_nonempty = vt.acc_nonempty();
    }
    log.epochs.push_back(rec);
    const double acc = val.empty() ? rec.train_acc_all : rec.val_acc_all;
    const double loss = val.empty() ? rec.train_loss : rec.val_loss;
    if (acc > best_acc || (acc == best_acc && loss < best_loss)) {
      best_acc = acc;
      best_loss = loss;
      log.best_epoch = epoch;
      best = encode_weights(net);
    }
    if (on_epoch) on_epoch(rec);
  }
  decode_weights<T>(best, net);
  return log;
}

}  // namespace cvchess::net
