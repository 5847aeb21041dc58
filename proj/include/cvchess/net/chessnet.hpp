#pragma once

// Full-board residual classifier: (B,3,400,400) -> (B,64,13) logits, one
// row per square in a8..h1 order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvchess/errors.hpp"
#include "cvchess/geometry.hpp"
#include "cvchess/net/ops.hpp"
#include "cvchess/notation.hpp"
#include "cvchess/raster.hpp"

namespace cvchess::net {

template <typename T>
struct Conv {
  Tensor<T> weight;
  Tensor<T> bias;
  int stride = 1;
  int pad = 0;

  Conv() = default;
  Conv(int cin, int cout, int k, int stride_, int pad_)
      : weight({cout, cin, k, k}, T(0), true), bias({cout}, T(0), true), stride(stride_), pad(pad_) {}
  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

template <typename T>
struct BatchNorm {
  Tensor<T> weight;
  Tensor<T> bias;
  BatchNormState<T> state;

  BatchNorm() = default;
  explicit BatchNorm(int ch) : weight({ch}, T(1), true), bias({ch}, T(0), true), state(ch) {}
  Tensor<T> operator()(const Tensor<T>& x, Mode mode) { return batchnorm2d(x, weight, bias, state, mode); }
};

/// BN -> ReLU -> conv3x3 -> BN -> ReLU -> conv3x3, plus identity or 1x1
/// projection of the block input.
template <typename T>
struct PreActBlock {
  BatchNorm<T> bn1;
  Conv<T> conv1;
  BatchNorm<T> bn2;
  Conv<T> conv2;
  std::optional<Conv<T>> proj;

  PreActBlock() = default;
  PreActBlock(int cin, int cout, int stride) : bn1(cin), conv1(cin, cout, 3, stride, 1), bn2(cout), conv2(cout, cout, 3, 1, 1) {
    if (stride != 1 || cin != cout) proj.emplace(cin, cout, 1, stride, 0);
  }

  Tensor<T> operator()(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = conv1(relu(bn1(x, mode)));
    h = conv2(relu(bn2(h, mode)));
    return add(h, proj ? (*proj)(x) : x);
  }
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

inline constexpr std::array<int, 4> kStageWidths{64, 128, 256, 512};
inline constexpr int kBlocksPerStage = 2;
inline constexpr double kDefaultDropout = 0.25;

template <typename T>
class ChessNet {
 public:
  explicit ChessNet(std::uint64_t seed = 0, double dropout_rate = kDefaultDropout)
      : stem_conv_(3, kStageWidths[0], 7, 2, 3), stem_bn_(kStageWidths[0]), head_w_({kNumClasses, kStageWidths[3]}, T(0), true),
        head_b_({kNumClasses}, T(0), true), dropout_(dropout_rate), rng_(seed) {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ContractViolation("dropout rate must lie in [0, 1)");
    for (int s = 0; s < 3; ++s)
      for (int b = 0; b < kBlocksPerStage; ++b)
        stages_[s][b] = PreActBlock<T>(b == 0 ? kStageWidths[s] : kStageWidths[s + 1], kStageWidths[s + 1], b == 0 ? 2 : 1);
    init(seed);
  }

  /// He-normal convolutions, unit/zero batchnorm, zero head (uniform
  /// logits at start; the residual trunk is not variance-preserving).
  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto he = [&](Tensor<T>& w) {
      const int fan_in = w.dim(1) * w.dim(2) * w.dim(3);
      std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : w.data()) v = static_cast<T>(nd(rng));
    };
    he(stem_conv_.weight);
    for (auto& stage : stages_)
      for (auto& blk : stage) {
        he(blk.conv1.weight);
        he(blk.conv2.weight);
        if (blk.proj) he(blk.proj->weight);
      }
    std::fill(head_w_.data().begin(), head_w_.data().end(), T(0));
    rng_.seed(seed ^ 0x9e3779b97f4a7c15ULL);
  }

  Tensor<T> forward(const Tensor<T>& images, Mode mode) {
    if (images.rank() != 4 || images.dim(1) != 3 || images.dim(2) != kCanonicalSize || images.dim(3) != kCanonicalSize)
      throw ContractViolation("ChessNet expects (B,3,400,400) input, got " + shape_str(images.shape()));
    Tensor<T> x = maxpool2d(relu(stem_bn_(stem_conv_(images), mode)), 3, 2, 1);
    for (auto& stage : stages_) {
      for (auto& blk : stage) x = blk(x, mode);
      x = dropout(x, dropout_, mode, rng_);
    }
    x = channels_last(adaptive_avg_pool(x, 8, 8));
    return linear(x, head_w_, head_b_);
  }

  /// Every tensor that defines the model, in file order. Trainable ones
  /// come with requires_grad set.
  std::vector<NamedTensor<T>> state() {
    std::vector<NamedTensor<T>> out;
    auto conv = [&](const std::string& p, Conv<T>& c) {
      out.push_back({p + ".weight", c.weight});
      out.push_back({p + ".bias", c.bias});
    };
    auto bn = [&](const std::string& p, BatchNorm<T>& b) {
      out.push_back({p + ".weight", b.weight});
      out.push_back({p + ".bias", b.bias});
      out.push_back({p + ".running_mean", b.state.running_mean});
      out.push_back({p + ".running_var", b.state.running_var});
    };
    conv("stem.conv", stem_conv_);
    bn("stem.bn", stem_bn_);
    for (int s = 0; s < 3; ++s)
      for (int b = 0; b < kBlocksPerStage; ++b) {
        const std::string p = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
        auto& blk = stages_[s][b];
        bn(p + ".bn1", blk.bn1);
        conv(p + ".conv1", blk.conv1);
        bn(p + ".bn2", blk.bn2);
        conv(p + ".conv2", blk.conv2);
        if (blk.proj) conv(p + ".proj", *blk.proj);
      }
    out.push_back({"head.weight", head_w_});
    out.push_back({"head.bias", head_b_});
    return out;
  }

  std::vector<NamedTensor<T>> parameters() {
    auto all = state();
    std::erase_if(all, [](const NamedTensor<T>& t) { return !t.tensor.requires_grad(); });
    return all;
  }

  PreActBlock<T>& block(int stage, int index) { return stages_.at(stage).at(index); }
  double dropout_rate() const { return dropout_; }

 private:
  Conv<T> stem_conv_;
  BatchNorm<T> stem_bn_;
  std::array<std::array<PreActBlock<T>, kBlocksPerStage>, 3> stages_;
  Tensor<T> head_w_;
  Tensor<T> head_b_;
  double dropout_;
  std::mt19937_64 rng_;
};

/// Packs 400x400 RGB boards into a (B,3,400,400) tensor scaled to roughly
/// [-2, 2].
template <typename T>
Tensor<T> images_to_tensor(std::span<const Raster* const> images) {
  const int n = static_cast<int>(images.size());
  Tensor<T> t({n, 3, kCanonicalSize, kCanonicalSize});
  const std::size_t plane = static_cast<std::size_t>(kCanonicalSize) * kCanonicalSize;
  for (int b = 0; b < n; ++b) {
    const Raster& img = *images[b];
    if (img.width != kCanonicalSize || img.height != kCanonicalSize || img.channels != 3)
      throw ContractViolation("network input must be a 400x400x3 board image");
    T* dst = t.data().data() + static_cast<std::size_t>(b) * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i)
      for (int c = 0; c < 3; ++c) dst[c * plane + i] = static_cast<T>((img.data[i * 3 + c] - 127.5) / 64.0);
  }
  return t;
}

inline constexpr char kWeightsMagic[4] = {'C', 'V', 'C', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n) throw FormatError("weights file truncated while reading " + what);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
std::vector<std::uint8_t> encode_weights(ChessNet<T>& net) {
  std::vector<std::uint8_t> out(kWeightsMagic, kWeightsMagic + 4);
  auto st = net.state();
  detail::put_u32(out, kWeightsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(st.size()));
  for (const auto& [name, t] : st) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (T v : t.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

/// Fills `net` (whose architecture is fixed) from a weights blob.
template <typename T>
void decode_weights(std::span<const std::uint8_t> bytes, ChessNet<T>& net) {
  detail::ByteReader rd(bytes);
  if (rd.str(4, "magic") != std::string(kWeightsMagic, 4)) throw FormatError("not a weights file: bad magic");
  const std::uint32_t version = rd.u32("version");
  if (version != kWeightsVersion) throw FormatError("unsupported weights version " + std::to_string(version));
  auto st = net.state();
  const std::uint32_t count = rd.u32("tensor count");
  if (count != st.size())
    throw FormatError("weights file holds " + std::to_string(count) + " tensors, architecture has " + std::to_string(st.size()));
  std::vector<std::vector<T>> staged;
  staged.reserve(count);
  for (auto& [name, t] : st) {
    const std::string got = rd.str(rd.u32("name length of " + name), "name of " + name);
    if (got != name) throw FormatError("weights file has tensor '" + got + "' where '" + name + "' was expected");
    const std::uint32_t rank = rd.u32("rank of " + name);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(rd.u32("dims of " + name)));
    if (shape != t.shape())
      throw FormatError("tensor '" + name + "' has shape " + shape_str(shape) + ", architecture expects " + shape_str(t.shape()));
    std::vector<T> vals(t.numel());
    for (auto& v : vals) v = static_cast<T>(std::bit_cast<float>(rd.u32("values of " + name)));
    staged.push_back(std::move(vals));
  }
  if (!rd.done()) throw FormatError("trailing bytes after weights");
  for (std::size_t i = 0; i < st.size(); ++i) st[i].tensor.data() = std::move(staged[i]);
}

template <typename T>
void save_weights(ChessNet<T>& net, const std::string& path) {
  write_file_bytes(path, encode_weights(net));
}

template <typename T = float>
ChessNet<T> load_weights(const std::string& path) {
  ChessNet<T> net;
  decode_weights<T>(read_file_bytes(path), net);
  return net;
}

/// Class index (argmax, first wins) per square for each board in the batch.
template <typename T>
std::vector<std::array<int, 64>> argmax_squares(const Tensor<T>& logits) {
  if (logits.rank() != 3 || logits.dim(1) != 64 || logits.dim(2) != kNumClasses)
    throw ContractViolation("expected (B,64,13) logits, got " + shape_str(logits.shape()));
  std::vector<std::array<int, 64>> out(logits.dim(0));
  const T* z = logits.data().data();
  for (int b = 0; b < logits.dim(0); ++b)
    for (int s = 0; s < 64; ++s) {
      const T* row = z + (static_cast<std::size_t>(b) * 64 + s) * kNumClasses;
      out[b][s] = static_cast<int>(std::max_element(row, row + kNumClasses) - row);
    }
  return out;
}

}  // namespace cvchess::net
