#pragma once

// Differentiable operations over Tensor<T>. Layout is NCHW throughout.
// Reductions accumulate in double regardless of T.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cvchess/net/tensor.hpp"

namespace cvchess::net {

enum class Mode { Train, Eval };

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

inline void require_rank(const Shape& s, std::size_t r, const char* op) {
  if (s.size() != r) throw ContractViolation(std::string(op) + ": expected rank " + std::to_string(r) + " tensor, got " + shape_str(s));
}

struct ConvGeom {
  int cin, h, w, kh, kw, stride, pad, oh, ow;
  int rows() const { return cin * kh * kw; }
  int cols() const { return oh * ow; }
  bool trivial() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// cols(row=(c*kh+ky)*kw+kx, col=oy*ow+ox) = x(c, oy*s-p+ky, ox*s-p+kx)
template <typename T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
  for (int c = 0; c < g.cin; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        T* dst = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * g.cols();
        const T* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* row = dst + static_cast<std::size_t>(oy) * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill_n(row, g.ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* dx) {
  for (int c = 0; c < g.cin; ++c)
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* src = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * g.cols();
        T* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* row = src + static_cast<std::size_t>(oy) * g.ow;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += row[ox];
          }
        }
      }
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad) {
  detail::require_rank(x.shape(), 4, "conv2d");
  detail::require_rank(w.shape(), 4, "conv2d");
  if (b.rank() != 1 || b.dim(0) != w.dim(0) || x.dim(1) != w.dim(1))
    throw ContractViolation("conv2d: shape mismatch between input " + shape_str(x.shape()) + ", weight " + shape_str(w.shape()) +
                            " and bias " + shape_str(b.shape()));
  if (stride < 1 || pad < 0) throw ContractViolation("conv2d: stride must be >= 1 and pad >= 0");
  const int batch = x.dim(0), cout = w.dim(0);
  detail::ConvGeom g{x.dim(1), x.dim(2), x.dim(3), w.dim(2), w.dim(3), stride, pad, 0, 0};
  if (g.h + 2 * pad < g.kh || g.w + 2 * pad < g.kw)
    throw ContractViolation("conv2d: kernel " + shape_str(w.shape()) + " larger than padded input " + shape_str(x.shape()));
  g.oh = (g.h + 2 * pad - g.kh) / stride + 1;
  g.ow = (g.w + 2 * pad - g.kw) / stride + 1;

  Tensor<T> out = detail::make_result<T>({batch, cout, g.oh, g.ow}, {x, w, b});
  const std::size_t in_img = static_cast<std::size_t>(g.cin) * g.h * g.w;
  const std::size_t out_img = static_cast<std::size_t>(cout) * g.cols();
  detail::CMapRM<T> W(w.data().data(), cout, g.rows());
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(b.data().data(), cout);
  std::vector<T> cols(g.trivial() ? 0 : static_cast<std::size_t>(g.rows()) * g.cols());
  for (int n = 0; n < batch; ++n) {
    const T* src = x.data().data() + n * in_img;
    if (!g.trivial()) detail::im2col(src, g, cols.data());
    detail::CMapRM<T> C(g.trivial() ? src : cols.data(), g.rows(), g.cols());
    detail::MapRM<T> Y(out.data().data() + n * out_img, cout, g.cols());
    Y.noalias() = W * C;
    Y.colwise() += bias;
  }

  if (out.requires_grad()) {
    Node<T>* o = out.node();
    Node<T>* xn = x.node();
    Node<T>* wn = w.node();
    Node<T>* bn = b.node();
    o->backward = [o, xn, wn, bn, g, batch, cout, in_img, out_img]() {
      std::vector<T> cols(static_cast<std::size_t>(g.rows()) * g.cols());
      std::vector<T> dcols(xn->requires_grad ? cols.size() : 0);
      detail::CMapRM<T> W(wn->data.data(), cout, g.rows());
      for (int n = 0; n < batch; ++n) {
        detail::CMapRM<T> dY(o->grad.data() + n * out_img, cout, g.cols());
        const T* src = xn->data.data() + n * in_img;
        if (wn->requires_grad) {
          if (!g.trivial()) detail::im2col(src, g, cols.data());
          detail::CMapRM<T> C(g.trivial() ? src : cols.data(), g.rows(), g.cols());
          detail::MapRM<T> dW(wn->grad_buffer(), cout, g.rows());
          dW.noalias() += dY * C.transpose();
        }
        if (bn->requires_grad) {
          T* db = bn->grad_buffer();
          for (int c = 0; c < cout; ++c) db[c] += static_cast<T>(dY.row(c).template cast<double>().sum());
        }
        if (xn->requires_grad) {
          T* dx = xn->grad_buffer() + n * in_img;
          if (g.trivial()) {
            detail::MapRM<T> dX(dx, g.rows(), g.cols());
            dX.noalias() += W.transpose() * dY;
          } else {
            detail::MapRM<T> dC(dcols.data(), g.rows(), g.cols());
            dC.noalias() = W.transpose() * dY;
            detail::col2im_add(dcols.data(), g, dx);
          }
        }
      }
    };
  }
  return out;
}

/// Running statistics owned by a batchnorm layer.
template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  explicit BatchNormState(int channels = 0) : running_mean({channels}, T(0)), running_var({channels}, T(1)) {}
};

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state, Mode mode,
                      double eps = 1e-5, double momentum = 0.1) {
  detail::require_rank(x.shape(), 4, "batchnorm2d");
  const int batch = x.dim(0), ch = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch} || state.running_mean.shape() != Shape{ch})
    throw ContractViolation("batchnorm2d: parameter shape " + shape_str(gamma.shape()) + " does not match input " + shape_str(x.shape()));
  const std::size_t count = static_cast<std::size_t>(batch) * hw;
  if (mode == Mode::Train && count < 2) throw ContractViolation("batchnorm2d: training mode needs at least 2 values per channel");

  std::vector<double> mean(ch), inv_std(ch);
  const T* xd = x.data().data();
  if (mode == Mode::Train) {
    for (int c = 0; c < ch; ++c) {
      double s = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = xd + (static_cast<std::size_t>(n) * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(count);
      double ss = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = xd + (static_cast<std::size_t>(n) * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - m;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      auto& rm = state.running_mean.data()[c];
      auto& rv = state.running_var.data()[c];
      rm = static_cast<T>((1.0 - momentum) * rm + momentum * m);
      rv = static_cast<T>((1.0 - momentum) * rv + momentum * ss / static_cast<double>(count - 1));
    }
  } else {
    for (int c = 0; c < ch; ++c) {
      mean[c] = state.running_mean.data()[c];
      inv_std[c] = 1.0 / std::sqrt(static_cast<double>(state.running_var.data()[c]) + eps);
    }
  }

  Tensor<T> out = detail::make_result<T>(x.shape(), {x, gamma, beta});
  T* od = out.data().data();
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < ch; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * ch + c) * hw;
      const double scale = gamma.data()[c] * inv_std[c];
      const double shift = beta.data()[c] - mean[c] * scale;
      for (std::size_t i = 0; i < hw; ++i) od[off + i] = static_cast<T>(xd[off + i] * scale + shift);
    }

  if (out.requires_grad()) {
    Node<T>* o = out.node();
    Node<T>* xn = x.node();
    Node<T>* gn = gamma.node();
    Node<T>* bn = beta.node();
    const bool train = mode == Mode::Train;
    o->backward = [o, xn, gn, bn, mean, inv_std, batch, ch, hw, count, train]() {
      const T* xd = xn->data.data();
      const T* dy = o->grad.data();
      for (int c = 0; c < ch; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < batch; ++n) {
          const std::size_t off = (static_cast<std::size_t>(n) * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            const double xhat = (xd[off + i] - mean[c]) * inv_std[c];
            sum_dy += dy[off + i];
            sum_dy_xhat += dy[off + i] * xhat;
          }
        }
        if (gn->requires_grad) gn->grad_buffer()[c] += static_cast<T>(sum_dy_xhat);
        if (bn->requires_grad) bn->grad_buffer()[c] += static_cast<T>(sum_dy);
        if (!xn->requires_grad) continue;
        T* dx = xn->grad_buffer();
        const double g = gn->data[c];
        const double k = g * inv_std[c];
        const double mdy = sum_dy / static_cast<double>(count), mdyx = sum_dy_xhat / static_cast<double>(count);
        for (int n = 0; n < batch; ++n) {
          const std::size_t off = (static_cast<std::size_t>(n) * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            if (train) {
              const double xhat = (xd[off + i] - mean[c]) * inv_std[c];
              dx[off + i] += static_cast<T>(k * (dy[off + i] - mdy - xhat * mdyx));
            } else {
              dx[off + i] += static_cast<T>(k * dy[off + i]);
            }
          }
        }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = detail::make_result<T>(x.shape(), {x});
  const T* xd = x.data().data();
  T* od = out.data().data();
  for (std::size_t i = 0; i < x.numel(); ++i) od[i] = xd[i] > T(0) ? xd[i] : T(0);
  if (out.requires_grad()) {
    Node<T>* o = out.node();
    Node<T>* xn = x.node();
    o->backward = [o, xn]() {
      T* dx = xn->grad_buffer();
      for (std::size_t i = 0; i < xn->data.size(); ++i)
        if (xn->data[i] > T(0)) dx[i] += o->grad[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ContractViolation("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = detail::make_result<T>(a.shape(), {a, b});
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (out.requires_grad()) {
    Node<T>* o = out.node();
    Node<T>* an = a.node();
    Node<T>* bn = b.node();
    o->backward = [o, an, bn]() {
      for (Node<T>* p : {an, bn}) {
        if (!p->requires_grad) continue;
        T* d = p->grad_buffer();
        for (std::size_t i = 0; i < o->grad.size(); ++i) d[i] += o->grad[i];
      }
    };
  }
  return out;
}

/// Max pooling with implicit -inf padding. Ties resolve to the first
/// element in window scan order.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, int k = 3, int stride = 2, int pad = 1) {
  detail::require_rank(x.shape(), 4, "maxpool2d");
  const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (k < 1 || stride < 1 || pad < 0 || 2 * pad > k) throw ContractViolation("maxpool2d: invalid window parameters");
  if (h + 2 * pad < k || w + 2 * pad < k) throw ContractViolation("maxpool2d: input " + shape_str(x.shape()) + " smaller than window");
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
  Tensor<T> out = detail::make_result<T>({batch, ch, oh, ow}, {x});
  std::vector<std::int32_t> arg(out.numel());
  const T* xd = x.data().data();
  T* od = out.data().data();
  std::size_t o = 0;
  for (int plane = 0; plane < batch * ch; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * h * w;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::int32_t bi = -1;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            const T v = xd[base + static_cast<std::size_t>(iy) * w + ix];
            if (bi < 0 || v > best) {
              best = v;
              bi = iy * w + ix;
            }
          }
        }
        od[o] = best;
        arg[o] = bi;
      }
  }
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* xn = x.node();
    const std::size_t plane_in = static_cast<std::size_t>(h) * w, plane_out = static_cast<std::size_t>(oh) * ow;
    on->backward = [on, xn, arg = std::move(arg), plane_in, plane_out]() {
      T* dx = xn->grad_buffer();
      for (std::size_t i = 0; i < arg.size(); ++i) dx[(i / plane_out) * plane_in + arg[i]] += on->grad[i];
    };
  }
  return out;
}

/// Bin i along an axis of length n spans [floor(i*n/out), floor((i+1)*n/out)).
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, int out_h = 8, int out_w = 8) {
  detail::require_rank(x.shape(), 4, "adaptive_avg_pool");
  const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < out_h || w < out_w)
    throw ContractViolation("adaptive_avg_pool: input " + shape_str(x.shape()) + " smaller than " + std::to_string(out_h) + "x" +
                            std::to_string(out_w));
  auto lo = [](int i, int n, int m) { return i * n / m; };
  Tensor<T> out = detail::make_result<T>({batch, ch, out_h, out_w}, {x});
  const T* xd = x.data().data();
  T* od = out.data().data();
  for (int plane = 0; plane < batch * ch; ++plane) {
    const T* p = xd + static_cast<std::size_t>(plane) * h * w;
    for (int by = 0; by < out_h; ++by)
      for (int bx = 0; bx < out_w; ++bx) {
        const int y0 = lo(by, h, out_h), y1 = lo(by + 1, h, out_h), x0 = lo(bx, w, out_w), x1 = lo(bx + 1, w, out_w);
        double s = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int xx = x0; xx < x1; ++xx) s += p[y * w + xx];
        od[(static_cast<std::size_t>(plane) * out_h + by) * out_w + bx] = static_cast<T>(s / ((y1 - y0) * (x1 - x0)));
      }
  }
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* xn = x.node();
    on->backward = [on, xn, batch, ch, h, w, out_h, out_w, lo]() {
      T* dx = xn->grad_buffer();
      for (int plane = 0; plane < batch * ch; ++plane) {
        T* p = dx + static_cast<std::size_t>(plane) * h * w;
        for (int by = 0; by < out_h; ++by)
          for (int bx = 0; bx < out_w; ++bx) {
            const int y0 = lo(by, h, out_h), y1 = lo(by + 1, h, out_h), x0 = lo(bx, w, out_w), x1 = lo(bx + 1, w, out_w);
            const T g = on->grad[(static_cast<std::size_t>(plane) * out_h + by) * out_w + bx] / static_cast<T>((y1 - y0) * (x1 - x0));
            for (int y = y0; y < y1; ++y)
              for (int xx = x0; xx < x1; ++xx) p[y * w + xx] += g;
          }
      }
    };
  }
  return out;
}

/// Inverted dropout. Eval mode and p == 0 return the input unchanged.
template <typename T, typename Rng>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractViolation("dropout: p must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) return x;
  Tensor<T> out = detail::make_result<T>(x.shape(), {x});
  std::vector<T> mask(x.numel());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = u(rng) < p ? T(0) : keep;
    out.data()[i] = x.data()[i] * mask[i];
  }
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* xn = x.node();
    on->backward = [on, xn, mask = std::move(mask)]() {
      T* dx = xn->grad_buffer();
      for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += on->grad[i] * mask[i];
    };
  }
  return out;
}

/// x: (..., in), w: (out, in), b: (out) -> (..., out)
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() < 1 || w.rank() != 2 || b.rank() != 1 || x.shape().back() != w.dim(1) || b.dim(0) != w.dim(0))
    throw ContractViolation("linear: shape mismatch between input " + shape_str(x.shape()) + ", weight " + shape_str(w.shape()) +
                            " and bias " + shape_str(b.shape()));
  const int in = w.dim(1), outf = w.dim(0);
  const int rows = static_cast<int>(x.numel() / in);
  Shape os = x.shape();
  os.back() = outf;
  Tensor<T> out = detail::make_result<T>(os, {x, w, b});
  detail::CMapRM<T> X(x.data().data(), rows, in);
  detail::CMapRM<T> W(w.data().data(), outf, in);
  detail::MapRM<T> Y(out.data().data(), rows, outf);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data().data(), outf);
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* xn = x.node();
    Node<T>* wn = w.node();
    Node<T>* bn = b.node();
    on->backward = [on, xn, wn, bn, rows, in, outf]() {
      detail::CMapRM<T> dY(on->grad.data(), rows, outf);
      if (xn->requires_grad) {
        detail::MapRM<T> dX(xn->grad_buffer(), rows, in);
        dX.noalias() += dY * detail::CMapRM<T>(wn->data.data(), outf, in);
      }
      if (wn->requires_grad) {
        detail::MapRM<T> dW(wn->grad_buffer(), outf, in);
        dW.noalias() += dY.transpose() * detail::CMapRM<T>(xn->data.data(), rows, in);
      }
      if (bn->requires_grad) {
        T* db = bn->grad_buffer();
        for (int j = 0; j < outf; ++j) db[j] += static_cast<T>(dY.col(j).template cast<double>().sum());
      }
    };
  }
  return out;
}

/// (B, C, H, W) -> (B, H*W, C); spatial index is row-major.
template <typename T>
Tensor<T> channels_last(const Tensor<T>& x) {
  detail::require_rank(x.shape(), 4, "channels_last");
  const int batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> out = detail::make_result<T>({batch, hw, ch}, {x});
  for (int n = 0; n < batch; ++n) {
    detail::CMapRM<T> src(x.data().data() + static_cast<std::size_t>(n) * ch * hw, ch, hw);
    detail::MapRM<T>(out.data().data() + static_cast<std::size_t>(n) * ch * hw, hw, ch) = src.transpose();
  }
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* xn = x.node();
    on->backward = [on, xn, batch, ch, hw]() {
      for (int n = 0; n < batch; ++n) {
        detail::CMapRM<T> g(on->grad.data() + static_cast<std::size_t>(n) * ch * hw, hw, ch);
        detail::MapRM<T>(xn->grad_buffer() + static_cast<std::size_t>(n) * ch * hw, ch, hw) += g.transpose();
      }
    };
  }
  return out;
}

/// Mean softmax cross-entropy over all leading positions. logits (..., K),
/// labels one per position, each in [0, K).
template <typename T>
Tensor<T> loss_ce(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (logits.rank() < 1) throw ContractViolation("loss_ce: logits must have a class axis");
  const int k = logits.shape().back();
  const std::size_t rows = logits.numel() / static_cast<std::size_t>(k);
  if (labels.size() != rows)
    throw ContractViolation("loss_ce: " + std::to_string(labels.size()) + " labels for logits " + shape_str(logits.shape()));
  for (int l : labels)
    if (l < 0 || l >= k) throw ContractViolation("loss_ce: label " + std::to_string(l) + " outside 0.." + std::to_string(k - 1));
  if (rows == 0) throw ContractViolation("loss_ce: empty batch");

  std::vector<T> prob(logits.numel());
  double total = 0.0;
  const T* z = logits.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* zr = z + r * k;
    const double mx = *std::max_element(zr, zr + k);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(zr[j] - mx);
    const double lse = mx + std::log(s);
    total += lse - zr[labels[r]];
    for (int j = 0; j < k; ++j) prob[r * k + j] = static_cast<T>(std::exp(zr[j] - lse));
  }
  Tensor<T> out = detail::make_result<T>({}, {logits});
  out.data()[0] = static_cast<T>(total / static_cast<double>(rows));
  if (out.requires_grad()) {
    Node<T>* on = out.node();
    Node<T>* ln = logits.node();
    on->backward = [on, ln, prob = std::move(prob), labels, rows, k]() {
      T* dz = ln->grad_buffer();
      const T scale = on->grad[0] / static_cast<T>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < k; ++j) dz[r * k + j] += scale * (prob[r * k + j] - (j == labels[r] ? T(1) : T(0)));
    };
  }
  return out;
}

}  // namespace cvchess::net
