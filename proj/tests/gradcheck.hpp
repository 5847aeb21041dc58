#pragma once

// Finite-difference gradient checking shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "cvchess/net/ops.hpp"

namespace gradcheck {

using namespace cvchess::net;

using TD = Tensor<double>;

inline TD random_tensor(Shape s, std::mt19937_64& rng, bool grad = true, double scale = 1.0) {
  std::normal_distribution<double> n(0, scale);
  std::vector<double> v(shape_numel(s));
  for (auto& x : v) x = n(rng);
  return TD(std::move(s), std::move(v), grad);
}

// sum_i r_i * x_i, so every output element gets its own weight.
inline TD project(const TD& x, const std::vector<double>& r) {
  TD out = cvchess::net::detail::make_result<double>({1}, {x});
  double s = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) s += r[i] * x.data()[i];
  out.data()[0] = s;
  if (out.requires_grad()) {
    Node<double>* o = out.node();
    Node<double>* xn = x.node();
    o->backward = [o, xn, r]() {
      double* d = xn->grad_buffer();
      for (std::size_t i = 0; i < r.size(); ++i) d[i] += r[i] * o->grad[0];
    };
  }
  return out;
}

// Central differences against backprop for every element of every input.
inline double max_relative_error(std::vector<TD> inputs, const std::function<TD(std::vector<TD>&)>& f, std::uint64_t seed = 99,
                          double h = 1e-6) {
  std::mt19937_64 rng(seed);
  TD probe = f(inputs);
  std::vector<double> r(probe.numel());
  std::normal_distribution<double> n(0, 1);
  for (auto& v : r) v = n(rng);
  auto scalar = [&] { return project(f(inputs), r).data()[0]; };

  for (auto& t : inputs) t.zero_grad();
  TD loss = project(f(inputs), r);
  loss.backward();
  double worst = 0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic = t.has_grad() ? t.grad() : std::vector<double>(t.numel(), 0.0);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double keep = t.data()[i];
      t.data()[i] = keep + h;
      const double up = scalar();
      t.data()[i] = keep - h;
      const double down = scalar();
      t.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline constexpr double kGradTol = 1e-4;

}  // namespace gradcheck
