#pragma once

// Minimal reverse-mode autograd tensor. Each op output keeps shared
// pointers to its inputs and a closure that pushes its gradient back.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "cvchess/errors.hpp"

namespace cvchess::net {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

namespace detail {
inline thread_local bool grad_enabled = true;
}

/// Disables graph construction for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    for (int d : shape)
      if (d < 0) throw ContractViolation("negative tensor dimension in " + shape_str(shape));
    node_->data.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
    node_->requires_grad = requires_grad;
  }
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    if (data.size() != shape_numel(shape))
      throw ContractViolation("tensor data length " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::vector<T>& data() { return node_->data; }
  const std::vector<T>& data() const { return node_->data; }
  std::vector<T>& grad() {
    node_->grad_buffer();
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  void zero_grad() { node_->grad.clear(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  /// Back-propagates from this tensor. The seed gradient is 1 for every
  /// element (i.e. d(sum)/d(x) for non-scalars).
  void backward() {
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (i < n->parents.size()) {
        Node<T>* p = n->parents[i++].get();
        if (seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    std::fill_n(node_->grad_buffer(), node_->data.size(), T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward) (*it)->backward();
  }

  /// Drops the graph hanging off this tensor (keeps data and grad).
  void detach_graph() {
    node_->parents.clear();
    node_->backward = nullptr;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

/// Output tensor wired to `inputs` when any of them needs a gradient. All
/// inputs are retained, since backward closures read their data.
template <typename T>
Tensor<T> make_result(Shape shape, std::initializer_list<Tensor<T>> inputs) {
  Tensor<T> out(std::move(shape));
  if (!grad_enabled) return out;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  out.set_requires_grad(true);
  for (const auto& in : inputs) out.node()->parents.push_back(in.node_ptr());
  return out;
}

}  // namespace detail

}  // namespace cvchess::net
