#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "slu/common.hpp"

namespace slu {

// Dense row-major double tensor. Gradients live alongside the values and are
// allocated only when requires_grad is set.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> s, bool rg) : shape(std::move(s)), requires_grad(rg) {
    v.assign(numel(shape), 0.0);
    if (rg) grad.assign(v.size(), 0.0);
  }

  static std::size_t numel(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw ShapeError("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t size() const { return v.size(); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols() + c]; }

  void set_requires_grad(bool rg) {
    requires_grad = rg;
    if (rg)
      grad.assign(v.size(), 0.0);
    else
      grad.clear();
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false) {
  return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

inline TensorPtr make_tensor(std::vector<int> shape, std::vector<double> values,
                             bool requires_grad = false) {
  auto t = make_tensor(std::move(shape), requires_grad);
  if (values.size() != t->size()) throw ShapeError("value count does not match shape");
  t->v = std::move(values);
  return t;
}

inline TensorPtr make_scalar(double x, bool requires_grad = false) {
  auto t = make_tensor({1}, requires_grad);
  t->v[0] = x;
  return t;
}

// Reverse-mode tape. Ops append a backward closure as they execute; backward()
// replays them once, in reverse, after seeding the loss gradient with 1.
class Graph {
 public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

  void backward(const TensorPtr& loss) {
    if (loss->size() != 1) throw ShapeError("backward expects a scalar loss");
    if (!loss->requires_grad) throw NumericError("backward on a loss with no gradient path");
    loss->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    ran_backward_ = true;
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    ran_backward_ = false;
  }

 private:
  std::vector<std::function<void()>> nodes_;
  bool ran_backward_ = false;
};

inline bool all_finite(const Tensor& t) {
  for (double x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace slu
