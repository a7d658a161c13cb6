#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "slu/tensor.hpp"

namespace slu {

using ParamMap = std::map<std::string, TensorPtr>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update over every parameter in the map using its accumulated .grad,
  // then zeroes the grads. Parameters in `frozen` are skipped.
  void step(ParamMap& params, const std::vector<std::string>& frozen = {}) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (auto& [name, p] : params) {
      if (!p->requires_grad) continue;
      bool skip = false;
      for (const auto& f : frozen)
        if (name.rfind(f, 0) == 0) skip = true;
      if (skip) {
        p->zero_grad();
        continue;
      }
      auto& st = state_[name];
      if (st.m.empty()) {
        st.m.assign(p->size(), 0.0);
        st.v.assign(p->size(), 0.0);
      }
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double gr = p->grad[i];
        st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * gr;
        st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * gr * gr;
        p->v[i] -= cfg_.lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + cfg_.eps);
      }
      p->zero_grad();
    }
  }

 private:
  struct State {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, State> state_;
  long t_ = 0;
};

inline void zero_grads(ParamMap& params) {
  for (auto& [_, p] : params) p->zero_grad();
}

}  // namespace slu
