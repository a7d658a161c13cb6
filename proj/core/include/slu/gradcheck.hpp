#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slu/optim.hpp"

namespace slu {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // 0 = check every coordinate; otherwise a deterministic random sample of
  // this many coordinates per parameter.
  int max_coords_per_param = 0;
  std::uint64_t sample_seed = 7;
};

struct GradCheckEntry {
  std::string param;
  std::size_t coords_checked = 0;
  double max_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double fd_at_worst = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_err = 0.0;
  std::string worst_param;

  bool pass(double tolerance) const { return max_err < tolerance; }
};

// Compares the analytic gradient of a scalar-valued function against central
// finite differences, coordinate by coordinate. `f` must rebuild the loss
// deterministically from the current parameter values (fix any internal RNG
// seed). The error measure is |a-f| / max(|a|,|f|) with an absolute fallback
// when both are below 1e-6.
GradCheckReport grad_check(const std::function<TensorPtr(Graph&)>& f, ParamMap& params,
                           const GradCheckOptions& opt = {});

}  // namespace slu
