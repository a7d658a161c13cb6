#pragma once

#include <string>
#include <vector>

#include "slu/gradcheck.hpp"

namespace slu {

struct OpCheckResult {
  std::string name;
  double max_err = 0.0;
  double tolerance = 1e-4;
  bool pass() const { return max_err < tolerance; }
};

// Finite-difference checks for every registered op, on randomized inputs.
// target: an op name or "all". Throws ConfigError for an unknown target.
std::vector<OpCheckResult> run_op_gradchecks(const std::string& target, int trials = 100,
                                             double tolerance = 1e-4, std::uint64_t seed = 42);

// The total multi-task loss through ASR -> CTI -> NLU on a tiny end-to-end
// model, checked against central finite differences over a deterministic
// sample of coordinates in every parameter.
OpCheckResult run_full_model_gradcheck(double tolerance = 1e-4, int coords_per_param = 6,
                                       std::uint64_t seed = 42);

struct OracleCheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

// CRF forward/Viterbi vs exhaustive enumeration and the CTI degenerate
// equivalence (one-hot continuous input == gold-token input, bitwise).
std::vector<OracleCheckResult> run_oracle_checks(int crf_trials = 1000, std::uint64_t seed = 42);

const std::vector<std::string>& gradcheck_targets();

}  // namespace slu
