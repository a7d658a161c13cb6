#pragma once

#include <utility>
#include <vector>

#include "slu/tensor.hpp"

namespace slu {

// Linear-chain CRF over K tags: score(y) = start[y0] + sum_t em[t][yt]
//                                        + sum_t tr[y_{t-1}][y_t] + end[y_{T-1}].
struct CrfParams {
  TensorPtr transitions;  // K x K
  TensorPtr start;        // K
  TensorPtr end;          // K

  int num_tags() const { return transitions->shape[0]; }
  static CrfParams create(int num_tags, bool requires_grad);
  void check(const TensorPtr& emissions) const;
};

double crf_path_score(const TensorPtr& emissions, const std::vector<int>& tags,
                      const CrfParams& params);

// Exact log partition via the log-space forward algorithm.
double crf_log_partition(const TensorPtr& emissions, const CrfParams& params);

// score(tags) - logZ as a graph node; gradients w.r.t. emissions and CRF
// params via forward-backward marginals.
TensorPtr crf_log_likelihood(Graph& g, const TensorPtr& emissions, const std::vector<int>& tags,
                             const CrfParams& params);

// Best path and its score; backpointer ties break toward the lower tag id.
std::pair<std::vector<int>, double> crf_viterbi(const TensorPtr& emissions,
                                                const CrfParams& params);

// Brute-force oracle: exhaustive enumeration over all K^T paths. Test/CLI
// verification only; independent of the DP implementations above.
double crf_brute_force_log_partition(const TensorPtr& emissions, const CrfParams& params);
std::pair<std::vector<int>, double> crf_brute_force_best_path(const TensorPtr& emissions,
                                                              const CrfParams& params);

}  // namespace slu
