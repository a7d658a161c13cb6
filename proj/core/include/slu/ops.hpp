#pragma once

#include <vector>

#include "slu/tensor.hpp"

namespace slu {

// Core tensor ops. Every op that can carry gradient records its backward rule
// on the graph. Shapes are validated eagerly with diagnostics naming both
// operands.

TensorPtr matmul(Graph& g, const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(Graph& g, const TensorPtr& a);
TensorPtr add(Graph& g, const TensorPtr& a, const TensorPtr& b);  // same shape
TensorPtr add_bias(Graph& g, const TensorPtr& a, const TensorPtr& bias);  // bias over cols
TensorPtr mul(Graph& g, const TensorPtr& a, const TensorPtr& b);  // elementwise
TensorPtr scale(Graph& g, const TensorPtr& a, double c);
TensorPtr sum(Graph& g, const TensorPtr& a);  // scalar
TensorPtr softmax_rows(Graph& g, const TensorPtr& a);
TensorPtr layer_norm(Graph& g, const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias);
TensorPtr gelu(Graph& g, const TensorPtr& x);
TensorPtr embedding_lookup(Graph& g, const TensorPtr& table, const std::vector<int>& ids);
TensorPtr dropout(Graph& g, const TensorPtr& x, double p, bool train, Rng& rng);
TensorPtr slice_rows(Graph& g, const TensorPtr& a, int r0, int r1);   // half-open
TensorPtr slice_cols(Graph& g, const TensorPtr& a, int c0, int c1);   // half-open
TensorPtr concat_rows(Graph& g, const std::vector<TensorPtr>& parts);
TensorPtr concat_cols(Graph& g, const std::vector<TensorPtr>& parts);

// Mean negative log softmax probability of targets; positions whose target
// equals ignore_index contribute nothing. All positions ignored -> 0 with
// zero gradient.
TensorPtr cross_entropy(Graph& g, const TensorPtr& logits, const std::vector<int>& targets,
                        int ignore_index = -1);

// Scaled dot-product attention over single-head q,k,v (rows = positions).
// With causal=true, position i attends only to keys <= i (requires equal
// query/key lengths).
TensorPtr attention(Graph& g, const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                    bool causal);

void check_finite(const Tensor& t, const char* what);

}  // namespace slu
