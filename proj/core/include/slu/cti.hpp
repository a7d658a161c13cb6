#pragma once

#include <vector>

#include "slu/ops.hpp"

namespace slu {

enum class Provenance { kContinuous, kDiscrete, kGold };

// A length-T sequence of row-stochastic distributions over the shared
// vocabulary: the junction between the ASR decoder and the NLU input.
struct TokenDistSeq {
  TensorPtr z;  // T x V, rows sum to 1
  Provenance provenance = Provenance::kGold;

  int length() const { return z->shape[0]; }
  int vocab_size() const { return z->shape[1]; }
};

// Z = rowwise softmax(logits); differentiable w.r.t. the logits.
TokenDistSeq continuous_interface(Graph& g, const TensorPtr& logits);

// Rowwise argmax one-hot (ties -> lowest index). Not differentiable:
// requesting gradients through it raises UnsupportedOperation.
TokenDistSeq discrete_interface(const TensorPtr& logits);

// Exact one-hot rows from gold token ids.
TokenDistSeq gold_interface(const std::vector<int>& token_ids, int vocab_size);

// Z . E — each output row is the Z_t-weighted average of embedding rows; the
// unique linear extension of embedding lookup to distributions.
TensorPtr expected_embedding(Graph& g, const TokenDistSeq& z, const TensorPtr& embedding_table);

// Row sums within tol of 1, entries in [0,1]; discrete/gold rows exactly
// one-hot.
void validate_token_dist(const TokenDistSeq& z, double tol = 1e-9);

}  // namespace slu
