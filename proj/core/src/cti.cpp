#include "slu/cti.hpp"

#include <cmath>

namespace slu {

TokenDistSeq continuous_interface(Graph& g, const TensorPtr& logits) {
  if (logits->shape.size() != 2)
    throw ShapeError("continuous_interface: logits must be T x V, got " + logits->shape_str());
  return {softmax_rows(g, logits), Provenance::kContinuous};
}

TokenDistSeq discrete_interface(const TensorPtr& logits) {
  if (logits->shape.size() != 2)
    throw ShapeError("discrete_interface: logits must be T x V, got " + logits->shape_str());
  if (logits->requires_grad)
    throw UnsupportedOperation(
        "discrete_interface: argmax is not differentiable; gradients cannot flow through the "
        "discrete token interface (use continuous_interface for end-to-end training)");
  const int t = logits->shape[0], v = logits->shape[1];
  auto z = make_tensor({t, v});
  for (int i = 0; i < t; ++i) {
    int arg = 0;
    double mx = logits->at(i, 0);
    for (int j = 1; j < v; ++j)
      if (logits->at(i, j) > mx) {  // strict: ties keep the lowest index
        mx = logits->at(i, j);
        arg = j;
      }
    z->at(i, arg) = 1.0;
  }
  return {z, Provenance::kDiscrete};
}

TokenDistSeq gold_interface(const std::vector<int>& token_ids, int vocab_size) {
  auto z = make_tensor({static_cast<int>(token_ids.size()), vocab_size});
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    const int id = token_ids[i];
    if (id < 0 || id >= vocab_size)
      throw IndexError("gold_interface: token id " + std::to_string(id) + " out of range [0," +
                       std::to_string(vocab_size) + ")");
    z->v[i * vocab_size + id] = 1.0;
  }
  return {z, Provenance::kGold};
}

TensorPtr expected_embedding(Graph& g, const TokenDistSeq& z, const TensorPtr& embedding_table) {
  if (z.vocab_size() != embedding_table->shape[0])
    throw VocabMismatchError("expected_embedding: distribution width " +
                             std::to_string(z.vocab_size()) + " does not match embedding height " +
                             std::to_string(embedding_table->shape[0]) +
                             " (shared-vocabulary contract violated)");
  return matmul(g, z.z, embedding_table);
}

void validate_token_dist(const TokenDistSeq& z, double tol) {
  const int t = z.length(), v = z.vocab_size();
  for (int i = 0; i < t; ++i) {
    double s = 0.0;
    int ones = 0;
    for (int j = 0; j < v; ++j) {
      const double x = z.z->at(i, j);
      if (x < 0.0 || x > 1.0) throw NumericError("token distribution entry outside [0,1]");
      if (x == 1.0) ++ones;
      s += x;
    }
    if (std::abs(s - 1.0) > tol) throw NumericError("token distribution row does not sum to 1");
    if (z.provenance != Provenance::kContinuous && ones != 1)
      throw NumericError("discrete/gold distribution row is not one-hot");
  }
}

}  // namespace slu
