#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slu/crf.hpp"
#include "slu/cti.hpp"
#include "slu/optim.hpp"

namespace slu {

// Fixed sinusoidal positional encodings, rows 0..t-1.
TensorPtr sinusoidal_positions(int t, int d);

// Pre-LN transformer encoder layer; with cross-attention params present it is
// a decoder layer (causal self-attention + cross-attention to a context).
struct TransformerLayer {
  TensorPtr ln1_g, ln1_b, wq, wk, wv, wo;
  TensorPtr lnc_g, lnc_b, cwq, cwk, cwv, cwo;  // cross-attention (decoder only)
  TensorPtr ln2_g, ln2_b, w1, b1, w2, b2;
  int heads = 4;

  TensorPtr forward(Graph& g, const TensorPtr& x, bool causal,
                    const TensorPtr& context = nullptr) const;
};

// Multi-head attention from projection matrices; q_in attends over kv_in.
TensorPtr multi_head_attention(Graph& g, const TensorPtr& q_in, const TensorPtr& kv_in,
                               const TensorPtr& wq, const TensorPtr& wk, const TensorPtr& wv,
                               const TensorPtr& wo, int heads, bool causal);

struct AsrConfig {
  int d_feat = 32;
  int d = 64;
  int n_enc = 2;
  int n_dec = 2;
  int heads = 4;
  int max_decode_len = 32;
};

struct GreedyDecodeResult {
  std::vector<int> ids;   // hypothesis tokens, EOS excluded
  TensorPtr logits;       // one row per hypothesis token (feeds CTI)
  bool truncated = false;
};

// Tiny seq2seq ASR: feature-projection + transformer encoder, causal
// transformer decoder with cross-attention over the shared vocabulary.
class AsrModel {
 public:
  AsrModel(const AsrConfig& cfg, int vocab_size, std::uint64_t seed);

  TensorPtr encode(Graph& g, const TensorPtr& features) const;

  // Input is BOS + gold; logits row t predicts gold[t], last row predicts EOS.
  TensorPtr decode_teacher_forced(Graph& g, const TensorPtr& enc_out,
                                  const std::vector<int>& gold_ids) const;

  GreedyDecodeResult decode_greedy(const TensorPtr& enc_out, int max_len) const;

  ParamMap& params() { return params_; }
  const ParamMap& params() const { return params_; }
  const AsrConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }

 private:
  TensorPtr decoder_logits(Graph& g, const TensorPtr& enc_out,
                           const std::vector<int>& input_ids) const;

  AsrConfig cfg_;
  int vocab_size_;
  ParamMap params_;
  TensorPtr in_proj_, in_bias_, enc_lnf_g_, enc_lnf_b_;
  std::vector<TransformerLayer> enc_layers_;
  TensorPtr embed_, dec_lnf_g_, dec_lnf_b_, out_proj_, out_bias_;
  std::vector<TransformerLayer> dec_layers_;
};

struct NluConfig {
  int d = 64;
  int n_layers = 2;
  int heads = 4;
};

struct NluOutput {
  TensorPtr intent_logits;     // 1 x |intents|
  TensorPtr slot_emissions;    // T x K
  TensorPtr slot_value_logits; // T x V
  TensorPtr pooled;            // 1 x d
  TensorPtr pool_weights;      // 1 x (T+1), attention-pooling distribution
};

// Transformer NLU encoder with three heads: attention-pooled intent
// classifier, CRF slot-key head, and a slot-value token classifier that
// doubles as the MLM reconstruction head.
class NluModel {
 public:
  NluModel(const NluConfig& cfg, int vocab_size, int n_intents, int n_tags, std::uint64_t seed);

  // z rows map 1:1 to NLU positions; a gold BOS one-hot is prepended
  // internally and excluded from the per-token heads.
  NluOutput forward(Graph& g, const TokenDistSeq& z) const;

  const CrfParams& crf() const { return crf_; }
  ParamMap& params() { return params_; }
  const ParamMap& params() const { return params_; }
  const NluConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }
  int n_intents() const { return n_intents_; }
  int n_tags() const { return n_tags_; }
  const TensorPtr& embedding_table() const { return embed_; }

 private:
  NluConfig cfg_;
  int vocab_size_, n_intents_, n_tags_;
  ParamMap params_;
  TensorPtr embed_, lnf_g_, lnf_b_, pool_q_;
  TensorPtr intent_w_, intent_b_, slotkey_w_, slotkey_b_, slotval_w_, slotval_b_;
  std::vector<TransformerLayer> layers_;
  CrfParams crf_;
};

// Registers a freshly initialized parameter (Gaussian, std 1/sqrt(fan_in);
// norm gains 1, biases 0) under `name`.
TensorPtr register_param(ParamMap& params, const std::string& name, std::vector<int> shape,
                         std::uint64_t seed);

}  // namespace slu
