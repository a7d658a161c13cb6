#include "slu/model.hpp"

#include <cmath>

#include "slu/vocab.hpp"

namespace slu {

TensorPtr sinusoidal_positions(int t, int d) {
  auto out = make_tensor({t, d});
  for (int pos = 0; pos < t; ++pos)
    for (int i = 0; i < d; ++i) {
      const double angle = pos / std::pow(10000.0, (2.0 * (i / 2)) / d);
      out->at(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return out;
}

TensorPtr register_param(ParamMap& params, const std::string& name, std::vector<int> shape,
                         std::uint64_t seed) {
  auto t = make_tensor(std::move(shape), true);
  const auto last = name.rfind('.');
  const std::string leaf = last == std::string::npos ? name : name.substr(last + 1);
  if (leaf == "g") {
    std::fill(t->v.begin(), t->v.end(), 1.0);
  } else if (!leaf.empty() && leaf[0] == 'b') {
    // biases stay zero
  } else {
    Rng rng(child_seed(seed, "init." + name));
    const double fan_in = t->shape.size() == 2 ? t->shape[0] : static_cast<double>(t->size());
    const double std_dev = 1.0 / std::sqrt(fan_in);
    for (auto& x : t->v) x = std_dev * rng.gaussian();
  }
  if (!params.emplace(name, t).second)
    throw ConfigError("duplicate parameter name '" + name + "'");
  return t;
}

TensorPtr multi_head_attention(Graph& g, const TensorPtr& q_in, const TensorPtr& kv_in,
                               const TensorPtr& wq, const TensorPtr& wk, const TensorPtr& wv,
                               const TensorPtr& wo, int heads, bool causal) {
  const int d = wq->shape[1];
  if (d % heads != 0) throw ConfigError("attention: model dim not divisible by head count");
  const int dh = d / heads;
  auto q = matmul(g, q_in, wq);
  auto k = matmul(g, kv_in, wk);
  auto v = matmul(g, kv_in, wv);
  std::vector<TensorPtr> outs;
  for (int h = 0; h < heads; ++h) {
    outs.push_back(attention(g, slice_cols(g, q, h * dh, (h + 1) * dh),
                             slice_cols(g, k, h * dh, (h + 1) * dh),
                             slice_cols(g, v, h * dh, (h + 1) * dh), causal));
  }
  return matmul(g, concat_cols(g, outs), wo);
}

TensorPtr TransformerLayer::forward(Graph& g, const TensorPtr& x, bool causal,
                                    const TensorPtr& context) const {
  auto a = layer_norm(g, x, ln1_g, ln1_b);
  auto h = add(g, x, multi_head_attention(g, a, a, wq, wk, wv, wo, heads, causal));
  if (context) {
    if (!cwq) throw ConfigError("transformer layer: context given but no cross-attention params");
    auto c = layer_norm(g, h, lnc_g, lnc_b);
    h = add(g, h, multi_head_attention(g, c, context, cwq, cwk, cwv, cwo, heads, false));
  }
  auto f = layer_norm(g, h, ln2_g, ln2_b);
  auto ff = matmul(g, gelu(g, add_bias(g, matmul(g, f, w1), b1)), w2);
  return add(g, h, add_bias(g, ff, b2));
}

namespace {

TransformerLayer make_layer(ParamMap& params, const std::string& prefix, int d, int heads,
                            bool cross, std::uint64_t seed) {
  TransformerLayer l;
  l.heads = heads;
  l.ln1_g = register_param(params, prefix + "ln1.g", {d}, seed);
  l.ln1_b = register_param(params, prefix + "ln1.b", {d}, seed);
  l.wq = register_param(params, prefix + "attn.wq", {d, d}, seed);
  l.wk = register_param(params, prefix + "attn.wk", {d, d}, seed);
  l.wv = register_param(params, prefix + "attn.wv", {d, d}, seed);
  l.wo = register_param(params, prefix + "attn.wo", {d, d}, seed);
  if (cross) {
    l.lnc_g = register_param(params, prefix + "lnc.g", {d}, seed);
    l.lnc_b = register_param(params, prefix + "lnc.b", {d}, seed);
    l.cwq = register_param(params, prefix + "cross.wq", {d, d}, seed);
    l.cwk = register_param(params, prefix + "cross.wk", {d, d}, seed);
    l.cwv = register_param(params, prefix + "cross.wv", {d, d}, seed);
    l.cwo = register_param(params, prefix + "cross.wo", {d, d}, seed);
  }
  l.ln2_g = register_param(params, prefix + "ln2.g", {d}, seed);
  l.ln2_b = register_param(params, prefix + "ln2.b", {d}, seed);
  l.w1 = register_param(params, prefix + "ff.w1", {d, 4 * d}, seed);
  l.b1 = register_param(params, prefix + "ff.b1", {4 * d}, seed);
  l.w2 = register_param(params, prefix + "ff.w2", {4 * d, d}, seed);
  l.b2 = register_param(params, prefix + "ff.b2", {d}, seed);
  return l;
}

}  // namespace

AsrModel::AsrModel(const AsrConfig& cfg, int vocab_size, std::uint64_t seed)
    : cfg_(cfg), vocab_size_(vocab_size) {
  in_proj_ = register_param(params_, "asr.enc.in.w", {cfg.d_feat, cfg.d}, seed);
  in_bias_ = register_param(params_, "asr.enc.in.bias", {cfg.d}, seed);
  for (int i = 0; i < cfg.n_enc; ++i)
    enc_layers_.push_back(
        make_layer(params_, "asr.enc.l" + std::to_string(i) + ".", cfg.d, cfg.heads, false, seed));
  enc_lnf_g_ = register_param(params_, "asr.enc.lnf.g", {cfg.d}, seed);
  enc_lnf_b_ = register_param(params_, "asr.enc.lnf.b", {cfg.d}, seed);
  embed_ = register_param(params_, "asr.dec.embed", {vocab_size, cfg.d}, seed);
  for (int i = 0; i < cfg.n_dec; ++i)
    dec_layers_.push_back(
        make_layer(params_, "asr.dec.l" + std::to_string(i) + ".", cfg.d, cfg.heads, true, seed));
  dec_lnf_g_ = register_param(params_, "asr.dec.lnf.g", {cfg.d}, seed);
  dec_lnf_b_ = register_param(params_, "asr.dec.lnf.b", {cfg.d}, seed);
  out_proj_ = register_param(params_, "asr.dec.out.w", {cfg.d, vocab_size}, seed);
  out_bias_ = register_param(params_, "asr.dec.out.bias", {vocab_size}, seed);
}

TensorPtr AsrModel::encode(Graph& g, const TensorPtr& features) const {
  if (features->shape.size() != 2 || features->shape[1] != cfg_.d_feat)
    throw ConfigError("asr encode: feature width " + features->shape_str() +
                      " does not match configured d_feat=" + std::to_string(cfg_.d_feat));
  auto x = add_bias(g, matmul(g, features, in_proj_), in_bias_);
  x = add(g, x, sinusoidal_positions(features->shape[0], cfg_.d));
  for (const auto& l : enc_layers_) x = l.forward(g, x, false);
  return layer_norm(g, x, enc_lnf_g_, enc_lnf_b_);
}

TensorPtr AsrModel::decoder_logits(Graph& g, const TensorPtr& enc_out,
                                   const std::vector<int>& input_ids) const {
  auto x = embedding_lookup(g, embed_, input_ids);
  x = add(g, x, sinusoidal_positions(static_cast<int>(input_ids.size()), cfg_.d));
  for (const auto& l : dec_layers_) x = l.forward(g, x, true, enc_out);
  x = layer_norm(g, x, dec_lnf_g_, dec_lnf_b_);
  return add_bias(g, matmul(g, x, out_proj_), out_bias_);
}

TensorPtr AsrModel::decode_teacher_forced(Graph& g, const TensorPtr& enc_out,
                                          const std::vector<int>& gold_ids) const {
  if (static_cast<int>(gold_ids.size()) > cfg_.max_decode_len)
    throw ConfigError("asr decode: gold length " + std::to_string(gold_ids.size()) +
                      " exceeds max_decode_len=" + std::to_string(cfg_.max_decode_len));
  std::vector<int> input = {Vocabulary::kBos};
  input.insert(input.end(), gold_ids.begin(), gold_ids.end());
  return decoder_logits(g, enc_out, input);
}

GreedyDecodeResult AsrModel::decode_greedy(const TensorPtr& enc_out, int max_len) const {
  GreedyDecodeResult res;
  std::vector<std::vector<double>> rows;
  std::vector<int> input = {Vocabulary::kBos};
  res.truncated = true;
  for (int step = 0; step < max_len; ++step) {
    Graph g;
    auto logits = decoder_logits(g, enc_out, input);
    const int last = logits->shape[0] - 1;
    int arg = 0;
    double mx = logits->at(last, 0);
    for (int j = 1; j < vocab_size_; ++j)
      if (logits->at(last, j) > mx) {
        mx = logits->at(last, j);
        arg = j;
      }
    if (arg == Vocabulary::kEos) {
      res.truncated = false;
      break;
    }
    std::vector<double> row(vocab_size_);
    for (int j = 0; j < vocab_size_; ++j) row[j] = logits->at(last, j);
    rows.push_back(std::move(row));
    res.ids.push_back(arg);
    input.push_back(arg);
  }
  res.logits = make_tensor({static_cast<int>(rows.size()), vocab_size_});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(),
              res.logits->v.begin() + i * static_cast<std::size_t>(vocab_size_));
  return res;
}

NluModel::NluModel(const NluConfig& cfg, int vocab_size, int n_intents, int n_tags,
                   std::uint64_t seed)
    : cfg_(cfg), vocab_size_(vocab_size), n_intents_(n_intents), n_tags_(n_tags) {
  embed_ = register_param(params_, "nlu.embed", {vocab_size, cfg.d}, seed);
  for (int i = 0; i < cfg.n_layers; ++i)
    layers_.push_back(
        make_layer(params_, "nlu.enc.l" + std::to_string(i) + ".", cfg.d, cfg.heads, false, seed));
  lnf_g_ = register_param(params_, "nlu.enc.lnf.g", {cfg.d}, seed);
  lnf_b_ = register_param(params_, "nlu.enc.lnf.b", {cfg.d}, seed);
  pool_q_ = register_param(params_, "nlu.pool.q", {1, cfg.d}, seed);
  intent_w_ = register_param(params_, "nlu.intent.w", {cfg.d, n_intents}, seed);
  intent_b_ = register_param(params_, "nlu.intent.bias", {n_intents}, seed);
  slotkey_w_ = register_param(params_, "nlu.slotkey.w", {cfg.d, n_tags}, seed);
  slotkey_b_ = register_param(params_, "nlu.slotkey.bias", {n_tags}, seed);
  slotval_w_ = register_param(params_, "nlu.slotval.w", {cfg.d, vocab_size}, seed);
  slotval_b_ = register_param(params_, "nlu.slotval.bias", {vocab_size}, seed);
  crf_.transitions = register_param(params_, "nlu.crf.transitions", {n_tags, n_tags}, seed);
  crf_.start = register_param(params_, "nlu.crf.start", {n_tags}, seed);
  crf_.end = register_param(params_, "nlu.crf.end", {n_tags}, seed);
}

NluOutput NluModel::forward(Graph& g, const TokenDistSeq& z) const {
  if (z.vocab_size() != vocab_size_)
    throw VocabMismatchError("nlu forward: input width " + std::to_string(z.vocab_size()) +
                             " does not match embedding height " + std::to_string(vocab_size_) +
                             " (shared-vocabulary contract violated)");
  const int t = z.length();
  auto bos = gold_interface({Vocabulary::kBos}, vocab_size_);
  TokenDistSeq full{concat_rows(g, {bos.z, z.z}), z.provenance};
  auto x = expected_embedding(g, full, embed_);
  x = add(g, x, sinusoidal_positions(t + 1, cfg_.d));
  for (const auto& l : layers_) x = l.forward(g, x, false);
  auto h = layer_norm(g, x, lnf_g_, lnf_b_);

  NluOutput out;
  out.pool_weights = softmax_rows(g, matmul(g, pool_q_, transpose(g, h)));
  out.pooled = matmul(g, out.pool_weights, h);
  out.intent_logits = add_bias(g, matmul(g, out.pooled, intent_w_), intent_b_);
  auto tokens = slice_rows(g, h, 1, t + 1);
  out.slot_emissions = add_bias(g, matmul(g, tokens, slotkey_w_), slotkey_b_);
  out.slot_value_logits = add_bias(g, matmul(g, tokens, slotval_w_), slotval_b_);
  return out;
}

}  // namespace slu
