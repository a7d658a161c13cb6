#include "slu/verification.hpp"

#include <cmath>
#include <cstring>
#include <functional>

#include "slu/crf.hpp"
#include "slu/cti.hpp"
#include "slu/losses.hpp"
#include "slu/model.hpp"
#include "slu/ops.hpp"
#include "slu/trainer.hpp"

namespace slu {

namespace {

TensorPtr random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad, double scl = 1.0) {
  auto t = make_tensor(std::move(shape), requires_grad);
  for (auto& x : t->v) x = scl * rng.gaussian();
  return t;
}

// Scalar readout with a fixed random cotangent so every output coordinate
// gets a nontrivial gradient signal.
TensorPtr readout(Graph& g, const TensorPtr& out, const TensorPtr& r) {
  return sum(g, mul(g, out, r));
}

using CaseBuilder = std::function<double(Rng&, double tol)>;  // returns max err

double check_case(ParamMap params, const std::function<TensorPtr(Graph&)>& f) {
  GradCheckOptions opt;
  auto rep = grad_check(f, params, opt);
  return rep.max_err;
}

double case_matmul(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({3, 4}, rng, true);
  p["b"] = random_tensor({4, 2}, rng, true);
  auto r = random_tensor({3, 2}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, matmul(g, p.at("a"), p.at("b")), r); });
}

double case_transpose(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({3, 5}, rng, true);
  auto r = random_tensor({5, 3}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, transpose(g, p.at("a")), r); });
}

double case_add(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({2, 3}, rng, true);
  p["b"] = random_tensor({2, 3}, rng, true);
  auto r = random_tensor({2, 3}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, add(g, p.at("a"), p.at("b")), r); });
}

double case_add_bias(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({3, 4}, rng, true);
  p["bias"] = random_tensor({4}, rng, true);
  auto r = random_tensor({3, 4}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, add_bias(g, p.at("a"), p.at("bias")), r); });
}

double case_mul(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({2, 4}, rng, true);
  p["b"] = random_tensor({2, 4}, rng, true);
  auto r = random_tensor({2, 4}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, mul(g, p.at("a"), p.at("b")), r); });
}

double case_scale(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({2, 3}, rng, true);
  auto r = random_tensor({2, 3}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, scale(g, p.at("a"), -1.7), r); });
}

double case_sum(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({3, 3}, rng, true);
  return check_case(p, [=](Graph& g) { return sum(g, p.at("a")); });
}

double case_softmax(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({2, 5}, rng, true, 2.0);
  auto r = random_tensor({2, 5}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, softmax_rows(g, p.at("a")), r); });
}

double case_layer_norm(Rng& rng) {
  ParamMap p;
  p["x"] = random_tensor({3, 6}, rng, true);
  p["g"] = random_tensor({6}, rng, true);
  p["bias"] = random_tensor({6}, rng, true);
  auto r = random_tensor({3, 6}, rng, false);
  return check_case(
      p, [=](Graph& g) { return readout(g, layer_norm(g, p.at("x"), p.at("g"), p.at("bias")), r); });
}

double case_gelu(Rng& rng) {
  ParamMap p;
  p["x"] = random_tensor({2, 6}, rng, true);
  auto r = random_tensor({2, 6}, rng, false);
  return check_case(p, [=](Graph& g) { return readout(g, gelu(g, p.at("x")), r); });
}

double case_embedding_lookup(Rng& rng) {
  ParamMap p;
  p["table"] = random_tensor({7, 4}, rng, true);
  std::vector<int> ids = {rng.uniform_int(7), rng.uniform_int(7), rng.uniform_int(7)};
  auto r = random_tensor({3, 4}, rng, false);
  return check_case(
      p, [=](Graph& g) { return readout(g, embedding_lookup(g, p.at("table"), ids), r); });
}

double case_dropout(Rng& rng) {
  ParamMap p;
  p["x"] = random_tensor({3, 5}, rng, true);
  auto r = random_tensor({3, 5}, rng, false);
  const std::uint64_t mask_seed = rng.next_u64();
  return check_case(p, [=](Graph& g) {
    Rng mask_rng(mask_seed);  // replayable mask
    return readout(g, dropout(g, p.at("x"), 0.3, true, mask_rng), r);
  });
}

double case_cross_entropy(Rng& rng) {
  ParamMap p;
  p["logits"] = random_tensor({4, 5}, rng, true, 2.0);
  std::vector<int> targets = {rng.uniform_int(5), rng.uniform_int(5), -1, rng.uniform_int(5)};
  return check_case(p, [=](Graph& g) { return cross_entropy(g, p.at("logits"), targets, -1); });
}

double case_attention(Rng& rng, bool causal) {
  ParamMap p;
  p["q"] = random_tensor({3, 4}, rng, true);
  p["k"] = random_tensor({3, 4}, rng, true);
  p["v"] = random_tensor({3, 4}, rng, true);
  auto r = random_tensor({3, 4}, rng, false);
  return check_case(p, [=](Graph& g) {
    return readout(g, attention(g, p.at("q"), p.at("k"), p.at("v"), causal), r);
  });
}

double case_slice_concat(Rng& rng) {
  ParamMap p;
  p["a"] = random_tensor({4, 6}, rng, true);
  p["b"] = random_tensor({2, 6}, rng, true);
  auto r = random_tensor({3, 3}, rng, false);
  return check_case(p, [=](Graph& g) {
    auto cat = concat_rows(g, {p.at("a"), p.at("b")});
    auto sl = slice_cols(g, slice_rows(g, cat, 1, 4), 2, 5);
    return readout(g, sl, r);
  });
}

double case_crf(Rng& rng) {
  const int t = 1 + rng.uniform_int(4), k = 2 + rng.uniform_int(3);
  ParamMap p;
  p["emissions"] = random_tensor({t, k}, rng, true);
  p["transitions"] = random_tensor({k, k}, rng, true);
  p["start"] = random_tensor({k}, rng, true);
  p["end"] = random_tensor({k}, rng, true);
  std::vector<int> tags(t);
  for (auto& tag : tags) tag = rng.uniform_int(k);
  return check_case(p, [=](Graph& g) {
    CrfParams crf{p.at("transitions"), p.at("start"), p.at("end")};
    return scale(g, crf_log_likelihood(g, p.at("emissions"), tags, crf), -1.0);
  });
}

double case_expected_embedding(Rng& rng) {
  ParamMap p;
  p["logits"] = random_tensor({3, 6}, rng, true, 2.0);
  p["table"] = random_tensor({6, 4}, rng, true);
  auto r = random_tensor({3, 4}, rng, false);
  return check_case(p, [=](Graph& g) {
    auto z = continuous_interface(g, p.at("logits"));
    return readout(g, expected_embedding(g, z, p.at("table")), r);
  });
}

struct OpCase {
  std::string name;
  std::function<double(Rng&)> run;
};

const std::vector<OpCase>& op_cases() {
  static const std::vector<OpCase> cases = {
      {"matmul", case_matmul},
      {"transpose", case_transpose},
      {"add", case_add},
      {"add_bias", case_add_bias},
      {"mul", case_mul},
      {"scale", case_scale},
      {"sum", case_sum},
      {"softmax", case_softmax},
      {"layer_norm", case_layer_norm},
      {"gelu", case_gelu},
      {"embedding_lookup", case_embedding_lookup},
      {"dropout", case_dropout},
      {"cross_entropy", case_cross_entropy},
      {"attention", [](Rng& r) { return case_attention(r, false); }},
      {"attention_causal", [](Rng& r) { return case_attention(r, true); }},
      {"slice_concat", case_slice_concat},
      {"crf_log_likelihood", case_crf},
      {"cti_expected_embedding", case_expected_embedding},
  };
  return cases;
}

}  // namespace

const std::vector<std::string>& gradcheck_targets() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : op_cases()) out.push_back(c.name);
    out.push_back("full_model");
    return out;
  }();
  return names;
}

std::vector<OpCheckResult> run_op_gradchecks(const std::string& target, int trials,
                                             double tolerance, std::uint64_t seed) {
  std::vector<OpCheckResult> results;
  bool found = false;
  for (const auto& c : op_cases()) {
    if (target != "all" && target != c.name) continue;
    found = true;
    OpCheckResult res;
    res.name = c.name;
    res.tolerance = tolerance;
    Rng rng(child_seed(seed, "opcheck." + c.name));
    for (int t = 0; t < trials; ++t) res.max_err = std::max(res.max_err, c.run(rng));
    results.push_back(res);
  }
  if (!found && target != "all" && target != "full_model")
    throw ConfigError("gradcheck: unknown target '" + target + "'");
  return results;
}

OpCheckResult run_full_model_gradcheck(double tolerance, int coords_per_param,
                                       std::uint64_t seed) {
  // Tiny but complete pipeline: every parameter of both networks sees the
  // full seven-loss objective.
  const std::vector<std::string> corpus = {"turn on the light", "play the song now",
                                           "set an alarm for nine"};
  auto vocab = Vocabulary::build(corpus, 1);
  AcousticConfig ac;
  ac.k = 1;
  ac.d_feat = 8;
  AsrConfig asr_cfg;
  asr_cfg.d_feat = 8;
  asr_cfg.d = 16;
  asr_cfg.n_enc = 1;
  asr_cfg.n_dec = 1;
  asr_cfg.heads = 2;
  asr_cfg.max_decode_len = 8;
  NluConfig nlu_cfg;
  nlu_cfg.d = 16;
  nlu_cfg.n_layers = 1;
  nlu_cfg.heads = 2;
  const TagInventory inv{2};
  AsrModel asr(asr_cfg, vocab.size(), child_seed(seed, "fm.asr"));
  NluModel nlu(nlu_cfg, vocab.size(), 3, inv.size(), child_seed(seed, "fm.nlu"));

  ExampleSupervision sup;
  sup.transcript_ids = vocab.encode("turn on the light");
  sup.intent = 1;
  sup.tags = {TagInventory::kOutside, TagInventory::kOutside, TagInventory::kOutside,
              inv.begin_tag(0)};
  auto feats = synthesize_features(sup.transcript_ids, vocab.size(), 123, 0.3, ac);
  const std::uint64_t mask_seed = child_seed(seed, "fm.mask");

  ParamMap all = asr.params();
  for (const auto& [name, p] : nlu.params()) all.emplace(name, p);

  auto f = [&](Graph& g) -> TensorPtr {
    auto enc = asr.encode(g, feats);
    auto logits = asr.decode_teacher_forced(g, enc, sup.transcript_ids);
    BundleInputs in;
    in.asr = asr_loss(g, logits, sup.transcript_ids);
    auto z = continuous_interface(
        g, slice_rows(g, logits, 0, static_cast<int>(sup.transcript_ids.size())));
    auto slu = slu_loss(g, nlu.forward(g, z), sup, nlu.crf());
    in.s2i = slu.s2i;
    in.s2k = slu.s2k;
    in.s2v = slu.s2v;
    Rng mask_rng(mask_seed);
    auto text = nlu_task_loss(g, nlu, sup, 0.4, mask_rng);
    in.t2i = text.t2i;
    in.t2k = text.t2k;
    if (text.t2v) in.t2v = text.t2v;
    return total_loss(g, in, LossWeights{}).total;
  };

  GradCheckOptions opt;
  opt.tolerance = tolerance;
  opt.max_coords_per_param = coords_per_param;
  opt.sample_seed = child_seed(seed, "fm.sample");
  auto rep = grad_check(f, all, opt);
  OpCheckResult res;
  res.name = "full_model";
  res.tolerance = tolerance;
  res.max_err = rep.max_err;
  return res;
}

std::vector<OracleCheckResult> run_oracle_checks(int crf_trials, std::uint64_t seed) {
  std::vector<OracleCheckResult> out;

  {
    OracleCheckResult res;
    res.name = "crf_forward_vs_enumeration";
    OracleCheckResult vres;
    vres.name = "crf_viterbi_vs_enumeration";
    Rng rng(child_seed(seed, "oracle.crf"));
    for (int trial = 0; trial < crf_trials; ++trial) {
      const int t = 1 + rng.uniform_int(5), k = 1 + rng.uniform_int(5);
      auto em = random_tensor({t, k}, rng, false, 2.0);
      CrfParams p = CrfParams::create(k, false);
      for (auto& x : p.transitions->v) x = rng.gaussian();
      for (auto& x : p.start->v) x = rng.gaussian();
      for (auto& x : p.end->v) x = rng.gaussian();
      const double fwd = crf_log_partition(em, p);
      const double ref = crf_brute_force_log_partition(em, p);
      if (std::abs(fwd - ref) > 1e-8) {
        res.pass = false;
        res.detail = "trial " + std::to_string(trial) + ": forward " + format_double(fwd) +
                     " vs enumeration " + format_double(ref);
        break;
      }
      auto [path, score] = crf_viterbi(em, p);
      auto [ref_path, ref_score] = crf_brute_force_best_path(em, p);
      if (std::abs(score - ref_score) > 1e-8 || path != ref_path) {
        vres.pass = false;
        vres.detail = "trial " + std::to_string(trial) + ": viterbi score " +
                      format_double(score) + " vs enumeration " + format_double(ref_score);
        break;
      }
    }
    out.push_back(res);
    out.push_back(vres);
  }

  {
    OracleCheckResult res;
    res.name = "cti_degenerate_equivalence";
    Rng rng(child_seed(seed, "oracle.cti"));
    for (int trial = 0; trial < 20 && res.pass; ++trial) {
      const int v = 12, t = 1 + rng.uniform_int(5);
      NluConfig cfg;
      cfg.d = 16;
      cfg.n_layers = 1;
      cfg.heads = 2;
      NluModel nlu(cfg, v, 4, 5, rng.next_u64());
      std::vector<int> ids(t);
      for (auto& id : ids) id = rng.uniform_int(v);
      Graph g1, g2;
      auto gold = nlu.forward(g1, gold_interface(ids, v));
      // Same one-hot rows presented as a continuous-interface distribution.
      auto onehot = gold_interface(ids, v);
      TokenDistSeq cont{onehot.z, Provenance::kContinuous};
      auto from_cont = nlu.forward(g2, cont);
      auto bitwise_equal = [](const TensorPtr& a, const TensorPtr& b) {
        return a->v.size() == b->v.size() &&
               std::memcmp(a->v.data(), b->v.data(), a->v.size() * sizeof(double)) == 0;
      };
      if (!bitwise_equal(gold.intent_logits, from_cont.intent_logits) ||
          !bitwise_equal(gold.slot_emissions, from_cont.slot_emissions) ||
          !bitwise_equal(gold.slot_value_logits, from_cont.slot_value_logits)) {
        res.pass = false;
        res.detail = "trial " + std::to_string(trial) + ": outputs differ bitwise";
      }
    }
    out.push_back(res);
  }

  return out;
}

}  // namespace slu
