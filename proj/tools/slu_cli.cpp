// Command-line front end: data generation, the three training regimes,
// composed inference, and the verification suites.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "slu/checkpoint.hpp"
#include "slu/trainer.hpp"
#include "slu/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::string data_dir;  // optional pre-generated corpus from gen-data
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--set", o.overrides, "dotted-key override, e.g. train.steps=100");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--data", o.data_dir, "directory produced by gen-data");
  cmd->add_option("--seed", o.seed, "overrides the config seed");
}

slu::Config load_config(const CommonOpts& o) {
  slu::Config cfg = o.config_path.empty() ? slu::Config{} : slu::Config::load(o.config_path);
  cfg.apply_overrides(o.overrides);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

slu::TrainContext make_context(const CommonOpts& o) {
  slu::TrainContext ctx;
  ctx.cfg = load_config(o);
  ctx.grammar = slu::default_grammar();
  if (!o.data_dir.empty()) {
    auto train = slu::load_jsonl(o.data_dir + "/train.jsonl");
    auto dev = slu::load_jsonl(o.data_dir + "/dev.jsonl");
    ctx.vocab = slu::Vocabulary::load(o.data_dir + "/vocab.json");
    ctx.train = std::move(train);
    ctx.dev = std::move(dev);
    return ctx;
  }
  slu::CorpusParams cp;
  cp.n_examples = ctx.cfg.data.n_examples;
  cp.noise_level = ctx.cfg.data.noise_level;
  cp.seed = slu::child_seed(ctx.cfg.seed, "data");
  auto corpus = slu::generate_corpus(ctx.grammar, cp);
  std::vector<std::string> transcripts;
  for (const auto& ex : corpus) transcripts.push_back(*ex.transcript);
  ctx.vocab = slu::Vocabulary::build(transcripts, ctx.cfg.data.min_count);
  auto splits = slu::split_corpus(corpus, ctx.cfg.data.ratios, slu::child_seed(ctx.cfg.seed, "split"));
  ctx.train = std::move(splits.train);
  ctx.dev = std::move(splits.dev);
  return ctx;
}

std::vector<slu::UtteranceExample> test_split(const CommonOpts& o, const slu::TrainContext& ctx) {
  if (!o.data_dir.empty()) return slu::load_jsonl(o.data_dir + "/test.jsonl");
  slu::CorpusParams cp;
  cp.n_examples = ctx.cfg.data.n_examples;
  cp.noise_level = ctx.cfg.data.noise_level;
  cp.seed = slu::child_seed(ctx.cfg.seed, "data");
  auto corpus = slu::generate_corpus(ctx.grammar, cp);
  return slu::split_corpus(corpus, ctx.cfg.data.ratios, slu::child_seed(ctx.cfg.seed, "split")).test;
}

void write_run(const CommonOpts& o, const slu::TrainContext& ctx, const slu::RunRecord& rec) {
  rec.write(o.out_dir);
  ctx.vocab.save(o.out_dir + "/vocab.json");
}

int cmd_gen_data(const CommonOpts& o) {
  auto cfg = load_config(o);
  auto grammar = slu::default_grammar();
  slu::CorpusParams cp;
  cp.n_examples = cfg.data.n_examples;
  cp.noise_level = cfg.data.noise_level;
  cp.seed = slu::child_seed(cfg.seed, "data");
  auto corpus = slu::generate_corpus(grammar, cp);
  std::vector<std::string> transcripts;
  for (const auto& ex : corpus) transcripts.push_back(*ex.transcript);
  auto vocab = slu::Vocabulary::build(transcripts, cfg.data.min_count);
  auto splits = slu::split_corpus(corpus, cfg.data.ratios, slu::child_seed(cfg.seed, "split"));
  fs::create_directories(o.out_dir);
  slu::save_jsonl(splits.train, o.out_dir + "/train.jsonl");
  slu::save_jsonl(splits.dev, o.out_dir + "/dev.jsonl");
  slu::save_jsonl(splits.test, o.out_dir + "/test.jsonl");
  vocab.save(o.out_dir + "/vocab.json");
  std::ofstream(o.out_dir + "/config.json") << cfg.to_json() << "\n";
  std::cout << "gen-data: " << splits.train.size() << " train / " << splits.dev.size() << " dev / "
            << splits.test.size() << " test, vocab " << vocab.size() << " (hash "
            << vocab.hash() << ")\n";
  return 0;
}

int cmd_train_asr(const CommonOpts& o) {
  auto ctx = make_context(o);
  ctx.cfg.train.regime = "asr_pretrain";
  slu::AsrModel model(ctx.cfg.asr, ctx.vocab.size(), slu::child_seed(ctx.cfg.seed, "model.asr"));
  auto rec = slu::pretrain_asr(ctx, model);
  write_run(o, ctx, rec);
  slu::save_checkpoint(o.out_dir + "/asr.ckpt.json", model.params(), ctx.vocab.hash());
  std::cout << "train-asr: " << ctx.cfg.train.steps << " steps, dev wer "
            << slu::format_double(rec.final_metrics.wer) << "\n";
  return 0;
}

int cmd_train_nlu(const CommonOpts& o) {
  auto ctx = make_context(o);
  ctx.cfg.train.regime = "nlu_pretrain";
  const auto inv = slu::tag_inventory(ctx.grammar);
  slu::NluModel model(ctx.cfg.nlu, ctx.vocab.size(), static_cast<int>(ctx.grammar.intents.size()),
                      inv.size(), slu::child_seed(ctx.cfg.seed, "model.nlu"));
  auto rec = slu::pretrain_nlu(ctx, model);
  write_run(o, ctx, rec);
  slu::save_checkpoint(o.out_dir + "/nlu.ckpt.json", model.params(), ctx.vocab.hash());
  std::cout << "train-nlu: " << ctx.cfg.train.steps << " steps, dev ic "
            << slu::format_double(rec.final_metrics.ic_accuracy) << ", span f1 "
            << slu::format_double(rec.final_metrics.span_f1) << "\n";
  return 0;
}

int cmd_train_e2e(const CommonOpts& o, const std::string& init_asr, const std::string& init_nlu) {
  auto ctx = make_context(o);
  if (ctx.cfg.train.regime != "e2e" && ctx.cfg.train.regime != "e2e_multitask")
    ctx.cfg.train.regime = "e2e";
  const auto inv = slu::tag_inventory(ctx.grammar);
  slu::AsrModel asr(ctx.cfg.asr, ctx.vocab.size(), slu::child_seed(ctx.cfg.seed, "model.asr"));
  slu::NluModel nlu(ctx.cfg.nlu, ctx.vocab.size(), static_cast<int>(ctx.grammar.intents.size()),
                    inv.size(), slu::child_seed(ctx.cfg.seed, "model.nlu"));
  if (!init_asr.empty()) slu::load_checkpoint(init_asr, asr.params(), ctx.vocab.hash());
  if (!init_nlu.empty()) slu::load_checkpoint(init_nlu, nlu.params(), ctx.vocab.hash());
  auto rec = slu::train_e2e(ctx, asr, nlu);
  write_run(o, ctx, rec);
  slu::save_checkpoint(o.out_dir + "/asr.ckpt.json", asr.params(), ctx.vocab.hash());
  slu::save_checkpoint(o.out_dir + "/nlu.ckpt.json", nlu.params(), ctx.vocab.hash());
  std::cout << "train-e2e: " << ctx.cfg.train.steps << " steps, dev ic "
            << slu::format_double(rec.final_metrics.ic_accuracy) << ", slu f1 "
            << slu::format_double(rec.final_metrics.slu_f1) << ", wer "
            << slu::format_double(rec.final_metrics.wer) << "\n";
  return 0;
}

// Top-5 token probabilities per Z row, one JSON object per example.
void dump_z(const slu::TrainContext& ctx, const slu::AsrModel& asr, slu::InterfaceMode mode,
            const std::vector<slu::UtteranceExample>& set, const std::string& path) {
  std::ofstream out(path);
  const auto inv = slu::tag_inventory(ctx.grammar);
  for (const auto& ex : set) {
    const auto sup = slu::supervision_for(ex, ctx.vocab, inv);
    auto feats = slu::synthesize_features(sup.transcript_ids, ctx.vocab.size(), *ex.acoustic_seed,
                                          *ex.noise_level, ctx.cfg.data.acoustic);
    slu::Graph g;
    auto res = asr.decode_greedy(asr.encode(g, feats), asr.config().max_decode_len);
    slu::TokenDistSeq z = mode == slu::InterfaceMode::kContinuous
                              ? slu::continuous_interface(g, res.logits)
                              : slu::discrete_interface(res.logits);
    json rows = json::array();
    for (int t = 0; t < z.length(); ++t) {
      std::vector<int> order(ctx.vocab.size());
      for (int j = 0; j < ctx.vocab.size(); ++j) order[j] = j;
      std::partial_sort(order.begin(), order.begin() + std::min(5, ctx.vocab.size()), order.end(),
                        [&](int a, int b) {
                          const double pa = z.z->at(t, a), pb = z.z->at(t, b);
                          return pa != pb ? pa > pb : a < b;
                        });
      json top = json::array();
      for (int r = 0; r < std::min(5, ctx.vocab.size()); ++r)
        top.push_back({{"token", ctx.vocab.token(order[r])}, {"p", z.z->at(t, order[r])}});
      rows.push_back(top);
    }
    out << json{{"id", ex.id}, {"hypothesis", ctx.vocab.decode(res.ids)}, {"z_top5", rows}}.dump()
        << "\n";
  }
}

int cmd_compose_eval(const CommonOpts& o, const std::string& asr_ckpt, const std::string& nlu_ckpt,
                     const std::string& interface_name, const std::string& z_dump_path,
                     bool dump_examples) {
  auto ctx = make_context(o);
  const auto inv = slu::tag_inventory(ctx.grammar);
  slu::AsrModel asr(ctx.cfg.asr, ctx.vocab.size(), slu::child_seed(ctx.cfg.seed, "model.asr"));
  slu::NluModel nlu(ctx.cfg.nlu, ctx.vocab.size(), static_cast<int>(ctx.grammar.intents.size()),
                    inv.size(), slu::child_seed(ctx.cfg.seed, "model.nlu"));
  slu::load_checkpoint(asr_ckpt, asr.params(), ctx.vocab.hash());
  slu::load_checkpoint(nlu_ckpt, nlu.params(), ctx.vocab.hash());
  const auto mode = interface_name == "discrete" ? slu::InterfaceMode::kDiscrete
                                                 : slu::InterfaceMode::kContinuous;
  auto eval_set = test_split(o, ctx);
  std::vector<std::string> per_example;
  auto rep = slu::compose_inference(ctx, asr, nlu, mode, eval_set,
                                    dump_examples ? &per_example : nullptr);
  fs::create_directories(o.out_dir);
  std::ofstream(o.out_dir + "/metrics.json") << rep.to_json() << "\n";
  if (dump_examples) {
    std::ofstream out(o.out_dir + "/examples.jsonl");
    for (const auto& l : per_example) out << l << "\n";
  }
  if (!z_dump_path.empty()) dump_z(ctx, asr, mode, eval_set, z_dump_path);
  std::cout << "compose-eval (" << interface_name << "): ic "
            << slu::format_double(rep.ic_accuracy) << ", slu f1 "
            << slu::format_double(rep.slu_f1) << ", wer " << slu::format_double(rep.wer) << " over "
            << rep.example_count << " examples\n";
  return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& nlu_ckpt) {
  auto ctx = make_context(o);
  const auto inv = slu::tag_inventory(ctx.grammar);
  slu::NluModel nlu(ctx.cfg.nlu, ctx.vocab.size(), static_cast<int>(ctx.grammar.intents.size()),
                    inv.size(), slu::child_seed(ctx.cfg.seed, "model.nlu"));
  slu::load_checkpoint(nlu_ckpt, nlu.params(), ctx.vocab.hash());
  auto rep = slu::eval_nlu_gold(ctx, nlu, test_split(o, ctx));
  fs::create_directories(o.out_dir);
  std::ofstream(o.out_dir + "/metrics.json") << rep.to_json() << "\n";
  std::cout << "eval (gold text): ic " << slu::format_double(rep.ic_accuracy) << ", slu f1 "
            << slu::format_double(rep.slu_f1) << " over " << rep.example_count << " examples\n";
  return 0;
}

int cmd_gradcheck(const std::string& target, int trials, double tol, std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : slu::run_op_gradchecks(target, trials, tol, seed)) {
    ok = ok && r.pass();
    std::cout << (r.pass() ? "PASS" : "FAIL") << " " << r.name << " max_err "
              << slu::format_double(r.max_err) << " tol " << slu::format_double(r.tolerance)
              << "\n";
  }
  if (target == "all" || target == "full_model") {
    auto r = slu::run_full_model_gradcheck(tol, 6, seed);
    ok = ok && r.pass();
    std::cout << (r.pass() ? "PASS" : "FAIL") << " " << r.name << " max_err "
              << slu::format_double(r.max_err) << " tol " << slu::format_double(r.tolerance)
              << "\n";
  }
  return ok ? 0 : 2;
}

int cmd_oracle_check(int trials, std::uint64_t seed) {
  bool ok = true;
  json checks = json::array();
  for (const auto& r : slu::run_oracle_checks(trials, seed)) {
    ok = ok && r.pass;
    json c{{"name", r.name}, {"pass", r.pass}};
    if (!r.detail.empty()) c["detail"] = r.detail;
    checks.push_back(c);
  }
  std::cout << json{{"pass", ok}, {"checks", checks}}.dump() << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable speech-to-understanding pipeline"};
  app.require_subcommand(1);

  CommonOpts gen_o, asr_o, nlu_o, e2e_o, comp_o, eval_o;
  std::string init_asr, init_nlu, asr_ckpt, nlu_ckpt, iface = "continuous", z_dump, nlu_only_ckpt;
  bool dump_examples = false;
  std::string gc_target = "all";
  int gc_trials = 25, oc_trials = 1000;
  double gc_tol = 1e-4;
  std::uint64_t check_seed = 42;

  add_common(app.add_subcommand("gen-data", "generate and split a synthetic corpus"), gen_o);
  add_common(app.add_subcommand("train-asr", "pretrain the ASR model"), asr_o);
  add_common(app.add_subcommand("train-nlu", "pretrain the NLU model on gold text"), nlu_o);
  auto* e2e = app.add_subcommand("train-e2e", "end-to-end training through the interface");
  add_common(e2e, e2e_o);
  e2e->add_option("--init-asr", init_asr, "ASR checkpoint to start from");
  e2e->add_option("--init-nlu", init_nlu, "NLU checkpoint to start from");
  auto* comp = app.add_subcommand("compose-eval", "greedy ASR -> interface -> NLU on the test set");
  add_common(comp, comp_o);
  comp->add_option("--asr-checkpoint", asr_ckpt)->required();
  comp->add_option("--nlu-checkpoint", nlu_ckpt)->required();
  comp->add_option("--interface", iface)->check(CLI::IsMember({"continuous", "discrete"}));
  comp->add_option("--dump-z", z_dump, "write top-5 token distributions per position (JSONL)");
  comp->add_flag("--dump-examples", dump_examples, "write per-example predictions");
  auto* ev = app.add_subcommand("eval", "NLU on gold transcripts (text-input baseline)");
  add_common(ev, eval_o);
  ev->add_option("--nlu-checkpoint", nlu_only_ckpt)->required();
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_option("--target", gc_target, "op name, full_model, or all");
  gc->add_option("--trials", gc_trials);
  gc->add_option("--tol", gc_tol);
  gc->add_option("--seed", check_seed);
  auto* oc = app.add_subcommand("oracle-check", "CRF enumeration and interface-degeneracy oracles");
  oc->add_option("--trials", oc_trials);
  oc->add_option("--seed", check_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("gen-data")) return cmd_gen_data(gen_o);
    if (app.got_subcommand("train-asr")) return cmd_train_asr(asr_o);
    if (app.got_subcommand("train-nlu")) return cmd_train_nlu(nlu_o);
    if (app.got_subcommand("train-e2e")) return cmd_train_e2e(e2e_o, init_asr, init_nlu);
    if (app.got_subcommand("compose-eval"))
      return cmd_compose_eval(comp_o, asr_ckpt, nlu_ckpt, iface, z_dump, dump_examples);
    if (app.got_subcommand("eval")) return cmd_eval(eval_o, nlu_only_ckpt);
    if (app.got_subcommand("gradcheck"))
      return cmd_gradcheck(gc_target, gc_trials, gc_tol, check_seed);
    if (app.got_subcommand("oracle-check")) return cmd_oracle_check(oc_trials, check_seed);
  } catch (const slu::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
