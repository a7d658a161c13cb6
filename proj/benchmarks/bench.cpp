#include <benchmark/benchmark.h>

#include "slu/crf.hpp"
#include "slu/losses.hpp"
#include "slu/model.hpp"
#include "slu/ops.hpp"

using namespace slu;

namespace {

TensorPtr random_matrix(int r, int c, Rng& rng, bool grad = false) {
  auto t = make_tensor({r, c}, grad);
  for (auto& v : t->v) v = rng.gaussian();
  return t;
}

void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  auto a = random_matrix(n, n, rng);
  auto b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(matmul(g, a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n) * n * n);
}
BENCHMARK(BM_matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_crf_forward(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  Rng rng(2);
  auto em = random_matrix(t, k, rng);
  auto p = CrfParams::create(k, false);
  for (auto& v : p.transitions->v) v = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(crf_log_partition(em, p));
}
BENCHMARK(BM_crf_forward)->Args({8, 13})->Args({16, 13})->Args({32, 13});

void BM_crf_brute_force(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  Rng rng(3);
  auto em = random_matrix(t, k, rng);
  auto p = CrfParams::create(k, false);
  for (auto _ : state) benchmark::DoNotOptimize(crf_brute_force_log_partition(em, p));
}
BENCHMARK(BM_crf_brute_force)->Args({5, 5})->Args({6, 5});

void BM_crf_loss_backward(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), k = 13;
  Rng rng(4);
  auto p = CrfParams::create(k, true);
  std::vector<int> tags(t);
  for (auto& x : tags) x = rng.uniform_int(k);
  for (auto _ : state) {
    Graph g;
    auto em = random_matrix(t, k, rng, true);
    auto nll = scale(g, crf_log_likelihood(g, em, tags, p), -1.0);
    g.backward(nll);
    benchmark::DoNotOptimize(em->grad);
  }
}
BENCHMARK(BM_crf_loss_backward)->Arg(8)->Arg(16);

void BM_nlu_forward(benchmark::State& state) {
  NluConfig cfg;
  cfg.d = 64;
  cfg.n_layers = 2;
  cfg.heads = 4;
  NluModel model(cfg, 150, 8, 13, 7);
  std::vector<int> ids;
  Rng rng(5);
  for (int i = 0; i < 10; ++i) ids.push_back(Vocabulary::kNumSpecials + rng.uniform_int(100));
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(model.forward(g, gold_interface(ids, 150)));
  }
}
BENCHMARK(BM_nlu_forward);

void BM_e2e_step(benchmark::State& state) {
  AsrConfig acfg;
  acfg.d_feat = 32;
  acfg.d = 64;
  acfg.n_enc = 2;
  acfg.n_dec = 2;
  acfg.heads = 4;
  acfg.max_decode_len = 32;
  NluConfig ncfg;
  ncfg.d = 64;
  ncfg.n_layers = 2;
  ncfg.heads = 4;
  AsrModel asr(acfg, 150, 8);
  NluModel nlu(ncfg, 150, 8, 13, 9);
  Rng rng(6);
  ExampleSupervision sup;
  sup.intent = 3;
  for (int i = 0; i < 10; ++i)
    sup.transcript_ids.push_back(Vocabulary::kNumSpecials + rng.uniform_int(100));
  sup.tags.assign(10, 0);
  auto feats = random_matrix(40, 32, rng);
  for (auto _ : state) {
    Graph g;
    auto enc = asr.encode(g, feats);
    auto logits = asr.decode_teacher_forced(g, enc, sup.transcript_ids);
    BundleInputs in;
    in.asr = asr_loss(g, logits, sup.transcript_ids);
    auto z = continuous_interface(g, slice_rows(g, logits, 0, 10));
    auto out = nlu.forward(g, z);
    auto l = slu_loss(g, out, sup, nlu.crf());
    in.s2i = l.s2i;
    in.s2k = l.s2k;
    in.s2v = l.s2v;
    auto bundle = total_loss(g, in, LossWeights{});
    g.backward(bundle.total);
    benchmark::DoNotOptimize(bundle.total->v[0]);
  }
}
BENCHMARK(BM_e2e_step);

}  // namespace
