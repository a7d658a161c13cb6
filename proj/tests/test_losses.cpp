#include <doctest.h>

#include <cmath>

#include "slu/losses.hpp"
#include "slu/vocab.hpp"

using namespace slu;

namespace {

NluConfig tiny_nlu() {
  NluConfig c;
  c.d = 16;
  c.n_layers = 1;
  c.heads = 2;
  return c;
}

ExampleSupervision example(int t, int intent, int vocab) {
  ExampleSupervision sup;
  sup.intent = intent;
  for (int i = 0; i < t; ++i) sup.transcript_ids.push_back(Vocabulary::kNumSpecials + i % (vocab - Vocabulary::kNumSpecials));
  sup.tags.assign(t, 0);
  return sup;
}

}  // namespace

TEST_CASE("untrained intent logits give s2i near ln(8)") {
  double acc = 0;
  const int seeds = 8;
  for (int s = 0; s < seeds; ++s) {
    NluModel model(tiny_nlu(), 20, 8, 3, 100 + s);
    auto sup = example(4, s % 8, 20);
    Graph g;
    auto out = model.forward(g, gold_interface(sup.transcript_ids, 20));
    auto l = slu_loss(g, out, sup, model.crf());
    acc += l.s2i->v[0];
  }
  CHECK(std::abs(acc / seeds - std::log(8.0)) < 0.3);
}

TEST_CASE("perfect slot-value logits saturate s2v below 0.01") {
  Graph g;
  ExampleSupervision sup = example(3, 1, 10);
  NluOutput out;
  out.intent_logits = make_tensor({1, 8});
  out.intent_logits->v[sup.intent] = 20.0;
  out.slot_emissions = make_tensor({3, 3});
  out.slot_value_logits = make_tensor({3, 10});
  for (int t = 0; t < 3; ++t) out.slot_value_logits->at(t, sup.transcript_ids[t]) = 20.0;
  auto crf = CrfParams::create(3, false);
  auto l = slu_loss(g, out, sup, crf);
  CHECK(l.s2v->v[0] < 0.01);
  CHECK(l.s2i->v[0] < 0.01);
}

TEST_CASE("s2k saturates to 0 when the gold path dominates by emission gap 30") {
  Graph g;
  ExampleSupervision sup;
  sup.intent = 0;
  sup.transcript_ids = {5, 6, 7};
  sup.tags = {1, 2, 0};
  NluOutput out;
  out.intent_logits = make_tensor({1, 2});
  out.slot_emissions = make_tensor({3, 3});
  for (int t = 0; t < 3; ++t) out.slot_emissions->at(t, sup.tags[t]) = 30.0;
  out.slot_value_logits = make_tensor({3, 10});
  auto crf = CrfParams::create(3, false);
  auto l = slu_loss(g, out, sup, crf);
  CHECK(l.s2k->v[0] == doctest::Approx(0.0).epsilon(1e-9));
  // Agreement with the enumeration oracle: -ll == logZ - score.
  CHECK(l.s2k->v[0] ==
        doctest::Approx(crf_brute_force_log_partition(out.slot_emissions, crf) -
                        crf_path_score(out.slot_emissions, sup.tags, crf)));
}

TEST_CASE("slu_loss rejects misaligned Z") {
  NluModel model(tiny_nlu(), 20, 8, 3, 1);
  auto sup = example(4, 2, 20);
  Graph g;
  auto out = model.forward(g, gold_interface({5, 6}, 20));  // T=2 vs gold T=4
  CHECK_THROWS_AS(slu_loss(g, out, sup, model.crf()), AlignmentError);
}

TEST_CASE("nlu_task_loss masking edge cases and determinism") {
  NluModel model(tiny_nlu(), 20, 8, 3, 2);
  auto sup = example(5, 3, 20);

  Graph g0;
  Rng none(7);
  auto l0 = nlu_task_loss(g0, model, sup, 0.0, none);
  CHECK_FALSE(l0.t2v);  // no masked positions -> no t2v term

  Graph g1;
  Rng all(7);
  auto l1 = nlu_task_loss(g1, model, sup, 1.0, all);
  REQUIRE(l1.t2v);
  CHECK(l1.t2v->v[0] > 0.0);

  Graph ga, gb;
  Rng ra(42), rb(42);
  auto la = nlu_task_loss(ga, model, sup, 0.5, ra);
  auto lb = nlu_task_loss(gb, model, sup, 0.5, rb);
  CHECK(la.t2i->v[0] == lb.t2i->v[0]);
  CHECK(la.t2k->v[0] == lb.t2k->v[0]);
  CHECK(static_cast<bool>(la.t2v) == static_cast<bool>(lb.t2v));
  if (la.t2v) CHECK(la.t2v->v[0] == lb.t2v->v[0]);
}

TEST_CASE("special tokens are never masked") {
  NluModel model(tiny_nlu(), 20, 8, 3, 2);
  ExampleSupervision sup;
  sup.intent = 1;
  sup.transcript_ids = {Vocabulary::kUnk, 7, Vocabulary::kUnk};
  sup.tags = {0, 0, 0};
  // mask_prob=1 masks only the non-special position, so t2v is a single-term
  // cross-entropy, finite and positive.
  Graph g;
  Rng rng(3);
  auto l = nlu_task_loss(g, model, sup, 1.0, rng);
  REQUIRE(l.t2v);
  CHECK(std::isfinite(l.t2v->v[0]));
}

TEST_CASE("asr_loss analytic values and alignment guard") {
  Graph g;
  // Uniform logits over V=150 -> ln 150 per position.
  auto logits = make_tensor({3, 150});
  auto l = asr_loss(g, logits, {10, 11});
  CHECK(l->v[0] == doctest::Approx(std::log(150.0)));

  auto perfect = make_tensor({2, 10});
  perfect->at(0, 7) = 30.0;
  perfect->at(1, Vocabulary::kEos) = 30.0;
  CHECK(asr_loss(g, perfect, {7})->v[0] == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(asr_loss(g, logits, {1, 2, 3}), AlignmentError);
}

TEST_CASE("total_loss is the weighted component sum") {
  Graph g;
  BundleInputs in;
  in.s2i = make_scalar(1.0, true);
  in.t2k = make_scalar(2.0, true);
  in.asr = make_scalar(3.0, true);
  auto b = total_loss(g, in, LossWeights{});
  CHECK(b.total->v[0] == doctest::Approx(6.0).epsilon(1e-15));

  LossWeights w;
  w.s2i = 0.5;
  w.t2k = 2.0;
  auto wb = total_loss(g, in, w);
  CHECK(wb.total->v[0] == doctest::Approx(0.5 * 1.0 + 2.0 * 2.0 + 3.0).epsilon(1e-15));

  BundleInputs one;
  one.t2i = make_scalar(1.25, true);
  CHECK(total_loss(g, one, LossWeights{}).total->v[0] == 1.25);

  BundleInputs empty;
  CHECK_THROWS_AS(total_loss(g, empty, LossWeights{}), StreamError);
}

TEST_CASE("zero weight removes a component's gradient") {
  Graph g;
  auto a = make_scalar(2.0, true);
  auto b = make_scalar(3.0, true);
  BundleInputs in;
  in.s2i = mul(g, a, a);
  in.asr = mul(g, b, b);
  LossWeights w;
  w.s2i = 0.0;
  auto bundle = total_loss(g, in, w);
  g.backward(bundle.total);
  CHECK(a->grad[0] == 0.0);
  CHECK(b->grad[0] == doctest::Approx(6.0));
}

TEST_CASE("loss bundle components are nonnegative") {
  NluModel model(tiny_nlu(), 20, 8, 3, 11);
  auto sup = example(4, 5, 20);
  Graph g;
  auto out = model.forward(g, gold_interface(sup.transcript_ids, 20));
  auto l = slu_loss(g, out, sup, model.crf());
  CHECK(l.s2i->v[0] >= 0.0);
  CHECK(l.s2k->v[0] >= 0.0);
  CHECK(l.s2v->v[0] >= 0.0);
}
