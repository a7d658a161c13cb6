#include <doctest.h>

#include <cmath>

#include "slu/gradcheck.hpp"
#include "slu/ops.hpp"
#include "slu/verification.hpp"

using namespace slu;

namespace {

TensorPtr tensor_of(std::vector<int> shape, std::vector<double> v, bool rg = false) {
  auto t = make_tensor(std::move(shape), rg);
  t->v = std::move(v);
  return t;
}

}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
  Graph g;
  auto id = tensor_of({2, 2}, {1, 0, 0, 1});
  auto m = tensor_of({2, 2}, {3, -1, 2, 5});
  auto out = matmul(g, id, m);
  for (int i = 0; i < 4; ++i) CHECK(out->v[i] == m->v[i]);

  auto a = tensor_of({1, 2}, {1, 2});
  auto b = tensor_of({2, 1}, {3, 4});
  CHECK(matmul(g, a, b)->v[0] == doctest::Approx(11.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Graph g;
  auto a = tensor_of({2, 3}, std::vector<double>(6, 0.0));
  auto b = tensor_of({2, 2}, std::vector<double>(4, 0.0));
  CHECK_THROWS_AS(matmul(g, a, b), ShapeError);
}

TEST_CASE("softmax symmetry, stability, row sums") {
  Graph g;
  auto out = softmax_rows(g, tensor_of({1, 2}, {0, 0}));
  CHECK(out->v[0] == doctest::Approx(0.5));
  CHECK(out->v[1] == doctest::Approx(0.5));

  auto big = softmax_rows(g, tensor_of({1, 2}, {1000, 0}));
  CHECK(std::isfinite(big->v[0]));
  CHECK(big->v[0] == doctest::Approx(1.0));
  CHECK(big->v[1] == doctest::Approx(0.0));

  Rng rng(3);
  auto x = make_tensor({4, 7});
  for (auto& v : x->v) v = 6.0 * rng.gaussian();
  auto sm = softmax_rows(g, x);
  for (int r = 0; r < 4; ++r) {
    double s = 0;
    for (int c = 0; c < 7; ++c) {
      const double p = sm->at(r, c);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      s += p;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("cross_entropy analytic values") {
  Graph g;
  // Uniform logits, C=4 -> ln 4.
  auto u = tensor_of({1, 4}, {0, 0, 0, 0});
  CHECK(cross_entropy(g, u, {2})->v[0] == doctest::Approx(std::log(4.0)));
  // Huge aligned margin -> ~0.
  auto peaked = tensor_of({1, 3}, {50, 0, 0});
  CHECK(cross_entropy(g, peaked, {0})->v[0] == doctest::Approx(0.0).epsilon(1e-12));
  // Out-of-range target.
  CHECK_THROWS_AS(cross_entropy(g, peaked, {3}), IndexError);
}

TEST_CASE("cross_entropy with all positions ignored is 0 with zero gradient") {
  Graph g;
  auto logits = tensor_of({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto loss = cross_entropy(g, logits, {-1, -1}, -1);
  CHECK(loss->v[0] == 0.0);
  g.backward(loss);
  for (double gv : logits->grad) CHECK(gv == 0.0);
}

TEST_CASE("dropout p=0 is the identity") {
  Graph g;
  Rng rng(1);
  auto x = tensor_of({2, 3}, {1, 2, 3, 4, 5, 6});
  auto out = dropout(g, x, 0.0, true, rng);
  for (int i = 0; i < 6; ++i) CHECK(out->v[i] == x->v[i]);
}

TEST_CASE("layer_norm of a constant row is zero before affine") {
  Graph g;
  auto x = tensor_of({1, 4}, {3, 3, 3, 3});
  auto gain = tensor_of({4}, {1, 1, 1, 1});
  auto bias = tensor_of({4}, {0, 0, 0, 0});
  auto out = layer_norm(g, x, gain, bias);
  for (double v : out->v) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("attention with a single key returns that value row") {
  Graph g;
  auto q = tensor_of({2, 3}, {1, 0, 2, -1, 4, 0});
  auto k = tensor_of({1, 3}, {0.3, -0.2, 0.9});
  auto v = tensor_of({1, 3}, {7, 8, 9});
  auto out = attention(g, q, k, v, false);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(out->at(r, c) == doctest::Approx(v->v[c]));
}

TEST_CASE("grad_check on f(x)=sum(x^2)") {
  ParamMap params;
  params["x"] = tensor_of({2}, {1, 2}, true);
  auto rep = grad_check(
      [&](Graph& g) { return sum(g, mul(g, params.at("x"), params.at("x"))); }, params);
  CHECK(rep.max_err < 1e-8);
  // Analytic gradient from one more backward.
  Graph g;
  auto loss = sum(g, mul(g, params.at("x"), params.at("x")));
  g.backward(loss);
  CHECK(params.at("x")->grad[0] == doctest::Approx(2.0));
  CHECK(params.at("x")->grad[1] == doctest::Approx(4.0));
}

TEST_CASE("grad_check on a constant function reports zero gradient") {
  ParamMap params;
  params["x"] = tensor_of({3}, {1, 2, 3}, true);
  auto rep = grad_check([&](Graph& g) { return scale(g, sum(g, params.at("x")), 0.0); }, params);
  CHECK(rep.max_err < 1e-10);
}

TEST_CASE("per-op finite-difference checks on randomized inputs") {
  // The spec-level property: 100 trials per op, rel. err < 1e-4. Trimmed to 20
  // trials here; the CLI gradcheck and acceptance suite run the full count.
  for (const auto& r : run_op_gradchecks("all", 20)) {
    INFO(r.name);
    CHECK(r.max_err < r.tolerance);
  }
}

TEST_CASE("backward on finite inputs yields finite gradients") {
  Rng rng(9);
  ParamMap params;
  params["a"] = make_tensor({4, 4}, true);
  for (auto& v : params["a"]->v) v = rng.gaussian();
  Graph g;
  auto out = softmax_rows(g, matmul(g, params["a"], params["a"]));
  auto loss = sum(g, mul(g, out, out));
  g.backward(loss);
  for (double gv : params["a"]->grad) CHECK(std::isfinite(gv));
}

TEST_CASE("identical seeds give bit-identical losses") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    auto x = make_tensor({3, 3}, true);
    for (auto& v : x->v) v = rng.gaussian();
    Graph g;
    Rng drop(child_seed(seed, "drop"));
    auto loss = sum(g, dropout(g, softmax_rows(g, x), 0.4, true, drop));
    return loss->v[0];
  };
  CHECK(run(123) == run(123));
}
