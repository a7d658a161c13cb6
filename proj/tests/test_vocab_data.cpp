#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "slu/data.hpp"
#include "slu/iob.hpp"
#include "slu/vocab.hpp"

using namespace slu;

TEST_CASE("vocabulary build counts words plus the five specials") {
  auto v = Vocabulary::build({"turn on the light"}, 1);
  CHECK(v.size() == 9);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kMask) == "<mask>");
}

TEST_CASE("words below min_count map to UNK") {
  auto v = Vocabulary::build({"alpha alpha beta"}, 2);
  CHECK(v.contains("alpha"));
  CHECK_FALSE(v.contains("beta"));
  auto ids = v.encode("beta");
  CHECK(ids == std::vector<int>{Vocabulary::kUnk});
}

TEST_CASE("vocabulary build is deterministic") {
  const std::vector<std::string> corpus = {"play the song", "play that song now"};
  auto a = Vocabulary::build(corpus, 1);
  auto b = Vocabulary::build(corpus, 1);
  CHECK(a.tokens() == b.tokens());
  CHECK(a.hash() == b.hash());
}

TEST_CASE("empty corpus rejected") {
  CHECK_THROWS_AS(Vocabulary::build({}, 1), ConfigError);
}

TEST_CASE("encode casefolds; decode round-trips; OOV becomes UNK") {
  auto v = Vocabulary::build({"turn on the light"}, 1);
  CHECK(v.encode("Turn ON the light") == v.encode("turn on the light"));
  CHECK(v.decode(v.encode("the light")) == "the light");
  for (int id : v.encode("zebra quux")) CHECK(id == Vocabulary::kUnk);
  // Specials never come out of plain-text encode.
  for (int id : v.encode("turn on the light")) CHECK(id >= Vocabulary::kNumSpecials);
}

TEST_CASE("vocabulary save/load round trip") {
  auto v = Vocabulary::build({"set an alarm"}, 1);
  const std::string path = "/tmp/slu_test_vocab.json";
  v.save(path);
  auto loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == v.tokens());
  CHECK(loaded.hash() == v.hash());
  std::filesystem::remove(path);
}

TEST_CASE("default grammar meets the floor: 8 intents, 6 slot types, 40+ templates") {
  auto g = default_grammar();
  CHECK(g.intents.size() == 8);
  CHECK(g.slot_types.size() == 6);
  int templates = 0;
  for (const auto& in : g.intents) templates += static_cast<int>(in.templates.size());
  CHECK(templates >= 40);
  g.validate();
}

TEST_CASE("generated slot spans reproduce their value text exactly") {
  auto grammar = default_grammar();
  auto corpus = generate_corpus(grammar, {200, 0.3, 7});
  CHECK(corpus.size() == 200);
  for (const auto& ex : corpus) {
    REQUIRE(ex.transcript.has_value());
    auto words = Vocabulary::split_words(*ex.transcript);
    for (const auto& s : *ex.slots) {
      std::string joined;
      for (int t = s.start_token; t < s.end_token; ++t) {
        if (!joined.empty()) joined += " ";
        joined += words[static_cast<std::size_t>(t)];
      }
      CHECK(joined == s.value);
    }
  }
}

TEST_CASE("generate_corpus determinism and empty case") {
  auto grammar = default_grammar();
  CHECK(generate_corpus(grammar, {0, 0.3, 1}).empty());
  auto a = generate_corpus(grammar, {50, 0.3, 11});
  auto b = generate_corpus(grammar, {50, 0.3, 11});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].transcript == b[i].transcript);
    CHECK(a[i].intent == b[i].intent);
    CHECK(a[i].acoustic_seed == b[i].acoustic_seed);
  }
}

TEST_CASE("noiseless features are exactly prototypes repeated k times") {
  AcousticConfig cfg;
  cfg.k = 3;
  cfg.d_feat = 8;
  auto f = synthesize_features({7, 9}, 20, 555, 0.0, cfg);
  REQUIRE(f->shape == std::vector<int>{6, 8});
  auto p7 = token_prototype(7, cfg);
  auto p9 = token_prototype(9, cfg);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 8; ++c) CHECK(f->at(r, c) == p7->v[static_cast<std::size_t>(c)]);
  for (int r = 3; r < 6; ++r)
    for (int c = 0; c < 8; ++c) CHECK(f->at(r, c) == p9->v[static_cast<std::size_t>(c)]);
  // Distinct tokens own distinct prototypes.
  bool same = true;
  for (int c = 0; c < 8; ++c) same = same && p7->v[c] == p9->v[c];
  CHECK_FALSE(same);
}

TEST_CASE("feature synthesis validates k and d_feat") {
  AcousticConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(synthesize_features({1}, 10, 1, 0.1, cfg), ConfigError);
  cfg.k = 1;
  cfg.d_feat = 4;
  CHECK_THROWS_AS(synthesize_features({1}, 10, 1, 0.1, cfg), ConfigError);
}

TEST_CASE("noisy frame sample mean concentrates on the prototype") {
  // Monte Carlo against the CLT bound: mean of 1e4 draws per coordinate is
  // within 3*sigma/100 of the prototype.
  AcousticConfig cfg;
  cfg.k = 1;
  cfg.d_feat = 8;
  const double noise = 0.5;
  const int n = 10000;
  auto proto = token_prototype(6, cfg);
  std::vector<double> mean(8, 0.0);
  for (int i = 0; i < n; ++i) {
    auto f = synthesize_features({6}, 20, 1000 + static_cast<std::uint64_t>(i), noise, cfg);
    for (int c = 0; c < 8; ++c) mean[c] += f->at(0, c);
  }
  for (int c = 0; c < 8; ++c) {
    mean[c] /= n;
    CHECK(std::abs(mean[c] - proto->v[c]) < 3.0 * noise / 100.0);
  }
}

TEST_CASE("average frame-prototype cosine similarity decreases with noise") {
  AcousticConfig cfg;
  cfg.k = 2;
  cfg.d_feat = 16;
  const std::vector<double> levels = {0.0, 0.3, 0.6, 1.0, 2.0};
  std::vector<double> sims;
  for (double noise : levels) {
    double acc = 0;
    int count = 0;
    for (int tok = 5; tok < 25; ++tok) {
      auto proto = token_prototype(tok, cfg);
      for (std::uint64_t s = 0; s < 20; ++s) {
        auto f = synthesize_features({tok}, 30, 90000 + s * 131 + tok, noise, cfg);
        for (int r = 0; r < cfg.k; ++r) {
          double dot = 0, nf = 0, np = 0;
          for (int c = 0; c < cfg.d_feat; ++c) {
            dot += f->at(r, c) * proto->v[c];
            nf += f->at(r, c) * f->at(r, c);
            np += proto->v[c] * proto->v[c];
          }
          acc += dot / std::sqrt(nf * np);
          ++count;
        }
      }
    }
    sims.push_back(acc / count);
  }
  for (std::size_t i = 1; i < sims.size(); ++i) CHECK(sims[i] < sims[i - 1]);
}

TEST_CASE("split is exact, disjoint, exhaustive, deterministic") {
  auto grammar = default_grammar();
  auto corpus = generate_corpus(grammar, {100, 0.3, 3});
  auto s = split_corpus(corpus, {0.8, 0.1, 0.1}, 17);
  CHECK(s.train.size() == 80);
  CHECK(s.dev.size() == 10);
  CHECK(s.test.size() == 10);
  std::set<long> ids;
  for (const auto* part : {&s.train, &s.dev, &s.test})
    for (const auto& ex : *part) ids.insert(ex.id);
  CHECK(ids.size() == corpus.size());
  auto s2 = split_corpus(corpus, {0.8, 0.1, 0.1}, 17);
  CHECK(s2.train.size() == s.train.size());
  for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s2.train[i].id == s.train[i].id);
}

TEST_CASE("jsonl round trip preserves examples") {
  auto grammar = default_grammar();
  auto corpus = generate_corpus(grammar, {20, 0.3, 5});
  const std::string path = "/tmp/slu_test_corpus.jsonl";
  save_jsonl(corpus, path);
  auto loaded = load_jsonl(path);
  REQUIRE(loaded.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(loaded[i].id == corpus[i].id);
    CHECK(loaded[i].transcript == corpus[i].transcript);
    CHECK(loaded[i].intent == corpus[i].intent);
    CHECK(loaded[i].acoustic_seed == corpus[i].acoustic_seed);
    CHECK(loaded[i].noise_level == corpus[i].noise_level);
    REQUIRE(loaded[i].slots.has_value());
    CHECK(loaded[i].slots->size() == corpus[i].slots->size());
  }
  std::filesystem::remove(path);
}

TEST_CASE("stream views drop exactly the fields their task lacks") {
  auto grammar = default_grammar();
  auto corpus = generate_corpus(grammar, {10, 0.3, 2});
  for (const auto& ex : asr_stream(corpus)) {
    CHECK(ex.transcript.has_value());
    CHECK(ex.acoustic_seed.has_value());
    CHECK_FALSE(ex.intent.has_value());
    CHECK_FALSE(ex.slots.has_value());
  }
  for (const auto& ex : nlu_stream(corpus)) {
    CHECK(ex.transcript.has_value());
    CHECK(ex.intent.has_value());
    CHECK_FALSE(ex.acoustic_seed.has_value());
    ex.validate();
  }
}

TEST_CASE("example validation enforces the stream invariants") {
  UtteranceExample ex;
  CHECK_THROWS_AS(ex.validate(), AnnotationError);  // neither transcript nor intent
  ex.intent = 1;
  ex.slots = std::vector<SlotAnnotation>{{0, "x", 0, 1}};
  CHECK_THROWS_AS(ex.validate(), AnnotationError);  // slots without transcript
  ex.slots.reset();
  ex.acoustic_seed = 5;
  CHECK_THROWS_AS(ex.validate(), AnnotationError);  // features without transcript
  ex.transcript = "hello there";
  ex.noise_level = 0.1;
  ex.validate();
}
