#include "slu/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

namespace slu {

double wer(const std::vector<int>& ref, const std::vector<int>& hyp) {
  if (ref.empty()) throw EvaluationError("wer: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(n);
}

std::string normalize_value(const std::string& text) {
  std::string out;
  bool in_space = true;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

std::map<std::string, long> word_bag(const std::string& text) {
  std::map<std::string, long> bag;
  std::istringstream in(text);
  std::string w;
  while (in >> w) ++bag[w];
  return bag;
}

std::map<std::string, long> char_bag(const std::string& text) {
  std::map<std::string, long> bag;
  for (char c : text)
    if (c != ' ') ++bag[std::string(1, c)];
  return bag;
}

double bag_f1(const std::map<std::string, long>& a, const std::map<std::string, long>& b) {
  long overlap = 0, na = 0, nb = 0;
  for (const auto& [k, v] : a) na += v;
  for (const auto& [k, v] : b) nb += v;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it != b.end()) overlap += std::min(v, it->second);
  }
  if (na == 0 || nb == 0) return 0.0;
  const double p = static_cast<double>(overlap) / nb;  // nb = predicted size
  const double r = static_cast<double>(overlap) / na;  // na = gold size
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

// Credit for one (gold, predicted) pair under a variant, in [0,1].
double pair_credit(const GoldSlot& gold, const PredictedSlot& pred, F1Variant variant) {
  const std::string gv = normalize_value(gold.value);
  const std::string pv = normalize_value(pred.value);
  switch (variant) {
    case F1Variant::kSpan:
      return gv == pv ? 1.0 : 0.0;
    case F1Variant::kWord:
      return bag_f1(word_bag(gv), word_bag(pv));
    case F1Variant::kChar:
      return bag_f1(char_bag(gv), char_bag(pv));
  }
  return 0.0;
}

}  // namespace

void SlotF1Accumulator::add_example(const std::vector<GoldSlot>& gold,
                                    const std::vector<PredictedSlot>& predicted) {
  n_pred_ += static_cast<double>(predicted.size());
  n_gold_ += static_cast<double>(gold.size());
  std::vector<PredictedSlot> preds = predicted;
  std::sort(preds.begin(), preds.end(),
            [](const PredictedSlot& a, const PredictedSlot& b) { return a.start < b.start; });
  std::vector<bool> consumed(gold.size(), false);
  for (const auto& p : preds) {
    int best = -1;
    double best_credit = 0.0;
    for (std::size_t gi = 0; gi < gold.size(); ++gi) {
      if (consumed[gi] || gold[gi].slot_type != p.slot_type) continue;
      const double c = pair_credit(gold[gi], p, variant_);
      if (c > best_credit) {
        best_credit = c;
        best = static_cast<int>(gi);
      }
    }
    if (best >= 0) {
      consumed[best] = true;
      tp_ += best_credit;
    }
  }
}

PrecisionRecallF1 SlotF1Accumulator::result() const {
  PrecisionRecallF1 out;
  if (n_pred_ == 0 && n_gold_ == 0) {
    out.precision = out.recall = out.f1 = 1.0;  // vacuous
    return out;
  }
  out.precision = n_pred_ > 0 ? tp_ / n_pred_ : 0.0;
  out.recall = n_gold_ > 0 ? tp_ / n_gold_ : 0.0;
  out.f1 = out.precision + out.recall > 0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

PrecisionRecallF1 slot_f1(const std::vector<std::vector<GoldSlot>>& gold,
                          const std::vector<std::vector<PredictedSlot>>& predicted,
                          F1Variant variant) {
  if (gold.size() != predicted.size())
    throw EvaluationError("slot_f1: gold/predicted example counts differ");
  SlotF1Accumulator acc(variant);
  for (std::size_t i = 0; i < gold.size(); ++i) acc.add_example(gold[i], predicted[i]);
  return acc.result();
}

double ic_accuracy(const std::vector<int>& gold_intents,
                   const std::vector<int>& predicted_intents) {
  if (gold_intents.size() != predicted_intents.size())
    throw EvaluationError("ic_accuracy: length mismatch, " + std::to_string(gold_intents.size()) +
                          " gold vs " + std::to_string(predicted_intents.size()) + " predicted");
  if (gold_intents.empty()) throw EvaluationError("ic_accuracy: empty evaluation set");
  long correct = 0;
  for (std::size_t i = 0; i < gold_intents.size(); ++i)
    if (gold_intents[i] == predicted_intents[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(gold_intents.size());
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["wer"] = wer;
  j["ic_accuracy"] = ic_accuracy;
  j["span_f1"] = span_f1;
  j["word_f1"] = word_f1;
  j["char_f1"] = char_f1;
  j["slu_f1"] = slu_f1;
  j["example_count"] = example_count;
  j["intent_confusion"] = intent_confusion;
  return j.dump(1);
}

}  // namespace slu
