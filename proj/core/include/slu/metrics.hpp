#pragma once

#include <map>
#include <string>
#include <vector>

#include "slu/common.hpp"

namespace slu {

// (S + D + I) / |ref| via uniform-cost Levenshtein alignment; may exceed 1.
double wer(const std::vector<int>& ref, const std::vector<int>& hyp);

struct PredictedSlot {
  int slot_type = 0;
  std::string value;
  int start = 0;  // hypothesis token coordinates
  int end = 0;
};

struct GoldSlot {
  int slot_type = 0;
  std::string value;
};

enum class F1Variant { kSpan, kWord, kChar };

struct PrecisionRecallF1 {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Micro-averaged accumulator. Span variant: correct iff type and normalized
// value both match a distinct gold slot. Word/char variants: type-matched
// pairs earn fractional credit equal to the bag-of-words / bag-of-characters
// overlap F1 of the value texts.
class SlotF1Accumulator {
 public:
  explicit SlotF1Accumulator(F1Variant variant) : variant_(variant) {}
  void add_example(const std::vector<GoldSlot>& gold, const std::vector<PredictedSlot>& predicted);
  PrecisionRecallF1 result() const;

 private:
  F1Variant variant_;
  double tp_ = 0.0;
  double n_pred_ = 0.0, n_gold_ = 0.0;
};

PrecisionRecallF1 slot_f1(const std::vector<std::vector<GoldSlot>>& gold,
                          const std::vector<std::vector<PredictedSlot>>& predicted,
                          F1Variant variant);

double ic_accuracy(const std::vector<int>& gold_intents, const std::vector<int>& predicted_intents);

struct MetricsReport {
  double wer = 0.0;
  double ic_accuracy = 0.0;
  double span_f1 = 0.0, word_f1 = 0.0, char_f1 = 0.0;
  double slu_f1 = 0.0;  // mean of the three variants
  std::map<std::string, long> intent_confusion;  // "gold->pred" -> count
  long example_count = 0;

  std::string to_json() const;
};

std::string normalize_value(const std::string& text);  // lowercase, collapse whitespace

}  // namespace slu
