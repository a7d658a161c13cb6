#pragma once

#include <string>
#include <vector>

#include "slu/data.hpp"

namespace slu {

// IOB tag codec over the inventory {O} ∪ {B-s, I-s}. Tag ids: O = 0,
// B-s = 1 + 2s, I-s = 2 + 2s for slot type s, so the inventory size is
// 1 + 2 * n_slot_types.
struct TagInventory {
  int n_slot_types = 0;

  int size() const { return 1 + 2 * n_slot_types; }
  static constexpr int kOutside = 0;
  int begin_tag(int slot_type) const { return 1 + 2 * slot_type; }
  int inside_tag(int slot_type) const { return 2 + 2 * slot_type; }
  // -1 for O.
  static int slot_type_of(int tag) { return tag == 0 ? -1 : (tag - 1) / 2; }
  static bool is_begin(int tag) { return tag > 0 && tag % 2 == 1; }
  static bool is_inside(int tag) { return tag > 0 && tag % 2 == 0; }
  std::string name(int tag, const GrammarConfig& grammar) const;
};

struct SlotSpan {
  int slot_type = 0;
  int start = 0;  // half-open token indices
  int end = 0;
  friend bool operator==(const SlotSpan&, const SlotSpan&) = default;
};

// B-s at each span start, I-s inside, O elsewhere. Overlapping spans are an
// annotation error naming the colliding spans.
std::vector<int> spans_to_tags(int transcript_len, const std::vector<SlotSpan>& spans,
                               const TagInventory& inv);

// Total on arbitrary tag sequences; an orphan I-s with no live B-s/I-s run
// before it starts a new span (treated as B-s).
std::vector<SlotSpan> tags_to_spans(const std::vector<int>& tags, const TagInventory& inv);

inline std::vector<SlotSpan> annotation_spans(const std::vector<SlotAnnotation>& slots) {
  std::vector<SlotSpan> out;
  for (const auto& s : slots) out.push_back({s.slot_type, s.start_token, s.end_token});
  return out;
}

}  // namespace slu
