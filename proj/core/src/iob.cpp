#include "slu/iob.hpp"

#include <algorithm>

namespace slu {

std::string TagInventory::name(int tag, const GrammarConfig& grammar) const {
  if (tag == kOutside) return "O";
  const int st = slot_type_of(tag);
  return (is_begin(tag) ? "B-" : "I-") + grammar.slot_types.at(st).name;
}

std::vector<int> spans_to_tags(int transcript_len, const std::vector<SlotSpan>& spans,
                               const TagInventory& inv) {
  std::vector<int> tags(transcript_len, TagInventory::kOutside);
  std::vector<int> owner(transcript_len, -1);
  for (int si = 0; si < static_cast<int>(spans.size()); ++si) {
    const auto& s = spans[si];
    if (s.start < 0 || s.start >= s.end || s.end > transcript_len)
      throw AnnotationError("spans_to_tags: span [" + std::to_string(s.start) + "," +
                            std::to_string(s.end) + ") out of bounds for length " +
                            std::to_string(transcript_len));
    if (s.slot_type < 0 || s.slot_type >= inv.n_slot_types)
      throw AnnotationError("spans_to_tags: slot type " + std::to_string(s.slot_type) +
                            " outside inventory");
    for (int t = s.start; t < s.end; ++t) {
      if (owner[t] >= 0) {
        const auto& o = spans[owner[t]];
        throw AnnotationError("spans_to_tags: overlapping spans [" + std::to_string(o.start) +
                              "," + std::to_string(o.end) + ") and [" + std::to_string(s.start) +
                              "," + std::to_string(s.end) + ")");
      }
      owner[t] = si;
      tags[t] = t == s.start ? inv.begin_tag(s.slot_type) : inv.inside_tag(s.slot_type);
    }
  }
  return tags;
}

std::vector<SlotSpan> tags_to_spans(const std::vector<int>& tags, const TagInventory& inv) {
  std::vector<SlotSpan> out;
  int cur_type = -1;
  int cur_start = -1;
  auto close = [&](int end) {
    if (cur_type >= 0) out.push_back({cur_type, cur_start, end});
    cur_type = -1;
  };
  for (int t = 0; t < static_cast<int>(tags.size()); ++t) {
    const int tag = tags[t];
    if (tag <= 0 || tag >= inv.size()) {
      close(t);
      continue;
    }
    const int st = TagInventory::slot_type_of(tag);
    if (TagInventory::is_begin(tag)) {
      close(t);
      cur_type = st;
      cur_start = t;
    } else {  // inside
      if (cur_type == st) continue;  // extends the live run
      close(t);  // orphan I (or type switch): repair as a new span start
      cur_type = st;
      cur_start = t;
    }
  }
  close(static_cast<int>(tags.size()));
  return out;
}

}  // namespace slu
