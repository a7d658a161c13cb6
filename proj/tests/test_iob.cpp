#include <doctest.h>

#include "slu/iob.hpp"

using namespace slu;

namespace {
const TagInventory inv{2};  // slot types 0 and 1: tags O=0, B0=1, I0=2, B1=3, I1=4
}

TEST_CASE("tag id layout") {
  CHECK(inv.size() == 5);
  CHECK(TagInventory::kOutside == 0);
  CHECK(inv.begin_tag(0) == 1);
  CHECK(inv.inside_tag(0) == 2);
  CHECK(inv.begin_tag(1) == 3);
  CHECK(inv.inside_tag(1) == 4);
  CHECK(TagInventory::slot_type_of(0) == -1);
  CHECK(TagInventory::slot_type_of(3) == 1);
  CHECK(TagInventory::is_begin(3));
  CHECK(TagInventory::is_inside(4));
}

TEST_CASE("spans_to_tags basic cases") {
  CHECK(spans_to_tags(5, {{0, 3, 5}}, inv) == std::vector<int>{0, 0, 0, 1, 2});
  CHECK(spans_to_tags(3, {}, inv) == std::vector<int>{0, 0, 0});
  // Adjacent same-type spans: B restarts.
  CHECK(spans_to_tags(3, {{0, 1, 2}, {0, 2, 3}}, inv) == std::vector<int>{0, 1, 1});
}

TEST_CASE("overlapping spans raise an annotation error") {
  CHECK_THROWS_AS(spans_to_tags(4, {{0, 0, 2}, {1, 1, 3}}, inv), AnnotationError);
}

TEST_CASE("tags_to_spans decodes runs and repairs orphan I") {
  CHECK(tags_to_spans({0, 1, 2}, inv) == std::vector<SlotSpan>{{0, 1, 3}});
  // Orphan I-s starts a new span.
  CHECK(tags_to_spans({2, 0}, inv) == std::vector<SlotSpan>{{0, 0, 1}});
  // Type change mid-run splits.
  CHECK(tags_to_spans({1, 4}, inv) == std::vector<SlotSpan>{{0, 0, 1}, {1, 1, 2}});
  CHECK(tags_to_spans({}, inv).empty());
}

TEST_CASE("round trip identity on random valid span sets") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int len = 1 + rng.uniform_int(12);
    std::vector<SlotSpan> spans;
    int cursor = 0;
    while (cursor < len) {
      if (rng.uniform() < 0.4) {
        const int width = 1 + rng.uniform_int(std::min(3, len - cursor));
        spans.push_back({rng.uniform_int(inv.n_slot_types), cursor, cursor + width});
        cursor += width;
        ++cursor;  // gap so adjacent same-type spans stay distinguishable
      } else {
        ++cursor;
      }
    }
    auto tags = spans_to_tags(len, spans, inv);
    CHECK(tags_to_spans(tags, inv) == spans);
  }
}

TEST_CASE("tags_to_spans is total on arbitrary tag sequences") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int len = rng.uniform_int(10);
    std::vector<int> tags(len);
    for (auto& t : tags) t = rng.uniform_int(inv.size());
    auto spans = tags_to_spans(tags, inv);  // must not throw
    for (const auto& s : spans) {
      CHECK(s.start < s.end);
      CHECK(s.end <= len);
    }
  }
}
