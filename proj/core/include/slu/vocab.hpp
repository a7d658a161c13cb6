#pragma once

#include <map>
#include <string>
#include <vector>

#include "slu/common.hpp"

namespace slu {

// Single shared token inventory for the ASR output side and the NLU input
// side. Specials occupy fixed ids in every vocabulary.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecials = 5;

  // Word-level build: whitespace split, lowercased, count >= min_count,
  // ordered by (descending count, lexicographic) after the specials.
  static Vocabulary build(const std::vector<std::string>& corpus, int min_count = 1);

  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  int id(const std::string& token) const;  // UNK when absent
  bool contains(const std::string& token) const { return to_id_.count(token) > 0; }

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;  // skips PAD/BOS/EOS

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::uint64_t hash() const;

  void save(const std::string& path) const;  // JSON array, index = id
  static Vocabulary load(const std::string& path);

  static std::vector<std::string> split_words(const std::string& text);
  static std::string lowercase(const std::string& text);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> to_id_;
};

}  // namespace slu
