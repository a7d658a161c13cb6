#include "slu/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace slu {

namespace {
const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>", "<mask>"};
}

std::string Vocabulary::lowercase(const std::string& text) {
  std::string out = text;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> Vocabulary::split_words(const std::string& text) {
  std::istringstream in(lowercase(text));
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int min_count) {
  if (corpus.empty()) throw ConfigError("vocabulary build: empty corpus");
  if (min_count < 0) throw ConfigError("vocabulary build: negative min_count");
  std::map<std::string, long> counts;
  for (const auto& line : corpus)
    for (const auto& w : split_words(line)) ++counts[w];
  std::vector<std::pair<std::string, long>> kept(counts.begin(), counts.end());
  std::erase_if(kept, [&](const auto& kv) { return kv.second < min_count; });
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens = kSpecials;
  for (const auto& [w, _] : kept) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecials ||
      !std::equal(kSpecials.begin(), kSpecials.end(), tokens.begin()))
    throw ConfigError("vocabulary: specials must occupy ids 0-4");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
    if (!v.to_id_.emplace(v.tokens_[i], i).second)
      throw ConfigError("vocabulary: duplicate token '" + v.tokens_[i] + "'");
  }
  return v;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw IndexError("vocabulary: id " + std::to_string(id) + " out of range [0," +
                     std::to_string(size()) + ")");
  return tokens_[id];
}

int Vocabulary::id(const std::string& token) const {
  auto it = to_id_.find(token);
  return it == to_id_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) {
    if (i == kPad || i == kBos || i == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\x1f", h);
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  nlohmann::json j = tokens_;
  std::ofstream out(path);
  if (!out) throw ConfigError("vocabulary: cannot write " + path);
  out << j.dump(1) << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("vocabulary: cannot read " + path);
  nlohmann::json j;
  in >> j;
  return from_tokens(j.get<std::vector<std::string>>());
}

}  // namespace slu
