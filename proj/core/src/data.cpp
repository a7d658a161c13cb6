#include "slu/data.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace slu {

void UtteranceExample::validate() const {
  if (!transcript && !intent)
    throw AnnotationError("example " + std::to_string(id) + ": needs transcript or intent");
  if (slots && !transcript)
    throw AnnotationError("example " + std::to_string(id) + ": slots without transcript");
  if (acoustic_seed && !transcript)
    throw AnnotationError("example " + std::to_string(id) + ": acoustic seed without transcript");
  if (slots) {
    const int len = static_cast<int>(Vocabulary::split_words(*transcript).size());
    for (const auto& s : *slots) {
      if (s.start_token < 0 || s.start_token >= s.end_token || s.end_token > len)
        throw AnnotationError("example " + std::to_string(id) + ": bad slot span [" +
                              std::to_string(s.start_token) + "," + std::to_string(s.end_token) +
                              ") for length " + std::to_string(len));
    }
  }
}

int GrammarConfig::slot_type_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(slot_types.size()); ++i)
    if (slot_types[i].name == name) return i;
  throw ConfigError("grammar: unknown slot type '" + name + "'");
}

void GrammarConfig::validate() const {
  if (intents.size() < 5) throw ConfigError("grammar: need at least 5 intents");
  if (slot_types.size() < 4) throw ConfigError("grammar: need at least 4 slot types");
  for (const auto& it : intents)
    if (it.templates.empty())
      throw ConfigError("grammar: intent '" + it.name + "' has no templates");
  for (const auto& st : slot_types)
    if (st.values.empty()) throw ConfigError("grammar: slot type '" + st.name + "' has no values");
}

GrammarConfig default_grammar() {
  GrammarConfig g;
  g.slot_types = {
      {"time",
       {"nine am", "ten am", "six pm", "seven thirty pm", "noon", "midnight", "five fifteen am",
        "eight oclock", "quarter past two", "half past four"}},
      {"date",
       {"today", "tomorrow", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
        "sunday", "next week"}},
      {"device",
       {"kitchen light", "bedroom lamp", "heater", "television", "coffee machine", "fan",
        "living room speaker", "porch light"}},
      {"location", {"paris", "london", "tokyo", "berlin", "seoul", "madrid", "oslo", "cairo"}},
      {"contact", {"alice", "bob", "carol", "david", "emma", "frank", "grace", "henry"}},
      {"song",
       {"bohemian rhapsody", "yellow submarine", "purple rain", "thunder road", "lucky star",
        "golden hour", "silver lining", "blue monday"}},
  };
  g.intents = {
      {"set_alarm",
       {"set an alarm for {time}", "wake me up at {time}", "set alarm at {time} {date}",
        "i need an alarm at {time}", "create an alarm for {date} at {time}"}},
      {"set_reminder",
       {"remind me at {time}", "give me a reminder at {time} {date}",
        "set the reminder to go off at {time}", "i want a reminder {date} at {time}",
        "schedule a reminder for {time}"}},
      {"play_music",
       {"play {song}", "play {song} on the {device}", "put on {song}", "i want to hear {song}",
        "queue {song} please", "start playing {song}"}},
      {"weather_query",
       {"what is the weather in {location}", "will it rain in {location} {date}",
        "weather forecast for {location}", "how hot is it in {location}",
        "tell me the weather for {date} in {location}"}},
      {"device_on",
       {"turn on the {device}", "switch on the {device}", "power up the {device}",
        "activate the {device}", "could you turn on the {device}"}},
      {"device_off",
       {"turn off the {device}", "switch off the {device}", "power down the {device}",
        "deactivate the {device}", "shut off the {device}"}},
      {"send_message",
       {"send a message to {contact}", "text {contact} that i am late",
        "tell {contact} i will call back", "message {contact} now", "write to {contact}"}},
      {"calendar_add",
       {"add a meeting with {contact} on {date}", "schedule an event for {date} at {time}",
        "put lunch with {contact} on my calendar for {date}", "create an appointment on {date}",
        "book a meeting at {time} on {date}"}},
  };
  return g;
}

std::vector<UtteranceExample> generate_corpus(const GrammarConfig& grammar,
                                              const CorpusParams& params) {
  grammar.validate();
  Rng rng(child_seed(params.seed, "corpus"));
  std::vector<UtteranceExample> out;
  out.reserve(params.n_examples);
  for (int n = 0; n < params.n_examples; ++n) {
    const int intent = rng.uniform_int(static_cast<int>(grammar.intents.size()));
    const auto& intent_cfg = grammar.intents[intent];
    const auto& tmpl =
        intent_cfg.templates[rng.uniform_int(static_cast<int>(intent_cfg.templates.size()))];

    UtteranceExample ex;
    ex.id = n;
    ex.intent = intent;
    ex.slots = std::vector<SlotAnnotation>{};
    ex.noise_level = params.noise_level;
    ex.acoustic_seed = rng.next_u64();

    std::vector<std::string> tokens;
    std::istringstream in(tmpl);
    std::string word;
    while (in >> word) {
      if (word.size() >= 3 && word.front() == '{' && word.back() == '}') {
        const std::string slot_name = word.substr(1, word.size() - 2);
        const int st = grammar.slot_type_index(slot_name);
        const auto& lex = grammar.slot_types[st].values;
        const std::string& value = lex[rng.uniform_int(static_cast<int>(lex.size()))];
        SlotAnnotation ann;
        ann.slot_type = st;
        ann.value = value;
        ann.start_token = static_cast<int>(tokens.size());
        for (const auto& vw : Vocabulary::split_words(value)) tokens.push_back(vw);
        ann.end_token = static_cast<int>(tokens.size());
        ex.slots->push_back(ann);
      } else {
        tokens.push_back(word);
      }
    }
    std::string transcript;
    for (const auto& t : tokens) {
      if (!transcript.empty()) transcript += ' ';
      transcript += t;
    }
    ex.transcript = transcript;
    ex.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

TensorPtr token_prototype(int token_id, const AcousticConfig& cfg) {
  Rng rng(child_seed(cfg.codebook_seed, "proto." + std::to_string(token_id)));
  auto p = make_tensor({1, cfg.d_feat});
  for (int j = 0; j < cfg.d_feat; ++j) p->v[j] = rng.gaussian();
  return p;
}

TensorPtr synthesize_features(const std::vector<int>& transcript_ids, int vocab_size,
                              std::uint64_t acoustic_seed, double noise_level,
                              const AcousticConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("acoustic config: k must be >= 1");
  if (cfg.d_feat < 8) throw ConfigError("acoustic config: d_feat must be >= 8");
  if (noise_level < 0) throw ConfigError("acoustic config: negative noise level");
  const int t = static_cast<int>(transcript_ids.size());
  auto out = make_tensor({t * cfg.k, cfg.d_feat});
  Rng noise(child_seed(acoustic_seed, "frame_noise"));
  for (int i = 0; i < t; ++i) {
    const int id = transcript_ids[i];
    if (id < 0 || id >= vocab_size)
      throw IndexError("synthesize_features: token id " + std::to_string(id) + " out of range");
    auto proto = token_prototype(id, cfg);
    for (int r = 0; r < cfg.k; ++r) {
      double* frame = out->v.data() + (static_cast<std::size_t>(i) * cfg.k + r) * cfg.d_feat;
      for (int j = 0; j < cfg.d_feat; ++j)
        frame[j] = proto->v[j] + (noise_level > 0 ? noise_level * noise.gaussian() : 0.0);
    }
  }
  return out;
}

CorpusSplits split_corpus(const std::vector<UtteranceExample>& corpus,
                          const std::vector<double>& ratios, std::uint64_t seed) {
  if (ratios.empty()) throw ConfigError("split: no ratios");
  double total = 0.0;
  for (double r : ratios) {
    if (r <= 0) throw ConfigError("split: ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");
  if (ratios.size() != 3) throw ConfigError("split: expected train/dev/test ratios");

  const std::size_t n = corpus.size();
  // Global totals by largest remainder, then a stratified greedy fill that
  // always sends the next example to the split with the most unmet quota
  // relative to its ratio.
  std::vector<std::size_t> want(3);
  std::vector<std::pair<double, int>> frac;
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    double exact = ratios[s] * n;
    want[s] = static_cast<std::size_t>(exact);
    assigned += want[s];
    frac.push_back({exact - want[s], s});
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++want[frac[i % 3].second];

  // Group by intent (missing intent -> one shared group), shuffle each group.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[corpus[i].intent.value_or(-1)].push_back(i);
  Rng rng(child_seed(seed, "split"));
  CorpusSplits out;
  std::vector<std::size_t> remaining = want;
  std::vector<std::vector<UtteranceExample>*> dst = {&out.train, &out.dev, &out.test};
  for (auto& [intent, idxs] : groups) {
    for (std::size_t i = idxs.size(); i > 1; --i)
      std::swap(idxs[i - 1], idxs[rng.uniform_int(static_cast<int>(i))]);
    for (std::size_t idx : idxs) {
      int best = -1;
      double best_need = -1.0;
      for (int s = 0; s < 3; ++s) {
        if (remaining[s] == 0) continue;
        double need = remaining[s] / ratios[s];
        if (need > best_need) {
          best_need = need;
          best = s;
        }
      }
      dst[best]->push_back(corpus[idx]);
      --remaining[best];
    }
  }
  // Warn (not fail) when a split misses an intent entirely.
  for (int s = 0; s < 3; ++s) {
    for (const auto& [intent, idxs] : groups) {
      if (intent < 0) continue;
      bool found = false;
      for (const auto& ex : *dst[s])
        if (ex.intent == intent) found = true;
      if (!found)
        std::cerr << "warning: split " << s << " has no examples of intent " << intent << "\n";
    }
  }
  return out;
}

namespace {

nlohmann::json example_to_json(const UtteranceExample& ex) {
  nlohmann::json j;
  j["id"] = ex.id;
  if (ex.transcript) j["transcript"] = *ex.transcript;
  if (ex.intent) j["intent"] = *ex.intent;
  if (ex.slots) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : *ex.slots)
      arr.push_back({{"type", s.slot_type},
                     {"value", s.value},
                     {"start_token", s.start_token},
                     {"end_token", s.end_token}});
    j["slots"] = arr;
  }
  if (ex.acoustic_seed) j["acoustic_seed"] = *ex.acoustic_seed;
  if (ex.noise_level) j["noise_level"] = *ex.noise_level;
  return j;
}

UtteranceExample example_from_json(const nlohmann::json& j) {
  UtteranceExample ex;
  ex.id = j.at("id").get<long>();
  if (j.contains("transcript")) ex.transcript = j["transcript"].get<std::string>();
  if (j.contains("intent")) ex.intent = j["intent"].get<int>();
  if (j.contains("slots")) {
    std::vector<SlotAnnotation> slots;
    for (const auto& s : j["slots"]) {
      SlotAnnotation a;
      a.slot_type = s.at("type").get<int>();
      a.value = s.at("value").get<std::string>();
      a.start_token = s.at("start_token").get<int>();
      a.end_token = s.at("end_token").get<int>();
      slots.push_back(a);
    }
    ex.slots = std::move(slots);
  }
  if (j.contains("acoustic_seed")) ex.acoustic_seed = j["acoustic_seed"].get<std::uint64_t>();
  if (j.contains("noise_level")) ex.noise_level = j["noise_level"].get<double>();
  ex.validate();
  return ex;
}

}  // namespace

void save_jsonl(const std::vector<UtteranceExample>& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& ex : corpus) out << example_to_json(ex).dump() << "\n";
}

std::vector<UtteranceExample> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<UtteranceExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(example_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::vector<UtteranceExample> asr_stream(const std::vector<UtteranceExample>& corpus) {
  std::vector<UtteranceExample> out;
  for (auto ex : corpus) {
    if (!ex.transcript || !ex.acoustic_seed) continue;
    ex.intent.reset();
    ex.slots.reset();
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<UtteranceExample> nlu_stream(const std::vector<UtteranceExample>& corpus) {
  std::vector<UtteranceExample> out;
  for (auto ex : corpus) {
    if (!ex.transcript || !ex.intent) continue;
    ex.acoustic_seed.reset();
    ex.noise_level.reset();
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace slu
