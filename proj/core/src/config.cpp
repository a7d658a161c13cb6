#include "slu/config.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace slu {

namespace {

using nlohmann::json;

json to_json_obj(const Config& c) {
  json j;
  j["seed"] = c.seed;
  j["data"] = {{"n_examples", c.data.n_examples},
               {"noise_level", c.data.noise_level},
               {"ratios", c.data.ratios},
               {"min_count", c.data.min_count},
               {"k", c.data.acoustic.k},
               {"d_feat", c.data.acoustic.d_feat},
               {"codebook_seed", c.data.acoustic.codebook_seed}};
  j["asr"] = {{"d", c.asr.d},
              {"n_enc", c.asr.n_enc},
              {"n_dec", c.asr.n_dec},
              {"heads", c.asr.heads},
              {"max_decode_len", c.asr.max_decode_len}};
  j["nlu"] = {{"d", c.nlu.d}, {"n_layers", c.nlu.n_layers}, {"heads", c.nlu.heads}};
  j["train"] = {{"regime", c.train.regime},
                {"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.adam.lr},
                {"beta1", c.train.adam.beta1},
                {"beta2", c.train.adam.beta2},
                {"eps", c.train.adam.eps},
                {"mask_prob", c.train.mask_prob},
                {"dropout", c.train.dropout},
                {"weights",
                 {{"s2i", c.train.weights.s2i},
                  {"s2k", c.train.weights.s2k},
                  {"s2v", c.train.weights.s2v},
                  {"t2i", c.train.weights.t2i},
                  {"t2k", c.train.weights.t2k},
                  {"t2v", c.train.weights.t2v},
                  {"asr", c.train.weights.asr}}},
                {"mix_ratios", c.train.mix_ratios},
                {"e2e_decode_mode", c.train.e2e_decode_mode},
                {"freeze", c.train.freeze},
                {"eval_interval", c.train.eval_interval},
                {"mlm_steps", c.train.mlm_steps}};
  return j;
}

Config from_json_obj(const json& j) {
  Config c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.data.n_examples = d.value("n_examples", c.data.n_examples);
    c.data.noise_level = d.value("noise_level", c.data.noise_level);
    c.data.ratios = d.value("ratios", c.data.ratios);
    c.data.min_count = d.value("min_count", c.data.min_count);
    c.data.acoustic.k = d.value("k", c.data.acoustic.k);
    c.data.acoustic.d_feat = d.value("d_feat", c.data.acoustic.d_feat);
    c.data.acoustic.codebook_seed = d.value("codebook_seed", c.data.acoustic.codebook_seed);
  }
  if (j.contains("asr")) {
    const auto& a = j["asr"];
    c.asr.d = a.value("d", c.asr.d);
    c.asr.n_enc = a.value("n_enc", c.asr.n_enc);
    c.asr.n_dec = a.value("n_dec", c.asr.n_dec);
    c.asr.heads = a.value("heads", c.asr.heads);
    c.asr.max_decode_len = a.value("max_decode_len", c.asr.max_decode_len);
  }
  c.asr.d_feat = c.data.acoustic.d_feat;
  if (j.contains("nlu")) {
    const auto& n = j["nlu"];
    c.nlu.d = n.value("d", c.nlu.d);
    c.nlu.n_layers = n.value("n_layers", c.nlu.n_layers);
    c.nlu.heads = n.value("heads", c.nlu.heads);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    c.train.regime = t.value("regime", c.train.regime);
    c.train.steps = t.value("steps", c.train.steps);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.adam.lr = t.value("lr", c.train.adam.lr);
    c.train.adam.beta1 = t.value("beta1", c.train.adam.beta1);
    c.train.adam.beta2 = t.value("beta2", c.train.adam.beta2);
    c.train.adam.eps = t.value("eps", c.train.adam.eps);
    c.train.mask_prob = t.value("mask_prob", c.train.mask_prob);
    c.train.dropout = t.value("dropout", c.train.dropout);
    if (t.contains("weights")) {
      const auto& w = t["weights"];
      c.train.weights.s2i = w.value("s2i", 1.0);
      c.train.weights.s2k = w.value("s2k", 1.0);
      c.train.weights.s2v = w.value("s2v", 1.0);
      c.train.weights.t2i = w.value("t2i", 1.0);
      c.train.weights.t2k = w.value("t2k", 1.0);
      c.train.weights.t2v = w.value("t2v", 1.0);
      c.train.weights.asr = w.value("asr", 1.0);
    }
    c.train.mix_ratios = t.value("mix_ratios", c.train.mix_ratios);
    c.train.e2e_decode_mode = t.value("e2e_decode_mode", c.train.e2e_decode_mode);
    c.train.freeze = t.value("freeze", c.train.freeze);
    c.train.eval_interval = t.value("eval_interval", c.train.eval_interval);
    c.train.mlm_steps = t.value("mlm_steps", c.train.mlm_steps);
  }
  return c;
}

}  // namespace

void Config::validate() const {
  if (train.steps <= 0) throw ConfigError("config: train.steps must be positive");
  if (train.batch_size <= 0) throw ConfigError("config: train.batch_size must be positive");
  if (train.mask_prob < 0.0 || train.mask_prob > 1.0)
    throw ConfigError("config: train.mask_prob outside [0,1]");
  static const std::vector<std::string> kRegimes = {"asr_pretrain", "nlu_pretrain", "e2e",
                                                    "e2e_multitask"};
  if (std::find(kRegimes.begin(), kRegimes.end(), train.regime) == kRegimes.end())
    throw ConfigError("config: unknown regime '" + train.regime + "'");
  if (train.e2e_decode_mode != "teacher_forced" && train.e2e_decode_mode != "greedy")
    throw ConfigError("config: unknown e2e_decode_mode '" + train.e2e_decode_mode + "'");
  if (data.n_examples < 0) throw ConfigError("config: data.n_examples negative");
  if (data.ratios.size() != 3) throw ConfigError("config: data.ratios must have 3 entries");
  double rs = 0;
  for (double r : data.ratios) {
    if (r <= 0) throw ConfigError("config: split ratios must be positive");
    rs += r;
  }
  if (std::abs(rs - 1.0) > 1e-9) throw ConfigError("config: split ratios must sum to 1");
  if (train.mix_ratios.size() != 3) throw ConfigError("config: train.mix_ratios must have 3 entries");
  double ms = 0;
  for (double r : train.mix_ratios) {
    if (r < 0) throw ConfigError("config: mix ratios must be nonnegative");
    ms += r;
  }
  if (std::abs(ms - 1.0) > 1e-9) throw ConfigError("config: mix ratios must sum to 1");
  if (asr.d % asr.heads != 0 || nlu.d % nlu.heads != 0)
    throw ConfigError("config: model dim must be divisible by head count");
}

std::string Config::to_json() const { return to_json_obj(*this).dump(1); }

Config Config::from_json(const std::string& text) {
  Config c = from_json_obj(json::parse(text));
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

void Config::apply_overrides(const std::vector<std::string>& overrides) {
  json j = to_json_obj(*this);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + kv + "' is not of the form key=value");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const json::parse_error&) {
      parsed = val;  // bare string
    }
    json* node = &j;
    std::size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
      if (!node->is_object() || !node->contains(part))
        throw ConfigError("override key '" + key + "' does not name a config field");
      if (dot == std::string::npos) {
        (*node)[part] = parsed;
        break;
      }
      node = &(*node)[part];
      pos = dot + 1;
    }
  }
  *this = from_json_obj(j);
  validate();
}

}  // namespace slu
