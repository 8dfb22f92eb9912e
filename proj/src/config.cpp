#include "s2f/config.hpp"

#include <fstream>
#include <functional>

#include "s2f/errors.hpp"

namespace s2f {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& expected, const json& v) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got " + v.dump());
}

void read(const std::string& key, const json& v, std::size_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::size_t>();
  } else if (v.is_number_integer() && v.get<long long>() >= 0) {
    out = static_cast<std::size_t>(v.get<long long>());
  } else {
    bad(key, "a non-negative integer", v);
  }
}

static_assert(std::is_same_v<std::uint64_t, unsigned long> == std::is_same_v<std::size_t, unsigned long>,
              "seed and size settings share one reader");

void read(const std::string& key, const json& v, int& out) {
  if (!v.is_number_integer()) bad(key, "an integer", v);
  out = v.get<int>();
}

void read(const std::string& key, const json& v, double& out) {
  if (!v.is_number()) bad(key, "a number", v);
  out = v.get<double>();
}

void read(const std::string& key, const json& v, bool& out) {
  if (!v.is_boolean()) bad(key, "true or false", v);
  out = v.get<bool>();
}

void read(const std::string& key, const json& v, std::string& out) {
  if (!v.is_string()) bad(key, "a string", v);
  out = v.get<std::string>();
}

void read(const std::string& key, const json& v, std::vector<std::size_t>& out) {
  if (!v.is_array()) bad(key, "an array of integers", v);
  std::vector<std::size_t> tmp;
  for (const json& item : v) {
    std::size_t x = 0;
    read(key, item, x);
    tmp.push_back(x);
  }
  out = std::move(tmp);
}

std::string activation_name(nn::Activation a) {
  switch (a) {
    case nn::Activation::kIdentity: return "identity";
    case nn::Activation::kRelu: return "relu";
    case nn::Activation::kTanh: return "tanh";
    case nn::Activation::kGelu: return "gelu";
  }
  return "relu";
}

void read(const std::string& key, const json& v, nn::Activation& out) {
  std::string name;
  read(key, v, name);
  if (name == "identity") out = nn::Activation::kIdentity;
  else if (name == "relu") out = nn::Activation::kRelu;
  else if (name == "tanh") out = nn::Activation::kTanh;
  else if (name == "gelu") out = nn::Activation::kGelu;
  else bad(key, "identity, relu, tanh or gelu", v);
}

void read(const std::string& key, const json& v, TrainMode& out) {
  std::string name;
  read(key, v, name);
  try {
    out = parse_train_mode(name);
  } catch (const ConfigError&) {
    bad(key, "nested or discontinuous", v);
  }
}

json write(nn::Activation a) { return activation_name(a); }
json write(TrainMode m) { return to_string(m); }
template <typename T>
json write(const T& v) {
  return json(v);
}

struct Setting {
  std::string key;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

#define S2F_SETTING(name, member)                                                          \
  Setting {                                                                                \
    name, [](const RunConfig& c) { return write(c.member); },                              \
        [](RunConfig& c, const json& v) { read(name, v, c.member); }                       \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      S2F_SETTING("encoder.char_dim", model.encoder.char_dim),
      S2F_SETTING("encoder.position_dim", model.encoder.position_dim),
      S2F_SETTING("encoder.char_kernels", model.encoder.char_kernels),
      S2F_SETTING("encoder.char_filters", model.encoder.char_filters),
      S2F_SETTING("encoder.layers", model.encoder.layers),
      S2F_SETTING("encoder.heads", model.encoder.heads),
      S2F_SETTING("encoder.hidden", model.encoder.hidden),
      S2F_SETTING("encoder.ffn_dim", model.encoder.ffn_dim),
      S2F_SETTING("encoder.reduce_kernel", model.encoder.reduce_kernel),
      S2F_SETTING("encoder.reduced_dim", model.encoder.reduced_dim),
      S2F_SETTING("encoder.max_positions", model.encoder.max_positions),
      S2F_SETTING("encoder.max_token_chars", model.encoder.max_token_chars),
      S2F_SETTING("encoder.reduce_conv", model.encoder.reduce_conv),
      S2F_SETTING("encoder.precomputed_dim", model.encoder.precomputed_dim),
      S2F_SETTING("decoder.hidden", model.decoder.hidden),
      S2F_SETTING("decoder.type_dim", model.decoder.type_dim),
      S2F_SETTING("decoder.attention_dim", model.decoder.attention_dim),
      S2F_SETTING("decoder.length_buckets", model.decoder.length_buckets),
      S2F_SETTING("decoder.update_kernel", model.decoder.update_kernel),
      S2F_SETTING("decoder.scratchpad", model.decoder.scratchpad),
      S2F_SETTING("detector.mlp_dim", model.detector.mlp_dim),
      S2F_SETTING("detector.activation", model.detector.activation),
      S2F_SETTING("detector.type_bias", model.detector.type_bias),
      S2F_SETTING("train.mode", train.mode),
      S2F_SETTING("train.epochs", train.epochs),
      S2F_SETTING("train.batch_size", train.batch_size),
      S2F_SETTING("train.learning_rate", train.learning_rate),
      S2F_SETTING("train.weight_decay", train.weight_decay),
      S2F_SETTING("train.beta1", train.beta1),
      S2F_SETTING("train.beta2", train.beta2),
      S2F_SETTING("train.epsilon", train.epsilon),
      S2F_SETTING("train.clip_norm", train.clip_norm),
      S2F_SETTING("seed", train.seed),
      S2F_SETTING("train.patience", train.patience),
      S2F_SETTING("train.target_f1", train.target_f1),
      S2F_SETTING("decode.max_depth", train.decode.max_depth),
      S2F_SETTING("decode.threshold", train.decode.threshold),
      S2F_SETTING("decode.max_children", train.decode.max_children),
      S2F_SETTING("synth.sentences", synth.sentences),
      S2F_SETTING("synth.vocab_size", synth.vocab_size),
      S2F_SETTING("synth.entity_vocab", synth.entity_vocab),
      S2F_SETTING("synth.min_length", synth.min_length),
      S2F_SETTING("synth.max_length", synth.max_length),
      S2F_SETTING("synth.num_types", synth.num_types),
      S2F_SETTING("synth.min_entities", synth.min_entities),
      S2F_SETTING("synth.max_entities", synth.max_entities),
      S2F_SETTING("synth.p_discontinuous", synth.p_discontinuous),
      S2F_SETTING("synth.p_three_fragments", synth.p_three_fragments),
      S2F_SETTING("synth.p_nested", synth.p_nested),
      S2F_SETTING("synth.p_overlap", synth.p_overlap),
      S2F_SETTING("synth.p_shared_fragment", synth.p_shared_fragment),
      S2F_SETTING("data.train", train_path),
      S2F_SETTING("data.dev", dev_path),
      S2F_SETTING("data.train_embeddings", train_embeddings),
      S2F_SETTING("data.dev_embeddings", dev_embeddings),
  };
  return table;
}

#undef S2F_SETTING

const Setting* find_setting(const std::string& key) {
  for (const Setting& s : settings()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

bool has_prefix(const std::string& key, std::initializer_list<const char*> prefixes) {
  for (const char* p : prefixes) {
    if (key.rfind(p, 0) == 0) return true;
  }
  return false;
}

std::pair<std::string, json> split_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return {key, value};
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk") {
    c.model.encoder.char_filters = 32;
    c.model.encoder.layers = 2;
    c.model.encoder.heads = 4;
    c.model.encoder.hidden = 128;
    c.model.encoder.ffn_dim = 256;
    c.model.encoder.reduced_dim = 64;
    c.model.decoder.hidden = 128;
    c.model.decoder.type_dim = 32;
    c.model.decoder.attention_dim = 64;
    c.model.detector.mlp_dim = 64;
    c.train.learning_rate = 1e-3;
    c.train.epochs = 200;
  } else if (name == "paper") {
    c.model.encoder.char_filters = 200;
    c.model.encoder.layers = 12;
    c.model.encoder.heads = 12;
    c.model.encoder.hidden = 768;
    c.model.encoder.ffn_dim = 3072;
    c.model.encoder.reduced_dim = 128;
    c.model.decoder.hidden = 768;
    c.model.decoder.type_dim = 64;
    c.model.decoder.attention_dim = 128;
    c.model.detector.mlp_dim = 128;
    c.train.learning_rate = 1e-5;
    c.train.epochs = 80;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
  }
  c.train.batch_size = 20;
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys{"preset"};
  for (const Setting& s : settings()) keys.push_back(s.key);
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const json& value) {
  if (key == "preset") {
    throw ConfigError("'preset' can only be chosen before other settings");
  }
  const Setting* s = find_setting(key);
  if (!s) throw ConfigError("unknown config key '" + key + "'");
  s->set(config, value);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto [key, value] = split_override(assignment);
  apply_setting(config, key, value);
}

RunConfig config_from_json(const json& flat, const std::vector<std::string>& overrides) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object");
  std::string preset = "desk";
  if (flat.contains("preset")) read("preset", flat.at("preset"), preset);
  std::vector<std::pair<std::string, json>> parsed;
  for (const std::string& o : overrides) {
    auto kv = split_override(o);
    if (kv.first == "preset") {
      read("preset", kv.second, preset);
    } else {
      parsed.push_back(std::move(kv));
    }
  }
  RunConfig config = preset_config(preset);
  for (const auto& [key, value] : flat.items()) {
    if (key != "preset") apply_setting(config, key, value);
  }
  for (const auto& [key, value] : parsed) apply_setting(config, key, value);
  validate(config);
  return config;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json flat = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    flat = json::parse(in, nullptr, false);
    if (flat.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  }
  return config_from_json(flat, overrides);
}

json to_flat_json(const RunConfig& config) {
  json j = json::object();
  j["preset"] = config.preset;
  for (const Setting& s : settings()) j[s.key] = s.get(config);
  return j;
}

json model_config_to_json(const ModelConfig& config) {
  RunConfig rc;
  rc.model = config;
  json j = json::object();
  for (const Setting& s : settings()) {
    if (has_prefix(s.key, {"encoder.", "decoder.", "detector."})) j[s.key] = s.get(rc);
  }
  return j;
}

ModelConfig model_config_from_json(const json& flat) {
  RunConfig rc;
  for (const auto& [key, value] : flat.items()) {
    if (!has_prefix(key, {"encoder.", "decoder.", "detector."})) {
      throw ConfigError("unexpected model config key '" + key + "'");
    }
    apply_setting(rc, key, value);
  }
  validate(rc.model.encoder);
  validate(rc.model.decoder);
  validate(rc.model.detector);
  return rc.model;
}

json decode_config_to_json(const DecodeConfig& config) {
  RunConfig rc;
  rc.train.decode = config;
  json j = json::object();
  for (const Setting& s : settings()) {
    if (has_prefix(s.key, {"decode."})) j[s.key] = s.get(rc);
  }
  return j;
}

DecodeConfig decode_config_from_json(const json& flat) {
  RunConfig rc;
  for (const auto& [key, value] : flat.items()) {
    if (!has_prefix(key, {"decode."})) throw ConfigError("unexpected decode key '" + key + "'");
    apply_setting(rc, key, value);
  }
  validate(rc.train.decode);
  return rc.train.decode;
}

void validate(const RunConfig& config) {
  validate(config.model.encoder);
  validate(config.model.decoder);
  validate(config.model.detector);
  validate(config.train);
  validate(config.synth);
}

}  // namespace s2f
