#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "s2f/model.hpp"
#include "s2f/synthetic.hpp"
#include "s2f/training.hpp"

namespace s2f {

// Everything a run needs. On disk it is a flat JSON object with dotted keys
// ("encoder.hidden": 128); command-line "key=value" overrides win over the file.
struct RunConfig {
  std::string preset = "desk";
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  std::string train_path;
  std::string dev_path;
  std::string train_embeddings;
  std::string dev_embeddings;
};

// "desk" (small, CPU friendly) or "paper" (full-size). Throws ConfigError.
RunConfig preset_config(const std::string& name);

std::vector<std::string> config_keys();
void apply_setting(RunConfig& config, const std::string& key, const nlohmann::json& value);
// "key=value"; the value is read as JSON when it parses, else as a string.
void apply_override(RunConfig& config, const std::string& assignment);

// Unknown keys and ill-typed values raise ConfigError naming the key.
RunConfig config_from_json(const nlohmann::json& flat, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});
nlohmann::json to_flat_json(const RunConfig& config);

// The encoder./decoder./detector. subset, as stored in checkpoints.
nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& flat);
nlohmann::json decode_config_to_json(const DecodeConfig& config);
DecodeConfig decode_config_from_json(const nlohmann::json& flat);

void validate(const RunConfig& config);

}  // namespace s2f
