#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2f/corpus.hpp"
#include "s2f/encoder.hpp"
#include "s2f/forest_decoder.hpp"
#include "s2f/fragment_detector.hpp"
#include "s2f/parameters.hpp"

namespace s2f {

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  DetectorConfig detector;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Entity type names in a fixed order; the index is the detector channel.
class TypeInventory {
 public:
  TypeInventory() = default;
  explicit TypeInventory(std::vector<std::string> names);

  // Sorted, de-duplicated types found in the corpus.
  static TypeInventory from_corpus(const Corpus& corpus);

  std::optional<std::size_t> index(const std::string& name) const;
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  friend bool operator==(const TypeInventory&, const TypeInventory&) = default;

 private:
  std::vector<std::string> names_;
};

class S2fModel {
 public:
  S2fModel(const ModelConfig& config, TypeInventory types, std::uint64_t seed);
  S2fModel(const S2fModel& other);
  S2fModel& operator=(const S2fModel& other);

  EncoderOutput encode(Graph& g, std::span<const std::string> tokens,
                       const Tensor* precomputed = nullptr) const;
  std::vector<Entity> predict(std::span<const std::string> tokens, const DecodeConfig& decode,
                              const Tensor* precomputed = nullptr,
                              std::vector<DecodeEvent>* trace = nullptr) const;

  const ModelConfig& config() const { return config_; }
  const TypeInventory& types() const { return types_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const Encoder& encoder() const { return encoder_; }
  const ForestDecoder& decoder() const { return decoder_; }
  const FragmentDetector& detector() const { return detector_; }

 private:
  ModelConfig config_;
  TypeInventory types_;
  ParameterStore params_;
  Encoder encoder_;
  ForestDecoder decoder_;
  FragmentDetector detector_;
};

}  // namespace s2f
