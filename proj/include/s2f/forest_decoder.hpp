#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2f/autograd.hpp"
#include "s2f/corpus.hpp"
#include "s2f/encoder.hpp"
#include "s2f/fragment_detector.hpp"
#include "s2f/nn.hpp"

namespace s2f {

struct DecoderConfig {
  std::size_t hidden = 128;
  std::size_t type_dim = 32;
  std::size_t attention_dim = 64;
  std::size_t length_buckets = 32;
  std::size_t update_kernel = 3;
  // false keeps the scratchpad fixed at the encoder's reduced states.
  bool scratchpad = true;

  friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

void validate(const DecoderConfig& config);

struct DecodeConfig {
  // 3 for discontinuous mode; 1 restricts output to single-fragment entities.
  int max_depth = 3;
  double threshold = 0.5;
  std::size_t max_children = 8;

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

void validate(const DecodeConfig& config);

struct DecoderState {
  nn::LstmState lstm;
  Var scratchpad;  // n x d
  int depth = 0;   // decoder steps taken so far
};

struct ScratchpadUpdate {
  Var scratchpad;  // n x d
  Var weights;     // 1 x n attention distribution
};

class ForestDecoder {
 public:
  ForestDecoder() = default;
  ForestDecoder(const DecoderConfig& config, std::size_t encoder_hidden, std::size_t scratch_dim,
                std::size_t types, ParameterStore& store, Rng& rng);

  DecoderState init_state(Graph& g, const EncoderOutput& encoded) const;
  Var bos(Graph& g) const;
  // [fragment features ; type embedding] for fragment i..j read off the scratchpad.
  Var fragment_embedding(Graph& g, Var scratchpad, const Fragment& fragment,
                         std::size_t type) const;
  // Fragment features alone (inner LSTM + length + boundary sum), 1 x d.
  Var fragment_features(Graph& g, Var scratchpad, const Fragment& fragment) const;
  // One LSTM step. Throws ContractViolation once max_depth steps were taken.
  DecoderState step(Graph& g, const DecoderState& state, Var input, int max_depth) const;
  ScratchpadUpdate scratchpad_update(Graph& g, Var scratchpad, Var query) const;
  // step followed by the scratchpad update.
  DecoderState advance(Graph& g, const DecoderState& state, Var input, int max_depth) const;

  const DecoderConfig& config() const { return config_; }
  std::size_t scratch_dim() const { return scratch_dim_; }

 private:
  DecoderConfig config_;
  std::size_t scratch_dim_ = 0;
  ParamId bos_;
  ParamId type_table_;
  ParamId length_table_;
  nn::LstmCell inner_;
  nn::LstmCell lstm_;
  nn::Linear attend_states_;
  nn::Linear attend_query_;
  ParamId attend_vector_;
  nn::Conv1d update_;
  nn::Linear init_projection_;
};

// One detector read-out during decoding: the mask in force and what survived it.
struct DecodeEvent {
  int depth = 0;
  std::optional<std::size_t> parent_type;
  std::optional<Fragment> parent;  // last fragment of the path, from depth 2 on
  SpanMask mask;
  std::vector<TypedFragment> selected;
};

// Greedy top-down decoding of every type tree. Only leaves become entities.
std::vector<Entity> decode_forest(Graph& g, const EncoderOutput& encoded,
                                  const ForestDecoder& decoder, const FragmentDetector& detector,
                                  std::span<const std::string> type_names,
                                  const DecodeConfig& config,
                                  std::vector<DecodeEvent>* trace = nullptr);

}  // namespace s2f
