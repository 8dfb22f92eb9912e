#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "s2f/autograd.hpp"
#include "s2f/nn.hpp"

namespace s2f {

struct EncoderConfig {
  std::size_t char_dim = 50;
  std::size_t position_dim = 30;
  std::vector<std::size_t> char_kernels{3, 4, 5};
  std::size_t char_filters = 200;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t hidden = 128;
  std::size_t ffn_dim = 256;
  std::size_t reduce_kernel = 3;
  std::size_t reduced_dim = 64;
  std::size_t max_positions = 512;
  // Longer tokens are truncated to this many bytes before the char-CNN.
  std::size_t max_token_chars = 32;
  // false replaces the reducing convolution with a per-position linear map.
  bool reduce_conv = true;
  // > 0: contextual states are projected from externally computed vectors of
  // this width and the Transformer stack is not used.
  std::size_t precomputed_dim = 0;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Throws ConfigError.
void validate(const EncoderConfig& config);

struct EncoderOutput {
  Var contextual;   // n x hidden
  Var reduced;      // n x reduced_dim, the decoder's initial scratchpad
  Var final_state;  // 1 x hidden, contextual state of the last token
  std::size_t length = 0;
};

// Char-CNN outputs keyed by token text. Valid only for the graph that built them.
using TokenCache = std::unordered_map<std::string, Var>;

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, ParameterStore& store, Rng& rng);

  // n x (char_dim + position_dim): char-CNN token embedding joined with an
  // absolute position embedding. Positions past max_positions reuse the last row.
  Var embed_tokens(Graph& g, std::span<const std::string> tokens,
                   TokenCache* cache = nullptr) const;
  // Stacked self-attention blocks: n x (char_dim + position_dim) -> n x hidden.
  // With `lengths`, inputs holds several sentences stacked row-wise; attention
  // stays within each sentence and every row matches the unstacked result.
  Var encode(Graph& g, Var inputs, std::span<const std::size_t> lengths = {}) const;
  // Same-padded convolution n x hidden -> n x reduced_dim.
  Var conv_reduce(Graph& g, Var contextual) const;

  // precomputed (n x precomputed_dim) is required iff the config asks for it.
  EncoderOutput forward(Graph& g, std::span<const std::string> tokens,
                        const Tensor* precomputed = nullptr, TokenCache* cache = nullptr) const;
  // forward over several sentences at once, sharing the position-wise layers.
  // precomputed is empty or holds one entry per sentence.
  std::vector<EncoderOutput> forward_batch(Graph& g,
                                           std::span<const std::span<const std::string>> sentences,
                                           std::span<const Tensor* const> precomputed = {},
                                           TokenCache* cache = nullptr) const;

  const EncoderConfig& config() const { return config_; }

 private:
  struct Block {
    nn::Linear qkv;
    nn::Linear output;
    nn::LayerNorm attention_norm;
    nn::Linear ffn_in;
    nn::Linear ffn_out;
    nn::LayerNorm ffn_norm;
  };

  Var char_embedding(Graph& g, const std::string& token) const;
  Var self_attention(Graph& g, const Block& block, Var x,
                     std::span<const std::size_t> lengths) const;

  EncoderConfig config_;
  ParamId char_table_;
  std::vector<nn::Conv1d> char_convs_;
  nn::Linear char_projection_;
  ParamId position_table_;
  nn::Linear input_projection_;
  std::vector<Block> blocks_;
  nn::Linear precomputed_projection_;
  nn::Conv1d reduce_;
};

}  // namespace s2f
