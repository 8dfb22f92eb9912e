#pragma once

#include <string>

#include "s2f/autograd.hpp"
#include "s2f/parameters.hpp"
#include "s2f/rng.hpp"

namespace s2f::nn {

enum class Activation { kIdentity, kRelu, kTanh, kGelu };

Var activate(Graph& g, Var x, Activation act);

// y = x W + b, W stored in_dim x out_dim.
struct Linear {
  ParamId weight;
  ParamId bias;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);
  Var operator()(Graph& g, Var x) const;
};

struct LayerNorm {
  ParamId gain;
  ParamId bias;

  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim, Rng& rng);
  Var operator()(Graph& g, Var x) const;
};

// Same-padded 1-D convolution over rows (sequence positions).
struct Conv1d {
  Linear projection;  // (kernel * in_dim) -> out_dim
  std::size_t kernel = 0;

  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
         std::size_t kernel_size, Rng& rng);
  Var operator()(Graph& g, Var x) const;
};

struct LstmState {
  Var hidden;  // 1 x h
  Var cell;    // 1 x h
};

// Gate order in the packed weights: input, forget, candidate, output.
struct LstmCell {
  ParamId input_weight;   // in x 4h
  ParamId hidden_weight;  // h x 4h
  ParamId bias;           // 1 x 4h, forget slice initialised to 1
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 0;

  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
           Rng& rng);
  LstmState step(Graph& g, Var input, const LstmState& prev) const;
  LstmState zero_state(Graph& g) const;
  // Runs over the rows of `sequence` from a zero state; returns the last hidden.
  Var run(Graph& g, Var sequence) const;
};

}  // namespace s2f::nn
