#include "s2f/nn.hpp"

#include <array>

namespace s2f::nn {

Var activate(Graph& g, Var x, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return ag::relu(g, x);
    case Activation::kTanh:
      return ag::tanh(g, x);
    case Activation::kGelu:
      return ag::gelu(g, x);
  }
  return x;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng, bool with_bias)
    : in_dim(in), out_dim(out) {
  weight = store.add(name + ".weight", in, out, Init::kXavier, rng);
  if (with_bias) bias = store.add(name + ".bias", 1, out, Init::kZeros, rng);
}

Var Linear::operator()(Graph& g, Var x) const {
  Var y = ag::matmul(g, x, g.parameter(weight));
  return bias.valid() ? ag::add_row(g, y, g.parameter(bias)) : y;
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim, Rng& rng) {
  gain = store.add(name + ".gain", 1, dim, Init::kOnes, rng);
  bias = store.add(name + ".bias", 1, dim, Init::kZeros, rng);
}

Var LayerNorm::operator()(Graph& g, Var x) const {
  return ag::layer_norm(g, x, g.parameter(gain), g.parameter(bias));
}

Conv1d::Conv1d(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
               std::size_t kernel_size, Rng& rng)
    : projection(store, name, kernel_size * in, out, rng), kernel(kernel_size) {}

Var Conv1d::operator()(Graph& g, Var x) const {
  return projection(g, kernel == 1 ? x : ag::im2col(g, x, kernel));
}

LstmCell::LstmCell(ParameterStore& store, const std::string& name, std::size_t in,
                   std::size_t hidden, Rng& rng)
    : in_dim(in), hidden_dim(hidden) {
  input_weight = store.add(name + ".input_weight", in, 4 * hidden, Init::kXavier, rng);
  hidden_weight = store.add(name + ".hidden_weight", hidden, 4 * hidden, Init::kXavier, rng);
  Tensor b(1, 4 * hidden);
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
  bias = store.add(name + ".bias", std::move(b));
}

LstmState LstmCell::step(Graph& g, Var input, const LstmState& prev) const {
  Var pre = ag::add(g, ag::matmul(g, input, g.parameter(input_weight)),
                    ag::matmul(g, prev.hidden, g.parameter(hidden_weight)));
  pre = ag::add_row(g, pre, g.parameter(bias));
  const std::size_t h = hidden_dim;
  Var in_gate = ag::sigmoid(g, ag::slice_cols(g, pre, 0, h));
  Var forget_gate = ag::sigmoid(g, ag::slice_cols(g, pre, h, h));
  Var candidate = ag::tanh(g, ag::slice_cols(g, pre, 2 * h, h));
  Var out_gate = ag::sigmoid(g, ag::slice_cols(g, pre, 3 * h, h));
  Var cell = ag::add(g, ag::hadamard(g, forget_gate, prev.cell), ag::hadamard(g, in_gate, candidate));
  Var hidden = ag::hadamard(g, out_gate, ag::tanh(g, cell));
  return {hidden, cell};
}

LstmState LstmCell::zero_state(Graph& g) const {
  return {g.constant(Tensor(1, hidden_dim)), g.constant(Tensor(1, hidden_dim))};
}

Var LstmCell::run(Graph& g, Var sequence) const {
  LstmState state = zero_state(g);
  const std::size_t steps = g.value(sequence).rows();
  for (std::size_t t = 0; t < steps; ++t) state = step(g, ag::slice_rows(g, sequence, t, 1), state);
  return state.hidden;
}

}  // namespace s2f::nn
