#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "s2f/parameters.hpp"
#include "s2f/tensor.hpp"

namespace s2f {

// Handle to a node in a Graph.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

// Tape-based reverse-mode differentiation over 2-D tensors. A graph is built
// per sentence, read for values, and optionally back-propagated once into a
// GradientSet. Graphs built with gradients disabled store no closures.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var self)>;

  explicit Graph(const ParameterStore* params = nullptr, bool with_gradients = true);

  // Repeated calls with the same id return the same node.
  Var parameter(ParamId id);
  Var constant(Tensor value);
  // Leaf that accumulates a gradient (used for inputs under gradient checks).
  Var variable(Tensor value);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  // Gradient accumulated for v by the last backward(); empty if none reached it.
  const Tensor& gradient(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Zero-initialised gradient buffer for v, or nullptr if v needs no gradient.
  Tensor* grad_sink(Var v);

  // loss must be 1 x 1. Parameter gradients are added into param_grads.
  void backward(Var loss, GradientSet* param_grads = nullptr);

  bool with_gradients() const { return with_gradients_; }
  const ParameterStore* params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    ParamId param;
    bool requires_grad = false;
  };

  const ParameterStore* params_;
  bool with_gradients_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint32_t, Var> param_nodes_;
};

// Differentiable operations. Shapes are checked and mismatches throw
// ContractViolation.
namespace ag {

// op(a) * op(b)
Var matmul(Graph& g, Var a, Var b, bool trans_a = false, bool trans_b = false);
Var add(Graph& g, Var a, Var b);
// a (m x c) + bias (1 x c) broadcast over rows
Var add_row(Graph& g, Var a, Var bias);
Var scale(Graph& g, Var a, double factor);
Var hadamard(Graph& g, Var a, Var b);

Var sigmoid(Graph& g, Var a);
Var tanh(Graph& g, Var a);
Var relu(Graph& g, Var a);
Var gelu(Graph& g, Var a);

Var softmax_rows(Graph& g, Var a);
Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps = 1e-5);

Var concat_cols(Graph& g, std::span<const Var> parts);
Var concat_rows(Graph& g, std::span<const Var> parts);
Var slice_rows(Graph& g, Var a, std::size_t begin, std::size_t count);
Var slice_cols(Graph& g, Var a, std::size_t begin, std::size_t count);
// 1 x c -> m x c
Var repeat_rows(Graph& g, Var row, std::size_t m);
Var transpose(Graph& g, Var a);
Var gather_rows(Graph& g, Var table, std::span<const std::size_t> indices);

// Same-padded sliding windows: n x c -> n x (kernel * c); left padding is
// (kernel - 1) / 2. A convolution is im2col followed by matmul.
Var im2col(Graph& g, Var x, std::size_t kernel);
// Column-wise max over rows: m x c -> 1 x c.
Var max_rows(Graph& g, Var a);
Var sum(Graph& g, Var a);

// Per-type biaffine scores. hs, he: n x d; u: (K*d) x d stacking U_k;
// v: K x d; bias: K x 1 or an invalid Var. Output row k*n+i, column j holds
// he_j^T U_k hs_i + V_k hs_i (+ bias_k).
Var biaffine(Graph& g, Var hs, Var he, Var u, Var v, Var bias);

// Sum over cells with mask != 0 of the binary cross entropy between
// sigmoid(logits) and gold, evaluated stably from the logits.
Var bce_with_logits(Graph& g, Var logits, const Tensor& gold, const Tensor& mask);

}  // namespace ag
}  // namespace s2f
