#pragma once

// Central finite-difference checks for graph-built scalars.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "s2f/autograd.hpp"
#include "s2f/parameters.hpp"
#include "s2f/rng.hpp"

namespace s2f::testing {

struct GradCheck {
  double max_relative_error = 0.0;
  std::string worst;  // tensor with the largest error
  std::size_t checked = 0;
};

using ScalarFn = std::function<Var(Graph&, std::span<const Var> inputs)>;

// Norm-wise relative error ||a - n|| / (||a|| + ||n||) per tensor, over at most
// max_elements sampled entries of each input and parameter tensor.
inline GradCheck check_gradients(ParameterStore& params, std::vector<Tensor> inputs,
                                 const ScalarFn& build, double step = 1e-6,
                                 std::size_t max_elements = 48, std::uint64_t seed = 11) {
  auto evaluate = [&](GradientSet* grads, std::vector<Tensor>* input_grads) {
    Graph g(&params, true);
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(g.variable(t));
    Var out = build(g, vars);
    const double value = g.value(out)[0];
    if (grads) {
      g.backward(out, grads);
      for (std::size_t i = 0; i < vars.size(); ++i) {
        const Tensor& gi = g.gradient(vars[i]);
        (*input_grads)[i] = gi.empty() ? Tensor(inputs[i].rows(), inputs[i].cols()) : gi;
      }
    }
    return value;
  };

  GradientSet analytic(params);
  std::vector<Tensor> input_grads(inputs.size());
  evaluate(&analytic, &input_grads);

  Rng rng(seed);
  GradCheck result;
  auto compare = [&](Tensor& target, const Tensor& grad, const std::string& name) {
    std::vector<std::size_t> idx(target.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    if (idx.size() > max_elements) idx.resize(max_elements);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t e : idx) {
      const double saved = target[e];
      target[e] = saved + step;
      const double up = evaluate(nullptr, nullptr);
      target[e] = saved - step;
      const double down = evaluate(nullptr, nullptr);
      target[e] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff += (grad[e] - numeric) * (grad[e] - numeric);
      na += grad[e] * grad[e];
      nn += numeric * numeric;
      ++result.checked;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    const double rel = denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst = name;
    }
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    compare(inputs[i], input_grads[i], "input" + std::to_string(i));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id = params.id(p);
    compare(params.value(id), analytic[id], params.name(id));
  }
  return result;
}

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

// Overwrites every parameter, including zero-initialised ones, with noise.
inline void randomize(ParameterStore& params, Rng& rng, double scale = 0.5) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.value(params.id(i));
    for (std::size_t e = 0; e < t.size(); ++e) t[e] = rng.uniform(-scale, scale);
  }
}

// sum(x ⊙ w) with a fixed random w, so every output element matters.
inline Var weighted_sum(Graph& g, Var x, std::uint64_t seed = 99) {
  Rng rng(seed);
  const Tensor& v = g.value(x);
  Var w = g.constant(random_tensor(rng, v.rows(), v.cols()));
  return ag::sum(g, ag::hadamard(g, x, w));
}

}  // namespace s2f::testing
