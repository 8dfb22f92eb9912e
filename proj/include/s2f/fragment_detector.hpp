#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "s2f/autograd.hpp"
#include "s2f/corpus.hpp"
#include "s2f/nn.hpp"

namespace s2f {

struct DetectorConfig {
  std::size_t mlp_dim = 64;
  nn::Activation activation = nn::Activation::kRelu;
  // Adds a learned per-type scalar to every logit of that type.
  bool type_bias = false;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

void validate(const DetectorConfig& config);

// Probabilities laid out as (types * n) x n; row k*n + i, column j holds the
// score of a fragment of type k spanning tokens i..j.
struct ScoreGrid {
  std::size_t length = 0;
  std::size_t types = 0;
  Tensor probabilities;

  double at(std::size_t i, std::size_t type, std::size_t j) const {
    return probabilities(type * length + i, j);
  }
};

ScoreGrid to_grid(const Tensor& logits, std::size_t length, std::size_t types);

// Cells with i > j or i < min_start are never scored, decoded or trained.
struct SpanMask {
  std::size_t min_start = 0;

  bool allows(std::size_t i, std::size_t j) const { return i <= j && i >= min_start; }
};

// 1/0 tensor with the grid layout.
Tensor mask_tensor(std::size_t length, std::size_t types, const SpanMask& mask);

struct TypedFragment {
  std::size_t type = 0;
  Fragment fragment;
  double probability = 0.0;

  friend bool operator==(const TypedFragment& a, const TypedFragment& b) {
    return a.type == b.type && a.fragment == b.fragment;
  }
};

Tensor gold_tensor(std::size_t length, std::size_t types, std::span<const TypedFragment> gold);

// Every allowed cell with probability strictly above the threshold. When more
// than max_children survive, the highest scoring are kept (ties go to the
// smaller (type, start, end)). Output is sorted by (type, start, end).
std::vector<TypedFragment> decode_grid(const ScoreGrid& grid, double threshold,
                                       const SpanMask& mask,
                                       std::optional<std::size_t> restrict_type = std::nullopt,
                                       std::size_t max_children = SIZE_MAX);

// Masked binary cross-entropy summed over cells, and its gradient w.r.t. logits.
double span_loss(const Tensor& logits, const Tensor& gold, const Tensor& mask);
Tensor span_loss_gradient(const Tensor& logits, const Tensor& gold, const Tensor& mask);

class FragmentDetector {
 public:
  FragmentDetector() = default;
  FragmentDetector(const DetectorConfig& config, std::size_t input_dim, std::size_t types,
                   ParameterStore& store, Rng& rng);

  // states: n x input_dim. Returns (types * n) x n logits.
  Var logits(Graph& g, Var states) const;

  std::size_t types() const { return types_; }
  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  std::size_t types_ = 0;
  nn::Linear head_;
  nn::Linear tail_;
  ParamId u_;
  ParamId v_;
  ParamId bias_;
};

}  // namespace s2f
