#include "s2f/fragment_detector.hpp"

#include <algorithm>
#include <cmath>

#include "s2f/errors.hpp"

namespace s2f {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void validate(const DetectorConfig& config) {
  if (config.mlp_dim == 0) throw ConfigError("detector.mlp_dim must be positive");
}

ScoreGrid to_grid(const Tensor& logits, std::size_t length, std::size_t types) {
  if (logits.rows() != types * length || logits.cols() != length) {
    throw ContractViolation("to_grid: logits shape does not match length/types");
  }
  ScoreGrid grid{length, types, Tensor(logits.rows(), logits.cols())};
  for (std::size_t i = 0; i < logits.size(); ++i) grid.probabilities[i] = sigmoid(logits[i]);
  return grid;
}

Tensor mask_tensor(std::size_t length, std::size_t types, const SpanMask& mask) {
  Tensor m(types * length, length);
  for (std::size_t k = 0; k < types; ++k) {
    for (std::size_t i = 0; i < length; ++i) {
      for (std::size_t j = 0; j < length; ++j) {
        if (mask.allows(i, j)) m(k * length + i, j) = 1.0;
      }
    }
  }
  return m;
}

Tensor gold_tensor(std::size_t length, std::size_t types, std::span<const TypedFragment> gold) {
  Tensor t(types * length, length);
  for (const TypedFragment& f : gold) {
    if (f.type >= types || f.fragment.start < 0 || f.fragment.end < f.fragment.start ||
        static_cast<std::size_t>(f.fragment.end) >= length) {
      throw ContractViolation("gold_tensor: fragment outside grid");
    }
    t(f.type * length + f.fragment.start, f.fragment.end) = 1.0;
  }
  return t;
}

std::vector<TypedFragment> decode_grid(const ScoreGrid& grid, double threshold,
                                       const SpanMask& mask,
                                       std::optional<std::size_t> restrict_type,
                                       std::size_t max_children) {
  const std::size_t n = grid.length;
  std::vector<TypedFragment> found;
  for (std::size_t k = 0; k < grid.types; ++k) {
    if (restrict_type && *restrict_type != k) continue;
    for (std::size_t i = mask.min_start; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double p = grid.at(i, k, j);
        if (p > threshold) {
          found.push_back({k, Fragment{static_cast<int>(i), static_cast<int>(j)}, p});
        }
      }
    }
  }
  auto canonical = [](const TypedFragment& a, const TypedFragment& b) {
    if (a.type != b.type) return a.type < b.type;
    return a.fragment < b.fragment;
  };
  if (found.size() > max_children) {
    std::stable_sort(found.begin(), found.end(),
                     [](const TypedFragment& a, const TypedFragment& b) {
                       return a.probability > b.probability;
                     });
    found.resize(max_children);
    std::sort(found.begin(), found.end(), canonical);
  }
  return found;
}

double span_loss(const Tensor& logits, const Tensor& gold, const Tensor& mask) {
  if (!logits.same_shape(gold) || !logits.same_shape(mask)) {
    throw ContractViolation("span_loss: shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double z = logits[i];
    total += std::max(z, 0.0) - z * gold[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return total;
}

Tensor span_loss_gradient(const Tensor& logits, const Tensor& gold, const Tensor& mask) {
  if (!logits.same_shape(gold) || !logits.same_shape(mask)) {
    throw ContractViolation("span_loss_gradient: shape mismatch");
  }
  Tensor g(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] != 0.0) g[i] = sigmoid(logits[i]) - gold[i];
  }
  return g;
}

FragmentDetector::FragmentDetector(const DetectorConfig& config, std::size_t input_dim,
                                   std::size_t types, ParameterStore& store, Rng& rng)
    : config_(config), types_(types) {
  validate(config_);
  if (types == 0) throw ConfigError("detector needs at least one entity type");
  head_ = nn::Linear(store, "detector.head", input_dim, config_.mlp_dim, rng);
  tail_ = nn::Linear(store, "detector.tail", input_dim, config_.mlp_dim, rng);
  u_ = store.add("detector.U", types * config_.mlp_dim, config_.mlp_dim, Init::kZeros, rng);
  v_ = store.add("detector.V", types, config_.mlp_dim, Init::kZeros, rng);
  if (config_.type_bias) bias_ = store.add("detector.type_bias", types, 1, Init::kZeros, rng);
}

Var FragmentDetector::logits(Graph& g, Var states) const {
  Var hs = nn::activate(g, head_(g, states), config_.activation);
  Var he = nn::activate(g, tail_(g, states), config_.activation);
  Var bias = bias_.valid() ? g.parameter(bias_) : Var{};
  return ag::biaffine(g, hs, he, g.parameter(u_), g.parameter(v_), bias);
}

}  // namespace s2f
