#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s2f/rng.hpp"
#include "s2f/tensor.hpp"

namespace s2f {

struct ParamId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(ParamId, ParamId) = default;
};

enum class Init { kZeros, kOnes, kXavier, kEmbedding };

// Named trainable tensors. Layers keep only ParamIds, so copying the store
// copies a whole model's weights.
class ParameterStore {
 public:
  ParamId add(std::string name, std::size_t rows, std::size_t cols, Init init, Rng& rng);
  ParamId add(std::string name, Tensor value);

  Tensor& value(ParamId id) { return values_[id.index]; }
  const Tensor& value(ParamId id) const { return values_[id.index]; }
  const std::string& name(ParamId id) const { return names_[id.index]; }
  std::optional<ParamId> find(std::string_view name) const;

  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;
  ParamId id(std::size_t i) const { return ParamId{static_cast<std::uint32_t>(i)}; }

  // Storage precision is float32; compute stays in double.
  void round_to_float();
  bool all_finite() const;

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// Gradient buffers parallel to a ParameterStore.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const ParameterStore& params);

  Tensor& operator[](ParamId id) { return grads_[id.index]; }
  const Tensor& operator[](ParamId id) const { return grads_[id.index]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const GradientSet& other);
  void scale(double factor);
  double global_norm() const;
  bool all_finite() const;

 private:
  std::vector<Tensor> grads_;
};

}  // namespace s2f
