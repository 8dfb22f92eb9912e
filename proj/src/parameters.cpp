#include "s2f/parameters.hpp"

#include <cmath>

#include "s2f/errors.hpp"
#include "s2f/kernels.hpp"

namespace s2f {

ParamId ParameterStore::add(std::string name, std::size_t rows, std::size_t cols, Init init,
                            Rng& rng) {
  Tensor t(rows, cols);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      t.fill(1.0);
      break;
    case Init::kXavier: {
      const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& x : t.values()) x = rng.uniform(-bound, bound);
      break;
    }
    case Init::kEmbedding:
      for (double& x : t.values()) x = rng.normal(0.0, 0.1);
      break;
  }
  return add(std::move(name), std::move(t));
}

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractViolation("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  ParamId id{static_cast<std::uint32_t>(values_.size() - 1)};
  // Parameters live in float32 from the start.
  for (double& x : values_.back().values()) x = static_cast<double>(static_cast<float>(x));
  return id;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return id(i);
  }
  return std::nullopt;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : values_) n += t.size();
  return n;
}

void ParameterStore::round_to_float() {
  for (Tensor& t : values_) {
    for (double& x : t.values()) x = static_cast<double>(static_cast<float>(x));
  }
}

bool ParameterStore::all_finite() const {
  for (const Tensor& t : values_) {
    for (double x : t.values()) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

GradientSet::GradientSet(const ParameterStore& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& v = params.value(params.id(i));
    grads_.emplace_back(v.rows(), v.cols());
  }
}

void GradientSet::zero() {
  for (Tensor& g : grads_) g.fill(0.0);
}

void GradientSet::add(const GradientSet& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    kernels::axpy(1.0, other.grads_[i].data(), grads_[i].data(), grads_[i].size());
  }
}

void GradientSet::scale(double factor) {
  for (Tensor& g : grads_) kernels::scale(factor, g.data(), g.size());
}

double GradientSet::global_norm() const {
  double sq = 0.0;
  for (const Tensor& g : grads_) sq += kernels::dot(g.data(), g.data(), g.size());
  return std::sqrt(sq);
}

bool GradientSet::all_finite() const {
  for (const Tensor& g : grads_) {
    for (double x : g.values()) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

}  // namespace s2f
