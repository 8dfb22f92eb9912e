#include "s2f/model.hpp"

#include <algorithm>
#include <set>

#include "s2f/errors.hpp"

namespace s2f {

TypeInventory::TypeInventory(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const std::string& n : names_) {
    if (n.empty()) throw ValidationError("entity type names must be non-empty");
    if (!seen.insert(n).second) throw ValidationError("duplicate entity type: " + n);
  }
}

TypeInventory TypeInventory::from_corpus(const Corpus& corpus) {
  std::set<std::string> seen;
  for (const AnnotatedSentence& s : corpus) {
    for (const Entity& e : s.entities) seen.insert(e.type);
  }
  return TypeInventory(std::vector<std::string>(seen.begin(), seen.end()));
}

std::optional<std::size_t> TypeInventory::index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

S2fModel::S2fModel(const ModelConfig& config, TypeInventory types, std::uint64_t seed)
    : config_(config), types_(std::move(types)) {
  if (types_.size() == 0) throw ConfigError("model needs at least one entity type");
  Rng rng(seed);
  encoder_ = Encoder(config_.encoder, params_, rng);
  decoder_ = ForestDecoder(config_.decoder, config_.encoder.hidden, config_.encoder.reduced_dim,
                           types_.size(), params_, rng);
  detector_ = FragmentDetector(config_.detector, config_.encoder.reduced_dim, types_.size(),
                               params_, rng);
}

// Sub-modules only hold parameter ids, so copying the store alongside them is enough.
S2fModel::S2fModel(const S2fModel& other) = default;
S2fModel& S2fModel::operator=(const S2fModel& other) = default;

EncoderOutput S2fModel::encode(Graph& g, std::span<const std::string> tokens,
                               const Tensor* precomputed) const {
  return encoder_.forward(g, tokens, precomputed);
}

std::vector<Entity> S2fModel::predict(std::span<const std::string> tokens,
                                      const DecodeConfig& decode, const Tensor* precomputed,
                                      std::vector<DecodeEvent>* trace) const {
  if (tokens.empty()) return {};
  Graph g(&params_, false);
  EncoderOutput encoded = encode(g, tokens, precomputed);
  return decode_forest(g, encoded, decoder_, detector_, types_.names(), decode, trace);
}

}  // namespace s2f
