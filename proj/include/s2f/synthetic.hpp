#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "s2f/corpus.hpp"

namespace s2f {

// Structural knobs for generated corpora. Entity-kind probabilities are per
// entity and must sum to at most 1; the remainder are flat entities.
struct SynthConfig {
  std::size_t sentences = 1000;
  std::size_t vocab_size = 200;   // filler words
  std::size_t entity_vocab = 30;  // type-specific words per type
  std::size_t min_length = 8;
  std::size_t max_length = 18;
  std::size_t num_types = 3;
  std::size_t min_entities = 2;
  std::size_t max_entities = 4;
  double p_discontinuous = 0.3;
  double p_three_fragments = 0.3;  // share of discontinuous entities with 3 fragments
  double p_nested = 0.15;
  double p_overlap = 0.15;
  // Chance that a discontinuous entity shares its first or last fragment
  // with an earlier discontinuous entity of the same type.
  double p_shared_fragment = 0.3;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Throws ConfigError on infeasible settings.
void validate(const SynthConfig& config);

// Counts the generator records while placing entities; these are tracked
// from its own token-ownership map, not recomputed from the output.
struct SynthBookkeeping {
  std::size_t sentences = 0;
  std::size_t entities = 0;
  std::size_t overlapping = 0;
  std::size_t discontinuous = 0;
  std::size_t discontinuous_sentences = 0;
  std::map<std::size_t, std::size_t> fragment_histogram;
  std::map<std::string, std::size_t> kinds;  // flat / nested / crossing / discontinuous / shared
};

struct SynthCorpus {
  Corpus sentences;
  SynthBookkeeping bookkeeping;
};

// Deterministic in (config, seed).
SynthCorpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

std::string type_name(std::size_t k);

}  // namespace s2f
