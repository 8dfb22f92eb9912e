#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "s2f/corpus.hpp"

namespace s2f {

using EntitySet = std::vector<Entity>;

// Exact match: same type and identical fragment list after sorting.
bool entity_match(const Entity& gold, const Entity& predicted);

struct Prf {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro-averaged over sentences; duplicates within a sentence count once.
// P is 0 without predictions, R is 0 without gold, F1 is 0 when P + R is 0.
Prf prf(std::span<const EntitySet> gold, std::span<const EntitySet> predicted);
Prf prf_from_counts(std::size_t true_positives, std::size_t predicted, std::size_t gold);

std::map<std::string, Prf> per_type_prf(std::span<const EntitySet> gold,
                                        std::span<const EntitySet> predicted);

struct DiscontinuousScores {
  // All entities, only sentences holding at least one discontinuous gold entity.
  Prf sentences;
  // Only multi-fragment entities (gold and predicted), all sentences.
  Prf entities;
};

DiscontinuousScores discontinuous_subsets(std::span<const EntitySet> gold,
                                          std::span<const EntitySet> predicted);

enum class OverlapPattern { kNone, kLeft, kRight, kMultiple };

std::string to_string(OverlapPattern p);

// How `entity` overlaps the other entities of its sentence. For a multi-fragment
// entity, the set of fragments sharing a token with another entity decides:
// none, only the first (left), only the last (right), anything else (multiple).
// A single-fragment entity is left/right if only its first/last token is shared.
OverlapPattern overlap_pattern(const Entity& entity, std::span<const Entity> sentence_entities);

// Gold entities are bucketed by their pattern among gold, predictions by their
// pattern among predictions; each bucket is scored separately.
std::map<OverlapPattern, Prf> overlap_pattern_prf(std::span<const EntitySet> gold,
                                                  std::span<const EntitySet> predicted);

struct ThroughputResult {
  std::size_t batch_size = 0;
  std::size_t sentences = 0;
  double seconds = 0.0;  // best of the repeats
  double sentences_per_second = 0.0;
};

struct EvalOptions {
  bool subsets = true;
  bool patterns = true;
};

struct EvalReport {
  EvalOptions options;
  std::size_t sentences = 0;
  Prf overall;
  std::map<std::string, Prf> per_type;
  DiscontinuousScores discontinuous;
  std::map<OverlapPattern, Prf> overlap;
  std::vector<ThroughputResult> throughput;
};

EvalReport evaluate(std::span<const EntitySet> gold, std::span<const EntitySet> predicted,
                    const EvalOptions& options = {});
std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

// One JSON line per sentence where prediction and gold differ.
void write_error_dump(std::ostream& out, const Corpus& gold, std::span<const EntitySet> predicted);

}  // namespace s2f
