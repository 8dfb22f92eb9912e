#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace s2f {

// Inclusive, 0-based token span.
struct Fragment {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  friend auto operator<=>(const Fragment&, const Fragment&) = default;
};

// Entity types are identified by their label string. Fragments are kept
// sorted by start; equality therefore ignores the order fragments arrived in.
struct Entity {
  std::string type;
  std::vector<Fragment> fragments;

  bool discontinuous() const { return fragments.size() > 1; }
  friend auto operator<=>(const Entity&, const Entity&) = default;
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<Entity> entities;

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

using Corpus = std::vector<AnnotatedSentence>;

inline constexpr std::size_t kMaxFragments = 3;

// Sorts fragments by start. Does not validate.
Entity normalized(Entity e);

// Throws ValidationError naming the entity on any violated invariant:
// 1 <= |fragments| <= max_fragments, 0 <= start <= end < n, fragments
// disjoint in textual order.
void validate_entity(const Entity& e, std::size_t sentence_length,
                     std::size_t max_fragments = kMaxFragments);
// Entity checks plus duplicate detection and non-empty tokens.
void validate_sentence(const AnnotatedSentence& s, std::size_t max_fragments = kMaxFragments);

std::string describe(const Entity& e);

// JSON-lines corpus: {"tokens": [...], "entities": [{"type": "...",
// "fragments": [[start, end], ...]}]}. Blank lines are skipped.
// Entities with more than kMaxFragments fragments are accepted at parse time
// (they exist in real data); training drops them.
Corpus parse_jsonl(std::istream& in);
Corpus read_corpus(const std::string& path);
void write_jsonl(std::ostream& out, const Corpus& corpus);
std::string to_json_line(const AnnotatedSentence& s);
void write_corpus(const std::string& path, const Corpus& corpus);

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t entities = 0;
  std::size_t overlapping = 0;
  std::size_t discontinuous = 0;
  // fragment count -> number of entities
  std::map<std::size_t, std::size_t> fragment_histogram;

  double overlapping_percent() const;
  double discontinuous_percent() const;
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Overlapping: shares at least one token with a different entity in the same
// sentence. Discontinuous: more than one fragment.
CorpusStats compute_stats(const Corpus& corpus);
std::string stats_to_json(const CorpusStats& stats);

// True if any token is covered by both entities.
bool share_tokens(const Entity& a, const Entity& b);

}  // namespace s2f
