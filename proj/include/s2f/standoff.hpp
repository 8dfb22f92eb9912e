#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2f/corpus.hpp"

namespace s2f {

struct Token {
  std::string text;
  std::size_t begin = 0;  // character offsets, half-open
  std::size_t end = 0;
};

// Whitespace split, then every leading and trailing ASCII punctuation
// character becomes its own token.
std::vector<Token> tokenize(std::string_view text);

using CharSpan = std::pair<std::size_t, std::size_t>;  // [begin, end)

struct StandoffAnnotation {
  std::string id;
  std::string type;
  std::vector<CharSpan> spans;
  std::string surface;
};

enum class AlignMode { kStrict, kLenient };

struct StandoffImport {
  AnnotatedSentence sentence;
  std::vector<std::string> warnings;
};

// "0 6;13 17" -> {(0,6), (13,17)}
std::vector<CharSpan> parse_span_list(std::string_view text);

// Lines "ID<TAB>TYPE START END[;START END]*<TAB>SURFACE". Lines whose ID does
// not start with 'T' (relations, notes) are ignored.
std::vector<StandoffAnnotation> parse_standoff(std::istream& in);

// Maps each character span to the minimal covering token range. Adjacent or
// overlapping token ranges of one entity are merged. Spans that do not fall
// on token boundaries throw AlignmentError in strict mode and are snapped
// outward with a warning in lenient mode.
StandoffImport import_standoff(std::string_view text, std::span<const StandoffAnnotation> annotations,
                               AlignMode mode);

}  // namespace s2f
