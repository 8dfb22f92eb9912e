#include "s2f/standoff.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "s2f/errors.hpp"

namespace s2f {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::size_t parse_offset(std::string_view s, std::string_view whole) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error("bad character offset '" + std::string(s) + "' in span list '" +
                std::string(whole) + "'");
  }
  return std::stoul(std::string(s));
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t word_end = i;
    while (word_end < text.size() && !is_space(text[word_end])) ++word_end;
    std::size_t b = i;
    std::size_t e = word_end;
    while (b < e && is_punct(text[b])) {
      tokens.push_back({std::string(1, text[b]), b, b + 1});
      ++b;
    }
    std::size_t core_end = e;
    while (core_end > b && is_punct(text[core_end - 1])) --core_end;
    if (core_end > b) tokens.push_back({std::string(text.substr(b, core_end - b)), b, core_end});
    for (std::size_t p = core_end; p < e; ++p) tokens.push_back({std::string(1, text[p]), p, p + 1});
    i = word_end;
  }
  return tokens;
}

std::vector<CharSpan> parse_span_list(std::string_view text) {
  std::vector<CharSpan> spans;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t semi = text.find(';', pos);
    if (semi == std::string_view::npos) semi = text.size();
    std::string_view part = text.substr(pos, semi - pos);
    const std::size_t space = part.find(' ');
    if (space == std::string_view::npos) {
      throw Error("span '" + std::string(part) + "' needs 'START END'");
    }
    const std::size_t b = parse_offset(part.substr(0, space), text);
    const std::size_t e = parse_offset(part.substr(space + 1), text);
    if (e <= b) throw Error("empty or reversed span in '" + std::string(text) + "'");
    spans.emplace_back(b, e);
    pos = semi + 1;
  }
  return spans;
}

std::vector<StandoffAnnotation> parse_standoff(std::istream& in) {
  std::vector<StandoffAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != 'T') continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos) throw ParseError(line_no, "expected ID<TAB>TYPE SPANS<TAB>TEXT");
    StandoffAnnotation a;
    a.id = line.substr(0, tab1);
    const std::string body =
        line.substr(tab1 + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab1 - 1);
    if (tab2 != std::string::npos) a.surface = line.substr(tab2 + 1);
    const std::size_t space = body.find(' ');
    if (space == std::string::npos) throw ParseError(line_no, "annotation has no spans");
    a.type = body.substr(0, space);
    try {
      a.spans = parse_span_list(std::string_view(body).substr(space + 1));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(std::move(a));
  }
  return out;
}

StandoffImport import_standoff(std::string_view text, std::span<const StandoffAnnotation> annotations,
                               AlignMode mode) {
  StandoffImport result;
  const std::vector<Token> tokens = tokenize(text);
  for (const Token& t : tokens) result.sentence.tokens.push_back(t.text);
  std::set<Entity> seen;

  for (const StandoffAnnotation& a : annotations) {
    std::vector<Fragment> frags;
    for (const auto& [b, e] : a.spans) {
      if (e > text.size()) {
        throw AlignmentError(a.id + ": span " + std::to_string(b) + "-" + std::to_string(e) +
                             " exceeds text length " + std::to_string(text.size()));
      }
      int first = -1;
      int last = -1;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t].end > b && tokens[t].begin < e) {
          if (first < 0) first = static_cast<int>(t);
          last = static_cast<int>(t);
        }
      }
      if (first < 0) {
        throw AlignmentError(a.id + ": span " + std::to_string(b) + "-" + std::to_string(e) +
                             " covers no token");
      }
      const bool aligned = tokens[first].begin == b && tokens[last].end == e;
      if (!aligned) {
        const std::string msg = a.id + ": span " + std::to_string(b) + "-" + std::to_string(e) +
                                " is not on token boundaries";
        if (mode == AlignMode::kStrict) throw AlignmentError(msg);
        result.warnings.push_back(msg + "; snapped to tokens " + std::to_string(first) + "-" +
                                  std::to_string(last));
      }
      frags.push_back({first, last});
    }
    std::sort(frags.begin(), frags.end());
    Entity entity{a.type, {}};
    for (const Fragment& f : frags) {
      if (!entity.fragments.empty() && f.start <= entity.fragments.back().end + 1) {
        entity.fragments.back().end = std::max(entity.fragments.back().end, f.end);
      } else {
        entity.fragments.push_back(f);
      }
    }
    if (!seen.insert(entity).second) {
      result.warnings.push_back(a.id + ": duplicate of an earlier entity, dropped");
      continue;
    }
    result.sentence.entities.push_back(std::move(entity));
  }
  return result;
}

}  // namespace s2f
