#include "s2f/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "s2f/errors.hpp"

namespace s2f {

using nlohmann::json;

Entity normalized(Entity e) {
  std::sort(e.fragments.begin(), e.fragments.end());
  return e;
}

std::string describe(const Entity& e) {
  std::string out = e.type + "[";
  for (std::size_t i = 0; i < e.fragments.size(); ++i) {
    if (i) out += ",";
    out += "(" + std::to_string(e.fragments[i].start) + "," + std::to_string(e.fragments[i].end) +
           ")";
  }
  return out + "]";
}

void validate_entity(const Entity& e, std::size_t sentence_length, std::size_t max_fragments) {
  if (e.type.empty()) throw ValidationError("entity " + describe(e) + ": empty type");
  if (e.fragments.empty()) throw ValidationError("entity " + describe(e) + ": no fragments");
  if (e.fragments.size() > max_fragments) {
    throw ValidationError("entity " + describe(e) + ": " + std::to_string(e.fragments.size()) +
                          " fragments exceeds limit " + std::to_string(max_fragments));
  }
  const int n = static_cast<int>(sentence_length);
  for (std::size_t i = 0; i < e.fragments.size(); ++i) {
    const Fragment& f = e.fragments[i];
    if (f.start < 0 || f.end < f.start || f.end >= n) {
      throw ValidationError("entity " + describe(e) + ": invalid fragment for sentence of " +
                            std::to_string(sentence_length) + " tokens");
    }
    if (i > 0 && f.start <= e.fragments[i - 1].end) {
      throw ValidationError("entity " + describe(e) + ": fragments overlap or are out of order");
    }
  }
}

void validate_sentence(const AnnotatedSentence& s, std::size_t max_fragments) {
  if (s.tokens.empty()) throw ValidationError("sentence has no tokens");
  std::set<Entity> seen;
  for (const Entity& e : s.entities) {
    validate_entity(e, s.tokens.size(), max_fragments);
    if (!seen.insert(e).second) throw ValidationError("duplicate entity " + describe(e));
  }
}

namespace {

AnnotatedSentence sentence_from_json(const json& j) {
  if (!j.is_object()) throw Error("record is not an object");
  if (!j.contains("tokens") || !j["tokens"].is_array()) throw Error("missing \"tokens\" array");
  AnnotatedSentence s;
  for (const json& t : j["tokens"]) {
    if (!t.is_string()) throw Error("token is not a string");
    s.tokens.push_back(t.get<std::string>());
  }
  if (j.contains("entities")) {
    if (!j["entities"].is_array()) throw Error("\"entities\" is not an array");
    for (const json& je : j["entities"]) {
      if (!je.is_object() || !je.contains("type") || !je["type"].is_string() ||
          !je.contains("fragments") || !je["fragments"].is_array()) {
        throw Error("entity needs a string \"type\" and a \"fragments\" array");
      }
      Entity e;
      e.type = je["type"].get<std::string>();
      for (const json& jf : je["fragments"]) {
        if (!jf.is_array() || jf.size() != 2 || !jf[0].is_number_integer() ||
            !jf[1].is_number_integer()) {
          throw Error("fragment must be [start, end] integers");
        }
        e.fragments.push_back({jf[0].get<int>(), jf[1].get<int>()});
      }
      s.entities.push_back(normalized(std::move(e)));
    }
  }
  return s;
}

}  // namespace

Corpus parse_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    AnnotatedSentence s;
    try {
      s = sentence_from_json(j);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    try {
      validate_sentence(s, SIZE_MAX);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return parse_jsonl(in);
}

std::string to_json_line(const AnnotatedSentence& s) {
  json j;
  j["tokens"] = s.tokens;
  json ents = json::array();
  for (const Entity& e : s.entities) {
    json frags = json::array();
    for (const Fragment& f : e.fragments) frags.push_back({f.start, f.end});
    ents.push_back({{"type", e.type}, {"fragments", std::move(frags)}});
  }
  j["entities"] = std::move(ents);
  return j.dump();
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const AnnotatedSentence& s : corpus) out << to_json_line(s) << '\n';
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_jsonl(out, corpus);
}

bool share_tokens(const Entity& a, const Entity& b) {
  for (const Fragment& fa : a.fragments) {
    for (const Fragment& fb : b.fragments) {
      if (fa.start <= fb.end && fb.start <= fa.end) return true;
    }
  }
  return false;
}

double CorpusStats::overlapping_percent() const {
  return entities ? 100.0 * static_cast<double>(overlapping) / static_cast<double>(entities) : 0.0;
}

double CorpusStats::discontinuous_percent() const {
  return entities ? 100.0 * static_cast<double>(discontinuous) / static_cast<double>(entities)
                  : 0.0;
}

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats st;
  st.sentences = corpus.size();
  for (const AnnotatedSentence& s : corpus) {
    for (std::size_t i = 0; i < s.entities.size(); ++i) {
      const Entity& e = s.entities[i];
      ++st.entities;
      ++st.fragment_histogram[e.fragments.size()];
      if (e.discontinuous()) ++st.discontinuous;
      for (std::size_t j = 0; j < s.entities.size(); ++j) {
        if (j != i && share_tokens(e, s.entities[j])) {
          ++st.overlapping;
          break;
        }
      }
    }
  }
  return st;
}

std::string stats_to_json(const CorpusStats& st) {
  json hist = json::object();
  for (const auto& [k, v] : st.fragment_histogram) hist[std::to_string(k)] = v;
  json j{{"sentences", st.sentences},
         {"entities", st.entities},
         {"overlapping", st.overlapping},
         {"discontinuous", st.discontinuous},
         {"overlapping_percent", st.overlapping_percent()},
         {"discontinuous_percent", st.discontinuous_percent()},
         {"fragment_histogram", std::move(hist)}};
  return j.dump(2);
}

}  // namespace s2f
