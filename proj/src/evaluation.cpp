#include "s2f/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "s2f/errors.hpp"

namespace s2f {

namespace {

EntitySet canonical(const EntitySet& set) {
  EntitySet out;
  out.reserve(set.size());
  for (const Entity& e : set) out.push_back(normalized(e));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t intersection_size(const EntitySet& a, const EntitySet& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

void check_sizes(std::span<const EntitySet> gold, std::span<const EntitySet> predicted) {
  if (gold.size() != predicted.size()) {
    throw ContractViolation("evaluation: " + std::to_string(gold.size()) + " gold sentences vs " +
                            std::to_string(predicted.size()) + " predicted");
  }
}

template <typename Keep>
Prf filtered_prf(std::span<const EntitySet> gold, std::span<const EntitySet> predicted, Keep keep) {
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    EntitySet g, p;
    for (const Entity& e : canonical(gold[s])) {
      if (keep(s, e, true)) g.push_back(e);
    }
    for (const Entity& e : canonical(predicted[s])) {
      if (keep(s, e, false)) p.push_back(e);
    }
    tp += intersection_size(g, p);
    np += p.size();
    ng += g.size();
  }
  return prf_from_counts(tp, np, ng);
}

nlohmann::json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"tp", p.true_positives}, {"predicted", p.predicted}, {"gold", p.gold}};
}

nlohmann::json entities_json(const EntitySet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Entity& e : set) {
    nlohmann::json frags = nlohmann::json::array();
    for (const Fragment& f : e.fragments) frags.push_back({f.start, f.end});
    arr.push_back({{"type", e.type}, {"fragments", frags}});
  }
  return arr;
}

}  // namespace

bool entity_match(const Entity& gold, const Entity& predicted) {
  return normalized(gold) == normalized(predicted);
}

Prf prf_from_counts(std::size_t tp, std::size_t predicted, std::size_t gold) {
  Prf r;
  r.true_positives = tp;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  r.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  const double denom = r.precision + r.recall;
  r.f1 = denom == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / denom;
  return r;
}

Prf prf(std::span<const EntitySet> gold, std::span<const EntitySet> predicted) {
  check_sizes(gold, predicted);
  return filtered_prf(gold, predicted, [](std::size_t, const Entity&, bool) { return true; });
}

std::map<std::string, Prf> per_type_prf(std::span<const EntitySet> gold,
                                        std::span<const EntitySet> predicted) {
  check_sizes(gold, predicted);
  std::set<std::string> types;
  for (const auto* side : {&gold, &predicted}) {
    for (const EntitySet& set : *side) {
      for (const Entity& e : set) types.insert(e.type);
    }
  }
  std::map<std::string, Prf> out;
  for (const std::string& t : types) {
    out[t] = filtered_prf(gold, predicted,
                          [&t](std::size_t, const Entity& e, bool) { return e.type == t; });
  }
  return out;
}

DiscontinuousScores discontinuous_subsets(std::span<const EntitySet> gold,
                                          std::span<const EntitySet> predicted) {
  check_sizes(gold, predicted);
  std::vector<bool> has_discontinuous(gold.size(), false);
  for (std::size_t s = 0; s < gold.size(); ++s) {
    has_discontinuous[s] = std::any_of(gold[s].begin(), gold[s].end(),
                                       [](const Entity& e) { return e.discontinuous(); });
  }
  DiscontinuousScores out;
  out.sentences = filtered_prf(gold, predicted, [&](std::size_t s, const Entity&, bool) {
    return has_discontinuous[s];
  });
  out.entities = filtered_prf(gold, predicted, [](std::size_t, const Entity& e, bool) {
    return e.discontinuous();
  });
  return out;
}

std::string to_string(OverlapPattern p) {
  switch (p) {
    case OverlapPattern::kNone: return "none";
    case OverlapPattern::kLeft: return "left";
    case OverlapPattern::kRight: return "right";
    case OverlapPattern::kMultiple: return "multiple";
  }
  return "none";
}

OverlapPattern overlap_pattern(const Entity& entity, std::span<const Entity> sentence_entities) {
  auto token_shared = [&](int token) {
    for (const Entity& other : sentence_entities) {
      if (normalized(other) == normalized(entity)) continue;
      for (const Fragment& f : other.fragments) {
        if (f.start <= token && token <= f.end) return true;
      }
    }
    return false;
  };
  auto fragment_shared = [&](const Fragment& f) {
    for (int t = f.start; t <= f.end; ++t) {
      if (token_shared(t)) return true;
    }
    return false;
  };
  const Entity e = normalized(entity);
  if (e.fragments.empty()) return OverlapPattern::kNone;
  if (e.fragments.size() == 1) {
    const Fragment& f = e.fragments.front();
    if (!fragment_shared(f)) return OverlapPattern::kNone;
    const bool first = token_shared(f.start);
    const bool last = token_shared(f.end);
    if (f.start != f.end) {
      if (first && !last) return OverlapPattern::kLeft;
      if (last && !first) return OverlapPattern::kRight;
    }
    return OverlapPattern::kMultiple;
  }
  std::vector<std::size_t> shared;
  for (std::size_t i = 0; i < e.fragments.size(); ++i) {
    if (fragment_shared(e.fragments[i])) shared.push_back(i);
  }
  if (shared.empty()) return OverlapPattern::kNone;
  if (shared.size() == 1 && shared[0] == 0) return OverlapPattern::kLeft;
  if (shared.size() == 1 && shared[0] == e.fragments.size() - 1) return OverlapPattern::kRight;
  return OverlapPattern::kMultiple;
}

std::map<OverlapPattern, Prf> overlap_pattern_prf(std::span<const EntitySet> gold,
                                                  std::span<const EntitySet> predicted) {
  check_sizes(gold, predicted);
  std::vector<EntitySet> gold_sets, pred_sets;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    gold_sets.push_back(canonical(gold[s]));
    pred_sets.push_back(canonical(predicted[s]));
  }
  std::map<OverlapPattern, Prf> out;
  for (OverlapPattern p : {OverlapPattern::kNone, OverlapPattern::kLeft, OverlapPattern::kRight,
                           OverlapPattern::kMultiple}) {
    out[p] = filtered_prf(gold, predicted, [&](std::size_t s, const Entity& e, bool is_gold) {
      const EntitySet& context = is_gold ? gold_sets[s] : pred_sets[s];
      return overlap_pattern(e, context) == p;
    });
  }
  return out;
}

EvalReport evaluate(std::span<const EntitySet> gold, std::span<const EntitySet> predicted,
                    const EvalOptions& options) {
  check_sizes(gold, predicted);
  EvalReport r;
  r.options = options;
  r.sentences = gold.size();
  r.overall = prf(gold, predicted);
  r.per_type = per_type_prf(gold, predicted);
  if (options.subsets) r.discontinuous = discontinuous_subsets(gold, predicted);
  if (options.patterns) r.overlap = overlap_pattern_prf(gold, predicted);
  return r;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["sentences"] = r.sentences;
  j["overall"] = prf_json(r.overall);
  j["per_type"] = nlohmann::json::object();
  for (const auto& [type, p] : r.per_type) j["per_type"][type] = prf_json(p);
  if (r.options.subsets) {
    j["discontinuous"] = {{"sentences", prf_json(r.discontinuous.sentences)},
                          {"entities", prf_json(r.discontinuous.entities)}};
  }
  if (r.options.patterns) {
    j["overlap"] = nlohmann::json::object();
    for (const auto& [pattern, p] : r.overlap) j["overlap"][to_string(pattern)] = prf_json(p);
  }
  if (!r.throughput.empty()) {
    j["throughput"] = nlohmann::json::array();
    for (const ThroughputResult& t : r.throughput) {
      j["throughput"].push_back({{"batch_size", t.batch_size},
                                 {"sentences", t.sentences},
                                 {"seconds", t.seconds},
                                 {"sentences_per_second", t.sentences_per_second}});
    }
  }
  return j.dump(2);
}

std::string report_to_text(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  auto row = [&](const std::string& label, const Prf& p) {
    std::snprintf(line, sizeof line, "%-28s %7.2f %7.2f %7.2f %7zu %7zu %7zu\n", label.c_str(),
                  100.0 * p.precision, 100.0 * p.recall, 100.0 * p.f1, p.true_positives,
                  p.predicted, p.gold);
    out << line;
  };
  std::snprintf(line, sizeof line, "%-28s %7s %7s %7s %7s %7s %7s\n", "", "P", "R", "F1", "tp",
                "pred", "gold");
  out << line;
  row("overall", r.overall);
  for (const auto& [type, p] : r.per_type) row("type " + type, p);
  if (r.options.subsets) {
    row("discontinuous sentences", r.discontinuous.sentences);
    row("discontinuous entities", r.discontinuous.entities);
  }
  for (const auto& [pattern, p] : r.overlap) row("overlap " + to_string(pattern), p);
  for (const ThroughputResult& t : r.throughput) {
    std::snprintf(line, sizeof line, "throughput batch %-4zu %10.1f sentences/s (%zu in %.3fs)\n",
                  t.batch_size, t.sentences_per_second, t.sentences, t.seconds);
    out << line;
  }
  return out.str();
}

void write_error_dump(std::ostream& out, const Corpus& gold, std::span<const EntitySet> predicted) {
  if (gold.size() != predicted.size()) throw ContractViolation("error dump: size mismatch");
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const EntitySet g = canonical(gold[s].entities);
    const EntitySet p = canonical(predicted[s]);
    if (g == p) continue;
    EntitySet missing, spurious;
    std::set_difference(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(missing));
    std::set_difference(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(spurious));
    nlohmann::json j;
    j["sentence"] = s;
    j["tokens"] = gold[s].tokens;
    j["missing"] = entities_json(missing);
    j["spurious"] = entities_json(spurious);
    out << j.dump() << '\n';
  }
}

}  // namespace s2f
