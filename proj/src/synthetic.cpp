#include "s2f/synthetic.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "s2f/errors.hpp"
#include "s2f/rng.hpp"

namespace s2f {

namespace {

enum class Kind { kFlat, kDiscontinuous, kNested, kCrossing };

bool needs_host(Kind k) { return k == Kind::kNested || k == Kind::kCrossing; }

constexpr int kAttempts = 64;

// Sentence under construction: entities plus, per token, the entities owning it.
class Builder {
 public:
  Builder(std::size_t length, const SynthConfig& cfg, Rng& rng)
      : owners_(length), cfg_(cfg), rng_(rng) {}

  bool place(Kind kind) {
    // Drawn once so that harder three-fragment placements are retried as such.
    const int count = fragment_count();
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      std::optional<Entity> e;
      std::string label;
      switch (kind) {
        case Kind::kFlat:
          e = flat(), label = "flat";
          break;
        case Kind::kDiscontinuous:
          if (!entities_.empty() && rng_.bernoulli(cfg_.p_shared_fragment)) {
            e = shared_discontinuous(count), label = "shared";
          }
          if (!e) e = discontinuous(count), label = "discontinuous";
          break;
        case Kind::kNested:
          e = nested(), label = "nested";
          break;
        case Kind::kCrossing:
          e = crossing(), label = "crossing";
          break;
      }
      if (e && acceptable(*e)) {
        commit(std::move(*e));
        ++kinds_[label];
        return true;
      }
    }
    return false;
  }

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<bool>& overlapping() const { return overlapping_; }
  const std::map<std::string, std::size_t>& kinds() const { return kinds_; }

 private:
  int length() const { return static_cast<int>(owners_.size()); }
  bool free(int t) const { return owners_[t].empty(); }
  bool free_span(int b, int e) const {
    if (b < 0 || e >= length()) return false;
    for (int t = b; t <= e; ++t)
      if (!free(t)) return false;
    return true;
  }
  std::string random_type() { return type_name(rng_.index(cfg_.num_types)); }

  std::optional<Entity> flat() {
    const int len = rng_.between(1, std::min(3, length()));
    const int b = rng_.between(0, length() - len);
    if (!free_span(b, b + len - 1)) return std::nullopt;
    return Entity{random_type(), {{b, b + len - 1}}};
  }

  // Fragments of length 1-2 separated by gaps of 1-3 tokens, all on free tokens.
  std::optional<std::vector<Fragment>> chain(int start, int count) {
    std::vector<Fragment> frags;
    int pos = start;
    for (int i = 0; i < count; ++i) {
      if (i > 0) pos += rng_.between(1, 3);
      const int len = rng_.between(1, 2);
      if (!free_span(pos, pos + len - 1)) return std::nullopt;
      frags.push_back({pos, pos + len - 1});
      pos += len;
    }
    return frags;
  }

  int fragment_count() { return rng_.bernoulli(cfg_.p_three_fragments) ? 3 : 2; }

  std::optional<Entity> discontinuous(int count) {
    auto frags = chain(rng_.between(0, length() - 1), count);
    if (!frags) return std::nullopt;
    return Entity{random_type(), std::move(*frags)};
  }

  // Reuses the first (or last) fragment of an earlier discontinuous entity.
  std::optional<Entity> shared_discontinuous(int count) {
    std::vector<std::size_t> hosts;
    for (std::size_t i = 0; i < entities_.size(); ++i)
      if (entities_[i].discontinuous()) hosts.push_back(i);
    if (hosts.empty()) return std::nullopt;
    const Entity& host = entities_[hosts[rng_.index(hosts.size())]];
    if (rng_.bernoulli(0.5)) {
      const Fragment first = host.fragments.front();
      auto rest = chain(first.end + rng_.between(2, 4), count - 1);
      if (!rest) return std::nullopt;
      rest->insert(rest->begin(), first);
      return Entity{host.type, std::move(*rest)};
    }
    const Fragment last = host.fragments.back();
    // Build the leading fragments leftwards from the shared last fragment.
    std::vector<Fragment> frags{last};
    int pos = last.start;
    for (int i = 1; i < count; ++i) {
      pos -= rng_.between(1, 3);
      const int len = rng_.between(1, 2);
      const int b = pos - len + 1 - 1;
      if (!free_span(b, b + len - 1)) return std::nullopt;
      frags.insert(frags.begin(), Fragment{b, b + len - 1});
      pos = b;
    }
    return Entity{host.type, std::move(frags)};
  }

  std::optional<Entity> nested() {
    std::vector<Fragment> candidates;
    for (const Entity& e : entities_)
      for (const Fragment& f : e.fragments)
        if (f.length() >= 2) candidates.push_back(f);
    if (candidates.empty()) return std::nullopt;
    const Fragment outer = candidates[rng_.index(candidates.size())];
    const int len = rng_.between(1, outer.length() - 1);
    const int b = rng_.between(outer.start, outer.end - len + 1);
    return Entity{random_type(), {{b, b + len - 1}}};
  }

  // Partially overlaps an existing fragment and extends past one side.
  std::optional<Entity> crossing() {
    if (entities_.empty()) return std::nullopt;
    const Entity& host = entities_[rng_.index(entities_.size())];
    const Fragment f = host.fragments[rng_.index(host.fragments.size())];
    const int ext = rng_.between(1, 2);
    if (rng_.bernoulli(0.5)) {
      const int b = rng_.between(f.start + (f.length() > 1 ? 1 : 0), f.end);
      if (!free_span(f.end + 1, f.end + ext)) return std::nullopt;
      return Entity{random_type(), {{b, f.end + ext}}};
    }
    const int e = rng_.between(f.start, f.end - (f.length() > 1 ? 1 : 0));
    if (!free_span(f.start - ext, f.start - 1)) return std::nullopt;
    return Entity{random_type(), {{f.start - ext, e}}};
  }

  // Rejects duplicates and same-type prefix pairs (leaf-only decoding could
  // never emit the shorter entity of such a pair).
  bool acceptable(const Entity& e) const {
    for (const Fragment& f : e.fragments)
      if (f.start < 0 || f.end >= length() || f.start > f.end) return false;
    for (const Entity& o : entities_) {
      if (o.type != e.type) continue;
      const std::size_t common = std::min(o.fragments.size(), e.fragments.size());
      if (std::equal(o.fragments.begin(), o.fragments.begin() + common, e.fragments.begin())) {
        return false;
      }
    }
    return true;
  }

  void commit(Entity e) {
    const std::size_t idx = entities_.size();
    overlapping_.push_back(false);
    std::set<std::size_t> touched;
    for (const Fragment& f : e.fragments) {
      for (int t = f.start; t <= f.end; ++t) {
        for (std::size_t o : owners_[t]) touched.insert(o);
        owners_[t].push_back(idx);
      }
    }
    if (!touched.empty()) {
      overlapping_[idx] = true;
      for (std::size_t o : touched) overlapping_[o] = true;
    }
    entities_.push_back(std::move(e));
  }

  std::vector<std::vector<std::size_t>> owners_;
  std::vector<Entity> entities_;
  std::vector<bool> overlapping_;
  std::map<std::string, std::size_t> kinds_;
  const SynthConfig& cfg_;
  Rng& rng_;
};

}  // namespace

std::string type_name(std::size_t k) { return "T" + std::to_string(k); }

void validate(const SynthConfig& c) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  prob(c.p_discontinuous, "p_discontinuous");
  prob(c.p_three_fragments, "p_three_fragments");
  prob(c.p_nested, "p_nested");
  prob(c.p_overlap, "p_overlap");
  prob(c.p_shared_fragment, "p_shared_fragment");
  if (c.p_discontinuous + c.p_nested + c.p_overlap > 1.0 + 1e-12) {
    throw ConfigError("p_discontinuous + p_nested + p_overlap exceeds 1");
  }
  if (c.num_types == 0) throw ConfigError("num_types must be at least 1");
  if (c.vocab_size == 0 || c.entity_vocab == 0) throw ConfigError("vocabularies must be non-empty");
  if (c.min_length == 0 || c.min_length > c.max_length) {
    throw ConfigError("need 1 <= min_length <= max_length");
  }
  if (c.min_entities > c.max_entities) throw ConfigError("min_entities exceeds max_entities");
  // A 2-fragment entity needs 3 tokens, a 3-fragment one needs 5.
  if (c.p_discontinuous > 0.0) {
    const std::size_t needed = c.p_three_fragments > 0.0 ? 5 : 3;
    if (c.min_length < needed) {
      throw ConfigError("min_length " + std::to_string(c.min_length) +
                        " is too short for the requested discontinuous entities (needs " +
                        std::to_string(needed) + ")");
    }
  }
  if (c.p_nested > 0.0 && c.max_length < 2) throw ConfigError("nesting needs max_length >= 2");
}

SynthCorpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  SynthCorpus out;
  SynthBookkeeping& book = out.bookkeeping;
  for (std::size_t s = 0; s < cfg.sentences; ++s) {
    const std::size_t len = static_cast<std::size_t>(
        rng.between(static_cast<int>(cfg.min_length), static_cast<int>(cfg.max_length)));
    const int wanted = rng.between(static_cast<int>(cfg.min_entities), static_cast<int>(cfg.max_entities));
    std::vector<Kind> kinds;
    for (int i = 0; i < wanted; ++i) {
      const double r = rng.uniform();
      if (r < cfg.p_discontinuous) {
        kinds.push_back(Kind::kDiscontinuous);
      } else if (r < cfg.p_discontinuous + cfg.p_nested) {
        kinds.push_back(Kind::kNested);
      } else if (r < cfg.p_discontinuous + cfg.p_nested + cfg.p_overlap) {
        kinds.push_back(Kind::kCrossing);
      } else {
        kinds.push_back(Kind::kFlat);
      }
    }
    // Hosts first so nested and crossing entities have something to attach to.
    std::stable_partition(kinds.begin(), kinds.end(), [](Kind k) { return !needs_host(k); });

    Builder builder(len, cfg, rng);
    for (Kind k : kinds) builder.place(k);

    AnnotatedSentence sentence;
    sentence.tokens.resize(len);
    for (std::string& t : sentence.tokens) t = "w" + std::to_string(rng.index(cfg.vocab_size));
    for (const Entity& e : builder.entities()) {
      const std::size_t type_index = std::stoul(e.type.substr(1));
      for (const Fragment& f : e.fragments) {
        for (int t = f.start; t <= f.end; ++t) {
          sentence.tokens[t] =
              "e" + std::to_string(type_index) + "_" + std::to_string(rng.index(cfg.entity_vocab));
        }
      }
    }
    sentence.entities = builder.entities();

    ++book.sentences;
    bool has_discontinuous = false;
    for (std::size_t i = 0; i < sentence.entities.size(); ++i) {
      const Entity& e = sentence.entities[i];
      ++book.entities;
      ++book.fragment_histogram[e.fragments.size()];
      if (builder.overlapping()[i]) ++book.overlapping;
      if (e.fragments.size() > 1) {
        ++book.discontinuous;
        has_discontinuous = true;
      }
    }
    if (has_discontinuous) ++book.discontinuous_sentences;
    for (const auto& [k, v] : builder.kinds()) book.kinds[k] += v;
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace s2f
