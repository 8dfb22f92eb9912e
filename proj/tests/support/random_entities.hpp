#pragma once

// Random valid entity sets for property tests. Sets deliberately include
// shared prefixes, nesting and partial overlap.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "s2f/corpus.hpp"
#include "s2f/rng.hpp"

namespace s2f::testing {

inline std::vector<Fragment> random_fragments(Rng& rng, int n, int count) {
  std::vector<Fragment> frags;
  int pos = rng.between(0, std::max(0, n - 1));
  for (int i = 0; i < count; ++i) {
    if (i > 0) pos += rng.between(0, 2);
    if (pos >= n) break;
    const int end = std::min(n - 1, pos + rng.between(0, 2));
    frags.push_back({pos, end});
    pos = end + 1;
  }
  return frags;
}

inline std::vector<Entity> random_entity_set(Rng& rng, int n, int types, int count) {
  std::set<Entity> out;
  std::vector<Entity> made;
  for (int attempt = 0; attempt < count * 4 && static_cast<int>(out.size()) < count; ++attempt) {
    Entity e;
    e.type = "T" + std::to_string(rng.index(static_cast<std::size_t>(types)));
    const int roll = rng.between(0, 9);
    if (!made.empty() && roll < 3) {
      // Extend or branch off an existing entity's prefix (shared fragments).
      const Entity& host = made[rng.index(made.size())];
      e.type = host.type;
      const std::size_t keep = 1 + rng.index(host.fragments.size());
      e.fragments.assign(host.fragments.begin(), host.fragments.begin() + keep);
      if (e.fragments.size() < kMaxFragments) {
        auto tail = random_fragments(rng, n, 1);
        if (!tail.empty()) {
          const int start = e.fragments.back().end + 1 + rng.between(0, 2);
          if (start < n) e.fragments.push_back({start, std::min(n - 1, start + rng.between(0, 1))});
        }
      }
    } else if (!made.empty() && roll < 5) {
      // Nested inside an existing fragment.
      const Entity& host = made[rng.index(made.size())];
      const Fragment f = host.fragments[rng.index(host.fragments.size())];
      const int b = rng.between(f.start, f.end);
      e.fragments = {{b, rng.between(b, f.end)}};
    } else {
      e.fragments = random_fragments(rng, n, rng.between(1, static_cast<int>(kMaxFragments)));
    }
    if (e.fragments.empty()) continue;
    if (out.insert(e).second) made.push_back(e);
  }
  return {out.begin(), out.end()};
}

}  // namespace s2f::testing
