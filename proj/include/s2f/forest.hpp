#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "s2f/corpus.hpp"

namespace s2f {

// A fragment node. `entity_end` marks that the root-to-here fragment list is
// itself an entity, so an entity and a longer entity extending it can both
// be represented.
struct ForestNode {
  Fragment fragment;
  bool entity_end = false;
  std::vector<ForestNode> children;  // a set: unique fragments, kept sorted

  ForestNode* child(const Fragment& f);
  const ForestNode* child(const Fragment& f) const;
  ForestNode& child_or_insert(const Fragment& f);

  friend bool operator==(const ForestNode&, const ForestNode&) = default;
};

// BOS-rooted forest: one tree per entity type; the children of a type root
// are first fragments, their children second fragments, and so on.
class EntityForest {
 public:
  // Prefix-merges e into the forest. Throws ValidationError when e has more
  // than kMaxFragments fragments.
  void insert(const Entity& e);

  const std::map<std::string, std::vector<ForestNode>>& trees() const { return trees_; }
  std::map<std::string, std::vector<ForestNode>>& trees() { return trees_; }
  bool empty() const { return trees_.empty(); }
  // Longest fragment path (0 for an empty forest).
  std::size_t depth() const;
  std::size_t node_count() const;

  friend bool operator==(const EntityForest&, const EntityForest&) = default;

 private:
  std::map<std::string, std::vector<ForestNode>> trees_;
};

EntityForest build_forest(std::span<const Entity> entities);
// One entity per node carrying an end marker, in canonical (sorted) order.
std::vector<Entity> flatten_forest(const EntityForest& forest);
// Canonical JSON: types sorted, children sorted by (start, end).
std::string forest_to_json(const EntityForest& forest);

}  // namespace s2f
