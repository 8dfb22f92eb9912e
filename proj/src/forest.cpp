#include "s2f/forest.hpp"

#include <algorithm>
#include <functional>

#include <json.hpp>

#include "s2f/errors.hpp"

namespace s2f {

namespace {

auto find_position(std::vector<ForestNode>& nodes, const Fragment& f) {
  return std::lower_bound(nodes.begin(), nodes.end(), f,
                          [](const ForestNode& n, const Fragment& x) { return n.fragment < x; });
}

ForestNode& find_or_insert(std::vector<ForestNode>& nodes, const Fragment& f) {
  auto it = find_position(nodes, f);
  if (it == nodes.end() || it->fragment != f) it = nodes.insert(it, ForestNode{f, false, {}});
  return *it;
}

std::size_t subtree_depth(const ForestNode& n) {
  std::size_t best = 0;
  for (const ForestNode& c : n.children) best = std::max(best, subtree_depth(c));
  return best + 1;
}

std::size_t subtree_size(const ForestNode& n) {
  std::size_t total = 1;
  for (const ForestNode& c : n.children) total += subtree_size(c);
  return total;
}

}  // namespace

ForestNode* ForestNode::child(const Fragment& f) {
  auto it = find_position(children, f);
  return it != children.end() && it->fragment == f ? &*it : nullptr;
}

const ForestNode* ForestNode::child(const Fragment& f) const {
  return const_cast<ForestNode*>(this)->child(f);
}

ForestNode& ForestNode::child_or_insert(const Fragment& f) { return find_or_insert(children, f); }

void EntityForest::insert(const Entity& e) {
  if (e.fragments.empty()) throw ValidationError("entity " + describe(e) + ": no fragments");
  if (e.fragments.size() > kMaxFragments) {
    throw ValidationError("entity " + describe(e) + " has more than " +
                          std::to_string(kMaxFragments) + " fragments");
  }
  Entity sorted = normalized(e);
  ForestNode* node = &find_or_insert(trees_[sorted.type], sorted.fragments[0]);
  for (std::size_t i = 1; i < sorted.fragments.size(); ++i) {
    node = &node->child_or_insert(sorted.fragments[i]);
  }
  node->entity_end = true;
}

std::size_t EntityForest::depth() const {
  std::size_t best = 0;
  for (const auto& [type, roots] : trees_)
    for (const ForestNode& r : roots) best = std::max(best, subtree_depth(r));
  return best;
}

std::size_t EntityForest::node_count() const {
  std::size_t total = 0;
  for (const auto& [type, roots] : trees_)
    for (const ForestNode& r : roots) total += subtree_size(r);
  return total;
}

EntityForest build_forest(std::span<const Entity> entities) {
  EntityForest forest;
  for (const Entity& e : entities) forest.insert(e);
  return forest;
}

std::vector<Entity> flatten_forest(const EntityForest& forest) {
  std::vector<Entity> out;
  std::vector<Fragment> path;
  for (const auto& [type, roots] : forest.trees()) {
    std::function<void(const ForestNode&)> walk = [&](const ForestNode& n) {
      path.push_back(n.fragment);
      if (n.entity_end) out.push_back(Entity{type, path});
      for (const ForestNode& c : n.children) walk(c);
      path.pop_back();
    };
    for (const ForestNode& r : roots) walk(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string forest_to_json(const EntityForest& forest) {
  using nlohmann::json;
  std::function<json(const ForestNode&)> node_json = [&](const ForestNode& n) {
    json children = json::array();
    for (const ForestNode& c : n.children) children.push_back(node_json(c));
    return json{{"fragment", {n.fragment.start, n.fragment.end}},
                {"end", n.entity_end},
                {"children", std::move(children)}};
  };
  json trees = json::object();
  for (const auto& [type, roots] : forest.trees()) {
    json arr = json::array();
    for (const ForestNode& r : roots) arr.push_back(node_json(r));
    trees[type] = std::move(arr);
  }
  return json{{"root", "BOS"}, {"trees", std::move(trees)}}.dump();
}

}  // namespace s2f
