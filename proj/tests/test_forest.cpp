#include <doctest.h>

#include "random_entities.hpp"
#include "s2f/errors.hpp"
#include "s2f/forest.hpp"

using namespace s2f;

TEST_CASE("shared first fragment becomes one node with two children") {
  const std::vector<Entity> es{Entity{"T", {{1, 1}, {3, 4}}}, Entity{"T", {{1, 1}, {6, 7}}}};
  const EntityForest f = build_forest(es);
  REQUIRE(f.trees().size() == 1);
  const auto& roots = f.trees().at("T");
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].fragment == Fragment{1, 1});
  CHECK_FALSE(roots[0].entity_end);
  REQUIRE(roots[0].children.size() == 2);
  CHECK(roots[0].children[0].fragment == Fragment{3, 4});
  CHECK(roots[0].children[1].fragment == Fragment{6, 7});
  CHECK(roots[0].children[0].entity_end);
  CHECK(flatten_forest(f) == es);
  CHECK(f.depth() == 2);
  CHECK(f.node_count() == 3);
}

TEST_CASE("empty set and separate types") {
  CHECK(build_forest({}).empty());
  CHECK(flatten_forest(EntityForest{}).empty());
  const std::vector<Entity> es{Entity{"T", {{0, 1}}}, Entity{"U", {{0, 1}}}};
  const EntityForest f = build_forest(es);
  CHECK(f.trees().size() == 2);
  CHECK(f.trees().at("T").size() == 1);
  CHECK(f.trees().at("U").size() == 1);
  CHECK(flatten_forest(f) == es);
}

TEST_CASE("a single end-marked node flattens to one entity") {
  EntityForest f;
  f.insert(Entity{"T", {{0, 0}}});
  CHECK(flatten_forest(f) == std::vector<Entity>{Entity{"T", {{0, 0}}}});
}

TEST_CASE("an entity that is a prefix of another keeps its end marker") {
  const std::vector<Entity> es{Entity{"T", {{0, 0}}}, Entity{"T", {{0, 0}, {2, 2}}}};
  const EntityForest f = build_forest(es);
  CHECK(f.trees().at("T")[0].entity_end);
  CHECK(flatten_forest(f) == es);
}

TEST_CASE("more than three fragments is rejected") {
  EntityForest f;
  CHECK_THROWS_AS(f.insert(Entity{"T", {{0, 0}, {2, 2}, {4, 4}, {6, 6}}}), ValidationError);
}

TEST_CASE("insertion order does not matter and JSON is canonical") {
  std::vector<Entity> es{Entity{"B", {{2, 3}}}, Entity{"A", {{0, 0}, {5, 5}}}, Entity{"A", {{0, 0}, {3, 3}}}};
  const EntityForest f1 = build_forest(es);
  std::reverse(es.begin(), es.end());
  const EntityForest f2 = build_forest(es);
  CHECK(f1 == f2);
  CHECK(forest_to_json(f1) == forest_to_json(f2));
  CHECK(forest_to_json(f1).find("\"root\"") != std::string::npos);
}

TEST_CASE("round trip on random entity sets") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = rng.between(1, 15);
    const auto es = s2f::testing::random_entity_set(rng, n, 3, rng.between(0, 8));
    for (const Entity& e : es) validate_entity(e, static_cast<std::size_t>(n));
    CHECK(flatten_forest(build_forest(es)) == es);
  }
}
