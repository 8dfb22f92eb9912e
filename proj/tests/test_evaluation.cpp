#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "oracles.hpp"
#include "s2f/errors.hpp"
#include "s2f/inference.hpp"
#include "s2f/synthetic.hpp"
#include "tiny_models.hpp"

using namespace s2f;
using namespace s2f::testing;

namespace {

Entity ent(std::string type, std::vector<Fragment> frags) { return {std::move(type), std::move(frags)}; }

OverlapPattern pattern_of(const Entity& e, const EntitySet& all) { return overlap_pattern(e, all); }

}  // namespace

TEST_CASE("entity matching") {
  const Entity g = ent("A", {{1, 1}, {3, 4}});
  CHECK(entity_match(g, g));
  CHECK(entity_match(g, ent("A", {{3, 4}, {1, 1}})));
  CHECK_FALSE(entity_match(g, ent("B", {{1, 1}, {3, 4}})));
  CHECK_FALSE(entity_match(g, ent("A", {{1, 1}})));
}

TEST_CASE("hand-counted scores") {
  const std::vector<EntitySet> gold{{ent("A", {{0, 0}}), ent("B", {{2, 3}})}};
  Prf p = prf(gold, gold);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.f1 == 1.0);

  p = prf(gold, std::vector<EntitySet>{{}});
  CHECK(p.precision == 0.0);
  CHECK(p.recall == 0.0);
  CHECK(p.f1 == 0.0);

  p = prf(gold, std::vector<EntitySet>{{ent("A", {{0, 0}}), ent("B", {{2, 2}})}});
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.5);
  CHECK(p.f1 == 0.5);

  p = prf(std::vector<EntitySet>{{}}, std::vector<EntitySet>{{}});
  CHECK(p.f1 == 0.0);
  CHECK_THROWS_AS(prf(gold, std::vector<EntitySet>{}), ContractViolation);
}

TEST_CASE("duplicate predictions count once") {
  const std::vector<EntitySet> gold{{ent("A", {{0, 0}})}};
  const std::vector<EntitySet> pred{{ent("A", {{0, 0}}), ent("A", {{0, 0}})}};
  CHECK(prf(gold, pred).precision == 1.0);
}

TEST_CASE("scores agree with the exhaustive matcher and ignore order") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntitySet> gold, pred;
    const int sentences = rng.between(1, 6);
    for (int s = 0; s < sentences; ++s) {
      const int n = rng.between(1, 12);
      gold.push_back(random_entity_set(rng, n, 3, rng.between(0, 4)));
      pred.push_back(perturb(rng, gold.back(), n, 3));
    }
    const Counts c = exhaustive_counts(gold, pred);
    const Prf p = prf(gold, pred);
    CHECK(counts_equal(p, c));
    CHECK((p.f1 == 0.0) == (p.true_positives == 0));
    CHECK(p.f1 >= 0.0);
    CHECK(p.f1 <= 1.0);

    std::vector<EntitySet> g2 = gold, p2 = pred;
    std::reverse(g2.begin(), g2.end());
    std::reverse(p2.begin(), p2.end());
    for (auto& set : p2) rng.shuffle(set);
    for (auto& set : g2) rng.shuffle(set);
    const Prf q = prf(g2, p2);
    CHECK(q.f1 == p.f1);
    CHECK(counts_equal(q, c));
  }
}

TEST_CASE("per-type scores partition the counts") {
  const CraftedCorpus c = crafted_corpus();
  const auto by_type = per_type_prf(c.gold, c.predicted);
  REQUIRE(by_type.size() == 2);
  std::size_t tp = 0, np = 0, ng = 0;
  for (const auto& [t, p] : by_type) {
    tp += p.true_positives;
    np += p.predicted;
    ng += p.gold;
  }
  CHECK(tp == c.overall.tp);
  CHECK(np == c.overall.predicted);
  CHECK(ng == c.overall.gold);
}

TEST_CASE("discontinuous subsets of a crafted corpus") {
  const CraftedCorpus c = crafted_corpus();
  CHECK(counts_equal(prf(c.gold, c.predicted), c.overall));
  const DiscontinuousScores d = discontinuous_subsets(c.gold, c.predicted);
  CHECK(counts_equal(d.sentences, c.sentences));
  CHECK(counts_equal(d.entities, c.entities));
}

TEST_CASE("subsets of flat data are empty") {
  const std::vector<EntitySet> gold{{ent("A", {{0, 1}})}, {ent("B", {{2, 2}})}};
  const DiscontinuousScores d = discontinuous_subsets(gold, gold);
  CHECK(d.sentences.gold == 0);
  CHECK(d.entities.gold == 0);
}

TEST_CASE("subset sizes match generator bookkeeping") {
  SynthConfig cfg;
  cfg.sentences = 120;
  const SynthCorpus synth = generate_synthetic(cfg, 4);
  std::vector<EntitySet> gold;
  for (const auto& s : synth.sentences) gold.push_back(s.entities);
  const DiscontinuousScores d = discontinuous_subsets(gold, gold);
  CHECK(d.entities.gold == synth.bookkeeping.discontinuous);
  std::size_t in_subset = 0;
  for (const auto& s : synth.sentences) {
    if (std::any_of(s.entities.begin(), s.entities.end(), [](const Entity& e) { return e.discontinuous(); })) {
      in_subset += s.entities.size();
    }
  }
  CHECK(d.sentences.gold == in_subset);
  CHECK(synth.bookkeeping.discontinuous_sentences > 0);
}

TEST_CASE("overlap patterns") {
  const Entity alone = ent("A", {{0, 1}});
  CHECK(pattern_of(alone, {alone}) == OverlapPattern::kNone);

  const Entity l1 = ent("A", {{0, 0}, {2, 2}});
  const Entity l2 = ent("A", {{0, 0}, {4, 4}});
  CHECK(pattern_of(l1, {l1, l2}) == OverlapPattern::kLeft);
  CHECK(pattern_of(l2, {l1, l2}) == OverlapPattern::kLeft);

  const Entity r1 = ent("A", {{0, 0}, {4, 4}});
  const Entity r2 = ent("B", {{2, 2}, {4, 4}});
  CHECK(pattern_of(r1, {r1, r2}) == OverlapPattern::kRight);
  CHECK(pattern_of(r2, {r1, r2}) == OverlapPattern::kRight);

  const Entity both = ent("A", {{0, 0}, {2, 2}, {4, 4}});
  const EntitySet three{both, ent("B", {{0, 0}}), ent("B", {{4, 4}})};
  CHECK(pattern_of(both, three) == OverlapPattern::kMultiple);
  const EntitySet middle{both, ent("B", {{2, 3}})};
  CHECK(pattern_of(both, middle) == OverlapPattern::kMultiple);

  const Entity a = ent("A", {{0, 2}});
  const Entity b = ent("B", {{2, 4}});
  CHECK(pattern_of(a, {a, b}) == OverlapPattern::kRight);
  CHECK(pattern_of(b, {a, b}) == OverlapPattern::kLeft);
  const Entity inner = ent("B", {{1, 1}});
  CHECK(pattern_of(inner, {a, inner}) == OverlapPattern::kMultiple);
}

TEST_CASE("every entity gets exactly one pattern") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const EntitySet set = random_entity_set(rng, 10, 2, rng.between(1, 5));
    std::vector<EntitySet> gold{set};
    std::size_t total = 0;
    for (const auto& [pattern, p] : overlap_pattern_prf(gold, gold)) {
      total += p.gold;
      CHECK(p.true_positives == p.gold);
    }
    CHECK(total == set.size());
  }
}

TEST_CASE("patterns are judged within each side") {
  const std::vector<EntitySet> gold{{ent("A", {{0, 0}, {2, 2}}), ent("A", {{0, 0}, {4, 4}})}};
  const std::vector<EntitySet> pred{{ent("A", {{0, 0}, {2, 2}})}};
  auto scores = overlap_pattern_prf(gold, pred);
  CHECK(scores[OverlapPattern::kLeft].gold == 2);
  CHECK(scores[OverlapPattern::kLeft].predicted == 0);
  CHECK(scores[OverlapPattern::kNone].predicted == 1);
  CHECK(scores[OverlapPattern::kNone].true_positives == 0);
}

TEST_CASE("report rendering") {
  const CraftedCorpus c = crafted_corpus();
  EvalReport r = evaluate(c.gold, c.predicted);
  r.throughput.push_back({20, 100, 2.0, 50.0});
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["sentences"] == 10);
  CHECK(j["overall"]["tp"] == 9);
  CHECK(j["discontinuous"]["sentences"]["gold"] == 8);
  CHECK(j["discontinuous"]["entities"]["predicted"] == 5);
  CHECK(j["overlap"].contains("left"));
  CHECK(j["per_type"].contains("B"));
  CHECK(j["throughput"][0]["sentences_per_second"] == 50.0);
  CHECK(report_to_text(r).find("overall") != std::string::npos);

  const EvalReport plain = evaluate(c.gold, c.predicted, EvalOptions{false, false});
  const auto k = nlohmann::json::parse(report_to_json(plain));
  CHECK_FALSE(k.contains("discontinuous"));
  CHECK_FALSE(k.contains("overlap"));
}

TEST_CASE("error dump lists only differing sentences") {
  const CraftedCorpus c = crafted_corpus();
  Corpus gold;
  for (const EntitySet& g : c.gold) gold.push_back({std::vector<std::string>(8, "w"), g});
  std::ostringstream out;
  write_error_dump(out, gold, c.predicted);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::size_t> ids;
  while (std::getline(in, line)) ids.push_back(nlohmann::json::parse(line)["sentence"]);
  CHECK(ids == std::vector<std::size_t>{2, 3, 4, 6, 8, 9});
}

TEST_CASE("throughput measurement") {
  const S2fModel m(tiny_model(), types(2), 3);
  SynthConfig cfg;
  cfg.sentences = 40;
  const Corpus corpus = generate_synthetic(cfg, 9).sentences;
  const ThroughputResult a = measure_throughput(m, corpus, DecodeConfig{}, 20, 9);
  CHECK(a.batch_size == 20);
  CHECK(a.sentences == 40);
  CHECK(a.seconds > 0.0);
  CHECK(a.sentences_per_second == doctest::Approx(40.0 / a.seconds));

  Corpus doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  const ThroughputResult b = measure_throughput(m, doubled, DecodeConfig{}, 20, 9);
  CHECK(b.sentences == 80);
  CHECK(b.sentences_per_second > 0.8 * a.sentences_per_second);
  CHECK(b.sentences_per_second < 1.2 * a.sentences_per_second);
}
