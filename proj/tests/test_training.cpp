#include <doctest.h>

#include <cmath>
#include <limits>

#include "s2f/config.hpp"
#include "s2f/errors.hpp"
#include "s2f/synthetic.hpp"
#include "s2f/training.hpp"
#include "tiny_models.hpp"

using namespace s2f;
using namespace s2f::testing;

namespace {

AnnotatedSentence sentence(std::size_t n, std::vector<Entity> entities) {
  AnnotatedSentence s;
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back("t" + std::to_string(i));
  s.entities = std::move(entities);
  return s;
}

Corpus small_corpus(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.sentences = n;
  cfg.num_types = 2;
  cfg.min_length = 6;
  cfg.max_length = 9;
  cfg.min_entities = 1;
  cfg.max_entities = 2;
  return generate_synthetic(cfg, seed).sentences;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.learning_rate = 1e-2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("teacher forcing instances follow the gold forest") {
  const TypeInventory inv = types(2);

  SUBCASE("three fragments") {
    const auto s = sentence(8, {{"T1", {{0, 0}, {2, 3}, {5, 5}}}});
    const auto inst = teacher_forcing_expand(s, 0, inv, TrainMode::kDiscontinuous);
    REQUIRE(inst.size() == 3);
    CHECK(inst[0].depth == 1);
    CHECK_FALSE(inst[0].type.has_value());
    CHECK(inst[0].gold == std::vector<TypedFragment>{{1, {0, 0}, 1.0}});
    CHECK(inst[1].depth == 2);
    CHECK(inst[1].type == 1u);
    CHECK(inst[1].prefix == std::vector<Fragment>{{0, 0}});
    CHECK(inst[1].mask.min_start == 1);
    CHECK(inst[1].gold == std::vector<TypedFragment>{{1, {2, 3}, 1.0}});
    CHECK(inst[2].depth == 3);
    CHECK(inst[2].mask.min_start == 4);
    CHECK(inst[2].gold == std::vector<TypedFragment>{{1, {5, 5}, 1.0}});
  }
  SUBCASE("a single fragment ends with an empty target") {
    const auto s = sentence(4, {{"T0", {{1, 2}}}});
    const auto inst = teacher_forcing_expand(s, 0, inv, TrainMode::kDiscontinuous);
    REQUIRE(inst.size() == 2);
    CHECK(inst[1].depth == 2);
    CHECK(inst[1].gold.empty());
    CHECK(inst[1].mask.min_start == 3);
  }
  SUBCASE("a shared first fragment has two children") {
    const auto s = sentence(8, {{"T0", {{0, 1}, {3, 3}}}, {"T0", {{0, 1}, {5, 6}}}});
    const auto inst = teacher_forcing_expand(s, 0, inv, TrainMode::kDiscontinuous);
    REQUIRE(inst.size() == 4);
    CHECK(inst[0].gold.size() == 1);
    CHECK(inst[1].gold.size() == 2);
    CHECK(inst[2].gold.empty());
    CHECK(inst[3].gold.empty());
  }
  SUBCASE("nested mode stops at depth one") {
    const auto s = sentence(6, {{"T0", {{0, 3}}}, {"T1", {{1, 2}}}});
    const auto inst = teacher_forcing_expand(s, 0, inv, TrainMode::kNested);
    REQUIRE(inst.size() == 1);
    CHECK(inst[0].gold.size() == 2);
    const auto bad = sentence(6, {{"T0", {{0, 0}, {2, 2}}}});
    CHECK_THROWS_AS(teacher_forcing_expand(bad, 0, inv, TrainMode::kNested), ContractViolation);
  }
}

TEST_CASE("no gold cell is ever masked out") {
  SynthConfig cfg;
  cfg.sentences = 300;
  const Corpus corpus = generate_synthetic(cfg, 13).sentences;
  const TypeInventory inv = TypeInventory::from_corpus(corpus);
  std::size_t instances = 0;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const std::size_t n = corpus[s].tokens.size();
    for (const StepInstance& inst : teacher_forcing_expand(corpus[s], s, inv, TrainMode::kDiscontinuous)) {
      ++instances;
      const Tensor gold = gold_tensor(n, inv.size(), inst.gold);
      const Tensor mask = mask_tensor(n, inv.size(), inst.mask);
      for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == 1.0) CHECK(mask[i] == 1.0);
      }
      for (const TypedFragment& f : inst.gold) {
        if (inst.type) CHECK(f.type == *inst.type);
      }
    }
  }
  CHECK(instances > corpus.size());
}

TEST_CASE("nested mode refuses deeper instances") {
  S2fModel m(tiny_model(), types(1), 2);
  const auto s = sentence(6, {{"T0", {{0, 0}, {2, 2}}}});
  const auto inst = teacher_forcing_expand(s, 0, m.types(), TrainMode::kDiscontinuous);
  CHECK_THROWS_AS(compute_loss(m, s, inst, TrainMode::kNested), ContractViolation);
  const auto flat = sentence(6, {{"T0", {{0, 3}}}, {"T0", {{1, 1}}}});
  const auto depth1 = teacher_forcing_expand(flat, 0, m.types(), TrainMode::kNested);
  CHECK(compute_loss(m, flat, depth1, TrainMode::kNested) > 0.0);
}

TEST_CASE("entities beyond three fragments are dropped") {
  Corpus c{sentence(10, {{"T0", {{0, 0}, {2, 2}, {4, 4}, {6, 6}}}, {"T0", {{8, 9}}}})};
  CHECK(drop_long_entities(c) == 1);
  CHECK(c[0].entities.size() == 1);
}

TEST_CASE("loss decomposes over instances") {
  S2fModel m(tiny_model(), types(2), 4);
  const auto s = sentence(8, {{"T1", {{0, 0}, {2, 3}, {5, 5}}}, {"T0", {{1, 1}}}});
  const auto inst = teacher_forcing_expand(s, 0, m.types(), TrainMode::kDiscontinuous);
  const double total = compute_loss(m, s, inst, TrainMode::kDiscontinuous);
  double sum = 0.0;
  for (const StepInstance& i : inst) {
    sum += compute_loss(m, s, std::span(&i, 1), TrainMode::kDiscontinuous);
  }
  CHECK(total == doctest::Approx(sum).epsilon(1e-12));
  CHECK(compute_loss(m, s, {}, TrainMode::kDiscontinuous) == 0.0);
}

TEST_CASE("a depth-one instance costs the span loss of the root grid") {
  S2fModel m(tiny_model(), types(2), 4);
  const auto s = sentence(5, {{"T0", {{1, 2}}}});
  const auto inst = teacher_forcing_expand(s, 0, m.types(), TrainMode::kDiscontinuous);
  Graph g(&m.params(), false);
  const EncoderOutput enc = m.encode(g, s.tokens);
  const DecoderState root =
      m.decoder().advance(g, m.decoder().init_state(g, enc), m.decoder().bos(g), 3);
  const Tensor logits = g.value(m.detector().logits(g, root.scratchpad));
  const double expect =
      span_loss(logits, gold_tensor(5, 2, inst[0].gold), mask_tensor(5, 2, SpanMask{}));
  CHECK(compute_loss(m, s, std::span(inst.data(), 1), TrainMode::kDiscontinuous) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("AdamW step matches a hand computation") {
  ParameterStore store;
  store.add("w.weight", Tensor(1, 2, 0.5));
  store.add("w.bias", Tensor(1, 1, 0.25));
  GradientSet grads(store);
  grads[store.id(0)](0, 0) = 0.1;
  grads[store.id(0)](0, 1) = -2.0;
  grads[store.id(1)](0, 0) = 0.3;
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.1;
  AdamW opt(store, cfg);
  opt.step(store, grads);
  // After one step m/c1 = g and sqrt(v/c2) = |g|, so the update is sign(g).
  const auto f = [](double x) { return static_cast<double>(static_cast<float>(x)); };
  CHECK(store.value(store.id(0))(0, 0) == f(0.5 - 0.01 * (0.1 / (0.1 + 1e-8) + 0.1 * 0.5)));
  CHECK(store.value(store.id(0))(0, 1) == f(0.5 - 0.01 * (-2.0 / (2.0 + 1e-8) + 0.1 * 0.5)));
  CHECK(store.value(store.id(1))(0, 0) == f(0.25 - 0.01 * (0.3 / (0.3 + 1e-8))));
  CHECK(opt.steps() == 1);
}

TEST_CASE("global norm clipping") {
  ParameterStore store;
  store.add("a", Tensor(1, 2));
  GradientSet grads(store);
  grads[store.id(0)](0, 0) = 3.0;
  grads[store.id(0)](0, 1) = 4.0;
  CHECK(clip_global_norm(grads, 10.0) == 5.0);
  CHECK(grads[store.id(0)](0, 0) == 3.0);
  CHECK(clip_global_norm(grads, 1.0) == 5.0);
  CHECK(grads.global_norm() == doctest::Approx(1.0));
  CHECK(grads[store.id(0)](0, 1) == doctest::Approx(0.8));
}

TEST_CASE("training loss falls epoch over epoch") {
  SynthConfig synth;
  synth.sentences = 50;
  const Corpus c = generate_synthetic(synth, 7).sentences;
  const RunConfig desk = preset_config("desk");
  TrainConfig cfg = desk.train;
  cfg.epochs = 5;
  const TrainResult r = train(c, {}, desk.model, cfg);
  REQUIRE(r.history.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) {
    CAPTURE(e);
    CHECK(r.history[e].train_loss < r.history[e - 1].train_loss);
  }
}

TEST_CASE("training is reproducible") {
  const Corpus c = small_corpus(6, 3);
  const TrainResult a = train(c, c, tiny_model(), quick(3));
  const TrainResult b = train(c, c, tiny_model(), quick(3));
  CHECK(a.best.params() == b.best.params());
  CHECK(a.best_epoch == b.best_epoch);
  for (std::size_t e = 0; e < 3; ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
  TrainConfig other = quick(3);
  other.seed = 6;
  CHECK_FALSE(train(c, c, tiny_model(), other).best.params() == a.best.params());
}

TEST_CASE("one discontinuous sentence is learned") {
  const Corpus c{{{"x", "a", "y", "b", "z"}, {{"T", {{0, 0}, {2, 3}}}}}};
  TrainConfig cfg = quick(300);
  cfg.target_f1 = 1.0;
  const TrainResult r = train(c, c, tiny_model(), cfg);
  CHECK(r.best_f1 == 1.0);
  CHECK(r.best.predict(c[0].tokens, cfg.decode) == c[0].entities);
}

TEST_CASE("patience stops a run without progress") {
  const Corpus c = small_corpus(4, 8);
  TrainConfig cfg = quick(50);
  cfg.learning_rate = 1e-9;
  cfg.patience = 2;
  const TrainResult r = train(c, c, tiny_model(), cfg);
  CHECK(r.history.size() < 50);
}

TEST_CASE("non-finite inputs abort training") {
  const Corpus c{sentence(3, {{"T0", {{0, 1}}}})};
  ModelConfig mc = tiny_model();
  mc.encoder.precomputed_dim = 2;
  Embeddings emb{Tensor(3, 2, 0.0)};
  emb[0](1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train(c, {}, mc, quick(2), {}, &emb), TrainingAborted);
  Embeddings short_emb;
  CHECK_THROWS_AS(train(c, {}, mc, quick(2), {}, &short_emb), ValidationError);
}

TEST_CASE("nested mode rejects discontinuous training data") {
  const Corpus c{sentence(5, {{"T0", {{0, 0}, {2, 2}}}})};
  TrainConfig cfg = quick(1);
  cfg.mode = TrainMode::kNested;
  CHECK_THROWS_AS(train(c, {}, tiny_model(), cfg), ValidationError);
}

TEST_CASE("mode names round trip") {
  CHECK(parse_train_mode(to_string(TrainMode::kNested)) == TrainMode::kNested);
  CHECK(parse_train_mode(to_string(TrainMode::kDiscontinuous)) == TrainMode::kDiscontinuous);
  CHECK_THROWS_AS(parse_train_mode("flat"), ConfigError);
  CHECK(mode_depth(TrainMode::kNested) == 1);
  CHECK(mode_depth(TrainMode::kDiscontinuous) == 3);
}
