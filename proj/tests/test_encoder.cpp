#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "s2f/encoder.hpp"
#include "s2f/errors.hpp"
#include "tiny_models.hpp"

using namespace s2f;
using namespace s2f::testing;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

bool rows_equal(const Tensor& t, std::size_t a, std::size_t b, std::size_t from, std::size_t count) {
  for (std::size_t c = from; c < from + count; ++c) {
    if (t(a, c) != t(b, c)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("default token features are 50 + 30 wide") {
  ParameterStore store;
  Rng rng(1);
  EncoderConfig cfg;
  cfg.char_filters = 8;
  cfg.layers = 1;
  const Encoder enc(cfg, store, rng);
  Graph g(&store, false);
  const auto toks = words({"severe", "joint", "pain"});
  const Tensor& x = g.value(enc.embed_tokens(g, toks));
  CHECK(x.rows() == 3);
  CHECK(x.cols() == 80);
}

TEST_CASE("identical tokens share char features but not position features") {
  ParameterStore store;
  Rng rng(2);
  const Encoder enc(tiny_encoder(), store, rng);
  Graph g(&store, false);
  const auto toks = words({"pain", "x", "pain"});
  const Tensor& x = g.value(enc.embed_tokens(g, toks));
  CHECK(rows_equal(x, 0, 2, 0, 4));
  CHECK_FALSE(rows_equal(x, 0, 2, 4, 3));
}

TEST_CASE("degenerate tokens stay finite") {
  ParameterStore store;
  Rng rng(3);
  const Encoder enc(tiny_encoder(), store, rng);
  Graph g(&store, false);
  const std::string long_token(100, 'z');
  const std::vector<std::string> toks{"a", long_token, ""};
  const Tensor& x = g.value(enc.embed_tokens(g, toks));
  for (double v : x.values()) CHECK(std::isfinite(v));
}

TEST_CASE("tokens are truncated to the configured length") {
  ParameterStore store;
  Rng rng(4);
  EncoderConfig cfg = tiny_encoder();
  cfg.max_token_chars = 5;
  const Encoder enc(cfg, store, rng);
  Graph g(&store, false);
  const std::vector<std::string> toks{"abcdefgh", "abcdexyz"};
  CHECK(rows_equal(g.value(enc.embed_tokens(g, toks)), 0, 1, 0, cfg.char_dim));
}

TEST_CASE("lengths are preserved and the reduced width is used") {
  ParameterStore store;
  Rng rng(5);
  const Encoder enc(tiny_encoder(), store, rng);
  for (std::size_t n : {1, 2, 5, 20}) {
    Graph g(&store, false);
    std::vector<std::string> toks(n, "w");
    const EncoderOutput out = enc.forward(g, toks);
    CHECK(g.value(out.contextual).rows() == n);
    CHECK(g.value(out.contextual).cols() == 8);
    CHECK(g.value(out.reduced).rows() == n);
    CHECK(g.value(out.reduced).cols() == 4);
    CHECK(g.value(out.final_state).cols() == 8);
  }
}

TEST_CASE("positions past the table reuse its last row") {
  ParameterStore store;
  Rng rng(6);
  EncoderConfig cfg = tiny_encoder();
  cfg.max_positions = 2;
  const Encoder enc(cfg, store, rng);
  Graph g(&store, false);
  const std::vector<std::string> toks(4, "w");
  const Tensor& x = g.value(enc.embed_tokens(g, toks));
  CHECK(rows_equal(x, 1, 3, 0, 7));
  CHECK_FALSE(rows_equal(x, 0, 1, 0, 7));
}

TEST_CASE("outputs depend on token order through positions") {
  ParameterStore store;
  Rng rng(7);
  const Encoder enc(tiny_encoder(), store, rng);
  Graph g(&store, false);
  const auto ab = words({"alpha", "beta"});
  const auto ba = words({"beta", "alpha"});
  const Tensor h1 = g.value(enc.forward(g, ab).contextual);
  const Tensor h2 = g.value(enc.forward(g, ba).contextual);
  bool swapped_equal = true;
  for (std::size_t c = 0; c < h1.cols(); ++c) swapped_equal &= h1(0, c) == h2(1, c);
  CHECK_FALSE(swapped_equal);
}

TEST_CASE("same seed, same parameters and outputs") {
  ParameterStore s1, s2;
  Rng r1(8), r2(8);
  const Encoder e1(tiny_encoder(), s1, r1);
  const Encoder e2(tiny_encoder(), s2, r2);
  CHECK(s1 == s2);
  Graph g1(&s1, false), g2(&s2, false);
  const auto toks = words({"a", "bb", "ccc"});
  CHECK(g1.value(e1.forward(g1, toks).reduced) == g2.value(e2.forward(g2, toks).reduced));
}

TEST_CASE("zero reduce weights give the bias at every position") {
  ParameterStore store;
  Rng rng(9);
  const Encoder enc(tiny_encoder(), store, rng);
  store.value(*store.find("encoder.reduce.weight")).fill(0.0);
  Tensor& bias = store.value(*store.find("encoder.reduce.bias"));
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.25 * static_cast<double>(i);
  Graph g(&store, false);
  const std::vector<std::string> toks(3, "w");
  const Tensor& r = g.value(enc.forward(g, toks).reduced);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(r(i, c) == bias[c]);
  }
}

TEST_CASE("precomputed vectors replace the transformer") {
  ParameterStore store;
  Rng rng(10);
  EncoderConfig cfg = tiny_encoder();
  cfg.precomputed_dim = 5;
  const Encoder enc(cfg, store, rng);
  CHECK_FALSE(store.find("encoder.block0.qkv.weight").has_value());
  Graph g(&store, false);
  const std::vector<std::string> toks(3, "w");
  Rng data(1);
  const Tensor pre = random_tensor(data, 3, 5);
  CHECK(g.value(enc.forward(g, toks, &pre).reduced).rows() == 3);
  CHECK_THROWS_AS(enc.forward(g, toks), ContractViolation);
  const Tensor wrong = random_tensor(data, 2, 5);
  CHECK_THROWS_AS(enc.forward(g, toks, &wrong), ContractViolation);
}

TEST_CASE("invalid encoder settings") {
  EncoderConfig cfg = tiny_encoder();
  cfg.heads = 3;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = tiny_encoder();
  cfg.char_kernels.clear();
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("encoder stack gradients") {
  ParameterStore store;
  Rng rng(12);
  const Encoder enc(tiny_encoder(), store, rng);
  const auto r = check_gradients(store, {random_tensor(rng, 4, 7)}, [&](Graph& g, std::span<const Var> v) {
    return weighted_sum(g, enc.conv_reduce(g, enc.encode(g, v[0])));
  });
  CAPTURE(r.worst);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("char-CNN embedding gradients") {
  ParameterStore store;
  Rng rng(13);
  const Encoder enc(tiny_encoder(), store, rng);
  const auto toks = words({"ab", "cde", "f"});
  const auto r = check_gradients(store, {}, [&](Graph& g, std::span<const Var>) {
    return weighted_sum(g, enc.embed_tokens(g, toks));
  });
  CAPTURE(r.worst);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("batched forward matches sentence-by-sentence forward exactly") {
  ParameterStore store;
  Rng rng(14);
  const Encoder enc(tiny_encoder(), store, rng);
  const std::vector<std::vector<std::string>> batch{
      words({"a", "bb", "ccc"}), words({"solo"}), words({"bb", "a", "d", "e", "ff", "g"})};
  std::vector<std::span<const std::string>> spans(batch.begin(), batch.end());
  Graph g(&store, false);
  TokenCache cache;
  const auto together = enc.forward_batch(g, spans, {}, &cache);
  REQUIRE(together.size() == 3);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    Graph alone(&store, false);
    const EncoderOutput e = enc.forward(alone, batch[s]);
    CHECK(together[s].length == batch[s].size());
    CHECK(g.value(together[s].contextual) == alone.value(e.contextual));
    CHECK(g.value(together[s].reduced) == alone.value(e.reduced));
    CHECK(g.value(together[s].final_state) == alone.value(e.final_state));
  }
  const Tensor* missing[] = {nullptr};
  CHECK_THROWS_AS(enc.forward_batch(g, spans, missing), ContractViolation);
}
