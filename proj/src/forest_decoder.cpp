#include "s2f/forest_decoder.hpp"

#include <algorithm>

#include "s2f/errors.hpp"

namespace s2f {

void validate(const DecoderConfig& c) {
  if (c.hidden == 0 || c.type_dim == 0 || c.attention_dim == 0 || c.length_buckets == 0 ||
      c.update_kernel == 0) {
    throw ConfigError("decoder dimensions must be positive");
  }
}

void validate(const DecodeConfig& c) {
  if (c.max_depth < 1 || c.max_depth > static_cast<int>(kMaxFragments)) {
    throw ConfigError("decode.max_depth must be between 1 and " + std::to_string(kMaxFragments));
  }
  if (!(c.threshold >= 0.0 && c.threshold < 1.0)) {
    throw ConfigError("decode.threshold must be in [0, 1)");
  }
  if (c.max_children == 0) throw ConfigError("decode.max_children must be positive");
}

ForestDecoder::ForestDecoder(const DecoderConfig& config, std::size_t encoder_hidden,
                             std::size_t scratch_dim, std::size_t types, ParameterStore& store,
                             Rng& rng)
    : config_(config), scratch_dim_(scratch_dim) {
  validate(config_);
  const std::size_t d = scratch_dim;
  bos_ = store.add("decoder.bos", 1, d + config_.type_dim, Init::kEmbedding, rng);
  type_table_ = store.add("decoder.type_table", types, config_.type_dim, Init::kEmbedding, rng);
  length_table_ =
      store.add("decoder.length_table", config_.length_buckets, d, Init::kEmbedding, rng);
  inner_ = nn::LstmCell(store, "decoder.inner_lstm", d, d, rng);
  lstm_ = nn::LstmCell(store, "decoder.lstm", d + config_.type_dim, config_.hidden, rng);
  attend_states_ = nn::Linear(store, "decoder.attend_states", d, config_.attention_dim, rng, false);
  attend_query_ = nn::Linear(store, "decoder.attend_query", config_.hidden, config_.attention_dim, rng);
  attend_vector_ = store.add("decoder.attend_vector", config_.attention_dim, 1, Init::kXavier, rng);
  update_ = nn::Conv1d(store, "decoder.update", 2 * d, d, config_.update_kernel, rng);
  if (encoder_hidden != config_.hidden) {
    init_projection_ =
        nn::Linear(store, "decoder.init_projection", encoder_hidden, config_.hidden, rng);
  }
}

DecoderState ForestDecoder::init_state(Graph& g, const EncoderOutput& encoded) const {
  DecoderState s;
  s.lstm.hidden = init_projection_.weight.valid() ? init_projection_(g, encoded.final_state)
                                                  : encoded.final_state;
  s.lstm.cell = g.constant(Tensor(1, config_.hidden));
  s.scratchpad = encoded.reduced;
  return s;
}

Var ForestDecoder::bos(Graph& g) const { return g.parameter(bos_); }

Var ForestDecoder::fragment_features(Graph& g, Var scratchpad, const Fragment& f) const {
  const std::size_t n = g.value(scratchpad).rows();
  if (f.start < 0 || f.end < f.start || static_cast<std::size_t>(f.end) >= n) {
    throw ContractViolation("fragment_embedding: fragment outside sentence");
  }
  const auto i = static_cast<std::size_t>(f.start);
  const auto j = static_cast<std::size_t>(f.end);
  Var inner = inner_.run(g, ag::slice_rows(g, scratchpad, i, j - i + 1));
  const std::size_t bucket[] = {std::min(j - i, config_.length_buckets - 1)};
  Var length = ag::gather_rows(g, g.parameter(length_table_), bucket);
  Var boundary = ag::add(g, ag::slice_rows(g, scratchpad, i, 1), ag::slice_rows(g, scratchpad, j, 1));
  return ag::add(g, ag::add(g, inner, length), boundary);
}

Var ForestDecoder::fragment_embedding(Graph& g, Var scratchpad, const Fragment& f,
                                      std::size_t type) const {
  const std::size_t index[] = {type};
  const Var parts[] = {fragment_features(g, scratchpad, f),
                       ag::gather_rows(g, g.parameter(type_table_), index)};
  return ag::concat_cols(g, parts);
}

DecoderState ForestDecoder::step(Graph& g, const DecoderState& state, Var input,
                                 int max_depth) const {
  if (state.depth >= max_depth) {
    throw ContractViolation("decoder step beyond maximum depth " + std::to_string(max_depth));
  }
  DecoderState next = state;
  next.lstm = lstm_.step(g, input, state.lstm);
  next.depth = state.depth + 1;
  return next;
}

ScratchpadUpdate ForestDecoder::scratchpad_update(Graph& g, Var scratchpad, Var query) const {
  const std::size_t n = g.value(scratchpad).rows();
  Var energy = ag::tanh(g, ag::add_row(g, attend_states_(g, scratchpad), attend_query_(g, query)));
  Var scores = ag::transpose(g, ag::matmul(g, energy, g.parameter(attend_vector_)));
  Var weights = ag::softmax_rows(g, scores);
  Var summary = ag::matmul(g, weights, scratchpad);
  const Var parts[] = {ag::repeat_rows(g, summary, n), scratchpad};
  return {update_(g, ag::concat_cols(g, parts)), weights};
}

DecoderState ForestDecoder::advance(Graph& g, const DecoderState& state, Var input,
                                    int max_depth) const {
  DecoderState next = step(g, state, input, max_depth);
  if (config_.scratchpad) next.scratchpad = scratchpad_update(g, state.scratchpad, next.lstm.hidden).scratchpad;
  return next;
}

namespace {

struct DecodeContext {
  Graph& g;
  const ForestDecoder& decoder;
  const FragmentDetector& detector;
  const DecodeConfig& config;
  std::size_t length;
  std::size_t types;
  std::span<const std::string> names;
  std::vector<Entity>& out;
  std::vector<DecodeEvent>* trace;
};

ScoreGrid score(DecodeContext& ctx, Var scratchpad) {
  return to_grid(ctx.g.value(ctx.detector.logits(ctx.g, scratchpad)), ctx.length, ctx.types);
}

void expand(DecodeContext& ctx, const DecoderState& state, std::size_t type,
            std::vector<Fragment>& chain) {
  auto emit = [&] { ctx.out.push_back(Entity{std::string(ctx.names[type]), chain}); };
  if (state.depth >= ctx.config.max_depth) {
    emit();
    return;
  }
  const Fragment& last = chain.back();
  Var input = ctx.decoder.fragment_embedding(ctx.g, state.scratchpad, last, type);
  DecoderState next = ctx.decoder.advance(ctx.g, state, input, ctx.config.max_depth);
  const SpanMask mask{static_cast<std::size_t>(last.end) + 1};
  std::vector<TypedFragment> children;
  if (mask.min_start < ctx.length) {
    children = decode_grid(score(ctx, next.scratchpad), ctx.config.threshold, mask, type,
                           ctx.config.max_children);
  }
  if (ctx.trace) ctx.trace->push_back({next.depth, type, last, mask, children});
  if (children.empty()) {
    emit();
    return;
  }
  for (const TypedFragment& child : children) {
    chain.push_back(child.fragment);
    expand(ctx, next, type, chain);
    chain.pop_back();
  }
}

}  // namespace

std::vector<Entity> decode_forest(Graph& g, const EncoderOutput& encoded,
                                  const ForestDecoder& decoder, const FragmentDetector& detector,
                                  std::span<const std::string> type_names,
                                  const DecodeConfig& config,
                                  std::vector<DecodeEvent>* trace) {
  validate(config);
  if (type_names.size() != detector.types()) {
    throw ContractViolation("decode_forest: type inventory does not match detector");
  }
  std::vector<Entity> out;
  DecodeContext ctx{g, decoder, detector, config, encoded.length, detector.types(), type_names, out, trace};
  DecoderState root = decoder.advance(g, decoder.init_state(g, encoded), decoder.bos(g), config.max_depth);
  const ScoreGrid grid = score(ctx, root.scratchpad);
  std::vector<Fragment> chain;
  for (std::size_t k = 0; k < ctx.types; ++k) {
    std::vector<TypedFragment> selected =
        decode_grid(grid, config.threshold, SpanMask{}, k, config.max_children);
    if (trace) trace->push_back({root.depth, std::nullopt, std::nullopt, SpanMask{}, selected});
    for (const TypedFragment& f : selected) {
      chain.assign(1, f.fragment);
      expand(ctx, root, k, chain);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace s2f
