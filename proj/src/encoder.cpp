#include "s2f/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "s2f/errors.hpp"

namespace s2f {

void validate(const EncoderConfig& c) {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("encoder.") + name + " must be positive");
  };
  positive(c.char_dim, "char_dim");
  positive(c.position_dim, "position_dim");
  positive(c.char_filters, "char_filters");
  positive(c.hidden, "hidden");
  positive(c.reduce_kernel, "reduce_kernel");
  positive(c.reduced_dim, "reduced_dim");
  positive(c.max_positions, "max_positions");
  positive(c.max_token_chars, "max_token_chars");
  if (c.char_kernels.empty()) throw ConfigError("encoder.char_kernels must not be empty");
  for (std::size_t k : c.char_kernels) positive(k, "char_kernels entry");
  if (c.precomputed_dim == 0) {
    positive(c.heads, "heads");
    positive(c.ffn_dim, "ffn_dim");
    if (c.hidden % c.heads != 0) throw ConfigError("encoder.hidden must be divisible by encoder.heads");
  }
}

Encoder::Encoder(const EncoderConfig& config, ParameterStore& store, Rng& rng) : config_(config) {
  validate(config_);
  char_table_ = store.add("encoder.char_table", 256, config_.char_dim, Init::kEmbedding, rng);
  for (std::size_t k : config_.char_kernels) {
    char_convs_.emplace_back(store, "encoder.char_conv" + std::to_string(k), config_.char_dim,
                             config_.char_filters, k, rng);
  }
  char_projection_ = nn::Linear(store, "encoder.char_projection",
                                config_.char_filters * config_.char_kernels.size(),
                                config_.char_dim, rng);
  position_table_ = store.add("encoder.position_table", config_.max_positions,
                              config_.position_dim, Init::kEmbedding, rng);
  if (config_.precomputed_dim > 0) {
    precomputed_projection_ = nn::Linear(store, "encoder.precomputed_projection",
                                         config_.precomputed_dim, config_.hidden, rng);
  } else {
    input_projection_ = nn::Linear(store, "encoder.input_projection",
                                   config_.char_dim + config_.position_dim, config_.hidden, rng);
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::string p = "encoder.block" + std::to_string(l);
      Block b;
      b.qkv = nn::Linear(store, p + ".qkv", config_.hidden, 3 * config_.hidden, rng);
      b.output = nn::Linear(store, p + ".attention_output", config_.hidden, config_.hidden, rng);
      b.attention_norm = nn::LayerNorm(store, p + ".attention_norm", config_.hidden, rng);
      b.ffn_in = nn::Linear(store, p + ".ffn_in", config_.hidden, config_.ffn_dim, rng);
      b.ffn_out = nn::Linear(store, p + ".ffn_out", config_.ffn_dim, config_.hidden, rng);
      b.ffn_norm = nn::LayerNorm(store, p + ".ffn_norm", config_.hidden, rng);
      blocks_.push_back(b);
    }
  }
  reduce_ = nn::Conv1d(store, "encoder.reduce", config_.hidden, config_.reduced_dim,
                       config_.reduce_conv ? config_.reduce_kernel : 1, rng);
}

Var Encoder::char_embedding(Graph& g, const std::string& token) const {
  std::vector<std::size_t> ids;
  const std::size_t len = std::min(token.size(), config_.max_token_chars);
  for (std::size_t i = 0; i < len; ++i) ids.push_back(static_cast<unsigned char>(token[i]));
  // An empty token still gets one (NUL) character so the CNN has a row to pool.
  if (ids.empty()) ids.push_back(0);
  Var chars = ag::gather_rows(g, g.parameter(char_table_), ids);
  std::vector<Var> pooled;
  pooled.reserve(char_convs_.size());
  for (const nn::Conv1d& conv : char_convs_) {
    pooled.push_back(ag::max_rows(g, ag::relu(g, conv(g, chars))));
  }
  return ag::concat_cols(g, pooled);
}

Var Encoder::embed_tokens(Graph& g, std::span<const std::string> tokens,
                          TokenCache* cache) const {
  if (tokens.empty()) throw ContractViolation("embed_tokens: empty sentence");
  TokenCache local;
  if (cache == nullptr) cache = &local;
  std::vector<Var> rows;
  rows.reserve(tokens.size());
  for (const std::string& t : tokens) {
    auto it = cache->find(t);
    if (it == cache->end()) it = cache->emplace(t, char_embedding(g, t)).first;
    rows.push_back(it->second);
  }
  Var char_features = char_projection_(g, ag::concat_rows(g, rows));
  std::vector<std::size_t> positions(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) positions[i] = std::min(i, config_.max_positions - 1);
  Var pos = ag::gather_rows(g, g.parameter(position_table_), positions);
  const Var parts[] = {char_features, pos};
  return ag::concat_cols(g, parts);
}

Var Encoder::self_attention(Graph& g, const Block& block, Var x,
                            std::span<const std::size_t> lengths) const {
  const std::size_t h = config_.hidden;
  const std::size_t head_dim = h / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var qkv = block.qkv(g, x);
  const std::size_t whole[] = {g.value(x).rows()};
  if (lengths.empty()) lengths = whole;
  std::vector<Var> sentences;
  sentences.reserve(lengths.size());
  std::size_t offset = 0;
  for (std::size_t n : lengths) {
    Var rows = lengths.size() == 1 ? qkv : ag::slice_rows(g, qkv, offset, n);
    offset += n;
    std::vector<Var> heads;
    heads.reserve(config_.heads);
    for (std::size_t head = 0; head < config_.heads; ++head) {
      Var q = ag::slice_cols(g, rows, head * head_dim, head_dim);
      Var k = ag::slice_cols(g, rows, h + head * head_dim, head_dim);
      Var v = ag::slice_cols(g, rows, 2 * h + head * head_dim, head_dim);
      Var scores = ag::scale(g, ag::matmul(g, q, k, false, true), inv_sqrt);
      heads.push_back(ag::matmul(g, ag::softmax_rows(g, scores), v));
    }
    sentences.push_back(ag::concat_cols(g, heads));
  }
  Var joined = sentences.size() == 1 ? sentences.front() : ag::concat_rows(g, sentences);
  return block.output(g, joined);
}

Var Encoder::encode(Graph& g, Var inputs, std::span<const std::size_t> lengths) const {
  Var x = input_projection_(g, inputs);
  for (const Block& b : blocks_) {
    x = b.attention_norm(g, ag::add(g, x, self_attention(g, b, x, lengths)));
    Var ffn = b.ffn_out(g, ag::gelu(g, b.ffn_in(g, x)));
    x = b.ffn_norm(g, ag::add(g, x, ffn));
  }
  return x;
}

Var Encoder::conv_reduce(Graph& g, Var contextual) const { return reduce_(g, contextual); }

EncoderOutput Encoder::forward(Graph& g, std::span<const std::string> tokens,
                               const Tensor* precomputed, TokenCache* cache) const {
  if (tokens.empty()) throw ContractViolation("encoder: empty sentence");
  EncoderOutput out;
  out.length = tokens.size();
  if (config_.precomputed_dim > 0) {
    if (precomputed == nullptr) throw ContractViolation("encoder: precomputed vectors required");
    if (precomputed->rows() != tokens.size() || precomputed->cols() != config_.precomputed_dim) {
      throw ContractViolation("encoder: precomputed vectors have shape " +
                              std::to_string(precomputed->rows()) + "x" +
                              std::to_string(precomputed->cols()) + ", expected " +
                              std::to_string(tokens.size()) + "x" +
                              std::to_string(config_.precomputed_dim));
    }
    out.contextual = precomputed_projection_(g, g.constant(*precomputed));
  } else {
    out.contextual = encode(g, embed_tokens(g, tokens, cache));
  }
  out.reduced = conv_reduce(g, out.contextual);
  out.final_state = ag::slice_rows(g, out.contextual, tokens.size() - 1, 1);
  return out;
}

std::vector<EncoderOutput> Encoder::forward_batch(
    Graph& g, std::span<const std::span<const std::string>> sentences,
    std::span<const Tensor* const> precomputed, TokenCache* cache) const {
  if (!precomputed.empty() && precomputed.size() != sentences.size()) {
    throw ContractViolation("encoder: precomputed vectors do not cover the batch");
  }
  std::vector<EncoderOutput> out;
  out.reserve(sentences.size());
  if (config_.precomputed_dim > 0 || sentences.size() == 1) {
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      out.push_back(forward(g, sentences[s], precomputed.empty() ? nullptr : precomputed[s], cache));
    }
    return out;
  }
  std::vector<Var> embedded;
  std::vector<std::size_t> lengths;
  for (std::span<const std::string> tokens : sentences) {
    embedded.push_back(embed_tokens(g, tokens, cache));
    lengths.push_back(tokens.size());
  }
  Var contextual = encode(g, ag::concat_rows(g, embedded), lengths);
  std::size_t offset = 0;
  for (std::size_t n : lengths) {
    EncoderOutput e;
    e.length = n;
    e.contextual = ag::slice_rows(g, contextual, offset, n);
    e.reduced = conv_reduce(g, e.contextual);
    e.final_state = ag::slice_rows(g, e.contextual, n - 1, 1);
    out.push_back(e);
    offset += n;
  }
  return out;
}

}  // namespace s2f
