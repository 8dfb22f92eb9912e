#include "s2f/inference.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "s2f/errors.hpp"
#include "s2f/parallel.hpp"

namespace s2f {

Embeddings read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file: " + path);
  Embeddings out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& rows = j.at("vectors");
      if (!rows.is_array() || rows.empty()) throw ParseError(number, "vectors must be a non-empty array");
      const std::size_t cols = rows[0].size();
      Tensor t(rows.size(), cols);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ParseError(number, "ragged vectors");
        for (std::size_t c = 0; c < cols; ++c) t(r, c) = rows[r][c].get<double>();
      }
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(number, e.what());
    }
  }
  return out;
}

std::vector<EntitySet> predict_corpus(const S2fModel& model, const Corpus& corpus,
                                      const DecodeConfig& decode, std::size_t batch_size,
                                      const Embeddings* embeddings) {
  if (batch_size == 0) batch_size = 1;
  if (embeddings && embeddings->size() != corpus.size()) {
    throw ContractViolation("embeddings cover " + std::to_string(embeddings->size()) +
                            " sentences, corpus has " + std::to_string(corpus.size()));
  }
  std::vector<EntitySet> out(corpus.size());
  const std::size_t batches = (corpus.size() + batch_size - 1) / batch_size;
  parallel_for(batches, [&](std::size_t b) {
    Graph g(&model.params(), false);
    TokenCache cache;
    const std::size_t end = std::min(corpus.size(), (b + 1) * batch_size);
    std::vector<std::size_t> ids;
    std::vector<std::span<const std::string>> sentences;
    std::vector<const Tensor*> pre;
    for (std::size_t s = b * batch_size; s < end; ++s) {
      if (corpus[s].tokens.empty()) continue;
      ids.push_back(s);
      sentences.emplace_back(corpus[s].tokens);
      if (embeddings) pre.push_back(&(*embeddings)[s]);
    }
    if (ids.empty()) return;
    // The encoder runs once over the whole batch; decoding stays per sentence.
    const auto encoded = model.encoder().forward_batch(g, sentences, pre, &cache);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out[ids[i]] = decode_forest(g, encoded[i], model.decoder(), model.detector(),
                                  model.types().names(), decode);
    }
  });
  return out;
}

ThroughputResult measure_throughput(const S2fModel& model, const Corpus& corpus,
                                    const DecodeConfig& decode, std::size_t batch_size,
                                    std::size_t repeats, const Embeddings* embeddings) {
  ThroughputResult r;
  r.batch_size = batch_size;
  r.sentences = corpus.size();
  // Warm-up on the first batch (allocator, caches); not timed.
  const std::size_t head = std::min(corpus.size(), batch_size);
  const Corpus warmup(corpus.begin(), corpus.begin() + head);
  Embeddings warmup_embeddings;
  if (embeddings) warmup_embeddings.assign(embeddings->begin(), embeddings->begin() + head);
  predict_corpus(model, warmup, decode, batch_size, embeddings ? &warmup_embeddings : nullptr);
  double best = -1.0;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, repeats); ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    predict_corpus(model, corpus, decode, batch_size, embeddings);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (best < 0 || s < best) best = s;
  }
  r.seconds = best;
  r.sentences_per_second = best > 0 ? static_cast<double>(corpus.size()) / best : 0.0;
  return r;
}

}  // namespace s2f
