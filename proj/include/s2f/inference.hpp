#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "s2f/evaluation.hpp"
#include "s2f/model.hpp"

namespace s2f {

// Per-sentence precomputed contextual vectors (n x dim each).
using Embeddings = std::vector<Tensor>;

// JSON lines, one per sentence: {"vectors": [[...], ...]}.
Embeddings read_embeddings(const std::string& path);

// Decodes sentences in batches. Sentences of a batch share one graph and one
// token cache; output does not depend on batch size or thread count.
std::vector<EntitySet> predict_corpus(const S2fModel& model, const Corpus& corpus,
                                      const DecodeConfig& decode, std::size_t batch_size = 20,
                                      const Embeddings* embeddings = nullptr);

ThroughputResult measure_throughput(const S2fModel& model, const Corpus& corpus,
                                    const DecodeConfig& decode, std::size_t batch_size,
                                    std::size_t repeats = 3,
                                    const Embeddings* embeddings = nullptr);

}  // namespace s2f
