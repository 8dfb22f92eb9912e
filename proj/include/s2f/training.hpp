#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2f/inference.hpp"
#include "s2f/model.hpp"

namespace s2f {

enum class TrainMode { kNested, kDiscontinuous };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);  // throws ConfigError

// Decoder depth used for a mode: 1 for nested, kMaxFragments otherwise.
int mode_depth(TrainMode mode);

// One supervised decoder step: the gold fragments that should be detected after
// the decoder has consumed `prefix` (fragments of one entity, in order) of `type`.
struct StepInstance {
  std::size_t sentence = 0;
  int depth = 1;
  std::optional<std::size_t> type;  // set from depth 2 on
  std::vector<Fragment> prefix;
  std::vector<TypedFragment> gold;
  SpanMask mask;
};

// Depth 1: first fragments of every entity. Depth t >= 2: one instance per gold
// forest node at depth t-1, with its children as gold (empty at entity ends).
// Nested mode only produces depth-1 instances and rejects multi-fragment entities.
std::vector<StepInstance> teacher_forcing_expand(const AnnotatedSentence& sentence,
                                                 std::size_t index, const TypeInventory& types,
                                                 TrainMode mode);

// Removes entities with more than max_fragments fragments; returns how many.
std::size_t drop_long_entities(Corpus& corpus, std::size_t max_fragments = kMaxFragments);

// Sum of the masked BCE over all instances (which must all belong to
// `sentence`). Adds parameter gradients into grads when given.
double compute_loss(const S2fModel& model, const AnnotatedSentence& sentence,
                    std::span<const StepInstance> instances, TrainMode mode,
                    GradientSet* grads = nullptr, const Tensor* precomputed = nullptr);

struct TrainConfig {
  TrainMode mode = TrainMode::kDiscontinuous;
  std::size_t epochs = 80;
  std::size_t batch_size = 20;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  // Stop after this many epochs without dev improvement; 0 disables.
  std::size_t patience = 0;
  // Stop once dev F1 reaches this value; 0 disables.
  double target_f1 = 0.0;
  DecodeConfig decode;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

// Decoupled weight decay; biases and layer-norm gains are not decayed.
class AdamW {
 public:
  AdamW(const ParameterStore& params, const TrainConfig& config);
  void step(ParameterStore& params, const GradientSet& grads);
  std::size_t steps() const { return steps_; }

 private:
  TrainConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::vector<bool> decay_;
  std::size_t steps_ = 0;
};

// Rescales grads so their global L2 norm is at most max_norm; returns the norm before.
double clip_global_norm(GradientSet& grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-sentence loss
  double dev_p = 0.0;
  double dev_r = 0.0;
  double dev_f1 = 0.0;
  double seconds = 0.0;
};

std::string to_json_line(const EpochRecord& record);

struct TrainResult {
  S2fModel best;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
  std::vector<EpochRecord> history;
  std::size_t dropped_entities = 0;
};

using EpochCallback = std::function<void(const EpochRecord&, const S2fModel& current)>;

// Trains from a seeded initialisation and returns the model with the best dev
// F1. Throws TrainingAborted on a non-finite loss or gradient.
TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus, const ModelConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch = {},
                  const Embeddings* train_embeddings = nullptr,
                  const Embeddings* dev_embeddings = nullptr);

}  // namespace s2f
