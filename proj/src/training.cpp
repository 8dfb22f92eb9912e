#include "s2f/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <json.hpp>

#include "s2f/errors.hpp"
#include "s2f/parallel.hpp"

namespace s2f {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kNested ? "nested" : "discontinuous";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "nested") return TrainMode::kNested;
  if (text == "discontinuous") return TrainMode::kDiscontinuous;
  throw ConfigError("unknown training mode '" + text + "' (expected nested or discontinuous)");
}

int mode_depth(TrainMode mode) {
  return mode == TrainMode::kNested ? 1 : static_cast<int>(kMaxFragments);
}

std::vector<StepInstance> teacher_forcing_expand(const AnnotatedSentence& sentence,
                                                 std::size_t index, const TypeInventory& types,
                                                 TrainMode mode) {
  std::vector<std::pair<std::size_t, Entity>> entities;
  for (const Entity& raw : sentence.entities) {
    Entity e = normalized(raw);
    if (e.fragments.size() > kMaxFragments) {
      throw ContractViolation("teacher forcing: " + describe(e) + " has more than " +
                              std::to_string(kMaxFragments) + " fragments");
    }
    if (mode == TrainMode::kNested && e.fragments.size() > 1) {
      throw ContractViolation("teacher forcing: nested mode got discontinuous " + describe(e));
    }
    const auto k = types.index(e.type);
    if (!k) throw ValidationError("unknown entity type '" + e.type + "'");
    entities.emplace_back(*k, std::move(e));
  }

  std::vector<StepInstance> out;
  // (type, prefix) -> gold children; depth 1 uses the empty prefix for every type.
  const int depth_limit = mode_depth(mode);
  for (int depth = 1; depth <= depth_limit; ++depth) {
    const std::size_t prefix_len = static_cast<std::size_t>(depth - 1);
    if (depth == 1) {
      StepInstance inst;
      inst.sentence = index;
      inst.depth = 1;
      for (const auto& [k, e] : entities) inst.gold.push_back({k, e.fragments[0], 1.0});
      std::sort(inst.gold.begin(), inst.gold.end(), [](const auto& a, const auto& b) {
        return std::tie(a.type, a.fragment) < std::tie(b.type, b.fragment);
      });
      inst.gold.erase(std::unique(inst.gold.begin(), inst.gold.end()), inst.gold.end());
      out.push_back(std::move(inst));
      continue;
    }
    std::map<std::pair<std::size_t, std::vector<Fragment>>, std::vector<Fragment>> nodes;
    for (const auto& [k, e] : entities) {
      if (e.fragments.size() < prefix_len) continue;
      std::vector<Fragment> prefix(e.fragments.begin(), e.fragments.begin() + prefix_len);
      auto& children = nodes[{k, prefix}];
      if (e.fragments.size() > prefix_len) children.push_back(e.fragments[prefix_len]);
    }
    for (auto& [key, children] : nodes) {
      std::sort(children.begin(), children.end());
      children.erase(std::unique(children.begin(), children.end()), children.end());
      StepInstance inst;
      inst.sentence = index;
      inst.depth = depth;
      inst.type = key.first;
      inst.prefix = key.second;
      inst.mask = SpanMask{static_cast<std::size_t>(inst.prefix.back().end) + 1};
      for (const Fragment& f : children) inst.gold.push_back({key.first, f, 1.0});
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::size_t drop_long_entities(Corpus& corpus, std::size_t max_fragments) {
  std::size_t dropped = 0;
  for (AnnotatedSentence& s : corpus) {
    const auto before = s.entities.size();
    std::erase_if(s.entities,
                  [&](const Entity& e) { return e.fragments.size() > max_fragments; });
    dropped += before - s.entities.size();
  }
  return dropped;
}

double compute_loss(const S2fModel& model, const AnnotatedSentence& sentence,
                    std::span<const StepInstance> instances, TrainMode mode, GradientSet* grads,
                    const Tensor* precomputed) {
  if (sentence.tokens.empty() || instances.empty()) return 0.0;
  const std::size_t n = sentence.tokens.size();
  const std::size_t types = model.types().size();
  const int max_depth = mode_depth(mode);
  const ForestDecoder& decoder = model.decoder();

  Graph g(&model.params(), grads != nullptr);
  EncoderOutput encoded = model.encode(g, sentence.tokens, precomputed);
  const DecoderState root =
      decoder.advance(g, decoder.init_state(g, encoded), decoder.bos(g), max_depth);

  std::map<std::pair<std::size_t, std::vector<Fragment>>, DecoderState> paths;
  std::function<DecoderState(std::size_t, std::span<const Fragment>)> state_for =
      [&](std::size_t type, std::span<const Fragment> prefix) -> DecoderState {
    if (prefix.empty()) return root;
    std::pair key{type, std::vector<Fragment>(prefix.begin(), prefix.end())};
    if (auto it = paths.find(key); it != paths.end()) return it->second;
    const DecoderState parent = state_for(type, prefix.first(prefix.size() - 1));
    Var input = decoder.fragment_embedding(g, parent.scratchpad, prefix.back(), type);
    DecoderState next = decoder.advance(g, parent, input, max_depth);
    paths.emplace(std::move(key), next);
    return next;
  };

  std::vector<Var> losses;
  for (const StepInstance& inst : instances) {
    if (inst.depth >= 2 && mode == TrainMode::kNested) {
      throw ContractViolation("depth " + std::to_string(inst.depth) + " instance in nested mode");
    }
    if (inst.depth < 1 || static_cast<std::size_t>(inst.depth) != inst.prefix.size() + 1 ||
        (inst.depth >= 2 && !inst.type)) {
      throw ContractViolation("malformed step instance");
    }
    if (inst.mask.min_start >= n) continue;  // nothing left to score
    const DecoderState state = state_for(inst.type.value_or(0), inst.prefix);
    Var logits = model.detector().logits(g, state.scratchpad);
    losses.push_back(ag::bce_with_logits(g, logits, gold_tensor(n, types, inst.gold),
                                         mask_tensor(n, types, inst.mask)));
  }
  if (losses.empty()) return 0.0;
  Var total = ag::sum(g, ag::concat_rows(g, losses));
  if (grads) g.backward(total, grads);
  return g.value(total)[0];
}

void validate(const TrainConfig& c) {
  if (c.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (c.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (c.weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must be in [0, 1)");
  }
  if (!(c.epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
  if (!(c.clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  if (c.target_f1 < 0.0 || c.target_f1 > 1.0) throw ConfigError("train.target_f1 must be in [0, 1]");
  validate(c.decode);
}

AdamW::AdamW(const ParameterStore& params, const TrainConfig& config) : config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params.value(params.id(i));
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
    const std::string& name = params.name(params.id(i));
    auto ends_with = [&](std::string_view suffix) {
      return name.size() >= suffix.size() &&
             name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    decay_.push_back(!ends_with(".bias") && !ends_with(".gain"));
  }
}

void AdamW::step(ParameterStore& params, const GradientSet& grads) {
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(params.id(i));
    const Tensor& g = grads[params.id(i)];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t e = 0; e < p.size(); ++e) {
      m[e] = b1 * m[e] + (1.0 - b1) * g[e];
      v[e] = b2 * v[e] + (1.0 - b2) * g[e] * g[e];
      double update = (m[e] / c1) / (std::sqrt(v[e] / c2) + config_.epsilon);
      if (decay_[i]) update += wd * p[e];
      p[e] -= lr * update;
    }
  }
  params.round_to_float();
}

double clip_global_norm(GradientSet& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch},   {"train_loss", r.train_loss}, {"dev_p", r.dev_p},
                   {"dev_r", r.dev_r},   {"dev_f1", r.dev_f1},         {"seconds", r.seconds}};
  return j.dump();
}

TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const EpochCallback& on_epoch, const Embeddings* train_embeddings,
                  const Embeddings* dev_embeddings) {
  validate(config);
  Corpus corpus = train_corpus;
  const std::size_t dropped = drop_long_entities(corpus);
  if (train_embeddings && train_embeddings->size() != corpus.size()) {
    throw ValidationError("training embeddings cover " + std::to_string(train_embeddings->size()) +
                          " sentences, corpus has " + std::to_string(corpus.size()));
  }
  if (config.mode == TrainMode::kNested) {
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      for (const Entity& e : corpus[s].entities) {
        if (e.discontinuous()) {
          throw ValidationError("nested mode: sentence " + std::to_string(s + 1) +
                                " has discontinuous entity " + describe(e));
        }
      }
    }
  }
  TypeInventory types = TypeInventory::from_corpus(corpus);
  if (types.size() == 0) throw ValidationError("training corpus has no entities");

  S2fModel model(model_config, types, config.seed);
  std::vector<std::vector<StepInstance>> instances(corpus.size());
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (corpus[s].tokens.empty()) continue;
    instances[s] = teacher_forcing_expand(corpus[s], s, types, config.mode);
    order.push_back(s);
  }
  if (order.empty()) throw ValidationError("training corpus has no sentences");

  std::vector<EntitySet> dev_gold;
  for (const AnnotatedSentence& s : dev_corpus) dev_gold.push_back(s.entities);
  DecodeConfig decode = config.decode;
  decode.max_depth = std::min(decode.max_depth, mode_depth(config.mode));

  AdamW optimizer(model.params(), config);
  Rng shuffle_rng(Rng::splitmix(config.seed ^ 0x73687566666c65ULL));
  GradientSet grads(model.params());
  const bool threaded = thread_count() > 1 && config.batch_size > 1;
  std::vector<GradientSet> pool;
  if (threaded) pool.assign(config.batch_size, GradientSet(model.params()));

  TrainResult result{model, 0, -1.0, {}, dropped};
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - b);
      grads.zero();
      double batch_loss = 0.0;
      auto loss_of = [&](std::size_t i, GradientSet* sink) {
        const std::size_t s = order[b + i];
        const Tensor* pre = train_embeddings ? &(*train_embeddings)[s] : nullptr;
        return compute_loss(model, corpus[s], instances[s], config.mode, sink, pre);
      };
      if (threaded) {
        // Per-sentence buffers summed in sentence order, so the result matches
        // the single-threaded accumulation bit for bit.
        std::vector<double> losses(count);
        parallel_for(count, [&](std::size_t i) {
          pool[i].zero();
          losses[i] = loss_of(i, &pool[i]);
        });
        for (std::size_t i = 0; i < count; ++i) {
          batch_loss += losses[i];
          grads.add(pool[i]);
        }
      } else {
        for (std::size_t i = 0; i < count; ++i) batch_loss += loss_of(i, &grads);
      }
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        throw TrainingAborted("non-finite loss or gradient in epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(b / config.batch_size + 1));
      }
      epoch_loss += batch_loss;
      grads.scale(1.0 / static_cast<double>(count));
      clip_global_norm(grads, config.clip_norm);
      optimizer.step(model.params(), grads);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(order.size());
    if (!dev_corpus.empty()) {
      const auto predicted = predict_corpus(model, dev_corpus, decode, 20, dev_embeddings);
      const Prf score = prf(dev_gold, predicted);
      record.dev_p = score.precision;
      record.dev_r = score.recall;
      record.dev_f1 = score.f1;
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(record);
    if (on_epoch) on_epoch(record, model);

    if (record.dev_f1 > result.best_f1) {
      result.best = model;
      result.best_f1 = record.dev_f1;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (config.target_f1 > 0.0 && record.dev_f1 >= config.target_f1) break;
    if (config.patience > 0 && since_best >= config.patience) break;
  }
  return result;
}

}  // namespace s2f
