#include "s2f/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "s2f/checkpoint.hpp"
#include "s2f/config.hpp"
#include "s2f/errors.hpp"
#include "s2f/evaluation.hpp"
#include "s2f/inference.hpp"
#include "s2f/standoff.hpp"
#include "s2f/synthetic.hpp"
#include "s2f/training.hpp"

namespace s2f {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string out;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "flat JSON config file");
  cmd->add_option("--preset", o.preset, "desk or paper");
  cmd->add_option("--set", o.sets, "override a config key (key=value), repeatable");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) { o.seed = s, o.seed_given = true; }, "random seed");
}

RunConfig resolve(const CommonOptions& o, std::vector<std::string> extra = {}) {
  std::vector<std::string> overrides;
  if (!o.preset.empty()) overrides.push_back("preset=\"" + o.preset + "\"");
  overrides.insert(overrides.end(), o.sets.begin(), o.sets.end());
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  if (o.seed_given) overrides.push_back("seed=" + std::to_string(o.seed));
  return load_run_config(o.config_path, overrides);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Corpus load_corpus(const std::string& path) {
  if (path.empty()) throw Error("no corpus path given");
  if (!fs::exists(path)) throw Error("corpus not found: " + path);
  return read_corpus(path);
}

std::vector<EntitySet> gold_sets(const Corpus& corpus) {
  std::vector<EntitySet> out;
  out.reserve(corpus.size());
  for (const AnnotatedSentence& s : corpus) out.push_back(s.entities);
  return out;
}

int cmd_train(const CommonOptions& o, const std::string& train_path, const std::string& dev_path,
              bool quiet, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    std::vector<std::string> extra;
    if (!train_path.empty()) extra.push_back("data.train=" + json(train_path).dump());
    if (!dev_path.empty()) extra.push_back("data.dev=" + json(dev_path).dump());
    config = resolve(o, extra);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path dir = o.out.empty() ? fs::path("run") : fs::path(o.out);
  const std::string resolved = to_flat_json(config).dump(2);
  err << "resolved config:\n" << resolved << '\n';

  Corpus train_corpus, dev_corpus;
  Embeddings train_emb, dev_emb;
  try {
    if (config.train_path.empty()) throw Error("no training corpus (set data.train or --train)");
    train_corpus = load_corpus(config.train_path);
    if (!config.dev_path.empty()) {
      dev_corpus = load_corpus(config.dev_path);
    } else {
      err << "no dev corpus given; model selection uses the training corpus\n";
      dev_corpus = train_corpus;
    }
    if (!config.train_embeddings.empty()) train_emb = read_embeddings(config.train_embeddings);
    if (!config.dev_embeddings.empty()) {
      dev_emb = read_embeddings(config.dev_embeddings);
    } else if (config.dev_path.empty()) {
      dev_emb = train_emb;
    }
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  const bool with_embeddings = config.model.encoder.precomputed_dim > 0;
  if (with_embeddings && (train_emb.empty() || dev_emb.empty())) {
    err << "config error: encoder.precomputed_dim is set but data.train_embeddings/"
           "data.dev_embeddings are missing\n";
    return kExitConfig;
  }

  try {
    fs::create_directories(dir);
    write_text(dir / "config.json", resolved + "\n");
    std::ofstream log(dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw Error("cannot write " + (dir / "train_log.jsonl").string());
    auto on_epoch = [&](const EpochRecord& r, const S2fModel&) {
      log << to_json_line(r) << '\n';
      log.flush();
      if (!quiet) err << to_json_line(r) << '\n';
    };
    TrainResult result = train(train_corpus, dev_corpus, config.model, config.train, on_epoch,
                               with_embeddings ? &train_emb : nullptr,
                               with_embeddings ? &dev_emb : nullptr);
    if (result.dropped_entities > 0) {
      err << "dropped " << result.dropped_entities << " entities with more than " << kMaxFragments
          << " fragments from training\n";
    }
    TrainingMetadata meta;
    meta.epoch = result.best_epoch;
    meta.dev_f1 = result.best_f1;
    meta.seed = config.train.seed;
    meta.mode = config.train.mode;
    meta.decode = config.train.decode;
    meta.decode.max_depth = std::min(meta.decode.max_depth, mode_depth(config.train.mode));
    save_checkpoint((dir / "model.ckpt").string(), result.best, meta);
    out << "best dev F1 " << result.best_f1 << " at epoch " << result.best_epoch << "; wrote "
        << (dir / "model.ckpt").string() << '\n';
  } catch (const TrainingAborted& e) {
    err << "training aborted: " << e.what() << '\n';
    return kExitAborted;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  std::string embeddings;
  std::string errors;
  std::string out;
  bool subsets = false;
  bool patterns = false;
  bool throughput = false;
  std::size_t batch = 20;
  double threshold = -1.0;
};

int load_for_inference(const EvalFlags& f, std::unique_ptr<Checkpoint>& ck, Corpus& corpus,
                       Embeddings& emb, std::ostream& err) {
  try {
    if (f.checkpoint.empty()) throw CheckpointError("no checkpoint given");
    ck = std::make_unique<Checkpoint>(load_checkpoint(f.checkpoint));
    if (f.threshold >= 0.0) {
      ck->meta.decode.threshold = f.threshold;
      validate(ck->meta.decode);
    }
  } catch (const Error& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  }
  try {
    corpus = load_corpus(f.data);
    if (!f.embeddings.empty()) emb = read_embeddings(f.embeddings);
    if (ck->model.config().encoder.precomputed_dim > 0 && emb.size() != corpus.size()) {
      throw Error("model needs precomputed embeddings for every sentence (--embeddings)");
    }
  } catch (const Error& e) {
    err << "corpus error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Checkpoint> ck;
  Corpus corpus;
  Embeddings emb;
  if (int code = load_for_inference(f, ck, corpus, emb, err); code != kExitOk) return code;
  try {
    const Embeddings* pre = emb.empty() ? nullptr : &emb;
    const auto predicted = predict_corpus(ck->model, corpus, ck->meta.decode, f.batch, pre);
    const auto gold = gold_sets(corpus);
    EvalReport report = evaluate(gold, predicted, EvalOptions{f.subsets, f.patterns});
    if (f.throughput) {
      for (std::size_t batch : {std::size_t{1}, std::size_t{20}}) {
        report.throughput.push_back(measure_throughput(ck->model, corpus, ck->meta.decode, batch, 3, pre));
      }
    }
    const std::string text = report_to_text(report);
    out << text;
    if (!f.out.empty()) {
      json j = json::parse(report_to_json(report));
      j["checkpoint"] = f.checkpoint;
      j["data"] = f.data;
      j["seed"] = ck->meta.seed;
      write_text(fs::path(f.out) / "report.json", j.dump(2) + "\n");
      write_text(fs::path(f.out) / "report.txt", text);
    }
    if (!f.errors.empty()) {
      std::ostringstream dump;
      write_error_dump(dump, corpus, predicted);
      write_text(f.errors, dump.str());
    }
  } catch (const Error& e) {
    err << "corpus error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int cmd_predict(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Checkpoint> ck;
  Corpus corpus;
  Embeddings emb;
  if (int code = load_for_inference(f, ck, corpus, emb, err); code != kExitOk) return code;
  try {
    const auto predicted = predict_corpus(ck->model, corpus, ck->meta.decode, f.batch,
                                          emb.empty() ? nullptr : &emb);
    Corpus result;
    result.reserve(corpus.size());
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      result.push_back(AnnotatedSentence{corpus[s].tokens, predicted[s]});
    }
    std::ostringstream text;
    write_jsonl(text, result);
    if (f.out.empty() || f.out == "-") {
      out << text.str();
    } else {
      write_text(f.out, text.str());
    }
  } catch (const Error& e) {
    err << "corpus error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int cmd_synth(const CommonOptions& o, const std::string& stats_path, std::ostream& out,
              std::ostream& err) {
  try {
    const RunConfig config = resolve(o);
    const SynthCorpus corpus = generate_synthetic(config.synth, config.train.seed);
    std::ostringstream text;
    write_jsonl(text, corpus.sentences);
    const SynthBookkeeping& b = corpus.bookkeeping;
    json hist = json::object();
    for (const auto& [k, v] : b.fragment_histogram) hist[std::to_string(k)] = v;
    json stats;
    stats["seed"] = config.train.seed;
    stats["config"] = json::object();
    const json flat = to_flat_json(config);
    for (const auto& [key, value] : flat.items()) {
      if (key.rfind("synth.", 0) == 0) stats["config"][key] = value;
    }
    stats["bookkeeping"] = {{"sentences", b.sentences},
                            {"entities", b.entities},
                            {"overlapping", b.overlapping},
                            {"discontinuous", b.discontinuous},
                            {"discontinuous_sentences", b.discontinuous_sentences},
                            {"fragment_histogram", hist},
                            {"kinds", b.kinds}};
    stats["stats"] = json::parse(stats_to_json(compute_stats(corpus.sentences)));
    if (o.out.empty() || o.out == "-") {
      out << text.str();
      if (!stats_path.empty()) write_text(stats_path, stats.dump(2) + "\n");
    } else {
      write_text(o.out, text.str());
      const std::string sp = stats_path.empty() ? fs::path(o.out).replace_extension(".stats.json").string()
                                                : stats_path;
      write_text(sp, stats.dump(2) + "\n");
      err << "wrote " << corpus.sentences.size() << " sentences to " << o.out << " and stats to "
          << sp << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int cmd_import(const std::string& text_path, const std::string& ann_path, const std::string& out_path,
               bool lenient, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream text_in(text_path, std::ios::binary);
    if (!text_in) throw Error("cannot open text file " + text_path);
    const std::string text((std::istreambuf_iterator<char>(text_in)), std::istreambuf_iterator<char>());
    std::ifstream ann_in(ann_path);
    if (!ann_in) throw Error("cannot open annotation file " + ann_path);
    const auto annotations = parse_standoff(ann_in);
    const StandoffImport imported =
        import_standoff(text, annotations, lenient ? AlignMode::kLenient : AlignMode::kStrict);
    for (const std::string& w : imported.warnings) err << "warning: " << w << '\n';
    const std::string line = to_json_line(imported.sentence) + "\n";
    if (out_path.empty() || out_path == "-") {
      out << line;
    } else {
      write_text(out_path, line);
    }
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"s2f: discontinuous and nested entity recognition as forest decoding", "s2f"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::string train_path, dev_path;
  bool quiet = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model; writes model.ckpt, train_log.jsonl, config.json");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--out", train_opts.out, "output directory (default: run)");
  train_cmd->add_option("--train", train_path, "training corpus (JSON lines)");
  train_cmd->add_option("--dev", dev_path, "dev corpus (JSON lines)");
  train_cmd->add_flag("--quiet", quiet, "do not echo epoch records");

  EvalFlags eval_flags;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on an annotated corpus");
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", eval_flags.data, "annotated corpus (JSON lines)")->required();
  eval_cmd->add_option("--out", eval_flags.out, "directory for report.json and report.txt");
  eval_cmd->add_option("--embeddings", eval_flags.embeddings, "precomputed contextual vectors");
  eval_cmd->add_option("--errors", eval_flags.errors, "write per-sentence errors (JSON lines)");
  eval_cmd->add_option("--batch", eval_flags.batch, "sentences per decode batch");
  eval_cmd->add_option("--threshold", eval_flags.threshold, "override the decode threshold");
  eval_cmd->add_flag("--subsets", eval_flags.subsets, "discontinuous sentence/entity subsets");
  eval_cmd->add_flag("--patterns", eval_flags.patterns, "scores by overlap pattern");
  eval_cmd->add_flag("--throughput", eval_flags.throughput, "decode speed at batch 1 and 20");

  EvalFlags predict_flags;
  CLI::App* predict_cmd = app.add_subcommand("predict", "write predicted entities as JSON lines");
  predict_cmd->add_option("--checkpoint", predict_flags.checkpoint, "model checkpoint")->required();
  predict_cmd->add_option("--data", predict_flags.data, "input corpus (entities ignored)")->required();
  predict_cmd->add_option("--out", predict_flags.out, "output file (default: stdout)");
  predict_cmd->add_option("--embeddings", predict_flags.embeddings, "precomputed contextual vectors");
  predict_cmd->add_option("--batch", predict_flags.batch, "sentences per decode batch");
  predict_cmd->add_option("--threshold", predict_flags.threshold, "override the decode threshold");

  CommonOptions synth_opts;
  std::string stats_path;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus and its stats");
  add_common(synth_cmd, synth_opts);
  synth_cmd->add_option("--out", synth_opts.out, "corpus file (default: stdout)");
  synth_cmd->add_option("--stats", stats_path, "stats file (default: <out>.stats.json)");

  std::string text_path, ann_path, import_out;
  bool lenient = false;
  CLI::App* import_cmd = app.add_subcommand("import", "convert a standoff (.txt + .ann) document");
  import_cmd->add_option("--text", text_path, "document text")->required();
  import_cmd->add_option("--ann", ann_path, "standoff annotations")->required();
  import_cmd->add_option("--out", import_out, "output file (default: stdout)");
  import_cmd->add_flag("--lenient", lenient, "snap misaligned spans to tokens with a warning");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << '\n';
    return kExitUsage;
  }

  if (train_cmd->parsed()) return cmd_train(train_opts, train_path, dev_path, quiet, out, err);
  if (eval_cmd->parsed()) return cmd_eval(eval_flags, out, err);
  if (predict_cmd->parsed()) return cmd_predict(predict_flags, out, err);
  if (synth_cmd->parsed()) return cmd_synth(synth_opts, stats_path, out, err);
  return cmd_import(text_path, ann_path, import_out, lenient, out, err);
}

}  // namespace s2f
