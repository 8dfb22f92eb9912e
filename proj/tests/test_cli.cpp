#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "s2f/cli.hpp"
#include "s2f/corpus.hpp"

using namespace s2f;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "s2f_cli_test";
  fs::create_directories(dir);
  return dir;
}

// Desk preset, cut short.
const std::vector<std::string> kShort{"--preset", "desk", "--set", "train.epochs=2"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

// Synthesises a small corpus and trains on it once for the whole file.
const fs::path& trained_run() {
  static const fs::path run = [] {
    const fs::path dir = scratch();
    const fs::path data = dir / "tiny.jsonl";
    REQUIRE(cli({"synth", "--seed", "3", "--set", "synth.sentences=12", "--out", data.string()}).code == 0);
    const Run r = cli(with({"train", "--quiet", "--train", data.string(), "--out", (dir / "run").string()}, kShort));
    REQUIRE(r.code == 0);
    return dir / "run";
  }();
  return run;
}

}  // namespace

TEST_CASE("synth writes a corpus and stats that agree") {
  const fs::path dir = scratch();
  const fs::path data = dir / "s.jsonl";
  const Run r = cli({"synth", "--seed", "7", "--out", data.string()});
  REQUIRE(r.code == 0);
  const Corpus corpus = read_corpus(data.string());
  CHECK(corpus.size() == 1000);
  const json stats = json::parse(slurp(dir / "s.stats.json"));
  CHECK(stats["seed"] == 7);
  CHECK(stats["config"]["synth.sentences"] == 1000);
  CHECK(stats["bookkeeping"]["sentences"] == 1000);
  CHECK(stats["bookkeeping"]["entities"] == stats["stats"]["entities"]);
  CHECK(stats["bookkeeping"]["discontinuous"] == stats["stats"]["discontinuous"]);
  CHECK(stats["bookkeeping"]["fragment_histogram"] == stats["stats"]["fragment_histogram"]);

  const Run same = cli({"synth", "--seed", "7"});
  CHECK(same.out == slurp(data));
  const Run other = cli({"synth", "--seed", "8"});
  CHECK(other.out != same.out);
}

TEST_CASE("infeasible synth config") {
  const Run r = cli({"synth", "--set", "synth.min_length=2", "--set", "synth.max_length=3"});
  CHECK(r.code == 1);
  CHECK(r.err.find("min_length") != std::string::npos);
}

TEST_CASE("train writes its artefacts") {
  const fs::path& run = trained_run();
  CHECK(fs::exists(run / "model.ckpt"));
  CHECK(fs::exists(run / "config.json"));
  const json config = json::parse(slurp(run / "config.json"));
  CHECK(config["encoder.hidden"] == 128);
  CHECK(config["seed"] == 1);
  std::istringstream log(slurp(run / "train_log.jsonl"));
  std::string line;
  std::size_t epochs = 0;
  while (std::getline(log, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("dev_f1"));
    ++epochs;
  }
  CHECK(epochs == 2);
}

TEST_CASE("train failures map to exit codes") {
  const fs::path missing = scratch() / "nowhere.jsonl";
  const Run data = cli(with({"train", "--train", missing.string(), "--out", (scratch() / "x").string()}, kShort));
  CHECK(data.code == 2);
  CHECK(data.err.find(missing.string()) != std::string::npos);

  const Run key = cli({"train", "--set", "encoder.depth=3"});
  CHECK(key.code == 1);
  CHECK(key.err.find("encoder.depth") != std::string::npos);

  const fs::path bad = scratch() / "bad.jsonl";
  std::ofstream(bad) << "{\"tokens\": [\"a\"], \"entities\": [{\"type\": \"X\", \"fragments\": [[0, 3]]}]}\n";
  CHECK(cli(with({"train", "--train", bad.string(), "--out", (scratch() / "y").string()}, kShort)).code == 2);

  CHECK(cli({"train", "--no-such-flag"}).code == 64);
  CHECK(cli({}).code == 64);
}

TEST_CASE("eval reports scores") {
  const fs::path& run = trained_run();
  const fs::path data = scratch() / "tiny.jsonl";
  const fs::path out = scratch() / "eval";
  const Run r = cli({"eval", "--checkpoint", (run / "model.ckpt").string(), "--data", data.string(),
                     "--subsets", "--patterns", "--out", out.string(), "--errors",
                     (out / "errors.jsonl").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("overall") != std::string::npos);
  const json report = json::parse(slurp(out / "report.json"));
  CHECK(report.contains("discontinuous"));
  CHECK(report["discontinuous"].contains("sentences"));
  CHECK(report["discontinuous"].contains("entities"));
  CHECK(report.contains("overlap"));
  CHECK(report["sentences"] == 12);
  CHECK(fs::exists(out / "report.txt"));
  CHECK(fs::exists(out / "errors.jsonl"));

  const Run plain = cli({"eval", "--checkpoint", (run / "model.ckpt").string(), "--data", data.string()});
  CHECK(plain.code == 0);
}

TEST_CASE("eval and predict reject bad inputs") {
  const fs::path& run = trained_run();
  const fs::path data = scratch() / "tiny.jsonl";
  const fs::path corrupt = scratch() / "corrupt.ckpt";
  std::string bytes = slurp(run / "model.ckpt");
  bytes.resize(bytes.size() / 2);
  std::ofstream(corrupt, std::ios::binary) << bytes;
  const Run r = cli({"eval", "--checkpoint", corrupt.string(), "--data", data.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("checkpoint") != std::string::npos);
  CHECK(cli({"predict", "--checkpoint", (run / "model.ckpt").string(), "--data",
             (scratch() / "absent.jsonl").string()}).code == 2);
  CHECK(cli({"predict", "--data", data.string()}).code == 64);
}

TEST_CASE("predict is deterministic and handles short sentences") {
  const fs::path& run = trained_run();
  const fs::path data = scratch() / "tiny.jsonl";
  const std::string ckpt = (run / "model.ckpt").string();
  const Run a = cli({"predict", "--checkpoint", ckpt, "--data", data.string()});
  const Run b = cli({"predict", "--checkpoint", ckpt, "--data", data.string(), "--batch", "1"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  std::istringstream in(a.out);
  CHECK(parse_jsonl(in).size() == 12);

  const fs::path one = scratch() / "one.jsonl";
  std::ofstream(one) << "{\"tokens\": [\"solo\"]}\n";
  const fs::path out = scratch() / "one.pred.jsonl";
  CHECK(cli({"predict", "--checkpoint", ckpt, "--data", one.string(), "--out", out.string(),
             "--threshold", "0.0"}).code == 0);
  std::ifstream pred(out);
  const Corpus got = parse_jsonl(pred);
  REQUIRE(got.size() == 1);
  CHECK(got[0].tokens == std::vector<std::string>{"solo"});
}

TEST_CASE("import converts standoff annotations") {
  const fs::path text = scratch() / "doc.txt";
  const fs::path ann = scratch() / "doc.ann";
  std::ofstream(text) << "Severe joint pain today";
  std::ofstream(ann) << "T1\tSymptom 0 6;13 17\tSevere pain\n";
  const Run r = cli({"import", "--text", text.string(), "--ann", ann.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["tokens"].size() == 4);
  CHECK(j["entities"][0]["fragments"] == json::parse("[[0,0],[2,2]]"));
  CHECK(cli({"import", "--text", (scratch() / "missing.txt").string(), "--ann", ann.string()}).code == 2);
}
