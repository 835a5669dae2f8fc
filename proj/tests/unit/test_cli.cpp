// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqloss/cli.hpp"
#include "seqloss/synthetic.hpp"
#include "test_support.hpp"

using namespace seqloss;
using seqloss::testing::read_text;
using seqloss::testing::TempDir;
using seqloss::testing::write_text;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_split(const std::filesystem::path &path, const std::vector<RawRecord> &records) {
  std::ofstream out(path);
  for (const auto &r : records) {
    std::string code, summary;
    for (const auto &t : r.code) code += (code.empty() ? "" : " ") + t;
    for (const auto &t : r.summary) summary += (summary.empty() ? "" : " ") + t;
    out << nlohmann::json({{"id", r.id}, {"code", code}, {"summary", summary}}).dump() << "\n";
  }
}

/// Writes a small synthetic dataset plus a base config into `dir`.
void setup(const TempDir &dir) {
  const auto s = synthetic_splits(30, 8, 8, 7);
  write_split(dir / "train.jsonl", s.train);
  write_split(dir / "val.jsonl", s.val);
  write_split(dir / "test.jsonl", s.test);
  write_text(dir / "base.cfg", "# tiny model\n"
                               "train = " + (dir / "train.jsonl").string() + "\n"
                               "val = " + (dir / "val.jsonl").string() + "\n"
                               "test = " + (dir / "test.jsonl").string() + "\n"
                               "out_dir = " + (dir / "out").string() + "\n"
                               "epochs = 2\nbatch_size = 10\nembed_dim = 6\nhidden_dim = 8\n"
                               "learning_rate = 0.005\nembedder = hashed:0:32\n");
}

std::string manifest_hash(const std::filesystem::path &run) {
  return nlohmann::json::parse(read_text(run / "manifest.json")).at("checkpoint_hash");
}

}  // namespace

TEST_CASE("help and usage errors") {
  auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("loss-demo") != std::string::npos);
  auto train_help = run({"train", "--help"});
  CHECK(train_help.code == 0);
  CHECK(train_help.out.find("--beta") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  auto bad = run({"train", "--loss", "foo"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("cce") != std::string::npos);
  CHECK(bad.err.find("use-seq") != std::string::npos);
  CHECK(run({"train", "--epochs"}).code == 2);
}

TEST_CASE("every subcommand documents its flags") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected = {
      {"dataset-stats", {"--train", "--val", "--test", "--code-vocab", "--max-summary-len", "--json"}},
      {"train", {"--config", "--loss", "--beta", "--epochs", "--batch-size", "--lr", "--seed", "--embedder",
                 "--hidden-dim", "--run-name", "--out-dir", "--force"}},
      {"finetune", {"--run", "--loss", "--run-name", "--force"}},
      {"predict", {"--run", "--test", "--out"}},
      {"evaluate", {"--run", "--predictions", "--references", "--embedder", "--out"}},
      {"compare", {"--run", "--report", "--reference", "--alpha", "--out"}},
      {"loss-demo", {"--sim", "--beta", "--cce", "--incorrect-positions", "--words"}},
  };
  for (const auto &[cmd, flags] : expected) {
    const auto r = run({cmd, "--help"});
    CHECK(r.code == 0);
    for (const auto &f : flags) CHECK_MESSAGE(r.out.find(f) != std::string::npos, cmd << " " << f);
  }
}

TEST_CASE("loss-demo output") {
  auto r = run({"loss-demo"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.1182") != std::string::npos);
  CHECK(r.out.find("0.1477") != std::string::npos);
  CHECK(r.out.find("0.1772") != std::string::npos);
  CHECK(r.out.find("0.3108") != std::string::npos);
  CHECK(r.out.find("2.954") != std::string::npos);

  auto zero = run({"loss-demo", "--sim", "0"});
  CHECK(zero.out.find("2.954") == std::string::npos);
  CHECK(zero.out.find("0.2375") != std::string::npos);  // mean of the plain CCE values

  auto custom = run({"loss-demo", "--cce", "0.5,0.5", "--incorrect-positions", "2", "--sim", "0.4", "--beta", "0.4"});
  CHECK(custom.code == 0);
  CHECK(custom.out.find("2.718") != std::string::npos);
  CHECK(run({"loss-demo", "--cce", "0.1", "--incorrect-positions", "4"}).code == 1);
}

TEST_CASE("train, predict, evaluate, compare, finetune") {
  TempDir dir("cli");
  setup(dir);
  const auto cfg = (dir / "base.cfg").string();

  auto t1 = run({"train", "--config", cfg, "--loss", "cce", "--seed", "7"});
  REQUIRE_MESSAGE(t1.code == 0, t1.err);
  const auto cce = dir / "out" / "cce-seed7";
  for (const auto *f : {"config.cfg", "code.vocab", "summary.vocab", "epochs.jsonl", "epoch1.ckpt", "epoch2.ckpt",
                        "manifest.json"}) {
    CHECK(std::filesystem::exists(cce / f));
  }
  const auto manifest = nlohmann::json::parse(read_text(cce / "manifest.json"));
  CHECK(manifest.at("inputs").at("train").at("hash").get<std::string>().size() == 40);
  CHECK(manifest.at("config").at("seed") == "7");

  CHECK(run({"train", "--config", cfg, "--loss", "cce", "--seed", "7"}).code == 2);
  const auto hash = manifest_hash(cce);
  CHECK(run({"train", "--config", cfg, "--loss", "cce", "--seed", "7", "--force"}).code == 0);
  CHECK(manifest_hash(cce) == hash);

  REQUIRE(run({"train", "--config", cfg, "--loss", "use-seq", "--seed", "7"}).code == 0);
  const auto useseq = dir / "out" / "use-seq-seed7";

  for (const auto &r : {cce, useseq}) {
    REQUIRE(run({"predict", "--run", r.string()}).code == 0);
    REQUIRE(run({"evaluate", "--run", r.string()}).code == 0);
    CHECK(std::filesystem::exists(r / "report.json"));
  }
  auto cmp = run({"compare", "--run", cce.string(), "--run", useseq.string(), "--out", (dir / "t.json").string()});
  CHECK(cmp.code == 0);
  CHECK(cmp.out.find("| cce") != std::string::npos);
  CHECK(cmp.out.find(":M") != std::string::npos);
  CHECK(cmp.out.find("/3") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "t.json"));

  auto self = run({"compare", "--run", cce.string(), "--run", cce.string(), "--reference", "cce"});
  CHECK(self.code == 0);
  CHECK(self.out.find("cce#2") != std::string::npos);
  CHECK(run({"compare", "--run", cce.string()}).code == 2);

  // explicit evaluate with a different test set
  write_text(dir / "p.txt", "zz\tgets the name\n");
  write_text(dir / "r.txt", "zz\tgets the name\n");
  auto ev = run({"evaluate", "--predictions", (dir / "p.txt").string(), "--references", (dir / "r.txt").string(),
                 "--embedder", "hashed:0:32", "--loss", "bleu", "--dataset", "test", "--out",
                 (dir / "other.json").string()});
  CHECK(ev.code == 0);
  CHECK(run({"compare", "--run", useseq.string(), "--report", (dir / "other.json").string()}).code == 1);

  CHECK(run({"finetune", "--run", cce.string(), "--loss", "use-seq"}).code == 2);
  CHECK(run({"finetune", "--run", cce.string(), "--loss", "cce"}).code == 2);
  auto ft = run({"finetune", "--run", cce.string(), "--loss", "bleu"});
  REQUIRE_MESSAGE(ft.code == 0, ft.err);
  const auto tuned = dir / "out" / "cce-seed7-bleu";
  const auto log = read_text(tuned / "epochs.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 1);
  CHECK(nlohmann::json::parse(log).at("fine_tune") == true);
  CHECK(std::filesystem::exists(tuned / "epoch3.ckpt"));
  CHECK(run({"finetune", "--run", useseq.string(), "--loss", "simile"}).code == 2);
}

TEST_CASE("runtime failures exit 1") {
  TempDir dir("cli-fail");
  CHECK(run({"dataset-stats", "--train", (dir / "nope.jsonl").string(), "--val", "x", "--test", "y"}).code == 1);
  write_text(dir / "bad.jsonl", "{oops\n");
  auto r = run({"dataset-stats", "--train", (dir / "bad.jsonl").string(), "--val", (dir / "bad.jsonl").string(),
                "--test", (dir / "bad.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find(":1:") != std::string::npos);
  CHECK(run({"predict", "--run", (dir / "missing").string()}).code == 1);
}

TEST_CASE("dataset-stats and seed from the environment") {
  TempDir dir("cli-stats");
  setup(dir);
  auto s = run({"dataset-stats", "--train", (dir / "train.jsonl").string(), "--val", (dir / "val.jsonl").string(),
                "--test", (dir / "test.jsonl").string(), "--json"});
  REQUIRE(s.code == 0);
  CHECK(nlohmann::json::parse(s.out).at("train").at("samples") == 30);

  setenv("SEQLOSS_SEED", "11", 1);
  auto t = run({"train", "--config", (dir / "base.cfg").string(), "--epochs", "1"});
  unsetenv("SEQLOSS_SEED");
  CHECK(t.code == 0);
  CHECK(std::filesystem::exists(dir / "out" / "cce-seed11" / "epoch1.ckpt"));
}
