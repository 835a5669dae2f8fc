// SPDX-License-Identifier: Apache-2.0
#include "seqloss/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seqloss/checkpoint.hpp"
#include "seqloss/content_hash.hpp"
#include "seqloss/corpus.hpp"
#include "seqloss/error.hpp"
#include "seqloss/losses.hpp"
#include "seqloss/metrics.hpp"
#include "seqloss/trainer.hpp"

namespace seqloss {

namespace {

namespace fs = std::filesystem;

/// Bad flag values or invocations; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Settings read_key_values(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  Settings out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path.string(), lineno, "expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

template <typename T>
T to_number(const std::string &key, const std::string &text) {
  T v{};
  std::istringstream in(text);
  if (!(in >> v) || !in.eof()) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return v;
}

/// Everything a run needs: data locations, limits, training settings, naming.
struct RunSettings {
  std::string train_path, val_path, test_path;
  CorpusLimits limits;
  TrainConfig train;
  std::string run_name;
  std::string out_dir = "out";

  void set(const std::string &key, const std::string &value) {
    if (key == "train") train_path = value;
    else if (key == "val") val_path = value;
    else if (key == "test") test_path = value;
    else if (key == "code_vocab") limits.code_vocab = to_number<std::size_t>(key, value);
    else if (key == "summary_vocab") limits.summary_vocab = to_number<std::size_t>(key, value);
    else if (key == "max_code_len") limits.max_code_len = to_number<std::size_t>(key, value);
    else if (key == "max_summary_len") limits.max_summary_len = to_number<std::size_t>(key, value);
    else if (key == "run_name") run_name = value;
    else if (key == "out_dir") out_dir = value;
    else train.set(key, value);
  }

  Settings entries() const {
    Settings s = {{"train", train_path},
                  {"val", val_path},
                  {"test", test_path},
                  {"code_vocab", std::to_string(limits.code_vocab)},
                  {"summary_vocab", std::to_string(limits.summary_vocab)},
                  {"max_code_len", std::to_string(limits.max_code_len)},
                  {"max_summary_len", std::to_string(limits.max_summary_len)},
                  {"run_name", run_name},
                  {"out_dir", out_dir}};
    for (auto &kv : train.entries()) s.push_back(std::move(kv));
    return s;
  }

  std::string to_text() const {
    std::string text;
    for (const auto &[k, v] : entries()) text += k + " = " + v + "\n";
    return text;
  }
};

RunSettings load_run_settings(const fs::path &run_dir) {
  RunSettings s;
  for (const auto &[k, v] : read_key_values(run_dir / "config.cfg")) s.set(k, v);
  return s;
}

std::string absolute_or_empty(const std::string &p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Collects artifacts of a run and writes manifest.json last.
class Manifest {
 public:
  Manifest(std::string command, const RunSettings &settings) : started_(utc_now()) {
    doc_["command"] = std::move(command);
    doc_["run_name"] = settings.run_name;
    for (const auto &[k, v] : settings.entries()) doc_["config"][k] = v;
    for (const auto &key : {"train", "val", "test"}) {
      const std::string path = doc_["config"][key];
      if (!path.empty() && fs::exists(path)) doc_["inputs"][key] = {{"path", path}, {"hash", git_blob_hash_file(path)}};
    }
  }

  void artifact(const fs::path &path) {
    doc_["artifacts"].push_back({{"path", path.filename().string()}, {"hash", git_blob_hash_file(path)}});
  }

  nlohmann::json &doc() { return doc_; }

  void write(const fs::path &run_dir) {
    doc_["started"] = started_;
    doc_["finished"] = utc_now();
    write_file_atomic(run_dir / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  nlohmann::json doc_;
  std::string started_;
};

fs::path prepare_run_dir(const RunSettings &s, bool force) {
  if (s.run_name.empty()) throw UsageError("run name is empty");
  const fs::path dir = fs::path(s.out_dir) / s.run_name;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw UsageError("run directory " + dir.string() + " already exists; pass --force to replace it");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  return dir;
}

std::string default_run_name(const TrainConfig &c) {
  return fmt::format("{}-seed{}", to_string(c.loss), c.seed);
}

void append_line(const fs::path &path, const std::string &line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("cannot append to " + path.string());
  out << line << '\n';
}

SplitCorpus load_settings_corpus(const RunSettings &s) {
  if (s.train_path.empty() || s.val_path.empty() || s.test_path.empty()) {
    throw UsageError("--train, --val and --test (or a config file setting them) are required");
  }
  return load_corpus(s.train_path, s.val_path, s.test_path, s.limits);
}

std::map<std::string, std::string> checkpoint_metadata(const RunSettings &s, std::size_t epoch) {
  return {{"run_name", s.run_name}, {"loss", std::string(to_string(s.train.loss))}, {"epoch", std::to_string(epoch)}};
}

/// Flags that override `key = value` settings, applied in command-line order.
struct Overrides {
  Settings values;

  void add(CLI::App *app, const std::string &flag, const std::string &key, const std::string &help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string &v) { values.emplace_back(key, v); }, help);
  }
};

void add_corpus_flags(CLI::App *app, Overrides &o) {
  o.add(app, "--train", "train", "training split (JSON lines with id, code, summary)");
  o.add(app, "--val", "val", "validation split");
  o.add(app, "--test", "test", "test split");
  o.add(app, "--code-vocab", "code_vocab", "source-code vocabulary cap v, including specials (default 75000)");
  o.add(app, "--summary-vocab", "summary_vocab", "summary vocabulary cap z, including specials (default 10908)");
  o.add(app, "--max-code-len", "max_code_len", "code tokens kept per sample t (default 50)");
  o.add(app, "--max-summary-len", "max_summary_len", "summary ids kept including start/end w (default 13)");
}

std::string json_split(const SplitStats &s) {
  return nlohmann::json({{"samples", s.samples},
                         {"mean_code_len", s.mean_code_len},
                         {"mean_summary_len", s.mean_summary_len},
                         {"truncated_code", s.truncated_code},
                         {"truncated_summary", s.truncated_summary},
                         {"code_unknown_rate", s.code_unknown_rate},
                         {"summary_unknown_rate", s.summary_unknown_rate}})
      .dump();
}

std::vector<double> parse_doubles(const std::string &csv, const std::string &what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(to_number<double>(what, trim(field)));
  return out;
}

int seed_from_env(std::uint64_t &seed) {
  if (const char *env = std::getenv("SEQLOSS_SEED")) {
    seed = to_number<std::uint64_t>("SEQLOSS_SEED", env);
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_dataset_stats(const Overrides &o, bool as_json, std::ostream &out) {
  RunSettings s;
  for (const auto &[k, v] : o.values) s.set(k, v);
  const auto corpus = load_settings_corpus(s);
  const auto st = corpus_stats(corpus);
  if (as_json) {
    out << nlohmann::json({{"train", nlohmann::json::parse(json_split(st.train))},
                           {"val", nlohmann::json::parse(json_split(st.val))},
                           {"test", nlohmann::json::parse(json_split(st.test))},
                           {"code_vocab_size", st.code_vocab_size},
                           {"summary_vocab_size", st.summary_vocab_size}})
               .dump(2)
        << "\n";
    return kExitOk;
  }
  out << fmt::format("code vocabulary:    {}\nsummary vocabulary: {}\n", st.code_vocab_size, st.summary_vocab_size);
  out << fmt::format("{:<6} {:>8} {:>10} {:>12} {:>10} {:>10} {:>9} {:>9}\n", "split", "samples", "code len",
                     "summary len", "trunc code", "trunc summ", "code unk", "summ unk");
  for (const auto &[name, sp] : {std::pair{"train", st.train}, {"val", st.val}, {"test", st.test}}) {
    out << fmt::format("{:<6} {:>8} {:>10.2f} {:>12.2f} {:>10} {:>10} {:>9.4f} {:>9.4f}\n", name, sp.samples,
                       sp.mean_code_len, sp.mean_summary_len, sp.truncated_code, sp.truncated_summary,
                       sp.code_unknown_rate, sp.summary_unknown_rate);
  }
  return kExitOk;
}

RunSettings resolve_train_settings(const std::string &config_path, const Overrides &o, bool seed_given) {
  RunSettings s;
  bool config_has_seed = false;
  if (!config_path.empty()) {
    for (const auto &[k, v] : read_key_values(config_path)) {
      s.set(k, v);
      config_has_seed |= k == "seed";
    }
  }
  if (!seed_given && !config_has_seed) seed_from_env(s.train.seed);
  for (const auto &[k, v] : o.values) s.set(k, v);
  s.train_path = absolute_or_empty(s.train_path);
  s.val_path = absolute_or_empty(s.val_path);
  s.test_path = absolute_or_empty(s.test_path);
  if (s.run_name.empty()) s.run_name = default_run_name(s.train);
  s.train.validate();
  return s;
}

int cmd_train(const RunSettings &s, bool force, std::ostream &out) {
  auto corpus = load_settings_corpus(s);
  const fs::path dir = prepare_run_dir(s, force);
  write_file_atomic(dir / "config.cfg", s.to_text());
  corpus.code_vocab.save(dir / "code.vocab");
  corpus.summary_vocab.save(dir / "summary.vocab");

  Manifest manifest("train", s);
  const fs::path log = dir / "epochs.jsonl";
  write_file_atomic(log, "");

  const bool reward_loss = s.train.loss == LossKind::kBleu || s.train.loss == LossKind::kSimile;
  RunSettings base = s;
  if (reward_loss) base.train.loss = LossKind::kCce;

  std::vector<fs::path> checkpoints;
  auto on_epoch = [&](const EpochRecord &rec, const Seq2SeqModel &model) {
    append_line(log, rec.to_json());
    const fs::path ck = dir / fmt::format("epoch{}.ckpt", rec.epoch);
    save_checkpoint(ck, model, checkpoint_metadata(base, rec.epoch));
    checkpoints.push_back(ck);
    out << fmt::format("epoch {:>3}  train loss {:.6f}  val accuracy {:.4f}  ({:.1f}s)\n", rec.epoch, rec.train_loss,
                       rec.val_accuracy, rec.wall_seconds);
  };
  auto result = train(base.train, corpus, on_epoch);
  out << fmt::format("best epoch: {}\n", result.best_epoch);

  fs::path chosen = dir / fmt::format("epoch{}.ckpt", result.best_epoch);
  if (reward_loss) {
    auto tuned = fine_tune(result.best_model, s.train, corpus);
    append_line(log, tuned.record.to_json());
    chosen = dir / fmt::format("epoch{}.ckpt", tuned.record.epoch);
    save_checkpoint(chosen, tuned.model, checkpoint_metadata(s, tuned.record.epoch));
    checkpoints.push_back(chosen);
    out << fmt::format("fine-tune ({}) train loss {:.6f}  val accuracy {:.4f}\n", to_string(s.train.loss),
                       tuned.record.train_loss, tuned.record.val_accuracy);
  }

  for (const auto &name : {"config.cfg", "code.vocab", "summary.vocab", "epochs.jsonl"}) manifest.artifact(dir / name);
  for (const auto &ck : checkpoints) manifest.artifact(ck);
  manifest.doc()["best_epoch"] = result.best_epoch;
  manifest.doc()["checkpoint"] = chosen.filename().string();
  manifest.doc()["checkpoint_hash"] = git_blob_hash_file(chosen);
  manifest.write(dir);
  out << "run directory: " << dir.string() << "\n";
  return kExitOk;
}

fs::path run_checkpoint(const fs::path &run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) throw ConfigError("no manifest in run directory " + run_dir.string());
  const auto doc = nlohmann::json::parse(in);
  return run_dir / doc.at("checkpoint").get<std::string>();
}

int cmd_finetune(const fs::path &base_dir, const std::string &loss, const std::string &run_name,
                 const std::string &out_dir, bool force, std::ostream &out) {
  const LossKind kind = parse_loss_kind(loss);
  if (kind != LossKind::kBleu && kind != LossKind::kSimile) {
    throw UsageError("finetune takes --loss bleu or simile; " + loss +
                     " is a drop-in training loss and has no fine-tuning stage");
  }
  RunSettings s = load_run_settings(base_dir);
  if (s.train.loss != LossKind::kCce) {
    throw UsageError("finetune expects a base run trained with cce, got " + std::string(to_string(s.train.loss)));
  }
  s.train.loss = kind;
  s.run_name = run_name.empty() ? fs::path(base_dir).filename().string() + "-" + loss : run_name;
  if (!out_dir.empty()) s.out_dir = out_dir;
  else s.out_dir = fs::path(base_dir).parent_path().string();

  auto corpus = load_settings_corpus(s);
  auto base = load_checkpoint(run_checkpoint(base_dir));
  const fs::path dir = prepare_run_dir(s, force);
  write_file_atomic(dir / "config.cfg", s.to_text());
  corpus.code_vocab.save(dir / "code.vocab");
  corpus.summary_vocab.save(dir / "summary.vocab");
  Manifest manifest("finetune", s);
  manifest.doc()["base_run"] = fs::absolute(base_dir).lexically_normal().string();

  auto tuned = fine_tune(base.model, s.train, corpus);
  write_file_atomic(dir / "epochs.jsonl", tuned.record.to_json() + "\n");
  const fs::path ck = dir / fmt::format("epoch{}.ckpt", tuned.record.epoch);
  save_checkpoint(ck, tuned.model, checkpoint_metadata(s, tuned.record.epoch));
  for (const auto &name : {"config.cfg", "code.vocab", "summary.vocab", "epochs.jsonl"}) manifest.artifact(dir / name);
  manifest.artifact(ck);
  manifest.doc()["fine_tune_epochs"] = 1;
  manifest.doc()["checkpoint"] = ck.filename().string();
  manifest.doc()["checkpoint_hash"] = git_blob_hash_file(ck);
  manifest.write(dir);
  out << fmt::format("fine-tune ({}) train loss {:.6f}  val accuracy {:.4f}\nrun directory: {}\n", loss,
                     tuned.record.train_loss, tuned.record.val_accuracy, dir.string());
  return kExitOk;
}

int cmd_predict(const fs::path &run_dir, const std::string &test_override, const std::string &out_path,
                const std::string &refs_path, std::ostream &out) {
  const RunSettings s = load_run_settings(run_dir);
  const auto code_vocab = Vocabulary::load(run_dir / "code.vocab");
  const auto summary_vocab = Vocabulary::load(run_dir / "summary.vocab");
  const auto ck = load_checkpoint(run_checkpoint(run_dir));
  const std::string test_path = test_override.empty() ? s.test_path : test_override;

  std::vector<Sample> samples;
  for (const auto &r : read_records(test_path)) samples.push_back(encode_record(r, code_vocab, summary_vocab, s.limits));

  const auto lines = predict(ck.model, samples, summary_vocab, s.limits.max_summary_len);
  std::vector<PredictionLine> refs;
  for (const auto &smp : samples) refs.push_back({smp.id, smp.reference_tokens});
  const fs::path pred_file = out_path.empty() ? run_dir / "predictions.txt" : fs::path(out_path);
  const fs::path ref_file = refs_path.empty() ? run_dir / "references.txt" : fs::path(refs_path);
  write_sentences(pred_file, lines);
  write_sentences(ref_file, refs);
  out << fmt::format("{} predictions written to {}\n", lines.size(), pred_file.string());
  return kExitOk;
}

int cmd_evaluate(const std::string &run_dir, std::string predictions, std::string references, std::string embedder,
                 std::string loss_label, std::string dataset_label, std::string out_path, std::ostream &out) {
  if (!run_dir.empty()) {
    const RunSettings s = load_run_settings(run_dir);
    if (predictions.empty()) predictions = (fs::path(run_dir) / "predictions.txt").string();
    if (references.empty()) references = (fs::path(run_dir) / "references.txt").string();
    if (embedder.empty()) embedder = s.train.embedder;
    if (loss_label.empty()) loss_label = std::string(to_string(s.train.loss));
    if (dataset_label.empty()) dataset_label = fs::path(s.test_path).stem().string();
    if (out_path.empty()) out_path = (fs::path(run_dir) / "report.json").string();
  }
  if (predictions.empty() || references.empty() || embedder.empty()) {
    throw UsageError("evaluate needs --run or all of --predictions, --references and --embedder");
  }
  const auto preds = read_sentences(predictions);
  const auto refs = read_sentences(references);
  if (preds.size() != refs.size()) {
    throw ConfigError(fmt::format("{} predictions but {} references", preds.size(), refs.size()));
  }
  std::vector<std::string> ids;
  std::vector<TokenSeq> p, r;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k].id != refs[k].id) {
      throw ConfigError(fmt::format("line {}: prediction id '{}' does not match reference id '{}'", k + 1,
                                    preds[k].id, refs[k].id));
    }
    ids.push_back(preds[k].id);
    p.push_back(preds[k].tokens);
    r.push_back(refs[k].tokens);
  }
  const auto provider = make_provider(embedder);
  auto report = evaluate_predictions(*provider, ids, p, r);
  report.loss = loss_label;
  report.dataset = dataset_label;
  if (!out_path.empty()) write_file_atomic(out_path, report.to_json() + "\n");
  out << fmt::format("{:<22} {:>8}\n{:<22} {:>8.2f}\n{:<22} {:>8.2f}\n{:<22} {:>8.2f}\n", "samples", ids.size(),
                     "METEOR (M)", report.mean_meteor, "embedding sim (U)", report.mean_embed_sim, "corpus BLEU (B)",
                     report.corpus_bleu);
  if (!out_path.empty()) out << "report: " << out_path << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string> &runs, const std::vector<std::string> &report_files,
                const std::string &reference, double alpha, const std::string &out_path, std::ostream &out) {
  std::vector<std::string> files;
  for (const auto &r : runs) files.push_back((fs::path(r) / "report.json").string());
  files.insert(files.end(), report_files.begin(), report_files.end());
  if (files.size() < 2) throw UsageError("compare needs at least two runs or reports");

  std::vector<MetricsReport> reports;
  for (const auto &f : files) {
    std::ifstream in(f);
    if (!in) throw ConfigError("cannot open report " + f + " (run `evaluate --run` first)");
    std::stringstream ss;
    ss << in.rdbuf();
    reports.push_back(MetricsReport::from_json(ss.str()));
  }
  const auto table = comparison_table(reports, reference, alpha);
  out << table.render();
  if (!out_path.empty()) write_file_atomic(out_path, table.to_json() + "\n");
  return kExitOk;
}

int cmd_loss_demo(const LossDemoInput &input, std::ostream &out) {
  const auto loss = loss_demo(input);
  out << format_loss_table(input, loss);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Train and evaluate code summarization models under interchangeable loss functions", "seqloss"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "seqloss 1.0.0");

  // dataset-stats
  Overrides stats_flags;
  bool stats_json = false;
  auto *stats = app.add_subcommand("dataset-stats", "Load a dataset and print split and vocabulary statistics");
  add_corpus_flags(stats, stats_flags);
  stats->add_flag("--json", stats_json, "print statistics as JSON");

  // train
  Overrides train_flags;
  std::string train_config;
  bool train_force = false;
  bool seed_given = false;
  auto *train_cmd = app.add_subcommand("train", "Train a model; writes out/<run-name>/epoch<k>.ckpt and a manifest");
  train_cmd->add_option("--config", train_config, "file of `key = value` settings (flags override it)");
  add_corpus_flags(train_cmd, train_flags);
  train_cmd->add_option_function<std::string>(
      "--loss", [&](const std::string &v) { train_flags.values.emplace_back("loss", v); },
      "loss function: cce, use-seq, bleu or simile (bleu/simile: cce training plus one fine-tuning epoch)")
      ->check(CLI::IsMember({"cce", "use-seq", "bleu", "simile"}));
  train_flags.add(train_cmd, "--beta", "beta", "use-seq temperature (default 0.8)");
  train_flags.add(train_cmd, "--epochs", "epochs", "training epochs (default 10)");
  train_flags.add(train_cmd, "--batch-size", "batch_size", "batch size b (default 50)");
  train_flags.add(train_cmd, "--lr", "learning_rate", "Adam learning rate r (default 1e-4)");
  train_cmd->add_option_function<std::string>(
      "--seed",
      [&](const std::string &v) {
        seed_given = true;
        train_flags.values.emplace_back("seed", v);
      },
      "random seed (fallback: SEQLOSS_SEED, then 0)");
  train_flags.add(train_cmd, "--embedder", "embedder", "fixture:<path> or hashed:<seed>:<dim> (default hashed:0:512)");
  train_flags.add(train_cmd, "--embed-dim", "embed_dim", "embedding dimension e (default 100)");
  train_flags.add(train_cmd, "--hidden-dim", "hidden_dim", "GRU hidden size h (default 256)");
  train_flags.add(train_cmd, "--init-scale", "init_scale", "uniform initialization half-width (default 0.08)");
  train_flags.add(train_cmd, "--run-name", "run_name", "run directory name (default <loss>-seed<seed>)");
  train_flags.add(train_cmd, "--out-dir", "out_dir", "parent directory of run directories (default out)");
  train_cmd->add_flag("--force", train_force, "replace an existing run directory");

  // finetune
  std::string ft_run, ft_loss, ft_name, ft_out;
  bool ft_force = false;
  auto *ft = app.add_subcommand("finetune", "One fine-tuning epoch of a cce run with the bleu or simile loss");
  ft->add_option("--run", ft_run, "base run directory (trained with cce)")->required();
  ft->add_option("--loss", ft_loss, "bleu or simile")->required();
  ft->add_option("--run-name", ft_name, "output run name (default <base>-<loss>)");
  ft->add_option("--out-dir", ft_out, "parent directory for the output run (default: next to the base run)");
  ft->add_flag("--force", ft_force, "replace an existing run directory");

  // predict
  std::string pr_run, pr_test, pr_out, pr_refs;
  auto *pr = app.add_subcommand("predict", "Greedy-decode the test split with a run's selected checkpoint");
  pr->add_option("--run", pr_run, "run directory")->required();
  pr->add_option("--test", pr_test, "test split to decode (default: the run's test split)");
  pr->add_option("--out", pr_out, "prediction file (default <run>/predictions.txt)");
  pr->add_option("--refs-out", pr_refs, "reference file (default <run>/references.txt)");

  // evaluate
  std::string ev_run, ev_pred, ev_refs, ev_embedder, ev_loss, ev_dataset, ev_out;
  auto *ev = app.add_subcommand("evaluate", "Score predictions with METEOR, embedding similarity and corpus BLEU");
  ev->add_option("--run", ev_run, "run directory (fills in the other options and writes <run>/report.json)");
  ev->add_option("--predictions", ev_pred, "prediction file, `id<TAB>tokens` per line");
  ev->add_option("--references", ev_refs, "reference file, `id<TAB>tokens` per line, same order");
  ev->add_option("--embedder", ev_embedder, "fixture:<path> or hashed:<seed>:<dim>");
  ev->add_option("--loss", ev_loss, "loss label stored in the report");
  ev->add_option("--dataset", ev_dataset, "dataset label stored in the report");
  ev->add_option("--out", ev_out, "report file (JSON)");

  // compare
  std::vector<std::string> cmp_runs, cmp_reports;
  std::string cmp_reference = "use-seq", cmp_out;
  double cmp_alpha = 0.05;
  auto *cmp = app.add_subcommand("compare", "Tabulate evaluated runs with win counts and paired t-tests");
  cmp->add_option("--run", cmp_runs, "evaluated run directory (repeatable)");
  cmp->add_option("--report", cmp_reports, "report file (repeatable)");
  cmp->add_option("--reference", cmp_reference, "loss the others are tested against (default use-seq)");
  cmp->add_option("--alpha", cmp_alpha, "significance level (default 0.05)");
  cmp->add_option("--out", cmp_out, "write the table as JSON");

  // loss-demo
  LossDemoInput demo;
  std::string demo_cce, demo_incorrect, demo_words;
  auto *dm = app.add_subcommand("loss-demo", "Print the per-word use-seq loss table for one sequence");
  dm->add_option("--sim", demo.similarity, "sequence similarity (default 0.8665)");
  dm->add_option("--beta", demo.beta, "temperature beta (default 0.8)");
  dm->add_option("--cce", demo_cce, "comma-separated per-word CCE values (default 0.04,0.05,0.80,0.06)");
  dm->add_option("--incorrect-positions", demo_incorrect, "comma-separated 1-based incorrect positions (default 3)");
  dm->add_option("--words", demo_words, "comma-separated predicted words (default records,a,sound,file)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*stats) return cmd_dataset_stats(stats_flags, stats_json, out);
    if (*train_cmd) return cmd_train(resolve_train_settings(train_config, train_flags, seed_given), train_force, out);
    if (*ft) return cmd_finetune(ft_run, ft_loss, ft_name, ft_out, ft_force, out);
    if (*pr) return cmd_predict(pr_run, pr_test, pr_out, pr_refs, out);
    if (*ev) return cmd_evaluate(ev_run, ev_pred, ev_refs, ev_embedder, ev_loss, ev_dataset, ev_out, out);
    if (*cmp) return cmd_compare(cmp_runs, cmp_reports, cmp_reference, cmp_alpha, cmp_out, out);
    if (*dm) {
      if (!demo_cce.empty()) {
        demo.cce = parse_doubles(demo_cce, "--cce");
        if (demo_words.empty()) {
          demo.words.clear();
          for (std::size_t i = 1; i <= demo.cce.size(); ++i) demo.words.push_back("w" + std::to_string(i));
        }
      }
      if (!demo_incorrect.empty()) {
        demo.incorrect_positions.clear();
        for (double p : parse_doubles(demo_incorrect, "--incorrect-positions")) {
          demo.incorrect_positions.push_back(static_cast<std::size_t>(p));
        }
      }
      if (!demo_words.empty()) {
        demo.words.clear();
        std::stringstream ss(demo_words);
        std::string w;
        while (std::getline(ss, w, ',')) demo.words.push_back(trim(w));
      }
      return cmd_loss_demo(demo, out);
    }
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace seqloss
