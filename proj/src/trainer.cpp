// SPDX-License-Identifier: Apache-2.0
#include "seqloss/trainer.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "seqloss/adam.hpp"
#include "seqloss/content_hash.hpp"
#include "seqloss/error.hpp"
#include "seqloss/ops.hpp"

namespace seqloss {

namespace {

template <typename T>
T parse_value(const std::string &key, const std::string &text) {
  T value{};
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return value;
}

std::string format_double(double v) { return fmt::format("{}", v); }

// Forward, loss, backward and one optimizer step over a batch.
double train_batch(Seq2SeqModel &model, AdamState &adam, const Batch &batch, const SplitCorpus &corpus,
                   LossKind kind, const UseSeqConfig &use_seq, const RewardConfig &reward) {
  model.zero_grad();
  std::vector<TeacherForcedPass> passes;
  passes.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    passes.push_back(model.forward_teacher_forced(batch.code(i), batch.summary(i)));
  }
  std::vector<SequenceScores> outputs;
  outputs.reserve(passes.size());
  for (const auto &p : passes) outputs.push_back({p.probabilities, p.targets});

  BatchLoss loss;
  switch (kind) {
    case LossKind::kCce: loss = cce_batch_loss(outputs); break;
    case LossKind::kUseSeq: loss = use_seq_batch_loss(outputs, corpus.summary_vocab, use_seq); break;
    case LossKind::kBleu:
    case LossKind::kSimile: {
      std::vector<std::vector<std::string>> decoded;
      decoded.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto ids = model.greedy_decode(batch.code(i), corpus.limits.max_summary_len);
        decoded.push_back(corpus.summary_vocab.decode(ids));
      }
      loss = sequence_reward_loss(kind, outputs, decoded, corpus.summary_vocab, reward);
      break;
    }
  }

  const double scale = loss.gradient_scale();
  for (std::size_t i = 0; i < passes.size(); ++i) {
    std::vector<double> w = loss.weights[i];
    for (double &x : w) x *= scale;
    model.backward(passes[i], w);
  }
  adam.step(model.parameters());
  return loss.total;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("model dimensions must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
}

void TrainConfig::set(const std::string &key, const std::string &value) {
  if (key == "epochs") epochs = parse_value<std::size_t>(key, value);
  else if (key == "loss") loss = parse_loss_kind(value);
  else if (key == "beta") beta = parse_value<double>(key, value);
  else if (key == "batch_size") batch_size = parse_value<std::size_t>(key, value);
  else if (key == "learning_rate") learning_rate = parse_value<double>(key, value);
  else if (key == "seed") seed = parse_value<std::uint64_t>(key, value);
  else if (key == "embedder") embedder = value;
  else if (key == "embed_dim") embed_dim = parse_value<std::size_t>(key, value);
  else if (key == "hidden_dim") hidden_dim = parse_value<std::size_t>(key, value);
  else if (key == "init_scale") init_scale = parse_value<double>(key, value);
  else throw ConfigError("unknown training setting: " + key);
}

std::vector<std::pair<std::string, std::string>> TrainConfig::entries() const {
  return {{"epochs", std::to_string(epochs)},
          {"loss", std::string(to_string(loss))},
          {"beta", format_double(beta)},
          {"batch_size", std::to_string(batch_size)},
          {"learning_rate", format_double(learning_rate)},
          {"seed", std::to_string(seed)},
          {"embedder", embedder},
          {"embed_dim", std::to_string(embed_dim)},
          {"hidden_dim", std::to_string(hidden_dim)},
          {"init_scale", format_double(init_scale)}};
}

std::string EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch},
                      {"train_loss", train_loss},
                      {"val_accuracy", val_accuracy},
                      {"wall_seconds", wall_seconds},
                      {"fine_tune", fine_tune}};
  return j.dump();
}

ModelConfig model_config(const TrainConfig &config, const SplitCorpus &corpus) {
  ModelConfig mc;
  mc.code_vocab = corpus.code_vocab.size();
  mc.summary_vocab = corpus.summary_vocab.size();
  mc.embed_dim = config.embed_dim;
  mc.hidden_dim = config.hidden_dim;
  mc.init_scale = config.init_scale;
  mc.seed = config.seed;
  return mc;
}

double validation_accuracy(const Seq2SeqModel &model, std::span<const Sample> samples) {
  std::size_t correct = 0, total = 0;
  for (const auto &s : samples) {
    if (s.target_count() == 0) continue;
    const auto pass = model.forward_teacher_forced(s.code_ids, s.summary_ids);
    for (std::size_t i = 0; i < pass.positions(); ++i) {
      if (pass.targets[i] == kPadId) continue;
      ++total;
      if (ops::argmax(pass.probabilities.col(static_cast<Eigen::Index>(i))) == pass.targets[i]) ++correct;
    }
  }
  if (total == 0) throw ConfigError("validation accuracy needs at least one target position");
  return static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(const TrainConfig &config, const SplitCorpus &corpus, const EpochCallback &on_epoch) {
  config.validate();
  if (config.loss == LossKind::kBleu || config.loss == LossKind::kSimile) {
    throw ConfigError("bleu and simile are fine-tuning losses; train with cce first, then fine-tune");
  }
  if (corpus.val.empty()) throw ConfigError("validation split is empty");

  UseSeqConfig use_seq;
  use_seq.beta = config.beta;
  if (config.loss == LossKind::kUseSeq) use_seq.provider = make_provider(config.embedder);

  Seq2SeqModel model(model_config(config, corpus));
  AdamState adam(model.parameters(), AdamConfig{.learning_rate = config.learning_rate});

  TrainResult result{model, 0, {}};
  double best_acc = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      const auto batches = batchify(corpus.train, config.batch_size, config.seed + epoch);
      double loss_sum = 0.0;
      for (const auto &batch : batches) {
        loss_sum += train_batch(model, adam, batch, corpus, config.loss, use_seq, RewardConfig{});
      }
      rec.train_loss = loss_sum / static_cast<double>(batches.size());
      rec.val_accuracy = validation_accuracy(model, corpus.val);
    } catch (const DivergenceError &e) {
      throw DivergenceError(fmt::format("training diverged in epoch {} (last good epoch: {}): {}", epoch,
                                        epoch - 1, e.what()));
    }
    rec.wall_seconds = seconds_since(start);
    result.records.push_back(rec);
    if (rec.val_accuracy > best_acc) {
      best_acc = rec.val_accuracy;
      result.best_epoch = epoch;
      result.best_model = model;
    }
    if (on_epoch) on_epoch(rec, model);
  }
  return result;
}

FineTuneResult fine_tune(const Seq2SeqModel &base, const TrainConfig &config, const SplitCorpus &corpus) {
  config.validate();
  if (config.loss != LossKind::kBleu && config.loss != LossKind::kSimile) {
    throw ConfigError("fine-tuning takes loss bleu or simile; " + std::string(to_string(config.loss)) +
                      " is trained directly and needs no fine-tuning epoch");
  }
  if (corpus.val.empty()) throw ConfigError("validation split is empty");

  RewardConfig reward;
  if (config.loss == LossKind::kSimile) reward.provider = make_provider(config.embedder);

  FineTuneResult result{base, {}};
  AdamState adam(result.model.parameters(), AdamConfig{.learning_rate = config.learning_rate});
  const auto start = std::chrono::steady_clock::now();
  // The fine-tuning epoch follows the base run's last epoch in the shuffle sequence.
  const auto batches = batchify(corpus.train, config.batch_size, config.seed + config.epochs + 1);
  double loss_sum = 0.0;
  for (const auto &batch : batches) {
    loss_sum += train_batch(result.model, adam, batch, corpus, config.loss, UseSeqConfig{}, reward);
  }
  result.record.epoch = config.epochs + 1;
  result.record.fine_tune = true;
  result.record.train_loss = loss_sum / static_cast<double>(batches.size());
  result.record.val_accuracy = validation_accuracy(result.model, corpus.val);
  result.record.wall_seconds = seconds_since(start);
  return result;
}

std::vector<PredictionLine> predict(const Seq2SeqModel &model, std::span<const Sample> samples,
                                    const Vocabulary &summary_vocab, std::size_t max_len) {
  std::vector<PredictionLine> out;
  out.reserve(samples.size());
  for (const auto &s : samples) {
    out.push_back({s.id, summary_vocab.decode(model.greedy_decode(s.code_ids, max_len))});
  }
  return out;
}

void write_sentences(const std::filesystem::path &path, std::span<const PredictionLine> lines) {
  std::string text;
  for (const auto &l : lines) text += l.id + "\t" + join_tokens(l.tokens) + "\n";
  write_file_atomic(path, text);
}

std::vector<PredictionLine> read_sentences(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sentence file: " + path.string());
  std::vector<PredictionLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw FormatError(path.string(), lineno, "expected id<TAB>sentence");
    PredictionLine p{line.substr(0, tab), {}};
    std::istringstream words(line.substr(tab + 1));
    std::string w;
    while (words >> w) p.tokens.push_back(w);
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t predict_test(const Seq2SeqModel &model, const SplitCorpus &corpus, const std::filesystem::path &out) {
  const auto lines = predict(model, corpus.test, corpus.summary_vocab, corpus.limits.max_summary_len);
  write_sentences(out, lines);
  return lines.size();
}

}  // namespace seqloss
