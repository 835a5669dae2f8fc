// SPDX-License-Identifier: Apache-2.0
//
// Training protocol: fixed epoch count with best-validation-epoch selection,
// a one-epoch sequence-reward fine-tuning stage, and test-set prediction.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqloss/corpus.hpp"
#include "seqloss/embedder.hpp"
#include "seqloss/losses.hpp"
#include "seqloss/network.hpp"

namespace seqloss {

struct TrainConfig {
  std::size_t epochs = 10;
  LossKind loss = LossKind::kCce;
  double beta = 0.8;
  std::size_t batch_size = 50;   // b
  double learning_rate = 1e-4;   // r
  std::uint64_t seed = 0;
  std::string embedder = "hashed:0:512";
  std::size_t embed_dim = 100;   // e
  std::size_t hidden_dim = 256;  // h
  double init_scale = 0.08;

  /// Throws ConfigError on a zero epoch/batch count or non-positive rates and dimensions.
  void validate() const;
  /// Applies one `key = value` setting; unknown keys throw ConfigError.
  void set(const std::string &key, const std::string &value);
  std::vector<std::pair<std::string, std::string>> entries() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
  bool fine_tune = false;

  std::string to_json() const;
};

struct TrainResult {
  Seq2SeqModel best_model;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> records;
};

using EpochCallback = std::function<void(const EpochRecord &, const Seq2SeqModel &)>;

ModelConfig model_config(const TrainConfig &config, const SplitCorpus &corpus);

/// Fraction of non-pad teacher-forced positions whose argmax equals the reference.
double validation_accuracy(const Seq2SeqModel &model, std::span<const Sample> samples);

/// Trains `config.epochs` epochs with loss cce or use-seq. Epoch k visits the
/// training batches in the order batchify(train, b, seed + k), independent of
/// the loss. Returns the model of the epoch with the highest validation
/// accuracy (earliest on ties). DivergenceError names the last good epoch.
TrainResult train(const TrainConfig &config, const SplitCorpus &corpus, const EpochCallback &on_epoch = {});

struct FineTuneResult {
  Seq2SeqModel model;
  EpochRecord record;
};

/// Exactly one epoch with the bleu or simile reward loss, using the batch size,
/// learning rate and seed of `config` (a fresh Adam state). Rewards compare the
/// greedy decode of each training sample against its reference. Other loss
/// kinds throw ConfigError.
FineTuneResult fine_tune(const Seq2SeqModel &base, const TrainConfig &config, const SplitCorpus &corpus);

struct PredictionLine {
  std::string id;
  std::vector<std::string> tokens;
};

std::vector<PredictionLine> predict(const Seq2SeqModel &model, std::span<const Sample> samples,
                                    const Vocabulary &summary_vocab, std::size_t max_len);

/// One `id<TAB>space-joined tokens` line per entry.
void write_sentences(const std::filesystem::path &path, std::span<const PredictionLine> lines);
std::vector<PredictionLine> read_sentences(const std::filesystem::path &path);

/// Writes greedy predictions for the test samples; returns the line count.
std::size_t predict_test(const Seq2SeqModel &model, const SplitCorpus &corpus, const std::filesystem::path &out);

}  // namespace seqloss
