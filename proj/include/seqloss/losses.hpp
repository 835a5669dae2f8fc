// SPDX-License-Identifier: Apache-2.0
//
// Per-word loss weighting: plain CCE, the semantic-similarity use-seq loss,
// and the BLEU / SimiLE sequence-reward losses used for fine-tuning.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqloss/corpus.hpp"
#include "seqloss/embedder.hpp"

namespace seqloss {

inline constexpr double kProbabilityFloor = 1e-12;

enum class LossKind { kCce, kUseSeq, kBleu, kSimile };

std::string_view to_string(LossKind kind);
/// Accepts cce, use-seq, bleu, simile; throws ConfigError listing them otherwise.
LossKind parse_loss_kind(std::string_view name);

struct LossDiagnostics {
  std::size_t floored = 0;  // reference probabilities raised to kProbabilityFloor
};

/// -log(max(p[reference], 1e-12)).
double cce_word_loss(const Eigen::Ref<const Eigen::VectorXd> &distribution, TokenId reference,
                     LossDiagnostics *diagnostics = nullptr);

struct Prediction {
  std::vector<TokenId> ids;         // argmax at every position
  std::vector<std::string> words;   // surface sequence up to the first predicted end
};

/// Argmax per column (lowest id on ties); words drop start/pad and stop at end.
Prediction detokenize_prediction(const Eigen::MatrixXd &distributions, const Vocabulary &vocab);

std::vector<double> broadcast_similarity(double similarity, std::size_t positions);

/// exp(similarity / beta); throws std::invalid_argument unless beta > 0.
double exp_reward(double similarity, double beta);

/// Similarity multiplier for one word, or nullopt when masked:
/// correct and sim > 0 gives exp(sim / beta); incorrect and sim < 0 gives
/// exp(-sim / beta); everything else (including sim == 0) is masked.
std::optional<double> mask_multiplier(bool word_correct, double similarity, double beta);

struct WordLossRecord {
  std::size_t sample = 0;
  std::size_t position = 0;
  TokenId reference_id = kPadId;
  TokenId predicted_id = kPadId;
  double cce = 0.0;
  double similarity = 0.0;
  std::optional<double> multiplier;  // nullopt means masked
  double weighted_loss = 0.0;

  bool masked() const { return !multiplier.has_value(); }
  /// Factor applied to the CCE gradient at this position.
  double weight() const { return multiplier.value_or(1.0); }
};

struct BatchLoss {
  std::vector<WordLossRecord> records;      // non-pad positions only
  double total = 0.0;                       // mean weighted loss over records
  std::vector<std::vector<double>> weights; // per sample, per position; 0 at pad
  std::vector<double> sequence_scores;      // per-sample similarity or reward
  LossDiagnostics diagnostics;

  /// d(total) / d(position logits) = weights[s][i] / records.size() * d(cce)/d(logits).
  double gradient_scale() const { return records.empty() ? 0.0 : 1.0 / static_cast<double>(records.size()); }
};

/// Teacher-forced output for one sample: column i is the distribution for targets[i].
struct SequenceScores {
  const Eigen::MatrixXd &probabilities;
  std::span<const TokenId> targets;
};

struct UseSeqConfig {
  std::shared_ptr<const EmbeddingProvider> provider;
  double beta = 0.8;
};

/// Plain mean CCE; every position is reported as masked with weight 1.
BatchLoss cce_batch_loss(std::span<const SequenceScores> outputs);

/// Applies the similarity weighting to one sequence's word losses given the
/// per-position correctness and the sequence similarity.
std::vector<WordLossRecord> weigh_sequence(std::span<const double> cce, std::span<const TokenId> references,
                                           std::span<const TokenId> predictions, double similarity, double beta);

/// For each sample: detokenize the argmax prediction, embed it and the reference,
/// broadcast the cosine to every word, mask, exponentiate and scale the CCE.
/// The similarity is a constant with respect to the model.
BatchLoss use_seq_batch_loss(std::span<const SequenceScores> outputs, const Vocabulary &vocab,
                             const UseSeqConfig &config);

struct RewardConfig {
  std::shared_ptr<const EmbeddingProvider> provider;  // needed for simile
  double simile_alpha = 0.25;
  double floor = 0.05;
};

/// exp(1 - max(|r|, |h|) / min(|r|, |h|)); 0 if either is empty.
double simile_length_penalty(std::size_t reference_len, std::size_t hypothesis_len);

/// Sequence reward in [0, 1]: smoothed sentence BLEU, or LP^alpha * max(0, cosine).
double sequence_reward(LossKind kind, const std::vector<std::string> &decoded,
                       const std::vector<std::string> &reference, const RewardConfig &config);

/// Scales every word's CCE by (1 - R) + floor, R from `decoded` vs the reference.
BatchLoss sequence_reward_loss(LossKind kind, std::span<const SequenceScores> outputs,
                               std::span<const std::vector<std::string>> decoded, const Vocabulary &vocab,
                               const RewardConfig &config);

/// Inputs of the worked per-word loss table. Positions are 1-based.
struct LossDemoInput {
  std::vector<std::string> words = {"records", "a", "sound", "file"};
  std::vector<double> cce = {0.04, 0.05, 0.80, 0.06};
  std::vector<std::size_t> incorrect_positions = {3};
  double similarity = 0.8665;
  double beta = 0.8;
};

BatchLoss loss_demo(const LossDemoInput &input);
std::string format_loss_table(const LossDemoInput &input, const BatchLoss &loss);

}  // namespace seqloss
