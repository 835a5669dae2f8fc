// SPDX-License-Identifier: Apache-2.0
#include "seqloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "seqloss/error.hpp"
#include "seqloss/metrics.hpp"
#include "seqloss/ops.hpp"

namespace seqloss {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCce: return "cce";
    case LossKind::kUseSeq: return "use-seq";
    case LossKind::kBleu: return "bleu";
    case LossKind::kSimile: return "simile";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::kCce, LossKind::kUseSeq, LossKind::kBleu, LossKind::kSimile})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown loss '" + std::string(name) + "' (valid: cce, use-seq, bleu, simile)");
}

double cce_word_loss(const Eigen::Ref<const Eigen::VectorXd> &distribution, TokenId reference,
                     LossDiagnostics *diagnostics) {
  if (reference < 0 || reference >= distribution.size()) {
    throw std::out_of_range("reference id " + std::to_string(reference) + " outside distribution");
  }
  double p = distribution[reference];
  if (p < kProbabilityFloor) {
    p = kProbabilityFloor;
    if (diagnostics) ++diagnostics->floored;
  }
  return -std::log(p);
}

namespace {

std::vector<std::string> surface_words(std::span<const TokenId> ids, const Vocabulary &vocab) {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (id == kEndId) break;
    if (id == kStartId || id == kPadId) continue;
    words.push_back(vocab.token(id));
  }
  return words;
}

double mean_weighted(const std::vector<WordLossRecord> &records) {
  double sum = 0.0;
  for (const auto &r : records) sum += r.weighted_loss;
  return records.empty() ? 0.0 : sum / static_cast<double>(records.size());
}

// Shared bookkeeping: per-position CCE for non-pad targets and argmax predictions.
struct SampleTerms {
  std::vector<double> cce;
  std::vector<TokenId> references;
  std::vector<TokenId> predictions;
  std::vector<std::size_t> positions;  // index into the full target list
};

SampleTerms sample_terms(const SequenceScores &out, LossDiagnostics &diag) {
  if (static_cast<std::size_t>(out.probabilities.cols()) != out.targets.size()) {
    throw std::invalid_argument("distribution count does not match target count");
  }
  SampleTerms t;
  for (std::size_t i = 0; i < out.targets.size(); ++i) {
    if (out.targets[i] == kPadId) continue;
    const auto col = out.probabilities.col(static_cast<Eigen::Index>(i));
    t.cce.push_back(cce_word_loss(col, out.targets[i], &diag));
    t.references.push_back(out.targets[i]);
    t.predictions.push_back(static_cast<TokenId>(ops::argmax(col)));
    t.positions.push_back(i);
  }
  return t;
}

void append_sample(BatchLoss &loss, std::size_t sample, const SequenceScores &out, const SampleTerms &terms,
                   std::vector<WordLossRecord> records) {
  auto &weights = loss.weights.emplace_back(out.targets.size(), 0.0);
  for (std::size_t k = 0; k < records.size(); ++k) {
    records[k].sample = sample;
    records[k].position = terms.positions[k];
    weights[terms.positions[k]] = records[k].weight();
    loss.records.push_back(records[k]);
  }
}

}  // namespace

Prediction detokenize_prediction(const Eigen::MatrixXd &distributions, const Vocabulary &vocab) {
  Prediction p;
  p.ids.reserve(static_cast<std::size_t>(distributions.cols()));
  for (Eigen::Index i = 0; i < distributions.cols(); ++i) {
    p.ids.push_back(static_cast<TokenId>(ops::argmax(distributions.col(i))));
  }
  p.words = surface_words(p.ids, vocab);
  return p;
}

std::vector<double> broadcast_similarity(double similarity, std::size_t positions) {
  if (positions < 1) throw std::invalid_argument("broadcast_similarity needs at least one position");
  return std::vector<double>(positions, similarity);
}

double exp_reward(double similarity, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return std::exp(similarity / beta);
}

std::optional<double> mask_multiplier(bool word_correct, double similarity, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (word_correct && similarity > 0.0) return exp_reward(similarity, beta);
  if (!word_correct && similarity < 0.0) return exp_reward(-similarity, beta);
  return std::nullopt;
}

std::vector<WordLossRecord> weigh_sequence(std::span<const double> cce, std::span<const TokenId> references,
                                           std::span<const TokenId> predictions, double similarity, double beta) {
  if (cce.size() != references.size() || cce.size() != predictions.size()) {
    throw std::invalid_argument("weigh_sequence: mismatched lengths");
  }
  std::vector<WordLossRecord> records;
  if (cce.empty()) return records;
  const auto broadcast = broadcast_similarity(similarity, cce.size());
  records.reserve(cce.size());
  for (std::size_t i = 0; i < cce.size(); ++i) {
    WordLossRecord r;
    r.position = i;
    r.reference_id = references[i];
    r.predicted_id = predictions[i];
    r.cce = cce[i];
    r.similarity = broadcast[i];
    r.multiplier = mask_multiplier(predictions[i] == references[i], broadcast[i], beta);
    r.weighted_loss = r.multiplier ? cce[i] * *r.multiplier : cce[i];
    records.push_back(r);
  }
  return records;
}

BatchLoss cce_batch_loss(std::span<const SequenceScores> outputs) {
  BatchLoss loss;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto terms = sample_terms(outputs[s], loss.diagnostics);
    std::vector<WordLossRecord> records;
    for (std::size_t k = 0; k < terms.cce.size(); ++k) {
      WordLossRecord r;
      r.reference_id = terms.references[k];
      r.predicted_id = terms.predictions[k];
      r.cce = terms.cce[k];
      r.weighted_loss = terms.cce[k];
      records.push_back(r);
    }
    loss.sequence_scores.push_back(0.0);
    append_sample(loss, s, outputs[s], terms, std::move(records));
  }
  loss.total = mean_weighted(loss.records);
  return loss;
}

BatchLoss use_seq_batch_loss(std::span<const SequenceScores> outputs, const Vocabulary &vocab,
                             const UseSeqConfig &config) {
  if (!config.provider) throw ConfigError("use-seq loss needs an embedding provider");
  BatchLoss loss;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto terms = sample_terms(outputs[s], loss.diagnostics);
    const auto predicted = detokenize_prediction(outputs[s].probabilities, vocab);
    const auto reference = surface_words(outputs[s].targets, vocab);
    const double sim = sequence_similarity(*config.provider, predicted.words, reference);
    loss.sequence_scores.push_back(sim);
    append_sample(loss, s, outputs[s], terms,
                  weigh_sequence(terms.cce, terms.references, terms.predictions, sim, config.beta));
  }
  loss.total = mean_weighted(loss.records);
  return loss;
}

double simile_length_penalty(std::size_t reference_len, std::size_t hypothesis_len) {
  if (reference_len == 0 || hypothesis_len == 0) return 0.0;
  const auto longer = static_cast<double>(std::max(reference_len, hypothesis_len));
  const auto shorter = static_cast<double>(std::min(reference_len, hypothesis_len));
  return std::exp(1.0 - longer / shorter);
}

double sequence_reward(LossKind kind, const std::vector<std::string> &decoded,
                       const std::vector<std::string> &reference, const RewardConfig &config) {
  if (decoded.empty()) return 0.0;
  switch (kind) {
    case LossKind::kBleu: return sentence_bleu(decoded, reference);
    case LossKind::kSimile: {
      if (!config.provider) throw ConfigError("simile reward needs an embedding provider");
      const double sim = std::max(0.0, sequence_similarity(*config.provider, decoded, reference));
      return std::pow(simile_length_penalty(reference.size(), decoded.size()), config.simile_alpha) * sim;
    }
    default: throw ConfigError("sequence reward is only defined for bleu and simile");
  }
}

BatchLoss sequence_reward_loss(LossKind kind, std::span<const SequenceScores> outputs,
                               std::span<const std::vector<std::string>> decoded, const Vocabulary &vocab,
                               const RewardConfig &config) {
  if (decoded.size() != outputs.size()) throw std::invalid_argument("one decoded sequence per sample required");
  BatchLoss loss;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto terms = sample_terms(outputs[s], loss.diagnostics);
    const auto reference = surface_words(outputs[s].targets, vocab);
    const double reward = sequence_reward(kind, decoded[s], reference, config);
    const double scale = (1.0 - reward) + config.floor;
    loss.sequence_scores.push_back(reward);
    std::vector<WordLossRecord> records;
    for (std::size_t k = 0; k < terms.cce.size(); ++k) {
      WordLossRecord r;
      r.reference_id = terms.references[k];
      r.predicted_id = terms.predictions[k];
      r.cce = terms.cce[k];
      r.similarity = reward;
      r.multiplier = scale;
      r.weighted_loss = terms.cce[k] * scale;
      records.push_back(r);
    }
    append_sample(loss, s, outputs[s], terms, std::move(records));
  }
  loss.total = mean_weighted(loss.records);
  return loss;
}

BatchLoss loss_demo(const LossDemoInput &input) {
  if (input.cce.empty()) throw ConfigError("loss demo needs at least one CCE value");
  if (input.words.size() != input.cce.size()) throw ConfigError("loss demo needs one word per CCE value");
  std::vector<TokenId> references(input.cce.size()), predictions(input.cce.size());
  for (std::size_t i = 0; i < input.cce.size(); ++i) {
    references[i] = kNumSpecials + static_cast<TokenId>(i);
    predictions[i] = references[i];
  }
  for (std::size_t pos : input.incorrect_positions) {
    if (pos < 1 || pos > input.cce.size()) {
      throw ConfigError("incorrect position " + std::to_string(pos) + " outside 1.." + std::to_string(input.cce.size()));
    }
    predictions[pos - 1] = kUnknownId;
  }
  BatchLoss loss;
  loss.records = weigh_sequence(input.cce, references, predictions, input.similarity, input.beta);
  loss.weights.emplace_back();
  for (const auto &r : loss.records) loss.weights.back().push_back(r.weight());
  loss.sequence_scores.push_back(input.similarity);
  loss.total = mean_weighted(loss.records);
  return loss;
}

std::string format_loss_table(const LossDemoInput &input, const BatchLoss &loss) {
  std::size_t word_width = std::string_view("predicted word").size();
  for (const auto &w : input.words) word_width = std::max(word_width, w.size());

  std::string out = fmt::format("{:<{}}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n", "predicted word", word_width,
                                "step 3", "step 4", "step 5", "(cce)", "step 6");
  for (std::size_t i = 0; i < loss.records.size(); ++i) {
    const auto &r = loss.records[i];
    const std::string step4 = r.masked() ? "m" : fmt::format("{:.4f}", r.similarity);
    const std::string step5 = r.masked() ? "m" : fmt::format("{:.3f}", *r.multiplier);
    out += fmt::format("{:<{}}  {:>8.4f}  {:>8}  {:>8}  {:>8.4f}  {:>8.4f}\n", input.words[i], word_width,
                       r.similarity, step4, step5, r.cce, r.weighted_loss);
  }
  out += fmt::format("{:>{}}  {:>8.4f}\n", "batch loss:", word_width + 4 * 10 + 8, loss.total);
  return out;
}

}  // namespace seqloss
