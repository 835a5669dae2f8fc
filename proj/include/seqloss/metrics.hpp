// SPDX-License-Identifier: Apache-2.0
//
// Text-generation metrics on a 0-100 scale and the loss comparison table.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqloss/embedder.hpp"
#include "seqloss/stats.hpp"

namespace seqloss {

using TokenSeq = std::vector<std::string>;

inline constexpr double kBleuEpsilon = 1e-9;

/// BLEU-4 with uniform weights and brevity penalty over the whole corpus.
/// Orders with no matching n-gram get epsilon counts. Throws
/// std::invalid_argument for an empty corpus or mismatched list lengths.
double corpus_bleu(std::span<const TokenSeq> predictions, std::span<const TokenSeq> references);

/// Sentence BLEU-4 in [0, 1] with add-one smoothing on orders 2-4, used as a
/// training reward. Empty prediction gives 0.
double sentence_bleu(const TokenSeq &prediction, const TokenSeq &reference);

/// Exact-match METEOR: maximal one-to-one token alignment with the fewest
/// chunks, F = 10PR / (R + 9P), penalty 0.5 (chunks / matches)^3.
double meteor_sentence(const TokenSeq &prediction, const TokenSeq &reference);

/// Per-sample max(0, cosine) * 100.
std::vector<double> embedding_similarity_scores(const EmbeddingProvider &provider,
                                                std::span<const TokenSeq> predictions,
                                                std::span<const TokenSeq> references);

struct SampleScores {
  std::string id;
  double meteor = 0.0;
  double embed_sim = 0.0;
};

struct MetricsReport {
  std::string loss;     // label of the run that produced the predictions
  std::string dataset;  // label of the test set
  std::string embedder;
  std::vector<SampleScores> per_sample;
  double corpus_bleu = 0.0;
  double mean_meteor = 0.0;
  double mean_embed_sim = 0.0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string &text);
};

MetricsReport evaluate_predictions(const EmbeddingProvider &provider, std::span<const std::string> ids,
                                   std::span<const TokenSeq> predictions, std::span<const TokenSeq> references);

enum class MetricColumn { kMeteor, kUse, kBleu };

struct ComparisonCell {
  double value = 0.0;
  bool column_max = false;
  bool not_significant = false;       // paired test vs the reference row has p > alpha
  std::optional<PairedTestResult> test;  // M and U cells of non-reference rows
};

struct ComparisonTable {
  std::vector<std::string> datasets;
  std::vector<std::string> rows;  // run labels; duplicates of a loss get a #k suffix
  std::size_t reference_row = 0;
  std::vector<std::vector<ComparisonCell>> cells;  // [row][dataset * 3 + metric]
  std::size_t wins = 0;  // columns where the reference row is strictly highest
  std::size_t columns = 0;
  double alpha = 0.05;

  std::string render() const;
  std::string to_json() const;
};

/// Groups reports by dataset; every dataset must have the same run labels and,
/// within a dataset, identical sample ids in identical order (ConfigError otherwise).
/// The reference row is the first run whose loss is `reference_loss`.
ComparisonTable comparison_table(std::span<const MetricsReport> reports,
                                 const std::string &reference_loss = "use-seq", double alpha = 0.05);

}  // namespace seqloss
