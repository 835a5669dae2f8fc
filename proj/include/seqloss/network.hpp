// SPDX-License-Identifier: Apache-2.0
//
// Attentional GRU encoder-decoder used as the summarization model.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "seqloss/corpus.hpp"
#include "seqloss/ops.hpp"
#include "seqloss/tensor.hpp"

namespace seqloss {

struct ModelConfig {
  std::size_t code_vocab = 0;
  std::size_t summary_vocab = 0;
  std::size_t embed_dim = 100;   // e
  std::size_t hidden_dim = 256;  // h
  double init_scale = 0.08;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig &) const = default;
};

enum class Param : std::size_t {
  kCodeEmbedding,
  kSummaryEmbedding,
  kEncoderInput,
  kEncoderRecurrent,
  kEncoderBias,
  kDecoderInput,
  kDecoderRecurrent,
  kDecoderBias,
  kAttentionQuery,
  kAttentionKey,
  kAttentionScore,
  kCombineWeights,
  kCombineBias,
  kProjectionWeights,
  kProjectionBias,
  kCount
};

inline constexpr std::size_t kParamCount = static_cast<std::size_t>(Param::kCount);

/// Everything backward needs from one teacher-forced pass over a sample.
struct TeacherForcedPass {
  /// Column i is the distribution for predicting summary_ids[i + 1].
  Eigen::MatrixXd probabilities;
  std::vector<TokenId> targets;

  std::vector<TokenId> code_ids;
  std::vector<TokenId> inputs;  // summary_ids without its last entry
  std::vector<ops::GruStep> encoder_steps;
  Eigen::MatrixXd encoder_states;  // h x T
  Eigen::MatrixXd keys;
  std::vector<ops::GruStep> decoder_steps;
  std::vector<ops::AttentionStep> attention_steps;
  std::vector<ops::OutputStep> output_steps;

  std::size_t positions() const { return targets.size(); }
  bool empty() const { return targets.empty(); }
};

class Seq2SeqModel {
 public:
  /// Parameters drawn uniformly from [-init_scale, init_scale] using `config.seed`.
  explicit Seq2SeqModel(const ModelConfig &config);

  const ModelConfig &config() const { return config_; }

  std::span<Tensor> parameters() { return params_; }
  std::span<const Tensor> parameters() const { return params_; }
  Tensor &param(Param p) { return params_[static_cast<std::size_t>(p)]; }
  const Tensor &param(Param p) const { return params_[static_cast<std::size_t>(p)]; }
  std::size_t parameter_count() const;

  void zero_grad();

  /// Position i is conditioned on the reference prefix summary_ids[0..i] only.
  /// Requires non-empty code and a summary that starts with the start id and has
  /// at least two entries. Throws DivergenceError on non-finite probabilities.
  TeacherForcedPass forward_teacher_forced(std::span<const TokenId> code_ids,
                                           std::span<const TokenId> summary_ids) const;

  /// Accumulates into each parameter's grad the gradient of
  /// sum_i weights[i] * -log p_i[target_i]. Throws std::logic_error if `pass`
  /// is empty (no forward was run) or the weight count does not match.
  void backward(const TeacherForcedPass &pass, std::span<const double> weights);

  /// Argmax decoding from the start token for at most max_len - 1 steps,
  /// stopping at the first end token. Start and pad ids are dropped from the
  /// result; the end token is not included.
  std::vector<TokenId> greedy_decode(std::span<const TokenId> code_ids, std::size_t max_len) const;

  bool all_finite() const;

 private:
  ops::GruParams encoder() const;
  ops::GruParams decoder() const;
  ops::AttentionParams attention() const;
  ops::OutputParams output() const;

  void encode(std::span<const TokenId> code_ids, TeacherForcedPass &pass) const;
  void check_ids(std::span<const TokenId> ids, std::size_t vocab, const char *what) const;

  ModelConfig config_;
  std::array<Tensor, kParamCount> params_;
};

}  // namespace seqloss
