// SPDX-License-Identifier: Apache-2.0
#include "seqloss/network.hpp"

#include <stdexcept>
#include <string>

#include "seqloss/error.hpp"
#include "seqloss/random.hpp"

namespace seqloss {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Seq2SeqModel::Seq2SeqModel(const ModelConfig &config) : config_(config) {
  if (config.code_vocab < static_cast<std::size_t>(kNumSpecials) ||
      config.summary_vocab < static_cast<std::size_t>(kNumSpecials) || config.embed_dim == 0 ||
      config.hidden_dim == 0) {
    throw ConfigError("model dimensions must be positive and vocabularies must hold the special tokens");
  }
  const auto v = static_cast<Index>(config.code_vocab);
  const auto z = static_cast<Index>(config.summary_vocab);
  const auto e = static_cast<Index>(config.embed_dim);
  const auto h = static_cast<Index>(config.hidden_dim);

  auto set = [this](Param p, const char *name, Index rows, Index cols) {
    params_[static_cast<std::size_t>(p)] = Tensor(name, rows, cols);
  };
  set(Param::kCodeEmbedding, "code_embedding", v, e);
  set(Param::kSummaryEmbedding, "summary_embedding", z, e);
  set(Param::kEncoderInput, "encoder.input_weights", 3 * h, e);
  set(Param::kEncoderRecurrent, "encoder.recurrent_weights", 3 * h, h);
  set(Param::kEncoderBias, "encoder.bias", 3 * h, 1);
  set(Param::kDecoderInput, "decoder.input_weights", 3 * h, e);
  set(Param::kDecoderRecurrent, "decoder.recurrent_weights", 3 * h, h);
  set(Param::kDecoderBias, "decoder.bias", 3 * h, 1);
  set(Param::kAttentionQuery, "attention.query_weights", h, h);
  set(Param::kAttentionKey, "attention.key_weights", h, h);
  set(Param::kAttentionScore, "attention.score_vector", h, 1);
  set(Param::kCombineWeights, "combine.weights", h, 2 * h);
  set(Param::kCombineBias, "combine.bias", h, 1);
  set(Param::kProjectionWeights, "projection.weights", z, h);
  set(Param::kProjectionBias, "projection.bias", z, 1);

  Rng rng(config.seed);
  for (auto &t : params_) {
    // Column-major fill so the draw order is independent of Eigen's expression evaluation.
    for (Index c = 0; c < t.value.cols(); ++c)
      for (Index r = 0; r < t.value.rows(); ++r) t.value(r, c) = rng.uniform(-config.init_scale, config.init_scale);
  }
}

std::size_t Seq2SeqModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto &t : params_) n += static_cast<std::size_t>(t.size());
  return n;
}

void Seq2SeqModel::zero_grad() {
  for (auto &t : params_) t.zero_grad();
}

bool Seq2SeqModel::all_finite() const {
  for (const auto &t : params_)
    if (!t.value.allFinite()) return false;
  return true;
}

ops::GruParams Seq2SeqModel::encoder() const {
  return {param(Param::kEncoderInput).value, param(Param::kEncoderRecurrent).value,
          param(Param::kEncoderBias).value};
}

ops::GruParams Seq2SeqModel::decoder() const {
  return {param(Param::kDecoderInput).value, param(Param::kDecoderRecurrent).value,
          param(Param::kDecoderBias).value};
}

ops::AttentionParams Seq2SeqModel::attention() const {
  return {param(Param::kAttentionQuery).value, param(Param::kAttentionKey).value,
          param(Param::kAttentionScore).value};
}

ops::OutputParams Seq2SeqModel::output() const {
  return {param(Param::kCombineWeights).value, param(Param::kCombineBias).value,
          param(Param::kProjectionWeights).value, param(Param::kProjectionBias).value};
}

void Seq2SeqModel::check_ids(std::span<const TokenId> ids, std::size_t vocab, const char *what) const {
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range(std::string(what) + " id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(vocab));
    }
  }
}

void Seq2SeqModel::encode(std::span<const TokenId> code_ids, TeacherForcedPass &pass) const {
  if (code_ids.empty()) throw std::invalid_argument("cannot encode an empty code sequence");
  check_ids(code_ids, config_.code_vocab, "code");
  const auto h = static_cast<Index>(config_.hidden_dim);
  const MatrixXd &embed = param(Param::kCodeEmbedding).value;
  const auto enc = encoder();

  pass.code_ids.assign(code_ids.begin(), code_ids.end());
  pass.encoder_steps.clear();
  pass.encoder_steps.reserve(code_ids.size());
  pass.encoder_states.resize(h, static_cast<Index>(code_ids.size()));
  VectorXd hidden = VectorXd::Zero(h);
  for (std::size_t t = 0; t < code_ids.size(); ++t) {
    pass.encoder_steps.push_back(ops::gru_forward(enc, embed.row(code_ids[t]).transpose(), hidden));
    hidden = pass.encoder_steps.back().hidden;
    pass.encoder_states.col(static_cast<Index>(t)) = hidden;
  }
  pass.keys = ops::attention_keys(attention(), pass.encoder_states);
}

TeacherForcedPass Seq2SeqModel::forward_teacher_forced(std::span<const TokenId> code_ids,
                                                       std::span<const TokenId> summary_ids) const {
  if (summary_ids.size() < 2 || summary_ids.front() != kStartId) {
    throw std::invalid_argument("summary must start with the start token and hold at least one target");
  }
  check_ids(summary_ids, config_.summary_vocab, "summary");

  TeacherForcedPass pass;
  encode(code_ids, pass);

  const std::size_t n = summary_ids.size() - 1;
  pass.inputs.assign(summary_ids.begin(), summary_ids.end() - 1);
  pass.targets.assign(summary_ids.begin() + 1, summary_ids.end());
  pass.probabilities.resize(static_cast<Index>(config_.summary_vocab), static_cast<Index>(n));
  pass.decoder_steps.reserve(n);
  pass.attention_steps.reserve(n);
  pass.output_steps.reserve(n);

  const MatrixXd &embed = param(Param::kSummaryEmbedding).value;
  const auto dec = decoder();
  const auto att = attention();
  const auto out = output();
  VectorXd hidden = pass.encoder_states.rightCols(1);
  for (std::size_t i = 0; i < n; ++i) {
    // Input is always the reference token, never an earlier prediction.
    pass.decoder_steps.push_back(ops::gru_forward(dec, embed.row(pass.inputs[i]).transpose(), hidden));
    hidden = pass.decoder_steps.back().hidden;
    pass.attention_steps.push_back(ops::attention_forward(att, pass.encoder_states, pass.keys, hidden));
    pass.output_steps.push_back(ops::output_forward(out, hidden, pass.attention_steps.back().context));
    pass.probabilities.col(static_cast<Index>(i)) = pass.output_steps.back().probabilities;
  }
  if (!pass.probabilities.allFinite()) {
    throw DivergenceError("non-finite decoder probabilities in teacher-forced forward pass");
  }
  return pass;
}

void Seq2SeqModel::backward(const TeacherForcedPass &pass, std::span<const double> weights) {
  if (pass.empty()) throw std::logic_error("backward called without a forward pass");
  if (weights.size() != pass.positions()) {
    throw std::logic_error("backward: " + std::to_string(weights.size()) + " weights for " +
                           std::to_string(pass.positions()) + " positions");
  }
  const auto h = static_cast<Index>(config_.hidden_dim);
  const auto src_len = pass.encoder_states.cols();

  const auto enc = encoder();
  const auto dec = decoder();
  const auto att = attention();
  const auto out = output();
  ops::GruGrads enc_g{param(Param::kEncoderInput).grad, param(Param::kEncoderRecurrent).grad,
                      param(Param::kEncoderBias).grad};
  ops::GruGrads dec_g{param(Param::kDecoderInput).grad, param(Param::kDecoderRecurrent).grad,
                      param(Param::kDecoderBias).grad};
  ops::AttentionGrads att_g{param(Param::kAttentionQuery).grad, param(Param::kAttentionKey).grad,
                            param(Param::kAttentionScore).grad};
  ops::OutputGrads out_g{param(Param::kCombineWeights).grad, param(Param::kCombineBias).grad,
                         param(Param::kProjectionWeights).grad, param(Param::kProjectionBias).grad};
  MatrixXd &summary_embed_g = param(Param::kSummaryEmbedding).grad;
  MatrixXd &code_embed_g = param(Param::kCodeEmbedding).grad;

  MatrixXd d_states = MatrixXd::Zero(h, src_len);
  MatrixXd d_keys = MatrixXd::Zero(h, src_len);
  VectorXd d_next = VectorXd::Zero(h);
  for (std::size_t i = pass.positions(); i-- > 0;) {
    const VectorXd d_logits = ops::weighted_xent_logit_grad(pass.output_steps[i].probabilities,
                                                            pass.targets[i], weights[i]);
    const auto d_out = ops::output_backward(out, pass.output_steps[i], d_logits, out_g);
    VectorXd d_hidden = d_out.hidden + d_next;
    d_hidden += ops::attention_backward(att, pass.encoder_states, pass.attention_steps[i], d_out.context,
                                        d_states, d_keys, att_g);
    const auto d_in = ops::gru_backward(dec, pass.decoder_steps[i], d_hidden, dec_g);
    summary_embed_g.row(pass.inputs[i]) += d_in.input.transpose();
    d_next = d_in.prev_hidden;
  }
  // The decoder starts from the final encoder state.
  d_states.col(src_len - 1) += d_next;
  ops::attention_keys_backward(att, pass.encoder_states, d_keys, d_states, att_g);

  d_next.setZero();
  for (Index t = src_len; t-- > 0;) {
    const VectorXd d_hidden = d_states.col(t) + d_next;
    const auto d_in = ops::gru_backward(enc, pass.encoder_steps[static_cast<std::size_t>(t)], d_hidden, enc_g);
    code_embed_g.row(pass.code_ids[static_cast<std::size_t>(t)]) += d_in.input.transpose();
    d_next = d_in.prev_hidden;
  }
}

std::vector<TokenId> Seq2SeqModel::greedy_decode(std::span<const TokenId> code_ids, std::size_t max_len) const {
  TeacherForcedPass pass;
  encode(code_ids, pass);

  const MatrixXd &embed = param(Param::kSummaryEmbedding).value;
  const auto dec = decoder();
  const auto att = attention();
  const auto out = output();

  std::vector<TokenId> result;
  VectorXd hidden = pass.encoder_states.rightCols(1);
  TokenId token = kStartId;
  for (std::size_t step = 0; step + 1 < max_len; ++step) {
    hidden = ops::gru_forward(dec, embed.row(token).transpose(), hidden).hidden;
    const auto ctx = ops::attention_forward(att, pass.encoder_states, pass.keys, hidden).context;
    const auto probs = ops::output_forward(out, hidden, ctx).probabilities;
    token = static_cast<TokenId>(ops::argmax(probs));
    if (token == kEndId) break;
    if (token != kStartId && token != kPadId) result.push_back(token);
  }
  return result;
}

}  // namespace seqloss
