// SPDX-License-Identifier: Apache-2.0
#include "seqloss/ops.hpp"

namespace seqloss::ops {

namespace {

VectorXd sigmoid(const VectorXd &a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

}  // namespace

VectorXd softmax(const VectorXd &logits) {
  const double peak = logits.maxCoeff();
  VectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

VectorXd weighted_xent_logit_grad(const VectorXd &probabilities, Eigen::Index target, double weight) {
  VectorXd g = probabilities;
  g[target] -= 1.0;
  return weight * g;
}

GruStep gru_forward(const GruParams &p, const VectorXd &input, const VectorXd &prev_hidden) {
  const Eigen::Index h = prev_hidden.size();
  GruStep s;
  s.input = input;
  s.prev_hidden = prev_hidden;

  const VectorXd from_input = p.input_weights * input + p.bias;
  const VectorXd gates = from_input.head(2 * h) + p.recurrent_weights.topRows(2 * h) * prev_hidden;
  s.update = sigmoid(gates.head(h));
  s.reset = sigmoid(gates.tail(h));

  const VectorXd reset_hidden = s.reset.cwiseProduct(prev_hidden);
  s.candidate = (from_input.tail(h) + p.recurrent_weights.bottomRows(h) * reset_hidden).array().tanh().matrix();
  s.hidden = (1.0 - s.update.array()).matrix().cwiseProduct(s.candidate) + s.update.cwiseProduct(prev_hidden);
  return s;
}

GruInputGrads gru_backward(const GruParams &p, const GruStep &s, const VectorXd &d_hidden, GruGrads g) {
  const Eigen::Index h = s.prev_hidden.size();
  const auto &z = s.update.array();
  const auto &r = s.reset.array();
  const auto &n = s.candidate.array();

  const VectorXd d_cand_pre = (d_hidden.array() * (1.0 - z) * (1.0 - n.square())).matrix();
  const VectorXd d_update_pre =
      (d_hidden.array() * (s.prev_hidden.array() - n) * z * (1.0 - z)).matrix();

  const VectorXd reset_hidden = s.reset.cwiseProduct(s.prev_hidden);
  const VectorXd d_reset_hidden = p.recurrent_weights.bottomRows(h).transpose() * d_cand_pre;
  const VectorXd d_reset_pre = (d_reset_hidden.array() * s.prev_hidden.array() * r * (1.0 - r)).matrix();

  VectorXd d_pre(3 * h);
  d_pre << d_update_pre, d_reset_pre, d_cand_pre;

  g.input_weights.noalias() += d_pre * s.input.transpose();
  g.bias += d_pre;
  g.recurrent_weights.topRows(2 * h).noalias() += d_pre.head(2 * h) * s.prev_hidden.transpose();
  g.recurrent_weights.bottomRows(h).noalias() += d_cand_pre * reset_hidden.transpose();

  GruInputGrads out;
  out.input = p.input_weights.transpose() * d_pre;
  out.prev_hidden = (d_hidden.array() * z).matrix() + d_reset_hidden.cwiseProduct(s.reset) +
                    p.recurrent_weights.topRows(2 * h).transpose() * d_pre.head(2 * h);
  return out;
}

AttentionStep attention_forward(const AttentionParams &p, const MatrixXd &encoder_states,
                                const MatrixXd &keys, const VectorXd &query) {
  AttentionStep s;
  s.query = query;
  const VectorXd projected = p.query_weights * query;
  s.activations = (keys.colwise() + projected).array().tanh().matrix();
  const VectorXd scores = s.activations.transpose() * p.score_vector.col(0);
  s.weights = softmax(scores);
  s.context = encoder_states * s.weights;
  return s;
}

VectorXd attention_backward(const AttentionParams &p, const MatrixXd &encoder_states,
                            const AttentionStep &s, const VectorXd &d_context,
                            MatrixXd &d_encoder_states, MatrixXd &d_keys, AttentionGrads g) {
  const VectorXd d_weights = encoder_states.transpose() * d_context;
  d_encoder_states.noalias() += d_context * s.weights.transpose();

  const double mean = s.weights.dot(d_weights);
  const VectorXd d_scores = (s.weights.array() * (d_weights.array() - mean)).matrix();

  g.score_vector.col(0).noalias() += s.activations * d_scores;
  const MatrixXd d_pre = ((p.score_vector.col(0) * d_scores.transpose()).array() *
                          (1.0 - s.activations.array().square()))
                             .matrix();
  d_keys += d_pre;
  const VectorXd d_projected = d_pre.rowwise().sum();
  g.query_weights.noalias() += d_projected * s.query.transpose();
  return p.query_weights.transpose() * d_projected;
}

void attention_keys_backward(const AttentionParams &p, const MatrixXd &encoder_states,
                             const MatrixXd &d_keys, MatrixXd &d_encoder_states, AttentionGrads g) {
  g.key_weights.noalias() += d_keys * encoder_states.transpose();
  d_encoder_states.noalias() += p.key_weights.transpose() * d_keys;
}

OutputStep output_forward(const OutputParams &p, const VectorXd &hidden, const VectorXd &context) {
  OutputStep s;
  s.joined.resize(hidden.size() + context.size());
  s.joined << hidden, context;
  s.combined = (p.combine_weights * s.joined + p.combine_bias).array().tanh().matrix();
  s.probabilities = softmax(p.proj_weights * s.combined + p.proj_bias);
  return s;
}

OutputInputGrads output_backward(const OutputParams &p, const OutputStep &s, const VectorXd &d_logits,
                                 OutputGrads g) {
  g.proj_weights.noalias() += d_logits * s.combined.transpose();
  g.proj_bias += d_logits;
  const VectorXd d_combined = p.proj_weights.transpose() * d_logits;
  const VectorXd d_pre = (d_combined.array() * (1.0 - s.combined.array().square())).matrix();
  g.combine_weights.noalias() += d_pre * s.joined.transpose();
  g.combine_bias += d_pre;
  const VectorXd d_joined = p.combine_weights.transpose() * d_pre;

  const Eigen::Index h = p.combine_bias.size();
  return {d_joined.head(h), d_joined.tail(d_joined.size() - h)};
}

}  // namespace seqloss::ops
