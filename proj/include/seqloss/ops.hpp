// SPDX-License-Identifier: Apache-2.0
//
// Differentiable building blocks of the attentional GRU encoder-decoder.
// Each op has a forward that returns what its backward needs and a backward
// that accumulates parameter gradients and returns input gradients.
#pragma once

#include <Eigen/Core>

namespace seqloss::ops {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Views over one GRU's parameters. Gate rows are stacked [update; reset; candidate].
struct GruParams {
  const MatrixXd &input_weights;      // 3h x e
  const MatrixXd &recurrent_weights;  // 3h x h
  const MatrixXd &bias;               // 3h x 1
};

struct GruGrads {
  MatrixXd &input_weights;
  MatrixXd &recurrent_weights;
  MatrixXd &bias;
};

struct GruStep {
  VectorXd input;
  VectorXd prev_hidden;
  VectorXd update;     // z
  VectorXd reset;      // r
  VectorXd candidate;  // n
  VectorXd hidden;
};

/// z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
/// n = tanh(Wn x + Un (r * h) + bn), h' = (1 - z) * n + z * h.
GruStep gru_forward(const GruParams &p, const VectorXd &input, const VectorXd &prev_hidden);

struct GruInputGrads {
  VectorXd input;
  VectorXd prev_hidden;
};

GruInputGrads gru_backward(const GruParams &p, const GruStep &step, const VectorXd &d_hidden, GruGrads g);

struct AttentionParams {
  const MatrixXd &query_weights;  // h x h
  const MatrixXd &key_weights;    // h x h
  const MatrixXd &score_vector;   // h x 1
};

struct AttentionGrads {
  MatrixXd &query_weights;
  MatrixXd &key_weights;
  MatrixXd &score_vector;
};

/// Projected encoder states, computed once per source sequence.
inline MatrixXd attention_keys(const AttentionParams &p, const MatrixXd &encoder_states) {
  return p.key_weights * encoder_states;
}

struct AttentionStep {
  VectorXd query;
  MatrixXd activations;  // tanh(K + Wq s 1^T), h x T
  VectorXd weights;      // softmax over source positions
  VectorXd context;      // encoder_states * weights
};

/// Additive attention: score_j = v . tanh(Wk H_j + Wq s).
AttentionStep attention_forward(const AttentionParams &p, const MatrixXd &encoder_states,
                                const MatrixXd &keys, const VectorXd &query);

/// Accumulates into d_encoder_states and d_keys (the latter is folded into the
/// key weights by attention_keys_backward once all steps are done).
VectorXd attention_backward(const AttentionParams &p, const MatrixXd &encoder_states,
                            const AttentionStep &step, const VectorXd &d_context,
                            MatrixXd &d_encoder_states, MatrixXd &d_keys, AttentionGrads g);

void attention_keys_backward(const AttentionParams &p, const MatrixXd &encoder_states,
                             const MatrixXd &d_keys, MatrixXd &d_encoder_states, AttentionGrads g);

struct OutputParams {
  const MatrixXd &combine_weights;  // h x 2h
  const MatrixXd &combine_bias;     // h x 1
  const MatrixXd &proj_weights;     // z x h
  const MatrixXd &proj_bias;        // z x 1
};

struct OutputGrads {
  MatrixXd &combine_weights;
  MatrixXd &combine_bias;
  MatrixXd &proj_weights;
  MatrixXd &proj_bias;
};

struct OutputStep {
  VectorXd joined;    // [s; c]
  VectorXd combined;  // tanh(Wc [s; c] + bc)
  VectorXd probabilities;
};

/// Softmax(Wo tanh(Wc [s; c] + bc) + bo).
OutputStep output_forward(const OutputParams &p, const VectorXd &hidden, const VectorXd &context);

struct OutputInputGrads {
  VectorXd hidden;
  VectorXd context;
};

OutputInputGrads output_backward(const OutputParams &p, const OutputStep &step, const VectorXd &d_logits,
                                 OutputGrads g);

/// Index of the largest entry; the lowest index wins ties.
inline Eigen::Index argmax(const Eigen::Ref<const VectorXd> &v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Numerically stable softmax.
VectorXd softmax(const VectorXd &logits);

/// Gradient of weight * -log p[target] w.r.t. the logits feeding softmax.
VectorXd weighted_xent_logit_grad(const VectorXd &probabilities, Eigen::Index target, double weight);

}  // namespace seqloss::ops
