/* Copyright 2026 The lmsbi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "lmsbi/activations.hpp"
#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace lmsbi {

using Index = Eigen::Index;

/// Gated recurrent unit that reads a T x I sequence row by row from a zero
/// hidden state and returns the final hidden state.
///
/// Gate rows are stacked as [reset; update; candidate]:
///   r  = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
///   z  = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
///   c  = tanh(Wx_c x + bx_c + r * (Wh_c h + bh_c))
///   h' = (1 - z) * c + z * h
/// Inputs are standardized with (x - input_mean) / input_scale first.
template <typename Scalar>
struct RecurrentEmbedding {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix input_weight;   // 3H x I
  Matrix hidden_weight;  // 3H x H
  Vector input_bias;     // 3H
  Vector hidden_bias;    // 3H
  Vector input_mean;     // I
  Vector input_scale;    // I

  RecurrentEmbedding() = default;

  /// All-zero parameters, identity standardization.
  RecurrentEmbedding(Index input_size, Index hidden_size)
      : input_weight(Matrix::Zero(3 * hidden_size, input_size)),
        hidden_weight(Matrix::Zero(3 * hidden_size, hidden_size)),
        input_bias(Vector::Zero(3 * hidden_size)),
        hidden_bias(Vector::Zero(3 * hidden_size)),
        input_mean(Vector::Zero(input_size)),
        input_scale(Vector::Ones(input_size)) {}

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) initialization. With max_timescale > 2
  /// the update-gate input bias is drawn as log U(1, max_timescale - 1) so
  /// hidden units start with memory spans spread up to max_timescale steps.
  static RecurrentEmbedding random(Index input_size, Index hidden_size, Rng& rng, double max_timescale = 0) {
    RecurrentEmbedding emb(input_size, hidden_size);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    std::uniform_real_distribution<double> u(-bound, bound);
    emb.for_each_parameter([&](auto& m) {
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
    });
    if (max_timescale > 2) {
      std::uniform_real_distribution<double> span(1.0, max_timescale - 1.0);
      for (Index k = 0; k < hidden_size; ++k) {
        emb.input_bias(hidden_size + k) = static_cast<Scalar>(std::log(span(rng)));
        emb.hidden_bias(hidden_size + k) = Scalar(0);
      }
    }
    return emb;
  }

  Index input_size() const { return input_weight.cols(); }
  Index hidden_size() const { return hidden_weight.cols(); }

  /// Visits the trainable parameters in a fixed order. Standardizers are
  /// fitted, not trained, and are not visited.
  template <typename F>
  void for_each_parameter(F&& f) {
    f(input_weight);
    f(hidden_weight);
    f(input_bias);
    f(hidden_bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(input_weight);
    f(hidden_weight);
    f(input_bias);
    f(hidden_bias);
  }

  void check_shapes() const {
    const Index h = hidden_weight.cols();
    const Index i = input_weight.cols();
    if (hidden_weight.rows() != 3 * h || input_weight.rows() != 3 * h || input_bias.size() != 3 * h ||
        hidden_bias.size() != 3 * h || input_mean.size() != i || input_scale.size() != i)
      throw ValidationError("recurrent embedding parameter shapes are inconsistent");
  }

  /// Fits the input standardizer over every row of every sequence; constant
  /// columns keep unit scale.
  void fit_standardizer(const std::vector<const Matrix*>& sequences) {
    const Index in = input_size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(in), sq = Eigen::VectorXd::Zero(in);
    double count = 0;
    for (const Matrix* x : sequences) {
      sum += x->colwise().sum().transpose().template cast<double>();
      count += static_cast<double>(x->rows());
    }
    const Eigen::VectorXd mean = sum / count;
    for (const Matrix* x : sequences)
      sq += (x->template cast<double>().rowwise() - mean.transpose()).colwise().squaredNorm().transpose();
    input_mean = mean.cast<Scalar>();
    input_scale.resize(in);
    for (Index c = 0; c < in; ++c) {
      const double sd = std::sqrt(sq(c) / count);
      input_scale(c) = static_cast<Scalar>(sd > 1e-12 ? sd : 1.0);
    }
  }

  /// Per-step activations stored column-blocked: step t of sequence b lives
  /// in column t * B + b. Reusing one cache across calls keeps its buffers.
  struct Cache {
    Index steps = 0;
    Index batch = 0;
    Matrix inputs;  // I x (T*B), standardized
    Matrix hidden;  // H x ((T+1)*B), block t is the state entering step t
    Matrix gates;   // 3H x (T*B): reset, update, candidate
    Matrix hidden_candidate_pre;  // H x (T*B): Wh_c h + bh_c
    // backward scratch
    mutable Matrix grad_pre;        // 3H x (T*B)
    mutable Matrix grad_candidate;  // H x (T*B)
  };

  /// Runs every sequence in the batch (all with equal length). Returns the
  /// H x B matrix of final hidden states.
  Matrix forward_batch(const std::vector<const Matrix*>& sequences, Cache* cache = nullptr) const {
    check_shapes();
    const Index batch = static_cast<Index>(sequences.size());
    if (batch == 0) throw ValidationError("empty batch for recurrent embedding");
    const Index steps = sequences.front()->rows();
    const Index in = input_size();
    const Index h = hidden_size();
    for (const Matrix* x : sequences)
      if (x->rows() != steps || x->cols() != in)
        throw ValidationError("sequence shape differs from embedding input size " + std::to_string(in));
    if (steps == 0) throw ValidationError("empty sequence");

    Cache local;
    Cache& c = cache ? *cache : local;
    c.steps = steps;
    c.batch = batch;
    c.inputs.resize(in, steps * batch);
    const Vector inv_scale = input_scale.cwiseInverse();
    for (Index b = 0; b < batch; ++b) {
      const Matrix& x = *sequences[static_cast<std::size_t>(b)];
      Eigen::Map<Matrix, 0, Eigen::OuterStride<>> cols(c.inputs.data() + b * in, in, steps,
                                                       Eigen::OuterStride<>(in * batch));
      cols = ((x.rowwise() - input_mean.transpose()).array().rowwise() * inv_scale.transpose().array())
                 .matrix()
                 .transpose();
    }
    // Input projections first; each step then overwrites its block with gates.
    c.gates.resize(3 * h, steps * batch);
    c.gates.noalias() = input_weight * c.inputs;
    c.gates.colwise() += input_bias;
    if (cache) {
      c.hidden.resize(h, (steps + 1) * batch);
      c.hidden.leftCols(batch).setZero();
      c.hidden_candidate_pre.resize(h, steps * batch);
    } else {
      c.hidden_candidate_pre.resize(h, batch);
    }

    Matrix hid = Matrix::Zero(h, batch);
    Matrix gh(3 * h, batch);
    for (Index t = 0; t < steps; ++t) {
      gh.noalias() = hidden_weight * hid;
      gh.colwise() += hidden_bias;
      auto g = c.gates.middleCols(t * batch, batch);
      auto hc = c.hidden_candidate_pre.middleCols(cache ? t * batch : 0, batch);
      g.topRows(2 * h) = sigmoid((g.topRows(2 * h) + gh.topRows(2 * h)).array());
      hc = gh.bottomRows(h);
      g.bottomRows(h) = vtanh(g.bottomRows(h).array() + g.topRows(h).array() * hc.array());
      hid.array() = g.bottomRows(h).array() + g.middleRows(h, h).array() * (hid.array() - g.bottomRows(h).array());
      if (cache) c.hidden.middleCols((t + 1) * batch, batch) = hid;
    }
    return hid;
  }

  Vector forward(const Matrix& sequence) const { return forward_batch({&sequence}).col(0); }

  /// Reverse-mode pass. `output_grad` is dLoss/d(final hidden), H x B.
  /// Returns the parameter gradients in an embedding-shaped container.
  RecurrentEmbedding backward_batch(const Cache& cache, const Matrix& output_grad) const {
    const Index h = hidden_size();
    const Index batch = cache.batch;
    const Index cols = cache.steps * batch;
    if (output_grad.rows() != h || output_grad.cols() != batch)
      throw ValidationError("output gradient shape mismatch");
    RecurrentEmbedding grad(input_size(), h);
    // Pre-activation gradients; the candidate rows hold dc for the input path
    // and dc * r for the hidden path.
    Matrix& dgx = cache.grad_pre;
    Matrix& dgh_cand = cache.grad_candidate;
    dgx.resize(3 * h, cols);
    dgh_cand.resize(h, cols);
    Matrix dh = output_grad;
    Matrix dgh(3 * h, batch);
    for (Index t = cache.steps - 1; t >= 0; --t) {
      const auto prev = cache.hidden.middleCols(t * batch, batch).array();
      const auto g = cache.gates.middleCols(t * batch, batch);
      const auto r = g.topRows(h).array();
      const auto z = g.middleRows(h, h).array();
      const auto c = g.bottomRows(h).array();
      const auto hc = cache.hidden_candidate_pre.middleCols(t * batch, batch).array();
      auto d = dgx.middleCols(t * batch, batch);
      auto dc_h = dgh_cand.middleCols(t * batch, batch);

      d.bottomRows(h).array() = dh.array() * (Scalar(1) - z) * (Scalar(1) - c.square());
      d.middleRows(h, h).array() = dh.array() * (prev - c) * z * (Scalar(1) - z);
      d.topRows(h).array() = d.bottomRows(h).array() * hc * r * (Scalar(1) - r);
      dc_h.array() = d.bottomRows(h).array() * r;

      dgh.topRows(2 * h) = d.topRows(2 * h);
      dgh.bottomRows(h) = dc_h;
      dh.array() *= z;
      dh.noalias() += hidden_weight.transpose() * dgh;
    }
    const auto prev_all = cache.hidden.leftCols(cols);
    grad.hidden_weight.topRows(2 * h).noalias() = dgx.topRows(2 * h) * prev_all.transpose();
    grad.hidden_weight.bottomRows(h).noalias() = dgh_cand * prev_all.transpose();
    grad.hidden_bias.head(2 * h) = dgx.topRows(2 * h).rowwise().sum();
    grad.hidden_bias.tail(h) = dgh_cand.rowwise().sum();
    grad.input_weight.noalias() = dgx * cache.inputs.transpose();
    grad.input_bias = dgx.rowwise().sum();
    return grad;
  }
};

using RecurrentEmbeddingd = RecurrentEmbedding<double>;

}  // namespace lmsbi
