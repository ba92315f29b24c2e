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
#include <numbers>
#include <string>
#include <vector>

namespace lmsbi {

using Index = Eigen::Index;

struct MafOptions {
  Eigen::Index dim = 3;
  Eigen::Index context_dim = 0;
  Eigen::Index hidden = 50;
  Eigen::Index hidden_layers = 2;
  Eigen::Index layers = 5;
  // Output-layer weights start in U(-s, s) so the initial flow is close to
  // the identity.
  double output_init_scale = 1e-2;
};

inline constexpr double kLogScaleBound = 7.0;

/// Masked autoregressive conditioner producing a shift and a log-scale per
/// dimension. Output i sees inputs 0..i-1 (in this layer's ordering) and the
/// whole context.
template <typename Scalar>
struct MadeLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix input_weight, input_mask;  // H x D
  Matrix context_weight;            // H x C
  Vector input_bias;                // H
  std::vector<Matrix> hidden_weight, hidden_mask;
  std::vector<Vector> hidden_bias;
  Matrix shift_weight, scale_weight, output_mask;  // D x H
  Vector shift_bias, scale_bias;                   // D

  /// Zero weights with masks assigned (an identity conditioner).
  static MadeLayer zeros(Eigen::Index dim, Eigen::Index context_dim, Eigen::Index hidden,
                         Eigen::Index hidden_layers) {
    if (dim < 1 || context_dim < 0 || hidden < 1 || hidden_layers < 1)
      throw ValidationError("invalid MADE dimensions");
    MadeLayer l;
    // Hidden degrees cycle through [min(1, D-1), max(1, D-1)]; with D = 1 all
    // hidden units have degree 0 and see only the context.
    const Eigen::Index hi = std::max<Eigen::Index>(1, dim - 1);
    const Eigen::Index lo = std::min<Eigen::Index>(1, dim - 1);
    Eigen::VectorXi degree(hidden);
    for (Eigen::Index k = 0; k < hidden; ++k) degree(k) = static_cast<int>(k % hi + lo);

    l.input_mask.resize(hidden, dim);
    for (Eigen::Index k = 0; k < hidden; ++k)
      for (Eigen::Index d = 0; d < dim; ++d) l.input_mask(k, d) = degree(k) >= d + 1 ? 1 : 0;
    l.input_weight = Matrix::Zero(hidden, dim);
    l.context_weight = Matrix::Zero(hidden, context_dim);
    l.input_bias = Vector::Zero(hidden);

    Matrix mid(hidden, hidden);
    for (Eigen::Index a = 0; a < hidden; ++a)
      for (Eigen::Index b = 0; b < hidden; ++b) mid(a, b) = degree(a) >= degree(b) ? 1 : 0;
    for (Eigen::Index k = 1; k < hidden_layers; ++k) {
      l.hidden_weight.push_back(Matrix::Zero(hidden, hidden));
      l.hidden_mask.push_back(mid);
      l.hidden_bias.push_back(Vector::Zero(hidden));
    }

    l.output_mask.resize(dim, hidden);
    for (Eigen::Index d = 0; d < dim; ++d)
      for (Eigen::Index k = 0; k < hidden; ++k) l.output_mask(d, k) = d + 1 > degree(k) ? 1 : 0;
    l.shift_weight = Matrix::Zero(dim, hidden);
    l.scale_weight = Matrix::Zero(dim, hidden);
    l.shift_bias = Vector::Zero(dim);
    l.scale_bias = Vector::Zero(dim);
    return l;
  }

  void randomize(Rng& rng, double output_scale) {
    auto fill = [&](auto& m, double bound) {
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
    };
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(dim() + context_dim()));
    const double mid_bound = 1.0 / std::sqrt(static_cast<double>(hidden()));
    fill(input_weight, in_bound);
    fill(context_weight, in_bound);
    fill(input_bias, in_bound);
    for (std::size_t k = 0; k < hidden_weight.size(); ++k) {
      fill(hidden_weight[k], mid_bound);
      fill(hidden_bias[k], mid_bound);
    }
    fill(shift_weight, output_scale);
    fill(scale_weight, output_scale);
    shift_bias.setZero();
    scale_bias.setZero();
    apply_masks();
  }

  Eigen::Index dim() const { return input_weight.cols(); }
  Eigen::Index context_dim() const { return context_weight.cols(); }
  Eigen::Index hidden() const { return input_weight.rows(); }

  void apply_masks() {
    input_weight = input_weight.cwiseProduct(input_mask);
    for (std::size_t k = 0; k < hidden_weight.size(); ++k)
      hidden_weight[k] = hidden_weight[k].cwiseProduct(hidden_mask[k]);
    shift_weight = shift_weight.cwiseProduct(output_mask);
    scale_weight = scale_weight.cwiseProduct(output_mask);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    visit(*this, f);
  }

  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(self.input_weight);
    f(self.context_weight);
    f(self.input_bias);
    for (std::size_t k = 0; k < self.hidden_weight.size(); ++k) {
      f(self.hidden_weight[k]);
      f(self.hidden_bias[k]);
    }
    f(self.shift_weight);
    f(self.scale_weight);
    f(self.shift_bias);
    f(self.scale_bias);
  }

  struct Cache {
    Matrix input, context;
    std::vector<Matrix> activations;  // tanh outputs per hidden layer
    Matrix raw_log_scale;
  };

  /// (shift, log_scale) for a D x B batch of inputs and C x B contexts.
  void conditioner(const Matrix& y, const Matrix& context, Matrix& shift, Matrix& log_scale,
                   Cache* cache = nullptr) const {
    Matrix a = input_weight * y;
    if (context_dim() > 0) {
      if (context.cols() == 1 && y.cols() != 1) a.colwise() += context_weight * context.col(0);
      else a.noalias() += context_weight * context;
    }
    a.colwise() += input_bias;
    Matrix act = vtanh(a.array()).matrix();
    if (cache) {
      cache->input = y;
      cache->context = context;
      cache->activations.assign(1, act);
    }
    for (std::size_t k = 0; k < hidden_weight.size(); ++k) {
      a.noalias() = hidden_weight[k] * act;
      a.colwise() += hidden_bias[k];
      act = vtanh(a.array()).matrix();
      if (cache) cache->activations.push_back(act);
    }
    shift.noalias() = shift_weight * act;
    shift.colwise() += shift_bias;
    Matrix raw = scale_weight * act;
    raw.colwise() += scale_bias;
    log_scale = raw.cwiseMax(Scalar(-kLogScaleBound)).cwiseMin(Scalar(kLogScaleBound));
    if (cache) cache->raw_log_scale = std::move(raw);
  }

  /// Accumulates parameter gradients into `grad` given dLoss/dshift and
  /// dLoss/dlog_scale; returns dLoss/dinput and adds dLoss/dcontext into
  /// `context_grad` when it is non-null.
  Matrix backward(const Cache& cache, const Matrix& shift_grad, Matrix log_scale_grad, MadeLayer& grad,
                  Matrix* context_grad) const {
    const Matrix& raw = cache.raw_log_scale;
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      if (raw.data()[i] <= Scalar(-kLogScaleBound) || raw.data()[i] >= Scalar(kLogScaleBound))
        log_scale_grad.data()[i] = 0;

    const Matrix& top = cache.activations.back();
    grad.shift_weight.noalias() += (shift_grad * top.transpose()).cwiseProduct(output_mask);
    grad.scale_weight.noalias() += (log_scale_grad * top.transpose()).cwiseProduct(output_mask);
    grad.shift_bias += shift_grad.rowwise().sum();
    grad.scale_bias += log_scale_grad.rowwise().sum();
    Matrix g = shift_weight.transpose() * shift_grad;
    g.noalias() += scale_weight.transpose() * log_scale_grad;

    for (std::size_t k = hidden_weight.size(); k-- > 0;) {
      const Matrix& out = cache.activations[k + 1];
      const Matrix& in = cache.activations[k];
      const Matrix pre = g.cwiseProduct((Scalar(1) - out.array().square()).matrix());
      grad.hidden_weight[k].noalias() += (pre * in.transpose()).cwiseProduct(hidden_mask[k]);
      grad.hidden_bias[k] += pre.rowwise().sum();
      g.noalias() = hidden_weight[k].transpose() * pre;
    }
    const Matrix& first = cache.activations.front();
    const Matrix pre = g.cwiseProduct((Scalar(1) - first.array().square()).matrix());
    grad.input_weight.noalias() += (pre * cache.input.transpose()).cwiseProduct(input_mask);
    grad.input_bias += pre.rowwise().sum();
    if (context_dim() > 0) {
      if (cache.context.cols() == 1 && pre.cols() != 1)
        grad.context_weight.noalias() += pre.rowwise().sum() * cache.context.transpose();
      else
        grad.context_weight.noalias() += pre * cache.context.transpose();
      if (context_grad) context_grad->noalias() += context_weight.transpose() * pre;
    }
    return input_weight.transpose() * pre;
  }
};

/// Stack of affine MADE transforms with order reversal between layers, a
/// standard-normal base, and affine standardizers on parameters and context.
///
/// Forward (density) direction per layer: z = (y - shift(y_<i, c)) * exp(-log_scale),
/// so log q(theta | c) = log N(z_L) - sum log_scale - sum log(theta_scale).
template <typename Scalar>
struct MafStack {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Layer = MadeLayer<Scalar>;

  std::vector<Layer> layers;
  Vector theta_mean, theta_scale;
  Vector context_mean, context_scale;

  /// Identity flow: zero conditioners and identity standardizers.
  static MafStack identity(const MafOptions& opt) {
    if (opt.layers < 1) throw ValidationError("flow needs at least one layer");
    MafStack f;
    for (Eigen::Index l = 0; l < opt.layers; ++l)
      f.layers.push_back(Layer::zeros(opt.dim, opt.context_dim, opt.hidden, opt.hidden_layers));
    f.theta_mean = Vector::Zero(opt.dim);
    f.theta_scale = Vector::Ones(opt.dim);
    f.context_mean = Vector::Zero(opt.context_dim);
    f.context_scale = Vector::Ones(opt.context_dim);
    return f;
  }

  static MafStack random(const MafOptions& opt, Rng& rng) {
    MafStack f = identity(opt);
    for (auto& l : f.layers) l.randomize(rng, opt.output_init_scale);
    return f;
  }

  Eigen::Index dim() const { return theta_mean.size(); }
  Eigen::Index context_dim() const { return context_mean.size(); }

  MafOptions options() const {
    MafOptions o;
    o.dim = dim();
    o.context_dim = context_dim();
    o.hidden = layers.front().hidden();
    o.hidden_layers = static_cast<Eigen::Index>(layers.front().hidden_weight.size()) + 1;
    o.layers = static_cast<Eigen::Index>(layers.size());
    return o;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& l : layers) l.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : layers) l.for_each_parameter(f);
  }
  void apply_masks() {
    for (auto& l : layers) l.apply_masks();
  }

  /// Same-shaped container with every parameter zero (used for gradients).
  MafStack zeros_like() const {
    MafStack g = *this;
    g.for_each_parameter([](auto& m) { m.setZero(); });
    return g;
  }

  struct Cache {
    std::vector<typename Layer::Cache> layer;
    std::vector<Matrix> noise;      // z per layer
    std::vector<Matrix> log_scale;  // per layer
    Matrix base;                    // final z
  };

  /// Column-wise log q(theta | context). `context` may have a single column,
  /// which is then shared by every theta column.
  Vector log_prob(const Matrix& theta, const Matrix& context, Cache* cache = nullptr) const {
    check_inputs(theta, context);
    const Eigen::Index batch = theta.cols();
    const Matrix ctx = standardized_context(context, batch);
    Matrix y = (theta.colwise() - theta_mean).array().colwise() / theta_scale.array();
    Vector total_log_scale = Vector::Zero(batch);
    if (cache) {
      cache->layer.assign(layers.size(), {});
      cache->noise.assign(layers.size(), {});
      cache->log_scale.assign(layers.size(), {});
    }
    Matrix shift, log_scale;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].conditioner(y, ctx, shift, log_scale, cache ? &cache->layer[l] : nullptr);
      Matrix z = (y - shift).cwiseProduct((-log_scale.array()).exp().matrix());
      total_log_scale += log_scale.colwise().sum().transpose();
      if (cache) {
        cache->noise[l] = z;
        cache->log_scale[l] = log_scale;
      }
      y = (l + 1 < layers.size()) ? Matrix(z.colwise().reverse()) : std::move(z);
    }
    if (cache) cache->base = y;
    const Scalar log_norm = Scalar(-0.5 * std::log(2.0 * std::numbers::pi)) * static_cast<Scalar>(dim());
    const Scalar log_jacobian = -theta_scale.array().log().sum();
    Vector out = (-Scalar(0.5) * y.colwise().squaredNorm().transpose()).array() + log_norm + log_jacobian;
    out -= total_log_scale;
    return out;
  }

  /// Base-space image of theta (the noise that generates it).
  Matrix to_noise(const Matrix& theta, const Matrix& context) const {
    Cache cache;
    log_prob(theta, context, &cache);
    return cache.base;
  }

  /// Inverts the flow one dimension at a time for each layer.
  Matrix from_noise(const Matrix& noise, const Matrix& context) const {
    if (noise.rows() != dim()) throw ValidationError("noise dimension mismatch");
    const Eigen::Index batch = noise.cols();
    const Matrix ctx = standardized_context(context, batch);
    Matrix y = noise;
    Matrix shift, log_scale;
    for (std::size_t l = layers.size(); l-- > 0;) {
      Matrix x = Matrix::Zero(dim(), batch);
      for (Eigen::Index i = 0; i < dim(); ++i) {
        layers[l].conditioner(x, ctx, shift, log_scale);
        x.row(i) = y.row(i).cwiseProduct(log_scale.row(i).array().exp().matrix()) + shift.row(i);
      }
      y = l > 0 ? Matrix(x.colwise().reverse()) : std::move(x);
    }
    return (y.array().colwise() * theta_scale.array()).matrix().colwise() + theta_mean;
  }

  /// `count` draws (one per column) given a single context column.
  Matrix sample(const Matrix& context, Rng& rng, Eigen::Index count) const {
    std::normal_distribution<double> normal;
    Matrix noise(dim(), count);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<Scalar>(normal(rng));
    return from_noise(noise, context);
  }

  struct Gradients {
    MafStack params;
    Matrix context;  // dLoss/dcontext (raw, un-standardized), C x B
  };

  /// Given dLoss/dlog_prob per column, returns parameter and context
  /// gradients. A single-column context receives the summed gradient.
  Gradients backward(const Cache& cache, const Vector& log_prob_grad, Eigen::Index context_cols) const {
    const Eigen::Index batch = log_prob_grad.size();
    Gradients out{zeros_like(), Matrix::Zero(context_dim(), batch)};
    const Matrix g_row = log_prob_grad.transpose().replicate(dim(), 1);
    Matrix grad_y = -cache.base.cwiseProduct(g_row);
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Matrix grad_z = (l + 1 < layers.size()) ? Matrix(grad_y.colwise().reverse()) : grad_y;
      const Matrix inv_scale = (-cache.log_scale[l].array()).exp().matrix();
      const Matrix grad_shift = -grad_z.cwiseProduct(inv_scale);
      const Matrix grad_log_scale = -grad_z.cwiseProduct(cache.noise[l]) - g_row;
      grad_y = grad_z.cwiseProduct(inv_scale);
      grad_y += layers[l].backward(cache.layer[l], grad_shift, grad_log_scale, out.params.layers[l],
                                   context_dim() > 0 ? &out.context : nullptr);
    }
    if (context_dim() > 0) {
      out.context = out.context.array().colwise() / context_scale.array();
      if (context_cols == 1 && batch > 1) out.context = Matrix(out.context.rowwise().sum());
    }
    return out;
  }

 private:
  void check_inputs(const Matrix& theta, const Matrix& context) const {
    if (theta.rows() != dim())
      throw ValidationError("theta has " + std::to_string(theta.rows()) + " rows, flow expects " +
                            std::to_string(dim()));
    if (context.rows() != context_dim())
      throw ValidationError("context has " + std::to_string(context.rows()) + " rows, flow expects " +
                            std::to_string(context_dim()));
    if (context.cols() != 1 && context.cols() != theta.cols())
      throw ValidationError("context must have one column or one per theta column");
    if (!theta.allFinite() || !context.allFinite()) throw NumericError("non-finite flow input");
  }

  Matrix standardized_context(const Matrix& context, Eigen::Index batch) const {
    if (context_dim() == 0) return Matrix(0, batch);
    // A single column is broadcast by the conditioners.
    return (context.colwise() - context_mean).array().colwise() / context_scale.array();
  }
};

using MadeLayerd = MadeLayer<double>;
using MafStackd = MafStack<double>;

}  // namespace lmsbi

namespace lmsbi {


template <typename Scalar>
struct NllGradient {
  Scalar loss;
  MafStack<Scalar> params;
  typename MafStack<Scalar>::Matrix context;
};

/// Mean negative log-density of a batch and its gradient with respect to the
/// flow parameters and the (raw) context columns.
template <typename Scalar>
NllGradient<Scalar> maf_nll_gradient(const MafStack<Scalar>& flow,
                                     const typename MafStack<Scalar>::Matrix& theta,
                                     const typename MafStack<Scalar>::Matrix& context) {
  using Vector = typename MafStack<Scalar>::Vector;
  const Eigen::Index batch = theta.cols();
  if (batch == 0) throw ValidationError("negative log-density of an empty batch is undefined");
  typename MafStack<Scalar>::Cache cache;
  const Vector lp = flow.log_prob(theta, context, &cache);
  const Scalar loss = -lp.mean();
  auto grads = flow.backward(cache, Vector::Constant(batch, Scalar(-1) / static_cast<Scalar>(batch)),
                             context.cols());
  return {loss, std::move(grads.params), std::move(grads.context)};
}

}  // namespace lmsbi
