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

#include "lmsbi/train.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/parameters.hpp"
#include "lmsbi/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>

namespace lmsbi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fit_theta_standardizer(MafStackd& flow, const Eigen::MatrixXd& theta, const std::vector<Index>& rows) {
  const Index d = theta.rows();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  for (Index i : rows) mean += theta.col(i);
  mean /= static_cast<double>(rows.size());
  for (Index i : rows) sq += (theta.col(i) - mean).cwiseAbs2();
  flow.theta_mean = mean;
  flow.theta_scale.resize(d);
  for (Index k = 0; k < d; ++k) {
    const double sd = std::sqrt(sq(k) / static_cast<double>(rows.size()));
    flow.theta_scale(k) = sd > 1e-12 ? sd : 1.0;
  }
}

void fit_context_standardizer(MafStackd& flow, const std::vector<Eigen::MatrixXd>& inputs,
                              const std::vector<Index>& rows) {
  const Index c = flow.context_dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(c), sq = Eigen::VectorXd::Zero(c);
  for (Index i : rows) mean += inputs[static_cast<std::size_t>(i)].col(0);
  mean /= static_cast<double>(rows.size());
  for (Index i : rows) sq += (inputs[static_cast<std::size_t>(i)].col(0) - mean).cwiseAbs2();
  flow.context_mean = mean;
  flow.context_scale.resize(c);
  for (Index k = 0; k < c; ++k) {
    const double sd = std::sqrt(sq(k) / static_cast<double>(rows.size()));
    flow.context_scale(k) = sd > 1e-12 ? sd : 1.0;
  }
}

struct Batch {
  Eigen::MatrixXd theta;
  std::vector<const Eigen::MatrixXd*> inputs;
};

Batch gather(const TrainingSet& data, std::span<const Index> rows) {
  Batch b{Eigen::MatrixXd(data.theta.rows(), static_cast<Index>(rows.size())), {}};
  b.inputs.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    b.theta.col(static_cast<Index>(k)) = data.theta.col(rows[k]);
    b.inputs.push_back(&data.inputs[static_cast<std::size_t>(rows[k])]);
  }
  return b;
}

double mean_nll(const ConditionalEstimator& est, const TrainingSet& data, const std::vector<Index>& rows) {
  constexpr std::size_t chunk = 200;
  double total = 0;
  for (std::size_t at = 0; at < rows.size(); at += chunk) {
    const auto part = std::span<const Index>(rows).subspan(at, std::min(chunk, rows.size() - at));
    const Batch b = gather(data, part);
    total -= est.log_prob(b.theta, b.inputs).sum();
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be positive");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
    throw ValidationError("validation fraction must lie in (0, 1)");
  if (cfg.patience < 1) throw ValidationError("patience must be positive");
  if (cfg.max_epochs < 1) throw ValidationError("max epochs must be positive");
}

void write_csv(std::ostream& out, const TrainLog& log) {
  const auto old = out.precision(17);
  out << "epoch,train_nll,validation_nll,seconds\n";
  for (const auto& e : log.epochs)
    out << e.epoch << ',' << e.train_nll << ',' << e.validation_nll << ',' << e.seconds << '\n';
  out.precision(old);
}

Adam::Adam(Index size, double learning_rate, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  beta1_pow_ *= beta1_;
  beta2_pow_ *= beta2_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double step = lr_ * std::sqrt(1.0 - beta2_pow_) / (1.0 - beta1_pow_);
  params.array() -= step * m_.array() / (v_.array().sqrt() + eps_);
}

TrainResult train(const TrainingSet& data, EstimatorOptions options, const TrainConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();
  const Index n = data.theta.cols();
  if (static_cast<Index>(data.inputs.size()) != n) throw ValidationError("theta and input counts differ");
  if (n < 50) throw ValidationError("training needs at least 50 pairs, got " + std::to_string(n));
  for (Index i = 0; i < n; ++i) {
    const auto& x = data.inputs[static_cast<std::size_t>(i)];
    if (!data.theta.col(i).allFinite() || !x.allFinite())
      throw NumericError("non-finite training pair at row " + std::to_string(i));
    if (x.rows() != data.inputs.front().rows() || x.cols() != data.inputs.front().cols())
      throw ValidationError("inconsistent input shape at row " + std::to_string(i));
  }

  Rng rng = make_rng(cfg.seed, 0);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::clamp<Index>(static_cast<Index>(std::floor(cfg.validation_fraction * n)), 1, n - 1);
  std::vector<Index> val(order.begin(), order.begin() + n_val);
  std::vector<Index> trn(order.begin() + n_val, order.end());

  options.flow.dim = data.theta.rows();
  ConditionalEstimator est;
  if (options.embedding_hidden > 0) {
    const Eigen::MatrixXd& first = data.inputs.front();
    est.embedding = RecurrentEmbeddingd::random(first.cols(), options.embedding_hidden, rng,
                                                static_cast<double>(first.rows()));
    options.flow.context_dim = options.embedding_hidden;
    std::vector<const Eigen::MatrixXd*> seqs;
    for (Index i : trn) seqs.push_back(&data.inputs[static_cast<std::size_t>(i)]);
    est.embedding->fit_standardizer(seqs);
  } else {
    options.flow.context_dim = data.inputs.front().rows();
  }
  est.flow = MafStackd::random(options.flow, rng);
  fit_theta_standardizer(est.flow, data.theta, trn);
  if (!est.embedding) fit_context_standardizer(est.flow, data.inputs, trn);

  Eigen::VectorXd params = pack(est);
  Adam adam(params.size(), cfg.learning_rate);
  TrainResult result;
  TrainLog& log = result.log;

  EpochRecord initial{0, mean_nll(est, data, trn), mean_nll(est, data, val), seconds_since(start)};
  log.epochs.push_back(initial);
  double best = std::isfinite(initial.validation_nll) ? initial.validation_nll
                                                      : std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = params;
  int since_best = 0;

  Eigen::VectorXd grad;
  RecurrentEmbeddingd::Cache workspace;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    std::shuffle(trn.begin(), trn.end(), rng);
    double loss_sum = 0;
    for (std::size_t at = 0; at < trn.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const auto rows = std::span<const Index>(trn).subspan(
          at, std::min(static_cast<std::size_t>(cfg.batch_size), trn.size() - at));
      const Batch b = gather(data, rows);
      const double loss = est.nll_gradient(b.theta, b.inputs, grad, &workspace);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        std::ostringstream os;
        os << "non-finite training loss at epoch " << epoch << ", batch rows:";
        for (Index r : rows) os << ' ' << r;
        throw NumericError(os.str());
      }
      loss_sum += loss * static_cast<double>(rows.size());
      if (cfg.clip_norm > 0) {
        const double norm = grad.norm();
        if (norm > cfg.clip_norm) grad *= cfg.clip_norm / norm;
      }
      adam.step(params, grad);
      unpack(est, params);
    }
    const double val_nll = mean_nll(est, data, val);
    log.epochs.push_back({epoch, loss_sum / static_cast<double>(trn.size()), val_nll, seconds_since(epoch_start)});
    if (std::isfinite(val_nll) && val_nll < best) {
      best = val_nll;
      best_params = params;
      log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      log.early_stopped = true;
      break;
    }
  }
  unpack(est, best_params);
  std::sort(val.begin(), val.end());
  log.validation_rows = std::move(val);
  log.seconds = seconds_since(start);
  result.estimator = std::move(est);
  return result;
}

}  // namespace lmsbi
