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

#include "lmsbi/estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace lmsbi {

struct TrainConfig {
  double learning_rate = 5e-4;
  Index batch_size = 50;
  double validation_fraction = 0.1;
  int patience = 20;
  int max_epochs = 500;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained initialization
  double train_nll = 0;
  double validation_nll = 0;
  double seconds = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool early_stopped = false;
  double seconds = 0;
  std::vector<Index> validation_rows;

  /// Number of optimization epochs actually run.
  int epochs_run() const { return epochs.empty() ? 0 : epochs.back().epoch; }
};

/// per-epoch CSV: epoch,train_nll,validation_nll,seconds
void write_csv(std::ostream& out, const TrainLog& log);

struct TrainingSet {
  Eigen::MatrixXd theta;                // D x N
  std::vector<Eigen::MatrixXd> inputs;  // N conditioning inputs
};

/// Architecture of the estimator to train; a hidden size of 0 means no
/// recurrent embedding (inputs are summary columns).
struct EstimatorOptions {
  MafOptions flow;
  Index embedding_hidden = 0;
};

struct TrainResult {
  ConditionalEstimator estimator;
  TrainLog log;
};

/// Maximum-likelihood fit with Adam and early stopping on a held-out split.
/// Standardizers are fitted on the training split; the parameters of the
/// best validation epoch are returned.
TrainResult train(const TrainingSet& data, EstimatorOptions options, const TrainConfig& cfg);

/// Adam on a flat parameter vector.
class Adam {
 public:
  Adam(Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  Eigen::VectorXd m_, v_;
  double lr_, beta1_, beta2_, eps_;
  double beta1_pow_ = 1.0, beta2_pow_ = 1.0;
};

}  // namespace lmsbi
