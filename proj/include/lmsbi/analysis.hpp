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

#include "lmsbi/pipeline.hpp"
#include "lmsbi/synth.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmsbi {

struct CorrelationResult {
  Eigen::MatrixXd matrix;
  std::vector<std::string> warnings;
};

/// Pearson correlations between the rows of a D x N sample matrix. A
/// zero-variance row correlates 0 with every other row (and 1 with itself).
CorrelationResult posterior_correlation(const Eigen::MatrixXd& samples);

struct HdrResult {
  Eigen::MatrixXd selected;             // D x count
  Eigen::VectorXd selected_log_prob;    // descending
  Eigen::VectorXd discarded_log_prob;
};

/// Draws oversample * count posterior samples and keeps the count with the
/// highest posterior log-density.
HdrResult hdr_sample(const MafPosterior& posterior, Index count = 100, std::uint64_t seed = 0, Index oversample = 20);
/// Selection step alone on a given candidate set.
HdrResult hdr_select(const Eigen::MatrixXd& candidates, const Eigen::VectorXd& log_prob, Index count);

struct KMeansResult {
  std::vector<Index> labels;
  Eigen::MatrixXd centroids;  // k x F
  double inertia = 0;
};

/// Lloyd iterations from k-means++ seeds, best of `restarts` by inertia.
/// Clusters are relabelled by ascending first centroid coordinate.
KMeansResult kmeans(const Eigen::MatrixXd& points, Index k, Index restarts, std::uint64_t seed, Index max_iterations = 300);

/// Mean per-step employment gain (hires / z), loss (separations / z) and
/// co-occurrence (min(hires, separations) / z) over steps >= from_step,
/// averaged across occupations. Separations are e(t-1) - e(t) + hires(t).
Eigen::Vector3d pattern_features(const MicroTrajectory& traj, const MarketSpec& spec, int from_step);

struct ClusterConfig {
  Index k = 3;
  Index restarts = 50;
  double fixed_r = 0.55;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ClusterResult {
  std::vector<Index> run;        // parameter-set index of each completed run
  Eigen::MatrixXd theta;         // D x runs, with r overridden
  Eigen::MatrixXd features;      // runs x 3
  std::vector<Index> labels;     // per completed run
  Eigen::MatrixXd centroids;     // k x 3 in feature units
  Eigen::MatrixXd mean_theta;    // k x D; NaN rows for empty clusters
  std::vector<Index> sizes;
  std::vector<std::string> failures;
};

/// Simulates every parameter set with r fixed, extracts pattern features over
/// the post-shock steps and clusters the z-scored features.
ClusterResult pattern_cluster(const MarketSpec& spec, const SimulationConfig& sim, const Eigen::MatrixXd& params,
                              const ClusterConfig& cfg);

enum class BenchPhase { simulation, training };
std::string to_string(BenchPhase phase);

struct BenchRecord {
  Index n = 0;
  BenchPhase phase = BenchPhase::simulation;
  Index rep = 0;
  double seconds = 0;
  int epochs = -1;  // training only
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  bool defined = false;
  std::string note;
};

/// Least squares y = intercept + slope * x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
/// NaN when either input has no variance or fewer than two points.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct BenchConfig {
  Index repetitions = 25;
  Index simulations = 1000;  // per repetition
  bool training = true;
  SynthConfig market;        // occupations overridden per n
  SimulationConfig sim;
  FitOptions fit;
  std::uint64_t seed = 0;
};

struct BenchResult {
  std::vector<BenchRecord> records;
  LinearFit simulation_fit;  // mean simulation seconds vs n
  std::optional<double> training_epoch_correlation;
  std::vector<std::string> failures;
};

/// Times the simulation and training phases for each n, sequentially.
BenchResult bench_scaling(const std::vector<Index>& n_values, const BenchConfig& cfg);
/// Refits from records; used by bench_scaling and for externally timed data.
void summarize(BenchResult& result);

/// n,phase,rep,seconds,epochs
void write_csv(std::ostream& out, const BenchResult& result);
void write_fit_json(std::ostream& out, const BenchResult& result);
/// run,<names...>,gain,loss,co_occurrence,label
void write_csv(std::ostream& out, const ClusterResult& result,
               const std::vector<std::string>& names = {"delta_u", "delta_v", "r"});

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  bool line = false;
};

/// Self-contained scatter/line chart.
void write_svg(std::ostream& out, const std::vector<SvgSeries>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label);

}  // namespace lmsbi
