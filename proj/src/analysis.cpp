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

#include "lmsbi/analysis.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"
#include "lmsbi/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace lmsbi {

CorrelationResult posterior_correlation(const Eigen::MatrixXd& samples) {
  if (samples.cols() < 2) throw ValidationError("correlation needs at least two samples");
  if (!samples.allFinite()) throw NumericError("non-finite posterior samples");
  const Index d = samples.rows();
  const Eigen::MatrixXd centered = samples.colwise() - samples.rowwise().mean();
  const Eigen::MatrixXd cov = centered * centered.transpose();
  CorrelationResult out{Eigen::MatrixXd::Identity(d, d), {}};
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  // Centering leaves rounding residue on constant rows.
  for (Index i = 0; i < d; ++i)
    if (samples.row(i).maxCoeff() == samples.row(i).minCoeff()) sd(i) = 0.0;
  for (Index i = 0; i < d; ++i)
    if (!(sd(i) > 0.0)) out.warnings.push_back("component " + std::to_string(i) + " has zero variance");
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      if (i == j) continue;
      out.matrix(i, j) = (sd(i) > 0.0 && sd(j) > 0.0) ? std::clamp(cov(i, j) / (sd(i) * sd(j)), -1.0, 1.0) : 0.0;
    }
  return out;
}

HdrResult hdr_select(const Eigen::MatrixXd& candidates, const Eigen::VectorXd& log_prob, Index count) {
  if (count < 1) throw ValidationError("HDR count must be positive");
  if (log_prob.size() != candidates.cols()) throw ValidationError("one log-density per candidate required");
  if (count > candidates.cols()) throw ValidationError("HDR count exceeds candidate count");
  std::vector<Index> order(static_cast<std::size_t>(candidates.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return log_prob(a) > log_prob(b); });
  HdrResult out{Eigen::MatrixXd(candidates.rows(), count), Eigen::VectorXd(count),
                Eigen::VectorXd(candidates.cols() - count)};
  for (Index j = 0; j < candidates.cols(); ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    if (j < count) {
      out.selected.col(j) = candidates.col(src);
      out.selected_log_prob(j) = log_prob(src);
    } else {
      out.discarded_log_prob(j - count) = log_prob(src);
    }
  }
  return out;
}

HdrResult hdr_sample(const MafPosterior& posterior, Index count, std::uint64_t seed, Index oversample) {
  if (count < 1 || oversample < 1) throw ValidationError("HDR count and oversampling factor must be positive");
  const Eigen::MatrixXd candidates = posterior.sample(count * oversample, seed).samples;
  return hdr_select(candidates, posterior.log_prob_batch(candidates), count);
}

namespace {

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, Index k, Rng& rng) {
  const Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = points.row(pick(rng));
  Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centroids.row(c) = points.row(chosen);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, Index k, Index restarts, std::uint64_t seed, Index max_iterations) {
  if (points.rows() < 1) throw ValidationError("k-means needs at least one point");
  if (k < 1 || restarts < 1) throw ValidationError("k-means needs positive k and restarts");
  const Index n = points.rows();
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (Index attempt = 0; attempt < restarts; ++attempt) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    Eigen::MatrixXd centroids = kmeans_plus_plus(points, k, rng);
    std::vector<Index> labels(static_cast<std::size_t>(n), -1);
    double inertia = 0;
    for (Index iter = 0; iter < max_iterations; ++iter) {
      bool changed = false;
      inertia = 0;
      for (Index i = 0; i < n; ++i) {
        Index arg = 0;
        const double dist = (centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&arg);
        inertia += dist;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      for (Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        counts(labels[static_cast<std::size_t>(i)]) += 1;
      }
      for (Index c = 0; c < k; ++c)
        if (counts(c) > 0) centroids.row(c) = sums.row(c) / counts(c);
    }
    if (inertia < best.inertia) best = {labels, centroids, inertia};
  }
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return best.centroids(a, 0) < best.centroids(b, 0); });
  std::vector<Index> relabel(static_cast<std::size_t>(k));
  Eigen::MatrixXd sorted(k, points.cols());
  for (Index c = 0; c < k; ++c) {
    relabel[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = c;
    sorted.row(c) = best.centroids.row(order[static_cast<std::size_t>(c)]);
  }
  for (auto& l : best.labels) l = relabel[static_cast<std::size_t>(l)];
  best.centroids = sorted;
  return best;
}

Eigen::Vector3d pattern_features(const MicroTrajectory& traj, const MarketSpec& spec, int from_step) {
  const Eigen::MatrixXd& x = traj.indicators.data;
  const Index n = spec.occupations();
  const Index steps = x.rows();
  if (x.cols() != 4 * n || static_cast<Index>(traj.transitions.size()) != steps)
    throw ValidationError("micro trajectory does not match the market");
  const Index first = std::max<Index>(1, from_step);
  if (first >= steps) throw ValidationError("no steps after the feature start step");
  const Eigen::ArrayXd z = spec.workforce.cast<double>().array();
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (Index t = first; t < steps; ++t) {
    const Eigen::ArrayXd hires = traj.transitions[static_cast<std::size_t>(t)].colwise().sum().transpose().cast<double>().array();
    const Eigen::ArrayXd sep = x.row(t - 1).head(n).transpose().array() - x.row(t).head(n).transpose().array() + hires;
    acc(0) += (hires / z).mean();
    acc(1) += (sep / z).mean();
    acc(2) += (hires.min(sep) / z).mean();
  }
  return acc / static_cast<double>(steps - first);
}

ClusterResult pattern_cluster(const MarketSpec& spec, const SimulationConfig& sim, const Eigen::MatrixXd& params,
                              const ClusterConfig& cfg) {
  if (params.cols() < 1) throw ValidationError("pattern clustering needs at least one parameter set");
  if (params.rows() != 3) throw ValidationError("parameter sets must have three rows");
  validate(spec);
  validate(sim);
  const Index runs = params.cols();
  Eigen::MatrixXd theta = params;
  theta.row(2).setConstant(cfg.fixed_r);
  const int from = sim.shock_step.value_or(0);

  std::vector<Eigen::Vector3d> feats(static_cast<std::size_t>(runs));
  std::vector<std::string> errors(static_cast<std::size_t>(runs));
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index i; (i = next.fetch_add(1)) < runs;) {
      const auto s = static_cast<std::size_t>(i);
      try {
        SimulationConfig run = sim;
        run.seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
        feats[s] = pattern_features(simulate_micro(spec, BehaviouralParams::from_vector(theta.col(i)), run), spec, from);
      } catch (const std::exception& e) {
        errors[s] = std::string(e.what()).empty() ? "simulation failed" : e.what();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(runs)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ClusterResult out;
  for (Index i = 0; i < runs; ++i) {
    if (errors[static_cast<std::size_t>(i)].empty()) out.run.push_back(i);
    else out.failures.push_back("set " + std::to_string(i) + ": " + errors[static_cast<std::size_t>(i)]);
  }
  if (out.run.empty()) throw NumericError("every pattern simulation failed");
  const auto m = static_cast<Index>(out.run.size());
  out.theta.resize(3, m);
  out.features.resize(m, 3);
  for (Index j = 0; j < m; ++j) {
    out.theta.col(j) = theta.col(out.run[static_cast<std::size_t>(j)]);
    out.features.row(j) = feats[static_cast<std::size_t>(out.run[static_cast<std::size_t>(j)])].transpose();
  }
  const Eigen::RowVectorXd mean = out.features.colwise().mean();
  Eigen::RowVectorXd sd = ((out.features.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Index c = 0; c < sd.size(); ++c)
    if (!(sd(c) > 0.0)) sd(c) = 1.0;
  const Eigen::MatrixXd scaled = (out.features.rowwise() - mean).array().rowwise() / sd.array();
  const KMeansResult km = kmeans(scaled, cfg.k, cfg.restarts, cfg.seed);
  out.labels = km.labels;
  out.centroids = (km.centroids.array().rowwise() * sd.array()).rowwise() + mean.array();
  out.sizes.assign(static_cast<std::size_t>(cfg.k), 0);
  out.mean_theta = Eigen::MatrixXd::Zero(cfg.k, 3);
  for (Index j = 0; j < m; ++j) {
    const Index l = out.labels[static_cast<std::size_t>(j)];
    ++out.sizes[static_cast<std::size_t>(l)];
    out.mean_theta.row(l) += out.theta.col(j).transpose();
  }
  for (Index c = 0; c < cfg.k; ++c) {
    const auto size = out.sizes[static_cast<std::size_t>(c)];
    if (size > 0) out.mean_theta.row(c) /= static_cast<double>(size);
    else out.mean_theta.row(c).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

std::string to_string(BenchPhase phase) { return phase == BenchPhase::training ? "training" : "simulation"; }

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit fit;
  if (x.size() != y.size()) throw ValidationError("fit inputs differ in length");
  if (x.size() < 2) {
    fit.note = "fewer than two points";
    return fit;
  }
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), static_cast<Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), static_cast<Index>(y.size()));
  const double mx = xs.mean(), my = ys.mean();
  const double sxx = (xs - mx).square().sum();
  if (!(sxx > 0.0)) {
    fit.note = "all x values are equal";
    return fit;
  }
  fit.slope = ((xs - mx) * (ys - my)).sum() / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_tot = (ys - my).square().sum();
  const double ss_res = (ys - (fit.intercept + fit.slope * xs)).square().sum();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.defined = true;
  return fit;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), static_cast<Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), static_cast<Index>(y.size()));
  const Eigen::ArrayXd dx = xs - xs.mean(), dy = ys - ys.mean();
  const double denom = std::sqrt(dx.square().sum() * dy.square().sum());
  return denom > 0.0 ? (dx * dy).sum() / denom : std::numeric_limits<double>::quiet_NaN();
}

void summarize(BenchResult& result) {
  std::vector<Index> ns;
  for (const auto& r : result.records)
    if (r.phase == BenchPhase::simulation && std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  std::vector<double> x, y;
  for (Index n : ns) {
    double total = 0;
    int count = 0;
    for (const auto& r : result.records)
      if (r.phase == BenchPhase::simulation && r.n == n) {
        total += r.seconds;
        ++count;
      }
    x.push_back(static_cast<double>(n));
    y.push_back(total / count);
  }
  result.simulation_fit = fit_line(x, y);
  if (!result.simulation_fit.defined && ns.size() == 1) result.simulation_fit.note = "single n value";
  std::vector<double> secs, epochs;
  for (const auto& r : result.records)
    if (r.phase == BenchPhase::training) {
      secs.push_back(r.seconds);
      epochs.push_back(r.epochs);
    }
  const double rho = pearson(secs, epochs);
  result.training_epoch_correlation = std::isfinite(rho) ? std::optional<double>(rho) : std::nullopt;
}

BenchResult bench_scaling(const std::vector<Index>& n_values, const BenchConfig& cfg) {
  if (n_values.empty()) throw ValidationError("bench needs at least one n value");
  if (!std::is_sorted(n_values.begin(), n_values.end())) throw ValidationError("bench n values must be sorted ascending");
  if (cfg.repetitions < 1 || cfg.simulations < 1) throw ValidationError("bench repetitions and simulations must be positive");
  BenchResult result;
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const Index n = n_values[ni];
    SynthConfig mc = cfg.market;
    mc.occupations = n;
    MarketSpec spec;
    try {
      spec = generate_market(mc);
    } catch (const std::exception& e) {
      result.failures.push_back("n=" + std::to_string(n) + ": " + e.what());
      continue;
    }
    for (Index rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t cell = stream_seed(cfg.seed, ni * 1000003u + static_cast<std::uint64_t>(rep));
      try {
        const Eigen::MatrixXd theta = sample_prior(PriorBox::defaults(), cfg.simulations, stream_seed(cell, 0));
        const auto t0 = std::chrono::steady_clock::now();
        const SimulationBatch batch = run_simulation_batch(spec, cfg.sim, theta, {stream_seed(cell, 1), 1, {}});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (batch.completed() != batch.size())
          throw NumericError(std::to_string(batch.size() - batch.completed()) + " simulations failed");
        result.records.push_back({n, BenchPhase::simulation, rep, secs, -1});
        if (cfg.training) {
          FitOptions fit = cfg.fit;
          fit.train.seed = stream_seed(cell, 2);
          const PosteriorBuilder builder = fit_posterior(batch, PriorBox::defaults(), fit);
          result.records.push_back({n, BenchPhase::training, rep, builder.log.seconds, builder.log.epochs_run()});
        }
      } catch (const std::exception& e) {
        result.failures.push_back("n=" + std::to_string(n) + " rep=" + std::to_string(rep) + ": " + e.what());
      }
    }
  }
  summarize(result);
  return result;
}

void write_csv(std::ostream& out, const BenchResult& result) {
  const auto old = out.precision(17);
  out << "n,phase,rep,seconds,epochs\n";
  for (const auto& r : result.records) {
    out << r.n << ',' << to_string(r.phase) << ',' << r.rep << ',' << r.seconds << ',';
    if (r.epochs >= 0) out << r.epochs;
    out << '\n';
  }
  out.precision(old);
}

void write_fit_json(std::ostream& out, const BenchResult& result) {
  nlohmann::json j;
  const auto& f = result.simulation_fit;
  j["simulation_fit"] = {{"defined", f.defined}, {"slope", f.defined ? nlohmann::json(f.slope) : nlohmann::json()},
                         {"intercept", f.defined ? nlohmann::json(f.intercept) : nlohmann::json()},
                         {"r_squared", f.defined ? nlohmann::json(f.r_squared) : nlohmann::json()},
                         {"note", f.note}};
  j["training_time_epochs_pearson"] =
      result.training_epoch_correlation ? nlohmann::json(*result.training_epoch_correlation) : nlohmann::json();
  j["training_time_epochs_pearson_reference"] = 0.93;
  j["failures"] = result.failures;
  out << j.dump(2) << '\n';
}

void write_csv(std::ostream& out, const ClusterResult& result, const std::vector<std::string>& names) {
  const auto old = out.precision(17);
  out << "run";
  for (const auto& n : names) out << ',' << n;
  out << ",gain,loss,co_occurrence,label\n";
  for (std::size_t j = 0; j < result.run.size(); ++j) {
    const auto c = static_cast<Index>(j);
    out << result.run[j];
    for (Index k = 0; k < result.theta.rows(); ++k) out << ',' << result.theta(k, c);
    for (Index k = 0; k < 3; ++k) out << ',' << result.features(c, k);
    out << ',' << result.labels[j] << '\n';
  }
  out.precision(old);
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<SvgSeries>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
  constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
  const auto py = [&](double y) { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << xv
        << "</text>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n"
      << "<text transform=\"translate(16," << (top + height - bottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 6];
    if (s.line) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      svg << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\"" << color
              << "\" fill-opacity=\"0.7\"/>\n";
    }
    svg << "<text x=\"" << width - right - 4 << "\" y=\"" << top + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\""
        << color << "\">" << escape_xml(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  out << svg.str();
}

}  // namespace lmsbi
