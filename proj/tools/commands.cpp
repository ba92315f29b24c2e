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

#include "options.hpp"

#include "lmsbi/abc.hpp"
#include "lmsbi/analysis.hpp"
#include "lmsbi/checkpoint.hpp"
#include "lmsbi/errors.hpp"
#include "lmsbi/sbc.hpp"
#include "lmsbi/simulator.hpp"
#include "lmsbi/synth.hpp"
#include "lmsbi/trajectory_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace lmsbi::cli {

namespace fs = std::filesystem;

SimulationConfig SimOptions::resolve() const {
  SimulationConfig cfg;
  cfg.steps = steps;
  if (shock_at >= 0) cfg.shock_step = shock_at;
  cfg.shock_mode = shock_mode == "sigmoid" ? ShockMode::sigmoid : ShockMode::step;
  cfg.sigmoid_half_width = half_width;
  cfg.gamma_u = gamma_u;
  cfg.gamma_v = gamma_v;
  cfg.burn_in = burn_in;
  if (vacancy_lifetime > 0) cfg.vacancy_lifetime = vacancy_lifetime;
  validate(cfg);
  return cfg;
}

void add_sim_options(CLI::App* app, SimOptions& o) {
  app->add_option("--steps", o.steps, "Simulation horizon T")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--shock-at", o.shock_at, "Automation shock step (negative disables)")->capture_default_str();
  app->add_option("--shock-mode", o.shock_mode, "Shock profile")
      ->capture_default_str()
      ->check(CLI::IsMember({"step", "sigmoid"}));
  app->add_option("--half-width", o.half_width, "Sigmoid shock half width in steps")->capture_default_str();
  app->add_option("--gamma-u", o.gamma_u, "Separation sensitivity to surplus labour")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--gamma-v", o.gamma_v, "Vacancy sensitivity to unmet demand")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--burn-in", o.burn_in, "Unrecorded steps at baseline demand")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--vacancy-lifetime", o.vacancy_lifetime, "Close vacancies after this many steps (0: never)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

FitOptions TrainOptions::resolve(std::uint64_t seed) const {
  FitOptions f;
  f.mode = parse_summary_mode(summaries);
  f.statistics = statistics == "per_step" ? StatisticsMode::per_step : StatisticsMode::per_series;
  f.embedding_hidden = embedding_hidden;
  f.flow.hidden = hidden;
  f.flow.layers = flow_layers;
  f.train.learning_rate = learning_rate;
  f.train.batch_size = batch_size;
  f.train.validation_fraction = validation_fraction;
  f.train.patience = patience;
  f.train.max_epochs = max_epochs;
  f.train.seed = seed;
  validate(f.train);
  return f;
}

void add_train_options(CLI::App* app, TrainOptions& o) {
  app->add_option("--summaries", o.summaries, "Summary pipeline")
      ->capture_default_str()
      ->check(CLI::IsMember({"handcrafted", "learned"}));
  app->add_option("--statistics", o.statistics, "Handcrafted statistics layout")
      ->capture_default_str()
      ->check(CLI::IsMember({"per_series", "per_step"}));
  app->add_option("--lr", o.learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--val-fraction", o.validation_fraction, "Validation split")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--patience", o.patience, "Early-stopping patience in epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--max-epochs", o.max_epochs, "Epoch limit")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--hidden", o.hidden, "MADE hidden width")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--flow-layers", o.flow_layers, "Number of MADE layers")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--embedding-hidden", o.embedding_hidden, "Recurrent embedding size for learned summaries")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

nlohmann::json resolved_parameters(const CLI::App* app) {
  nlohmann::json out = nlohmann::json::object();
  for (const CLI::Option* o : app->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "version" || o->get_lnames().empty()) continue;
    if (o->get_type_size() == 0) {
      out[name] = o->count() > 0;
      continue;
    }
    std::vector<std::string> values = o->count() > 0 ? o->results() : std::vector<std::string>{};
    if (values.empty()) {
      if (o->get_default_str().empty()) continue;
      values = {o->get_default_str()};
    }
    if (values.size() == 1) out[name] = values[0];
    else out[name] = values;
  }
  return out;
}

std::function<void(Index, Index)> progress_printer(std::string label) {
  return [label = std::move(label), last = Index{-1}](Index done, Index total) mutable {
    const Index step = std::max<Index>(1, total / 20);
    if (done == total || done / step != last) {
      last = done / step;
      std::fprintf(stderr, "\r%s: %ld/%ld", label.c_str(), static_cast<long>(done), static_cast<long>(total));
      if (done == total) std::fputc('\n', stderr);
      std::fflush(stderr);
    }
  };
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

namespace {

const std::vector<std::string> kNames = {"delta_u", "delta_v", "r"};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

Eigen::Vector3d parse_theta(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ValidationError("theta component '" + cell + "' is not a number");
    }
  }
  if (v.size() != 3) throw ValidationError("theta needs three comma-separated values delta_u,delta_v,r");
  const Eigen::Vector3d theta(v[0], v[1], v[2]);
  validate(BehaviouralParams::from_vector(theta));
  return theta;
}

fs::path sibling(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

std::string gib(std::uint64_t bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(bytes) / static_cast<double>(1ULL << 30) << " GiB";
  return os.str();
}

/// Picks the rows named delta_u, delta_v, r (in that order) from a CSV table.
Eigen::MatrixXd parameter_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::string> names;
  const Eigen::MatrixXd table = read_samples_csv(in, &names);
  Eigen::MatrixXd out(3, table.cols());
  for (std::size_t k = 0; k < kNames.size(); ++k) {
    const auto it = std::find(names.begin(), names.end(), kNames[k]);
    if (it == names.end()) throw ValidationError(path.string() + " has no " + kNames[k] + " column");
    out.row(static_cast<Index>(k)) = table.row(it - names.begin());
  }
  return out;
}

MacroTrajectory load_observation(const fs::path& path, const MarketSpec& spec) {
  MacroTrajectory obs = load_macro(path);
  if (obs.occupations() != spec.occupations())
    throw ValidationError("observation has " + std::to_string(obs.occupations()) + " occupations, market has " +
                          std::to_string(spec.occupations()));
  if (!obs.data.allFinite()) throw ValidationError("observation contains non-finite values");
  return obs;
}

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
}

RunManifest start_manifest(const CLI::App* app, const std::string& command, std::uint64_t seed) {
  RunManifest m(command, seed);
  m.parameters() = resolved_parameters(app);
  if (const CLI::App* root = app->get_parent()) {
    while (root->get_parent()) root = root->get_parent();
    const CLI::Option* cfg = root->get_config_ptr();
    if (cfg && cfg->count() > 0) m.set_config(cfg->as<std::string>());
  }
  return m;
}

// ---------------------------------------------------------------- gen-market

void gen_market(CLI::App& app) {
  struct Opts {
    SynthConfig synth;
    fs::path out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("gen-market", "Generate a synthetic block-pattern market");
  sub->add_option("--n", o->synth.occupations, "Number of occupations")->required()->check(CLI::PositiveNumber);
  sub->add_option("--blocks", o->synth.block_count, "Number of blocks (0: round(sqrt(n)))")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--intra-mass", o->synth.intra_block_mass, "Transition mass kept inside a block")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--epsilon", o->synth.smoothing_epsilon, "Additive smoothing of the transition matrix")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--workers", o->synth.workers_per_occupation, "Workforce per occupation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--p-max", o->synth.p_max, "Upper bound of automation probabilities")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--seed", o->synth.seed, "Seed")->capture_default_str();
  sub->add_option("--out", o->out, "Output market JSON")->required();
  sub->callback([o, sub] {
    const MarketSpec spec = generate_market(o->synth);
    save_market_json(spec, o->out);
    RunManifest m = start_manifest(sub, "gen-market", o->synth.seed);
    m.note("occupations", spec.occupations());
    m.note("blocks", resolved_block_count(o->synth));
    m.add_output(o->out);
    m.write(sibling(o->out, ".manifest.json"));
    std::cout << "wrote " << o->out.string() << " (" << spec.occupations() << " occupations)\n";
  });
}

// ------------------------------------------------------------------ simulate

void simulate_cmd(CLI::App& app) {
  struct Opts {
    fs::path spec, out;
    std::string theta = "0.016,0.012,0.55";
    SimOptions sim;
    bool micro = false, csv = false;
    Index sims = 1;
    std::uint64_t element_bytes = 2;
    double budget_gib = 8.0;
    Common common;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("simulate", "Simulate trajectories of a market");
  sub->add_option("--spec", o->spec, "Market JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--theta", o->theta, "delta_u,delta_v,r")->capture_default_str();
  add_sim_options(sub, o->sim);
  sub->add_flag("--micro", o->micro, "Record job-transition matrices");
  sub->add_option("--sims", o->sims, "Number of simulations")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--element-bytes", o->element_bytes, "Bytes per stored micro element for the memory estimate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--budget-gib", o->budget_gib, "Micro output memory budget")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_flag("--csv", o->csv, "Also write a CSV export next to each trajectory");
  add_common(sub, o->common);
  sub->add_option("--out", o->out, "Output trajectory (with --sims > 1, the stem of numbered files)")->required();
  sub->callback([o, sub] {
    const MarketSpec spec = load_market_json(o->spec);
    const Eigen::Vector3d theta = parse_theta(o->theta);
    SimulationConfig cfg = o->sim.resolve();
    const auto budget = static_cast<std::uint64_t>(o->budget_gib * static_cast<double>(1ULL << 30));
    cfg.micro_budget_bytes = std::max(cfg.micro_budget_bytes, budget);
    if (o->micro) {
      const std::uint64_t need = micro_memory_estimate(static_cast<std::uint64_t>(o->sims),
                                                       static_cast<std::uint64_t>(cfg.steps),
                                                       static_cast<std::uint64_t>(spec.occupations()), o->element_bytes);
      if (need > budget)
        throw ResourceError("micro output for " + std::to_string(o->sims) + " simulations of " +
                                std::to_string(spec.occupations()) + " occupations over " + std::to_string(cfg.steps) +
                                " steps needs about " + gib(need) + " (" + std::to_string(need) +
                                " bytes), over the " + gib(budget) + " budget",
                            need);
    }

    RunManifest m = start_manifest(sub, "simulate", o->common.seed);
    m.add_input(o->spec);
    auto path_for = [&](Index i) {
      if (o->sims == 1) return o->out;
      std::ostringstream name;
      name << o->out.stem().string() << '_' << std::setw(4) << std::setfill('0') << i << o->out.extension().string();
      return o->out.parent_path() / name.str();
    };
    auto emit = [&](Index i, const auto& traj) {
      const fs::path p = path_for(i);
      save_trajectory(p, traj);
      m.add_output(p);
      if (o->csv) {
        const fs::path c = fs::path(p).replace_extension(".csv");
        auto out = open_out(c);
        write_csv(out, traj);
        out.close();
        m.add_output(c);
      }
    };
    if (o->micro) {
      for (Index i = 0; i < o->sims; ++i) {
        SimulationConfig run = cfg;
        run.seed = stream_seed(o->common.seed, static_cast<std::uint64_t>(i));
        emit(i, simulate_micro(spec, BehaviouralParams::from_vector(theta), run));
      }
    } else {
      const Eigen::MatrixXd thetas = theta.replicate(1, o->sims);
      BatchOptions bo{o->common.seed, o->common.threads, o->sims > 1 ? progress_printer("simulate") : nullptr};
      const SimulationBatch batch = run_simulation_batch(spec, cfg, thetas, bo);
      for (Index i = 0; i < o->sims; ++i) {
        const auto& err = batch.errors[static_cast<std::size_t>(i)];
        if (!err.empty()) throw NumericError("simulation " + std::to_string(i) + " failed: " + err);
        emit(i, MacroTrajectory{batch.observations[static_cast<std::size_t>(i)]});
      }
    }
    const fs::path manifest = o->sims == 1 ? sibling(o->out, ".manifest.json")
                                           : o->out.parent_path() / (o->out.stem().string() + ".manifest.json");
    m.write(manifest);
    std::cout << "wrote " << o->sims << " trajectory file(s); manifest " << manifest.string() << '\n';
  });
}

// --------------------------------------------------------------------- infer

void infer_cmd(CLI::App& app) {
  struct Opts {
    fs::path spec, obs, out;
    SimOptions sim;
    TrainOptions train;
    Index sims = 1000;
    Index draws = 1000;
    Common common;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("infer", "Train a neural posterior and sample it given an observation");
  sub->add_option("--spec", o->spec, "Market JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--obs", o->obs, "Observed trajectory (LMTR)")->required()->check(CLI::ExistingFile);
  add_train_options(sub, o->train);
  sub->add_option("--sims", o->sims, "Training simulations")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--draws", o->draws, "Posterior samples to write")->capture_default_str()->check(CLI::PositiveNumber);
  add_sim_options(sub, o->sim);
  add_common(sub, o->common);
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, sub] {
    const MarketSpec spec = load_market_json(o->spec);
    const MacroTrajectory obs = load_observation(o->obs, spec);
    SimulationConfig cfg = o->sim.resolve();
    if (obs.steps() != cfg.steps)
      throw ValidationError("observation has " + std::to_string(obs.steps()) + " steps but --steps is " +
                            std::to_string(cfg.steps));
    const FitOptions fit = o->train.resolve(stream_seed(o->common.seed, 2));
    ensure_directory(o->out);

    const PriorBox prior = PriorBox::defaults();
    const Eigen::MatrixXd thetas = sample_prior(prior, o->sims, stream_seed(o->common.seed, 0));
    const SimulationBatch batch = run_simulation_batch(
        spec, cfg, thetas, {stream_seed(o->common.seed, 1), o->common.threads, progress_printer("simulations")});
    const Index failed = batch.size() - batch.completed();
    if (failed > 0) std::cerr << failed << " simulations failed and are excluded\n";
    std::cerr << "training (" << to_string(fit.mode) << " summaries)\n";
    const PosteriorBuilder builder = fit_posterior(batch, prior, fit);
    const MafPosterior post = condition(builder, obs.data);
    const PosteriorSamples samples = post.sample(o->draws, stream_seed(o->common.seed, 3));

    const fs::path ckpt = o->out / "posterior.lmnf", csv = o->out / "samples.csv", log = o->out / "train_log.csv";
    save_checkpoint(ckpt, builder);
    {
      auto out = open_out(csv);
      write_samples_csv(out, samples.samples, kNames);
    }
    {
      auto out = open_out(log);
      write_csv(out, builder.log);
    }
    RunManifest m = start_manifest(sub, "infer", o->common.seed);
    m.add_input(o->spec);
    m.add_input(o->obs);
    m.add_output(ckpt);
    m.add_output(csv);
    m.add_output(log);
    m.note("summary_mode", to_string(builder.mode));
    m.note("prior", {{"lower", std::vector<double>(prior.lower.data(), prior.lower.data() + 3)},
                     {"upper", std::vector<double>(prior.upper.data(), prior.upper.data() + 3)}});
    m.note("failed_simulations", failed);
    m.note("epochs", builder.log.epochs_run());
    m.note("best_epoch", builder.log.best_epoch);
    m.note("leakage", post.leakage());
    m.write(o->out / "manifest.json");

    const Eigen::Vector3d mean = samples.samples.rowwise().mean();
    std::cout << "posterior mean delta_u=" << mean(0) << " delta_v=" << mean(1) << " r=" << mean(2)
              << " (leakage " << post.leakage() << ", " << builder.log.epochs_run() << " epochs)\n";
  });
}

// ----------------------------------------------------------------------- sbc

void sbc_cmd(CLI::App& app) {
  struct Opts {
    fs::path spec, checkpoint, out;
    SimOptions sim;
    SbcConfig sbc;
    bool svg = false;
    Common common;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("sbc", "Simulation-based calibration of a trained posterior");
  sub->add_option("--spec", o->spec, "Market JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--checkpoint", o->checkpoint, "Flow checkpoint from infer")->required()->check(CLI::ExistingFile);
  sub->add_option("--trials", o->sbc.trials, "SBC trials N")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--draws", o->sbc.draws, "Posterior draws per trial L")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--bins", o->sbc.bins, "Histogram bins")->capture_default_str()->check(CLI::Range(2, 100000));
  sub->add_option("--coverage", o->sbc.coverage, "Uniformity band coverage")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_flag("--svg", o->svg, "Also write an SVG of the rank histograms");
  add_sim_options(sub, o->sim);
  add_common(sub, o->common);
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, sub] {
    const MarketSpec spec = load_market_json(o->spec);
    const PosteriorBuilder builder = load_checkpoint(o->checkpoint);
    const SimulationConfig cfg = o->sim.resolve();
    ensure_directory(o->out);
    SbcConfig sc = o->sbc;
    sc.seed = o->common.seed;
    sc.workers = o->common.threads;
    const PosteriorFactory factory = [&builder](const Eigen::MatrixXd& y, Index draws, std::uint64_t seed) {
      return condition(builder, y).sample(draws, seed).samples;
    };
    const SbcReport report = run_sbc(box_sampler(builder.prior), market_simulator(spec, cfg), factory, sc, kNames);

    const fs::path json = o->out / "sbc.json", hist = o->out / "sbc_hist.csv";
    {
      auto out = open_out(json);
      write_json(out, report);
    }
    {
      auto out = open_out(hist);
      write_histogram_csv(out, report);
    }
    RunManifest m = start_manifest(sub, "sbc", o->common.seed);
    m.add_input(o->spec);
    m.add_input(o->checkpoint);
    m.add_output(json);
    m.add_output(hist);
    if (o->svg) {
      std::vector<SvgSeries> series;
      for (const auto& p : report.parameters) {
        SvgSeries s{p.name, {}, {}, true};
        for (std::size_t b = 0; b < p.counts.size(); ++b) {
          s.x.push_back(static_cast<double>(b));
          s.y.push_back(static_cast<double>(p.counts[b]));
        }
        series.push_back(std::move(s));
      }
      if (!report.band.empty()) {
        const double bins = static_cast<double>(report.bins - 1);
        series.push_back({"band low", {0, bins}, {double(report.band[0].first), double(report.band[0].first)}, true});
        series.push_back({"band high", {0, bins}, {double(report.band[0].second), double(report.band[0].second)}, true});
      }
      const fs::path svg = o->out / "sbc.svg";
      auto out = open_out(svg);
      write_svg(out, series, "SBC rank histograms", "rank bin", "count");
      out.close();
      m.add_output(svg);
    }
    m.note("completed", report.completed);
    m.note("skipped", report.skipped);
    m.write(o->out / "manifest.json");
    for (const auto& p : report.parameters)
      std::cout << p.name << ": chi2=" << p.chi_square << " p=" << p.p_value << " bins outside band "
                << p.bins_outside_band << "/" << p.counts.size() << '\n';
    if (report.skipped > 0) std::cout << report.skipped << " trials skipped\n";
  });
}

// --------------------------------------------------------------------- bench

void bench_cmd(CLI::App& app) {
  struct Opts {
    std::vector<Index> n = {10, 35, 60, 110, 160};
    Index reps = 25;
    Index sims = 1000;
    bool no_training = false, svg = false;
    std::int64_t workforce = 100;
    SimOptions sim;
    TrainOptions train;
    Common common;
    fs::path out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bench", "Time simulation and training against occupation count");
  sub->add_option("--n", o->n, "Occupation counts, ascending")->delimiter(',')->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->add_option("--reps", o->reps, "Repetitions per n")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--sims", o->sims, "Simulations per repetition")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--workforce", o->workforce, "Workforce per occupation")->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->add_flag("--no-training", o->no_training, "Time the simulation phase only");
  sub->add_flag("--svg", o->svg, "Also write an SVG of mean simulation time against n");
  add_sim_options(sub, o->sim);
  add_train_options(sub, o->train);
  add_common(sub, o->common);
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([o, sub] {
    BenchConfig cfg;
    cfg.repetitions = o->reps;
    cfg.simulations = o->sims;
    cfg.training = !o->no_training;
    cfg.market.workers_per_occupation = o->workforce;
    cfg.market.seed = o->common.seed;
    cfg.sim = o->sim.resolve();
    cfg.fit = o->train.resolve(0);
    cfg.seed = o->common.seed;
    ensure_directory(o->out);
    const BenchResult r = bench_scaling(o->n, cfg);
    const fs::path csv = o->out / "bench.csv", fit = o->out / "fit.json";
    {
      auto out = open_out(csv);
      write_csv(out, r);
    }
    {
      auto out = open_out(fit);
      write_fit_json(out, r);
    }
    RunManifest m = start_manifest(sub, "bench", o->common.seed);
    m.add_output(csv);
    m.add_output(fit);
    if (o->svg) {
      SvgSeries means{"mean simulation seconds", {}, {}, false};
      for (Index n : o->n) {
        double total = 0;
        int count = 0;
        for (const auto& rec : r.records)
          if (rec.phase == BenchPhase::simulation && rec.n == n) total += rec.seconds, ++count;
        if (count == 0) continue;
        means.x.push_back(static_cast<double>(n));
        means.y.push_back(total / count);
      }
      std::vector<SvgSeries> series{means};
      if (r.simulation_fit.defined) {
        const auto& f = r.simulation_fit;
        const double lo = static_cast<double>(o->n.front()), hi = static_cast<double>(o->n.back());
        series.push_back({"least-squares fit", {lo, hi}, {f.intercept + f.slope * lo, f.intercept + f.slope * hi}, true});
      }
      const fs::path svg = o->out / "bench.svg";
      auto out = open_out(svg);
      write_svg(out, series, "Simulation time against occupation count", "occupations", "seconds");
      out.close();
      m.add_output(svg);
    }
    m.write(o->out / "manifest.json");
    const auto& f = r.simulation_fit;
    if (f.defined)
      std::cout << "simulation time = " << f.intercept << " + " << f.slope << " * n, R^2 = " << f.r_squared << '\n';
    else
      std::cout << "simulation fit undefined: " << f.note << '\n';
    if (r.training_epoch_correlation)
      std::cout << "Pearson(training time, epochs) = " << *r.training_epoch_correlation << " (reference 0.93)\n";
    for (const auto& fail : r.failures) std::cerr << "failed: " << fail << '\n';
  });
}

// ------------------------------------------------------------------- analyze

void analyze_cmd(CLI::App& app) {
  auto* sub = app.add_subcommand("analyze", "Posterior analyses");
  sub->require_subcommand(1);

  {
    struct Opts {
      fs::path samples, out;
    };
    auto o = std::make_shared<Opts>();
    auto* c = sub->add_subcommand("correlation", "Correlation matrix of posterior samples");
    c->add_option("--samples", o->samples, "Samples CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "Output JSON")->required();
    c->callback([o, c] {
      const Eigen::MatrixXd s = parameter_rows(o->samples);
      const CorrelationResult r = posterior_correlation(s);
      nlohmann::json j;
      j["names"] = kNames;
      j["samples"] = s.cols();
      j["matrix"] = nlohmann::json::array();
      for (Index i = 0; i < 3; ++i) {
        std::vector<double> row(3);
        for (Index k = 0; k < 3; ++k) row[static_cast<std::size_t>(k)] = r.matrix(i, k);
        j["matrix"].push_back(row);
      }
      j["warnings"] = r.warnings;
      {
        auto out = open_out(o->out);
        out << j.dump(2) << '\n';
      }
      RunManifest m = start_manifest(c, "analyze correlation", 0);
      m.add_input(o->samples);
      m.add_output(o->out);
      m.write(sibling(o->out, ".manifest.json"));
      std::cout << "corr(delta_u, delta_v) = " << r.matrix(0, 1) << '\n';
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    });
  }

  {
    struct Opts {
      fs::path checkpoint, obs, out;
      Index count = 100, oversample = 20;
      std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = sub->add_subcommand("hdr", "Highest-density parameter sets of a conditioned posterior");
    c->add_option("--checkpoint", o->checkpoint, "Flow checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--obs", o->obs, "Observed trajectory")->required()->check(CLI::ExistingFile);
    c->add_option("--count", o->count, "Parameter sets to keep")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--oversample", o->oversample, "Candidates per kept set")->capture_default_str()->check(
        CLI::PositiveNumber);
    c->add_option("--seed", o->seed, "Seed")->capture_default_str();
    c->add_option("--out", o->out, "Output CSV (delta_u,delta_v,r,log_prob)")->required();
    c->callback([o, c] {
      const PosteriorBuilder builder = load_checkpoint(o->checkpoint);
      const MacroTrajectory obs = load_macro(o->obs);
      const HdrResult h = hdr_sample(condition(builder, obs.data), o->count, o->seed, o->oversample);
      {
        Eigen::MatrixXd table(4, h.selected.cols());
        table.topRows(3) = h.selected;
        table.row(3) = h.selected_log_prob.transpose();
        auto out = open_out(o->out);
        write_samples_csv(out, table, {"delta_u", "delta_v", "r", "log_prob"});
      }
      RunManifest m = start_manifest(c, "analyze hdr", o->seed);
      m.add_input(o->checkpoint);
      m.add_input(o->obs);
      m.add_output(o->out);
      m.write(sibling(o->out, ".manifest.json"));
      std::cout << "kept " << h.selected.cols() << " of " << h.selected.cols() + h.discarded_log_prob.size()
                << " candidates; log density cut " << h.selected_log_prob.minCoeff() << '\n';
    });
  }

  {
    struct Opts {
      fs::path spec, params, out;
      ClusterConfig cluster;
      SimOptions sim;
      bool svg = false;
      Common common;
    };
    auto o = std::make_shared<Opts>();
    auto* c = sub->add_subcommand("cluster", "Cluster employment-flow patterns of parameter sets");
    c->add_option("--spec", o->spec, "Market JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--params", o->params, "CSV with delta_u,delta_v,r columns")->required()->check(CLI::ExistingFile);
    c->add_option("--fixed-r", o->cluster.fixed_r, "r used for every run")->capture_default_str()->check(
        CLI::Range(0.0, 1.0));
    c->add_option("--k", o->cluster.k, "Clusters")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--restarts", o->cluster.restarts, "k-means restarts")->capture_default_str()->check(
        CLI::PositiveNumber);
    c->add_flag("--svg", o->svg, "Also write a delta_u/delta_v scatter coloured by cluster");
    add_sim_options(c, o->sim);
    add_common(c, o->common);
    c->add_option("--out", o->out, "Output assignment CSV")->required();
    c->callback([o, c] {
      const MarketSpec spec = load_market_json(o->spec);
      const Eigen::MatrixXd params = parameter_rows(o->params);
      ClusterConfig cfg = o->cluster;
      cfg.seed = o->common.seed;
      cfg.workers = o->common.threads;
      const ClusterResult r = pattern_cluster(spec, o->sim.resolve(), params, cfg);
      {
        auto out = open_out(o->out);
        write_csv(out, r);
      }
      const fs::path summary = sibling(o->out, ".summary.json");
      {
        nlohmann::json j;
        j["clusters"] = nlohmann::json::array();
        for (Index k = 0; k < cfg.k; ++k) {
          nlohmann::json cl;
          cl["label"] = k;
          cl["size"] = r.sizes[static_cast<std::size_t>(k)];
          cl["centroid"] = {{"gain", r.centroids(k, 0)}, {"loss", r.centroids(k, 1)}, {"co_occurrence", r.centroids(k, 2)}};
          if (r.sizes[static_cast<std::size_t>(k)] > 0)
            cl["mean_theta"] = {{"delta_u", r.mean_theta(k, 0)}, {"delta_v", r.mean_theta(k, 1)}, {"r", r.mean_theta(k, 2)}};
          j["clusters"].push_back(cl);
        }
        j["failures"] = r.failures;
        auto out = open_out(summary);
        out << j.dump(2) << '\n';
      }
      RunManifest m = start_manifest(c, "analyze cluster", o->common.seed);
      m.add_input(o->spec);
      m.add_input(o->params);
      m.add_output(o->out);
      m.add_output(summary);
      if (o->svg) {
        std::vector<SvgSeries> series;
        for (Index k = 0; k < cfg.k; ++k) {
          SvgSeries s{"cluster " + std::to_string(k), {}, {}, false};
          for (std::size_t j = 0; j < r.labels.size(); ++j)
            if (r.labels[j] == k) {
              s.x.push_back(r.theta(0, static_cast<Index>(j)));
              s.y.push_back(r.theta(1, static_cast<Index>(j)));
            }
          series.push_back(std::move(s));
        }
        const fs::path svg = sibling(o->out, ".svg");
        auto out = open_out(svg);
        write_svg(out, series, "Employment-flow patterns", "delta_u", "delta_v");
        out.close();
        m.add_output(svg);
      }
      m.write(sibling(o->out, ".manifest.json"));
      for (Index k = 0; k < cfg.k; ++k)
        std::cout << "cluster " << k << ": " << r.sizes[static_cast<std::size_t>(k)] << " runs\n";
      for (const auto& f : r.failures) std::cerr << "excluded " << f << '\n';
    });
  }
}

}  // namespace

void register_commands(CLI::App& app) {
  gen_market(app);
  simulate_cmd(app);
  infer_cmd(app);
  sbc_cmd(app);
  bench_cmd(app);
  analyze_cmd(app);
  // Lets --config select the subcommand recorded in a manifest.
  for (CLI::App* sub : app.get_subcommands({})) {
    sub->configurable();
    for (CLI::App* nested : sub->get_subcommands({})) nested->configurable();
  }
}

}  // namespace lmsbi::cli
