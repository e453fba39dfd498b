// Copyright 2026 The projda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: truth, reduce, lyapunov, assimilate, sweep.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <projda/config.hpp>
#include <projda/experiments.hpp>
#include <projda/io.hpp>
#include <projda/reduction.hpp>

namespace {

using namespace projda;

struct Options {
  std::string config;
  std::string out;
  std::string in;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string kind;
  std::optional<Eigen::Index> r;
  std::optional<Eigen::Index> rd;
};

AppConfig load(const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) {
    throw ConfigError("cannot open config file '" + opt.config + "'");
  }
  AppConfig app = parse_config(in);
  ExperimentConfig& c = app.experiment;
  if (opt.seed) {
    c.base_seed = *opt.seed;
  }
  if (!opt.kind.empty()) {
    c.reduction = basis_kind_from_string(opt.kind);
  }
  if (opt.r) {
    c.r_p = *opt.r;
    c.sweep_r_p.clear();
  }
  if (opt.rd) {
    c.r_d = *opt.rd;
    c.sweep_r_d.clear();
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid options: ") + e.what());
  }
  return app;
}

/// Opens --out, or stdout when it is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw IoError("cannot write '" + path + "'");
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_truth(const Options& opt) {
  const AppConfig app = load(opt);
  const ExperimentConfig& c = app.experiment;
  if (opt.out.empty()) {
    throw ConfigError("truth: --out is required");
  }
  const detail::ModelHandle model = detail::make_model(c);
  const RngStream trial(c.base_seed, 0);
  RngStream ic = trial.split(detail::truth_ic);
  RngStream noise = trial.split(detail::truth_noise);
  const NoiseSpec q = NoiseSpec::scaled_identity(model.dim, c.q_scale);
  Vector x = model.initial(ic);
  for (int k = 0; k < c.burn_in_steps; ++k) {
    x = model.step(x);
  }
  const int steps = app.truth_steps > 0 ? app.truth_steps : c.n_observations * model.steps_per_observation;
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(steps) + 1);
  states.push_back(x);
  for (int k = 1; k <= steps; ++k) {
    x = model.step(x);
    if (c.truth_noise && k % model.steps_per_observation == 0) {
      x = sample_gaussian(x, q, noise);
    }
    states.push_back(x);
  }
  write_snapshots(opt.out, states,
                  {std::string(to_string(c.model)), model.dim, steps, model.dt, c.base_seed, c.truth_noise});
  spdlog::info("wrote {} states of dimension {} to {}", states.size(), model.dim, opt.out);
  return 0;
}

int cmd_reduce(const Options& opt) {
  const AppConfig app = load(opt);
  const ExperimentConfig& c = app.experiment;
  const std::string source = opt.in.empty() ? app.snapshots : opt.in;
  if (source.empty()) {
    throw ConfigError("reduce: no snapshot file; pass --in or set reduction.snapshots");
  }
  if (opt.out.empty()) {
    throw ConfigError("reduce: --out is required");
  }
  SnapshotMeta meta;
  const Matrix x = read_snapshots(source, &meta);
  if (meta.dim != c.state_dim()) {
    throw ConfigError("reduce: snapshot file has M = " + std::to_string(meta.dim) + " but the config's model gives M = " +
                      std::to_string(c.state_dim()) + " (model.dimension or model.nx/ny)");
  }
  const Matrix used = c.training_stride == 1
                          ? x
                          : Matrix(x(Eigen::all, Eigen::seq(0, x.cols() - 1, c.training_stride)));
  nlohmann::json params = {{"r", c.r_p}, {"stride", c.training_stride}};
  ReductionBasis basis = ReductionBasis::identity(meta.dim);
  switch (c.reduction) {
    case BasisKind::pod:
      basis = pod_basis(used, c.r_p);
      break;
    case BasisKind::dmd: {
      const DmdResult res = dmd(used, c.dmd_svd_rank, meta.dt * c.training_stride);
      basis = dmd_basis(res, c.r_p);
      params["dropped_modes"] = res.dropped_modes;
      if (c.dmd_svd_rank) {
        params["svd_rank"] = *c.dmd_svd_rank;
      }
      if (basis.rounded_up() > 0) {
        spdlog::warn("dmd: rank raised from {} to {} to keep a conjugate pair together", c.r_p, basis.rank());
      }
      break;
    }
    case BasisKind::aus: {
      // Lyapunov basis carried along the snapshot trajectory, one model step per record.
      const detail::ModelHandle model = detail::make_model(c);
      Matrix u = Matrix::Identity(meta.dim, c.r_p);
      for (Eigen::Index k = 0; k + 1 < x.cols(); ++k) {
        const auto step = [&model](const Vector& s) { return model.step(s); };
        u = aus_step(step, Vector(x.col(k)), u, c.aus_epsilon).basis.columns();
      }
      basis = ReductionBasis::from_columns(u, BasisKind::aus, true, 1e-9);
      params["epsilon"] = c.aus_epsilon;
      break;
    }
    case BasisKind::identity:
      break;
  }
  write_basis(opt.out, basis, source, params);
  spdlog::info("wrote {} basis of rank {} to {}", to_string(basis.kind()), basis.rank(), opt.out);
  return 0;
}

int cmd_lyapunov(const Options& opt) {
  const AppConfig app = load(opt);
  const ExperimentConfig& c = app.experiment;
  const detail::ModelHandle model = detail::make_model(c);
  const RngStream trial(c.base_seed, 0);
  RngStream ic = trial.split(detail::truth_ic);
  Vector x = model.initial(ic);
  for (int k = 0; k < c.burn_in_steps; ++k) {
    x = model.step(x);
  }
  const Eigen::Index p = app.lyapunov.exponents > 0 ? app.lyapunov.exponents : model.dim;
  const auto step = [&model](const Vector& s) { return model.step(s); };
  const std::vector<double> exps =
      lyapunov_spectrum(step, x, app.lyapunov.n_steps, p, model.dt,
                        {app.lyapunov.epsilon, app.lyapunov.transient_steps});
  if (!opt.out.empty()) {
    std::ofstream out(opt.out);
    if (!out) {
      throw IoError("cannot write '" + opt.out + "'");
    }
    out << "index,exponent\n";
    for (std::size_t i = 0; i < exps.size(); ++i) {
      out << i + 1 << ',' << format_number(exps[i]) << '\n';
    }
  }
  std::cout << "exponents:";
  for (double l : exps) {
    std::cout << ' ' << format_number(l);
  }
  std::cout << "\npositive: " << count_positive(exps) << '\n';
  try {
    std::cout << "kaplan_yorke: " << format_number(kaplan_yorke(exps)) << '\n';
  } catch (const std::invalid_argument& e) {
    std::cout << "kaplan_yorke: undefined (" << e.what() << ")\n";
  }
  return 0;
}

int cmd_assimilate(const Options& opt) {
  const AppConfig app = load(opt);
  ExperimentConfig c = app.experiment;
  c.sweep_r_p.clear();
  c.sweep_r_d.clear();
  c.sweep_forcing.clear();
  c.sweep_q_scale.clear();
  c.sweep_scenario.clear();
  std::vector<std::vector<MetricsRecord>> trials;
  const std::vector<SummaryRow> rows = run_sweep(c, opt.jobs, &trials);
  Output out(opt.out);
  write_trial_csv_header(out.stream());
  int failed = 0;
  for (std::size_t t = 0; t < trials.front().size(); ++t) {
    const MetricsRecord& rec = trials.front()[t];
    if (rec.failed) {
      ++failed;
      spdlog::warn("trial {} failed: {}", t, rec.failure);
    }
    write_trial_csv(out.stream(), t, rec);
  }
  spdlog::info("{} {}: mean_rmse {} resamp {}% ({} failed)", to_string(c.filter), to_string(c.reduction),
               rows.front().mean_rmse, rows.front().resamp_pct, failed);
  return 0;
}

int cmd_sweep(const Options& opt) {
  const AppConfig app = load(opt);
  const std::vector<SummaryRow> rows = run_sweep(app.experiment, opt.jobs);
  Output out(opt.out);
  write_summary_csv(out.stream(), app.experiment.model, rows);
  for (const SummaryRow& r : rows) {
    if (r.failed_trials > 0) {
      spdlog::warn("r_p={} r_d={}: {} of {} trials failed", r.point.r_p, r.point.r_d, r.failed_trials, r.trials);
    }
  }
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("projda");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("PROJDA_LOG")) {
    spdlog::cfg::helpers::load_levels(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Projected particle filters on reduced models"};
  app.require_subcommand(1);
  Options opt;

  const auto common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "INI configuration file")->required();
    sub->add_option("--out", opt.out, "output path");
    sub->add_option("--seed", opt.seed, "base seed, overrides experiment.seed");
  };
  CLI::App* truth = app.add_subcommand("truth", "simulate a truth trajectory into a snapshot file");
  common(truth);
  CLI::App* reduce = app.add_subcommand("reduce", "build a reduction basis from a snapshot file");
  common(reduce);
  reduce->add_option("--in", opt.in, "snapshot file, overrides reduction.snapshots");
  reduce->add_option("--kind", opt.kind, "basis kind")->check(CLI::IsMember({"pod", "dmd", "aus"}));
  reduce->add_option("--r", opt.r, "basis rank")->check(CLI::PositiveNumber);
  CLI::App* lyap = app.add_subcommand("lyapunov", "Lyapunov exponents and Kaplan-Yorke dimension");
  common(lyap);
  for (CLI::App* sub : {app.add_subcommand("assimilate", "run twin-experiment trials, per-trial metrics CSV"),
                        app.add_subcommand("sweep", "run a parameter sweep, summary CSV")}) {
    common(sub);
    sub->add_option("--jobs", opt.jobs, "concurrent trials")->check(CLI::PositiveNumber);
    sub->add_option("--kind", opt.kind, "basis kind")->check(CLI::IsMember({"pod", "dmd", "aus", "identity"}));
    sub->add_option("--r", opt.r, "state reduction rank r_p")->check(CLI::PositiveNumber);
    sub->add_option("--rd", opt.rd, "data reduction rank r_d")->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "truth") return cmd_truth(opt);
    if (name == "reduce") return cmd_reduce(opt);
    if (name == "lyapunov") return cmd_lyapunov(opt);
    if (name == "assimilate") return cmd_assimilate(opt);
    return cmd_sweep(opt);
  } catch (const ConfigError& e) {
    std::cerr << "projda: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "projda: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "projda: " << e.what() << '\n';
    return 1;
  }
}
