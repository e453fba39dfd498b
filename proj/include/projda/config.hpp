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

#ifndef PROJDA_CONFIG_HPP
#define PROJDA_CONFIG_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <projda/experiments.hpp>

/**
 * \file
 * \brief INI configuration files.
 *
 * Sections and keys (defaults depend on `[model] type`):
 *
 *     [model]        type = l96 | swe
 *                    dimension, forcing, dt, steps_per_observation          (l96)
 *                    nx, ny, dx, dy, gravity, coriolis, bottom_friction,
 *                    viscosity, dt, steps_per_observation, reference_depth,
 *                    mean_depth, jet_amplitude, jet_width, seed_amplitude,
 *                    noise_amplitude                                        (swe)
 *     [observation]  fraction, scenario = velocities | all | height
 *     [noise]        q_scale, r_scale, truth_noise = true | false
 *     [reduction]    kind = pod | dmd | aus | identity, r_p, r_d,
 *                    data_reduction = model-based | data-based,
 *                    training = independent-run | truth, training_steps,
 *                    training_stride, dmd_svd_rank, aus_epsilon, snapshots,
 *                    sweep_r_p, sweep_r_d
 *     [filter]       kind = pf | oppf | projpf | projoppf | non, particles,
 *                    ess_threshold, alpha, omega
 *     [experiment]   n_observations, burn_in_steps, trials, seed, average_from,
 *                    truth_steps, sweep_forcing, sweep_q_scale, sweep_scenario
 *     [lyapunov]     exponents, n_steps, transient_steps, epsilon
 *
 * Sweep lists are comma separated. Unknown sections or keys are errors.
 */

namespace projda {

/// A configuration value failed to parse or validate; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LyapunovSettings {
  Eigen::Index exponents = 0;  ///< 0 means the full state dimension.
  int n_steps = 100000;
  int transient_steps = 1000;
  double epsilon = 1e-6;
};

struct AppConfig {
  ExperimentConfig experiment{};
  LyapunovSettings lyapunov{};
  /// Snapshot file used by `reduce`.
  std::string snapshots;
  /// Internal steps recorded by `truth`; 0 means n_observations * steps_per_observation.
  int truth_steps = 0;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_{tree} {
    static const std::map<std::string, std::set<std::string>> known = {
        {"model",
         {"type", "dimension", "forcing", "dt", "steps_per_observation", "nx", "ny", "dx", "dy", "gravity",
          "coriolis", "bottom_friction", "viscosity", "reference_depth", "mean_depth", "jet_amplitude", "jet_width",
          "seed_amplitude", "noise_amplitude"}},
        {"observation", {"fraction", "scenario"}},
        {"noise", {"q_scale", "r_scale", "truth_noise"}},
        {"reduction",
         {"kind", "r_p", "r_d", "data_reduction", "training", "training_steps", "training_stride", "dmd_svd_rank",
          "aus_epsilon", "snapshots", "sweep_r_p", "sweep_r_d"}},
        {"filter", {"kind", "particles", "ess_threshold", "alpha", "omega"}},
        {"experiment",
         {"n_observations", "burn_in_steps", "trials", "seed", "average_from", "truth_steps", "sweep_forcing",
          "sweep_q_scale", "sweep_scenario"}},
        {"lyapunov", {"exponents", "n_steps", "transient_steps", "epsilon"}},
    };
    for (const auto& [section, body] : tree_) {
      const auto it = known.find(section);
      if (it == known.end()) {
        throw ConfigError("unknown config section [" + section + "]");
      }
      if (body.empty() && !body.data().empty()) {
        throw ConfigError("config key '" + section + "' must appear inside a section");
      }
      for (const auto& [key, value] : body) {
        if (!it->second.contains(key)) {
          throw ConfigError("unknown config key '" + section + "." + key + "'");
        }
      }
    }
  }

  [[nodiscard]] bool has(const std::string& path) const { return tree_.get_optional<std::string>(path).has_value(); }

  [[nodiscard]] std::string text(const std::string& path, const std::string& fallback) const {
    return tree_.get<std::string>(path, fallback);
  }

  template <class T>
  void read(const std::string& path, T& out) const {
    const auto raw = tree_.get_optional<std::string>(path);
    if (!raw) {
      return;
    }
    out = parse<T>(path, *raw);
  }

  template <class T>
  void read_list(const std::string& path, std::vector<T>& out) const {
    const auto raw = tree_.get_optional<std::string>(path);
    if (!raw) {
      return;
    }
    out.clear();
    std::stringstream ss(*raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      out.push_back(parse<T>(path, trim(item)));
    }
    if (out.empty()) {
      throw ConfigError("config key '" + path + "' is an empty list");
    }
  }

  template <class T>
  static T parse(const std::string& path, const std::string& raw) {
    const std::string s = trim(raw);
    try {
      std::size_t used = 0;
      T value{};
      if constexpr (std::is_same_v<T, bool>) {
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw std::invalid_argument("not a boolean");
      } else if constexpr (std::is_same_v<T, double>) {
        value = std::stod(s, &used);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
        value = std::stoull(s, &used);
      } else if constexpr (std::is_integral_v<T>) {
        value = static_cast<T>(std::stoll(s, &used));
      } else if constexpr (std::is_same_v<T, SweScenario>) {
        if (s == "velocities") return SweScenario::velocities;
        if (s == "all") return SweScenario::all;
        if (s == "height") return SweScenario::height;
        throw std::invalid_argument("expected velocities, all or height");
      } else {
        static_assert(sizeof(T) == 0, "unsupported config type");
      }
      if (used != s.size()) {
        throw std::invalid_argument("trailing characters");
      }
      return value;
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + path + "': cannot parse '" + s + "' (" + e.what() + ")");
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  const boost::property_tree::ptree& tree_;
};

}  // namespace detail

/// Parses and validates a configuration; throws ConfigError naming the offending key.
inline AppConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const detail::ConfigReader rd(tree);

  AppConfig app;
  const std::string type = rd.text("model.type", "l96");
  if (type == "l96") {
    app.experiment = ExperimentConfig::l96_defaults();
  } else if (type == "swe") {
    app.experiment = ExperimentConfig::swe_defaults();
  } else {
    throw ConfigError("config key 'model.type': expected l96 or swe, got '" + type + "'");
  }
  ExperimentConfig& c = app.experiment;

  if (c.model == ModelKind::l96) {
    for (const char* k : {"nx", "ny", "dx", "dy", "gravity", "coriolis", "bottom_friction", "viscosity",
                          "reference_depth", "mean_depth", "jet_amplitude", "jet_width", "seed_amplitude",
                          "noise_amplitude"}) {
      if (rd.has(std::string("model.") + k)) {
        throw ConfigError(std::string("config key 'model.") + k + "' does not apply to model type l96");
      }
    }
    rd.read("model.dimension", c.l96.dimension);
    rd.read("model.forcing", c.l96.forcing);
    rd.read("model.dt", c.l96.dt);
    rd.read("model.steps_per_observation", c.l96.steps_per_observation);
  } else {
    for (const char* k : {"dimension", "forcing"}) {
      if (rd.has(std::string("model.") + k)) {
        throw ConfigError(std::string("config key 'model.") + k + "' does not apply to model type swe");
      }
    }
    rd.read("model.nx", c.swe.nx);
    rd.read("model.ny", c.swe.ny);
    rd.read("model.dx", c.swe.dx);
    rd.read("model.dy", c.swe.dy);
    rd.read("model.gravity", c.swe.gravity);
    rd.read("model.coriolis", c.swe.coriolis);
    rd.read("model.bottom_friction", c.swe.bottom_friction);
    rd.read("model.viscosity", c.swe.viscosity);
    rd.read("model.dt", c.swe.dt);
    rd.read("model.steps_per_observation", c.swe.steps_per_observation);
    rd.read("model.reference_depth", c.swe.reference_depth);
    rd.read("model.mean_depth", c.jet.mean_depth);
    rd.read("model.jet_amplitude", c.jet.amplitude);
    rd.read("model.jet_width", c.jet.width);
    rd.read("model.seed_amplitude", c.jet.seed_amplitude);
    rd.read("model.noise_amplitude", c.jet.noise_amplitude);
  }

  rd.read("observation.fraction", c.obs_fraction);
  rd.read("observation.scenario", c.scenario);

  rd.read("noise.q_scale", c.q_scale);
  rd.read("noise.r_scale", c.r_scale);
  rd.read("noise.truth_noise", c.truth_noise);

  if (rd.has("reduction.kind")) {
    try {
      c.reduction = basis_kind_from_string(rd.text("reduction.kind", ""));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config key 'reduction.kind': ") + e.what());
    }
  }
  rd.read("reduction.r_p", c.r_p);
  rd.read("reduction.r_d", c.r_d);
  if (rd.has("reduction.data_reduction")) {
    const std::string s = rd.text("reduction.data_reduction", "");
    if (s == "model-based") {
      c.data_reduction = DataReduction::model_based;
    } else if (s == "data-based") {
      c.data_reduction = DataReduction::data_based;
    } else {
      throw ConfigError("config key 'reduction.data_reduction': expected model-based or data-based, got '" + s + "'");
    }
  }
  if (rd.has("reduction.training")) {
    const std::string s = rd.text("reduction.training", "");
    if (s == "independent-run") {
      c.training = TrainingSource::independent_run;
    } else if (s == "truth") {
      c.training = TrainingSource::truth;
    } else {
      throw ConfigError("config key 'reduction.training': expected independent-run or truth, got '" + s + "'");
    }
  }
  rd.read("reduction.training_steps", c.training_steps);
  rd.read("reduction.training_stride", c.training_stride);
  if (rd.has("reduction.dmd_svd_rank")) {
    Eigen::Index r = 0;
    rd.read("reduction.dmd_svd_rank", r);
    c.dmd_svd_rank = r;
  }
  rd.read("reduction.aus_epsilon", c.aus_epsilon);
  app.snapshots = rd.text("reduction.snapshots", "");
  rd.read_list("reduction.sweep_r_p", c.sweep_r_p);
  rd.read_list("reduction.sweep_r_d", c.sweep_r_d);

  if (rd.has("filter.kind")) {
    const std::string s = rd.text("filter.kind", "");
    if (s == "pf") {
      c.filter = FilterKind::pf;
    } else if (s == "oppf") {
      c.filter = FilterKind::oppf;
    } else if (s == "projpf") {
      c.filter = FilterKind::proj_pf;
    } else if (s == "projoppf") {
      c.filter = FilterKind::proj_oppf;
    } else if (s == "non") {
      c.filter = FilterKind::non;
    } else {
      throw ConfigError("config key 'filter.kind': expected pf, oppf, projpf, projoppf or non, got '" + s + "'");
    }
  }
  rd.read("filter.particles", c.particles);
  rd.read("filter.ess_threshold", c.filter_config.ess_threshold_fraction);
  rd.read("filter.alpha", c.filter_config.resample_alpha);
  rd.read("filter.omega", c.filter_config.resample_omega);

  rd.read("experiment.n_observations", c.n_observations);
  rd.read("experiment.burn_in_steps", c.burn_in_steps);
  rd.read("experiment.trials", c.trials);
  rd.read("experiment.seed", c.base_seed);
  rd.read("experiment.average_from", c.average_from);
  rd.read("experiment.truth_steps", app.truth_steps);
  rd.read_list("experiment.sweep_forcing", c.sweep_forcing);
  rd.read_list("experiment.sweep_q_scale", c.sweep_q_scale);
  rd.read_list("experiment.sweep_scenario", c.sweep_scenario);
  if (c.model == ModelKind::l96 && !c.sweep_scenario.empty()) {
    throw ConfigError("config key 'experiment.sweep_scenario' applies only to model type swe");
  }
  if (c.model == ModelKind::swe && !c.sweep_forcing.empty()) {
    throw ConfigError("config key 'experiment.sweep_forcing' applies only to model type l96");
  }

  rd.read("lyapunov.exponents", app.lyapunov.exponents);
  rd.read("lyapunov.n_steps", app.lyapunov.n_steps);
  rd.read("lyapunov.transient_steps", app.lyapunov.transient_steps);
  rd.read("lyapunov.epsilon", app.lyapunov.epsilon);

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (app.truth_steps < 0) {
    throw ConfigError("config key 'experiment.truth_steps' must be nonnegative");
  }
  if (app.lyapunov.exponents < 0 || app.lyapunov.exponents > c.state_dim() || app.lyapunov.n_steps < 1 ||
      app.lyapunov.transient_steps < 0 || !(app.lyapunov.epsilon > 0.0)) {
    throw ConfigError("invalid [lyapunov] section: need 0 <= exponents <= M, n_steps >= 1, transient_steps >= 0, "
                      "epsilon > 0");
  }
  return app;
}

inline AppConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace projda

#endif
