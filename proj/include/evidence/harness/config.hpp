#pragma once

// Experiment configuration: one INI file per study.
//
//   [experiment]      name, model, estimators, runs, base_seed, workers, output, description
//   [gaussian-toy]    n, xbar, s2
//   [banana]          beta, sigma1_sq, lower, upper
//   [<estimator>]     estimator-specific parameters (see the *Params structs below)
//
// Unknown sections and keys are rejected so that a typo cannot silently fall back to a
// default.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evidence/benchmarks.hpp"
#include "evidence/errors.hpp"
#include "evidence/nested.hpp"
#include "evidence/pmc.hpp"

namespace evidence::harness {

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> v{"gaussian-toy", "banana"};
  return v;
}

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> v{"harmonic-hpd", "mixture-bridge", "bridge-iterative",
                                          "nested",       "pmc",            "prior-is"};
  return v;
}

/// Estimators available for each model. The toy prior is improper, so only the
/// posterior-sample methods apply to it; the banana has no exact Gibbs sampler.
inline bool estimator_supports(const std::string& model, const std::string& estimator) {
  if (model == "gaussian-toy")
    return estimator == "harmonic-hpd" || estimator == "mixture-bridge" || estimator == "bridge-iterative";
  return estimator == "nested" || estimator == "pmc" || estimator == "prior-is";
}

struct HarmonicParams {
  std::size_t draws = 10000;
  std::size_t burn_in = 100;
  double level = 0.10;
};

struct MixtureBridgeParams {
  std::size_t draws = 10000;        // mixture-Gibbs iterations
  std::size_t pilot_draws = 10000;  // posterior draws used to fit the HPD ellipse
  std::size_t burn_in = 100;
  double level = 0.10;
  double omega_fraction = 0.1;  // omega_1 * Z_reference
};

struct BridgeIterativeParams {
  std::size_t draws = 10000;           // posterior draws
  std::size_t proposal_draws = 10000;  // draws from the ellipse density
  std::size_t burn_in = 100;
  double level = 0.10;
  double tol = 1e-10;
  int max_iter = 1000;
};

struct PriorIsParams {
  std::size_t draws = 100000;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string description;
  std::string model;
  std::vector<std::string> estimators;
  int runs = 1;
  std::uint64_t base_seed = 1;
  int workers = 1;
  std::string output;

  GaussianToyData toy{};
  BananaParams banana{};
  HarmonicParams harmonic{};
  MixtureBridgeParams mixture{};
  BridgeIterativeParams bridge{};
  NestedConfig nested = [] {
    NestedConfig c;
    c.stop_on_remaining = false;
    return c;
  }();
  PmcConfig pmc{};
  PriorIsParams prior_is{};

  std::uint64_t seed_for_run(int r) const { return base_seed + static_cast<std::uint64_t>(r); }

  void validate() const {
    if (std::find(known_models().begin(), known_models().end(), model) == known_models().end())
      throw UsageError("unknown model '" + model + "'");
    if (estimators.empty()) throw UsageError("no estimators configured");
    std::set<std::string> seen;
    for (const auto& e : estimators) {
      if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end())
        throw UsageError("unknown estimator '" + e + "'");
      if (!estimator_supports(model, e)) throw UsageError("estimator '" + e + "' is not available for model '" + model + "'");
      if (!seen.insert(e).second) throw UsageError("estimator '" + e + "' listed twice");
    }
    if (runs < 1) throw UsageError("runs must be >= 1");
    if (workers < 1) throw UsageError("workers must be >= 1");
    try {
      toy.validate();
      banana.validate();
      nested.validate();
      pmc.validate();
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
    if (pmc.init_mean_cov.rows() != 2) throw UsageError("pmc initial covariance must be 2-D");
  }
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::vector<std::string>& inputs) {
  if (inputs.size() != 1) throw UsageError("key '" + key + "' expects a single value");
  const std::string& s = inputs.front();
  T out{};
  if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError("key '" + key + "': expected a boolean, got '" + s + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else {
    std::istringstream is(s);
    is >> out;
    if (!is || !is.eof()) throw UsageError("key '" + key + "': cannot parse '" + s + "'");
    if constexpr (std::is_unsigned_v<T>) {
      if (s.find('-') != std::string::npos) throw UsageError("key '" + key + "' must be non-negative");
    }
  }
  return out;
}

/// Section -> key -> setter. Each setter parses and stores one value.
using Setter = std::function<void(const std::string&, const std::vector<std::string>&)>;

template <class T>
Setter bind(T& field) {
  return [&field](const std::string& key, const std::vector<std::string>& in) { field = parse_value<T>(key, in); };
}

inline std::map<std::string, std::map<std::string, Setter>> config_schema(ExperimentConfig& c) {
  std::map<std::string, std::map<std::string, Setter>> s;
  s["experiment"] = {
      {"name", bind(c.name)},
      {"description", [&c](const std::string&, const std::vector<std::string>& in) {
         std::string joined;
         for (const auto& w : in) joined += (joined.empty() ? "" : " ") + w;
         c.description = joined;
       }},
      {"model", bind(c.model)},
      {"estimators", [&c](const std::string&, const std::vector<std::string>& in) { c.estimators = in; }},
      {"runs", bind(c.runs)},
      {"base_seed", bind(c.base_seed)},
      {"workers", bind(c.workers)},
      {"output", bind(c.output)},
  };
  s["gaussian-toy"] = {{"n", bind(c.toy.n)}, {"xbar", bind(c.toy.xbar)}, {"s2", bind(c.toy.s2)}};
  s["banana"] = {{"beta", bind(c.banana.beta)},
                 {"sigma1_sq", bind(c.banana.sigma1_sq)},
                 {"lower", bind(c.banana.lower)},
                 {"upper", bind(c.banana.upper)}};
  s["harmonic-hpd"] = {
      {"draws", bind(c.harmonic.draws)}, {"burn_in", bind(c.harmonic.burn_in)}, {"level", bind(c.harmonic.level)}};
  s["mixture-bridge"] = {{"draws", bind(c.mixture.draws)},
                         {"pilot_draws", bind(c.mixture.pilot_draws)},
                         {"burn_in", bind(c.mixture.burn_in)},
                         {"level", bind(c.mixture.level)},
                         {"omega_fraction", bind(c.mixture.omega_fraction)}};
  s["bridge-iterative"] = {{"draws", bind(c.bridge.draws)},
                           {"proposal_draws", bind(c.bridge.proposal_draws)},
                           {"burn_in", bind(c.bridge.burn_in)},
                           {"level", bind(c.bridge.level)},
                           {"tol", bind(c.bridge.tol)},
                           {"max_iter", bind(c.bridge.max_iter)}};
  s["nested"] = {
      {"n_live", bind(c.nested.n_live)},
      {"max_iterations", bind(c.nested.max_iterations)},
      {"stop_on_remaining", bind(c.nested.stop_on_remaining)},
      {"remaining_tol", bind(c.nested.remaining_tol)},
      {"walk_steps", bind(c.nested.walk.n_steps)},
      {"walk_variance", bind(c.nested.walk.step_variance)},
      {"schedule", [&c](const std::string& key, const std::vector<std::string>& in) {
         const auto v = parse_value<std::string>(key, in);
         if (v == "deterministic")
           c.nested.schedule = ShrinkageSchedule::kDeterministic;
         else if (v == "stochastic")
           c.nested.schedule = ShrinkageSchedule::kStochastic;
         else
           throw UsageError("nested schedule must be 'deterministic' or 'stochastic'");
       }},
  };
  auto diag2 = [](Eigen::MatrixXd& m) {
    return [&m](const std::string& key, const std::vector<std::string>& in) {
      if (in.size() != 2) throw UsageError("key '" + key + "' expects two diagonal entries");
      m = Eigen::Vector2d(parse_value<double>(key, {in[0]}), parse_value<double>(key, {in[1]}))
              .asDiagonal()
              .toDenseMatrix();
    };
  };
  s["pmc"] = {{"components", bind(c.pmc.n_components)},
              {"dof", bind(c.pmc.dof)},
              {"per_iteration", bind(c.pmc.n_per_iteration)},
              {"iterations", bind(c.pmc.n_iterations)},
              {"final", bind(c.pmc.n_final)},
              {"init_mean_cov", diag2(c.pmc.init_mean_cov)},
              {"init_scale", diag2(c.pmc.init_scale)}};
  s["prior-is"] = {{"draws", bind(c.prior_is.draws)}};
  return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  auto schema = detail::config_schema(cfg);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(is);
  } catch (const CLI::Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section open/close markers
    if (item.parents.size() != 1) throw UsageError("config: key '" + item.name + "' must sit inside a section");
    const auto sec = schema.find(item.parents.front());
    if (sec == schema.end()) throw UsageError("config: unknown section [" + item.parents.front() + "]");
    const auto key = sec->second.find(item.name);
    if (key == sec->second.end())
      throw UsageError("config: unknown key '" + item.name + "' in [" + item.parents.front() + "]");
    key->second(item.name, item.inputs);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

}  // namespace evidence::harness
