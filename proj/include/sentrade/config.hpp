#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sentrade/backtest.hpp"
#include "sentrade/csv.hpp"
#include "sentrade/error.hpp"
#include "sentrade/kv.hpp"

namespace sentrade {

/// Run configuration read from a `key = value` file. Unknown keys are errors.
struct Config {
  double p_threshold = 0.10;
  std::size_t tfw_min = 20;
  std::size_t tfw_max = 40;
  std::optional<double> beta;   // absent: train
  std::optional<double> gamma;  // absent: train
  double initial_spread = 1.0;
  double train_fraction = 0.30;
  int offset_minutes = 30;
  SpreadScope spread_scope = SpreadScope::PerTfw;
  bool normalize_sentiment = false;
  double cost_per_trade = 0.0;
  std::uint64_t seed = 42;
  ParamGrid grid = ParamGrid::standard();

  bool has_params() const { return beta.has_value() && gamma.has_value(); }

  PipelineOptions pipeline(unsigned threads = 1) const {
    PipelineOptions p;
    p.tfw_min = tfw_min;
    p.tfw_max = tfw_max;
    p.window.p_threshold = p_threshold;
    p.window.design.normalize_sentiment = normalize_sentiment;
    p.engine.beta = beta.value_or(0.0);
    p.engine.gamma = gamma.value_or(0.0);
    p.engine.initial_spread = initial_spread;
    p.scope = spread_scope;
    p.threads = threads;
    return p;
  }

  TrainingOptions training(unsigned threads = 1) const {
    TrainingOptions t;
    t.pipeline = pipeline(threads);
    t.grid = grid;
    t.train_fraction = train_fraction;
    t.cost_per_trade = cost_per_trade;
    return t;
  }
};

namespace detail {

inline double config_double(const kv::Entry& e) {
  const auto v = csv::to_double(e.value);
  if (!v || !std::isfinite(*v)) throw ConfigError(e.key + ": expected a number, got `" + e.value + "`");
  return *v;
}

inline std::int64_t config_int(const kv::Entry& e) {
  const auto v = csv::to_int(e.value);
  if (!v) throw ConfigError(e.key + ": expected an integer, got `" + e.value + "`");
  return *v;
}

inline std::vector<double> config_list(const kv::Entry& e) {
  std::vector<double> out;
  for (auto f : csv::split(e.value)) {
    const auto v = csv::to_double(f);
    if (!v || !std::isfinite(*v)) throw ConfigError(e.key + ": bad list element `" + std::string(f) + "`");
    out.push_back(*v);
  }
  return out;
}

inline bool config_bool(const kv::Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(e.key + ": expected true/false, got `" + e.value + "`");
}

}  // namespace detail

/// Throws ConfigError naming the first out-of-range field.
inline void validate(const Config& c) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(c.p_threshold > 0.0 && c.p_threshold < 1.0)) throw ConfigError("p_threshold must be in (0, 1)");
  if (c.tfw_min < 3) throw ConfigError("tfw_min must be >= 3");
  if (c.tfw_max < c.tfw_min) throw ConfigError("tfw_max must be >= tfw_min");
  if (c.beta && !in01(*c.beta)) throw ConfigError("beta must be in [0, 1]");
  if (c.gamma && !in01(*c.gamma)) throw ConfigError("gamma must be in [0, 1]");
  if (!std::isfinite(c.initial_spread)) throw ConfigError("initial_spread must be finite");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
  if (c.offset_minutes < 0) throw ConfigError("offset_minutes must be >= 0");
  if (!(c.cost_per_trade >= 0.0)) throw ConfigError("cost_per_trade must be >= 0");
  if (c.grid.betas.empty()) throw ConfigError("beta_grid must not be empty");
  if (c.grid.gammas.empty()) throw ConfigError("gamma_grid must not be empty");
  for (double b : c.grid.betas)
    if (!in01(b)) throw ConfigError("beta_grid values must be in [0, 1]");
  for (double g : c.grid.gammas)
    if (!in01(g)) throw ConfigError("gamma_grid values must be in [0, 1]");
}

/// Applies entries onto `c` (so a params file can overlay a config).
inline void apply_entries(Config& c, const std::vector<kv::Entry>& entries) {
  using namespace detail;
  for (const auto& e : entries) {
    if (e.key == "p_threshold") c.p_threshold = config_double(e);
    else if (e.key == "tfw_min" || e.key == "tfw_max") {
      const auto v = config_int(e);
      if (v < 0) throw ConfigError(e.key + " must be >= 3");
      (e.key == "tfw_min" ? c.tfw_min : c.tfw_max) = static_cast<std::size_t>(v);
    } else if (e.key == "beta") c.beta = config_double(e);
    else if (e.key == "gamma") c.gamma = config_double(e);
    else if (e.key == "initial_spread") c.initial_spread = config_double(e);
    else if (e.key == "train_fraction") c.train_fraction = config_double(e);
    else if (e.key == "offset_minutes") {
      const auto v = config_int(e);
      if (v < 0 || v > 24 * 60) throw ConfigError("offset_minutes must be >= 0");
      c.offset_minutes = static_cast<int>(v);
    } else if (e.key == "spread_scope") {
      if (e.value == "per_tfw") c.spread_scope = SpreadScope::PerTfw;
      else if (e.value == "global") c.spread_scope = SpreadScope::Global;
      else throw ConfigError("spread_scope must be per_tfw or global");
    } else if (e.key == "normalize_sentiment") c.normalize_sentiment = config_bool(e);
    else if (e.key == "cost_per_trade") c.cost_per_trade = config_double(e);
    else if (e.key == "seed") {
      const auto v = config_int(e);
      if (v < 0) throw ConfigError("seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (e.key == "beta_grid") c.grid.betas = config_list(e);
    else if (e.key == "gamma_grid") c.grid.gammas = config_list(e);
    else throw ConfigError("line " + std::to_string(e.line) + ": unknown key `" + e.key + "`");
  }
  validate(c);
}

inline Config parse_config(std::istream& in) {
  Config c;
  apply_entries(c, kv::parse(in));
  return c;
}

inline void write_params(std::ostream& out, double beta, double gamma) {
  out << "beta = " << csv::format(beta) << "\ngamma = " << csv::format(gamma) << '\n';
}

}  // namespace sentrade
