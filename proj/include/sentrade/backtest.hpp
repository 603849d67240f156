#pragma once

// Fixed-stake long/short simulation, benchmark and clairvoyant baselines,
// and beta/gamma grid training on a chronological split.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sentrade/adaptive.hpp"
#include "sentrade/csv.hpp"
#include "sentrade/error.hpp"

namespace sentrade {

enum class Action { Long, Short, NoOp };

inline Action action_for(std::optional<Sign> s) {
  if (!s) return Action::NoOp;
  return *s == Sign::Positive ? Action::Long : Action::Short;
}

inline int direction(Action a) { return a == Action::Long ? 1 : a == Action::Short ? -1 : 0; }

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::Long: return "long";
    case Action::Short: return "short";
    case Action::NoOp: return "noop";
  }
  return "?";
}

struct TradeDecision {
  std::size_t index = 0;
  Action action = Action::NoOp;

  bool operator==(const TradeDecision&) const = default;
};

/// Stake-normalized P&L: every session risks the same notional, so curves
/// are running sums of signed returns rather than compounded wealth.
struct TradeLedger {
  std::vector<TradeDecision> decisions;
  std::vector<double> step_pnl;
  std::vector<double> cum_strategy;
  std::vector<double> cum_benchmark;
  std::vector<double> cum_benchmark_compounded;
  std::vector<double> cum_optimal;
  double hit_rate = 0.0;      // n_hits / n_scored, 0 when nothing was scored
  std::size_t n_trades = 0;   // non-NoOp decisions
  std::size_t n_scored = 0;   // trades on non-zero-return sessions
  std::size_t n_hits = 0;

  double final_strategy() const { return cum_strategy.empty() ? 0.0 : cum_strategy.back(); }
  double final_benchmark() const { return cum_benchmark.empty() ? 0.0 : cum_benchmark.back(); }
  double final_optimal() const { return cum_optimal.empty() ? 0.0 : cum_optimal.back(); }
};

/// Core simulation over per-session signs; returns[i] is the realized return
/// of the session at indices[i].
inline TradeLedger simulate_signs(std::span<const std::size_t> indices, std::span<const std::optional<Sign>> signs,
                                  std::span<const double> returns, double cost_per_trade = 0.0) {
  if (signs.size() != returns.size() || indices.size() != returns.size())
    throw DataError("simulate: " + std::to_string(signs.size()) + " predictions for " + std::to_string(returns.size()) +
                    " returns");
  if (!(cost_per_trade >= 0.0)) throw std::invalid_argument("simulate: cost_per_trade must be >= 0");
  TradeLedger l;
  double strategy = 0.0, benchmark = 0.0, compounded = 1.0, optimal = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    const double r = returns[i];
    const Action a = action_for(signs[i]);
    const int d = direction(a);
    const double pnl = d * r - (d != 0 ? cost_per_trade : 0.0);
    strategy += pnl;
    benchmark += r;
    compounded *= 1.0 + r;
    optimal += std::fabs(r);
    l.decisions.push_back({indices[i], a});
    l.step_pnl.push_back(pnl);
    l.cum_strategy.push_back(strategy);
    l.cum_benchmark.push_back(benchmark);
    l.cum_benchmark_compounded.push_back(compounded - 1.0);
    l.cum_optimal.push_back(optimal);
    if (d != 0) {
      ++l.n_trades;
      if (r != 0.0) {
        ++l.n_scored;
        if (sign_of(r) == signs[i]) ++l.n_hits;
      }
    }
  }
  l.hit_rate = l.n_scored ? static_cast<double>(l.n_hits) / static_cast<double>(l.n_scored) : 0.0;
  return l;
}

inline TradeLedger simulate(std::span<const PredictionRecord> records, std::span<const double> returns,
                            double cost_per_trade = 0.0) {
  if (records.size() != returns.size())
    throw DataError("simulate: " + std::to_string(records.size()) + " records for " + std::to_string(returns.size()) +
                    " returns");
  std::vector<std::size_t> idx;
  std::vector<std::optional<Sign>> signs;
  for (const auto& r : records) {
    idx.push_back(r.index);
    signs.push_back(r.predicted_sign);
  }
  return simulate_signs(idx, signs, returns, cost_per_trade);
}

/// Realized returns for the sessions named by `records`.
inline std::vector<double> returns_for(const SessionSeries& series, std::span<const PredictionRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(series.returns.at(r.index));
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct ParamGrid {
  std::vector<double> betas;
  std::vector<double> gammas;

  /// {0.0, 0.1, ..., 1.0} for both parameters.
  static ParamGrid standard() {
    ParamGrid g;
    for (int i = 0; i <= 10; ++i) {
      g.betas.push_back(i / 10.0);
      g.gammas.push_back(i / 10.0);
    }
    return g;
  }
};

struct GridPoint {
  double beta = 0.0;
  double gamma = 0.0;
  double train_return = 0.0;

  bool operator==(const GridPoint&) const = default;
};

struct TrainingResult {
  double beta = 0.0;
  double gamma = 0.0;
  double train_return = 0.0;
  std::vector<GridPoint> grid;  // beta ascending, then gamma ascending
  std::size_t split_index = 0;
};

struct TrainingOptions {
  PipelineOptions pipeline;
  ParamGrid grid = ParamGrid::standard();
  double train_fraction = 0.30;
  double cost_per_trade = 0.0;
};

/// Chronological split point floor(n * fraction).
inline std::size_t split_index(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

inline std::size_t min_training_sessions(const PipelineOptions& opts) { return opts.warmup() + 1; }

/// Grid search over (beta, gamma) maximizing the final strategy return on
/// the training span [warmup, split). Ties go to the smaller beta, then the
/// smaller gamma.
inline TrainingResult train_params(const SessionSeries& series, const TrainingOptions& opts) {
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto betas = sorted(opts.grid.betas);
  const auto gammas = sorted(opts.grid.gammas);
  if (betas.empty() || gammas.empty()) throw std::invalid_argument("train_params: empty grid");

  TrainingResult result;
  result.split_index = split_index(series.size(), opts.train_fraction);
  const std::size_t begin = opts.pipeline.warmup();
  if (result.split_index < min_training_sessions(opts.pipeline))
    throw DataError("training span has " + std::to_string(result.split_index) + " sessions; at least " +
                    std::to_string(min_training_sessions(opts.pipeline)) +
                    " (tfw_max + 3) are required for warm-up");

  const auto cache = precompute_forecasts(series, begin, result.split_index, opts.pipeline);
  result.grid.resize(betas.size() * gammas.size());
  parallel_for(result.grid.size(), opts.pipeline.threads, [&](std::size_t i) {
    EngineParams p = opts.pipeline.engine;
    p.beta = betas[i / gammas.size()];
    p.gamma = gammas[i % gammas.size()];
    const auto run = run_adaptive(series, cache, p, opts.pipeline.scope);
    const auto ledger = simulate(run.records, returns_for(series, run.records), opts.cost_per_trade);
    result.grid[i] = {p.beta, p.gamma, ledger.final_strategy()};
  });
  const GridPoint* best = &result.grid.front();
  for (const auto& g : result.grid)
    if (g.train_return > best->train_return) best = &g;
  result.beta = best->beta;
  result.gamma = best->gamma;
  result.train_return = best->train_return;
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluation {
  std::size_t begin = 0;
  std::size_t end = 0;
  PipelineRun run;
  TradeLedger ledger;
  double fit_seconds = 0.0;
};

/// Runs fresh engines with fixed parameters over [begin, end); the start is
/// pushed to the warm-up point when earlier. Windows may reach back before
/// `begin` since that history is known at decision time.
inline Evaluation evaluate(const SessionSeries& series, const PipelineOptions& opts, std::size_t begin, std::size_t end,
                           double cost_per_trade = 0.0) {
  Evaluation ev;
  ev.begin = std::max(begin, opts.warmup());
  ev.end = std::min(end, series.size());
  if (ev.begin >= ev.end)
    throw DataError("empty evaluation span: sessions [" + std::to_string(ev.begin) + ", " + std::to_string(ev.end) +
                    ") with " + std::to_string(series.size()) + " sessions available");
  const auto cache = precompute_forecasts(series, ev.begin, ev.end, opts);
  ev.fit_seconds = cache.fit_seconds;
  ev.run = run_adaptive(series, cache, opts.engine, opts.scope);
  ev.ledger = simulate(ev.run.records, returns_for(series, ev.run.records), cost_per_trade);
  return ev;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records) {
  out << "index,chosen_tfw,chosen_class,predicted_sign,realized_return,correct\n";
  for (const auto& r : records) {
    out << r.index << ',' << (r.chosen_tfw ? std::to_string(*r.chosen_tfw) : "none") << ','
        << (r.chosen_class ? to_string(*r.chosen_class) : "none") << ','
        << (r.predicted_sign ? (*r.predicted_sign == Sign::Positive ? "+1" : "-1") : "none") << ','
        << csv::format(r.realized_return) << ',' << (r.correct ? (*r.correct ? "true" : "false") : "na") << '\n';
  }
}

inline void write_report_csv(std::ostream& out, const TradeLedger& l) {
  out << "index,decision,step_pnl,cum_strategy,cum_benchmark,cum_benchmark_compounded,cum_optimal\n";
  for (std::size_t i = 0; i < l.decisions.size(); ++i) {
    out << l.decisions[i].index << ',' << to_string(l.decisions[i].action) << ',' << csv::format(l.step_pnl[i]) << ','
        << csv::format(l.cum_strategy[i]) << ',' << csv::format(l.cum_benchmark[i]) << ','
        << csv::format(l.cum_benchmark_compounded[i]) << ',' << csv::format(l.cum_optimal[i]) << '\n';
  }
}

inline void write_training_csv(std::ostream& out, const TrainingResult& t) {
  out << "beta,gamma,train_return\n";
  for (const auto& g : t.grid)
    out << csv::format(g.beta) << ',' << csv::format(g.gamma) << ',' << csv::format(g.train_return) << '\n';
}

/// Diagnostic dump of every fitted candidate per (session, window).
/// window_end is the last session inside the window; predictions target
/// window_end + 1.
inline void write_models_csv(std::ostream& out, const SessionSeries& series, std::size_t begin, std::size_t end,
                             const PipelineOptions& opts) {
  const std::size_t span = end > begin ? end - begin : 0;
  std::vector<std::vector<FittedModel>> fits(opts.engine_count() * span);
  parallel_for(fits.size(), opts.threads, [&](std::size_t job) {
    const std::size_t w = opts.tfw_min + job / span;
    const std::size_t t = begin + job % span;
    if (t >= w + 2) fits[job] = fit_window(series, t, w, opts.window);
  });
  out << "window_end,tfw,variables,class,p_max,predicted_next,passed\n";
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t w = opts.tfw_min; w <= opts.tfw_max; ++w) {
      for (const auto& m : fits[(w - opts.tfw_min) * span + (t - begin)]) {
        out << t - 1 << ',' << w << ',' << m.candidate.label() << ',' << to_string(m.candidate.model_class) << ','
            << (m.fit.rank_ok ? csv::format(m.fit.max_p_value()) : "na") << ','
            << (m.passed_filter ? csv::format(m.predicted_next) : "na") << ',' << (m.passed_filter ? "true" : "false")
            << '\n';
      }
    }
  }
}

}  // namespace sentrade
