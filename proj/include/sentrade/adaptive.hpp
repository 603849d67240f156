#pragma once

// Per-window adaptive engines. Each engine keeps a financial-sentiment spread
// that picks the model class and a quality score that ranks its prediction
// series against the other windows.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sentrade/model_space.hpp"
#include "sentrade/parallel.hpp"

namespace sentrade {

enum class Sign : std::int8_t { Negative = -1, Positive = 1 };

inline constexpr int value(Sign s) { return static_cast<int>(s); }
inline constexpr Sign flip(Sign s) { return s == Sign::Positive ? Sign::Negative : Sign::Positive; }

/// Sign of x; zero has no sign.
inline std::optional<Sign> sign_of(double x) {
  if (x > 0.0) return Sign::Positive;
  if (x < 0.0) return Sign::Negative;
  return std::nullopt;
}

/// Strict majority of prediction signs; empty input or a tie abstains.
/// Zero predictions carry no vote.
inline std::optional<Sign> majority_sign(std::span<const double> predictions) {
  int up = 0, down = 0;
  for (double p : predictions) {
    if (p > 0.0) ++up;
    else if (p < 0.0) ++down;
  }
  if (up > down) return Sign::Positive;
  if (down > up) return Sign::Negative;
  return std::nullopt;
}

struct ClassOutcome {
  ModelClass model_class = ModelClass::Financial;
  std::size_t n_models = 0;
  std::size_t n_correct = 0;
  std::optional<Sign> majority_sign;

  std::optional<double> correctness() const {
    if (n_models == 0) return std::nullopt;
    return static_cast<double>(n_correct) / static_cast<double>(n_models);
  }
};

/// A prediction is correct when its sign matches a non-zero realized return.
inline ClassOutcome score_class(ModelClass cls, std::span<const double> predictions, double realized_return) {
  ClassOutcome out{cls, predictions.size(), 0, majority_sign(predictions)};
  const auto actual = sign_of(realized_return);
  if (actual)
    for (double p : predictions)
      if (sign_of(p) == actual) ++out.n_correct;
  return out;
}

/// Passed-filter predictions for one (session, window), split by class.
struct SessionForecast {
  bool feasible = false;
  std::vector<double> financial;
  std::vector<double> sentiment;

  bool operator==(const SessionForecast&) const = default;
};

inline SessionForecast summarize(std::span<const FittedModel> fitted) {
  SessionForecast f;
  f.feasible = true;
  for (const auto& m : fitted) {
    if (!m.passed_filter) continue;
    (m.candidate.model_class == ModelClass::Financial ? f.financial : f.sentiment).push_back(m.predicted_next);
  }
  return f;
}

inline std::pair<ClassOutcome, ClassOutcome> class_outcomes(std::span<const FittedModel> fitted, double realized_return) {
  const auto f = summarize(fitted);
  return {score_class(ModelClass::Financial, f.financial, realized_return),
          score_class(ModelClass::Sentiment, f.sentiment, realized_return)};
}

/// Direction of the spread update: +1 financial, -1 sentiment, 0 when
/// neither class produced a model. Ties and a missing sentiment class favour
/// financial.
inline int spread_direction(const ClassOutcome& financial, const ClassOutcome& sentiment) {
  const auto fin = financial.correctness();
  const auto sent = sentiment.correctness();
  if (!fin && !sent) return 0;
  if (!fin) return -1;
  if (!sent) return +1;
  return *fin >= *sent ? +1 : -1;
}

/// s_new = gamma * s_old + theta * |100 r|; pure decay when both classes are empty.
inline double update_spread(double spread, double gamma, const ClassOutcome& financial, const ClassOutcome& sentiment,
                            double realized_return) {
  const int theta = spread_direction(financial, sentiment);
  if (theta == 0) return gamma * spread;
  return gamma * spread + theta * std::fabs(100.0 * realized_return);
}

inline ModelClass select_class(double spread) { return spread < 0.0 ? ModelClass::Sentiment : ModelClass::Financial; }

/// +1 when the emitted sign matched the realized return, 0 without an
/// emission, -1 otherwise (a zero return counts as wrong).
inline int quality_lambda(std::optional<Sign> emitted, double realized_return) {
  if (!emitted) return 0;
  return sign_of(realized_return) == emitted ? +1 : -1;
}

/// Q_new = beta * Q_old + lambda * |100 r|; the decay applies every session.
inline double update_quality(double quality, double beta, int lambda, double realized_return) {
  return beta * quality + lambda * std::fabs(100.0 * realized_return);
}

struct EngineParams {
  double beta = 0.4;
  double gamma = 0.0;
  double initial_spread = 1.0;
  double initial_quality = 0.0;
};

/// One resolved session in an engine's history.
struct EngineStep {
  std::size_t index = 0;
  bool feasible = false;
  ModelClass chosen_class = ModelClass::Financial;
  std::optional<Sign> emitted;
  ClassOutcome financial{ModelClass::Financial, 0, 0, std::nullopt};
  ClassOutcome sentiment{ModelClass::Sentiment, 0, 0, std::nullopt};
  double realized_return = 0.0;
  int lambda = 0;
  bool spread_updated = true;
  double spread_before = 0.0;
  double spread_after = 0.0;
  double quality_before = 0.0;
  double quality_after = 0.0;
};

/// Adaptive state for one time-frame window. Sessions are processed in two
/// stages: emit() chooses a class from the current spread and returns that
/// class's majority sign, then resolve() scores the session once its return is
/// known and advances the spread and quality.
class TfwEngine {
 public:
  TfwEngine(std::size_t window, EngineParams params)
      : window_(window), params_(params), spread_(params.initial_spread), quality_(params.initial_quality) {
    if (!(params.beta >= 0.0 && params.beta <= 1.0)) throw std::invalid_argument("beta must be in [0, 1]");
    if (!(params.gamma >= 0.0 && params.gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
  }

  std::size_t window() const noexcept { return window_; }
  const EngineParams& params() const noexcept { return params_; }
  double spread() const noexcept { return spread_; }
  double quality() const noexcept { return quality_; }
  const std::vector<EngineStep>& history() const noexcept { return history_; }

  /// Smallest target index whose window has lag-2 history.
  std::size_t first_feasible() const noexcept { return window_ + 2; }

  std::optional<Sign> emit(std::size_t t, SessionForecast forecast) {
    return emit(t, std::move(forecast), select_class(spread_));
  }

  /// Emits with an externally chosen class (shared-spread mode).
  std::optional<Sign> emit(std::size_t t, SessionForecast forecast, ModelClass chosen) {
    if (pending_) throw std::logic_error("TfwEngine::emit: previous session not resolved");
    if (!history_.empty() && t != history_.back().index + 1)
      throw std::logic_error("TfwEngine::emit: sessions must be contiguous");
    std::optional<Sign> emitted;
    if (forecast.feasible)
      emitted = majority_sign(chosen == ModelClass::Financial ? forecast.financial : forecast.sentiment);
    pending_ = Pending{t, std::move(forecast), chosen, emitted};
    return emitted;
  }

  bool has_pending() const noexcept { return pending_.has_value(); }
  std::optional<std::size_t> pending_index() const { return pending_ ? std::optional(pending_->index) : std::nullopt; }
  std::optional<Sign> pending_emission() const { return pending_ ? pending_->emitted : std::nullopt; }
  std::optional<ModelClass> pending_class() const {
    return pending_ ? std::optional(pending_->chosen) : std::nullopt;
  }

  /// Scores the pending session. With `advance_spread` false the spread is
  /// left untouched (it is owned by the caller).
  const EngineStep& resolve(double realized_return, bool advance_spread = true) {
    if (!pending_) throw std::logic_error("TfwEngine::resolve: nothing pending");
    auto& p = *pending_;
    EngineStep step;
    step.index = p.index;
    step.feasible = p.forecast.feasible;
    step.chosen_class = p.chosen;
    step.emitted = p.emitted;
    step.financial = score_class(ModelClass::Financial, p.forecast.financial, realized_return);
    step.sentiment = score_class(ModelClass::Sentiment, p.forecast.sentiment, realized_return);
    step.realized_return = realized_return;
    step.lambda = quality_lambda(p.emitted, realized_return);
    step.spread_before = spread_;
    step.quality_before = quality_;
    step.spread_updated = advance_spread && p.forecast.feasible;
    if (step.spread_updated)
      spread_ = update_spread(spread_, params_.gamma, step.financial, step.sentiment, realized_return);
    quality_ = update_quality(quality_, params_.beta, step.lambda, realized_return);
    step.spread_after = spread_;
    step.quality_after = quality_;
    history_.push_back(step);
    pending_.reset();
    return history_.back();
  }

 private:
  struct Pending {
    std::size_t index;
    SessionForecast forecast;
    ModelClass chosen;
    std::optional<Sign> emitted;
  };

  std::size_t window_;
  EngineParams params_;
  double spread_;
  double quality_;
  std::optional<Pending> pending_;
  std::vector<EngineStep> history_;
};

/// Forecast for engine `w` at session `t`; infeasible windows yield an empty,
/// infeasible forecast.
inline SessionForecast forecast_for(const SessionSeries& series, std::size_t t, std::size_t w,
                                    const WindowOptions& opts) {
  if (t < w + 2) return {};
  return summarize(fit_window(series, t, w, opts));
}

/// Fits the window for session t, emits, and resolves against the realized
/// return when it is part of the series. Infeasible windows emit nothing and
/// only decay Q.
inline std::optional<Sign> step_engine(TfwEngine& engine, const SessionSeries& series, std::size_t t,
                                       const WindowOptions& opts = {}) {
  const auto emitted = engine.emit(t, forecast_for(series, t, engine.window(), opts));
  if (t < series.returns.size()) engine.resolve(series.returns[t]);
  return emitted;
}

struct PredictionRecord {
  std::size_t index = 0;
  std::optional<std::size_t> chosen_tfw;
  std::optional<ModelClass> chosen_class;
  std::optional<Sign> predicted_sign;
  double realized_return = std::numeric_limits<double>::quiet_NaN();
  std::optional<bool> correct;

  bool operator==(const PredictionRecord&) const = default;
};

/// Among engines emitting for session t, the one with the highest Q
/// (smallest window on ties) supplies the prediction. Engines must hold a
/// pending emission for t; their Q reflects sessions up to t-1.
inline PredictionRecord select_tfw(std::span<const TfwEngine> engines, std::size_t t,
                                   double realized_return = std::numeric_limits<double>::quiet_NaN()) {
  PredictionRecord rec;
  rec.index = t;
  rec.realized_return = realized_return;
  const TfwEngine* best = nullptr;
  for (const auto& e : engines) {
    if (e.pending_index() != t) throw std::logic_error("select_tfw: engine " + std::to_string(e.window()) + " has no emission for session " + std::to_string(t));
    if (!e.pending_emission()) continue;
    if (!best || e.quality() > best->quality() || (e.quality() == best->quality() && e.window() < best->window()))
      best = &e;
  }
  if (best) {
    rec.chosen_tfw = best->window();
    rec.chosen_class = best->pending_class();
    rec.predicted_sign = best->pending_emission();
    if (!std::isnan(realized_return) && realized_return != 0.0)
      rec.correct = sign_of(realized_return) == rec.predicted_sign;
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Pipeline

enum class SpreadScope { PerTfw, Global };

struct PipelineOptions {
  std::size_t tfw_min = 20;
  std::size_t tfw_max = 40;
  WindowOptions window;
  EngineParams engine;
  SpreadScope scope = SpreadScope::PerTfw;
  unsigned threads = 1;

  std::size_t engine_count() const { return tfw_max - tfw_min + 1; }
  /// First session at which every window is feasible.
  std::size_t warmup() const { return tfw_max + 2; }
};

/// Per-(window, session) forecasts over [begin, end). Fitting dominates the
/// cost and does not depend on beta/gamma, so one cache serves a whole grid.
class ForecastCache {
 public:
  ForecastCache() = default;
  ForecastCache(std::size_t begin, std::size_t end, std::size_t tfw_min, std::size_t tfw_max)
      : begin_(begin), end_(end), tfw_min_(tfw_min), tfw_max_(tfw_max),
        data_((tfw_max - tfw_min + 1) * (end - begin)) {}

  std::size_t begin() const noexcept { return begin_; }
  std::size_t end() const noexcept { return end_; }
  std::size_t tfw_min() const noexcept { return tfw_min_; }
  std::size_t tfw_max() const noexcept { return tfw_max_; }

  SessionForecast& at(std::size_t w, std::size_t t) { return data_[slot(w, t)]; }
  const SessionForecast& at(std::size_t w, std::size_t t) const { return data_[slot(w, t)]; }

  /// Wall-clock seconds spent fitting.
  double fit_seconds = 0.0;

 private:
  std::size_t slot(std::size_t w, std::size_t t) const {
    if (w < tfw_min_ || w > tfw_max_ || t < begin_ || t >= end_) throw std::out_of_range("ForecastCache: slot out of range");
    return (w - tfw_min_) * (end_ - begin_) + (t - begin_);
  }

  std::size_t begin_ = 0, end_ = 0, tfw_min_ = 0, tfw_max_ = 0;
  std::vector<SessionForecast> data_;
};

inline void validate(const PipelineOptions& opts) {
  if (opts.tfw_min < 3 || opts.tfw_min > opts.tfw_max)
    throw std::invalid_argument("pipeline: need 3 <= tfw_min <= tfw_max");
}

inline ForecastCache precompute_forecasts(const SessionSeries& series, std::size_t begin, std::size_t end,
                                          const PipelineOptions& opts) {
  validate(opts);
  if (begin > end || end > series.size()) throw std::out_of_range("precompute_forecasts: bad span");
  ForecastCache cache(begin, end, opts.tfw_min, opts.tfw_max);
  const std::size_t span = end - begin;
  const auto start = std::chrono::steady_clock::now();
  parallel_for(opts.engine_count() * span, opts.threads, [&](std::size_t job) {
    const std::size_t w = opts.tfw_min + job / span;
    const std::size_t t = begin + job % span;
    cache.at(w, t) = forecast_for(series, t, w, opts.window);
  });
  cache.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cache;
}

struct PipelineRun {
  std::vector<PredictionRecord> records;
  std::vector<TfwEngine> engines;
  std::vector<double> global_spread;  // per session, after update (Global scope only)
};

/// Runs fresh engines over the cache span. Engine updates are cheap; all of
/// them advance in lockstep so select_tfw sees a consistent barrier.
inline PipelineRun run_adaptive(const SessionSeries& series, const ForecastCache& cache, const EngineParams& params,
                                SpreadScope scope = SpreadScope::PerTfw) {
  PipelineRun run;
  for (std::size_t w = cache.tfw_min(); w <= cache.tfw_max(); ++w) run.engines.emplace_back(w, params);
  double shared_spread = params.initial_spread;
  for (std::size_t t = cache.begin(); t < cache.end(); ++t) {
    const double r = series.returns.at(t);
    const auto shared_class = select_class(shared_spread);
    for (auto& e : run.engines) {
      if (scope == SpreadScope::Global) e.emit(t, cache.at(e.window(), t), shared_class);
      else e.emit(t, cache.at(e.window(), t));
    }
    run.records.push_back(select_tfw(run.engines, t, r));
    ClassOutcome pooled_fin{ModelClass::Financial, 0, 0, std::nullopt};
    ClassOutcome pooled_sent{ModelClass::Sentiment, 0, 0, std::nullopt};
    for (auto& e : run.engines) {
      const auto& step = e.resolve(r, scope == SpreadScope::PerTfw);
      pooled_fin.n_models += step.financial.n_models;
      pooled_fin.n_correct += step.financial.n_correct;
      pooled_sent.n_models += step.sentiment.n_models;
      pooled_sent.n_correct += step.sentiment.n_correct;
    }
    if (scope == SpreadScope::Global) {
      shared_spread = update_spread(shared_spread, params.gamma, pooled_fin, pooled_sent, r);
      run.global_spread.push_back(shared_spread);
    }
  }
  return run;
}

/// Fits and runs the adaptive pipeline over sessions [begin, end).
inline PipelineRun run_pipeline(const SessionSeries& series, std::size_t begin, std::size_t end,
                                const PipelineOptions& opts) {
  const auto cache = precompute_forecasts(series, begin, end, opts);
  return run_adaptive(series, cache, opts.engine, opts.scope);
}

}  // namespace sentrade
