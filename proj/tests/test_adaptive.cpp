#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles/engine_oracle.hpp"
#include "sentrade/adaptive.hpp"
#include "sentrade/backtest.hpp"
#include "support/scenarios.hpp"

using namespace sentrade;
using Catch::Approx;

namespace {

ClassOutcome outcome(ModelClass c, std::size_t n, std::size_t correct) { return {c, n, correct, std::nullopt}; }
ClassOutcome fin(std::size_t n, std::size_t correct) { return outcome(ModelClass::Financial, n, correct); }
ClassOutcome sent(std::size_t n, std::size_t correct) { return outcome(ModelClass::Sentiment, n, correct); }

// A pending emission for session t from an engine whose Q was forced to `quality`.
TfwEngine engine_with(std::size_t w, double quality, std::optional<Sign> sign, std::size_t t) {
  EngineParams p;
  p.initial_quality = quality;
  TfwEngine e(w, p);
  SessionForecast f;
  f.feasible = true;
  if (sign) f.financial = {value(*sign) * 0.01};
  e.emit(t, f);
  return e;
}

PipelineOptions small_pipeline(double beta, double gamma, std::size_t lo = 20, std::size_t hi = 40) {
  PipelineOptions o;
  o.tfw_min = lo;
  o.tfw_max = hi;
  o.engine.beta = beta;
  o.engine.gamma = gamma;
  o.threads = 4;
  return o;
}

}  // namespace

TEST_CASE("class_outcomes and majority voting", "[adaptive]") {
  SECTION("single financial hit") {
    const std::vector<double> p{0.002};
    const auto o = score_class(ModelClass::Financial, p, 0.01);
    CHECK(o.n_models == 1);
    CHECK(o.correctness() == 1.0);
    CHECK(o.majority_sign == Sign::Positive);
  }
  SECTION("sentiment {+,+,-} realized -") {
    const std::vector<double> p{0.01, 0.02, -0.01};
    const auto o = score_class(ModelClass::Sentiment, p, -0.005);
    CHECK(o.n_correct == 1);
    CHECK(*o.correctness() == Approx(1.0 / 3.0));
    CHECK(o.majority_sign == Sign::Positive);
  }
  SECTION("tie abstains") {
    const std::vector<double> p{0.01, -0.01};
    CHECK_FALSE(score_class(ModelClass::Sentiment, p, 0.02).majority_sign);
    CHECK_FALSE(score_class(ModelClass::Sentiment, p, -0.02).majority_sign);
  }
  SECTION("empty class has undefined correctness") {
    const auto o = score_class(ModelClass::Financial, {}, 0.01);
    CHECK_FALSE(o.correctness());
    CHECK_FALSE(o.majority_sign);
  }
  SECTION("zero realized return scores nobody") {
    const std::vector<double> p{0.01, -0.01, 0.02};
    CHECK(score_class(ModelClass::Sentiment, p, 0.0).n_correct == 0);
  }
  SECTION("from fitted models") {
    std::vector<FittedModel> fitted(3);
    fitted[0] = {*make_candidate(kFinancialMask), {}, 0.004, true};
    fitted[1] = {*make_candidate(bit(VariableId::P1)), {}, -0.002, true};
    fitted[2] = {*make_candidate(bit(VariableId::N1)), {}, 0.009, false};
    const auto [f, s] = class_outcomes(fitted, 0.01);
    CHECK(f.n_models == 1);
    CHECK(f.n_correct == 1);
    CHECK(s.n_models == 1);
    CHECK(s.n_correct == 0);
  }
}

TEST_CASE("update_spread", "[adaptive]") {
  CHECK(update_spread(1.0, 0.0, fin(1, 1), sent(2, 1), 0.02) == Approx(2.0));
  CHECK(update_spread(1.0, 0.5, fin(2, 0), sent(3, 2), 0.01) == Approx(-0.5));
  CHECK(update_spread(-2.0, 0.5, fin(0, 0), sent(0, 0), 0.05) == Approx(-1.0));
  SECTION("tie and empty-class policy") {
    CHECK(spread_direction(fin(2, 1), sent(4, 2)) == 1);
    CHECK(spread_direction(fin(1, 0), sent(0, 0)) == 1);
    CHECK(spread_direction(fin(0, 0), sent(1, 0)) == -1);
    CHECK(spread_direction(fin(0, 0), sent(0, 0)) == 0);
  }
  SECTION("zero return contributes nothing") {
    CHECK(update_spread(3.0, 0.5, fin(1, 0), sent(1, 0), 0.0) == 1.5);
  }
}

TEST_CASE("select_class", "[adaptive]") {
  CHECK(select_class(1.0) == ModelClass::Financial);
  CHECK(select_class(-0.001) == ModelClass::Sentiment);
  CHECK(select_class(0.0) == ModelClass::Financial);
}

TEST_CASE("update_quality", "[adaptive]") {
  CHECK(update_quality(5.0, 0.4, +1, 0.01) == Approx(3.0));
  CHECK(update_quality(5.0, 0.4, 0, 0.01) == Approx(2.0));
  CHECK(update_quality(5.0, 0.4, 0, -0.3) == Approx(2.0));
  CHECK(update_quality(0.0, 0.4, -1, 0.02) == Approx(-2.0));
  CHECK(quality_lambda(Sign::Positive, 0.01) == 1);
  CHECK(quality_lambda(Sign::Positive, -0.01) == -1);
  CHECK(quality_lambda(Sign::Negative, 0.0) == -1);
  CHECK(quality_lambda(std::nullopt, 0.05) == 0);
}

TEST_CASE("select_tfw", "[adaptive]") {
  SECTION("highest Q wins") {
    const std::vector<TfwEngine> e{engine_with(20, 1.5, Sign::Positive, 50), engine_with(25, 2.0, Sign::Negative, 50)};
    const auto r = select_tfw(e, 50, 0.01);
    CHECK(r.chosen_tfw == 25u);
    CHECK(r.predicted_sign == Sign::Negative);
    CHECK(r.chosen_class == ModelClass::Financial);
    CHECK(r.correct == false);
  }
  SECTION("no emission means no operation") {
    const std::vector<TfwEngine> e{engine_with(20, 1.5, std::nullopt, 50), engine_with(25, 9.0, std::nullopt, 50)};
    const auto r = select_tfw(e, 50, 0.01);
    CHECK_FALSE(r.chosen_tfw);
    CHECK_FALSE(r.chosen_class);
    CHECK_FALSE(r.predicted_sign);
    CHECK_FALSE(r.correct);
  }
  SECTION("Q tie goes to the smaller window") {
    const std::vector<TfwEngine> e{engine_with(30, 2.0, Sign::Negative, 50), engine_with(20, 2.0, Sign::Positive, 50)};
    const auto r = select_tfw(e, 50, 0.01);
    CHECK(r.chosen_tfw == 20u);
    CHECK(r.predicted_sign == Sign::Positive);
    CHECK(r.correct == true);
  }
  SECTION("silent engines are skipped even with higher Q") {
    const std::vector<TfwEngine> e{engine_with(20, 0.5, Sign::Positive, 50), engine_with(21, 7.0, std::nullopt, 50)};
    CHECK(select_tfw(e, 50, -0.01).chosen_tfw == 20u);
  }
  SECTION("zero return leaves correctness undefined") {
    const std::vector<TfwEngine> e{engine_with(20, 0.0, Sign::Positive, 50)};
    CHECK_FALSE(select_tfw(e, 50, 0.0).correct);
  }
  SECTION("engines must have emitted for t") {
    const std::vector<TfwEngine> e{engine_with(20, 0.0, Sign::Positive, 49)};
    CHECK_THROWS_AS(select_tfw(e, 50, 0.0), std::logic_error);
  }
}

TEST_CASE("TfwEngine staging", "[adaptive]") {
  TfwEngine e(20, {});
  CHECK(e.spread() == 1.0);
  CHECK(e.quality() == 0.0);
  CHECK_THROWS_AS(e.resolve(0.01), std::logic_error);
  SessionForecast f{true, {0.01}, {-0.02, -0.01}};
  CHECK(e.emit(30, f) == Sign::Positive);
  CHECK_THROWS_AS(e.emit(31, f), std::logic_error);
  const auto& step = e.resolve(-0.01);
  CHECK(step.lambda == -1);
  CHECK(step.spread_after == Approx(-1.0));  // sentiment beat financial, gamma = 0
  CHECK(e.quality() == Approx(-1.0));
  CHECK(e.emit(31, f) == Sign::Negative);
  e.resolve(0.0);
  CHECK_THROWS_AS(e.emit(33, f), std::logic_error);
  CHECK_THROWS_AS(TfwEngine(20, {1.5, 0.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(TfwEngine(20, {0.5, -0.1, 1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("infeasible windows only decay Q", "[adaptive]") {
  EngineParams p;
  p.initial_quality = 4.0;
  p.gamma = 0.5;
  TfwEngine e(30, p);
  const auto series = generate(scenarios::noise(1, 40));
  // t = 25 < w + 2: no design exists
  CHECK_FALSE(step_engine(e, series, 25));
  const auto& step = e.history().back();
  CHECK_FALSE(step.feasible);
  CHECK(step.lambda == 0);
  CHECK(e.quality() == Approx(1.6));
  CHECK(e.spread() == 1.0);
}

TEST_CASE("spread and quality histories replay through the single-step oracle", "[adaptive][property]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int h = 0; h < 50; ++h) {
    EngineParams p;
    p.beta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    p.gamma = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    p.initial_quality = 10.0 * u(rng);
    TfwEngine engine(20, p);
    std::vector<SessionForecast> inputs;
    std::vector<double> returns;
    for (std::size_t t = 22; t < 100; ++t) {
      SessionForecast f;
      f.feasible = rng() % 8 != 0;
      if (f.feasible) {
        for (auto i = rng() % 3; i > 0; --i) f.financial.push_back(0.01 * u(rng));
        for (auto i = rng() % 5; i > 0; --i) f.sentiment.push_back(0.01 * u(rng));
      }
      inputs.push_back(f);
      returns.push_back(rng() % 15 == 0 ? 0.0 : 0.03 * u(rng));
      engine.emit(t, f);
      engine.resolve(returns.back());
    }
    double s = p.initial_spread, q = p.initial_quality;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto& f = inputs[k];
      const double r = returns[k];
      auto hits = [&](const std::vector<double>& v) {
        std::size_t c = 0;
        for (double x : v) c += (x > 0 && r > 0) || (x < 0 && r < 0);
        return c;
      };
      const auto& step = engine.history()[k];
      const int emitted = step.emitted ? value(*step.emitted) : 0;
      if (f.feasible) s = oracle::spread_step(s, p.gamma, f.financial.size(), hits(f.financial), f.sentiment.size(), hits(f.sentiment), r);
      q = oracle::quality_step(q, p.beta, emitted, r);
      CHECK(std::fabs(step.spread_after - s) <= 1e-12);
      CHECK(std::fabs(step.quality_after - q) <= 1e-12);
      CHECK(step.index == 22 + k);
    }
  }
}

TEST_CASE("quality stays within the decay bound", "[adaptive][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int run = 0; run < 40; ++run) {
    EngineParams p;
    p.beta = std::uniform_real_distribution<double>(0.0, 0.95)(rng);
    p.initial_quality = 20.0 * u(rng);
    const double r_max = 0.05;
    TfwEngine e(20, p);
    for (std::size_t k = 0; k < 300; ++k) {
      SessionForecast f{true, {u(rng)}, {u(rng)}};
      e.emit(22 + k, f);
      e.resolve(r_max * u(rng));
      const double bound = 100.0 * r_max / (1.0 - p.beta) + std::pow(p.beta, double(k + 1)) * std::fabs(p.initial_quality);
      CHECK(std::fabs(e.quality()) <= bound + 1e-12);
    }
  }
}

TEST_CASE("gamma = 0 makes the class choice depend on the last session only", "[adaptive][property]") {
  const auto series = generate(scenarios::sentiment_driven(3, 120));
  const auto opts = small_pipeline(0.4, 0.0, 20, 26);
  const auto cache = precompute_forecasts(series, opts.warmup(), series.size(), opts);
  const auto run = run_adaptive(series, cache, opts.engine);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& engine : run.engines) {
    for (std::size_t k = 1; k < engine.history().size(); ++k) {
      const std::size_t t = cache.begin() + k;
      EngineParams p = opts.engine;
      p.initial_spread = 30.0 * u(rng);
      TfwEngine probe(engine.window(), p);
      for (std::size_t j = t - 3; j + 1 < t; ++j) {
        probe.emit(j, SessionForecast{true, {u(rng)}, {u(rng)}});
        probe.resolve(0.1 * u(rng));
      }
      probe.emit(t - 1, cache.at(engine.window(), t - 1));
      probe.resolve(series.returns[t - 1]);
      CHECK(select_class(probe.spread()) == engine.history()[k].chosen_class);
    }
  }
}

TEST_CASE("engines are independent of threads and of the other windows", "[adaptive][property]") {
  const auto series = generate(scenarios::sentiment_driven(5, 110));
  auto wide = small_pipeline(0.4, 0.3, 20, 30);
  auto narrow = small_pipeline(0.4, 0.3, 24, 27);
  narrow.threads = 1;
  const auto begin = wide.warmup();
  const auto a = run_pipeline(series, begin, series.size(), wide);
  const auto b = run_pipeline(series, begin, series.size(), narrow);
  wide.threads = 16;
  const auto c = run_pipeline(series, begin, series.size(), wide);
  for (std::size_t w = 24; w <= 27; ++w) {
    const auto& ea = a.engines[w - 20].history();
    const auto& eb = b.engines[w - 24].history();
    const auto& ec = c.engines[w - 20].history();
    REQUIRE(ea.size() == eb.size());
    for (std::size_t k = 0; k < ea.size(); ++k) {
      CHECK(ea[k].emitted == eb[k].emitted);
      CHECK(ea[k].spread_after == eb[k].spread_after);
      CHECK(ea[k].quality_after == eb[k].quality_after);
      CHECK(ea[k].quality_after == ec[k].quality_after);
      CHECK(ea[k].spread_after == ec[k].spread_after);
    }
  }
  CHECK(a.records == c.records);
}

TEST_CASE("emissions are signs or abstentions", "[adaptive]") {
  const auto series = generate(scenarios::noise(4, 120));
  const auto run = run_pipeline(series, 42, series.size(), small_pipeline(0.4, 0.0));
  std::size_t silent = 0;
  for (const auto& r : run.records) {
    if (r.predicted_sign) {
      CHECK((value(*r.predicted_sign) == 1 || value(*r.predicted_sign) == -1));
      CHECK(r.chosen_tfw);
    } else {
      CHECK_FALSE(r.chosen_tfw);
      ++silent;
    }
  }
  for (const auto& e : run.engines)
    for (const auto& st : e.history())
      if (st.feasible && st.financial.n_models == 0 && st.sentiment.n_models == 0) CHECK_FALSE(st.emitted);
  CHECK(silent > 0);
}

TEST_CASE("autoregressive regime keeps the financial class", "[adaptive][scenario]") {
  const auto series = generate(scenarios::autoregressive());
  const auto opts = small_pipeline(0.4, 0.9);
  const auto run = run_pipeline(series, opts.warmup(), series.size(), opts);
  for (const auto& e : run.engines)
    for (const auto& st : e.history()) {
      if (st.emitted && st.chosen_class == ModelClass::Financial) CHECK(st.emitted == st.financial.majority_sign);
    }
  std::size_t emitted = 0, financial = 0, positive = 0;
  for (std::size_t k = 0; k < run.records.size(); ++k) {
    if (run.records[k].predicted_sign) {
      ++emitted;
      financial += run.records[k].chosen_class == ModelClass::Financial;
    }
    bool all = true;
    for (const auto& e : run.engines) all &= e.history()[k].spread_after > 0;
    positive += all;
  }
  CHECK(emitted > 0);
  CHECK(financial == emitted);
  CHECK(double(positive) / run.records.size() >= 0.95);
}

TEST_CASE("sentiment regime switches classes", "[adaptive][scenario]") {
  const auto series = generate(scenarios::sentiment_driven());
  const auto opts = small_pipeline(0.4, 0.0);
  const auto run = run_pipeline(series, opts.warmup(), series.size(), opts);

  // First emitting session at which each engine's replayed spread is negative.
  for (const auto& e : run.engines) {
    double s = e.params().initial_spread;
    std::size_t emitting = 0, switched_at = std::numeric_limits<std::size_t>::max();
    for (const auto& st : e.history()) {
      if (st.emitted) ++emitting;
      if (st.feasible)
        s = oracle::spread_step(s, e.params().gamma, st.financial.n_models, st.financial.n_correct, st.sentiment.n_models,
                                st.sentiment.n_correct, st.realized_return);
      if (s < 0.0) {
        switched_at = emitting;
        CHECK(e.history()[&st - e.history().data()].spread_after == s);
        break;
      }
    }
    INFO("window " << e.window());
    CHECK(switched_at <= 10);
  }
  std::size_t sentiment = 0, emitted = 0;
  for (const auto& r : run.records)
    if (r.predicted_sign) {
      ++emitted;
      sentiment += r.chosen_class == ModelClass::Sentiment;
    }
  CHECK(double(sentiment) / emitted > 0.9);
}
