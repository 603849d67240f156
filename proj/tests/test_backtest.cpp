#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "sentrade/backtest.hpp"
#include "support/scenarios.hpp"

using namespace sentrade;
using Catch::Approx;

namespace {

using Signs = std::vector<std::optional<Sign>>;

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

TradeLedger sim(const Signs& s, const std::vector<double>& r, double cost = 0.0) {
  return simulate_signs(iota(r.size()), s, r, cost);
}

PipelineOptions quick_pipeline(unsigned threads = 4) {
  PipelineOptions o;
  o.tfw_min = 20;
  o.tfw_max = 26;
  o.threads = threads;
  return o;
}

}  // namespace

TEST_CASE("simulate examples", "[backtest]") {
  SECTION("mixed signs") {
    const auto l = sim({Sign::Positive, Sign::Negative, std::nullopt}, {0.01, -0.02, 0.03});
    CHECK(l.step_pnl[0] == Approx(0.01));
    CHECK(l.step_pnl[1] == Approx(0.02));
    CHECK(l.step_pnl[2] == 0.0);
    CHECK(l.final_strategy() == Approx(0.03));
    CHECK(l.final_benchmark() == Approx(0.02));
    CHECK(l.final_optimal() == Approx(0.06));
    CHECK(l.n_trades == 2);
    CHECK(l.hit_rate == 1.0);
    CHECK(l.decisions[2].action == Action::NoOp);
    CHECK(l.cum_benchmark_compounded.back() == Approx(1.01 * 0.98 * 1.03 - 1.0));
  }
  SECTION("all NoOp") {
    const std::vector<double> r{0.01, -0.03, 0.02};
    const auto l = sim(Signs(3), r);
    for (double c : l.cum_strategy) CHECK(c == 0.0);
    CHECK(l.final_benchmark() == Approx(0.0).margin(1e-15));
    CHECK(l.n_trades == 0);
    CHECK(l.hit_rate == 0.0);
  }
  SECTION("clairvoyant signs attain the optimum") {
    const std::vector<double> r{0.01, -0.03, 0.02, -0.001};
    Signs s;
    for (double x : r) s.push_back(sign_of(x));
    const auto l = sim(s, r);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(l.cum_strategy[i] == l.cum_optimal[i]);
  }
  SECTION("zero returns are excluded from the hit rate") {
    const auto l = sim({Sign::Positive, Sign::Negative, Sign::Positive}, {0.0, 0.01, 0.02});
    CHECK(l.n_trades == 3);
    CHECK(l.n_scored == 2);
    CHECK(l.hit_rate == 0.5);
  }
  SECTION("cost per trade") {
    const auto l = sim({Sign::Positive, std::nullopt}, {0.01, 0.02}, 0.001);
    CHECK(l.final_strategy() == Approx(0.009));
  }
  SECTION("length mismatch") {
    CHECK_THROWS_AS(sim({Sign::Positive}, {0.01, 0.02}), DataError);
    const std::vector<PredictionRecord> recs(2);
    const std::vector<double> r{0.01};
    CHECK_THROWS_AS(simulate(recs, r), DataError);
  }
}

TEST_CASE("ledger algebra on random series", "[backtest][property]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 0.02);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 150;
    Signs s(n), flipped(n);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng() % 30 == 0 ? 0.0 : z(rng);
      if (const auto k = rng() % 3; k) s[i] = k == 1 ? Sign::Positive : Sign::Negative;
      if (s[i]) flipped[i] = flip(*s[i]);
    }
    const auto l = sim(s, r);
    const auto lf = sim(flipped, r);
    const std::size_t cut = 1 + rng() % n;
    const auto lp = sim(Signs(s.begin(), s.begin() + cut), std::vector<double>(r.begin(), r.begin() + cut));
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(l.cum_optimal[i] >= std::max({l.cum_strategy[i], l.cum_benchmark[i], 0.0}));
      REQUIRE(lf.cum_strategy[i] == -l.cum_strategy[i]);
      if (i < cut) {
        REQUIRE(lp.decisions[i] == l.decisions[i]);
        REQUIRE(lp.cum_strategy[i] == l.cum_strategy[i]);
      }
    }
  }
}

TEST_CASE("pipeline decisions do not look ahead", "[backtest][property]") {
  const auto series = generate(scenarios::sentiment_driven(21, 140));
  const auto opts = quick_pipeline();
  const auto full = evaluate(series, opts, 0, series.size());
  std::mt19937_64 rng(2);
  for (int k = 0; k < 4; ++k) {
    const std::size_t cut = opts.warmup() + 1 + rng() % (series.size() - opts.warmup() - 1);
    SessionSeries prefix = series;
    prefix.sessions.resize(cut);
    prefix.returns.resize(cut);
    const auto part = evaluate(prefix, opts, 0, cut);
    REQUIRE(part.run.records.size() == cut - opts.warmup());
    for (std::size_t i = 0; i < part.run.records.size(); ++i) {
      CHECK(part.run.records[i] == full.run.records[i]);
      CHECK(part.ledger.cum_strategy[i] == full.ledger.cum_strategy[i]);
    }
  }
}

TEST_CASE("train_params grid handling", "[backtest]") {
  const auto series = generate(scenarios::sentiment_driven(8, 120));
  TrainingOptions t;
  t.pipeline = quick_pipeline();

  SECTION("singleton grid") {
    t.grid = {{0.4}, {0.0}};
    const auto r = train_params(series, t);
    CHECK(r.beta == 0.4);
    CHECK(r.gamma == 0.0);
    CHECK(r.grid.size() == 1);
    CHECK(r.split_index == 36);
  }
  SECTION("identical returns favour the smaller beta") {
    // beta never changes which engine is chosen when only one window exists.
    t.pipeline.tfw_min = t.pipeline.tfw_max = 22;
    t.grid = {{0.9, 0.2, 0.5}, {0.0}};
    const auto r = train_params(series, t);
    REQUIRE(r.grid.size() == 3);
    CHECK(r.grid[0].train_return == r.grid[1].train_return);
    CHECK(r.grid[1].train_return == r.grid[2].train_return);
    CHECK(r.beta == 0.2);
  }
  SECTION("argmax matches an exhaustive replay and is deterministic") {
    t.grid = {{0.0, 0.4, 1.0}, {0.0, 0.5, 1.0}};
    t.train_fraction = 0.5;
    const auto r = train_params(series, t);
    double best = -1e300;
    GridPoint arg;
    for (double b : t.grid.betas)
      for (double g : t.grid.gammas) {
        auto o = t.pipeline;
        o.engine.beta = b;
        o.engine.gamma = g;
        const auto run = run_pipeline(series, o.warmup(), r.split_index, o);
        const double ret = simulate(run.records, returns_for(series, run.records)).final_strategy();
        const auto it = std::find_if(r.grid.begin(), r.grid.end(), [&](const GridPoint& p) { return p.beta == b && p.gamma == g; });
        REQUIRE(it != r.grid.end());
        CHECK(it->train_return == ret);
        if (ret > best) {
          best = ret;
          arg = {b, g, ret};
        }
      }
    CHECK(r.beta == arg.beta);
    CHECK(r.gamma == arg.gamma);
    CHECK(r.train_return == best);
    auto single = t;
    single.pipeline.threads = 1;
    const auto again = train_params(series, single);
    CHECK(again.grid == r.grid);
  }
  SECTION("too-short training span names the minimum") {
    const auto shortish = generate(scenarios::sentiment_driven(8, 80));
    t.pipeline.tfw_max = 40;
    try {
      train_params(shortish, t);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("43") != std::string::npos);
    }
    CHECK(min_training_sessions(t.pipeline) == 43);
  }
}

TEST_CASE("evaluate on planted regimes", "[backtest][scenario]") {
  SECTION("sentiment-driven series") {
    const auto series = generate(scenarios::sentiment_driven());
    PipelineOptions o;
    o.threads = 4;
    const auto ev = evaluate(series, o, split_index(series.size(), 0.3), series.size());
    CHECK(ev.begin == 60);
    CHECK(ev.ledger.hit_rate >= 0.80);
    CHECK(ev.ledger.final_strategy() >= 0.7 * ev.ledger.final_optimal());
  }
  SECTION("noise stays near zero") {
    std::vector<double> finals;
    PipelineOptions o;
    o.threads = 4;
    for (std::uint64_t seed = 101; seed < 121; ++seed) {
      const auto series = generate(scenarios::noise(seed, 160));
      finals.push_back(evaluate(series, o, 48, series.size()).ledger.final_strategy());
    }
    double mean = 0.0, var = 0.0;
    for (double f : finals) mean += f / finals.size();
    for (double f : finals) var += (f - mean) * (f - mean) / (finals.size() - 1);
    CHECK(std::fabs(mean) <= 2.0 * std::sqrt(var / finals.size()));
  }
  SECTION("empty span is an error") {
    // Default windows need 42 warmup sessions.
    const auto series = generate(scenarios::noise(1, 42));
    PipelineOptions o;
    CHECK_THROWS_AS(evaluate(series, o, 18, series.size()), DataError);
    CHECK_THROWS_AS(evaluate(series, quick_pipeline(), 30, 30), DataError);
  }
}

TEST_CASE("report writers", "[backtest]") {
  std::vector<PredictionRecord> recs(2);
  recs[0] = {42, 25, ModelClass::Sentiment, Sign::Negative, -0.0125, true};
  recs[1].index = 43;
  recs[1].realized_return = 0.0;
  std::ostringstream p;
  write_predictions_csv(p, recs);
  CHECK(p.str() ==
        "index,chosen_tfw,chosen_class,predicted_sign,realized_return,correct\n"
        "42,25,sentiment,-1,-0.0125,true\n"
        "43,none,none,none,0,na\n");

  const auto l = simulate(recs, std::vector<double>{-0.0125, 0.0});
  std::ostringstream r;
  write_report_csv(r, l);
  CHECK(r.str() ==
        "index,decision,step_pnl,cum_strategy,cum_benchmark,cum_benchmark_compounded,cum_optimal\n"
        "42,short,0.0125,0.0125,-0.0125,-0.012499999999999956,0.0125\n"
        "43,noop,0,0.0125,-0.0125,-0.012499999999999956,0.0125\n");

  TrainingResult t;
  t.grid = {{0.0, 0.1, 0.5}, {0.4, 0.0, -0.25}};
  std::ostringstream g;
  write_training_csv(g, t);
  CHECK(g.str() == "beta,gamma,train_return\n0,0.1,0.5\n0.4,0,-0.25\n");
}
