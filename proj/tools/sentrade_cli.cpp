// sentrade: aggregate, train, backtest, and synth subcommands.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sentrade/sentrade.hpp"

namespace {

using namespace sentrade;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Errors carrying the file they came from.
struct FileDataError : DataError {
  FileDataError(const std::string& path, const std::string& what) : DataError(path + ": " + what) {}
};
struct FileConfigError : ConfigError {
  FileConfigError(const std::string& path, const std::string& what) : ConfigError(path + ": " + what) {}
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileDataError(path, "cannot open file");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileDataError(path, "cannot write file");
  return out;
}

template <class Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const FileDataError&) {
    throw;
  } catch (const FileConfigError&) {
    throw;
  } catch (const DataError& e) {
    throw FileDataError(path, e.what());
  } catch (const ConfigError& e) {
    throw FileConfigError(path, e.what());
  }
}

Config load_config(const std::string& config_path, const std::string& params_path) {
  Config cfg;
  if (!config_path.empty()) {
    auto in = open_input(config_path);
    cfg = with_path(config_path, [&] { return parse_config(in); });
  }
  if (!params_path.empty()) {
    auto in = open_input(params_path);
    with_path(params_path, [&] {
      const auto entries = kv::parse(in);
      for (const auto& e : entries)
        if (e.key != "beta" && e.key != "gamma") throw ConfigError("unexpected key `" + e.key + "` in params file");
      apply_entries(cfg, entries);
      if (!cfg.has_params()) throw ConfigError("params file must set beta and gamma");
      return 0;
    });
  }
  return cfg;
}

SessionSeries load_sessions(const std::string& path) {
  auto in = open_input(path);
  return with_path(path, [&] { return read_sessions_csv(in); });
}

struct AggregateArgs {
  std::string prices, sentiment, calendar, config, out, brand;
};

int cmd_aggregate(const AggregateArgs& a) {
  const Config cfg = load_config(a.config, {});
  auto prices_in = open_input(a.prices);
  auto sentiment_in = open_input(a.sentiment);
  auto calendar_in = open_input(a.calendar);
  const auto ticks = with_path(a.prices, [&] { return parse_ticks(prices_in); });
  const auto buckets = with_path(a.sentiment, [&] { return parse_buckets(sentiment_in); });
  const auto calendar = with_path(a.calendar, [&] { return parse_calendar(calendar_in); });

  const auto daily = session_prices(ticks, calendar, cfg.offset_minutes);
  for (const auto& w : daily.warnings) std::cerr << "warning: " << w << '\n';
  auto built = build_sessions(daily.days, buckets, a.brand);
  for (const auto& w : built.warnings) std::cerr << "warning: " << w << '\n';
  const auto series = compute_returns(std::move(built.series));

  const std::string path = a.out + "sessions.csv";
  auto out = open_output(path);
  write_sessions_csv(out, series);
  std::cerr << series.size() << " sessions (" << daily.days.size() << " trading days) written to " << path << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string sessions, config, out;
  unsigned threads = 1;
};

int cmd_train(const TrainArgs& a) {
  const Config cfg = load_config(a.config, {});
  const auto series = load_sessions(a.sessions);
  const auto result = train_params(series, cfg.training(a.threads));
  {
    auto out = open_output(a.out + "training.csv");
    write_training_csv(out, result);
  }
  {
    auto out = open_output(a.out + "params.txt");
    write_params(out, result.beta, result.gamma);
  }
  write_params(std::cout, result.beta, result.gamma);
  std::cerr << "training span: sessions [" << cfg.pipeline().warmup() << ", " << result.split_index
            << "), best train_return " << csv::format(result.train_return) << '\n';
  return kExitOk;
}

struct BacktestArgs {
  std::string sessions, config, params, out;
  unsigned threads = 1;
  bool dump_models = false;
};

int cmd_backtest(const BacktestArgs& a) {
  Config cfg = load_config(a.config, a.params);
  const auto series = load_sessions(a.sessions);
  const std::size_t split = split_index(series.size(), cfg.train_fraction);
  if (!cfg.has_params()) {
    std::cerr << "beta/gamma not supplied; training on the first " << split << " sessions\n";
    const auto trained = train_params(series, cfg.training(a.threads));
    cfg.beta = trained.beta;
    cfg.gamma = trained.gamma;
    std::cerr << "trained beta = " << csv::format(trained.beta) << ", gamma = " << csv::format(trained.gamma) << '\n';
  }
  const auto opts = cfg.pipeline(a.threads);
  const auto ev = evaluate(series, opts, split, series.size(), cfg.cost_per_trade);
  {
    auto out = open_output(a.out + "predictions.csv");
    write_predictions_csv(out, ev.run.records);
  }
  {
    auto out = open_output(a.out + "report.csv");
    write_report_csv(out, ev.ledger);
  }
  if (a.dump_models) {
    auto out = open_output(a.out + "models.csv");
    write_models_csv(out, series, ev.begin, ev.end, opts);
  }
  const std::size_t n_eval = ev.end - ev.begin;
  std::cerr << "fit time " << csv::format(ev.fit_seconds) << " s, " << csv::format(ev.fit_seconds / static_cast<double>(n_eval) * 1e3)
            << " ms per session over " << n_eval << " sessions\n";
  std::cout << "sessions " << ev.begin << ".." << ev.end - 1 << '\n'
            << "trades " << ev.ledger.n_trades << '\n'
            << "hit_rate " << csv::format(ev.ledger.hit_rate) << '\n'
            << "cum_strategy " << csv::format(ev.ledger.final_strategy()) << '\n'
            << "cum_benchmark " << csv::format(ev.ledger.final_benchmark()) << '\n'
            << "cum_optimal " << csv::format(ev.ledger.final_optimal()) << '\n';
  return kExitOk;
}

struct SynthArgs {
  std::string kind = "C";
  std::string config, out;
  SyntheticScenario scenario;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(SynthArgs a) {
  const auto kind = parse_scenario_kind(a.kind);
  if (!kind) throw ConfigError("--kind must be A, B, or C");
  a.scenario.kind = *kind;
  if (a.seed) a.scenario.seed = *a.seed;
  else if (!a.config.empty()) a.scenario.seed = load_config(a.config, {}).seed;
  const auto series = generate(a.scenario);
  const std::string path = a.out + "sessions.csv";
  auto out = open_output(path);
  write_synthetic_csv(out, a.scenario, series);
  std::cerr << series.size() << " synthetic sessions (kind " << to_string(*kind) << ", seed " << a.scenario.seed
            << ") written to " << path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentiment-aware adaptive trading backtester"};
  app.require_subcommand(1);
  std::function<int()> run;

  AggregateArgs agg;
  auto* aggregate = app.add_subcommand("aggregate", "Build the day/night sessions CSV from price ticks and sentiment buckets");
  aggregate->add_option("--prices", agg.prices, "Price ticks CSV (timestamp,price)")->required();
  aggregate->add_option("--sentiment", agg.sentiment, "Sentiment buckets CSV (bucket_start,positive,negative,neutral)")->required();
  aggregate->add_option("--calendar", agg.calendar, "Market calendar config")->required();
  aggregate->add_option("--config", agg.config, "Run config (offset_minutes)");
  aggregate->add_option("--brand", agg.brand, "Brand label");
  aggregate->add_option("--out", agg.out, "Output prefix")->required();
  aggregate->callback([&] { run = [&] { return cmd_aggregate(agg); }; });

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Grid-search beta/gamma on the training span");
  train->add_option("--sessions", tr.sessions, "Sessions CSV")->required();
  train->add_option("--config", tr.config, "Run config");
  train->add_option("--out", tr.out, "Output prefix")->required();
  train->add_option("--threads", tr.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  train->callback([&] { run = [&] { return cmd_train(tr); }; });

  BacktestArgs bt;
  auto* backtest = app.add_subcommand("backtest", "Run the adaptive strategy on the evaluation span");
  backtest->add_option("--sessions", bt.sessions, "Sessions CSV")->required();
  backtest->add_option("--config", bt.config, "Run config");
  backtest->add_option("--params", bt.params, "Params file (beta, gamma) written by train");
  backtest->add_option("--out", bt.out, "Output prefix")->required();
  backtest->add_option("--threads", bt.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  backtest->add_flag("--dump-models", bt.dump_models, "Also write models.csv");
  backtest->callback([&] { run = [&] { return cmd_backtest(bt); }; });

  SynthArgs sy;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sessions CSV");
  synth->add_option("--kind", sy.kind, "A (autoregressive), B (sentiment-driven), C (noise)")->required();
  synth->add_option("-n,--sessions", sy.scenario.n_sessions, "Number of sessions");
  synth->add_option("--signal", sy.scenario.signal_strength, "Sentiment signal strength (kind B)");
  synth->add_option("--noise", sy.scenario.noise_sigma, "Return noise sigma");
  synth->add_option("--a1", sy.scenario.ar1, "Lag-1 coefficient (kind A)");
  synth->add_option("--a2", sy.scenario.ar2, "Lag-2 coefficient (kind A)");
  auto* seed_opt = synth->add_option("--seed", seed, "Seed (default: config seed)");
  synth->add_option("--config", sy.config, "Run config (seed)");
  synth->add_option("--out", sy.out, "Output prefix")->required();
  synth->callback([&] {
    if (seed_opt->count()) sy.seed = seed;
    run = [&] { return cmd_synth(sy); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return run();
  } catch (const ConfigError& e) {
    std::cerr << "sentrade: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "sentrade: error: " << e.what() << '\n';
    return kExitData;
  }
}
