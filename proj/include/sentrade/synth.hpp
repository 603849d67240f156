#pragma once

// Seeded synthetic session series with a planted signal, used to exercise
// the adaptive pipeline where the right answer is known.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "sentrade/csv.hpp"
#include "sentrade/sessions.hpp"

namespace sentrade {

enum class ScenarioKind {
  Autoregressive,   // A: R_t = a1 R_{t-1} + a2 R_{t-2} + e
  SentimentDriven,  // B: R_t = c (P_{t-1} - N_{t-1}) / scale + e
  Noise,            // C: R_t = e, counts independent
};

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Autoregressive: return "A";
    case ScenarioKind::SentimentDriven: return "B";
    case ScenarioKind::Noise: return "C";
  }
  return "?";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  if (s == "A" || s == "a") return ScenarioKind::Autoregressive;
  if (s == "B" || s == "b") return ScenarioKind::SentimentDriven;
  if (s == "C" || s == "c") return ScenarioKind::Noise;
  return std::nullopt;
}

struct SyntheticScenario {
  ScenarioKind kind = ScenarioKind::Noise;
  std::size_t n_sessions = 200;
  double signal_strength = 0.02;  // c for kind B
  double noise_sigma = 0.001;
  std::uint64_t seed = 7;
  double ar1 = 1.0;  // kind A
  double ar2 = -0.8;  // kind A
  double count_mean = 100.0;  // also the kind B scale
  double count_sd = 20.0;
  std::size_t burn_in = 50;
};

/// mt19937_64 with a fixed Box-Muller transform, so draws are identical on
/// every standard library.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53 random bits in (0, 1)
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    const double u1 = uniform(), u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

/// Builds a valid session series: prices chain so each session opens at the
/// previous close, Day sessions run 14:00-19:30 UTC on weekdays starting
/// Monday 2012-06-18, and Nights fill the gaps.
inline SessionSeries generate(const SyntheticScenario& sc) {
  using namespace std::chrono;
  if (sc.n_sessions < 2) throw std::invalid_argument("synthetic scenario needs at least 2 sessions");
  if (!(sc.noise_sigma >= 0.0) || !(sc.count_mean > 0.0) || !(sc.count_sd >= 0.0))
    throw std::invalid_argument("synthetic scenario: bad noise or count parameters");
  NormalSource rng(sc.seed);
  const std::size_t total = sc.burn_in + sc.n_sessions;
  std::vector<double> ret(total, 0.0);
  std::vector<std::int64_t> pos(total), neg(total), neu(total);
  auto count = [&] {
    const double v = std::round(sc.count_mean + sc.count_sd * rng.normal());
    return static_cast<std::int64_t>(std::max(0.0, v));
  };
  for (std::size_t t = 0; t < total; ++t) {
    pos[t] = count();
    neg[t] = count();
    neu[t] = count();
    const double eps = sc.noise_sigma * rng.normal();
    double r = eps;
    switch (sc.kind) {
      case ScenarioKind::Autoregressive:
        r += sc.ar1 * (t >= 1 ? ret[t - 1] : 0.0) + sc.ar2 * (t >= 2 ? ret[t - 2] : 0.0);
        break;
      case ScenarioKind::SentimentDriven:
        if (t >= 1) r += sc.signal_strength * static_cast<double>(pos[t - 1] - neg[t - 1]) / sc.count_mean;
        break;
      case ScenarioKind::Noise:
        break;
    }
    ret[t] = std::max(r, -0.5);
  }

  SessionSeries series;
  series.brand = "synthetic-" + std::string(to_string(sc.kind));
  sys_days day = sys_days{2012y / June / 18};
  double price = 100.0;
  for (std::size_t i = 0; i < sc.n_sessions; ++i) {
    const std::size_t t = sc.burn_in + i;
    Session s;
    s.index = i;
    s.kind = i % 2 == 0 ? SessionKind::Day : SessionKind::Night;
    if (s.kind == SessionKind::Day) {
      s.open_time = Instant{day + hours{14}};
      s.close_time = Instant{day + hours{19} + minutes{30}};
    } else {
      s.open_time = Instant{day + hours{19} + minutes{30}};
      do day += days{1};
      while (weekday{day} == Saturday || weekday{day} == Sunday);
      s.close_time = Instant{day + hours{14}};
    }
    s.open_price = price;
    s.close_price = price * (1.0 + ret[t]);
    price = s.close_price;
    s.pos = pos[t];
    s.neg = neg[t];
    s.neu = neu[t];
    series.sessions.push_back(s);
  }
  return compute_returns(std::move(series));
}

/// Sessions CSV preceded by `#` comment lines recording the scenario.
inline void write_synthetic_csv(std::ostream& out, const SyntheticScenario& sc, const SessionSeries& series) {
  out << "# kind=" << to_string(sc.kind) << '\n'
      << "# n_sessions=" << sc.n_sessions << '\n'
      << "# signal_strength=" << csv::format(sc.signal_strength) << '\n'
      << "# noise_sigma=" << csv::format(sc.noise_sigma) << '\n'
      << "# ar1=" << csv::format(sc.ar1) << '\n'
      << "# ar2=" << csv::format(sc.ar2) << '\n'
      << "# count_mean=" << csv::format(sc.count_mean) << '\n'
      << "# count_sd=" << csv::format(sc.count_sd) << '\n'
      << "# seed=" << sc.seed << '\n';
  write_sessions_csv(out, series);
}

}  // namespace sentrade
