#pragma once

// Seeded synthetic regimes shared by the unit tests and the acceptance suite.

#include <cstdint>

#include "sentrade/synth.hpp"

namespace scenarios {

inline sentrade::SyntheticScenario autoregressive(std::uint64_t seed = 11, std::size_t n = 300) {
  sentrade::SyntheticScenario s;
  s.kind = sentrade::ScenarioKind::Autoregressive;
  s.n_sessions = n;
  s.seed = seed;
  return s;
}

inline sentrade::SyntheticScenario sentiment_driven(std::uint64_t seed = 11, std::size_t n = 200) {
  sentrade::SyntheticScenario s;
  s.kind = sentrade::ScenarioKind::SentimentDriven;
  s.n_sessions = n;
  s.seed = seed;
  return s;
}

inline sentrade::SyntheticScenario noise(std::uint64_t seed, std::size_t n = 200) {
  sentrade::SyntheticScenario s;
  s.kind = sentrade::ScenarioKind::Noise;
  s.n_sessions = n;
  s.seed = seed;
  return s;
}

}  // namespace scenarios
