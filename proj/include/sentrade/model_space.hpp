#pragma once

// Candidate regressor subsets, lagged rolling-window designs, and the
// p-value filter that splits surviving fits into financial and sentiment
// models.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sentrade/regression.hpp"
#include "sentrade/sessions.hpp"

namespace sentrade {

enum class VariableId : std::uint8_t {
  R1,  // return, lag 1
  R2,  // return, lag 2
  P1,  // positive count, lag 1
  N1,  // negative count, lag 1
  Z1,  // neutral count, lag 1
};

inline constexpr std::array<VariableId, 5> kAllVariables{VariableId::R1, VariableId::R2, VariableId::P1,
                                                         VariableId::N1, VariableId::Z1};

inline constexpr bool is_sentiment(VariableId v) { return v != VariableId::R1 && v != VariableId::R2; }

inline std::string_view to_string(VariableId v) {
  switch (v) {
    case VariableId::R1: return "R1";
    case VariableId::R2: return "R2";
    case VariableId::P1: return "P1";
    case VariableId::N1: return "N1";
    case VariableId::Z1: return "Z1";
  }
  return "?";
}

enum class ModelClass { Financial, Sentiment };

inline std::string_view to_string(ModelClass c) { return c == ModelClass::Financial ? "financial" : "sentiment"; }

inline constexpr std::uint8_t bit(VariableId v) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(v)); }
inline constexpr std::uint8_t kFinancialMask = bit(VariableId::R1) | bit(VariableId::R2);
inline constexpr std::uint8_t kSentimentMask = bit(VariableId::P1) | bit(VariableId::N1) | bit(VariableId::Z1);

/// A regressor subset, stored as a bitmask over kAllVariables.
struct CandidateModel {
  std::uint8_t mask = 0;
  ModelClass model_class = ModelClass::Financial;

  std::vector<VariableId> variables() const {
    std::vector<VariableId> out;
    for (auto v : kAllVariables)
      if (mask & bit(v)) out.push_back(v);
    return out;
  }

  std::size_t size() const { return variables().size(); }

  /// `R1+R2`, `P1+N1`, ...
  std::string label() const {
    std::string s;
    for (auto v : variables()) {
      if (!s.empty()) s += '+';
      s += to_string(v);
    }
    return s;
  }

  bool operator==(const CandidateModel&) const = default;
};

/// Classifies a non-empty subset, or returns nullopt for subsets that are not
/// candidates (return lags other than the {R1, R2} pair with no sentiment).
inline std::optional<CandidateModel> make_candidate(std::uint8_t mask) {
  if (mask == 0 || mask >= (1u << kAllVariables.size())) return std::nullopt;
  if (mask & kSentimentMask) return CandidateModel{mask, ModelClass::Sentiment};
  if (mask == kFinancialMask) return CandidateModel{mask, ModelClass::Financial};
  return std::nullopt;
}

/// The financial pair {R1, R2} plus every subset containing a sentiment
/// variable, in increasing bitmask order (29 models).
inline const std::vector<CandidateModel>& enumerate_candidates() {
  static const std::vector<CandidateModel> candidates = [] {
    std::vector<CandidateModel> out;
    for (unsigned m = 1; m < (1u << kAllVariables.size()); ++m)
      if (auto c = make_candidate(static_cast<std::uint8_t>(m))) out.push_back(*c);
    return out;
  }();
  return candidates;
}

struct DesignOptions {
  /// Use P/(P+N+Z) style fractions instead of raw counts (0 when a session has no messages).
  bool normalize_sentiment = false;
};

/// Value of `v` as a regressor for a row whose target is session `i`.
inline double regressor_value(const SessionSeries& series, VariableId v, std::size_t i, const DesignOptions& opts = {}) {
  auto count = [&](std::int64_t c, const Session& s) {
    if (!opts.normalize_sentiment) return static_cast<double>(c);
    const auto total = s.pos + s.neg + s.neu;
    return total > 0 ? static_cast<double>(c) / static_cast<double>(total) : 0.0;
  };
  switch (v) {
    case VariableId::R1: return series.returns[i - 1];
    case VariableId::R2: return series.returns[i - 2];
    case VariableId::P1: return count(series.sessions[i - 1].pos, series.sessions[i - 1]);
    case VariableId::N1: return count(series.sessions[i - 1].neg, series.sessions[i - 1]);
    case VariableId::Z1: return count(series.sessions[i - 1].neu, series.sessions[i - 1]);
  }
  return 0.0;
}

struct WindowDesign {
  DesignMatrix design;
  std::vector<double> prediction_row;  // regressors for the target session itself
};

/// Window of `w` rows ending just before target session `t`: rows t-w .. t-1
/// with y_i = returns[i]. Requires t - w >= 2 so that lag 2 exists for the
/// earliest row, and t <= series.size() (t == size() forecasts past the data).
inline WindowDesign build_design(const SessionSeries& series, std::span<const VariableId> variables, std::size_t t,
                                 std::size_t w, const DesignOptions& opts = {}) {
  if (series.returns.size() != series.sessions.size())
    throw std::invalid_argument("build_design: series has no returns");
  if (t < w + 2)
    throw std::out_of_range("build_design: window of " + std::to_string(w) + " ending before session " +
                            std::to_string(t) + " needs " + std::to_string(w + 2 - t) + " more session(s) of history");
  if (t > series.size()) throw std::out_of_range("build_design: target session beyond series end");
  WindowDesign out{DesignMatrix(w, variables.size()), {}};
  for (std::size_t r = 0; r < w; ++r) {
    const std::size_t i = t - w + r;
    out.design.target[r] = series.returns[i];
    for (std::size_t c = 0; c < variables.size(); ++c) out.design.at(r, c) = regressor_value(series, variables[c], i, opts);
  }
  for (auto v : variables) out.prediction_row.push_back(regressor_value(series, v, t, opts));
  return out;
}

struct FittedModel {
  CandidateModel candidate;
  FitResult fit;
  double predicted_next = 0.0;  // meaningful only when passed_filter
  bool passed_filter = false;
};

inline constexpr std::size_t kMinResidualDf = 3;

struct WindowOptions {
  double p_threshold = 0.10;
  DesignOptions design;
};

/// Fits every candidate on the window ending before `t`. A model passes when
/// its fit is full-rank, has at least kMinResidualDf residual degrees of
/// freedom, and every regressor p-value is strictly below the threshold.
inline std::vector<FittedModel> fit_window(const SessionSeries& series, std::size_t t, std::size_t w,
                                           const WindowOptions& opts = {}) {
  if (!(opts.p_threshold > 0.0 && opts.p_threshold < 1.0))
    throw std::invalid_argument("fit_window: p_threshold must be in (0, 1)");
  const auto& candidates = enumerate_candidates();
  std::vector<FittedModel> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto vars = c.variables();
    auto wd = build_design(series, vars, t, w, opts.design);
    FittedModel fm{c, {}, 0.0, false};
    if (w < vars.size() + 1 + kMinResidualDf) {
      fm.fit.residual_df = w >= vars.size() + 1 ? w - vars.size() - 1 : 0;
      out.push_back(std::move(fm));
      continue;
    }
    fm.fit = fit_ols(wd.design);
    if (fm.fit.rank_ok && fm.fit.max_p_value() < opts.p_threshold) {
      fm.passed_filter = true;
      fm.predicted_next = predict(fm.fit, wd.prediction_row);
    }
    out.push_back(std::move(fm));
  }
  return out;
}

}  // namespace sentrade
