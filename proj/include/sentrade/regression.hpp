#pragma once

// Ordinary least squares with an intercept, coefficient inference, and
// Student-t p-values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sentrade/error.hpp"

namespace sentrade {

/// n x k regressors (row-major, intercept excluded) and the n-vector target.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<double> target;

  DesignMatrix() = default;
  DesignMatrix(std::size_t n, std::size_t k) : rows(n), cols(k), values(n * k, 0.0), target(n, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct FitResult {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::size_t residual_df = 0;
  bool rank_ok = false;
  /// Condition number of the column-equilibrated normal-equations matrix.
  double condition = std::numeric_limits<double>::infinity();

  double max_p_value() const {
    double m = 0.0;
    for (double p : p_values) m = std::max(m, p);
    return m;
  }
};

inline constexpr double kMaxNormalCondition = 1e10;

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete beta requires a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= t_abs) for Student's t with `df` degrees of freedom.
inline double two_sided_t_pvalue(double t_abs, double df) {
  if (!(df >= 1.0)) throw std::invalid_argument("two_sided_t_pvalue: df must be >= 1, got " + std::to_string(df));
  if (std::isnan(t_abs) || t_abs < 0.0) throw std::invalid_argument("two_sided_t_pvalue: t_abs must be >= 0");
  if (t_abs == 0.0) return 1.0;
  if (std::isinf(t_abs)) return 0.0;
  // x = df / (df + t^2), written to avoid cancellation for large t.
  const double ratio = df / (t_abs * t_abs);
  const double x = ratio / (1.0 + ratio);
  const double p = regularized_incomplete_beta(0.5 * df, 0.5, x);
  return std::clamp(p, 0.0, 1.0);
}

/// OLS with a prepended intercept column. Columns are scaled to unit norm
/// before an SVD, which gives the solve, the covariance diagonal, and the
/// rank diagnostic. A condition number of the scaled normal-equations matrix
/// above `max_condition` marks the fit rank-deficient and leaves the
/// inference vectors empty.
inline FitResult fit_ols(const DesignMatrix& design, double max_condition = kMaxNormalCondition) {
  const std::size_t n = design.rows, k = design.cols;
  if (design.values.size() != n * k || design.target.size() != n)
    throw std::invalid_argument("fit_ols: design storage does not match its shape");
  if (n < k + 2)
    throw std::invalid_argument("fit_ols: need n >= k + 2 rows, got n=" + std::to_string(n) + " k=" + std::to_string(k));
  for (double v : design.values)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_ols: non-finite regressor value");
  for (double v : design.target)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_ols: non-finite target value");

  const auto p = static_cast<Eigen::Index>(k + 1);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a(rows, p);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    a(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < p; ++c) a(r, c) = design.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c - 1));
    y(r) = design.target[static_cast<std::size_t>(r)];
  }

  FitResult fit;
  fit.residual_df = n - k - 1;

  Eigen::VectorXd scale(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double norm = a.col(c).norm();
    if (norm == 0.0) return fit;  // all-zero column: singular
    scale(c) = 1.0 / norm;
    a.col(c) *= scale(c);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(p - 1);
  fit.condition = smin > 0.0 ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
  if (!(fit.condition <= max_condition)) return fit;
  fit.rank_ok = true;

  const Eigen::VectorXd inv_sv = sv.cwiseInverse();
  const Eigen::VectorXd beta_scaled = svd.matrixV() * (inv_sv.asDiagonal() * (svd.matrixU().transpose() * y));
  const Eigen::VectorXd residual = y - a * beta_scaled;
  const double sigma2 = residual.squaredNorm() / static_cast<double>(fit.residual_df);
  // diag((A'A)^-1) = row norms of V * S^-1
  const Eigen::MatrixXd vs = svd.matrixV() * inv_sv.asDiagonal();

  fit.intercept = beta_scaled(0) * scale(0);
  for (Eigen::Index c = 1; c < p; ++c) {
    const double coef = beta_scaled(c) * scale(c);
    const double se = std::sqrt(sigma2 * vs.row(c).squaredNorm()) * scale(c);
    double t = 0.0;
    if (se > 0.0) t = coef / se;
    else if (coef != 0.0) t = std::copysign(std::numeric_limits<double>::infinity(), coef);
    fit.coefficients.push_back(coef);
    fit.std_errors.push_back(se);
    fit.t_stats.push_back(t);
    fit.p_values.push_back(two_sided_t_pvalue(std::fabs(t), static_cast<double>(fit.residual_df)));
  }
  return fit;
}

/// Point prediction intercept + coefficients . x_row.
inline double predict(const FitResult& fit, std::span<const double> x_row) {
  if (!fit.rank_ok) throw std::invalid_argument("predict: fit is rank-deficient");
  if (x_row.size() != fit.coefficients.size())
    throw std::invalid_argument("predict: expected " + std::to_string(fit.coefficients.size()) + " regressors, got " +
                                std::to_string(x_row.size()));
  double y = fit.intercept;
  for (std::size_t i = 0; i < x_row.size(); ++i) y += fit.coefficients[i] * x_row[i];
  return y;
}

}  // namespace sentrade
