#pragma once

// Estimation that assumes independence (sample mean, OLS) next to
// covariance-aware alternatives (GLS with a known covariance, and a
// one-random-effect linear mixed model fitted by maximum likelihood).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "netdep/error.hpp"

namespace netdep {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
  double center() const noexcept { return 0.5 * (lower + upper); }
};

/// z such that P(|Z| <= z) = level.
inline double two_sided_normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw input_error("bad-level", "confidence level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

inline Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw input_error("dimension-mismatch", "correlation needs two vectors of equal length >= 2");
  }
  const Eigen::ArrayXd a = to_vector(x).array() - to_vector(x).mean();
  const Eigen::ArrayXd b = to_vector(y).array() - to_vector(y).mean();
  const double den = std::sqrt((a * a).sum() * (b * b).sum());
  if (den == 0.0) throw degenerate_error("zero-variance", "correlation undefined for a constant vector");
  return (a * b).sum() / den;
}

// ---------------------------------------------------------------------------
// Sample mean

struct MeanEstimate {
  double ybar = 0.0;
  double se_naive = 0.0;  ///< s / sqrt(n), ignoring any covariance between units
  Interval ci;
  double level = 0.95;
};

inline MeanEstimate mean_ci_naive(std::span<const double> y, double level = 0.95) {
  if (y.size() < 2) throw input_error("too-few-values", "the sample mean interval needs n >= 2");
  const double n = static_cast<double>(y.size());
  MeanEstimate e;
  e.level = level;
  e.ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - e.ybar) * (v - e.ybar);
  e.se_naive = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  const double z = two_sided_normal_quantile(level);
  e.ci = {e.ybar - z * e.se_naive, e.ybar + z * e.se_naive};
  return e;
}

// ---------------------------------------------------------------------------
// Regression

struct RegressionFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  std::vector<Interval> ci;
  Eigen::VectorXd residuals;  ///< y - X beta on the original scale
  double sigma2 = 1.0;        ///< residual variance multiplying the coefficient covariance
  double level = 0.95;
};

/// Prepends a column of ones.
inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& covariates) {
  Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(covariates.cols()) = covariates;
  return x;
}

inline Eigen::MatrixXd with_intercept(std::span<const double> covariate) {
  return with_intercept(Eigen::MatrixXd(to_vector(covariate)));
}

namespace detail {

inline void check_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  if (x.rows() != y.size()) {
    throw input_error("dimension-mismatch", "design has " + std::to_string(x.rows()) + " rows but y has " +
                                                 std::to_string(y.size()) + " values");
  }
  if (x.cols() == 0 || x.rows() <= x.cols()) {
    throw input_error("too-few-values", "regression needs more observations than design columns");
  }
  if (!y.allFinite() || !x.allFinite()) throw input_error("non-finite", "regression inputs must be finite");
}

inline void fill_intervals(RegressionFit& fit, const Eigen::MatrixXd& coef_cov) {
  fit.se = coef_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double z = two_sided_normal_quantile(fit.level);
  fit.ci.clear();
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
    fit.ci.push_back({fit.beta(j) - z * fit.se(j), fit.beta(j) + z * fit.se(j)});
  }
}

/// Least squares on (y, x); returns beta, unscaled (X'X)^-1 and the
/// residual sum of squares.
struct LeastSquares {
  Eigen::VectorXd beta;
  Eigen::MatrixXd xtx_inv;
  double rss = 0.0;
};

inline LeastSquares least_squares(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    throw degenerate_error("singular-design", "design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                                                  " < " + std::to_string(x.cols()) + " columns)");
  }
  LeastSquares ls;
  ls.beta = qr.solve(y);
  // (X'X)^-1 = P R^-1 R^-T P'
  const auto p = x.cols();
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  ls.xtx_inv = qr.colsPermutation() * inner * qr.colsPermutation().transpose();
  ls.rss = (y - x * ls.beta).squaredNorm();
  return ls;
}

}  // namespace detail

/// Ordinary least squares with the iid standard errors s^2 (X'X)^-1.
inline RegressionFit ols(std::span<const double> y_values, const Eigen::MatrixXd& x, double level = 0.95) {
  const Eigen::VectorXd y = to_vector(y_values);
  detail::check_design(y, x);
  const auto ls = detail::least_squares(y, x);
  RegressionFit fit;
  fit.level = level;
  fit.beta = ls.beta;
  fit.residuals = y - x * ls.beta;
  fit.sigma2 = ls.rss / static_cast<double>(x.rows() - x.cols());
  detail::fill_intervals(fit, fit.sigma2 * ls.xtx_inv);
  return fit;
}

/// Log-likelihood of an iid Gaussian model at the ML variance rss / n.
inline double iid_gaussian_loglik(const Eigen::VectorXd& residuals) {
  const double n = static_cast<double>(residuals.size());
  const double s2 = residuals.squaredNorm() / n;
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
}

enum class GlsScale {
  known,     ///< coefficient covariance (X' S^-1 X)^-1; S is the full covariance
  estimated  ///< (X' S^-1 X)^-1 times the whitened residual variance; S known up to scale
};

/// Generalized least squares against a fixed covariance S:
/// beta = (X' S^-1 X)^-1 X' S^-1 y. The Cholesky factor of S is computed
/// once and reused across fits.
class GlsModel {
 public:
  explicit GlsModel(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
      throw input_error("bad-covariance", "covariance must be square and non-empty");
    }
    if (!sigma.allFinite() || (sigma - sigma.transpose()).norm() > 1e-10 * std::max(1.0, sigma.norm())) {
      throw input_error("bad-covariance", "covariance must be finite and symmetric");
    }
    llt_.compute(sigma);
    if (llt_.info() != Eigen::Success) throw input_error("bad-covariance", "covariance is not positive definite");
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(llt_.rows()); }

  RegressionFit fit(std::span<const double> y_values, const Eigen::MatrixXd& x, double level = 0.95,
                    GlsScale scale = GlsScale::known) const {
    const Eigen::VectorXd y = to_vector(y_values);
    detail::check_design(y, x);
    if (static_cast<std::size_t>(y.size()) != size()) {
      throw input_error("dimension-mismatch", "covariance must be n x n");
    }
    const Eigen::MatrixXd xw = llt_.matrixL().solve(x);
    const Eigen::VectorXd yw = llt_.matrixL().solve(y);
    const auto ls = detail::least_squares(yw, xw);

    RegressionFit fit;
    fit.level = level;
    fit.beta = ls.beta;
    fit.residuals = y - x * ls.beta;
    fit.sigma2 = scale == GlsScale::known ? 1.0 : ls.rss / static_cast<double>(x.rows() - x.cols());
    detail::fill_intervals(fit, fit.sigma2 * ls.xtx_inv);
    return fit;
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline RegressionFit gls(std::span<const double> y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma,
                         double level = 0.95, GlsScale scale = GlsScale::known) {
  if (sigma.rows() != static_cast<Eigen::Index>(y.size())) {
    throw input_error("dimension-mismatch", "covariance must be n x n");
  }
  return GlsModel(sigma).fit(y, x, level, scale);
}

// ---------------------------------------------------------------------------
// Linear mixed model  y = X beta + g + e,  cov(g) = sg2 K,  cov(e) = se2 I

struct LmmFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  std::vector<Interval> ci;
  double sigma_g2 = 0.0;
  double sigma_e2 = 0.0;
  double delta = 0.0;  ///< sigma_g2 / sigma_e2
  double loglik = 0.0;
  double level = 0.95;
};

/// Search settings for the variance ratio: a coarse grid over log(delta)
/// followed by golden-section refinement around the best grid point, and a
/// comparison with the delta = 0 boundary.
struct LmmSearch {
  double log_delta_min = -10.0;
  double log_delta_max = 10.0;
  std::size_t grid_points = 41;
  double tolerance = 1e-8;
};

/// Holds the eigendecomposition of K so repeated fits against the same
/// structure matrix only pay for the rotation.
class LmmModel {
 public:
  explicit LmmModel(const Eigen::MatrixXd& k, LmmSearch search = {}) : search_(search) {
    if (k.rows() != k.cols() || k.rows() == 0) throw input_error("bad-kinship", "structure matrix must be square");
    if (!k.allFinite() || (k - k.transpose()).norm() > 1e-10 * std::max(1.0, k.norm())) {
      throw input_error("bad-kinship", "structure matrix must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (k + k.transpose()));
    if (eig.info() != Eigen::Success) throw numeric_error("eigen-failed", "eigendecomposition of K failed");
    lambda_ = eig.eigenvalues();
    const double scale = std::max(1.0, lambda_.cwiseAbs().maxCoeff());
    if (lambda_.minCoeff() < -1e-8 * scale) {
      throw input_error("bad-kinship", "structure matrix is not positive semidefinite (min eigenvalue " +
                                           std::to_string(lambda_.minCoeff()) + ")");
    }
    lambda_ = lambda_.cwiseMax(0.0);
    rotation_ = eig.eigenvectors();
    degenerate_ = lambda_.maxCoeff() <= 1e-12 * scale;
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(lambda_.size()); }
  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }

  LmmFit fit(std::span<const double> y_values, const Eigen::MatrixXd& x, double level = 0.95) const {
    const Eigen::VectorXd y = to_vector(y_values);
    detail::check_design(y, x);
    if (static_cast<std::size_t>(y.size()) != size()) {
      throw input_error("dimension-mismatch", "structure matrix does not match the number of observations");
    }
    const Eigen::VectorXd yt = rotation_.transpose() * y;
    const Eigen::MatrixXd xt = rotation_.transpose() * x;
    // Fails early on a singular design.
    (void)detail::least_squares(yt, xt);

    double best_delta = 0.0;
    Profile best = profile(yt, xt, 0.0);
    if (!degenerate_) {
      const double log_delta = search_log_delta(yt, xt);
      const Profile interior = profile(yt, xt, std::exp(log_delta));
      if (interior.loglik > best.loglik) {
        best = interior;
        best_delta = std::exp(log_delta);
      }
    }
    if (!std::isfinite(best.loglik)) {
      throw numeric_error("lmm-failed", "likelihood is not finite at any variance ratio in [exp(" +
                                            std::to_string(search_.log_delta_min) + "), exp(" +
                                            std::to_string(search_.log_delta_max) + ")]");
    }

    LmmFit fit;
    fit.level = level;
    fit.beta = best.beta;
    fit.delta = best_delta;
    fit.sigma_e2 = best.sigma_e2;
    fit.sigma_g2 = best_delta * best.sigma_e2;
    fit.loglik = best.loglik;
    // ML variance with the n / (n - p) small-sample factor on the
    // coefficient covariance; with K = 0 this reproduces OLS exactly.
    const double n = static_cast<double>(x.rows());
    const double p = static_cast<double>(x.cols());
    const Eigen::MatrixXd cov = best.sigma_e2 * n / (n - p) * best.xtdx_inv;
    fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    const double z = two_sided_normal_quantile(level);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
      fit.ci.push_back({fit.beta(j) - z * fit.se(j), fit.beta(j) + z * fit.se(j)});
    }
    return fit;
  }

  /// Profile log-likelihood at a given variance ratio (beta and sigma_e2 at
  /// their conditional maxima).
  double profile_loglik(std::span<const double> y_values, const Eigen::MatrixXd& x, double delta) const {
    const Eigen::VectorXd y = to_vector(y_values);
    return profile(rotation_.transpose() * y, rotation_.transpose() * x, delta).loglik;
  }

 private:
  struct Profile {
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtdx_inv;
    double sigma_e2 = 0.0;
    double loglik = -std::numeric_limits<double>::infinity();
  };

  Profile profile(const Eigen::VectorXd& yt, const Eigen::MatrixXd& xt, double delta) const {
    const Eigen::ArrayXd d = delta * lambda_.array() + 1.0;
    const Eigen::ArrayXd inv_d = d.inverse();
    const Eigen::MatrixXd xw = xt.array().colwise() * inv_d;
    const Eigen::MatrixXd xtdx = xt.transpose() * xw;
    const Eigen::VectorXd xtdy = xw.transpose() * yt;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtdx);
    Profile pr;
    if (ldlt.info() != Eigen::Success) return pr;
    pr.beta = ldlt.solve(xtdy);
    pr.xtdx_inv = ldlt.solve(Eigen::MatrixXd::Identity(xt.cols(), xt.cols()));
    const Eigen::ArrayXd r = (yt - xt * pr.beta).array();
    const double n = static_cast<double>(yt.size());
    pr.sigma_e2 = (r * r * inv_d).sum() / n;
    if (!(pr.sigma_e2 > 0.0)) return pr;
    pr.loglik = -0.5 * (n * std::log(2.0 * std::numbers::pi * pr.sigma_e2) + d.log().sum() + n);
    return pr;
  }

  double search_log_delta(const Eigen::VectorXd& yt, const Eigen::MatrixXd& xt) const {
    auto objective = [&](double log_delta) { return profile(yt, xt, std::exp(log_delta)).loglik; };
    const double lo = search_.log_delta_min;
    const double hi = search_.log_delta_max;
    const std::size_t points = std::max<std::size_t>(search_.grid_points, 3);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points; ++i) {
      const double v = objective(lo + step * static_cast<double>(i));
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    double b = lo + step * static_cast<double>(std::min(best + 1, points - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > search_.tolerance) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = objective(d);
      }
    }
    const double mid = 0.5 * (a + b);
    const double grid_point = lo + step * static_cast<double>(best);
    return objective(mid) >= best_value ? mid : grid_point;
  }

  LmmSearch search_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd rotation_;
  bool degenerate_ = false;
};

inline LmmFit lmm_fit(std::span<const double> y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& k,
                      double level = 0.95) {
  return LmmModel(k).fit(y, x, level);
}

}  // namespace netdep
