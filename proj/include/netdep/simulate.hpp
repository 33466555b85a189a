#pragma once

// Generators for network-dependent node data. Every generator draws from a
// single stream seeded by its config, so equal seeds give equal output and
// runs that differ only in the iteration count share their random prefix.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netdep/deptest.hpp"
#include "netdep/error.hpp"
#include "netdep/graph.hpp"
#include "netdep/random.hpp"

namespace netdep {

struct TransmissionConfig {
  double a = 0.5;        ///< weight on the neighbour mean, in [0,1]
  double sigma = 0.5;    ///< scale of the fresh error added at each step
  std::size_t kappa = 0; ///< number of transmission steps
  std::uint64_t seed = 0;
};

struct LatentConfig {
  double length_scale = 2.0;  ///< geodesic decay of the latent kernel
  double noise = 0.5;
  std::uint64_t seed = 0;
};

struct ConfoundConfig {
  double b = 0.5;  ///< effect of standardized degree
  double noise = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate(const TransmissionConfig& cfg) {
  if (!(cfg.a >= 0.0 && cfg.a <= 1.0)) throw input_error("bad-config", "transmission weight a must lie in [0,1]");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) throw input_error("bad-config", "sigma must be >= 0");
}

}  // namespace detail

/// Y(0) iid N(0,1); then kappa steps of
///   Y_i <- (1-a) Y_i + a * mean_{j ~ i} Y_j + sigma * eps_i.
/// An isolated node uses its own value as the neighbour mean.
inline NodeValues direct_transmission(const Network& net, const TransmissionConfig& cfg) {
  detail::validate(cfg);
  const std::size_t n = net.size();
  Rng rng = make_stream(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NodeValues y(n);
  for (auto& v : y) v = normal(rng);
  NodeValues next(n);
  for (std::size_t t = 0; t < cfg.kappa; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nb = net.neighbors(i);
      double mean = y[i];
      if (!nb.empty()) {
        double s = 0.0;
        for (std::size_t j : nb) s += y[j];
        mean = s / static_cast<double>(nb.size());
      }
      next[i] = (1.0 - cfg.a) * y[i] + cfg.a * mean;
    }
    for (std::size_t i = 0; i < n; ++i) next[i] += cfg.sigma * normal(rng);
    std::swap(y, next);
  }
  return y;
}

/// One transmission step as a row-stochastic matrix: (1-a) I + a D^-1 A,
/// with isolated rows left as the identity.
inline Eigen::MatrixXd transmission_operator(const Network& net, double a) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = net.neighbors(static_cast<std::size_t>(i));
    if (nb.empty()) {
      p(i, i) = 1.0;
      continue;
    }
    p(i, i) = 1.0 - a;
    const double share = a / static_cast<double>(nb.size());
    for (std::size_t j : nb) p(i, static_cast<Eigen::Index>(j)) += share;
  }
  return p;
}

/// Covariance of direct_transmission output. With P the step operator,
///   Sigma(0) = I,   Sigma(t) = P Sigma(t-1) P' + sigma^2 I,
/// i.e. Sigma(kappa) = P^k P^k' + sigma^2 sum_{s<k} P^s P^s'.
inline Eigen::MatrixXd transmission_covariance(const Network& net, double a, double sigma, std::size_t kappa) {
  const Eigen::MatrixXd p = transmission_operator(net, a);
  const auto n = p.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t t = 0; t < kappa; ++t) {
    cov = p * cov * p.transpose();
    cov.diagonal().array() += sigma * sigma;
  }
  return 0.5 * (cov + cov.transpose());
}

/// Latent-trait outcome: Z iid N(0,1), L_i a geodesic-kernel average of Z
/// over i's component with weights exp(-d(i,j)/length_scale), plus
/// noise * eps_i.
inline NodeValues latent_variable_outcome(const Network& net, const LatentConfig& cfg) {
  if (!(cfg.length_scale > 0.0)) throw input_error("bad-config", "length scale must be positive");
  if (!(cfg.noise >= 0.0)) throw input_error("bad-config", "noise must be >= 0");
  const std::size_t n = net.size();
  Rng rng = make_stream(cfg.seed);
  const auto z = standard_normals(rng, n);
  const auto eps = standard_normals(rng, n);
  const Eigen::MatrixXi d = geodesic_distances(net);
  NodeValues y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const int dij = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (dij == kUnreachable) continue;
      const double k = std::exp(-static_cast<double>(dij) / cfg.length_scale);
      num += k * z[j];
      den += k;
    }
    y[i] = num / den + cfg.noise * eps[i];
  }
  return y;
}

/// (deg_i - mean) / sd with the sample (n-1) standard deviation.
inline NodeValues standardized_degrees(const Network& net) {
  const auto deg = degrees(net);
  const double n = static_cast<double>(deg.size());
  const double mean = std::accumulate(deg.begin(), deg.end(), 0.0) / n;
  double ss = 0.0;
  for (auto d : deg) ss += (static_cast<double>(d) - mean) * (static_cast<double>(d) - mean);
  if (deg.size() < 2 || ss == 0.0) {
    throw degenerate_error("degenerate-degrees", "all nodes have the same degree");
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  NodeValues out(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) out[i] = (static_cast<double>(deg[i]) - mean) / sd;
  return out;
}

inline NodeValues degree_confounded_covariate(const Network& net, const ConfoundConfig& cfg) {
  if (!(cfg.noise > 0.0)) throw input_error("bad-config", "noise must be positive");
  const auto sdeg = standardized_degrees(net);
  Rng rng = make_stream(cfg.seed);
  const auto eps = standard_normals(rng, sdeg.size());
  NodeValues x(sdeg.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = cfg.b * sdeg[i] + cfg.noise * eps[i];
  return x;
}

/// Outcome whose mean rises with connectedness: c * standardized degree
/// plus noise. Makes degree a common cause of the outcome and of
/// degree_confounded_covariate.
inline NodeValues degree_driven_outcome(const Network& net, double c, double noise, std::uint64_t seed) {
  return degree_confounded_covariate(net, ConfoundConfig{c, noise, seed});
}

/// Two linear ramps in unit index with independent random signs:
/// x_i = s_x * i / n, y_i = s_y * i / n for i = 1..n.
inline std::pair<NodeValues, NodeValues> monotone_pair(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw input_error("bad-config", "monotone pair needs n >= 2");
  Rng rng = make_stream(seed);
  std::bernoulli_distribution coin(0.5);
  const double sx = coin(rng) ? 1.0 : -1.0;
  const double sy = coin(rng) ? 1.0 : -1.0;
  NodeValues x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ramp = static_cast<double>(i + 1) / static_cast<double>(n);
    x[i] = sx * ramp;
    y[i] = sy * ramp;
  }
  return {std::move(x), std::move(y)};
}

}  // namespace netdep
