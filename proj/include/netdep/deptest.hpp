#pragma once

// Global autocorrelation statistics on network weight matrices: Moran's I,
// Geary's c, randomization-null moments of I, exhaustive enumeration of the
// permutation null for tiny n, and a seeded permutation engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdep/error.hpp"
#include "netdep/graph.hpp"
#include "netdep/random.hpp"

namespace netdep {

using NodeValues = std::vector<double>;

enum class Tail { upper, lower, two_sided };

struct NullMoments {
  double mean_i = 0.0;
  double var_i = 0.0;
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double b2 = 0.0;  ///< sample kurtosis n * sum z^4 / (sum z^2)^2
};

struct PermutationConfig {
  std::size_t m = 500;
  std::uint64_t seed = 0;
  Tail tail = Tail::upper;
  unsigned threads = 1;
};

/// Sample size below which the normal-approximation p-value is withheld.
inline constexpr std::size_t kMinNormalApproxN = 30;

struct MoranResult {
  std::size_t n = 0;
  double i_stat = 0.0;
  std::optional<double> i_std;
  std::optional<NullMoments> moments;
  std::optional<double> p_normal;
  std::optional<double> p_perm;
  std::size_t m_used = 0;
  Tail tail = Tail::upper;
  std::vector<std::string> warnings;
};

struct GearyResult {
  std::size_t n = 0;
  double c_stat = 0.0;
  std::optional<double> p_perm;  ///< small c indicates positive dependence
  std::size_t m_used = 0;
};

namespace detail {

struct Centered {
  std::vector<double> z;
  double sum_sq = 0.0;
};

inline void check_values(std::span<const double> y, const WeightMatrix& w) {
  if (y.size() != w.size()) {
    throw input_error("dimension-mismatch", "values have length " + std::to_string(y.size()) +
                                                 " but the weight matrix is " + std::to_string(w.size()) + "x" +
                                                 std::to_string(w.size()));
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw input_error("non-finite", "values must be finite");
  }
}

/// Centers y and rejects (numerically) constant vectors.
inline Centered center(std::span<const double> y) {
  const auto n = static_cast<double>(y.size());
  Centered c;
  c.z.assign(y.begin(), y.end());
  const double mean = std::accumulate(c.z.begin(), c.z.end(), 0.0) / n;
  double scale = 0.0;
  for (auto& v : c.z) {
    scale = std::max(scale, std::abs(v));
    v -= mean;
    c.sum_sq += v * v;
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (y.size() < 2 || c.sum_sq <= n * floor * floor) {
    throw degenerate_error("zero-variance", "values have zero variance");
  }
  return c;
}

inline double cross_product_sum(const WeightMatrix& w, std::span<const double> z) {
  double acc = 0.0;
  for (const auto& e : w.entries()) acc += e.w * z[e.i] * z[e.j];
  return acc;
}

inline double moran_from_centered(const WeightMatrix& w, std::span<const double> z, double sum_sq) {
  return static_cast<double>(z.size()) / w.s0() * cross_product_sum(w, z) / sum_sq;
}

inline double geary_from_values(const WeightMatrix& w, std::span<const double> y, double sum_sq) {
  double acc = 0.0;
  for (const auto& e : w.entries()) {
    const double d = y[e.i] - y[e.j];
    acc += e.w * d * d;
  }
  return (static_cast<double>(y.size()) - 1.0) * acc / (2.0 * w.s0() * sum_sq);
}

inline bool is_extreme(double permuted, double observed, double center, Tail tail) {
  // Permuting reorders the floating-point sums, so statistics that are equal
  // in exact arithmetic can differ by a few ulps; those count as ties.
  auto tie_tol = [](double ref) { return 1e-12 * std::max(1.0, std::abs(ref)); };
  switch (tail) {
    case Tail::upper:
      return permuted >= observed - tie_tol(observed);
    case Tail::lower:
      return permuted <= observed + tie_tol(observed);
    case Tail::two_sided: {
      const double dev = std::abs(observed - center);
      return std::abs(permuted - center) >= dev - tie_tol(dev);
    }
  }
  return false;
}

}  // namespace detail

/// (1 + extreme) / (m + 1); never zero.
inline double permutation_p_value(std::size_t extreme, std::size_t m) {
  return (1.0 + static_cast<double>(extreme)) / (static_cast<double>(m) + 1.0);
}

/// Upper-tail standard normal probability P(Z >= z).
inline double upper_tail_normal(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double normal_p_value(double z, Tail tail) {
  switch (tail) {
    case Tail::upper:
      return upper_tail_normal(z);
    case Tail::lower:
      return upper_tail_normal(-z);
    case Tail::two_sided:
      return std::min(1.0, 2.0 * upper_tail_normal(std::abs(z)));
  }
  return 1.0;
}

inline double morans_i(std::span<const double> y, const WeightMatrix& w) {
  detail::check_values(y, w);
  const auto c = detail::center(y);
  return detail::moran_from_centered(w, c.z, c.sum_sq);
}

inline double gearys_c(std::span<const double> y, const WeightMatrix& w) {
  detail::check_values(y, w);
  const auto c = detail::center(y);
  return detail::geary_from_values(w, y, c.sum_sq);
}

/// Mean and variance of I under uniformly random relabelling of y
/// (randomization assumption, with the kurtosis term).
inline NullMoments null_moments(std::span<const double> y, const WeightMatrix& w) {
  detail::check_values(y, w);
  const std::size_t n_nodes = y.size();
  if (n_nodes < 4) {
    throw degenerate_error("analytic-moments-unavailable",
                           "analytic null moments need n >= 4; use the permutation test");
  }
  const auto c = detail::center(y);
  const auto& wd = w.dense();
  const double n = static_cast<double>(n_nodes);

  NullMoments m;
  m.s0 = w.s0();
  const Eigen::MatrixXd sym = wd + wd.transpose();
  m.s1 = 0.5 * sym.array().square().sum();
  m.s2 = (wd.rowwise().sum() + wd.colwise().sum().transpose()).array().square().sum();
  double sum_z4 = 0.0;
  for (double v : c.z) sum_z4 += v * v * v * v;
  m.b2 = n * sum_z4 / (c.sum_sq * c.sum_sq);

  const double s0sq = m.s0 * m.s0;
  const double numer = n * ((n * n - 3.0 * n + 3.0) * m.s1 - n * m.s2 + 3.0 * s0sq) -
                       m.b2 * ((n * n - n) * m.s1 - 2.0 * n * m.s2 + 6.0 * s0sq);
  const double second_moment = numer / ((n - 1.0) * (n - 2.0) * (n - 3.0) * s0sq);
  m.mean_i = -1.0 / (n - 1.0);
  m.var_i = second_moment - m.mean_i * m.mean_i;
  return m;
}

/// Exact permutation null of I by visiting all n! relabellings.
struct EnumeratedNull {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> values;
};

inline constexpr std::size_t kMaxEnumerationN = 8;

inline EnumeratedNull enumerate_null(std::span<const double> y, const WeightMatrix& w) {
  detail::check_values(y, w);
  if (y.size() > kMaxEnumerationN) {
    throw input_error("too-large-for-enumeration",
                      "exhaustive enumeration is limited to n <= " + std::to_string(kMaxEnumerationN));
  }
  const auto c = detail::center(y);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> permuted(y.size());
  EnumeratedNull out;
  do {
    for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = c.z[order[i]];
    out.values.push_back(detail::moran_from_centered(w, permuted, c.sum_sq));
  } while (std::next_permutation(order.begin(), order.end()));

  const double count = static_cast<double>(out.values.size());
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / count;
  double ss = 0.0;
  for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
  out.variance = ss / count;
  return out;
}

/// Generic seeded permutation engine. Replicate k shuffles its own copy of
/// `values` with a stream derived from (cfg.seed, k), so the result is the
/// same for any thread count. `statistic` receives the permuted vector.
template <class Statistic>
std::size_t count_extreme_permutations(std::span<const double> values, double observed, double center,
                                       const PermutationConfig& cfg, Statistic&& statistic) {
  if (cfg.m == 0) throw input_error("bad-permutations", "permutation count must be at least 1");
  std::vector<char> extreme(cfg.m, 0);
  parallel_for(cfg.m, cfg.threads, [&](std::size_t k) {
    std::vector<double> permuted(values.begin(), values.end());
    Rng rng = make_stream(cfg.seed, {k});
    std::shuffle(permuted.begin(), permuted.end(), rng);
    extreme[k] = detail::is_extreme(statistic(std::span<const double>(permuted)), observed, center, cfg.tail) ? 1 : 0;
  });
  return static_cast<std::size_t>(std::count(extreme.begin(), extreme.end(), char{1}));
}

/// All permuted statistics in replicate order (diagnostics and tests).
template <class Statistic>
std::vector<double> permutation_distribution(std::span<const double> values, const PermutationConfig& cfg,
                                             Statistic&& statistic) {
  std::vector<double> out(cfg.m);
  parallel_for(cfg.m, cfg.threads, [&](std::size_t k) {
    std::vector<double> permuted(values.begin(), values.end());
    Rng rng = make_stream(cfg.seed, {k});
    std::shuffle(permuted.begin(), permuted.end(), rng);
    out[k] = statistic(std::span<const double>(permuted));
  });
  return out;
}

namespace detail {

inline void attach_moments(MoranResult& r, std::span<const double> y, const WeightMatrix& w,
                           std::size_t min_normal_n) {
  r.moments = null_moments(y, w);
  const auto& m = *r.moments;
  if (m.var_i > 1e-14 * m.mean_i * m.mean_i) {
    r.i_std = (r.i_stat - m.mean_i) / std::sqrt(m.var_i);
  } else {
    r.warnings.push_back("null variance of I is zero for this weight matrix; I_std undefined");
    return;
  }
  if (r.n >= min_normal_n) {
    r.p_normal = normal_p_value(*r.i_std, r.tail);
  } else {
    r.warnings.push_back("normal approximation withheld for n = " + std::to_string(r.n) + " < " +
                         std::to_string(min_normal_n) + "; use the permutation p-value");
  }
}

}  // namespace detail

/// Moran permutation test. Also fills the analytic moments, I_std and the
/// normal p-value when they are available (n >= 4, n >= min_normal_n).
inline MoranResult permutation_test(std::span<const double> y, const WeightMatrix& w, const PermutationConfig& cfg,
                                    std::size_t min_normal_n = kMinNormalApproxN) {
  detail::check_values(y, w);
  const auto c = detail::center(y);
  MoranResult r;
  r.n = y.size();
  r.tail = cfg.tail;
  r.i_stat = detail::moran_from_centered(w, c.z, c.sum_sq);
  const double center = -1.0 / (static_cast<double>(r.n) - 1.0);
  const std::size_t extreme =
      count_extreme_permutations(c.z, r.i_stat, center, cfg, [&](std::span<const double> z) {
        return detail::moran_from_centered(w, z, c.sum_sq);
      });
  r.p_perm = permutation_p_value(extreme, cfg.m);
  r.m_used = cfg.m;
  if (r.n >= 4) detail::attach_moments(r, y, w, min_normal_n);
  return r;
}

/// Moran test against the normal approximation only.
inline MoranResult normal_test(std::span<const double> y, const WeightMatrix& w, Tail tail = Tail::upper,
                               std::size_t min_normal_n = kMinNormalApproxN) {
  detail::check_values(y, w);
  if (y.size() < 4) {
    throw degenerate_error("analytic-moments-unavailable",
                           "analytic null moments need n >= 4; use the permutation test");
  }
  MoranResult r;
  r.n = y.size();
  r.tail = tail;
  r.i_stat = morans_i(y, w);
  detail::attach_moments(r, y, w, min_normal_n);
  return r;
}

/// Geary permutation test. cfg.tail refers to c itself, so positive
/// dependence (c below 1) is tested with Tail::lower.
inline GearyResult geary_test(std::span<const double> y, const WeightMatrix& w, const PermutationConfig& cfg) {
  detail::check_values(y, w);
  const auto c = detail::center(y);
  GearyResult r;
  r.n = y.size();
  r.c_stat = detail::geary_from_values(w, y, c.sum_sq);
  const std::size_t extreme = count_extreme_permutations(
      y, r.c_stat, 1.0, cfg, [&](std::span<const double> v) { return detail::geary_from_values(w, v, c.sum_sq); });
  r.p_perm = permutation_p_value(extreme, cfg.m);
  r.m_used = cfg.m;
  return r;
}

}  // namespace netdep
