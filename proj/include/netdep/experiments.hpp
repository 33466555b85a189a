#pragma once

// Seeded Monte Carlo studies of what network dependence does to naive
// inference, and of the covariance-aware fixes.
//
// Seeds. Replicate r of every setting draws its data from streams derived
// from (seed, r, role) only, so settings that differ in kappa, lambda or the
// effect size see common random numbers. Permutation tests get their own
// (seed, r, role) streams. Replicates run in parallel; per-replicate results
// are stored by index and reduced in order, so reports are identical for
// any thread count.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "netdep/deptest.hpp"
#include "netdep/error.hpp"
#include "netdep/graph.hpp"
#include "netdep/inference.hpp"
#include "netdep/random.hpp"
#include "netdep/simulate.hpp"

namespace netdep {

inline constexpr int kReportSchemaVersion = 1;

struct SettingSummary {
  std::string label;
  std::string method;
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<double> effect;
  std::size_t replicates = 0;
  double truth = 0.0;  ///< the estimand: mu = 0 or beta = 0
  std::optional<double> coverage;
  std::optional<double> bias;
  std::optional<double> mean_abs_error;
  std::optional<double> mean_se;
  std::optional<double> sd_estimate;
  std::optional<double> reject_y;
  std::optional<double> reject_x;
  std::optional<double> reject_residuals;
  std::vector<std::pair<std::string, double>> extras;

  std::optional<double> extra(const std::string& key) const {
    for (const auto& [k, v] : extras) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

struct ReplicateRow {
  std::string setting;
  std::size_t replicate = 0;
  std::vector<double> values;
};

struct ExperimentReport {
  std::string name;
  nlohmann::ordered_json config;
  std::vector<SettingSummary> settings;
  std::vector<std::string> replicate_columns;
  std::vector<ReplicateRow> replicates;

  const SettingSummary& setting(const std::string& label) const {
    for (const auto& s : settings) {
      if (s.label == label) return s;
    }
    throw input_error("unknown-setting", "report '" + name + "' has no setting '" + label + "'");
  }
};

/// Options shared by every experiment.
struct MonteCarloOptions {
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t permutations = 500;
  double alpha = 0.05;
  double level = 0.95;
  bool keep_replicates = false;
};

namespace detail {

/// Order-preserving reduction of point estimates against a known truth.
struct EstimateAccumulator {
  std::vector<double> estimate;
  std::vector<double> se;
  std::vector<char> covered;

  explicit EstimateAccumulator(std::size_t reps) : estimate(reps), se(reps), covered(reps) {}

  void set(std::size_t r, double est, double s, bool cov) {
    estimate[r] = est;
    se[r] = s;
    covered[r] = cov ? 1 : 0;
  }

  void summarize(SettingSummary& out) const {
    const double n = static_cast<double>(estimate.size());
    double sum = 0.0, abs_err = 0.0, se_sum = 0.0, hits = 0.0;
    for (std::size_t r = 0; r < estimate.size(); ++r) {
      sum += estimate[r];
      abs_err += std::abs(estimate[r] - out.truth);
      se_sum += se[r];
      hits += covered[r];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double e : estimate) ss += (e - mean) * (e - mean);
    out.replicates = estimate.size();
    out.coverage = hits / n;
    out.bias = mean - out.truth;
    out.mean_abs_error = abs_err / n;
    out.mean_se = se_sum / n;
    out.sd_estimate = estimate.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
};

inline double fraction(const std::vector<char>& flags) {
  if (flags.empty()) return 0.0;
  return static_cast<double>(std::count(flags.begin(), flags.end(), char{1})) / static_cast<double>(flags.size());
}

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline void validate(const MonteCarloOptions& o, std::size_t min_reps = 1) {
  if (o.reps < min_reps) {
    throw input_error("bad-config", "need at least " + std::to_string(min_reps) + " replicates");
  }
  if (o.permutations == 0) throw input_error("bad-permutations", "permutation count must be at least 1");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw input_error("bad-config", "alpha must lie in (0,1)");
  if (!(o.level > 0.0 && o.level < 1.0)) throw input_error("bad-level", "confidence level must lie in (0,1)");
}

inline nlohmann::ordered_json options_json(const MonteCarloOptions& o) {
  nlohmann::ordered_json j;
  j["reps"] = o.reps;
  j["seed"] = o.seed;
  j["permutations"] = o.permutations;
  j["alpha"] = o.alpha;
  j["level"] = o.level;
  return j;
}

inline nlohmann::ordered_json network_json(const Network& net) {
  return {{"nodes", net.size()}, {"edges", net.edge_count()}};
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string kappa_label(std::size_t k) { return "kappa=" + std::to_string(k); }

/// One-sided upper-tail Moran permutation p-value, or 1 when the vector is
/// constant (nothing to detect).
inline double moran_p(std::span<const double> y, const WeightMatrix& w, std::size_t m, std::uint64_t seed) {
  try {
    return *permutation_test(y, w, PermutationConfig{m, seed, Tail::upper, 1}).p_perm;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::degenerate) return 1.0;
    throw;
  }
}

// Stream roles within a replicate.
enum Role : std::uint64_t { role_x = 0, role_y = 1, role_shuffle = 2, role_perm_y = 10, role_perm_x = 11,
                            role_perm_resid = 12 };

}  // namespace detail

// ---------------------------------------------------------------------------
// Correlation between independent dependent series

struct CorrelationDistributionParams {
  std::vector<double> sigmas{2.0, 0.5, 0.05};
  double a = 0.9;
  std::size_t kappa = 10;
  bool include_iid = true;
  double threshold = 0.5;  ///< reported fraction of |rho| above this
};

/// X and Y drawn independently by direct_transmission on the same network;
/// records their Pearson correlation per replicate. The iid setting uses
/// standard-normal X and Y.
inline ExperimentReport run_correlation_distribution(const Network& net, const CorrelationDistributionParams& p,
                                                     const MonteCarloOptions& o) {
  detail::validate(o, 100);
  if (p.sigmas.empty() && !p.include_iid) throw input_error("bad-config", "no settings requested");
  ExperimentReport rep;
  rep.name = "correlation-distribution";
  rep.config = detail::options_json(o);
  rep.config["network"] = detail::network_json(net);
  rep.config["sigmas"] = p.sigmas;
  rep.config["a"] = p.a;
  rep.config["kappa"] = p.kappa;
  rep.config["include_iid"] = p.include_iid;
  rep.config["threshold"] = p.threshold;
  rep.replicate_columns = {"correlation"};

  struct Setting {
    std::string label;
    std::optional<double> sigma;
  };
  std::vector<Setting> settings;
  if (p.include_iid) settings.push_back({"iid", std::nullopt});
  for (double s : p.sigmas) settings.push_back({"sigma=" + detail::format_number(s), s});

  for (std::size_t s = 0; s < settings.size(); ++s) {
    std::vector<double> rho(o.reps);
    parallel_for(o.reps, o.threads, [&](std::size_t r) {
      const auto sx = derive_seed(o.seed, {r, detail::role_x});
      const auto sy = derive_seed(o.seed, {r, detail::role_y});
      NodeValues x, y;
      if (!settings[s].sigma) {
        Rng rx = make_stream(sx), ry = make_stream(sy);
        x = standard_normals(rx, net.size());
        y = standard_normals(ry, net.size());
      } else {
        x = direct_transmission(net, {p.a, *settings[s].sigma, p.kappa, sx});
        y = direct_transmission(net, {p.a, *settings[s].sigma, p.kappa, sy});
      }
      rho[r] = pearson_correlation(x, y);
    });

    SettingSummary sum;
    sum.label = settings[s].label;
    sum.method = "pearson";
    if (settings[s].sigma) sum.kappa = static_cast<double>(p.kappa);
    sum.replicates = o.reps;
    const double mean = detail::mean_of(rho);
    const double sd = detail::sample_sd(rho);
    std::size_t above = 0;
    std::size_t positive = 0;
    for (double v : rho) {
      above += std::abs(v) > p.threshold ? 1 : 0;
      positive += v > 0.0 ? 1 : 0;
    }
    sum.bias = mean;
    sum.sd_estimate = sd;
    sum.mean_abs_error = std::accumulate(rho.begin(), rho.end(), 0.0,
                                         [](double acc, double v) { return acc + std::abs(v); }) /
                         static_cast<double>(o.reps);
    sum.extras = {{"sigma", settings[s].sigma.value_or(std::numeric_limits<double>::quiet_NaN())},
                  {"mean_correlation", mean},
                  {"sd_correlation", sd},
                  {"mc_se_mean", sd / std::sqrt(static_cast<double>(o.reps))},
                  {"frac_abs_above_threshold", static_cast<double>(above) / static_cast<double>(o.reps)},
                  {"frac_positive", static_cast<double>(positive) / static_cast<double>(o.reps)}};
    rep.settings.push_back(std::move(sum));
    if (o.keep_replicates) {
      for (std::size_t r = 0; r < o.reps; ++r) rep.replicates.push_back({settings[s].label, r, {rho[r]}});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Coverage of the naive mean interval

struct CoverageParams {
  std::vector<std::size_t> kappas{0, 1, 2, 3};
  double a = 0.5;
  double sigma = 0.5;
};

/// Per kappa: simulate Y, form the naive interval for mu = 0, and run the
/// Moran permutation test.
inline ExperimentReport run_coverage_experiment(const Network& net, const CoverageParams& p,
                                                const MonteCarloOptions& o) {
  detail::validate(o);
  if (std::find(p.kappas.begin(), p.kappas.end(), std::size_t{0}) == p.kappas.end()) {
    throw input_error("bad-config", "kappa list must include 0 (the independence column)");
  }
  const WeightMatrix w = adjacency_weights(net);
  ExperimentReport rep;
  rep.name = "coverage";
  rep.config = detail::options_json(o);
  rep.config["network"] = detail::network_json(net);
  rep.config["kappas"] = p.kappas;
  rep.config["a"] = p.a;
  rep.config["sigma"] = p.sigma;
  rep.replicate_columns = {"ybar", "se", "covered", "p_perm"};

  for (std::size_t kappa : p.kappas) {
    detail::EstimateAccumulator acc(o.reps);
    std::vector<double> pvals(o.reps);
    parallel_for(o.reps, o.threads, [&](std::size_t r) {
      const auto y = direct_transmission(net, {p.a, p.sigma, kappa, derive_seed(o.seed, {r, detail::role_y})});
      const auto est = mean_ci_naive(y, o.level);
      acc.set(r, est.ybar, est.se_naive, est.ci.contains(0.0));
      pvals[r] = detail::moran_p(y, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_y}));
    });
    SettingSummary sum;
    sum.label = detail::kappa_label(kappa);
    sum.method = "naive-mean";
    sum.kappa = static_cast<double>(kappa);
    acc.summarize(sum);
    std::vector<char> reject(o.reps);
    for (std::size_t r = 0; r < o.reps; ++r) reject[r] = pvals[r] <= o.alpha ? 1 : 0;
    sum.reject_y = detail::fraction(reject);
    rep.settings.push_back(std::move(sum));
    if (o.keep_replicates) {
      for (std::size_t r = 0; r < o.reps; ++r) {
        rep.replicates.push_back(
            {detail::kappa_label(kappa), r, {acc.estimate[r], acc.se[r], double(acc.covered[r]), pvals[r]}});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Spurious regression between independent dependent series

struct SpuriousRegressionParams {
  std::vector<std::size_t> kappas{1, 2, 3};
  double a = 0.5;
  double sigma = 0.05;
  bool include_permuted_baseline = true;
};

namespace detail {

/// X and Y for replicate r of the spurious-regression design.
inline std::pair<NodeValues, NodeValues> spurious_pair(const Network& net, double a, double sigma, std::size_t kappa,
                                                       std::uint64_t seed, std::size_t r) {
  return {direct_transmission(net, {a, sigma, kappa, derive_seed(seed, {r, role_x})}),
          direct_transmission(net, {a, sigma, kappa, derive_seed(seed, {r, role_y})})};
}

}  // namespace detail

/// Per setting: independent X and Y by direct transmission with the same
/// kappa, OLS of Y on X plus intercept, coverage of beta = 0 and Moran
/// rejection rates for Y, X and the residuals. The permuted baseline
/// shuffles the largest-kappa Y across nodes.
inline ExperimentReport run_spurious_regression_experiment(const Network& net, const SpuriousRegressionParams& p,
                                                           const MonteCarloOptions& o) {
  detail::validate(o);
  if (p.kappas.empty()) throw input_error("bad-config", "kappa list is empty");
  const WeightMatrix w = adjacency_weights(net);
  const std::size_t kappa_max = *std::max_element(p.kappas.begin(), p.kappas.end());
  ExperimentReport rep;
  rep.name = "spurious-regression";
  rep.config = detail::options_json(o);
  rep.config["network"] = detail::network_json(net);
  rep.config["kappas"] = p.kappas;
  rep.config["a"] = p.a;
  rep.config["sigma"] = p.sigma;
  rep.config["include_permuted_baseline"] = p.include_permuted_baseline;
  rep.replicate_columns = {"beta", "se", "covered", "p_y", "p_x", "p_residuals"};

  auto run_setting = [&](const std::string& label, std::size_t kappa, bool permute) {
    detail::EstimateAccumulator acc(o.reps);
    std::vector<double> py(o.reps), px(o.reps), pr(o.reps);
    parallel_for(o.reps, o.threads, [&](std::size_t r) {
      auto [x, y] = detail::spurious_pair(net, p.a, p.sigma, kappa, o.seed, r);
      if (permute) {
        Rng rng = make_stream(o.seed, {r, detail::role_shuffle});
        std::shuffle(y.begin(), y.end(), rng);
      }
      const auto fit = ols(y, with_intercept(x), o.level);
      acc.set(r, fit.beta(1), fit.se(1), fit.ci[1].contains(0.0));
      const std::vector<double> resid(fit.residuals.begin(), fit.residuals.end());
      py[r] = detail::moran_p(y, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_y}));
      px[r] = detail::moran_p(x, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_x}));
      pr[r] = detail::moran_p(resid, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_resid}));
    });
    SettingSummary sum;
    sum.label = label;
    sum.method = permute ? "ols-permuted-y" : "ols";
    sum.kappa = static_cast<double>(kappa);
    acc.summarize(sum);
    auto rate = [&](const std::vector<double>& pv) {
      std::vector<char> flags(pv.size());
      for (std::size_t r = 0; r < pv.size(); ++r) flags[r] = pv[r] <= o.alpha ? 1 : 0;
      return detail::fraction(flags);
    };
    sum.reject_y = rate(py);
    sum.reject_x = rate(px);
    sum.reject_residuals = rate(pr);
    sum.extras = {{"mc_se_bias", *sum.sd_estimate / std::sqrt(static_cast<double>(o.reps))}};
    rep.settings.push_back(std::move(sum));
    if (o.keep_replicates) {
      for (std::size_t r = 0; r < o.reps; ++r) {
        rep.replicates.push_back(
            {label, r, {acc.estimate[r], acc.se[r], double(acc.covered[r]), py[r], px[r], pr[r]}});
      }
    }
  };

  if (p.include_permuted_baseline) run_setting("permuted-y", kappa_max, true);
  for (std::size_t kappa : p.kappas) run_setting(detail::kappa_label(kappa), kappa, false);
  return rep;
}

// ---------------------------------------------------------------------------
// Confounding by degree

struct DegreeConfoundingParams {
  std::vector<double> effects{0.0, 0.5};  ///< b: effect of degree on the predictor
  double outcome_effect = 0.5;            ///< c: effect of degree on the outcome
  double predictor_noise = 1.0;
  double outcome_noise = 1.0;
  bool control_degree = false;
};

/// The outcome is synthesized once as c * standardized degree + noise; each
/// replicate draws a predictor b * standardized degree + noise and regresses
/// the outcome on it (and on degree when control_degree is set). The
/// predictor has no effect on the outcome, so beta = 0 is the truth.
inline ExperimentReport run_degree_confounding_experiment(const Network& net, const DegreeConfoundingParams& p,
                                                          const MonteCarloOptions& o) {
  detail::validate(o);
  if (p.effects.empty()) throw input_error("bad-config", "effect list is empty");
  const auto sdeg = standardized_degrees(net);
  const WeightMatrix w = adjacency_weights(net);
  ExperimentReport rep;
  rep.name = "degree-confounding";
  rep.config = detail::options_json(o);
  rep.config["network"] = detail::network_json(net);
  rep.config["effects"] = p.effects;
  rep.config["outcome_effect"] = p.outcome_effect;
  rep.config["predictor_noise"] = p.predictor_noise;
  rep.config["outcome_noise"] = p.outcome_noise;
  rep.config["control_degree"] = p.control_degree;
  rep.replicate_columns = {"beta", "se", "covered", "p_x", "p_residuals"};

  const auto y = degree_driven_outcome(net, p.outcome_effect, p.outcome_noise, derive_seed(o.seed, {detail::role_y}));
  const double p_outcome = detail::moran_p(y, w, o.permutations, derive_seed(o.seed, {detail::role_perm_y}));

  for (double b : p.effects) {
    const std::string label = "b=" + detail::format_number(b);
    detail::EstimateAccumulator acc(o.reps);
    std::vector<double> px(o.reps), pr(o.reps);
    parallel_for(o.reps, o.threads, [&](std::size_t r) {
      const auto x = degree_confounded_covariate(
          net, ConfoundConfig{b, p.predictor_noise, derive_seed(o.seed, {r, detail::role_x})});
      Eigen::MatrixXd cov(static_cast<Eigen::Index>(x.size()), p.control_degree ? 2 : 1);
      cov.col(0) = to_vector(x);
      if (p.control_degree) cov.col(1) = to_vector(sdeg);
      const auto fit = ols(y, with_intercept(cov), o.level);
      acc.set(r, fit.beta(1), fit.se(1), fit.ci[1].contains(0.0));
      const std::vector<double> resid(fit.residuals.begin(), fit.residuals.end());
      px[r] = detail::moran_p(x, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_x}));
      pr[r] = detail::moran_p(resid, w, o.permutations, derive_seed(o.seed, {r, detail::role_perm_resid}));
    });
    SettingSummary sum;
    sum.label = label;
    sum.method = p.control_degree ? "ols-degree-controlled" : "ols";
    sum.effect = b;
    acc.summarize(sum);
    std::size_t above = 0;
    for (double e : acc.estimate) above += e > 0.0 ? 1 : 0;
    auto rate = [&](const std::vector<double>& pv) {
      std::vector<char> flags(pv.size());
      for (std::size_t r = 0; r < pv.size(); ++r) flags[r] = pv[r] <= o.alpha ? 1 : 0;
      return detail::fraction(flags);
    };
    sum.reject_y = p_outcome <= o.alpha ? 1.0 : 0.0;
    sum.reject_x = rate(px);
    sum.reject_residuals = rate(pr);
    sum.extras = {{"mc_se_bias", *sum.sd_estimate / std::sqrt(static_cast<double>(o.reps))},
                  {"frac_center_positive", static_cast<double>(above) / static_cast<double>(o.reps)},
                  {"p_outcome", p_outcome},
                  {"mean_p_predictor", detail::mean_of(px)},
                  {"mean_p_residuals", detail::mean_of(pr)}};
    rep.settings.push_back(std::move(sum));
    if (o.keep_replicates) {
      for (std::size_t r = 0; r < o.reps; ++r) {
        rep.replicates.push_back({label, r, {acc.estimate[r], acc.se[r], double(acc.covered[r]), px[r], pr[r]}});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Covariance-aware correction

struct GlsCorrectionParams {
  std::vector<std::size_t> kappas{0, 1, 2, 3};
  std::vector<double> lambdas{0.0, 0.1, 0.25, 0.5};
  double a = 0.5;
  double sigma = 0.05;
  bool include_gls = true;
  bool include_lmm = true;
};

/// Sigma mixed toward its own diagonal: (1 - lambda) Sigma + lambda diag(Sigma).
/// lambda = 0 is the truth; lambda = 1 drops all covariance.
inline Eigen::MatrixXd misspecified_covariance(const Eigen::MatrixXd& sigma, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw input_error("bad-config", "lambda must lie in [0,1]");
  Eigen::MatrixXd out = (1.0 - lambda) * sigma;
  out.diagonal() = sigma.diagonal();
  return out;
}

/// Same data as the spurious-regression design. For each (kappa, lambda)
/// the slope is estimated by GLS with the mixed covariance taken as known,
/// and by the mixed model with the mixed covariance as its structure
/// matrix (variance components estimated).
inline ExperimentReport run_gls_correction_experiment(const Network& net, const GlsCorrectionParams& p,
                                                      const MonteCarloOptions& o) {
  detail::validate(o);
  if (p.kappas.empty() || p.lambdas.empty()) throw input_error("bad-config", "kappa and lambda lists must be non-empty");
  if (!p.include_gls && !p.include_lmm) throw input_error("bad-config", "no estimator selected");
  ExperimentReport rep;
  rep.name = "gls-correction";
  rep.config = detail::options_json(o);
  rep.config["network"] = detail::network_json(net);
  rep.config["kappas"] = p.kappas;
  rep.config["lambdas"] = p.lambdas;
  rep.config["a"] = p.a;
  rep.config["sigma"] = p.sigma;
  rep.config["include_gls"] = p.include_gls;
  rep.config["include_lmm"] = p.include_lmm;
  rep.replicate_columns = {"beta", "se", "covered"};

  for (std::size_t kappa : p.kappas) {
    const Eigen::MatrixXd sigma = transmission_covariance(net, p.a, p.sigma, kappa);
    for (double lambda : p.lambdas) {
      const Eigen::MatrixXd s_lambda = misspecified_covariance(sigma, lambda);
      std::optional<GlsModel> gls_model;
      std::optional<LmmModel> lmm_model;
      if (p.include_gls) gls_model.emplace(s_lambda);
      if (p.include_lmm) lmm_model.emplace(s_lambda);
      detail::EstimateAccumulator gls_acc(o.reps), lmm_acc(o.reps);
      parallel_for(o.reps, o.threads, [&](std::size_t r) {
        const auto [x, y] = detail::spurious_pair(net, p.a, p.sigma, kappa, o.seed, r);
        const Eigen::MatrixXd design = with_intercept(x);
        if (gls_model) {
          const auto fit = gls_model->fit(y, design, o.level, GlsScale::known);
          gls_acc.set(r, fit.beta(1), fit.se(1), fit.ci[1].contains(0.0));
        }
        if (lmm_model) {
          const auto fit = lmm_model->fit(y, design, o.level);
          lmm_acc.set(r, fit.beta(1), fit.se(1), fit.ci[1].contains(0.0));
        }
      });
      auto emit = [&](const std::string& method, const detail::EstimateAccumulator& acc) {
        SettingSummary sum;
        sum.label = detail::kappa_label(kappa) + ",lambda=" + detail::format_number(lambda) + "," + method;
        sum.method = method;
        sum.kappa = static_cast<double>(kappa);
        sum.lambda = lambda;
        acc.summarize(sum);
        sum.extras = {{"mc_se_bias", *sum.sd_estimate / std::sqrt(static_cast<double>(o.reps))}};
        if (o.keep_replicates) {
          for (std::size_t r = 0; r < o.reps; ++r) {
            rep.replicates.push_back({sum.label, r, {acc.estimate[r], acc.se[r], double(acc.covered[r])}});
          }
        }
        rep.settings.push_back(std::move(sum));
      };
      if (gls_model) emit("gls", gls_acc);
      if (lmm_model) emit("lmm", lmm_acc);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string csv_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> extra_columns(const ExperimentReport& rep) {
  std::vector<std::string> cols;
  std::set<std::string> seen;
  for (const auto& s : rep.settings) {
    for (const auto& [k, v] : s.extras) {
      if (seen.insert(k).second) cols.push_back(k);
    }
  }
  return cols;
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace detail

/// One row per setting. The first line is a comment carrying the
/// experiment name and its configuration as JSON.
inline void write_report_csv(std::ostream& out, const ExperimentReport& rep) {
  out << "# " << rep.name << ' ' << rep.config.dump() << '\n';
  const auto extras = detail::extra_columns(rep);
  out << "setting,method,kappa,lambda,effect,replicates,truth,coverage,bias,mean_abs_error,mean_se,sd_estimate,"
         "reject_y,reject_x,reject_residuals";
  for (const auto& e : extras) out << ',' << e;
  out << '\n';
  for (const auto& s : rep.settings) {
    out << detail::csv_escape(s.label) << ',' << s.method << ',' << detail::csv_cell(s.kappa) << ','
        << detail::csv_cell(s.lambda) << ',' << detail::csv_cell(s.effect) << ',' << s.replicates << ','
        << detail::format_number(s.truth) << ',' << detail::csv_cell(s.coverage) << ',' << detail::csv_cell(s.bias)
        << ',' << detail::csv_cell(s.mean_abs_error) << ',' << detail::csv_cell(s.mean_se) << ','
        << detail::csv_cell(s.sd_estimate) << ',' << detail::csv_cell(s.reject_y) << ','
        << detail::csv_cell(s.reject_x) << ',' << detail::csv_cell(s.reject_residuals);
    for (const auto& e : extras) {
      const auto v = s.extra(e);
      out << ',' << (v && std::isfinite(*v) ? detail::format_number(*v) : std::string());
    }
    out << '\n';
  }
}

inline void write_replicates_csv(std::ostream& out, const ExperimentReport& rep) {
  out << "setting,replicate";
  for (const auto& c : rep.replicate_columns) out << ',' << c;
  out << '\n';
  for (const auto& row : rep.replicates) {
    out << detail::csv_escape(row.setting) << ',' << row.replicate;
    for (double v : row.values) out << ',' << detail::format_number(v);
    out << '\n';
  }
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = rep.name;
  j["config"] = rep.config;
  auto& settings = j["settings"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.settings) {
    nlohmann::ordered_json row;
    row["setting"] = s.label;
    row["method"] = s.method;
    row["kappa"] = detail::optional_json(s.kappa);
    row["lambda"] = detail::optional_json(s.lambda);
    row["effect"] = detail::optional_json(s.effect);
    row["replicates"] = s.replicates;
    row["truth"] = s.truth;
    row["coverage"] = detail::optional_json(s.coverage);
    row["bias"] = detail::optional_json(s.bias);
    row["mean_abs_error"] = detail::optional_json(s.mean_abs_error);
    row["mean_se"] = detail::optional_json(s.mean_se);
    row["sd_estimate"] = detail::optional_json(s.sd_estimate);
    row["reject_y"] = detail::optional_json(s.reject_y);
    row["reject_x"] = detail::optional_json(s.reject_x);
    row["reject_residuals"] = detail::optional_json(s.reject_residuals);
    for (const auto& [k, v] : s.extras) row[k] = detail::optional_json(v);
    settings.push_back(std::move(row));
  }
  if (!rep.replicates.empty()) {
    auto& reps = j["replicates"] = nlohmann::ordered_json::object();
    reps["columns"] = rep.replicate_columns;
    auto& rows = reps["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.replicates) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array({r.setting, r.replicate});
      for (double v : r.values) row.push_back(v);
      rows.push_back(std::move(row));
    }
  }
  return j;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"correlation-distribution", "coverage", "spurious-regression",
                                              "degree-confounding", "gls-correction"};
  return names;
}

}  // namespace netdep
