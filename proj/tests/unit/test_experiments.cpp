#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "netdep/experiments.hpp"

using namespace netdep;

namespace {

const Network& small_net() {
  static const Network net = generate_random_network(60, ErdosRenyi{0.08}, 11, true);
  return net;
}

MonteCarloOptions quick(std::size_t reps = 40, unsigned threads = 1) {
  MonteCarloOptions o;
  o.reps = reps;
  o.seed = 21;
  o.threads = threads;
  o.permutations = 49;
  o.keep_replicates = true;
  return o;
}

std::string csv(const ExperimentReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  write_replicates_csv(out, r);
  return out.str();
}

std::string code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

void expect_rates_valid(const ExperimentReport& rep) {
  for (const auto& s : rep.settings) {
    for (const auto& v : {s.coverage, s.reject_y, s.reject_x, s.reject_residuals}) {
      if (!v) continue;
      EXPECT_GE(*v, 0.0) << s.label;
      EXPECT_LE(*v, 1.0) << s.label;
    }
    if (s.sd_estimate) EXPECT_GE(*s.sd_estimate, 0.0);
  }
}

}  // namespace

TEST(Experiments, ThreadCountDoesNotChangeResults) {
  const auto& net = small_net();
  EXPECT_EQ(csv(run_coverage_experiment(net, {}, quick(40, 1))), csv(run_coverage_experiment(net, {}, quick(40, 4))));
  EXPECT_EQ(csv(run_spurious_regression_experiment(net, {}, quick(30, 1))),
            csv(run_spurious_regression_experiment(net, {}, quick(30, 3))));
  EXPECT_EQ(csv(run_degree_confounding_experiment(net, {}, quick(30, 1))),
            csv(run_degree_confounding_experiment(net, {}, quick(30, 5))));
  GlsCorrectionParams g;
  g.kappas = {0, 2};
  g.lambdas = {0, 0.5};
  EXPECT_EQ(csv(run_gls_correction_experiment(net, g, quick(20, 1))),
            csv(run_gls_correction_experiment(net, g, quick(20, 4))));
  EXPECT_EQ(csv(run_correlation_distribution(net, {}, quick(100, 1))),
            csv(run_correlation_distribution(net, {}, quick(100, 6))));
}

TEST(Experiments, SeedChangesResults) {
  auto o = quick();
  const auto a = csv(run_coverage_experiment(small_net(), {}, o));
  o.seed = 22;
  EXPECT_NE(a, csv(run_coverage_experiment(small_net(), {}, o)));
}

TEST(Experiments, PreconditionErrors) {
  const auto& net = small_net();
  EXPECT_EQ(code_of([&] { run_correlation_distribution(net, {}, quick(99)); }), "bad-config");
  CoverageParams c;
  c.kappas = {1, 2};
  EXPECT_EQ(code_of([&] { run_coverage_experiment(net, c, quick()); }), "bad-config");
  EXPECT_EQ(code_of([&] { run_coverage_experiment(net, {}, quick(0)); }), "bad-config");
  auto o = quick();
  o.permutations = 0;
  EXPECT_EQ(code_of([&] { run_coverage_experiment(net, {}, o); }), "bad-permutations");
  o = quick();
  o.alpha = 1.5;
  EXPECT_EQ(code_of([&] { run_spurious_regression_experiment(net, {}, o); }), "bad-config");
  GlsCorrectionParams g;
  g.lambdas = {1.5};
  EXPECT_EQ(code_of([&] { run_gls_correction_experiment(net, g, quick()); }), "bad-config");
  DegreeConfoundingParams d;
  d.effects.clear();
  EXPECT_EQ(code_of([&] { run_degree_confounding_experiment(net, d, quick()); }), "bad-config");
}

TEST(Coverage, SummaryAgreesWithReplicatesAndSimulator) {
  const auto& net = small_net();
  const auto o = quick(30);
  const auto rep = run_coverage_experiment(net, {}, o);
  EXPECT_EQ(rep.settings.size(), 4u);
  EXPECT_EQ(rep.replicates.size(), 4u * 30u);
  EXPECT_EQ(rep.config["seed"], 21);
  EXPECT_EQ(rep.config["reps"], 30);
  EXPECT_EQ(rep.config["network"]["nodes"], 60);
  expect_rates_valid(rep);
  for (const auto& s : rep.settings) {
    double hits = 0, sum = 0;
    for (const auto& row : rep.replicates) {
      if (row.setting != s.label) continue;
      // Independent recomputation of the replicate.
      const auto y = direct_transmission(net, {0.5, 0.5, static_cast<std::size_t>(*s.kappa),
                                               derive_seed(o.seed, {row.replicate, detail::role_y})});
      const auto ci = mean_ci_naive(y);
      EXPECT_DOUBLE_EQ(row.values[0], ci.ybar);
      EXPECT_DOUBLE_EQ(row.values[1], ci.se_naive);
      hits += row.values[2];
      sum += row.values[0];
    }
    EXPECT_DOUBLE_EQ(*s.coverage, hits / 30);
    EXPECT_NEAR(*s.bias, sum / 30, 1e-15);
  }
}

TEST(Spurious, BaselineSharesDataAndSlopeMatchesOls) {
  const auto& net = small_net();
  const auto o = quick(10);
  const auto rep = run_spurious_regression_experiment(net, {}, o);
  EXPECT_EQ(rep.settings.front().label, "permuted-y");
  EXPECT_EQ(rep.settings.size(), 4u);
  expect_rates_valid(rep);
  for (const auto& row : rep.replicates) {
    if (row.setting != "kappa=2") continue;
    const auto x = direct_transmission(net, {0.5, 0.05, 2, derive_seed(o.seed, {row.replicate, detail::role_x})});
    const auto y = direct_transmission(net, {0.5, 0.05, 2, derive_seed(o.seed, {row.replicate, detail::role_y})});
    EXPECT_DOUBLE_EQ(row.values[0], ols(y, with_intercept(x)).beta(1));
  }
}

TEST(DegreeConfounding, NoEffectRowIsCenteredAndControlledRowsExist) {
  const auto& net = small_net();
  DegreeConfoundingParams p;
  p.control_degree = true;
  const auto rep = run_degree_confounding_experiment(net, p, quick(60));
  EXPECT_EQ(rep.settings.size(), 2u);
  EXPECT_EQ(rep.settings[1].label, "b=0.5");
  EXPECT_EQ(rep.settings[1].method, "ols-degree-controlled");
  expect_rates_valid(rep);
  for (const auto& s : rep.settings) EXPECT_LT(std::abs(*s.bias), 4 * *s.extra("mc_se_bias") + 1e-12);
}

TEST(GlsCorrection, MisspecifiedCovariance) {
  Eigen::MatrixXd s(2, 2);
  s << 2, 1, 1, 3;
  EXPECT_EQ(misspecified_covariance(s, 0.0), s);
  Eigen::MatrixXd half(2, 2);
  half << 2, 0.5, 0.5, 3;
  EXPECT_EQ(misspecified_covariance(s, 0.5), half);
  EXPECT_EQ(misspecified_covariance(s, 1.0), Eigen::MatrixXd(s.diagonal().asDiagonal()));
}

TEST(GlsCorrection, RowLayout) {
  GlsCorrectionParams g;
  g.kappas = {1, 3};
  g.lambdas = {0, 0.25};
  const auto rep = run_gls_correction_experiment(small_net(), g, quick(10));
  ASSERT_EQ(rep.settings.size(), 8u);
  EXPECT_EQ(rep.settings[0].label, "kappa=1,lambda=0,gls");
  EXPECT_EQ(rep.settings[3].label, "kappa=1,lambda=0.25,lmm");
  EXPECT_EQ(*rep.settings[3].lambda, 0.25);
  expect_rates_valid(rep);
  std::ostringstream out;
  write_report_csv(out, rep);
  EXPECT_NE(out.str().find("\n\"kappa=1,lambda=0,gls\",gls,1,0,"), std::string::npos);
}

TEST(CorrelationDistribution, IidRowIsCentred) {
  const auto rep = run_correlation_distribution(small_net(), {}, quick(200));
  const auto& iid = rep.setting("iid");
  EXPECT_LT(std::abs(*iid.extra("mean_correlation")), 4 * *iid.extra("mc_se_mean"));
  // Null sd of Pearson's r for n = 60 is about 1/sqrt(59).
  EXPECT_NEAR(*iid.extra("sd_correlation"), 1 / std::sqrt(59.0), 0.03);
  EXPECT_EQ(rep.setting("sigma=0.05").kappa, 10.0);
  EXPECT_EQ(code_of([&] { rep.setting("nope"); }), "unknown-setting");
}

TEST(Writers, CsvAndJsonShape) {
  const auto rep = run_coverage_experiment(small_net(), {}, quick(5));
  std::ostringstream out;
  write_report_csv(out, rep);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# coverage {", 0), 0u);
  EXPECT_EQ(nlohmann::json::parse(line.substr(11))["seed"], 21);
  std::getline(in, line);
  EXPECT_EQ(line.rfind("setting,method,kappa,lambda,effect,replicates,truth,coverage", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 14);
  }
  EXPECT_EQ(rows, 4);

  const auto j = report_to_json(rep);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["experiment"], "coverage");
  EXPECT_EQ(j["settings"].size(), 4u);
  EXPECT_TRUE(j["settings"][0]["lambda"].is_null());
  EXPECT_EQ(j["replicates"]["rows"].size(), 20u);
  EXPECT_EQ(j["replicates"]["columns"][3], "p_perm");
}

// A short version of the headline pattern on the default network.
TEST(Coverage, DependenceErodesCoverage) {
  MonteCarloOptions o;
  o.reps = 300;
  o.seed = 3;
  o.permutations = 99;
  o.threads = 4;
  const auto rep = run_coverage_experiment(default_simulation_network(), {}, o);
  const auto [lo, hi] = testutil::binomial_band(300, 0.95, 0.999);
  EXPECT_GE(*rep.setting("kappa=0").coverage * 300, lo);
  EXPECT_LE(*rep.setting("kappa=0").coverage * 300, hi);
  EXPECT_LT(*rep.setting("kappa=3").coverage, *rep.setting("kappa=0").coverage);
  EXPECT_GT(*rep.setting("kappa=3").reject_y, *rep.setting("kappa=0").reject_y);
}
