#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "netdep/cli.hpp"

using namespace netdep;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "netdep");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("netdep_cli_") + info->name() + "_" +
                                       std::to_string(static_cast<long long>(::getpid())));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string file(const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
};

const char* kPath4 = "src,dst\na,b\nb,c\nc,d\n";

}  // namespace

TEST_F(Cli, PathFourMoran) {
  const auto e = file("e.csv", kPath4);
  const auto v = file("v.csv", "node,value\na,1\nb,2\nc,3\nd,4\n");
  const auto r = run({"test", "--edges", e, "--values", v, "--permutations", "99", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["schema_version"], kDocumentSchemaVersion);
  EXPECT_EQ(j["command"], "test");
  EXPECT_EQ(j["seed"], 5);
  EXPECT_NEAR(j["result"]["statistic"].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(j["result"]["m"], 99);
  EXPECT_EQ(j["result"]["n"], 4);
  EXPECT_TRUE(j["result"]["p_normal"].is_null());  // n below the normal cutoff
  const double p = j["result"]["p_perm"].get<double>();
  EXPECT_GT(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST_F(Cli, CsvAndTextFormats) {
  const auto e = file("e.csv", kPath4);
  const auto v = file("v.csv", "node,value\na,1\nb,2\nc,3\nd,4\n");
  const auto c = run({"test", "--edges", e, "--values", v, "--format", "csv"});
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(c.out.rfind("statistic,i_std,mean_null,var_null,p_perm,p_normal,m,n,s0\n", 0), 0u);
  const auto t = run({"test", "--edges", e, "--values", v, "--format", "text", "--geary"});
  ASSERT_EQ(t.code, 0);
  EXPECT_NE(t.out.find("Geary"), std::string::npos);
}

TEST_F(Cli, ErrorExitCodes) {
  const auto e = file("e.csv", kPath4);
  const auto flat = run({"test", "--edges", e, "--values", file("f.csv", "node,value\na,2\nb,2\nc,2\nd,2\n")});
  EXPECT_EQ(flat.code, kExitDegenerate);
  EXPECT_NE(flat.err.find("zero-variance"), std::string::npos);
  const auto missing = run({"test", "--edges", e, "--values", file("m.csv", "node,value\na,1\nb,2\nd,4\n")});
  EXPECT_EQ(missing.code, kExitInput);
  EXPECT_NE(missing.err.find("c"), std::string::npos);
  EXPECT_NE(missing.err.find("missing-node"), std::string::npos);
  EXPECT_EQ(run({"test", "--edges", (dir / "absent.csv").string(), "--values", e}).code, kExitInput);
  EXPECT_EQ(run({"test", "--edges", e}).code, kExitInput);
  EXPECT_EQ(run({"frobnicate"}).code, kExitInput);
  EXPECT_EQ(run({"--version"}).code, kExitOk);
  EXPECT_EQ(run({"test", "--edges", e, "--values", file("v.csv", "node,value\na,1\nb,2\nc,3\nd,4\n"), "--weights",
                 "inverse-geodesic:-1"})
                .code,
            kExitInput);
}

TEST_F(Cli, ResidualTest) {
  const auto e = file("e.csv", "src,dst\na,b\nb,c\nc,d\nd,e\ne,f\n");
  const auto d = file("d.csv", "node,x\na,0\nb,1\nc,2\nd,3\ne,4\nf,5\n");
  const auto exact = file("y.csv", "node,value\na,1\nb,3\nc,5\nd,7\ne,9\nf,11\n");
  const auto perfect = run({"residual-test", "--edges", e, "--values", exact, "--design", d});
  EXPECT_EQ(perfect.code, kExitDegenerate);
  EXPECT_NE(perfect.err.find("zero-variance"), std::string::npos);

  const auto noisy = file("z.csv", "node,value\na,1.5\nb,2.7\nc,5.2\nd,7.9\ne,8.1\nf,11.3\n");
  const auto r = run({"residual-test", "--edges", e, "--values", noisy, "--design", d, "--permutations", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["fit"]["coefficients"][1]["name"], "x");
  const std::vector<double> yv{1.5, 2.7, 5.2, 7.9, 8.1, 11.3}, xv{0, 1, 2, 3, 4, 5};
  const auto fit = ols(yv, with_intercept(xv));
  EXPECT_NEAR(j["fit"]["coefficients"][1]["estimate"].get<double>(), fit.beta(1), 1e-12);
  const std::vector<double> res(fit.residuals.begin(), fit.residuals.end());
  EXPECT_NEAR(j["result"]["statistic"].get<double>(),
              morans_i(res, adjacency_weights(Network(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}))), 1e-12);
}

TEST_F(Cli, SimulateRoundTripAndDeterminism) {
  const auto e = file("e.csv", "src,dst\nzed,alpha\nalpha,mid\nmid,zed\nmid,tail\n");
  const auto a = run({"simulate", "--edges", e, "--kappa", "3", "--seed", "9"});
  const auto b = run({"simulate", "--edges", e, "--kappa", "3", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run({"simulate", "--edges", e, "--kappa", "3", "--seed", "10"}).out);
  EXPECT_EQ(a.out.rfind("node,value\nzed,", 0), 0u);
  const auto v = file("v.csv", a.out);
  EXPECT_EQ(run({"test", "--edges", e, "--values", v, "--permutations", "20"}).code, 0);

  const auto out = (dir / "net.csv").string();
  ASSERT_EQ(run({"generate-network", "--network-model", "erdos-renyi", "--nodes", "50", "--seed", "4", "--out", out})
                .code,
            0);
  const auto first = slurp(out);
  ASSERT_EQ(run({"generate-network", "--network-model", "erdos-renyi", "--nodes", "50", "--seed", "4", "--out", out})
                .code,
            0);
  EXPECT_EQ(first, slurp(out));
  EXPECT_EQ(first.rfind("src,dst\n", 0), 0u);
  const auto mono = run({"simulate", "--edges", out, "--model", "monotone", "--seed", "1"});
  ASSERT_EQ(mono.code, 0);
  EXPECT_EQ(mono.out.rfind("node,x,y\n", 0), 0u);
}

// Under independence the permutation p-value is close to uniform.
TEST_F(Cli, NullPValuesUniform) {
  const auto net = generate_random_network(100, ErdosRenyi{0.05}, 2, true);
  std::ostringstream es;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < net.size(); ++i) labels.push_back("n" + std::to_string(i));
  es << "src,dst\n";
  for (const auto& [u, v] : net.edges()) es << labels[u] << ',' << labels[v] << '\n';
  const auto e = file("e.csv", es.str());
  std::vector<double> p;
  for (std::uint64_t s = 0; s < 500; ++s) {
    std::ostringstream vs;
    write_node_values(vs, labels, direct_transmission(net, {0.5, 0.5, 0, 1000 + s}));
    const auto v = file("v" + std::to_string(s) + ".csv", vs.str());
    const auto r = run({"test", "--edges", e, "--values", v, "--permutations", "499", "--seed", std::to_string(s),
                        "--method", "perm"});
    ASSERT_EQ(r.code, 0) << r.err;
    p.push_back(nlohmann::json::parse(r.out)["result"]["p_perm"].get<double>());
  }
  std::sort(p.begin(), p.end());
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max({d, std::abs(double(i + 1) / 500 - p[i]), std::abs(p[i] - double(i) / 500)});
  }
  EXPECT_LT(d, 1.6276 / std::sqrt(500.0));
}

TEST_F(Cli, ExperimentFilesReproducible) {
  const auto out1 = (dir / "a").string(), out2 = (dir / "b").string();
  const std::vector<std::string> base{"experiment", "coverage", "--reps", "50", "--seed", "7", "--permutations", "99",
                                      "--replicates"};
  auto args = base;
  args.insert(args.end(), {"--out", out1, "--threads", "1"});
  const auto r1 = run(args);
  ASSERT_EQ(r1.code, 0) << r1.err;
  args = base;
  args.insert(args.end(), {"--out", out2, "--threads", "4"});
  ASSERT_EQ(run(args).code, 0);
  EXPECT_NE(r1.out.find("coverage_report.csv"), std::string::npos);
  EXPECT_EQ(slurp(fs::path(out1) / "coverage_report.csv"), slurp(fs::path(out2) / "coverage_report.csv"));
  EXPECT_EQ(slurp(fs::path(out1) / "coverage_replicates.csv"), slurp(fs::path(out2) / "coverage_replicates.csv"));
  const auto report = slurp(fs::path(out1) / "coverage_report.csv");
  EXPECT_NE(report.find("\"network_source\""), std::string::npos);
  EXPECT_NE(report.find("kappa=3,naive-mean,3"), std::string::npos);

  const auto bad = run({"experiment", "nonsense", "--out", out1});
  EXPECT_EQ(bad.code, kExitInput);
  EXPECT_NE(bad.err.find("gls-correction"), std::string::npos);
}

TEST_F(Cli, SpuriousRegressionJsonReport) {
  const auto r = run({"experiment", "spurious-regression", "--reps", "20", "--permutations", "49", "--format",
                      "json", "--out", dir.string(), "--nodes", "60", "--kappas", "1,3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "spurious-regression_report.json"));
  ASSERT_EQ(j["settings"].size(), 3u);
  for (const auto& s : j["settings"]) {
    for (const char* k : {"reject_y", "reject_x", "reject_residuals", "coverage"}) {
      ASSERT_TRUE(s[k].is_number()) << k;
      EXPECT_GE(s[k].get<double>(), 0.0);
      EXPECT_LE(s[k].get<double>(), 1.0);
    }
  }
  EXPECT_EQ(j["config"]["network"]["nodes"], 60);
}

TEST_F(Cli, ThreadsEnvironmentHonouredAndInert) {
  const auto e = file("e.csv", kPath4);
  const auto v = file("v.csv", "node,value\na,1\nb,2\nc,4\nd,3\n");
  const auto one = run({"test", "--edges", e, "--values", v, "--threads", "1", "--permutations", "200"});
  ::setenv("NETDEP_THREADS", "3", 1);
  const auto env = run({"test", "--edges", e, "--values", v, "--permutations", "200"});
  ::unsetenv("NETDEP_THREADS");
  ASSERT_EQ(env.code, 0);
  auto j1 = nlohmann::json::parse(one.out), j3 = nlohmann::json::parse(env.out);
  EXPECT_EQ(j3["options"]["threads"], 3);
  EXPECT_EQ(j1["result"], j3["result"]);
}
