#pragma once

// Command-line front end. run_cli() is the whole program minus process
// plumbing, so tests can drive it with in-memory streams.
//
// Exit codes: 0 success, 2 input error, 3 degenerate statistic, 4 numeric
// or internal failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "netdep/deptest.hpp"
#include "netdep/error.hpp"
#include "netdep/experiments.hpp"
#include "netdep/graph.hpp"
#include "netdep/inference.hpp"
#include "netdep/io.hpp"
#include "netdep/random.hpp"
#include "netdep/simulate.hpp"

#ifndef NETDEP_VERSION
#define NETDEP_VERSION "0.0.0"
#endif

namespace netdep {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kDocumentSchemaVersion = 1;

namespace cli {

using json = nlohmann::ordered_json;

struct WeightSpec {
  std::string kind = "adjacency";
  double gamma = 1.0;
};

inline WeightSpec parse_weight_spec(const std::string& s) {
  if (s == "adjacency") return {};
  const std::string prefix = "inverse-geodesic";
  if (s.rfind(prefix, 0) == 0) {
    WeightSpec w{"inverse-geodesic", 1.0};
    if (s.size() > prefix.size()) {
      if (s[prefix.size()] != ':') throw input_error("bad-weights", "expected inverse-geodesic:GAMMA, got '" + s + "'");
      try {
        std::size_t used = 0;
        const std::string g = s.substr(prefix.size() + 1);
        w.gamma = std::stod(g, &used);
        if (used != g.size()) throw std::invalid_argument(g);
      } catch (const std::exception&) {
        throw input_error("bad-weights", "cannot parse gamma in '" + s + "'");
      }
    }
    if (!(w.gamma > 0.0)) throw input_error("bad-weights", "gamma must be positive");
    return w;
  }
  throw input_error("bad-weights", "weights must be 'adjacency' or 'inverse-geodesic:GAMMA', got '" + s + "'");
}

inline WeightMatrix build_weights(const Network& net, const WeightSpec& spec) {
  return spec.kind == "adjacency" ? adjacency_weights(net) : inverse_geodesic_weights(net, spec.gamma);
}

inline Tail parse_tail(const std::string& s) {
  if (s == "upper") return Tail::upper;
  if (s == "lower") return Tail::lower;
  if (s == "two-sided") return Tail::two_sided;
  throw input_error("bad-tail", "tail must be upper, lower or two-sided");
}

inline std::ifstream open_input(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot-open", "cannot open " + what + " file '" + path + "'");
  return in;
}

inline LabeledNetwork read_network(const std::string& path) {
  auto in = open_input(path, "edges");
  try {
    return load_edge_list(in);
  } catch (const Error& e) {
    throw Error(e.kind(), e.code(), path + ": " + std::string(e.what()).substr(e.code().size() + 2));
  }
}

template <class Fn>
auto with_file_context(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), e.code(), path + ": " + std::string(e.what()).substr(e.code().size() + 2));
  }
}

inline json optional_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline std::string tail_name(Tail t) {
  switch (t) {
    case Tail::upper: return "upper";
    case Tail::lower: return "lower";
    case Tail::two_sided: return "two-sided";
  }
  return "upper";
}

inline json moran_json(const MoranResult& r, const WeightMatrix& w) {
  json j;
  j["statistic"] = r.i_stat;
  j["i_std"] = optional_json(r.i_std);
  j["mean_null"] = r.moments ? json(r.moments->mean_i) : json(-1.0 / (static_cast<double>(r.n) - 1.0));
  j["var_null"] = r.moments ? json(r.moments->var_i) : json(nullptr);
  j["p_perm"] = optional_json(r.p_perm);
  j["p_normal"] = optional_json(r.p_normal);
  j["m"] = r.m_used;
  j["n"] = r.n;
  j["s0"] = w.s0();
  j["tail"] = tail_name(r.tail);
  j["warnings"] = r.warnings;
  return j;
}

/// Where a command writes its main document.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw input_error("cannot-open", "cannot write output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

inline std::string csv_value(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return detail::format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline const char* kAlphaCaveat =
    "note: alpha is a reporting threshold only; a conventional 0.05 cut-off may not be appropriate for these "
    "tests, and moderate to large standardized statistics deserve attention even when p >= alpha";

inline void write_test_text(std::ostream& out, const json& r, double alpha) {
  auto num = [](const json& v) { return v.is_null() ? std::string("n/a") : csv_value(v); };
  out << "Moran's I      " << num(r["statistic"]) << '\n'
      << "null mean      " << num(r["mean_null"]) << '\n'
      << "null variance  " << num(r["var_null"]) << '\n'
      << "I_std          " << num(r["i_std"]) << '\n'
      << "p (perm)       " << num(r["p_perm"]) << (r["m"].get<std::size_t>() ? "  (M = " + num(r["m"]) + ")" : "")
      << '\n'
      << "p (normal)     " << num(r["p_normal"]) << '\n'
      << "n              " << num(r["n"]) << "   S0 = " << num(r["s0"]) << "   tail = " << num(r["tail"]) << '\n';
  for (const auto& w : r["warnings"]) out << "warning: " << w.get<std::string>() << '\n';
  out << "alpha = " << alpha << "; " << kAlphaCaveat << '\n';
}

struct TestOptions {
  std::string edges, values, weights = "adjacency", method = "both", tail = "upper", format = "json", out;
  std::size_t permutations = 500;
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  double alpha = 0.05;
  std::size_t min_normal_n = kMinNormalApproxN;
  bool geary = false;
};

inline void add_test_options(CLI::App& cmd, TestOptions& o) {
  cmd.add_option("--edges", o.edges, "edge list CSV with header src,dst")->required();
  cmd.add_option("--values", o.values, "node values CSV with header node,value")->required();
  cmd.add_option("--weights", o.weights, "adjacency | inverse-geodesic:GAMMA")->capture_default_str();
  cmd.add_option("--method", o.method, "perm | normal | both")
      ->check(CLI::IsMember({"perm", "normal", "both"}))
      ->capture_default_str();
  cmd.add_option("--permutations", o.permutations, "number of permutations M")->capture_default_str();
  cmd.add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd.add_option("--threads", o.threads, "worker threads (default: $NETDEP_THREADS, else 1)");
  cmd.add_option("--tail", o.tail, "upper | lower | two-sided")
      ->check(CLI::IsMember({"upper", "lower", "two-sided"}))
      ->capture_default_str();
  cmd.add_option("--alpha", o.alpha, "reporting threshold shown in text output")->capture_default_str();
  cmd.add_option("--min-normal-n", o.min_normal_n, "smallest n for which the normal p-value is reported")
      ->capture_default_str();
  cmd.add_flag("--geary", o.geary, "also run Geary's c permutation test");
  cmd.add_option("--format", o.format, "json | csv | text")
      ->check(CLI::IsMember({"json", "csv", "text"}))
      ->capture_default_str();
  cmd.add_option("--out", o.out, "output path (default stdout)");
}

inline json test_options_json(const TestOptions& o, unsigned threads) {
  return {{"edges", o.edges},   {"values", o.values},     {"weights", o.weights},
          {"method", o.method}, {"permutations", o.permutations}, {"seed", o.seed},
          {"threads", threads}, {"tail", o.tail},         {"alpha", o.alpha},
          {"min_normal_n", o.min_normal_n}, {"geary", o.geary}};
}

inline json document(const std::string& command, std::uint64_t seed, json options) {
  json d;
  d["schema_version"] = kDocumentSchemaVersion;
  d["tool"] = "netdep";
  d["version"] = NETDEP_VERSION;
  d["command"] = command;
  d["seed"] = seed;
  d["options"] = std::move(options);
  return d;
}

/// Runs the dependence test on y; shared by test and residual-test.
inline json dependence_test(std::span<const double> y, const WeightMatrix& w, const TestOptions& o, unsigned threads) {
  if (o.permutations == 0) throw input_error("bad-permutations", "--permutations must be at least 1");
  const Tail tail = parse_tail(o.tail);
  MoranResult r;
  if (o.method == "normal") {
    r = normal_test(y, w, tail, o.min_normal_n);
  } else {
    r = permutation_test(y, w, PermutationConfig{o.permutations, o.seed, tail, threads}, o.min_normal_n);
    if (o.method == "perm") {
      r.p_normal.reset();
      std::erase_if(r.warnings, [](const std::string& s) { return s.rfind("normal approximation", 0) == 0; });
    }
  }
  return moran_json(r, w);
}

inline json geary_json(std::span<const double> y, const WeightMatrix& w, const TestOptions& o, unsigned threads) {
  const auto g = geary_test(y, w, PermutationConfig{o.permutations, derive_seed(o.seed, {1}), Tail::lower, threads});
  return {{"statistic", g.c_stat}, {"p_perm", optional_json(g.p_perm)}, {"m", g.m_used}, {"tail", "lower"}};
}

inline void emit_test(std::ostream& out, const std::string& format, const json& doc, const json& result, double alpha) {
  if (format == "json") {
    out << doc.dump(2) << '\n';
  } else if (format == "csv") {
    out << "statistic,i_std,mean_null,var_null,p_perm,p_normal,m,n,s0\n";
    const char* keys[] = {"statistic", "i_std", "mean_null", "var_null", "p_perm", "p_normal", "m", "n", "s0"};
    for (std::size_t k = 0; k < std::size(keys); ++k) out << (k ? "," : "") << csv_value(result[keys[k]]);
    out << '\n';
  } else {
    write_test_text(out, result, alpha);
  }
}

inline int cmd_test(const TestOptions& o, std::ostream& out) {
  const unsigned threads = resolve_threads(o.threads);
  const auto net = read_network(o.edges);
  auto vin = open_input(o.values, "values");
  const auto y = with_file_context(o.values, [&] { return load_node_values(vin, net, "values"); });
  const WeightMatrix w = build_weights(net.network, parse_weight_spec(o.weights));
  const json result = dependence_test(y, w, o, threads);
  json doc = document("test", o.seed, test_options_json(o, threads));
  doc["result"] = result;
  if (o.geary) doc["geary"] = geary_json(y, w, o, threads);
  Output dest(o.out, out);
  emit_test(dest.stream(), o.format, doc, result, o.alpha);
  if (o.format == "text" && o.geary) {
    dest.stream() << "Geary's c      " << csv_value(doc["geary"]["statistic"]) << "   p (perm, lower) "
                  << csv_value(doc["geary"]["p_perm"]) << '\n';
  }
  return kExitOk;
}

struct ResidualOptions {
  TestOptions test;
  std::string design;
  bool no_intercept = false;
  double level = 0.95;
};

inline int cmd_residual_test(const ResidualOptions& ro, std::ostream& out) {
  const auto& o = ro.test;
  const unsigned threads = resolve_threads(o.threads);
  const auto net = read_network(o.edges);
  auto vin = open_input(o.values, "values");
  const auto y = with_file_context(o.values, [&] { return load_node_values(vin, net, "values"); });
  auto din = open_input(ro.design, "design");
  const auto table = with_file_context(ro.design, [&] { return load_node_table(din, net, "design"); });
  const Eigen::MatrixXd x = ro.no_intercept ? table.values : with_intercept(table.values);
  std::vector<std::string> names;
  if (!ro.no_intercept) names.push_back("intercept");
  names.insert(names.end(), table.columns.begin(), table.columns.end());

  const auto fit = ols(y, x, ro.level);
  const Eigen::VectorXd yv = to_vector(y);
  const double ss_y = (yv.array() - yv.mean()).square().sum();
  const double ss_r = fit.residuals.squaredNorm();
  if (ss_r <= 1e-20 * std::max(ss_y, std::numeric_limits<double>::min())) {
    throw degenerate_error("zero-variance", "residuals are numerically zero (perfect fit); Moran's I is undefined");
  }
  const std::vector<double> resid(fit.residuals.begin(), fit.residuals.end());
  const WeightMatrix w = build_weights(net.network, parse_weight_spec(o.weights));
  const json result = dependence_test(resid, w, o, threads);

  json options = test_options_json(o, threads);
  options["design"] = ro.design;
  options["intercept"] = !ro.no_intercept;
  options["level"] = ro.level;
  json doc = document("residual-test", o.seed, std::move(options));
  json coef = json::array();
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
    coef.push_back({{"name", names[static_cast<std::size_t>(j)]},
                    {"estimate", fit.beta(j)},
                    {"se", fit.se(j)},
                    {"ci_lower", fit.ci[static_cast<std::size_t>(j)].lower},
                    {"ci_upper", fit.ci[static_cast<std::size_t>(j)].upper}});
  }
  doc["fit"] = {{"method", "ols"}, {"level", ro.level}, {"sigma2", fit.sigma2}, {"coefficients", coef}};
  doc["result"] = result;
  if (o.geary) doc["geary"] = geary_json(resid, w, o, threads);

  Output dest(ro.test.out, out);
  if (o.format == "text") {
    auto& s = dest.stream();
    s << "OLS fit (" << ro.level * 100 << "% intervals assume independent units)\n";
    for (const auto& c : coef) {
      s << "  " << std::left << std::setw(14) << c["name"].get<std::string>() << std::right << ' '
        << csv_value(c["estimate"]) << "  se " << csv_value(c["se"]) << "  [" << csv_value(c["ci_lower"]) << ", "
        << csv_value(c["ci_upper"]) << "]\n";
    }
    s << "Dependence test on residuals\n";
  }
  emit_test(dest.stream(), o.format, doc, result, o.alpha);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Network sources shared by simulate, experiment and generate-network

struct NetworkOptions {
  std::string edges;
  std::string model = "small-world";
  std::size_t nodes = 200;
  double mean_degree = 5.0;
  std::size_t k = 4;
  double rewire = 0.1;
  std::uint64_t network_seed = 1;
  bool allow_disconnected = false;
};

inline void add_network_options(CLI::App& cmd, NetworkOptions& o, bool with_edges) {
  if (with_edges) cmd.add_option("--edges", o.edges, "edge list CSV; when absent a network is generated");
  cmd.add_option("--network-model", o.model, "erdos-renyi | small-world")
      ->check(CLI::IsMember({"erdos-renyi", "small-world"}))
      ->capture_default_str();
  cmd.add_option("--nodes", o.nodes, "number of nodes")->capture_default_str();
  cmd.add_option("--mean-degree", o.mean_degree, "Erdos-Renyi mean degree")->capture_default_str();
  cmd.add_option("--k", o.k, "small-world ring degree (even)")->capture_default_str();
  cmd.add_option("--rewire", o.rewire, "small-world rewiring probability")->capture_default_str();
  cmd.add_option("--network-seed", o.network_seed, "seed for the generated network")->capture_default_str();
  cmd.add_flag("--allow-disconnected", o.allow_disconnected, "do not resample until connected");
}

inline LabeledNetwork obtain_network(const NetworkOptions& o) {
  if (!o.edges.empty()) return read_network(o.edges);
  NetworkModel model = o.model == "erdos-renyi" ? NetworkModel(erdos_renyi_with_mean_degree(o.nodes, o.mean_degree))
                                                : NetworkModel(SmallWorld{o.k, o.rewire});
  LabeledNetwork out;
  out.network = generate_random_network(o.nodes, model, o.network_seed, !o.allow_disconnected);
  for (std::size_t i = 0; i < o.nodes; ++i) {
    out.labels.push_back(std::to_string(i));
    out.index.emplace(out.labels.back(), i);
  }
  return out;
}

inline json network_options_json(const NetworkOptions& o) {
  if (!o.edges.empty()) return {{"edges", o.edges}};
  json j{{"model", o.model}, {"nodes", o.nodes}, {"network_seed", o.network_seed},
         {"connected", !o.allow_disconnected}};
  if (o.model == "erdos-renyi") {
    j["mean_degree"] = o.mean_degree;
  } else {
    j["k"] = o.k;
    j["rewire"] = o.rewire;
  }
  return j;
}

inline int cmd_generate_network(const NetworkOptions& o, const std::string& out_path, std::ostream& out) {
  const auto net = obtain_network(o);
  Output dest(out_path, out);
  write_edge_list(dest.stream(), net.network, net.labels);
  return kExitOk;
}

struct SimulateOptions {
  NetworkOptions network;
  std::string model = "transmission";
  double a = 0.5, sigma = 0.5, length_scale = 2.0, noise = 0.5, b = 0.5;
  std::size_t kappa = 0;
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const auto net = obtain_network(o.network);
  Output dest(o.out, out);
  auto& s = dest.stream();
  if (o.model == "transmission") {
    write_node_values(s, net.labels, direct_transmission(net.network, {o.a, o.sigma, o.kappa, o.seed}));
  } else if (o.model == "latent") {
    write_node_values(s, net.labels, latent_variable_outcome(net.network, {o.length_scale, o.noise, o.seed}));
  } else if (o.model == "confounded") {
    write_node_values(s, net.labels, degree_confounded_covariate(net.network, {o.b, o.noise, o.seed}));
  } else if (o.model == "monotone") {
    const auto [x, y] = monotone_pair(net.network.size(), o.seed);
    s << "node,x,y\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      s << net.labels[i] << ',' << detail::format_number(x[i]) << ',' << detail::format_number(y[i]) << '\n';
    }
  } else {
    throw input_error("bad-model", "unknown model '" + o.model + "' (transmission, latent, confounded, monotone)");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentOptions {
  NetworkOptions network;
  std::string name;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  std::optional<unsigned> threads;
  std::size_t permutations = 500;
  double alpha = 0.05;
  double level = 0.95;
  bool replicates = false;
  std::string format = "csv";
  std::string out = ".";
  std::optional<std::vector<std::size_t>> kappas;
  std::optional<std::vector<double>> sigmas, lambdas, effects;
  std::optional<double> a, sigma;
  std::optional<std::size_t> kappa;
  std::optional<double> outcome_effect;
  bool control_degree = false;
};

inline ExperimentReport run_named_experiment(const ExperimentOptions& o, const Network& net, unsigned threads) {
  MonteCarloOptions mc{o.reps, o.seed, threads, o.permutations, o.alpha, o.level, o.replicates};
  if (o.name == "correlation-distribution") {
    CorrelationDistributionParams p;
    if (o.sigmas) p.sigmas = *o.sigmas;
    if (o.a) p.a = *o.a;
    if (o.kappa) p.kappa = *o.kappa;
    return run_correlation_distribution(net, p, mc);
  }
  if (o.name == "coverage") {
    CoverageParams p;
    if (o.kappas) p.kappas = *o.kappas;
    if (o.a) p.a = *o.a;
    if (o.sigma) p.sigma = *o.sigma;
    return run_coverage_experiment(net, p, mc);
  }
  if (o.name == "spurious-regression") {
    SpuriousRegressionParams p;
    if (o.kappas) p.kappas = *o.kappas;
    if (o.a) p.a = *o.a;
    if (o.sigma) p.sigma = *o.sigma;
    return run_spurious_regression_experiment(net, p, mc);
  }
  if (o.name == "degree-confounding") {
    DegreeConfoundingParams p;
    if (o.effects) p.effects = *o.effects;
    if (o.outcome_effect) p.outcome_effect = *o.outcome_effect;
    p.control_degree = o.control_degree;
    return run_degree_confounding_experiment(net, p, mc);
  }
  if (o.name == "gls-correction") {
    GlsCorrectionParams p;
    if (o.kappas) p.kappas = *o.kappas;
    if (o.lambdas) p.lambdas = *o.lambdas;
    if (o.a) p.a = *o.a;
    if (o.sigma) p.sigma = *o.sigma;
    return run_gls_correction_experiment(net, p, mc);
  }
  std::string valid;
  for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw input_error("unknown-experiment", "unknown experiment '" + o.name + "'; valid names: " + valid);
}

inline int cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  const bool known = std::find(experiment_names().begin(), experiment_names().end(), o.name) !=
                     experiment_names().end();
  if (!known) run_named_experiment(o, Network(), 1);  // throws unknown-experiment
  const unsigned threads = resolve_threads(o.threads);
  const auto net = obtain_network(o.network);
  auto report = run_named_experiment(o, net.network, threads);
  report.config["tool"] = "netdep";
  report.config["version"] = NETDEP_VERSION;
  report.config["network_source"] = network_options_json(o.network);

  namespace fs = std::filesystem;
  const fs::path dir(o.out.empty() ? "." : o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw input_error("cannot-open", "cannot create output directory '" + dir.string() + "'");
  auto write = [&](const fs::path& p, auto&& writer) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw input_error("cannot-open", "cannot write '" + p.string() + "'");
    writer(f);
    out << p.string() << '\n';
  };
  if (o.format == "json") {
    write(dir / (o.name + "_report.json"), [&](std::ostream& f) { f << report_to_json(report).dump(2) << '\n'; });
  } else {
    write(dir / (o.name + "_report.csv"), [&](std::ostream& f) { write_report_csv(f, report); });
    if (o.replicates) {
      write(dir / (o.name + "_replicates.csv"), [&](std::ostream& f) { write_replicates_csv(f, report); });
    }
  }
  return kExitOk;
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return kExitInput;
    case ErrorKind::degenerate: return kExitDegenerate;
    case ErrorKind::numeric: return kExitNumeric;
  }
  return kExitNumeric;
}

}  // namespace cli

/// args[0] is the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect and correct for network dependence in node-level data", "netdep"};
  app.set_version_flag("--version", std::string("netdep ") + NETDEP_VERSION);
  app.require_subcommand(1);

  cli::TestOptions test_opts;
  auto* test = app.add_subcommand("test", "Moran's I test for network dependence");
  cli::add_test_options(*test, test_opts);

  cli::ResidualOptions resid_opts;
  auto* resid = app.add_subcommand("residual-test", "OLS fit, then the dependence test on its residuals");
  cli::add_test_options(*resid, resid_opts.test);
  resid->add_option("--design", resid_opts.design, "covariate CSV with header node,x1,...")->required();
  resid->add_flag("--no-intercept", resid_opts.no_intercept, "do not add an intercept column");
  resid->add_option("--level", resid_opts.level, "confidence level")->capture_default_str();

  cli::SimulateOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Simulate node values on a network");
  cli::add_network_options(*sim, sim_opts.network, true);
  sim->add_option("--model", sim_opts.model, "transmission | latent | confounded | monotone")
      ->check(CLI::IsMember({"transmission", "latent", "confounded", "monotone"}))
      ->capture_default_str();
  sim->add_option("--a", sim_opts.a, "transmission weight on the neighbour mean")->capture_default_str();
  sim->add_option("--sigma", sim_opts.sigma, "transmission step noise")->capture_default_str();
  sim->add_option("--kappa", sim_opts.kappa, "transmission steps")->capture_default_str();
  sim->add_option("--length-scale", sim_opts.length_scale, "latent kernel length scale")->capture_default_str();
  sim->add_option("--noise", sim_opts.noise, "latent / confounded noise scale")->capture_default_str();
  sim->add_option("--b", sim_opts.b, "confounded: effect of standardized degree")->capture_default_str();
  sim->add_option("--seed", sim_opts.seed, "seed")->capture_default_str();
  sim->add_option("--out", sim_opts.out, "output path (default stdout)");

  cli::ExperimentOptions exp_opts;
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment and write its report");
  exp->add_option("name", exp_opts.name, "correlation-distribution | coverage | spurious-regression | "
                                         "degree-confounding | gls-correction")
      ->required();
  cli::add_network_options(*exp, exp_opts.network, true);
  exp->add_option("--reps", exp_opts.reps, "replicates per setting")->capture_default_str();
  exp->add_option("--seed", exp_opts.seed, "master seed")->capture_default_str();
  exp->add_option("--threads", exp_opts.threads, "worker threads (default: $NETDEP_THREADS, else 1)");
  exp->add_option("--permutations", exp_opts.permutations, "permutations per Moran test")->capture_default_str();
  exp->add_option("--alpha", exp_opts.alpha, "rejection threshold")->capture_default_str();
  exp->add_option("--level", exp_opts.level, "confidence level")->capture_default_str();
  exp->add_flag("--replicates", exp_opts.replicates, "also write <name>_replicates.csv");
  exp->add_option("--format", exp_opts.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  exp->add_option("--out", exp_opts.out, "output directory")->capture_default_str();
  exp->add_option("--kappas", exp_opts.kappas, "comma-separated kappa list")->delimiter(',');
  exp->add_option("--sigmas", exp_opts.sigmas, "comma-separated sigma list")->delimiter(',');
  exp->add_option("--lambdas", exp_opts.lambdas, "comma-separated misspecification list")->delimiter(',');
  exp->add_option("--effects", exp_opts.effects, "comma-separated degree effects on the predictor")->delimiter(',');
  exp->add_option("--a", exp_opts.a, "transmission weight");
  exp->add_option("--sigma", exp_opts.sigma, "transmission step noise");
  exp->add_option("--kappa", exp_opts.kappa, "transmission steps (correlation-distribution)");
  exp->add_option("--outcome-effect", exp_opts.outcome_effect, "degree effect on the outcome");
  exp->add_flag("--control-degree", exp_opts.control_degree, "adjust for degree (degree-confounding)");

  cli::NetworkOptions gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-network", "Write a random network as a src,dst edge list");
  cli::add_network_options(*gen, gen_opts, false);
  gen->add_option("--seed", gen_opts.network_seed, "network seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output path (default stdout)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("netdep");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (test->parsed()) return cli::cmd_test(test_opts, out);
    if (resid->parsed()) return cli::cmd_residual_test(resid_opts, out);
    if (sim->parsed()) return cli::cmd_simulate(sim_opts, out);
    if (exp->parsed()) return cli::cmd_experiment(exp_opts, out);
    if (gen->parsed()) return cli::cmd_generate_network(gen_opts, gen_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace netdep
