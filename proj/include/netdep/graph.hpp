#pragma once

// Undirected networks, structural summaries, random generators and
// edge-list ingestion.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "netdep/error.hpp"
#include "netdep/random.hpp"

namespace netdep {

/// Undirected edge stored with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Simple undirected network on nodes 0..n-1. Immutable once built.
class Network {
 public:
  Network() = default;

  /// Validates endpoints, rejects self-loops and deduplicates (i,j)/(j,i).
  Network(std::size_t n, std::vector<Edge> edges) : n_(n) {
    if (n == 0) throw input_error("empty-network", "network must have at least one node");
    for (auto& e : edges) {
      if (e.u >= n || e.v >= n) {
        throw input_error("bad-endpoint", "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                              ") has an endpoint outside [0," + std::to_string(n) + ")");
      }
      if (e.u == e.v) throw input_error("self-loop", "self-loop at node " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    neighbors_.assign(n, {});
    for (const auto& e : edges_) {
      neighbors_[e.u].push_back(e.v);
      neighbors_[e.v].push_back(e.u);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

  bool has_edge(std::size_t i, std::size_t j) const {
    const auto& nb = neighbors_.at(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (const auto& e : edges_) {
      a(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v)) = 1.0;
      a(static_cast<Eigen::Index>(e.v), static_cast<Eigen::Index>(e.u)) = 1.0;
    }
    return a;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Non-zero entry of a weight matrix.
struct WeightEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 0.0;
};

/// n x n nonnegative weights with zero diagonal and at least one positive
/// entry. Keeps both the dense form and the list of non-zeros; the
/// statistics iterate over the latter.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::MatrixXd dense) : dense_(std::move(dense)) {
    if (dense_.rows() != dense_.cols() || dense_.rows() == 0) {
      throw input_error("bad-weights", "weight matrix must be square and non-empty");
    }
    const auto n = dense_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = dense_(i, j);
        if (!std::isfinite(w) || w < 0.0) {
          throw input_error("bad-weights", "weights must be finite and nonnegative");
        }
        if (i == j && w != 0.0) throw input_error("bad-weights", "weight matrix diagonal must be zero");
        if (w > 0.0) {
          entries_.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
          s0_ += w;
        }
      }
    }
    if (entries_.empty()) throw degenerate_error("no-ties", "weight matrix has no positive entries");
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(dense_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }
  const std::vector<WeightEntry>& entries() const noexcept { return entries_; }
  /// Sum of all weights, equal to sum_ij (w_ij + w_ji) / 2.
  double s0() const noexcept { return s0_; }

  WeightMatrix scaled(double c) const { return WeightMatrix(dense_ * c); }
  WeightMatrix symmetrized() const { return WeightMatrix((dense_ + dense_.transpose()) / 2.0); }

 private:
  Eigen::MatrixXd dense_;
  std::vector<WeightEntry> entries_;
  double s0_ = 0.0;
};

inline WeightMatrix adjacency_weights(const Network& net) {
  if (net.edge_count() == 0) throw degenerate_error("no-ties", "network has no edges");
  return WeightMatrix(net.adjacency());
}

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// All-pairs hop counts by breadth-first search; kUnreachable between
/// components.
inline Eigen::MatrixXi geodesic_distances(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < net.size(); ++s) {
    auto row = d.row(static_cast<Eigen::Index>(s));
    row(static_cast<Eigen::Index>(s)) = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      const int du = row(static_cast<Eigen::Index>(u));
      for (std::size_t v : net.neighbors(u)) {
        if (row(static_cast<Eigen::Index>(v)) == kUnreachable) {
          row(static_cast<Eigen::Index>(v)) = du + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return d;
}

/// w_ij = d(i,j)^-gamma for reachable pairs, 0 otherwise.
inline WeightMatrix inverse_geodesic_weights(const Network& net, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw input_error("bad-gamma", "gamma must be positive");
  const Eigen::MatrixXi d = geodesic_distances(net);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (i != j && d(i, j) != kUnreachable) w(i, j) = std::pow(static_cast<double>(d(i, j)), -gamma);
    }
  }
  return WeightMatrix(std::move(w));
}

inline std::vector<std::size_t> degrees(const Network& net) {
  std::vector<std::size_t> deg(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) deg[i] = net.neighbors(i).size();
  return deg;
}

inline bool is_connected(const Network& net) {
  if (net.size() == 0) return false;
  std::vector<char> seen(net.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : net.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == net.size();
}

// ---------------------------------------------------------------------------
// Random generators

struct ErdosRenyi {
  double p = 0.0;
};

/// Watts-Strogatz: ring lattice with k neighbours per node (k even), each
/// lattice edge rewired with probability `rewire`.
struct SmallWorld {
  std::size_t k = 4;
  double rewire = 0.1;
};

using NetworkModel = std::variant<ErdosRenyi, SmallWorld>;

/// ER edge probability giving the requested expected mean degree.
inline ErdosRenyi erdos_renyi_with_mean_degree(std::size_t n, double mean_degree) {
  return ErdosRenyi{mean_degree / static_cast<double>(n - 1)};
}

inline constexpr std::size_t kMaxConnectAttempts = 1000;

namespace detail {

inline Network sample_network(std::size_t n, const ErdosRenyi& m, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (unif(rng) < m.p) edges.push_back({i, j});
    }
  }
  return Network(n, std::move(edges));
}

inline Network sample_network(std::size_t n, const SmallWorld& m, Rng& rng) {
  const std::size_t half = m.k / 2;
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  auto link = [&](std::size_t a, std::size_t b, char on) {
    adj[a][b] = on;
    adj[b][a] = on;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 1; j <= half; ++j) link(i, (i + j) % n, 1);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  // Rewire lattice edges (i, i+j) lap by lap; a rewired edge keeps i and
  // moves its other end to a uniformly chosen node that is not i and not
  // already a neighbour.
  for (std::size_t j = 1; j <= half; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = (i + j) % n;
      if (!adj[i][v] || !(unif(rng) < m.rewire)) continue;
      std::size_t degree_i = 0;
      for (char c : adj[i]) degree_i += static_cast<std::size_t>(c);
      if (degree_i >= n - 1) continue;
      std::size_t w = pick(rng);
      while (w == i || adj[i][w]) w = pick(rng);
      link(i, v, 0);
      link(i, w, 1);
    }
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adj[i][j]) edges.push_back({i, j});
    }
  }
  return Network(n, std::move(edges));
}

inline void validate(std::size_t n, const ErdosRenyi& m) {
  if (!(m.p >= 0.0 && m.p <= 1.0)) throw input_error("bad-model", "erdos-renyi p must lie in [0,1]");
  (void)n;
}

inline void validate(std::size_t n, const SmallWorld& m) {
  if (m.k == 0 || m.k % 2 != 0) throw input_error("bad-model", "small-world k must be a positive even number");
  if (m.k >= n) throw input_error("bad-model", "small-world k must be smaller than n");
  if (!(m.rewire >= 0.0 && m.rewire <= 1.0)) {
    throw input_error("bad-model", "small-world rewire probability must lie in [0,1]");
  }
}

}  // namespace detail

/// Deterministic in (n, model, seed). With require_connected, attempt t
/// (t = 0, 1, ...) uses sub-seed t until a connected draw appears.
inline Network generate_random_network(std::size_t n, const NetworkModel& model, std::uint64_t seed,
                                       bool require_connected) {
  if (n < 2) throw input_error("bad-model", "random networks need n >= 2");
  std::visit([n](const auto& m) { detail::validate(n, m); }, model);
  for (std::size_t attempt = 0; attempt < kMaxConnectAttempts; ++attempt) {
    Rng rng = make_stream(seed, {attempt});
    Network net = std::visit([&](const auto& m) { return detail::sample_network(n, m, rng); }, model);
    if (!require_connected || is_connected(net)) return net;
  }
  throw input_error("could-not-connect", "no connected network after " + std::to_string(kMaxConnectAttempts) +
                                             " attempts");
}

/// Network used by the simulation experiments unless another is supplied:
/// connected Watts-Strogatz graph, n = 200, k = 4, rewiring probability 0.1.
inline Network default_simulation_network(std::uint64_t seed = 1) {
  return generate_random_network(200, SmallWorld{4, 0.1}, seed, true);
}

// ---------------------------------------------------------------------------
// Edge-list ingestion

/// A network together with the node labels it was read from; index i in
/// the network corresponds to labels[i].
struct LabeledNetwork {
  Network network;
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> index;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool is_blank(const std::string& line) { return trim(line).empty(); }

}  // namespace detail

/// Reads a `src,dst` CSV. Labels map to indices in order of first
/// appearance. Data rows are numbered from 1 in error messages.
inline LabeledNetwork load_edge_list(std::istream& in) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) continue;
    have_header = true;
    break;
  }
  if (!have_header) throw input_error("empty-file", "edge list is empty");
  if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF && line.size() >= 3) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "src" || header[1] != "dst") {
    throw input_error("bad-header", "edge list header must be 'src,dst'");
  }

  LabeledNetwork out;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = out.index.try_emplace(label, out.labels.size());
    if (inserted) out.labels.push_back(label);
    return it->second;
  };

  std::vector<Edge> edges;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw input_error("malformed-row", "malformed edge at row " + std::to_string(row) + ": '" + line + "'");
    }
    if (fields[0] == fields[1]) {
      throw input_error("self-loop", "self-loop at row " + std::to_string(row) + " (node '" + fields[0] + "')");
    }
    const std::size_t a = intern(fields[0]);
    const std::size_t b = intern(fields[1]);
    edges.push_back({a, b});
  }
  if (edges.empty()) throw input_error("empty-file", "edge list has no edges");
  out.network = Network(out.labels.size(), std::move(edges));
  return out;
}

/// Writes a `src,dst` CSV using the given labels (indices when empty).
inline void write_edge_list(std::ostream& out, const Network& net, const std::vector<std::string>& labels = {}) {
  auto name = [&](std::size_t i) { return labels.empty() ? std::to_string(i) : labels.at(i); };
  out << "src,dst\n";
  for (const auto& e : net.edges()) out << name(e.u) << ',' << name(e.v) << '\n';
}

}  // namespace netdep
