#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "netdep/graph.hpp"

namespace testutil {

inline netdep::Network path(std::size_t n) {
  std::vector<netdep::Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return netdep::Network(n, e);
}

inline netdep::Network complete(std::size_t n) {
  std::vector<netdep::Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.push_back({i, j});
  return netdep::Network(n, e);
}

inline netdep::Network star(std::size_t leaves) {
  std::vector<netdep::Edge> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.push_back({0, i});
  return netdep::Network(leaves + 1, e);
}

// Central two-sided band [lo, hi] holding at least `coverage` of Binomial(n, p).
inline std::pair<double, double> binomial_band(std::size_t n, double p, double coverage) {
  boost::math::binomial_distribution<double> b(static_cast<double>(n), p);
  const double tail = (1.0 - coverage) / 2.0;
  return {boost::math::quantile(b, tail), boost::math::quantile(boost::math::complement(b, tail))};
}

inline std::vector<double> normals(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace testutil
