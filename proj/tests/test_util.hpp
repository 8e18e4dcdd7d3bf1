#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "searchsurv/timeseries.hpp"

namespace searchsurv::fixtures {

inline Date day0() { return make_date(2020, 1, 6); }  // a Monday

inline TimeSeries series(std::vector<double> v, Date start = day0()) { return TimeSeries(start, std::move(v)); }

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

// Random walk: non-periodic, so lag searches have a unique optimum.
inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
  auto steps = gaussian_noise(n, seed);
  double acc = 0.0;
  for (auto& x : steps) {
    acc += x;
    x = acc;
  }
  return steps;
}

}  // namespace searchsurv::fixtures
