#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace burstlab {

/// Fixed-size state vector used by every integrated system.
template <std::size_t N>
using Vec = std::array<double, N>;

/// y + a * x
template <std::size_t N>
constexpr Vec<N> axpy(const Vec<N>& y, double a, const Vec<N>& x) {
  Vec<N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + a * x[i];
  return r;
}

template <std::size_t N>
double norm2(const Vec<N>& x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return std::sqrt(s);
}

template <std::size_t N>
double norm_inf(const Vec<N>& x) {
  double s = 0.0;
  for (double xi : x) s = std::max(s, std::abs(xi));
  return s;
}

template <std::size_t N>
bool all_finite(const Vec<N>& x) {
  for (double xi : x) {
    if (!std::isfinite(xi)) return false;
  }
  return true;
}

}  // namespace burstlab
