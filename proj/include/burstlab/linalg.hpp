#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "burstlab/fast_system.hpp"

namespace burstlab {

template <std::size_t N>
Eigen::Matrix<double, int(N), int(N)> to_eigen(const Mat<N>& a) {
  Eigen::Matrix<double, int(N), int(N)> m;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) m(int(i), int(j)) = a[i][j];
  return m;
}

/// Eigenvalues sorted by decreasing real part. 2x2 uses the closed form,
/// larger matrices the Hessenberg-QR solver.
template <std::size_t N>
std::vector<std::complex<double>> eigenvalues(const Mat<N>& a) {
  std::vector<std::complex<double>> ev;
  ev.reserve(N);
  if constexpr (N == 2) {
    const double tr = a[0][0] + a[1][1];
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      ev.emplace_back(0.5 * tr + r, 0.0);
      ev.emplace_back(0.5 * tr - r, 0.0);
    } else {
      const double im = std::sqrt(-disc);
      ev.emplace_back(0.5 * tr, im);
      ev.emplace_back(0.5 * tr, -im);
    }
  } else {
    Eigen::EigenSolver<Eigen::Matrix<double, int(N), int(N)>> solver(to_eigen(a), false);
    for (int i = 0; i < int(N); ++i) ev.push_back(solver.eigenvalues()(i));
  }
  std::stable_sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return ev;
}

template <std::size_t N>
double determinant(const Mat<N>& a) {
  if constexpr (N == 2) {
    return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  } else {
    return to_eigen(a).determinant();
  }
}

/// Solves A x = b by partial-pivot LU.
template <int N>
Eigen::Matrix<double, N, 1> solve_dense(const Eigen::Matrix<double, N, N>& a,
                                        const Eigen::Matrix<double, N, 1>& b) {
  return a.partialPivLu().solve(b);
}

}  // namespace burstlab
