#pragma once

// Imposed elliptic paths in the (Ca, Na) plane.

#include <cmath>

#include "burstlab/error.hpp"
#include "burstlab/model.hpp"

namespace burstlab {

/// Ellipse with axes along Ca and Na, traced counter-clockwise at angular
/// speed eps (1/ms) starting from (ca0, na0).
struct EllipsePath {
  double ca_c = 0.0;  // uM, center
  double na_c = 0.0;  // mM, center
  double d = 1.0;     // aspect ratio
  double ca0 = 0.0;   // uM, initial point
  double na0 = 0.0;   // mM, initial point
  double eps = 0.0;   // 1/ms

  /// Path starting on the horizontal axis, na0 = na_c.
  static EllipsePath centered(double ca_c, double na_c, double d, double ca0, double eps) {
    return EllipsePath{ca_c, na_c, d, ca0, na_c, eps};
  }

  double period() const { return 2.0 * M_PI / eps; }

  friend bool operator==(const EllipsePath&, const EllipsePath&) = default;
};

inline void validate(const EllipsePath& path) {
  if (!(path.d > 0.0)) throw InvalidParameter("ellipse path: d must be > 0");
  if (!(path.eps > 0.0)) throw InvalidParameter("ellipse path: eps must be > 0");
  if (path.ca0 == path.ca_c && path.na0 == path.na_c) {
    throw InvalidParameter("ellipse path: initial point coincides with the center");
  }
}

/// Closed-form position at time t (ms).
inline SlowPoint ellipse_point(const EllipsePath& path, double t) {
  const double c = std::cos(path.eps * t);
  const double s = std::sin(path.eps * t);
  const double dca = path.ca0 - path.ca_c;
  const double dna = path.na0 - path.na_c;
  return SlowPoint{path.ca_c + dca * c - path.d * dna * s, path.na_c + dna * c + dca * s / path.d};
}

/// Vector field whose solutions are the ellipses of the family.
inline SlowPoint ellipse_rhs(SlowPoint s, const EllipsePath& path) {
  return SlowPoint{-path.eps * path.d * (s.na - path.na_c), path.eps / path.d * (s.ca - path.ca_c)};
}

/// (Ca - Ca_c)^2 + d^2 (Na - Na_c)^2, conserved along ellipse_rhs.
inline double ellipse_invariant(SlowPoint s, const EllipsePath& path) {
  const double a = s.ca - path.ca_c;
  const double b = path.d * (s.na - path.na_c);
  return a * a + b * b;
}

struct PathExtent {
  double ca_min = 0.0, ca_max = 0.0;
  double na_min = 0.0, na_max = 0.0;
  double delta = 0.0;
};

inline PathExtent path_extent(const EllipsePath& path) {
  const double delta = std::sqrt(ellipse_invariant({path.ca0, path.na0}, path));
  return PathExtent{path.ca_c - delta, path.ca_c + delta, path.na_c - delta / path.d,
                    path.na_c + delta / path.d, delta};
}

}  // namespace burstlab
