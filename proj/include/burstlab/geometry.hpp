#pragma once

// Signed distance from a point of the (Ca, Na) plane to a bifurcation
// polyline ordered by increasing Na. Positive values lie on the right of the
// direction of travel, which is the larger-Ca side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "burstlab/error.hpp"
#include "burstlab/model.hpp"

namespace burstlab {

class SignedDistance {
 public:
  explicit SignedDistance(std::vector<SlowPoint> polyline) : pts_(std::move(polyline)) {
    if (pts_.size() < 2) throw InvalidParameter("signed distance: polyline needs >= 2 points");
  }

  const std::vector<SlowPoint>& polyline() const { return pts_; }

  double operator()(SlowPoint q) const {
    const std::size_t nseg = pts_.size() - 1;
    double best = std::numeric_limits<double>::infinity();
    double sign = 1.0;
    for (std::size_t i = 0; i < nseg; ++i) {
      const SlowPoint a = pts_[i];
      const SlowPoint b = pts_[i + 1];
      const double tx = b.ca - a.ca, ty = b.na - a.na;
      const double len2 = tx * tx + ty * ty;
      if (len2 == 0.0) continue;
      const double qx = q.ca - a.ca, qy = q.na - a.na;
      double t = (qx * tx + qy * ty) / len2;
      // first and last segments act as rays beyond the polyline ends
      const double lo = (i == 0) ? -std::numeric_limits<double>::infinity() : 0.0;
      const double hi = (i + 1 == nseg) ? std::numeric_limits<double>::infinity() : 1.0;
      t = std::clamp(t, lo, hi);
      const double dx = qx - t * tx, dy = qy - t * ty;
      const double dist = std::hypot(dx, dy);
      if (dist < best) {
        best = dist;
        const double cross = ty * qx - tx * qy;  // > 0 on the right side
        if (cross != 0.0) {
          sign = cross > 0.0 ? 1.0 : -1.0;
        } else {
          sign = 1.0;
        }
        if (t == 0.0 && i > 0) sign = vertex_sign(i, q);
        if (t == 1.0 && i + 1 < nseg) sign = vertex_sign(i + 1, q);
      }
    }
    return sign * best;
  }

 private:
  // side of q relative to an interior vertex, from the mean of the two
  // adjacent right normals
  double vertex_sign(std::size_t k, SlowPoint q) const {
    auto normal = [&](std::size_t i) {
      const double tx = pts_[i + 1].ca - pts_[i].ca, ty = pts_[i + 1].na - pts_[i].na;
      const double l = std::hypot(tx, ty);
      return std::pair{ty / l, -tx / l};
    };
    const auto [n1x, n1y] = normal(k - 1);
    const auto [n2x, n2y] = normal(k);
    const double s = (n1x + n2x) * (q.ca - pts_[k].ca) + (n1y + n2y) * (q.na - pts_[k].na);
    return s >= 0.0 ? 1.0 : -1.0;
  }

  std::vector<SlowPoint> pts_;
};

}  // namespace burstlab
