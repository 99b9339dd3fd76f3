#pragma once

// Scalar fields over the (Ca, Na) plane and their level sets: periods of the
// attracting orbit family and Re(lambda) of the depolarized equilibrium.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "burstlab/bifurcation.hpp"
#include "burstlab/error.hpp"
#include "burstlab/orbit.hpp"
#include "burstlab/params_io.hpp"

namespace burstlab {

enum class FieldKind { Period, ReLambda };

inline const char* to_string(FieldKind k) { return k == FieldKind::Period ? "PERIOD" : "RE_LAMBDA"; }

struct GridSpec {
  double ca_min = -0.1, ca_max = 0.4;
  double na_min = 4.8, na_max = 6.4;
  int n_ca = 121, n_na = 121;

  double ca(int i) const { return ca_min + (ca_max - ca_min) * i / double(n_ca - 1); }
  double na(int j) const { return na_min + (na_max - na_min) * j / double(n_na - 1); }
  double cell_ca() const { return (ca_max - ca_min) / double(n_ca - 1); }
  double cell_na() const { return (na_max - na_min) / double(n_na - 1); }
  double cell_diagonal() const { return std::hypot(cell_ca(), cell_na()); }
  std::size_t size() const { return std::size_t(n_ca) * std::size_t(n_na); }
};

inline void validate(const GridSpec& g) {
  if (g.n_ca < 2 || g.n_na < 2) throw InvalidParameter("grid: need at least 2 nodes per axis");
  if (!(g.ca_max > g.ca_min) || !(g.na_max > g.na_min)) {
    throw InvalidParameter("grid: empty range");
  }
}

/// Node values on a grid, row-major in Na (index j * n_ca + i).
struct ScalarField {
  GridSpec grid;
  FieldKind kind = FieldKind::Period;
  std::vector<std::optional<double>> values;

  const std::optional<double>& at(int i, int j) const {
    return values[std::size_t(j) * std::size_t(grid.n_ca) + std::size_t(i)];
  }
  std::size_t defined_count() const {
    return std::size_t(std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
  }
};

/// Sweep concurrency: BURSTLAB_THREADS if set to a positive integer,
/// otherwise the hardware concurrency.
inline unsigned sweep_threads() {
  if (const char* env = std::getenv("BURSTLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return unsigned(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates `f` at every node. Nodes are handed out dynamically to the
/// workers but each result is stored at its own index, so the field does
/// not depend on scheduling. Exceptions from a node leave it undefined.
inline ScalarField evaluate_field(FieldKind kind, const GridSpec& grid,
                                  const std::function<std::optional<double>(SlowPoint)>& f,
                                  unsigned threads = sweep_threads()) {
  validate(grid);
  ScalarField field{grid, kind, std::vector<std::optional<double>>(grid.size())};
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      const int i = int(k % std::size_t(grid.n_ca));
      const int j = int(k / std::size_t(grid.n_ca));
      try {
        field.values[k] = f({grid.ca(i), grid.na(j)});
      } catch (const std::exception&) {
        field.values[k].reset();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return field;
}

/// Re of the complex pair at the depolarized equilibrium; empty when there
/// is no equilibrium or no complex pair.
template <class Fast>
std::optional<double> relambda(const Fast& fast, SlowPoint slow, std::string* diagnostic = nullptr) {
  const auto e = depolarized_equilibrium(fast, slow);
  if (!e) {
    if (diagnostic) *diagnostic = "no equilibrium found";
    return std::nullopt;
  }
  const auto l = leading_complex_pair(e->eigenvalues);
  if (!l) {
    if (diagnostic) *diagnostic = "depolarized equilibrium has real eigenvalues";
    return std::nullopt;
  }
  return l->real();
}

template <class Fast>
ScalarField build_field(FieldKind kind, const GridSpec& grid, const Fast& fast,
                        unsigned threads = sweep_threads(), const PeriodOptions& popt = {}) {
  if (kind == FieldKind::Period) {
    return evaluate_field(kind, grid, [&](SlowPoint s) { return orbit_period(fast, s, popt).period; },
                          threads);
  }
  return evaluate_field(kind, grid, [&](SlowPoint s) { return relambda(fast, s); }, threads);
}

inline void write_field_csv(std::ostream& os, const ScalarField& f) {
  os << "ca,na,value\n";
  for (int j = 0; j < f.grid.n_na; ++j) {
    for (int i = 0; i < f.grid.n_ca; ++i) {
      os << format_shortest(f.grid.ca(i)) << ',' << format_shortest(f.grid.na(j)) << ',';
      if (const auto& v = f.at(i, j)) os << format_shortest(*v);
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Contours

struct ContourLine {
  double level = 0.0;
  std::vector<SlowPoint> points;
  bool closed = false;
};

struct ContourSet {
  std::vector<double> levels;
  std::vector<ContourLine> lines;  // grouped by level in the order of `levels`

  std::size_t count(double level) const {
    return std::size_t(std::count_if(lines.begin(), lines.end(),
                                     [&](const ContourLine& l) { return l.level == level; }));
  }
};

namespace detail {

struct EdgePoint {
  long edge;
  SlowPoint p;
};

}  // namespace detail

/// Marching squares on the cells whose four corners are defined. Saddle
/// cells are resolved by the mean of the corners. Segments sharing a grid
/// edge are chained into polylines.
inline ContourSet extract_contours(const ScalarField& f, const std::vector<double>& levels) {
  validate(f.grid);
  const GridSpec& g = f.grid;
  ContourSet out;
  out.levels = levels;
  // horizontal edge (i,j)-(i+1,j): 2k, vertical edge (i,j)-(i,j+1): 2k+1, k = j*n_ca+i
  auto hkey = [&](int i, int j) { return 2L * (long(j) * g.n_ca + i); };
  auto vkey = [&](int i, int j) { return 2L * (long(j) * g.n_ca + i) + 1; };

  for (double level : levels) {
    std::vector<std::pair<detail::EdgePoint, detail::EdgePoint>> segs;
    auto lerp = [&](int i0, int j0, int i1, int j1, double a, double b, long key) {
      const double t = (level - a) / (b - a);
      return detail::EdgePoint{key, {g.ca(i0) + t * (g.ca(i1) - g.ca(i0)), g.na(j0) + t * (g.na(j1) - g.na(j0))}};
    };
    for (int j = 0; j + 1 < g.n_na; ++j) {
      for (int i = 0; i + 1 < g.n_ca; ++i) {
        const auto &a = f.at(i, j), &b = f.at(i + 1, j), &c = f.at(i + 1, j + 1), &d = f.at(i, j + 1);
        if (!a || !b || !c || !d) continue;
        const double va = *a, vb = *b, vc = *c, vd = *d;
        const int code = (va > level) | ((vb > level) << 1) | ((vc > level) << 2) | ((vd > level) << 3);
        if (code == 0 || code == 15) continue;
        // edges: 0 bottom a-b, 1 right b-c, 2 top d-c, 3 left a-d
        auto edge = [&](int e) {
          switch (e) {
            case 0: return lerp(i, j, i + 1, j, va, vb, hkey(i, j));
            case 1: return lerp(i + 1, j, i + 1, j + 1, vb, vc, vkey(i + 1, j));
            case 2: return lerp(i, j + 1, i + 1, j + 1, vd, vc, hkey(i, j + 1));
            default: return lerp(i, j, i, j + 1, va, vd, vkey(i, j));
          }
        };
        auto add = [&](int e0, int e1) { segs.push_back({edge(e0), edge(e1)}); };
        const bool center_above = 0.25 * (va + vb + vc + vd) > level;
        switch (code) {
          case 1: case 14: add(3, 0); break;
          case 2: case 13: add(0, 1); break;
          case 3: case 12: add(3, 1); break;
          case 4: case 11: add(1, 2); break;
          case 6: case 9: add(0, 2); break;
          case 7: case 8: add(3, 2); break;
          case 5:
            if (center_above) { add(3, 2); add(0, 1); } else { add(3, 0); add(1, 2); }
            break;
          case 10:
            if (center_above) { add(3, 0); add(1, 2); } else { add(3, 2); add(0, 1); }
            break;
          default: break;
        }
      }
    }

    std::multimap<long, std::size_t> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      by_edge.emplace(segs[s].first.edge, s);
      by_edge.emplace(segs[s].second.edge, s);
    }
    std::vector<bool> used(segs.size(), false);
    auto other_seg = [&](long edge, std::size_t self) -> std::optional<std::size_t> {
      const auto [lo, hi] = by_edge.equal_range(edge);
      for (auto it = lo; it != hi; ++it) {
        if (it->second != self && !used[it->second]) return it->second;
      }
      return std::nullopt;
    };
    auto degree = [&](long edge) { return by_edge.count(edge); };

    auto walk = [&](std::size_t start, bool from_first) {
      ContourLine line;
      line.level = level;
      std::size_t s = start;
      used[s] = true;
      detail::EdgePoint head = from_first ? segs[s].first : segs[s].second;
      detail::EdgePoint tail = from_first ? segs[s].second : segs[s].first;
      line.points.push_back(head.p);
      line.points.push_back(tail.p);
      while (auto nx = other_seg(tail.edge, s)) {
        s = *nx;
        used[s] = true;
        tail = segs[s].first.edge == tail.edge ? segs[s].second : segs[s].first;
        line.points.push_back(tail.p);
      }
      line.closed = tail.edge == head.edge && line.points.size() > 2;
      if (line.closed) line.points.back() = line.points.front();
      out.lines.push_back(std::move(line));
    };
    // open polylines first, from an end that touches only one segment
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (used[s]) continue;
      if (degree(segs[s].first.edge) == 1) walk(s, true);
      else if (degree(segs[s].second.edge) == 1) walk(s, false);
    }
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (!used[s]) walk(s, true);
    }
  }
  return out;
}

/// Uniform levels lo, lo + (hi - lo)/(n - 1), ..., hi.
inline std::vector<double> uniform_levels(double lo, double hi, int n) {
  if (n < 1) throw InvalidParameter("uniform_levels: n must be >= 1");
  std::vector<double> l;
  for (int k = 0; k < n; ++k) l.push_back(n == 1 ? lo : lo + (hi - lo) * k / double(n - 1));
  return l;
}

inline void write_contours_csv(std::ostream& os, const ContourSet& c) {
  os << "level,segment,ca,na\n";
  for (std::size_t s = 0; s < c.lines.size(); ++s) {
    for (const auto& p : c.lines[s].points) {
      os << format_shortest(c.lines[s].level) << ',' << s << ',' << format_shortest(p.ca) << ','
         << format_shortest(p.na) << '\n';
    }
  }
}

}  // namespace burstlab
