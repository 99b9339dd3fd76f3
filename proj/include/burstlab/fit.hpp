#pragma once

// Fitting imposed-path parameters of a driven model to a target feature
// vector: Latin-hypercube sampling followed by Nelder-Mead.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "burstlab/error.hpp"
#include "burstlab/features.hpp"
#include "burstlab/landscape.hpp"
#include "burstlab/params_io.hpp"
#include "burstlab/paths.hpp"
#include "burstlab/simulate.hpp"

namespace burstlab {

enum class PathParam { CaC, NaC, D, Ca0, Eps };

inline const char* to_string(PathParam p) {
  switch (p) {
    case PathParam::CaC: return "ca_c";
    case PathParam::NaC: return "na_c";
    case PathParam::D: return "d";
    case PathParam::Ca0: return "ca0";
    default: return "eps";
  }
}

inline PathParam path_param_from_string(std::string_view s) {
  for (PathParam p : {PathParam::CaC, PathParam::NaC, PathParam::D, PathParam::Ca0, PathParam::Eps}) {
    if (s == to_string(p)) return p;
  }
  throw UsageError("unknown path parameter '" + std::string(s) + "' (expected ca_c, na_c, d, ca0, eps)");
}

inline double get(const EllipsePath& path, PathParam p) {
  switch (p) {
    case PathParam::CaC: return path.ca_c;
    case PathParam::NaC: return path.na_c;
    case PathParam::D: return path.d;
    case PathParam::Ca0: return path.ca0;
    default: return path.eps;
  }
}

/// Sets one parameter. Moving na_c moves na0 with it so the offset of the
/// initial point from the center is kept.
inline void set(EllipsePath& path, PathParam p, double x) {
  switch (p) {
    case PathParam::CaC: path.ca_c = x; break;
    case PathParam::NaC: path.na0 += x - path.na_c; path.na_c = x; break;
    case PathParam::D: path.d = x; break;
    case PathParam::Ca0: path.ca0 = x; break;
    case PathParam::Eps: path.eps = x; break;
  }
}

struct FreeParam {
  PathParam which = PathParam::D;
  double lo = 0.0, hi = 1.0;
};

inline constexpr double kNonDbPenalty = 1e6;

struct FitProblem {
  FeatureVector target;
  std::vector<FreeParam> free;
  EllipsePath base;  // fixed values of the parameters not in `free`
  FeatureWeights weights{};
  FeatureScales scales{};
  int budget = 300;
  std::uint64_t seed = 1;
  RunOptions run{};
  unsigned threads = sweep_threads();
};

inline void validate(const FitProblem& p) {
  if (p.free.empty()) throw InvalidParameter("fit: no free parameters");
  if (p.budget < 3) throw InvalidParameter("fit: budget must be >= 3");
  for (std::size_t a = 0; a < p.free.size(); ++a) {
    const auto& f = p.free[a];
    if (!(f.hi > f.lo)) throw InvalidParameter(std::string("fit: empty bounds for ") + to_string(f.which));
    if ((f.which == PathParam::D || f.which == PathParam::Eps) && !(f.lo > 0.0)) {
      throw InvalidParameter(std::string("fit: bounds of ") + to_string(f.which) + " must be > 0");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (p.free[b].which == f.which) {
        throw InvalidParameter(std::string("fit: duplicate free parameter ") + to_string(f.which));
      }
    }
  }
}

struct FitLogEntry {
  int index = 0;
  int phase = 1;  // 1 = sample, 2 = simplex
  std::vector<double> params;  // in the order of FitProblem::free
  EllipsePath path;
  double distance = kNonDbPenalty;
  bool db = false;
  std::string observed;  // crossing diagnostic for non-DB trials
  double best_so_far = std::numeric_limits<double>::infinity();
};

struct FitResult {
  EllipsePath best;
  double best_distance = std::numeric_limits<double>::infinity();
  FeatureVector best_features;
  std::vector<FitLogEntry> log;
};

namespace detail {

struct Trial {
  double distance = kNonDbPenalty;
  bool db = false;
  std::string observed;
  FeatureVector features;
};

template <class Fast>
Trial evaluate_trial(const Fast& fast, const CurveSet& curves, const FitProblem& prob,
                     const EllipsePath& path) {
  Trial t;
  try {
    const DrivenSystem<Fast> sys{fast, path};
    const auto tr = run_driven(sys, curves, prob.run);
    std::string obs;
    if (!is_db(tr, &obs)) {
      t.observed = obs;
      return t;
    }
    t.features = burst_features(tr);
    t.distance = feature_distance(t.features, prob.target, prob.weights, prob.scales);
    t.db = std::isfinite(t.distance);
    if (!t.db) t.distance = kNonDbPenalty;
  } catch (const std::exception& e) {
    t.observed = e.what();
  }
  return t;
}

inline EllipsePath path_at(const FitProblem& prob, const std::vector<double>& u) {
  EllipsePath path = prob.base;
  for (std::size_t k = 0; k < prob.free.size(); ++k) {
    const auto& f = prob.free[k];
    set(path, f.which, f.lo + std::clamp(u[k], 0.0, 1.0) * (f.hi - f.lo));
  }
  return path;
}

/// n points of a Latin hypercube in [0, 1]^dim.
inline std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dim,
                                                        std::mt19937_64& rng) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) pts[i][k] = (double(perm[i]) + unit(rng)) / double(n);
  }
  return pts;
}

}  // namespace detail

/// Two-phase fit. Phase 1 evaluates ceil(budget / 3) Latin-hypercube points
/// concurrently; phase 2 runs Nelder-Mead in box-normalized coordinates from
/// the best DB sample with the remaining budget. Non-DB trials score
/// kNonDbPenalty. For a fixed seed the result does not depend on the thread
/// count.
template <class Fast>
FitResult fit_path(const FitProblem& prob, const Fast& fast, const CurveSet& curves) {
  validate(prob);
  const std::size_t dim = prob.free.size();
  FitResult res;
  auto record = [&](int phase, const EllipsePath& path, const detail::Trial& t) {
    FitLogEntry e;
    e.index = int(res.log.size());
    e.phase = phase;
    for (std::size_t k = 0; k < dim; ++k) e.params.push_back(get(path, prob.free[k].which));
    e.path = path;
    e.distance = t.distance;
    e.db = t.db;
    e.observed = t.observed;
    if (t.db && t.distance < res.best_distance) {
      res.best_distance = t.distance;
      res.best = path;
      res.best_features = t.features;
    }
    e.best_so_far = res.best_distance;
    res.log.push_back(std::move(e));
  };

  // phase 1
  std::mt19937_64 rng(prob.seed);
  const std::size_t n1 = std::size_t((prob.budget + 2) / 3);
  const auto samples = detail::latin_hypercube(n1, dim, rng);
  std::vector<detail::Trial> trials(n1);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < n1; k = next++) {
      trials[k] = detail::evaluate_trial(fast, curves, prob, detail::path_at(prob, samples[k]));
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(prob.threads, unsigned(n1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::size_t best_k = n1;
  for (std::size_t k = 0; k < n1; ++k) {
    record(1, detail::path_at(prob, samples[k]), trials[k]);
    if (trials[k].db && (best_k == n1 || trials[k].distance < trials[best_k].distance)) best_k = k;
  }
  if (best_k == n1) {
    std::string seen;
    for (const auto& t : trials) {
      if (seen.find(t.observed) == std::string::npos) seen += "\n  " + t.observed;
    }
    throw ClassificationError("fit: no DB point among " + std::to_string(n1) + " samples; observed:" + seen);
  }

  // phase 2
  int remaining = prob.budget - int(n1);
  auto f = [&](const std::vector<double>& u) {
    std::vector<double> c(u);
    for (double& x : c) x = std::clamp(x, 0.0, 1.0);
    const EllipsePath path = detail::path_at(prob, c);
    const auto t = detail::evaluate_trial(fast, curves, prob, path);
    record(2, path, t);
    --remaining;
    return t.distance;
  };
  std::vector<std::vector<double>> simplex{samples[best_k]};
  std::vector<double> fv{trials[best_k].distance};
  const double step = 0.1;
  for (std::size_t k = 0; k < dim && remaining > 0; ++k) {
    auto v = samples[best_k];
    v[k] += v[k] + step <= 1.0 ? step : -step;
    simplex.push_back(v);
    fv.push_back(f(v));
  }
  if (simplex.size() != dim + 1) return res;

  auto combine = [&](const std::vector<double>& c, const std::vector<double>& w, double a) {
    std::vector<double> r(dim);
    for (std::size_t k = 0; k < dim; ++k) r[k] = std::clamp(c[k] + a * (w[k] - c[k]), 0.0, 1.0);
    return r;
  };
  while (remaining > 0) {
    std::vector<std::size_t> order(dim + 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (auto k : order) {
      s2.push_back(simplex[k]);
      f2.push_back(fv[k]);
    }
    simplex.swap(s2);
    fv.swap(f2);

    double size = 0.0;
    for (std::size_t k = 1; k <= dim; ++k) {
      for (std::size_t j = 0; j < dim; ++j) size = std::max(size, std::abs(simplex[k][j] - simplex[0][j]));
    }
    if (size < 1e-9) break;

    std::vector<double> c(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t j = 0; j < dim; ++j) c[j] += simplex[k][j] / double(dim);
    }
    const auto& worst = simplex[dim];
    const auto xr = combine(c, worst, -1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      if (remaining <= 0) {
        simplex[dim] = xr;
        fv[dim] = fr;
        break;
      }
      const auto xe = combine(c, worst, -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[dim] = xe;
        fv[dim] = fe;
      } else {
        simplex[dim] = xr;
        fv[dim] = fr;
      }
      continue;
    }
    if (fr < fv[dim - 1]) {
      simplex[dim] = xr;
      fv[dim] = fr;
      continue;
    }
    if (remaining <= 0) break;
    const bool outside = fr < fv[dim];
    const auto xc = outside ? combine(c, xr, 0.5) : combine(c, worst, 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[dim])) {
      simplex[dim] = xc;
      fv[dim] = fc;
      continue;
    }
    for (std::size_t k = 1; k <= dim && remaining > 0; ++k) {
      simplex[k] = combine(simplex[0], simplex[k], 0.5);
      fv[k] = f(simplex[k]);
    }
  }
  return res;
}

inline void write_fit_log_csv(std::ostream& os, const FitProblem& prob, const FitResult& r) {
  os << "index,phase";
  for (const auto& f : prob.free) os << ',' << to_string(f.which);
  os << ",db,distance,best_so_far,observed\n";
  for (const auto& e : r.log) {
    os << e.index << ',' << e.phase;
    for (double x : e.params) os << ',' << format_shortest(x);
    os << ',' << (e.db ? 1 : 0) << ',' << format_shortest(e.distance) << ',';
    if (std::isfinite(e.best_so_far)) os << format_shortest(e.best_so_far);
    std::string obs = e.observed;
    std::replace(obs.begin(), obs.end(), ',', ';');
    std::replace(obs.begin(), obs.end(), '\n', ' ');
    os << ',' << obs << '\n';
  }
}

/// Path in the config file format.
inline void write_path_config(std::ostream& os, const EllipsePath& p) {
  os << "path.ca_c = " << format_shortest(p.ca_c) << '\n'
     << "path.na_c = " << format_shortest(p.na_c) << '\n'
     << "path.d = " << format_shortest(p.d) << '\n'
     << "path.ca0 = " << format_shortest(p.ca0) << '\n'
     << "path.na0 = " << format_shortest(p.na0) << '\n'
     << "path.eps = " << format_shortest(p.eps) << '\n';
}

}  // namespace burstlab
