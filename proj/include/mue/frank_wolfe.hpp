#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mue/solution.hpp"

namespace mue {

namespace detail {

using ClassVectors = std::array<std::vector<double>, kClassCount>;

inline double h_product(std::span<const double> h, const ClassVectors& u, const ClassVectors& v) {
  double s = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) s += h[a] * (u[0][a] + u[1][a]) * (v[0][a] + v[1][a]);
  return s;
}

inline ClassVectors difference(const ClassVectors& a, const ClassVectors& b) {
  ClassVectors d;
  for (std::size_t m = 0; m < kClassCount; ++m) {
    d[m].resize(a[m].size());
    for (std::size_t i = 0; i < a[m].size(); ++i) d[m][i] = a[m][i] - b[m][i];
  }
  return d;
}

/// Derivative of the combined objective along `dir` at x + t * dir.
inline double directional_derivative(const Instance& inst, const LinkFlows& x,
                                     const ClassVectors& dir, double t) {
  const auto& links = inst.network().links();
  const auto& cfg = inst.config();
  double s = 0.0;
  for (std::size_t a = 0; a < links.size(); ++a) {
    double da = dir[0][a] + dir[1][a];
    if (da != 0.0) s += cfg.vot * link_time(links[a], cfg, std::max(0.0, x.total[a] + t * da)) * da;
    for (VehicleClass c : kClasses) s += inst.class_offset(c)[a] * dir[index_of(c)][a];
  }
  return s;
}

/// Exact line search on [0, 1] by bisection on the directional derivative.
inline double line_search(const Instance& inst, const LinkFlows& x, const ClassVectors& dir) {
  if (directional_derivative(inst, x, dir, 0.0) >= 0.0) return 0.0;
  if (directional_derivative(inst, x, dir, 1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60 && hi - lo > 1e-10; ++i) {
    double mid = 0.5 * (lo + hi);
    if (directional_derivative(inst, x, dir, mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Link-based Frank-Wolfe (method fw) and bi-conjugate Frank-Wolfe (method
/// bfw) on the combined convex program
///   min vot * sum_a int_0^{x_a} t_a + sum_m sum_a C_m l_a x_{a,m}
/// subject to per-class demand conservation. Path flows are carried along
/// with the link flows so per-OD costs can be audited afterwards.
inline EquilibriumSolution solve_fw(const Instance& inst, const SolverOptions& opt,
                                    const PathSet* warm = nullptr) {
  using detail::ClassVectors;
  opt.validate();
  const std::size_t workers = resolve_workers(opt.threads);
  const std::size_t nlinks = inst.network().link_count();
  const bool conjugate = opt.method == Method::bfw;

  EquilibriumSolution sol;
  sol.method = conjugate ? Method::bfw : Method::fw;
  sol.paths = initial_paths(inst, opt, warm, workers);

  // Per-bundle path weights of the previous two targets (bi-conjugate only).
  std::vector<std::vector<double>> w1(sol.paths.bundles.size()), w2(sol.paths.bundles.size());
  ClassVectors s1, s2;
  std::vector<double> step1, step2;  // aggregate link steps x_k - x_{k-1}, x_{k-1} - x_{k-2}
  bool have1 = false, have2 = false;

  for (std::size_t k = 0;; ++k) {
    LinkFlows x = link_flows_from_paths(inst, sol.paths);
    auto costs = evaluate_link_costs(inst, x.total);
    IterationRecord rec;
    rec.iteration = k;
    rec.objective = beckmann_objective(inst, x);
    if (!std::isfinite(rec.objective)) throw DivergenceError("objective is not finite at iteration " + std::to_string(k));
    if (inst.bundle_count() == 0) {
      sol.trace.push_back(rec);
      sol.converged = true;
      break;
    }
    auto routes = shortest_routes(inst, costs, workers);
    auto wr = wardrop_residual(inst, sol.paths, costs, routes);
    rec.rel_gap = wr.max_violation;
    rec.aggregate_gap = wr.aggregate_gap;
    if (wr.max_violation <= opt.rel_gap_tol) {
      sol.trace.push_back(rec);
      sol.converged = true;
      break;
    }
    if (k >= opt.max_iters) {
      sol.trace.push_back(rec);
      break;
    }

    auto where = add_columns(sol.paths, routes);
    for (std::size_t b = 0; b < sol.paths.bundles.size(); ++b) {
      w1[b].resize(sol.paths.bundles[b].paths.size(), 0.0);
      w2[b].resize(sol.paths.bundles[b].paths.size(), 0.0);
    }

    // All-or-nothing target y.
    ClassVectors y;
    for (auto& v : y) v.assign(nlinks, 0.0);
    for (std::size_t b = 0; b < sol.paths.bundles.size(); ++b) {
      const auto& bundle = sol.paths.bundles[b];
      if (bundle.demand <= 0.0) continue;
      for (auto a : bundle.paths[where[b]].links) y[index_of(bundle.cls)][a] += bundle.demand;
    }
    ClassVectors xc{x.by_class[0], x.by_class[1]};

    // Target weights: s = b0 * y + b1 * s1 + b2 * s2.
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    if (conjugate && have1) {
      std::vector<double> h(nlinks);
      for (std::size_t a = 0; a < nlinks; ++a)
        h[a] = inst.config().vot * link_time_derivative(inst.network().links()[a], inst.config(), x.total[a]);
      ClassVectors dy = detail::difference(y, xc), d1 = detail::difference(s1, xc);
      ClassVectors st1{step1, std::vector<double>(nlinks, 0.0)};
      auto norm = [&](const ClassVectors& u, const ClassVectors& v) {
        return std::sqrt(detail::h_product(h, u, u) * detail::h_product(h, v, v));
      };
      const double tiny = 1e-12;
      bool done = false;
      if (have2) {
        ClassVectors d2 = detail::difference(s2, xc);
        ClassVectors st2{step2, std::vector<double>(nlinks, 0.0)};
        double a11 = detail::h_product(h, d1, st1), a12 = detail::h_product(h, d2, st1);
        double a21 = detail::h_product(h, d1, st2), a22 = detail::h_product(h, d2, st2);
        double r1 = -detail::h_product(h, dy, st1), r2 = -detail::h_product(h, dy, st2);
        double det = a11 * a22 - a12 * a21;
        double scale = std::max(norm(d1, st1) * norm(d2, st2), norm(d2, st1) * norm(d1, st2));
        if (std::abs(det) > tiny * scale && scale > 0.0) {
          double c1 = (r1 * a22 - a12 * r2) / det, c2 = (a11 * r2 - a21 * r1) / det;
          if (c1 >= 0.0 && c2 >= 0.0) {
            b1 = c1;
            b2 = c2;
            done = true;
          }
        }
      }
      if (!done) {
        double a11 = detail::h_product(h, d1, st1);
        double scale = norm(d1, st1);
        if (std::abs(a11) > tiny * scale && scale > 0.0) {
          double c1 = -detail::h_product(h, dy, st1) / a11;
          if (c1 >= 0.0) b1 = c1;
        }
      }
      double sum = b0 + b1 + b2;
      b0 /= sum;
      b1 /= sum;
      b2 /= sum;
    }

    ClassVectors target;
    for (std::size_t m = 0; m < kClassCount; ++m) {
      target[m].resize(nlinks);
      for (std::size_t a = 0; a < nlinks; ++a)
        target[m][a] = b0 * y[m][a] + (b1 > 0 ? b1 * s1[m][a] : 0.0) + (b2 > 0 ? b2 * s2[m][a] : 0.0);
    }
    ClassVectors dir = detail::difference(target, xc);
    if (b0 < 1.0 && detail::directional_derivative(inst, x, dir, 0.0) >= 0.0) {
      // Not a descent direction under the combined weights; plain FW instead.
      b0 = 1.0;
      b1 = b2 = 0.0;
      target = y;
      dir = detail::difference(target, xc);
      rec.note = "fw-fallback";
    }

    double step = detail::line_search(inst, x, dir);
    rec.step = step;
    sol.trace.push_back(rec);

    // Path flows move toward the path weights of the target.
    for (std::size_t b = 0; b < sol.paths.bundles.size(); ++b) {
      auto& bundle = sol.paths.bundles[b];
      if (bundle.demand <= 0.0) continue;
      std::vector<double> w(bundle.paths.size(), 0.0);
      w[where[b]] += b0 * bundle.demand;
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += b1 * w1[b][i] + b2 * w2[b][i];
      for (std::size_t i = 0; i < w.size(); ++i)
        bundle.paths[i].flow = (1.0 - step) * bundle.paths[i].flow + step * w[i];
      if (conjugate) {
        w2[b] = std::move(w1[b]);
        w1[b] = std::move(w);
      }
    }

    if (conjugate) {
      std::vector<double> agg(nlinks);
      for (std::size_t a = 0; a < nlinks; ++a) agg[a] = step * (dir[0][a] + dir[1][a]);
      step2 = std::move(step1);
      step1 = std::move(agg);
      s2 = std::move(s1);
      s1 = std::move(target);
      have2 = have1;
      have1 = step > 0.0 && step < 1.0;
      if (!have1) have2 = false;
    }
    sol.iterations = k + 1;
  }

  finalize_solution(inst, sol, workers);
  return sol;
}

}  // namespace mue
