#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mue/simplex.hpp"
#include "mue/solution.hpp"

namespace mue {

namespace detail {

/// Flat view of path flows, in bundle order then path order.
inline std::vector<double> flatten_flows(const PathSet& ps) {
  std::vector<double> f;
  for (const auto& b : ps.bundles)
    for (const auto& p : b.paths) f.push_back(p.flow);
  return f;
}

inline void assign_flows(PathSet& ps, const std::vector<double>& f) {
  std::size_t i = 0;
  for (auto& b : ps.bundles)
    for (auto& p : b.paths) p.flow = f[i++];
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Effective path costs F + A^T lambda for every working path, flat order.
inline std::vector<double> effective_path_costs(const Instance& inst, const PathSet& ps,
                                                const std::vector<CapacityConstraint>& cons,
                                                const std::vector<double>& lambda) {
  auto flows = link_flows_from_paths(inst, ps);
  auto costs = evaluate_link_costs(inst, flows.total, cons, lambda);
  std::vector<double> c;
  for (const auto& b : ps.bundles)
    for (const auto& p : b.paths) c.push_back(path_cost(p.links, costs.generalized[index_of(b.cls)]));
  return c;
}

/// f <- Pi_Omega(f - step * cost), one simplex per bundle.
inline std::vector<double> projected_step(const PathSet& ps, const std::vector<double>& f,
                                          const std::vector<double>& cost, double step) {
  std::vector<double> out(f.size(), 0.0);
  std::size_t i = 0;
  std::vector<double> v;
  for (const auto& b : ps.bundles) {
    std::size_t n = b.paths.size();
    if (n == 0) continue;
    v.resize(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = f[i + j] - step * cost[i + j];
    auto proj = project_simplex(v, std::max(0.0, b.demand));
    std::copy(proj.begin(), proj.end(), out.begin() + static_cast<std::ptrdiff_t>(i));
    i += n;
  }
  return out;
}

/// Path-to-constraint incidence A: which constrained links each path uses.
inline std::vector<std::vector<std::size_t>> constraint_incidence(const PathSet& ps,
                                                                  const std::vector<CapacityConstraint>& cons) {
  std::vector<std::vector<std::size_t>> rows;
  std::vector<long> slot;
  if (!cons.empty()) {
    std::uint32_t maxl = 0;
    for (const auto& c : cons) maxl = std::max(maxl, c.link);
    slot.assign(maxl + 1, -1);
    for (std::size_t i = 0; i < cons.size(); ++i) slot[cons[i].link] = static_cast<long>(i);
  }
  for (const auto& b : ps.bundles)
    for (const auto& p : b.paths) {
      std::vector<std::size_t> r;
      for (auto a : p.links)
        if (a < slot.size() && slot[a] >= 0) r.push_back(static_cast<std::size_t>(slot[a]));
      rows.push_back(std::move(r));
    }
  return rows;
}

/// A f - c over the constraints, flat path flows.
inline std::vector<double> constraint_residual(const std::vector<std::vector<std::size_t>>& inc,
                                               const std::vector<CapacityConstraint>& cons,
                                               const std::vector<double>& f) {
  std::vector<double> r(cons.size());
  for (std::size_t i = 0; i < cons.size(); ++i) r[i] = -cons[i].capacity;
  for (std::size_t k = 0; k < f.size(); ++k)
    for (auto i : inc[k]) r[i] += f[k];
  return r;
}

/// Upper bound on ||A||^2 by max row count times max column count.
inline double incidence_norm_squared(const std::vector<std::vector<std::size_t>>& inc, std::size_t ncons) {
  if (ncons == 0) return 0.0;
  std::vector<double> per_con(ncons, 0.0);
  double col = 0.0;
  for (const auto& r : inc) {
    col = std::max(col, static_cast<double>(r.size()));
    for (auto i : r) per_con[i] += 1.0;
  }
  double row = *std::max_element(per_con.begin(), per_con.end());
  return std::max(1.0, row * col);
}

/// Largest eigenvalue of the path-cost Jacobian gamma * D^T diag(t') D on
/// the tangent space of the demand simplices, by projected power iteration.
/// Scaled by 1.25 to stay on the safe side of the estimate. With
/// `tangent` false the full Jacobian is used, which stays positive when every
/// bundle holds a single path.
inline double estimate_lipschitz(const Instance& inst, const PathSet& ps, const LinkFlows& x,
                                 bool tangent = true) {
  const auto& links = inst.network().links();
  const auto& cfg = inst.config();
  std::vector<double> h(links.size());
  for (std::size_t a = 0; a < links.size(); ++a) h[a] = cfg.vot * link_time_derivative(links[a], cfg, x.total[a]);

  std::size_t n = 0;
  for (const auto& b : ps.bundles) n += b.paths.size();
  if (n == 0) return 0.0;

  auto center = [&](std::vector<double>& v) {
    if (!tangent) return;
    std::size_t i = 0;
    for (const auto& b : ps.bundles) {
      std::size_t m = b.paths.size();
      if (m == 0) continue;
      double mean = 0.0;
      for (std::size_t j = 0; j < m; ++j) mean += v[i + j];
      mean /= static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) v[i + j] -= mean;
      i += m;
    }
  };
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };

  // Deterministic start vector with distinct entries.
  std::vector<double> v(n), link(links.size());
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.61803398875 * static_cast<double>(i % 7) + 0.1 * static_cast<double>(i % 3);
  center(v);
  double nv = norm(v);
  if (nv == 0.0) return 0.0;
  for (double& e : v) e /= nv;

  double lambda = 0.0;
  for (int it = 0; it < 30; ++it) {
    std::fill(link.begin(), link.end(), 0.0);
    std::size_t i = 0;
    for (const auto& b : ps.bundles)
      for (const auto& p : b.paths) {
        for (auto a : p.links) link[a] += v[i];
        ++i;
      }
    for (std::size_t a = 0; a < link.size(); ++a) link[a] *= h[a];
    std::vector<double> w(n, 0.0);
    i = 0;
    for (const auto& b : ps.bundles)
      for (const auto& p : b.paths) {
        for (auto a : p.links) w[i] += link[a];
        ++i;
      }
    center(w);
    double nw = norm(w);
    lambda = nw;
    if (nw == 0.0) break;
    for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / nw;
  }
  return 1.25 * lambda;
}

/// Drops paths below 1e-9 of the bundle demand; their flow goes to the
/// largest path of the bundle.
inline void drop_idle_paths(PathSet& ps) {
  for (auto& b : ps.bundles) {
    if (b.paths.size() <= 1 || b.demand <= 0.0) continue;
    double cut = 1e-9 * b.demand, moved = 0.0;
    std::vector<Path> keep;
    for (auto& p : b.paths) {
      if (p.flow < cut) moved += p.flow;
      else keep.push_back(std::move(p));
    }
    if (keep.empty()) continue;  // cannot happen while flows sum to demand
    auto big = std::max_element(keep.begin(), keep.end(),
                                [](const Path& a, const Path& c) { return a.flow < c.flow; });
    big->flow += moved;
    b.paths = std::move(keep);
  }
}

/// Objective used by the halving safeguard. Only meaningful without
/// capacity constraints.
inline double path_objective(const Instance& inst, const PathSet& ps, const std::vector<double>& f) {
  PathSet tmp = ps;
  assign_flows(tmp, f);
  return beckmann_objective(inst, link_flows_from_paths(inst, tmp));
}

/// lambda_i (c_i - x_i) below 1e-6 c_i on every constraint.
inline bool complementary(const std::vector<CapacityConstraint>& cons, const std::vector<double>& lambda,
                          const std::vector<double>& x) {
  for (std::size_t i = 0; i < cons.size(); ++i)
    if (std::abs(lambda[i] * (cons[i].capacity - x[cons[i].link])) >= 1e-6 * std::max(cons[i].capacity, 1e-12))
      return false;
  return true;
}

inline EquilibriumSolution solve_path_based(const Instance& inst, const SolverOptions& opt,
                                            const PathSet* warm, bool extra_gradient) {
  opt.validate();
  const std::size_t workers = resolve_workers(opt.threads);
  EquilibriumSolution sol;
  sol.method = extra_gradient ? Method::extra_gradient : Method::primal_dual;
  sol.constraints = opt.capacity_constraints;
  for (const auto& c : sol.constraints)
    if (c.link >= inst.network().link_count()) throw ValidationError("capacity constraint on unknown link");
  sol.lambda.assign(sol.constraints.size(), 0.0);
  sol.paths = initial_paths(inst, opt, warm, workers);
  const bool constrained = !sol.constraints.empty();

  double last_g = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0;; ++k) {
    LinkFlows x = link_flows_from_paths(inst, sol.paths);
    auto costs = evaluate_link_costs(inst, x.total, sol.constraints, sol.lambda);
    IterationRecord rec;
    rec.iteration = k;
    rec.objective = beckmann_objective(inst, x);
    rec.g = k == 0 ? 0.0 : last_g;
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
    double excess = constrained ? complementarity(sol.constraints, sol.lambda, x.total).max_excess : 0.0;
    bool feasible = !constrained || (excess <= 1e-6 * std::max(1.0, inst.total_demand()) &&
                                     complementary(sol.constraints, sol.lambda, x.total));
    if (k > 0 && last_g < opt.g_epsilon && wr.max_violation <= opt.rel_gap_tol && feasible) {
      sol.trace.push_back(rec);
      sol.converged = true;
      break;
    }
    if (k >= opt.max_iters) {
      sol.trace.push_back(rec);
      break;
    }

    add_columns(sol.paths, routes);

    double g_total = 0.0;
    for (std::size_t inner = 0; inner < opt.inner_iters; ++inner) {
      std::vector<double> f = flatten_flows(sol.paths);
      LinkFlows xi = link_flows_from_paths(inst, sol.paths);
      auto inc = constraint_incidence(sol.paths, sol.constraints);
      double la2 = incidence_norm_squared(inc, sol.constraints.size());
      double lf = estimate_lipschitz(inst, sol.paths, xi);
      if (lf <= 0.0) lf = estimate_lipschitz(inst, sol.paths, xi, false);
      if (lf <= 0.0) lf = 1e-12;

      double beta = opt.beta > 0.0 ? opt.beta : (constrained ? lf / la2 : 0.0);
      double bound;  // largest step the stability condition admits
      if (extra_gradient) bound = 0.9 / (constrained ? lf + std::sqrt(la2) : lf);
      else bound = 1.0 / (lf + (constrained ? la2 / beta : 0.0));
      double user = extra_gradient ? opt.tau : opt.alpha;
      double step = user > 0.0 ? (extra_gradient ? std::min(user, bound) : user) : bound;
      if (!extra_gradient && user > bound) rec.note = "step-above-bound";

      std::vector<double> cost = effective_path_costs(inst, sol.paths, sol.constraints, sol.lambda);
      double phi0 = constrained ? 0.0 : beckmann_objective(inst, xi);
      std::vector<double> fn, ln;
      for (std::size_t halving = 0;; ++halving) {
        ln = sol.lambda;
        if (!extra_gradient) {
          fn = projected_step(sol.paths, f, cost, step);
          if (constrained) {
            auto r = constraint_residual(inc, sol.constraints, fn);
            for (std::size_t i = 0; i < ln.size(); ++i) ln[i] = std::max(0.0, sol.lambda[i] + beta * r[i]);
          }
        } else {
          std::vector<double> ft = projected_step(sol.paths, f, cost, step);
          std::vector<double> lt = sol.lambda;
          if (constrained) {
            auto r = constraint_residual(inc, sol.constraints, f);
            for (std::size_t i = 0; i < lt.size(); ++i) lt[i] = std::max(0.0, sol.lambda[i] + step * r[i]);
          }
          PathSet tilde = sol.paths;
          assign_flows(tilde, ft);
          std::vector<double> ct = effective_path_costs(inst, tilde, sol.constraints, lt);
          fn = projected_step(sol.paths, f, ct, step);
          if (constrained) {
            auto r = constraint_residual(inc, sol.constraints, ft);
            for (std::size_t i = 0; i < ln.size(); ++i) ln[i] = std::max(0.0, sol.lambda[i] + step * r[i]);
          }
        }
        if (constrained || halving >= opt.max_halvings) break;
        double phi1 = path_objective(inst, sol.paths, fn);
        if (phi1 <= phi0 + 1e-12 * std::abs(phi0)) break;
        step *= 0.5;
        rec.note = "halved";
      }
      rec.step = step;
      double g = squared_distance(fn, f) + squared_distance(ln, sol.lambda);
      g_total += g;
      assign_flows(sol.paths, fn);
      sol.lambda = std::move(ln);
      for (double l : sol.lambda)
        if (!(l <= opt.dual_bound))
          throw InfeasibleError("capacity constraints admit no feasible flow (dual norm exceeded bound)");
    }
    last_g = g_total;
    drop_idle_paths(sol.paths);
    sol.trace.push_back(rec);
    sol.iterations = k + 1;
  }

  finalize_solution(inst, sol, workers);
  return sol;
}

}  // namespace detail

/// Projected primal-dual gradient over working path sets with column
/// generation. Duals are only carried for the requested capacity caps.
inline EquilibriumSolution solve_primal_dual(const Instance& inst, const SolverOptions& opt,
                                             const PathSet* warm = nullptr) {
  return detail::solve_path_based(inst, opt, warm, false);
}

/// Extra-gradient (extrapolate, then update from the extrapolated point).
inline EquilibriumSolution solve_extra_gradient(const Instance& inst, const SolverOptions& opt,
                                                const PathSet* warm = nullptr) {
  return detail::solve_path_based(inst, opt, warm, true);
}

}  // namespace mue
