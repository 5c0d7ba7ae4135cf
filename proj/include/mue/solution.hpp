#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mue/assignment.hpp"

namespace mue {

enum class Method { fw, bfw, primal_dual, extra_gradient };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::fw: return "fw";
    case Method::bfw: return "bfw";
    case Method::primal_dual: return "pd";
    case Method::extra_gradient: return "eg";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "fw") return Method::fw;
  if (s == "bfw") return Method::bfw;
  if (s == "pd" || s == "primal_dual") return Method::primal_dual;
  if (s == "eg" || s == "extra_gradient") return Method::extra_gradient;
  return std::nullopt;
}

inline bool is_path_based(Method m) { return m == Method::primal_dual || m == Method::extra_gradient; }

enum class InitMode {
  all_or_nothing,  // everything on the free-flow shortest route
  uniform,         // equal split over a few rounds of generated routes
};

struct SolverOptions {
  Method method = Method::bfw;
  std::size_t max_iters = 5000;
  double rel_gap_tol = 1e-4;

  double alpha = 0.0;  // primal step (primal-dual), 0 = estimate from the cost Jacobian
  double beta = 0.0;   // dual step (primal-dual), 0 = derive from alpha's bound
  double tau = 0.0;    // extra-gradient step, 0 = 0.9 / estimated Lipschitz bound
  double g_epsilon = 1e-10;      // threshold on ||f+ - f||^2 + ||lambda+ - lambda||^2
  std::size_t inner_iters = 1;   // projection steps per column-generation pass
  std::size_t max_halvings = 20;

  std::vector<CapacityConstraint> capacity_constraints;
  double dual_bound = 1e6;  // |lambda| beyond this means the caps admit no feasible flow

  InitMode init = InitMode::all_or_nothing;
  std::size_t uniform_rounds = 4;

  std::uint64_t seed = 0;    // reserved; every solver is deterministic
  std::size_t threads = 0;   // 0 = MUE_THREADS or hardware concurrency

  void validate() const {
    if (!(rel_gap_tol > 0.0)) throw ValidationError("rel_gap_tol must be positive");
    if (!(g_epsilon > 0.0)) throw ValidationError("g_epsilon must be positive");
    if (alpha < 0.0 || beta < 0.0 || tau < 0.0) throw ValidationError("step sizes must be positive");
    if (inner_iters == 0) throw ValidationError("inner_iters must be at least 1");
    for (const auto& c : capacity_constraints)
      if (!(c.capacity >= 0.0)) throw ValidationError("capacity constraint must be non-negative");
  }
};

struct IterationRecord {
  std::size_t iteration = 0;
  double rel_gap = 0.0;        // max per-(class, OD) relative violation
  double aggregate_gap = 0.0;  // demand-weighted relative gap
  double objective = 0.0;      // Beckmann value
  double g = 0.0;              // squared primal/dual change of the last step
  double step = 0.0;           // line-search step or step size used
  std::string note;
};

struct EquilibriumSolution {
  Method method = Method::bfw;
  double penetration = 0.0;
  std::vector<OdPair> pairs;
  LinkFlows flows;
  std::vector<double> link_time;  // minutes at the final flows
  PathSet paths;
  std::vector<CapacityConstraint> constraints;
  std::vector<double> lambda;  // one per constraint
  std::vector<double> pi;      // per bundle equilibrium cost
  std::vector<IterationRecord> trace;
  double beckmann_value = 0.0;
  double rel_gap = 0.0;
  double aggregate_gap = 0.0;
  double complementarity = 0.0;
  double max_capacity_excess = 0.0;
  double skipped_intrazonal = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  bool path_based() const { return is_path_based(method); }
};

// ---------------------------------------------------------------------------
// Shared solver plumbing

/// Everything on the shortest route under the given link costs.
inline void load_all_or_nothing(PathSet& ps, const ShortestRoutes& routes) {
  for (std::size_t b = 0; b < ps.bundles.size(); ++b) {
    auto& bundle = ps.bundles[b];
    bundle.paths.clear();
    if (bundle.demand <= 0.0) continue;
    bundle.paths.push_back(Path{routes.path[b], bundle.demand});
  }
}

inline void spread_uniformly(PathSet& ps) {
  for (auto& bundle : ps.bundles) {
    if (bundle.paths.empty()) continue;
    double share = bundle.demand / static_cast<double>(bundle.paths.size());
    for (auto& p : bundle.paths) p.flow = share;
  }
}

/// Rescales a previous solution's paths onto the current demands. A bundle
/// that had no demand borrows the route shares of the other class on the
/// same OD pair; failing that it starts on the current shortest route.
inline void warm_start_paths(PathSet& ps, const PathSet& warm, const ShortestRoutes& routes) {
  const std::size_t n = ps.bundles.size();
  auto borrow = [&](std::size_t b) -> const PathBundle* {
    if (b < warm.bundles.size() && warm.bundles[b].flow_sum() > 0.0) return &warm.bundles[b];
    std::size_t other = b < n / 2 ? b + n / 2 : b - n / 2;
    if (other < warm.bundles.size() && warm.bundles[other].flow_sum() > 0.0) return &warm.bundles[other];
    return nullptr;
  };
  for (std::size_t b = 0; b < n; ++b) {
    auto& bundle = ps.bundles[b];
    bundle.paths.clear();
    if (bundle.demand <= 0.0) continue;
    if (const PathBundle* src = borrow(b)) {
      double s = src->flow_sum();
      for (const auto& p : src->paths)
        if (p.flow > 0.0) bundle.paths.push_back(Path{p.links, bundle.demand * p.flow / s});
    } else {
      bundle.paths.push_back(Path{routes.path[b], bundle.demand});
    }
  }
}

inline PathSet initial_paths(const Instance& inst, const SolverOptions& opt, const PathSet* warm,
                             std::size_t workers) {
  PathSet ps = make_path_set(inst);
  LinkFlows zero(inst.network().link_count());
  auto routes = shortest_routes(inst, evaluate_link_costs(inst, zero.total), workers);
  require_reachable(inst, routes);

  if (warm && warm->bundles.size() == ps.bundles.size()) {
    warm_start_paths(ps, *warm, routes);
    return ps;
  }
  load_all_or_nothing(ps, routes);
  if (opt.init == InitMode::uniform) {
    for (std::size_t r = 1; r < opt.uniform_rounds; ++r) {
      auto flows = link_flows_from_paths(inst, ps);
      add_columns(ps, shortest_routes(inst, evaluate_link_costs(inst, flows.total), workers));
      spread_uniformly(ps);
    }
  }
  return ps;
}

/// Fills the derived fields of a solution from its path set.
inline void finalize_solution(const Instance& inst, EquilibriumSolution& sol, std::size_t workers) {
  sol.penetration = inst.penetration();
  sol.pairs = inst.pairs();
  sol.skipped_intrazonal = inst.skipped_intrazonal();
  sol.flows = link_flows_from_paths(inst, sol.paths);
  auto costs = evaluate_link_costs(inst, sol.flows.total, sol.constraints, sol.lambda);
  sol.link_time = costs.time;
  if (inst.bundle_count() > 0) {
    auto routes = shortest_routes(inst, costs, workers);
    auto wr = wardrop_residual(inst, sol.paths, costs, routes);
    sol.pi = wr.shortest;
    sol.rel_gap = wr.max_violation;
    sol.aggregate_gap = wr.aggregate_gap;
  }
  sol.beckmann_value = beckmann_objective(inst, sol.flows);
  if (!std::isfinite(sol.beckmann_value)) throw DivergenceError("objective is not finite");
  auto cr = complementarity(sol.constraints, sol.lambda, sol.flows.total);
  sol.complementarity = cr.complementarity;
  sol.max_capacity_excess = cr.max_excess;
}

}  // namespace mue
