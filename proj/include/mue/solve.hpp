#pragma once

#include "mue/frank_wolfe.hpp"
#include "mue/path_solvers.hpp"

namespace mue {

/// Runs the solver named in `opt.method`. `warm` seeds the working paths
/// from an earlier solution on the same instance layout.
inline EquilibriumSolution solve(const Instance& inst, const SolverOptions& opt,
                                 const PathSet* warm = nullptr) {
  if (!opt.capacity_constraints.empty() && !is_path_based(opt.method))
    throw UnsupportedError("capacity constraints need a path-based method (pd or eg)");
  switch (opt.method) {
    case Method::fw:
    case Method::bfw: return solve_fw(inst, opt, warm);
    case Method::primal_dual: return solve_primal_dual(inst, opt, warm);
    case Method::extra_gradient: return solve_extra_gradient(inst, opt, warm);
  }
  throw ContractViolation("unknown method");
}

}  // namespace mue
