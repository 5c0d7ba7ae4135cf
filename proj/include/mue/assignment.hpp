#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mue/cost.hpp"
#include "mue/demand.hpp"
#include "mue/error.hpp"
#include "mue/network.hpp"
#include "mue/parallel.hpp"
#include "mue/shortest_path.hpp"

namespace mue {

// ---------------------------------------------------------------------------
// Problem instance

struct OdPair {
  std::string origin;
  std::string destination;
  std::uint32_t origin_node = 0;
  std::uint32_t destination_node = 0;
  std::array<double, kClassCount> demand{};  // indexed by class

  double total() const { return demand[0] + demand[1]; }
};

struct CapacityConstraint {
  std::uint32_t link = 0;
  double capacity = 0.0;  // veh/h
};

/// A network bound to class demands and a cost model. Intra-zonal pairs and
/// pairs with zero demand are dropped here; their volume is reported.
class Instance {
public:
  Instance(const Network& net, const ClassDemand& demand, const CostConfig& config)
      : net_(&net), config_(config), class_cost_(vehicle_costs(config)),
        penetration_(demand.penetration) {
    config_.validate();
    if (demand.gv.size() != demand.ev.size())
      throw ContractViolation("class demand tables differ in length");
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < demand.gv.size(); ++i) {
      const auto& g = demand.gv[i];
      const auto& e = demand.ev[i];
      double q = g.demand + e.demand;
      if (g.origin == g.destination) {
        skipped_intrazonal_ += q;
        continue;
      }
      auto o = net.endpoint_node(g.origin), d = net.endpoint_node(g.destination);
      if (!o || !d) {
        missing.push_back("(" + g.origin + ", " + g.destination + ")");
        continue;
      }
      if (q <= 0.0) continue;
      OdPair p{g.origin, g.destination, *o, *d, {g.demand, e.demand}};
      if (*o == *d) {
        skipped_intrazonal_ += q;
        continue;
      }
      pairs_.push_back(std::move(p));
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw ReferentialError("OD pairs reference unknown zones: " + list);
    }
    for (VehicleClass c : kClasses) {
      auto& off = offset_[index_of(c)];
      off.resize(net.link_count());
      for (std::size_t a = 0; a < net.link_count(); ++a)
        off[a] = class_cost_.per_km(c) * net.links()[a].length;
    }
  }

  const Network& network() const { return *net_; }
  const CostConfig& config() const { return config_; }
  const ClassCost& class_cost() const { return class_cost_; }
  const std::vector<OdPair>& pairs() const { return pairs_; }
  double penetration() const { return penetration_; }
  double skipped_intrazonal() const { return skipped_intrazonal_; }

  std::size_t bundle_count() const { return kClassCount * pairs_.size(); }
  std::size_t bundle_index(VehicleClass c, std::size_t pair) const {
    return index_of(c) * pairs_.size() + pair;
  }
  VehicleClass bundle_class(std::size_t b) const {
    return b < pairs_.size() ? VehicleClass::gv : VehicleClass::ev;
  }
  std::size_t bundle_pair(std::size_t b) const { return b % std::max<std::size_t>(1, pairs_.size()); }
  double bundle_demand(std::size_t b) const {
    return pairs_[bundle_pair(b)].demand[index_of(bundle_class(b))];
  }

  /// Flow-independent part of the generalized link cost, C_m * l_a.
  const std::vector<double>& class_offset(VehicleClass c) const { return offset_[index_of(c)]; }

  double total_demand() const {
    double s = 0.0;
    for (const auto& p : pairs_) s += p.total();
    return s;
  }

private:
  const Network* net_;
  CostConfig config_;
  ClassCost class_cost_;
  double penetration_ = 0.0;
  std::vector<OdPair> pairs_;
  double skipped_intrazonal_ = 0.0;
  std::array<std::vector<double>, kClassCount> offset_;
};

// ---------------------------------------------------------------------------
// Flows and paths

using LinkSequence = std::vector<std::uint32_t>;

struct Path {
  LinkSequence links;
  double flow = 0.0;
};

/// Working paths of one (class, OD pair).
struct PathBundle {
  VehicleClass cls = VehicleClass::gv;
  std::size_t pair = 0;
  double demand = 0.0;
  std::vector<Path> paths;

  std::optional<std::size_t> find(const LinkSequence& seq) const {
    for (std::size_t i = 0; i < paths.size(); ++i)
      if (paths[i].links == seq) return i;
    return std::nullopt;
  }

  double flow_sum() const {
    double s = 0.0;
    for (const auto& p : paths) s += p.flow;
    return s;
  }
};

struct PathSet {
  std::vector<PathBundle> bundles;  // index = class * pairs + pair
};

struct LinkFlows {
  std::array<std::vector<double>, kClassCount> by_class;
  std::vector<double> total;

  explicit LinkFlows(std::size_t links = 0) {
    for (auto& v : by_class) v.assign(links, 0.0);
    total.assign(links, 0.0);
  }

  void refresh_total() {
    for (std::size_t a = 0; a < total.size(); ++a) total[a] = by_class[0][a] + by_class[1][a];
  }
};

/// Empty bundles, one per (class, pair), demand filled in.
inline PathSet make_path_set(const Instance& inst) {
  PathSet ps;
  ps.bundles.resize(inst.bundle_count());
  for (std::size_t b = 0; b < ps.bundles.size(); ++b) {
    ps.bundles[b].cls = inst.bundle_class(b);
    ps.bundles[b].pair = inst.bundle_pair(b);
    ps.bundles[b].demand = inst.bundle_demand(b);
  }
  return ps;
}

/// Link flows by incidence from path flows, in fixed bundle order.
inline LinkFlows link_flows_from_paths(const Instance& inst, const PathSet& ps) {
  LinkFlows lf(inst.network().link_count());
  for (const auto& b : ps.bundles) {
    auto& v = lf.by_class[index_of(b.cls)];
    for (const auto& p : b.paths)
      for (auto a : p.links) v[a] += p.flow;
  }
  lf.refresh_total();
  return lf;
}

// ---------------------------------------------------------------------------
// Costs

struct LinkCosts {
  std::vector<double> time;                                // minutes
  std::array<std::vector<double>, kClassCount> generalized;  // dollars, incl. shadow prices
};

inline LinkCosts evaluate_link_costs(const Instance& inst, std::span<const double> total_flow,
                                     std::span<const CapacityConstraint> constraints = {},
                                     std::span<const double> lambda = {}) {
  const auto& links = inst.network().links();
  const auto& cfg = inst.config();
  LinkCosts lc;
  lc.time.resize(links.size());
  for (std::size_t a = 0; a < links.size(); ++a) lc.time[a] = link_time(links[a], cfg, total_flow[a]);
  for (VehicleClass c : kClasses) {
    auto& g = lc.generalized[index_of(c)];
    const auto& off = inst.class_offset(c);
    g.resize(links.size());
    for (std::size_t a = 0; a < links.size(); ++a) g[a] = cfg.vot * lc.time[a] + off[a];
    for (std::size_t i = 0; i < constraints.size() && i < lambda.size(); ++i)
      g[constraints[i].link] += lambda[i];
  }
  return lc;
}

inline double path_cost(const LinkSequence& seq, std::span<const double> link_cost) {
  double s = 0.0;
  for (auto a : seq) s += link_cost[a];
  return s;
}

// ---------------------------------------------------------------------------
// All-or-nothing loading

struct ShortestRoutes {
  std::vector<LinkSequence> path;  // per bundle, empty for zero-demand bundles
  std::vector<double> cost;        // per bundle, +inf when unreachable, NaN when skipped
};

/// Shortest generalized-cost path for every bundle with positive demand.
/// One Dijkstra per (class, origin); tasks run on `workers` threads and write
/// into per-bundle slots.
inline ShortestRoutes shortest_routes(const Instance& inst, const LinkCosts& costs,
                                      std::size_t workers) {
  struct Task {
    VehicleClass cls;
    std::uint32_t origin;
    std::vector<std::size_t> bundles;
  };
  std::vector<Task> tasks;
  for (VehicleClass c : kClasses) {
    std::map<std::uint32_t, std::size_t> by_origin;
    for (std::size_t p = 0; p < inst.pairs().size(); ++p) {
      if (inst.pairs()[p].demand[index_of(c)] <= 0.0) continue;
      auto o = inst.pairs()[p].origin_node;
      auto [it, fresh] = by_origin.emplace(o, tasks.size());
      if (fresh) tasks.push_back(Task{c, o, {}});
      tasks[it->second].bundles.push_back(inst.bundle_index(c, p));
    }
  }

  ShortestRoutes out;
  out.path.resize(inst.bundle_count());
  out.cost.assign(inst.bundle_count(), std::numeric_limits<double>::quiet_NaN());
  workers = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  std::vector<ShortestPathEngine> engines(workers, ShortestPathEngine(inst.network()));
  parallel_for(tasks.size(), workers, [&](std::size_t t, std::size_t w) {
    const Task& task = tasks[t];
    const auto& tree = engines[w].run(costs.generalized[index_of(task.cls)], task.origin);
    for (auto b : task.bundles) {
      auto dest = inst.pairs()[inst.bundle_pair(b)].destination_node;
      out.cost[b] = tree.cost[dest];
      out.path[b] = tree.path_to(inst.network(), dest);
    }
  });
  return out;
}

inline void require_reachable(const Instance& inst, const ShortestRoutes& routes) {
  std::string list;
  for (std::size_t b = 0; b < routes.cost.size(); ++b) {
    if (std::isinf(routes.cost[b])) {
      const auto& p = inst.pairs()[inst.bundle_pair(b)];
      list += (list.empty() ? "" : ", ") + std::string("(") + p.origin + ", " + p.destination + ")";
    }
  }
  if (!list.empty()) throw InfeasibleError("unreachable OD pairs with positive demand: " + list);
}

/// Adds each shortest route to its bundle if not already present. Returns
/// the index of the route within each bundle (unused for empty bundles).
inline std::vector<std::size_t> add_columns(PathSet& ps, const ShortestRoutes& routes) {
  std::vector<std::size_t> where(ps.bundles.size(), 0);
  for (std::size_t b = 0; b < ps.bundles.size(); ++b) {
    auto& bundle = ps.bundles[b];
    if (bundle.demand <= 0.0) continue;
    if (auto i = bundle.find(routes.path[b])) {
      where[b] = *i;
    } else {
      where[b] = bundle.paths.size();
      bundle.paths.push_back(Path{routes.path[b], 0.0});
    }
  }
  return where;
}

// ---------------------------------------------------------------------------
// Equilibrium checks

struct WardropResidual {
  std::vector<double> violation;  // per bundle, (mean used cost - shortest) / shortest
  std::vector<double> shortest;   // per bundle, pi_m^{rs}
  double max_violation = 0.0;
  double aggregate_gap = 0.0;     // demand-weighted relative gap
};

/// Wardrop residual from path costs under given link costs and fresh shortest
/// routes. Bundles with zero demand report 0.
inline WardropResidual wardrop_residual([[maybe_unused]] const Instance& inst, const PathSet& ps,
                                        const LinkCosts& costs, const ShortestRoutes& routes) {
  WardropResidual r;
  r.violation.assign(ps.bundles.size(), 0.0);
  r.shortest.assign(ps.bundles.size(), 0.0);
  double excess = 0.0, base = 0.0;
  for (std::size_t b = 0; b < ps.bundles.size(); ++b) {
    const auto& bundle = ps.bundles[b];
    if (bundle.demand <= 0.0) continue;
    const auto& lc = costs.generalized[index_of(bundle.cls)];
    double mu = routes.cost[b];
    double used = 0.0;
    for (const auto& p : bundle.paths) used += p.flow * path_cost(p.links, lc);
    double mean = used / bundle.demand;
    double v = mu > 0.0 ? std::max(0.0, (mean - mu) / mu) : 0.0;
    r.violation[b] = v;
    r.shortest[b] = mu;
    r.max_violation = std::max(r.max_violation, v);
    excess += std::max(0.0, used - bundle.demand * mu);
    base += bundle.demand * mu;
  }
  r.aggregate_gap = base > 0.0 ? excess / base : 0.0;
  return r;
}

/// gamma * sum_a integral(t_a) + sum_m sum_a C_m l_a x_{a,m}.
inline double beckmann_objective(const Instance& inst, const LinkFlows& flows) {
  const auto& links = inst.network().links();
  const auto& cfg = inst.config();
  double integral = 0.0, operating = 0.0;
  for (std::size_t a = 0; a < links.size(); ++a) {
    integral += link_integral(links[a], cfg, flows.total[a]);
    for (VehicleClass c : kClasses) operating += inst.class_offset(c)[a] * flows.by_class[index_of(c)][a];
  }
  return cfg.vot * integral + operating;
}

/// Largest lambda_a * (c_a - x_a), and largest capacity excess, over the
/// constrained links.
struct ComplementarityReport {
  double complementarity = 0.0;
  double max_excess = 0.0;
};

inline ComplementarityReport complementarity(std::span<const CapacityConstraint> cons,
                                             std::span<const double> lambda,
                                             std::span<const double> total_flow) {
  ComplementarityReport r;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    double slack = cons[i].capacity - total_flow[cons[i].link];
    r.complementarity = std::max(r.complementarity, std::abs(lambda[i] * slack));
    r.max_excess = std::max(r.max_excess, -slack);
  }
  return r;
}

}  // namespace mue
