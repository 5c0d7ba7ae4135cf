#pragma once

// Independent reference computations for the tests. Nothing here calls the
// solver, cost or projection code under test; only the Network container is
// shared so the oracles can walk the same graph.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "mue/fixtures.hpp"
#include "mue/network.hpp"

namespace oracle {

/// Projection onto {f >= 0, sum f = total} from the KKT conditions: the
/// multiplier theta solves sum max(v_i - theta, 0) = total, found by bisection.
inline std::vector<double> simplex_projection(const std::vector<double>& v, double total) {
  std::vector<double> out(v.size(), 0.0);
  if (total == 0.0) return out;
  double lo = *std::min_element(v.begin(), v.end()) - total;
  double hi = *std::max_element(v.begin(), v.end());
  auto mass = [&](double theta) {
    double s = 0.0;
    for (double x : v) s += std::max(x - theta, 0.0);
    return s;
  };
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mass(mid) > total ? lo : hi) = mid;
  }
  double theta = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// All simple directed paths (as link index lists) from `from` to `to`.
inline std::vector<std::vector<std::uint32_t>> enumerate_paths(const mue::Network& net, std::uint32_t from,
                                                              std::uint32_t to) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> stack;
  std::vector<char> on(net.node_count(), 0);
  std::function<void(std::uint32_t)> dfs = [&](std::uint32_t u) {
    if (u == to) {
      out.push_back(stack);
      return;
    }
    on[u] = 1;
    for (auto li : net.out_links(u)) {
      auto v = net.links()[li].to;
      if (on[v]) continue;
      stack.push_back(li);
      dfs(v);
      stack.pop_back();
    }
    on[u] = 0;
  };
  dfs(from);
  return out;
}

/// Convex program over explicit path flows, written out from scratch:
///   vot * sum_a [t0 x + alpha t0 x^(b+1) / ((b+1) c^b)] + sum_m C_m sum_a l_a x_{a,m}
struct PathProgram {
  const mue::Network* net = nullptr;
  double vot = 0.0, alpha = 0.0, beta = 1.0;
  struct Bundle {
    int cls = 0;  // 0 gv, 1 ev
    double demand = 0.0;
    std::vector<std::vector<std::uint32_t>> paths;
  };
  std::vector<Bundle> bundles;
  double per_km[2] = {0.0, 0.0};

  std::vector<double> link_flows(const std::vector<std::vector<double>>& f) const {
    std::vector<double> x(net->link_count(), 0.0);
    for (std::size_t b = 0; b < bundles.size(); ++b)
      for (std::size_t p = 0; p < bundles[b].paths.size(); ++p)
        for (auto a : bundles[b].paths[p]) x[a] += f[b][p];
    return x;
  }

  /// Generalized cost of every path at the flows f (the VI operator).
  std::vector<std::vector<double>> path_costs(const std::vector<std::vector<double>>& f) const {
    auto x = link_flows(f);
    std::vector<std::vector<double>> out(bundles.size());
    for (std::size_t b = 0; b < bundles.size(); ++b)
      for (const auto& p : bundles[b].paths) {
        double s = 0.0;
        for (auto a : p) {
          const auto& l = net->links()[a];
          double t0 = 60.0 * l.length / l.free_flow_speed;
          s += vot * t0 * (1.0 + alpha * std::pow(x[a] / l.capacity, beta)) + per_km[bundles[b].cls] * l.length;
        }
        out[b].push_back(s);
      }
    return out;
  }

  double objective(const std::vector<std::vector<double>>& f) const {
    std::vector<double> x(net->link_count(), 0.0), xm[2];
    xm[0].assign(net->link_count(), 0.0);
    xm[1].assign(net->link_count(), 0.0);
    for (std::size_t b = 0; b < bundles.size(); ++b)
      for (std::size_t p = 0; p < bundles[b].paths.size(); ++p)
        for (auto a : bundles[b].paths[p]) {
          x[a] += f[b][p];
          xm[bundles[b].cls][a] += f[b][p];
        }
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const auto& l = net->links()[a];
      double t0 = 60.0 * l.length / l.free_flow_speed;
      s += vot * (t0 * x[a] + alpha * t0 * std::pow(x[a], beta + 1.0) / ((beta + 1.0) * std::pow(l.capacity, beta)));
      s += (per_km[0] * xm[0][a] + per_km[1] * xm[1][a]) * l.length;
    }
    return s;
  }
};

/// Exhaustive search over path splits on a `resolution` veh/h lattice, then
/// pairwise-transfer pattern search down to 1e-10 veh/h.
inline std::vector<std::vector<double>> brute_force_minimum(const PathProgram& prog, double resolution) {
  const std::size_t nb = prog.bundles.size();
  // Lattice points of every bundle.
  std::vector<std::vector<std::vector<double>>> options(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& bundle = prog.bundles[b];
    auto units = static_cast<int>(std::lround(bundle.demand / resolution));
    std::size_t k = bundle.paths.size();
    std::vector<int> cur(k, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
      if (i + 1 == k) {
        cur[i] = left;
        std::vector<double> f(k);
        for (std::size_t j = 0; j < k; ++j) f[j] = bundle.demand * cur[j] / std::max(units, 1);
        options[b].push_back(f);
        return;
      }
      for (int u = 0; u <= left; ++u) {
        cur[i] = u;
        rec(i + 1, left - u);
      }
    };
    rec(0, units);
  }
  std::vector<std::vector<double>> best, cur(nb);
  double best_val = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> walk = [&](std::size_t b) {
    if (b == nb) {
      double v = prog.objective(cur);
      if (v < best_val) {
        best_val = v;
        best = cur;
      }
      return;
    }
    for (const auto& o : options[b]) {
      cur[b] = o;
      walk(b + 1);
    }
  };
  walk(0);

  for (double step = resolution; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t i = 0; i < best[b].size(); ++i)
          for (std::size_t j = 0; j < best[b].size(); ++j) {
            if (i == j || best[b][i] < step) continue;
            auto trial = best;
            trial[b][i] -= step;
            trial[b][j] += step;
            double v = prog.objective(trial);
            if (v < best_val) {
              best_val = v;
              best = std::move(trial);
              improved = true;
            }
          }
    }
  }
  return best;
}

/// Explicit path program for a fixture at penetration r: every simple path
/// of every OD pair, demands split by hand, per-km costs from the raw prices.
inline PathProgram make_program(const mue::fixtures::Fixture& f, double r) {
  PathProgram prog;
  prog.net = &f.net;
  prog.vot = f.cost.vot;
  prog.alpha = f.cost.bpr_alpha;
  prog.beta = f.cost.bpr_beta;
  const auto& g = f.cost.gv_components;
  const auto& e = f.cost.ev_components;
  prog.per_km[0] = (f.cost.p_gas / f.cost.mpg_gv + g.maint + g.fix + g.dep + g.ins + g.add + g.env) / f.cost.r_dis;
  prog.per_km[1] = (f.cost.p_ele * f.cost.kappa_gal / f.cost.mpge_ev + e.maint + e.fix + e.dep + e.ins + e.add +
                    e.env + e.sub) /
                   f.cost.r_dis;
  for (int cls = 0; cls < 2; ++cls)
    for (const auto& entry : f.od.entries()) {
      double q = cls == 0 ? (1.0 - r) * entry.demand : r * entry.demand;
      if (q <= 0.0) continue;
      auto o = *f.net.endpoint_node(entry.origin), d = *f.net.endpoint_node(entry.destination);
      prog.bundles.push_back({cls, q, enumerate_paths(f.net, o, d)});
    }
  return prog;
}

}  // namespace oracle
