#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mue/cost.hpp"
#include "mue/demand.hpp"
#include "mue/network.hpp"

// Synthetic networks used by the tests, the acceptance run and the CLI
// `generate` command. Everything is deterministic for a given seed.

namespace mue::fixtures {

struct Fixture {
  std::string name;
  Network base;                      // road links only
  std::vector<ZoneCentroid> zones;   // empty when OD endpoints are node ids
  Network net;                       // base plus connectors when zones exist
  ODMatrix od;
  CostConfig cost;
};

inline HierarchyDefaults default_road_classes() {
  return {{Hierarchy::expressway, {2200, 90}}, {Hierarchy::highway, {2000, 60}}, {Hierarchy::local, {1400, 40}}};
}

inline Link make_link(std::string id, std::uint32_t from, std::uint32_t to, double length_km,
                      double capacity, double speed_kmh, Hierarchy h = Hierarchy::local) {
  Link l;
  l.id = std::move(id);
  l.from = from;
  l.to = to;
  l.length = length_km;
  l.capacity = capacity;
  l.free_flow_speed = speed_kmh;
  l.hierarchy = h;
  l.free_flow_time = free_flow_minutes(length_km, speed_kmh);
  return l;
}

inline void attach(Fixture& f) {
  f.net = f.zones.empty() ? f.base : generate_connectors(f.base, f.zones);
}

/// Two parallel routes between home and work: a is 6 mi at 30 mph with
/// capacity 120, b is 7.5 mi at 40 mph with capacity 200; BPR alpha = beta = 1.
/// `gv_per_mile` sets the GV operating cost; `vot` the value of time.
inline Fixture dual_route(double gv_per_mile = 0.6, double vot = 0.3, double ev_per_mile = 0.2,
                          double demand = 100.0) {
  Fixture f;
  f.name = "dual-route";
  std::vector<Node> nodes{{"home", 0, 0, CoordSystem::km, false}, {"work", 8, 0, CoordSystem::km, false}};
  std::vector<Link> links{
      make_link("a", 0, 1, 6 * kKmPerMile, 120, 30 * kKmPerMile, Hierarchy::highway),
      make_link("b", 0, 1, 7.5 * kKmPerMile, 200, 40 * kKmPerMile, Hierarchy::highway)};
  f.base = Network(std::move(nodes), std::move(links));
  f.zones = {{"H", 0, 0}, {"W", 8, 0}};
  attach(f);
  f.od = ODMatrix({{"H", "W", demand}});
  f.cost.name = "dual-route";
  f.cost.p_gas = gv_per_mile * f.cost.mpg_gv;
  f.cost.ev_components.maint = ev_per_mile;
  f.cost.vot = vot;
  f.cost.bpr_alpha = 1.0;
  f.cost.bpr_beta = 1.0;
  f.cost.road_classes = default_road_classes();
  return f;
}

/// Time-only variant: zero operating costs and one dollar per minute.
inline Fixture dual_route_time_only(double demand = 100.0) { return dual_route(0.0, 1.0, 0.0, demand); }

inline std::string grid_node(std::size_t r, std::size_t c) {
  return "n" + std::to_string(r) + std::to_string(c);
}

/// 3x3 grid with links pointing right and down only, small capacities.
/// OD pairs n00 -> n11 (2 routes) and n01 -> n22 (3 routes), 2 veh/h each.
inline Fixture grid3x3() {
  Fixture f;
  f.name = "grid3x3";
  std::vector<Node> nodes;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      nodes.push_back({grid_node(r, c), double(c), -double(r), CoordSystem::km, false});
  std::vector<Link> links;
  // Varied attributes so the routes are not symmetric.
  const double len[12] = {1.0, 1.2, 0.9, 1.1, 1.3, 0.8, 1.0, 1.4, 1.1, 0.9, 1.2, 1.0};
  const double cap[12] = {1.5, 2.0, 1.0, 2.5, 1.2, 3.0, 2.0, 1.5, 1.0, 2.0, 1.5, 2.5};
  std::size_t k = 0;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      auto from = static_cast<std::uint32_t>(r * 3 + c);
      if (c + 1 < 3) {
        links.push_back(make_link("r" + std::to_string(r) + std::to_string(c), from, from + 1, len[k], cap[k], 40));
        ++k;
      }
      if (r + 1 < 3) {
        links.push_back(make_link("d" + std::to_string(r) + std::to_string(c), from, from + 3, len[k], cap[k], 40));
        ++k;
      }
    }
  f.base = Network(std::move(nodes), std::move(links));
  f.net = f.base;
  f.od = ODMatrix({{"n00", "n11", 2.0}, {"n01", "n22", 2.0}});
  f.cost.name = "grid3x3";
  f.cost.p_gas = 0.6 * f.cost.mpg_gv;
  f.cost.ev_components.maint = 0.2;
  f.cost.vot = 0.3;
  f.cost.bpr_alpha = 0.5;
  f.cost.bpr_beta = 1.5;
  f.cost.road_classes = default_road_classes();
  return f;
}

/// Braess-style network: s -> a -> t, s -> b -> t and the shortcut a -> b.
inline Fixture braess() {
  Fixture f;
  f.name = "braess";
  std::vector<Node> nodes{{"s", 0, 0, CoordSystem::km, false}, {"a", 1, 1, CoordSystem::km, false},
                          {"b", 1, -1, CoordSystem::km, false}, {"t", 2, 0, CoordSystem::km, false}};
  std::vector<Link> links{make_link("sa", 0, 1, 1.0, 4.0, 40), make_link("sb", 0, 2, 2.0, 40.0, 40),
                          make_link("ab", 1, 2, 0.2, 40.0, 40), make_link("at", 1, 3, 2.0, 40.0, 40),
                          make_link("bt", 2, 3, 1.0, 4.0, 40)};
  f.base = Network(std::move(nodes), std::move(links));
  f.net = f.base;
  f.od = ODMatrix({{"s", "t", 6.0}});
  f.cost.name = "braess";
  f.cost.p_gas = 0.6 * f.cost.mpg_gv;
  f.cost.ev_components.maint = 0.2;
  f.cost.vot = 0.3;
  f.cost.bpr_alpha = 1.0;
  f.cost.bpr_beta = 1.5;
  f.cost.road_classes = default_road_classes();
  return f;
}

/// Square grid of n x n nodes with links both ways between neighbours.
/// Every fifth row and column is highway, the rest local.
inline Network grid_network(std::size_t n, double spacing_km, std::uint32_t seed,
                            const HierarchyDefaults& rc = default_road_classes()) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(0.85, 1.15);
  std::vector<Node> nodes;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      nodes.push_back({std::to_string(r) + "_" + std::to_string(c), spacing_km * double(c),
                       spacing_km * double(r), CoordSystem::km, false});
  std::vector<Link> links;
  auto add = [&](std::size_t a, std::size_t b, bool major) {
    Hierarchy h = major ? Hierarchy::highway : Hierarchy::local;
    const auto& d = rc.at(h);
    double len = spacing_km * jitter(rng);
    auto ia = static_cast<std::uint32_t>(a), ib = static_cast<std::uint32_t>(b);
    links.push_back(make_link(nodes[a].id + ">" + nodes[b].id, ia, ib, len, d.capacity, d.free_flow_speed, h));
    links.push_back(make_link(nodes[b].id + ">" + nodes[a].id, ib, ia, len, d.capacity, d.free_flow_speed, h));
  };
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t i = r * n + c;
      if (c + 1 < n) add(i, i + 1, r % 5 == 0);
      if (r + 1 < n) add(i, i + n, c % 5 == 0);
    }
  return Network(std::move(nodes), std::move(links));
}

/// 10 x 10 grid, 50 random OD pairs between nodes, BPR beta = 1.5.
inline Fixture grid10x10(std::uint32_t seed = 7) {
  Fixture f;
  f.name = "grid10x10";
  f.base = grid_network(10, 0.8, seed);
  f.net = f.base;
  std::mt19937 rng(seed + 1);
  std::uniform_int_distribution<std::size_t> pick(0, f.base.node_count() - 1);
  std::uniform_real_distribution<double> q(300.0, 900.0);
  std::vector<OdEntry> entries;
  std::vector<std::pair<std::size_t, std::size_t>> used;
  while (entries.size() < 50) {
    std::size_t o = pick(rng), d = pick(rng);
    if (o == d) continue;
    bool dup = false;
    for (auto [a, b] : used) dup = dup || (a == o && b == d);
    if (dup) continue;
    used.emplace_back(o, d);
    entries.push_back({f.base.nodes()[o].id, f.base.nodes()[d].id, std::round(q(rng))});
  }
  f.od = ODMatrix(std::move(entries));
  f.cost.name = "grid10x10";
  f.cost.p_gas = 3.5;
  f.cost.p_ele = 0.13;
  f.cost.gv_components = {0.101, 0.18, 0.25, 0.08, 0.02, 0.055};
  f.cost.ev_components = {0.064, 0.08, 0.10, 0.08, 0.01, 0.01, -0.075};
  f.cost.bpr_alpha = 0.5;
  f.cost.bpr_beta = 1.5;
  f.cost.road_classes = default_road_classes();
  return f;
}

/// Zones scattered over a grid network with gravity-style demand whose
/// distance decay peaks at a few km. `partners` destinations per origin.
inline void scatter_zones(Fixture& f, std::size_t zones, double extent_km, std::size_t partners,
                          double total_demand, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, extent_km);
  f.zones.clear();
  for (std::size_t z = 0; z < zones; ++z)
    f.zones.push_back({"z" + std::to_string(z + 1), pos(rng), pos(rng)});
  attach(f);

  std::vector<OdEntry> entries;
  std::vector<double> weight;
  for (std::size_t o = 0; o < zones; ++o) {
    // Candidate destinations ranked by a lognormal-shaped distance preference.
    std::vector<std::pair<double, std::size_t>> score;
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    for (std::size_t d = 0; d < zones; ++d) {
      if (d == o) continue;
      double dist = std::hypot(f.zones[o].x - f.zones[d].x, f.zones[o].y - f.zones[d].y);
      double pref = std::exp(-std::pow(std::log(std::max(dist, 0.1) / 5.0), 2) / 0.5);
      score.emplace_back(-(pref * (0.5 + noise(rng))), d);
    }
    std::sort(score.begin(), score.end());
    for (std::size_t k = 0; k < partners && k < score.size(); ++k) {
      entries.push_back({f.zones[o].zone_id, f.zones[score[k].second].zone_id, 0.0});
      weight.push_back(-score[k].first);
    }
  }
  double wsum = 0.0;
  for (double w : weight) wsum += w;
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries[i].demand = std::round(100.0 * total_demand * weight[i] / wsum) / 100.0;
  f.od = ODMatrix(std::move(entries));
}

/// Desk-scale city: 23 x 23 grid (2024 links), 100 zones.
inline Fixture mini_city(std::uint32_t seed = 11) {
  Fixture f;
  f.name = "mini-city";
  f.base = grid_network(23, 0.6, seed);
  f.cost.name = "mini-city";
  f.cost.p_gas = 4.0;
  f.cost.p_ele = 0.13;
  f.cost.gv_components = {0.101, 0.18, 0.25, 0.08, 0.02, 0.055};
  f.cost.ev_components = {0.064, 0.08, 0.10, 0.08, 0.01, 0.01, -0.075};
  f.cost.bpr_alpha = 0.5;
  f.cost.bpr_beta = 1.5;
  f.cost.road_classes = default_road_classes();
  scatter_zones(f, 100, 0.6 * 22, 8, 60000.0, seed + 1);
  return f;
}

/// Network sized to Honolulu's zone count (117 zones).
inline Fixture honolulu_scale(std::uint32_t seed = 13) {
  Fixture f;
  f.name = "honolulu-scale";
  f.base = grid_network(25, 0.7, seed);
  f.cost.name = "honolulu-scale";
  f.cost.road_classes = default_road_classes();
  scatter_zones(f, 117, 0.7 * 24, 5, 50000.0, seed + 1);
  return f;
}

/// Network sized to Dallas's zone count and trip volume (328 zones,
/// 345,369 trips).
inline Fixture dallas_scale(std::uint32_t seed = 17) {
  Fixture f;
  f.name = "dallas-scale";
  f.base = grid_network(60, 0.5, seed);
  f.cost.name = "dallas-scale";
  f.cost.road_classes = default_road_classes();
  scatter_zones(f, 328, 0.5 * 59, 10, 345369.0, seed + 1);
  // Rounding per pair; put the remainder on the first pair so the total is exact.
  auto entries = f.od.entries();
  double s = 0.0;
  for (const auto& e : entries) s += e.demand;
  entries.front().demand += 345369.0 - s;
  entries.front().demand = std::round(entries.front().demand * 100.0) / 100.0;
  f.od = ODMatrix(std::move(entries));
  return f;
}

inline std::vector<Fixture> small_fixtures() { return {dual_route(), grid3x3(), braess(), grid10x10()}; }

}  // namespace mue::fixtures
