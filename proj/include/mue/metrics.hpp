#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mue/csv.hpp"
#include "mue/solution.hpp"

namespace mue {

/// How the per-OD travel time behind the system average is taken.
enum class TimeMode {
  mue,        // flow-weighted mean time over the used paths of each (class, OD)
  min_time,   // time of the minimum-time path at equilibrium flows
  free_flow,  // minimum free-flow time
};

inline const char* to_string(TimeMode m) {
  switch (m) {
    case TimeMode::mue: return "mue";
    case TimeMode::min_time: return "min_time";
    case TimeMode::free_flow: return "free_flow";
  }
  return "?";
}

namespace detail {

inline std::vector<double> min_times(const Network& net, const std::vector<OdPair>& pairs,
                                     std::span<const double> link_time) {
  std::vector<double> out(pairs.size(), 0.0);
  ShortestPathEngine engine(net);
  std::map<std::uint32_t, std::vector<std::size_t>> by_origin;
  for (std::size_t p = 0; p < pairs.size(); ++p) by_origin[pairs[p].origin_node].push_back(p);
  for (const auto& [o, list] : by_origin) {
    const auto& tree = engine.run(link_time, o);
    for (auto p : list) out[p] = tree.cost[pairs[p].destination_node];
  }
  return out;
}

}  // namespace detail

/// Demand-weighted average travel time in minutes.
inline double avg_travel_time(const EquilibriumSolution& sol, const Network& net,
                              TimeMode mode = TimeMode::mue) {
  double q = 0.0;
  for (const auto& p : sol.pairs) q += p.total();
  if (!(q > 0.0)) throw UndefinedError("average travel time undefined for zero total demand");

  if (mode == TimeMode::mue) {
    double s = 0.0;
    for (const auto& b : sol.paths.bundles)
      for (const auto& p : b.paths) s += p.flow * path_cost(p.links, sol.link_time);
    return s / q;
  }
  std::vector<double> t;
  if (mode == TimeMode::free_flow) {
    t.resize(net.link_count());
    for (std::size_t a = 0; a < t.size(); ++a) t[a] = net.links()[a].free_flow_time;
  } else {
    t = sol.link_time;
  }
  auto times = detail::min_times(net, sol.pairs, t);
  double s = 0.0;
  for (std::size_t p = 0; p < sol.pairs.size(); ++p) s += sol.pairs[p].total() * times[p];
  return s / q;
}

struct Change {
  double abs = 0.0;  // minutes
  double rel = 0.0;  // percent
};

inline Change compare(double t_base, double t_scenario) {
  if (!(t_base > 0.0)) throw UndefinedError("relative change undefined for a non-positive baseline");
  double d = t_scenario - t_base;
  return {d, 100.0 * d / t_base};
}

/// Share (percent) of the achievable reduction realised at t; not clamped.
inline double potential_savings(double t, double t_max, double t_min) {
  if (t_max == t_min) throw UndefinedError("potential savings undefined when t_max equals t_min");
  return 100.0 * (t_max - t) / (t_max - t_min);
}

/// PS(R_{i+1}) - PS(R_i) for consecutive levels.
inline std::vector<double> potential_savings_diff(std::span<const double> ps) {
  if (ps.size() < 2) throw ContractViolation("potential savings difference needs at least two points");
  std::vector<double> d(ps.size() - 1);
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) d[i] = ps[i + 1] - ps[i];
  return d;
}

struct VocResult {
  std::vector<double> per_link;  // every link, connectors included
  double total = 0.0;            // road links only
};

inline VocResult voc(const EquilibriumSolution& sol, const Network& net) {
  VocResult r;
  r.per_link.resize(net.link_count());
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    const Link& l = net.links()[a];
    if (!(l.capacity > 0.0)) throw ContractViolation("link '" + l.id + "' has no capacity");
    r.per_link[a] = sol.flows.total[a] / l.capacity;
    if (!l.is_connector()) r.total += r.per_link[a];
  }
  return r;
}

inline constexpr double kUsedFlow = 1e-9;  // veh/h

/// Fraction of road links carrying flow.
inline double road_utilization(const EquilibriumSolution& sol, const Network& net) {
  std::size_t roads = 0, used = 0;
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    if (net.links()[a].is_connector()) continue;
    ++roads;
    if (sol.flows.total[a] > kUsedFlow) ++used;
  }
  if (roads == 0) throw UndefinedError("road utilization undefined without road links");
  return static_cast<double>(used) / static_cast<double>(roads);
}

struct LinkValue {
  std::string link_id;
  double value = 0.0;
};

/// t_a / t_a^0 on road links, in link order.
inline std::vector<LinkValue> delay_factors(const EquilibriumSolution& sol, const Network& net) {
  std::vector<LinkValue> out;
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    const Link& l = net.links()[a];
    if (l.is_connector()) continue;
    out.push_back({l.id, sol.link_time[a] / l.free_flow_time});
  }
  return out;
}

/// scenario - base, matched by link id, in the base order.
inline std::vector<LinkValue> delay_factor_diff(const std::vector<LinkValue>& base,
                                                const std::vector<LinkValue>& scenario) {
  std::map<std::string, double> s;
  for (const auto& v : scenario) s[v.link_id] = v.value;
  std::set<std::string> b;
  for (const auto& v : base) b.insert(v.link_id);
  std::vector<std::string> only;
  for (const auto& v : base)
    if (!s.count(v.link_id)) only.push_back(v.link_id);
  for (const auto& v : scenario)
    if (!b.count(v.link_id)) only.push_back(v.link_id);
  if (!only.empty()) {
    std::sort(only.begin(), only.end());
    std::string list;
    for (const auto& id : only) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("delay factor link sets differ: " + list);
  }
  std::vector<LinkValue> out;
  for (const auto& v : base) out.push_back({v.link_id, s[v.link_id] - v.value});
  return out;
}

struct ProfileBin {
  double lo = 0.0;  // km
  double hi = 0.0;  // km, may be +inf
  std::size_t links = 0;
  double mean_time = std::numeric_limits<double>::quiet_NaN();       // minutes
  double mean_free_flow = std::numeric_limits<double>::quiet_NaN();  // minutes
  bool empty() const { return links == 0; }
};

inline std::vector<double> default_profile_edges() {
  return {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, std::numeric_limits<double>::infinity()};
}

/// Mean congested link time per length bin over road links; each link counts
/// once regardless of its flow. Bins are [lo, hi).
inline std::vector<ProfileBin> link_congested_time_profile(const EquilibriumSolution& sol,
                                                           const Network& net,
                                                           std::vector<double> edges = default_profile_edges()) {
  if (edges.size() < 2) throw ContractViolation("need at least two bin edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1])) throw ContractViolation("bin edges must be strictly increasing");
  std::vector<ProfileBin> bins(edges.size() - 1);
  std::vector<double> st(bins.size(), 0.0), sf(bins.size(), 0.0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].lo = edges[i];
    bins[i].hi = edges[i + 1];
  }
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    const Link& l = net.links()[a];
    if (l.is_connector()) continue;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (l.length >= bins[i].lo && l.length < bins[i].hi) {
        ++bins[i].links;
        st[i] += sol.link_time[a];
        sf[i] += l.free_flow_time;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].links == 0) continue;
    bins[i].mean_time = st[i] / static_cast<double>(bins[i].links);
    bins[i].mean_free_flow = sf[i] / static_cast<double>(bins[i].links);
  }
  return bins;
}

struct MetricsReport {
  double penetration = 0.0;
  TimeMode time_mode = TimeMode::mue;
  double avg_travel_time_mue = 0.0;
  double avg_travel_time_ff = 0.0;
  std::vector<std::string> link_ids;
  std::vector<double> voc_per_link;
  double voc_total = 0.0;
  double rur = 0.0;
  std::vector<double> link_congested_time;  // minutes, per link
  std::vector<double> delay_factor;         // per link, 1 on connectors by construction
  std::vector<bool> connector;
  std::vector<ProfileBin> profile;
  double skipped_intrazonal = 0.0;
  double rel_gap = 0.0;
  bool converged = false;
};

inline MetricsReport compute_metrics(const EquilibriumSolution& sol, const Network& net,
                                     TimeMode mode = TimeMode::mue) {
  MetricsReport m;
  m.penetration = sol.penetration;
  m.time_mode = mode;
  m.avg_travel_time_mue = avg_travel_time(sol, net, mode);
  m.avg_travel_time_ff = avg_travel_time(sol, net, TimeMode::free_flow);
  auto v = voc(sol, net);
  m.voc_per_link = std::move(v.per_link);
  m.voc_total = v.total;
  m.rur = road_utilization(sol, net);
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    const Link& l = net.links()[a];
    m.link_ids.push_back(l.id);
    m.link_congested_time.push_back(sol.link_time[a]);
    m.delay_factor.push_back(sol.link_time[a] / l.free_flow_time);
    m.connector.push_back(l.is_connector());
  }
  m.profile = link_congested_time_profile(sol, net);
  m.skipped_intrazonal = sol.skipped_intrazonal;
  m.rel_gap = sol.rel_gap;
  m.converged = sol.converged;
  return m;
}

inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json links = nlohmann::json::array();
  for (std::size_t a = 0; a < m.link_ids.size(); ++a)
    links.push_back({{"link_id", m.link_ids[a]},
                     {"voc", m.voc_per_link[a]},
                     {"congested_time", m.link_congested_time[a]},
                     {"delay_factor", m.delay_factor[a]},
                     {"connector", static_cast<bool>(m.connector[a])}});
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : m.profile)
    bins.push_back({{"lo_km", json_number(b.lo)},
                    {"hi_km", json_number(b.hi)},
                    {"links", b.links},
                    {"empty", b.empty()},
                    {"mean_time", json_number(b.mean_time)},
                    {"mean_free_flow_time", json_number(b.mean_free_flow)}});
  return {{"penetration", m.penetration},
          {"time_mode", to_string(m.time_mode)},
          {"avg_travel_time_mue", m.avg_travel_time_mue},
          {"avg_travel_time_ff", m.avg_travel_time_ff},
          {"voc_total", m.voc_total},
          {"voc_total_excludes_connectors", true},
          {"rur", m.rur},
          {"skipped_intrazonal_demand", m.skipped_intrazonal},
          {"rel_gap", m.rel_gap},
          {"converged", m.converged},
          {"links", links},
          {"congested_time_profile", bins}};
}

/// Per-link rows; the scalar summary goes to write_metrics_summary_csv.
inline void write_metrics_links_csv(std::ostream& out, const MetricsReport& m) {
  csv::write_row(out, {"link_id", "voc", "congested_time", "delay_factor", "connector"});
  for (std::size_t a = 0; a < m.link_ids.size(); ++a)
    csv::write_row(out, {m.link_ids[a], csv::format_double(m.voc_per_link[a]),
                         csv::format_double(m.link_congested_time[a]),
                         csv::format_double(m.delay_factor[a]), m.connector[a] ? "1" : "0"});
}

inline void write_metrics_summary_csv(std::ostream& out, const MetricsReport& m) {
  csv::write_row(out, {"penetration", "time_mode", "avg_travel_time_mue", "avg_travel_time_ff",
                       "voc_total", "rur", "skipped_intrazonal_demand", "rel_gap", "converged"});
  csv::write_row(out, {csv::format_double(m.penetration), to_string(m.time_mode),
                       csv::format_double(m.avg_travel_time_mue), csv::format_double(m.avg_travel_time_ff),
                       csv::format_double(m.voc_total), csv::format_double(m.rur),
                       csv::format_double(m.skipped_intrazonal), csv::format_double(m.rel_gap),
                       m.converged ? "1" : "0"});
}

struct ComparisonReport {
  double delta_t_abs = 0.0;
  double delta_t_rel = 0.0;
  std::vector<LinkValue> delta_delay_factor;
};

inline ComparisonReport compare_solutions(const EquilibriumSolution& base, const EquilibriumSolution& scenario,
                                          const Network& net, TimeMode mode = TimeMode::mue) {
  ComparisonReport r;
  auto c = compare(avg_travel_time(base, net, mode), avg_travel_time(scenario, net, mode));
  r.delta_t_abs = c.abs;
  r.delta_t_rel = c.rel;
  r.delta_delay_factor = delay_factor_diff(delay_factors(base, net), delay_factors(scenario, net));
  return r;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& v : r.delta_delay_factor) d.push_back({{"link_id", v.link_id}, {"delta_delay_factor", v.value}});
  return {{"delta_t_abs", r.delta_t_abs}, {"delta_t_rel", r.delta_t_rel}, {"links", d}};
}

}  // namespace mue
