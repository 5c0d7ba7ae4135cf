#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mue/csv.hpp"
#include "mue/metrics.hpp"
#include "mue/solution.hpp"

namespace mue {

/// Capacity caps: CSV `link_id,capacity` (veh/h).
inline std::vector<CapacityConstraint> load_capacity_constraints(std::istream& in, const Network& net,
                                                                 std::string_view name = "constraints.csv") {
  auto t = csv::Table::read(in, name);
  t.require_columns({"link_id", "capacity"});
  std::vector<CapacityConstraint> out;
  for (const auto& r : t.rows()) {
    auto link = net.find_link(t.get(r, "link_id"));
    if (!link) throw ReferentialError(t.where(r) + ": unknown link '" + t.get(r, "link_id") + "'");
    double c = t.number(r, "capacity");
    if (!(c >= 0.0)) throw ValidationError(t.where(r) + ": negative capacity");
    for (const auto& e : out)
      if (e.link == *link) throw SchemaError(t.where(r) + ": duplicate constraint on '" + t.get(r, "link_id") + "'");
    out.push_back({*link, c});
  }
  return out;
}

struct SolutionLinkRow {
  std::string link_id;
  double flow_gv = 0.0, flow_ev = 0.0, flow_total = 0.0, time = 0.0, voc = 0.0;
  bool operator==(const SolutionLinkRow&) const = default;
};

inline std::vector<SolutionLinkRow> solution_link_rows(const EquilibriumSolution& sol, const Network& net) {
  std::vector<SolutionLinkRow> rows;
  for (std::size_t a = 0; a < net.link_count(); ++a) {
    const Link& l = net.links()[a];
    rows.push_back({l.id, sol.flows.by_class[0][a], sol.flows.by_class[1][a], sol.flows.total[a],
                    sol.link_time[a], sol.flows.total[a] / l.capacity});
  }
  return rows;
}

inline void write_solution_links_csv(std::ostream& out, const EquilibriumSolution& sol, const Network& net) {
  csv::write_row(out, {"link_id", "flow_gv", "flow_ev", "flow_total", "time", "voc"});
  for (const auto& r : solution_link_rows(sol, net))
    csv::write_row(out, {r.link_id, csv::format_double(r.flow_gv), csv::format_double(r.flow_ev),
                         csv::format_double(r.flow_total), csv::format_double(r.time),
                         csv::format_double(r.voc)});
}

inline std::vector<SolutionLinkRow> read_solution_links_csv(std::istream& in,
                                                            std::string_view name = "solution_links.csv") {
  auto t = csv::Table::read(in, name);
  t.require_columns({"link_id", "flow_gv", "flow_ev", "flow_total", "time", "voc"});
  std::vector<SolutionLinkRow> rows;
  for (const auto& r : t.rows())
    rows.push_back({t.get(r, "link_id"), t.number(r, "flow_gv"), t.number(r, "flow_ev"),
                    t.number(r, "flow_total"), t.number(r, "time"), t.number(r, "voc")});
  return rows;
}

inline void write_gap_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
  csv::write_row(out, {"iteration", "rel_gap", "aggregate_gap", "objective", "g", "step", "note"});
  for (const auto& r : trace)
    csv::write_row(out, {std::to_string(r.iteration), csv::format_double(r.rel_gap),
                         csv::format_double(r.aggregate_gap), csv::format_double(r.objective),
                         csv::format_double(r.g), csv::format_double(r.step), r.note});
}

inline std::vector<IterationRecord> read_gap_trace_csv(std::istream& in, std::string_view name = "gap_trace.csv") {
  auto t = csv::Table::read(in, name);
  t.require_columns({"iteration", "rel_gap", "aggregate_gap", "objective", "g", "step", "note"});
  std::vector<IterationRecord> out;
  for (const auto& r : t.rows()) {
    IterationRecord rec;
    rec.iteration = static_cast<std::size_t>(t.number(r, "iteration"));
    rec.rel_gap = t.number(r, "rel_gap");
    rec.aggregate_gap = t.number(r, "aggregate_gap");
    rec.objective = t.number(r, "objective");
    rec.g = t.number(r, "g");
    rec.step = t.number(r, "step");
    rec.note = t.get(r, "note");
    out.push_back(std::move(rec));
  }
  return out;
}

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration}, {"rel_gap", json_number(r.rel_gap)},
          {"aggregate_gap", json_number(r.aggregate_gap)}, {"objective", json_number(r.objective)},
          {"g", json_number(r.g)}, {"step", json_number(r.step)}, {"note", r.note}};
}

inline nlohmann::json solution_to_json(const EquilibriumSolution& sol, const Network& net) {
  nlohmann::json links = nlohmann::json::array();
  for (const auto& r : solution_link_rows(sol, net))
    links.push_back({{"link_id", r.link_id}, {"flow_gv", r.flow_gv}, {"flow_ev", r.flow_ev},
                     {"flow_total", r.flow_total}, {"time", r.time}, {"voc", r.voc}});
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : sol.trace) trace.push_back(to_json(r));

  nlohmann::json lambda = nlohmann::json::array();
  for (std::size_t i = 0; i < sol.constraints.size(); ++i)
    lambda.push_back({{"link_id", net.links()[sol.constraints[i].link].id},
                      {"capacity", sol.constraints[i].capacity},
                      {"lambda", sol.lambda[i]}});
  nlohmann::json pi = nlohmann::json::array();
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t b = 0; b < sol.paths.bundles.size(); ++b) {
    const auto& bundle = sol.paths.bundles[b];
    if (bundle.demand <= 0.0) continue;
    const auto& pair = sol.pairs[bundle.pair];
    pi.push_back({{"class", to_string(bundle.cls)}, {"origin", pair.origin},
                  {"destination", pair.destination}, {"demand", bundle.demand},
                  {"cost", b < sol.pi.size() ? json_number(sol.pi[b]) : nlohmann::json(nullptr)}});
    for (const auto& p : bundle.paths) {
      nlohmann::json ids = nlohmann::json::array();
      for (auto a : p.links) ids.push_back(net.links()[a].id);
      paths.push_back({{"class", to_string(bundle.cls)}, {"origin", pair.origin},
                       {"destination", pair.destination}, {"flow", p.flow}, {"links", ids}});
    }
  }
  return {{"method", to_string(sol.method)},
          {"path_based", sol.path_based()},
          {"penetration", sol.penetration},
          {"converged", sol.converged},
          {"iterations", sol.iterations},
          {"rel_gap", sol.rel_gap},
          {"aggregate_gap", sol.aggregate_gap},
          {"beckmann_value", sol.beckmann_value},
          {"complementarity", sol.complementarity},
          {"max_capacity_excess", sol.max_capacity_excess},
          {"skipped_intrazonal_demand", sol.skipped_intrazonal},
          {"links", links},
          {"gap_trace", trace},
          {"lambda", lambda},
          {"pi", pi},
          {"paths", paths}};
}

}  // namespace mue
