#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mue/csv.hpp"
#include "mue/error.hpp"
#include "mue/network.hpp"

namespace mue {

struct OdEntry {
  std::string origin;
  std::string destination;
  double demand = 0.0;  // veh/h

  bool operator==(const OdEntry&) const = default;
};

/// Origin-destination demand table. Zero-demand rows are kept so that files
/// round-trip unchanged; the solvers skip them.
class ODMatrix {
public:
  ODMatrix() = default;

  explicit ODMatrix(std::vector<OdEntry> entries) : entries_(std::move(entries)) {
    std::map<std::pair<std::string, std::string>, bool> seen;
    for (const auto& e : entries_) {
      if (!(e.demand >= 0.0) || !std::isfinite(e.demand))
        throw ValidationError("OD pair (" + e.origin + ", " + e.destination +
                              ") has negative or non-finite demand");
      if (!seen.emplace(std::make_pair(e.origin, e.destination), true).second)
        throw SchemaError("duplicate OD pair (" + e.origin + ", " + e.destination + ")");
      total_ += e.demand;
    }
  }

  const std::vector<OdEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  double total_demand() const { return total_; }

  bool operator==(const ODMatrix& o) const { return entries_ == o.entries_; }

private:
  std::vector<OdEntry> entries_;
  double total_ = 0.0;
};

inline ODMatrix load_od(std::istream& src, std::string_view name = "od.csv") {
  auto t = csv::Table::read(src, name);
  t.require_columns({"origin_zone", "destination_zone", "demand"});
  std::vector<OdEntry> entries;
  std::map<std::pair<std::string, std::string>, bool> seen;
  for (const auto& r : t.rows()) {
    OdEntry e{t.get(r, "origin_zone"), t.get(r, "destination_zone"), t.number(r, "demand")};
    if (!seen.emplace(std::make_pair(e.origin, e.destination), true).second)
      throw SchemaError(t.where(r) + ": duplicate OD pair (" + e.origin + ", " + e.destination + ")");
    if (!(e.demand >= 0.0)) throw ValidationError(t.where(r) + ": negative demand");
    entries.push_back(std::move(e));
  }
  return ODMatrix(std::move(entries));
}

inline void write_od_csv(std::ostream& out, const ODMatrix& od) {
  csv::write_row(out, {"origin_zone", "destination_zone", "demand"});
  for (const auto& e : od.entries())
    csv::write_row(out, {e.origin, e.destination, csv::format_double(e.demand)});
}

/// Demand split between the two vehicle classes at one penetration rate.
/// Entry i of `gv`/`ev` belongs to entry i of the source matrix.
struct ClassDemand {
  std::vector<OdEntry> gv;
  std::vector<OdEntry> ev;
  double penetration = 0.0;

  double total_gv() const {
    double s = 0.0;
    for (const auto& e : gv) s += e.demand;
    return s;
  }
  double total_ev() const {
    double s = 0.0;
    for (const auto& e : ev) s += e.demand;
    return s;
  }
};

/// d_ev = R_e * q and d_gv = q - d_ev for every pair, without rounding.
inline ClassDemand split_demand(const ODMatrix& od, double penetration) {
  if (!(penetration >= 0.0 && penetration <= 1.0))
    throw DomainError("penetration rate must lie in [0, 1], got " + std::to_string(penetration));
  ClassDemand cd;
  cd.penetration = penetration;
  cd.gv.reserve(od.size());
  cd.ev.reserve(od.size());
  for (const auto& e : od.entries()) {
    double ev = penetration * e.demand;
    cd.ev.push_back({e.origin, e.destination, ev});
    cd.gv.push_back({e.origin, e.destination, e.demand - ev});
  }
  return cd;
}

struct CommuteDistanceStats {
  std::vector<double> bin_edges;  // km, size = bins + 1
  std::vector<double> density;    // demand share per bin, sums to 1
  double mu = 0.0;                // mean of ln(distance), demand weighted
  double sigma = 0.0;             // std dev of ln(distance), demand weighted
  double excluded_demand = 0.0;   // zero-distance pairs left out of the fit

  double mode() const { return std::exp(mu - sigma * sigma); }
  double median() const { return std::exp(mu); }
};

/// Demand-weighted straight-line commute distances between zone centroids
/// with a lognormal fit by weighted moment matching of log-distances.
inline CommuteDistanceStats commute_distance_stats(const ODMatrix& od,
                                                   std::span<const ZoneCentroid> zones,
                                                   CoordSystem cs = CoordSystem::km,
                                                   double bin_width_km = 2.5) {
  std::map<std::string, const ZoneCentroid*> by_id;
  for (const auto& z : zones) by_id[z.zone_id] = &z;

  std::vector<std::pair<double, double>> samples;  // (distance, weight)
  CommuteDistanceStats st;
  double max_d = 0.0;
  for (const auto& e : od.entries()) {
    auto a = by_id.find(e.origin), b = by_id.find(e.destination);
    if (a == by_id.end() || b == by_id.end())
      throw ReferentialError("OD pair (" + e.origin + ", " + e.destination +
                             ") references a zone without centroid");
    if (e.demand <= 0.0) continue;
    double d = planar_distance_km(cs, a->second->x, a->second->y, b->second->x, b->second->y);
    if (d <= 0.0) {
      st.excluded_demand += e.demand;
      continue;
    }
    samples.emplace_back(d, e.demand);
    max_d = std::max(max_d, d);
  }
  double w = 0.0, m1 = 0.0;
  for (auto [d, q] : samples) {
    w += q;
    m1 += q * std::log(d);
  }
  if (samples.empty() || w <= 0.0)
    throw FitError("no positive-distance demand to fit a lognormal distribution");
  st.mu = m1 / w;
  double var = 0.0;
  for (auto [d, q] : samples) var += q * (std::log(d) - st.mu) * (std::log(d) - st.mu);
  st.sigma = std::sqrt(var / w);

  auto bins = static_cast<std::size_t>(std::floor(max_d / bin_width_km)) + 1;
  st.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) st.bin_edges[i] = bin_width_km * static_cast<double>(i);
  st.density.assign(bins, 0.0);
  for (auto [d, q] : samples) {
    auto i = std::min(bins - 1, static_cast<std::size_t>(std::floor(d / bin_width_km)));
    st.density[i] += q / w;
  }
  return st;
}

}  // namespace mue
