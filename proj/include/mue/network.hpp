#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mue/csv.hpp"
#include "mue/error.hpp"

namespace mue {

/// Kilometres per mile. All lengths are stored in km, speeds in km/h and times
/// in minutes; mile-based inputs are converted once at ingestion.
inline constexpr double kKmPerMile = 1.609;

inline constexpr double kConnectorCapacity = 1.0e6;  // veh/h
inline constexpr double kConnectorSpeed = 40.0;      // km/h
inline constexpr double kMinConnectorLength = 1.0e-6;  // km

enum class Hierarchy { expressway, highway, local, connector };

inline const char* to_string(Hierarchy h) {
  switch (h) {
    case Hierarchy::expressway: return "expressway";
    case Hierarchy::highway: return "highway";
    case Hierarchy::local: return "local";
    case Hierarchy::connector: return "connector";
  }
  return "?";
}

inline std::optional<Hierarchy> parse_hierarchy(std::string_view s) {
  if (s == "expressway") return Hierarchy::expressway;
  if (s == "highway") return Hierarchy::highway;
  if (s == "local") return Hierarchy::local;
  if (s == "connector") return Hierarchy::connector;
  return std::nullopt;
}

enum class CoordSystem { lonlat, km };

inline const char* to_string(CoordSystem c) { return c == CoordSystem::lonlat ? "lonlat" : "km"; }

struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  CoordSystem coords = CoordSystem::km;
  bool centroid = false;  // zone centroid created by connector generation

  bool operator==(const Node&) const = default;
};

struct Link {
  std::string id;
  std::uint32_t from = 0;  // node index
  std::uint32_t to = 0;    // node index
  double length = 0.0;           // km
  double capacity = 0.0;         // veh/h
  double free_flow_speed = 0.0;  // km/h
  Hierarchy hierarchy = Hierarchy::local;
  double free_flow_time = 0.0;   // minutes

  bool is_connector() const { return hierarchy == Hierarchy::connector; }
  bool operator==(const Link&) const = default;
};

struct Zone {
  std::string id;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  std::uint32_t attached_node = 0;  // nearest road node
  std::uint32_t centroid_node = 0;  // node created for the zone

  bool operator==(const Zone&) const = default;
};

struct ZoneCentroid {
  std::string zone_id;
  double x = 0.0;
  double y = 0.0;
};

struct RoadClassDefaults {
  double capacity = 0.0;         // veh/h
  double free_flow_speed = 0.0;  // km/h
};

using HierarchyDefaults = std::map<Hierarchy, RoadClassDefaults>;

inline double free_flow_minutes(double length_km, double speed_kmh) {
  return 60.0 * length_km / speed_kmh;
}

/// Orders opaque ids numerically when both parse as integers, else
/// lexicographically. Used wherever a deterministic id tie-break is needed.
inline bool id_less(const std::string& a, const std::string& b) {
  auto as_int = [](const std::string& s) -> std::optional<long long> {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
  };
  auto ia = as_int(a), ib = as_int(b);
  if (ia && ib) return *ia < *ib;
  return a < b;
}

/// Immutable road network. Construction validates every invariant; after that
/// the object is only read, so it can be shared across solver workers.
class Network {
public:
  Network() = default;

  Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Zone> zones = {})
      : nodes_(std::move(nodes)), links_(std::move(links)), zones_(std::move(zones)) {
    index();
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Zone>& zones() const { return zones_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::span<const std::uint32_t> out_links(std::size_t node) const {
    return {out_index_.data() + out_offset_[node], out_index_.data() + out_offset_[node + 1]};
  }

  std::optional<std::uint32_t> find_node(const std::string& id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> find_link(const std::string& id) const {
    auto it = link_by_id_.find(id);
    if (it == link_by_id_.end()) return std::nullopt;
    return it->second;
  }

  const Zone* find_zone(const std::string& id) const {
    auto it = zone_by_id_.find(id);
    return it == zone_by_id_.end() ? nullptr : &zones_[it->second];
  }

  /// Node that trips from/to a zone start or end at: the zone's centroid node
  /// when zones exist, otherwise a node with the same id.
  std::optional<std::uint32_t> endpoint_node(const std::string& zone_or_node) const {
    if (const Zone* z = find_zone(zone_or_node)) return z->centroid_node;
    if (zones_.empty()) return find_node(zone_or_node);
    return std::nullopt;
  }

  std::size_t road_link_count() const {
    return static_cast<std::size_t>(std::count_if(
        links_.begin(), links_.end(), [](const Link& l) { return !l.is_connector(); }));
  }

  bool operator==(const Network& o) const {
    return nodes_ == o.nodes_ && links_ == o.links_ && zones_ == o.zones_;
  }

private:
  void index() {
    node_by_id_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!node_by_id_.emplace(nodes_[i].id, static_cast<std::uint32_t>(i)).second)
        throw SchemaError("duplicate node id '" + nodes_[i].id + "' (node row " +
                          std::to_string(i + 1) + ")");
    }
    link_by_id_.reserve(links_.size());
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const Link& l = links_[i];
      if (!link_by_id_.emplace(l.id, static_cast<std::uint32_t>(i)).second)
        throw SchemaError("duplicate link id '" + l.id + "' (link row " + std::to_string(i + 1) +
                          ")");
      if (l.from >= nodes_.size() || l.to >= nodes_.size())
        throw ReferentialError("link '" + l.id + "' references a node index out of range");
      if (l.from == l.to) throw ValidationError("link '" + l.id + "' is a self-loop");
      if (!(l.length > 0.0) || !(l.capacity > 0.0) || !(l.free_flow_speed > 0.0))
        throw ValidationError("link '" + l.id + "' needs positive length, capacity and speed");
      double expect = free_flow_minutes(l.length, l.free_flow_speed);
      if (std::abs(l.free_flow_time - expect) > 1e-9 * expect)
        throw ValidationError("link '" + l.id + "' free_flow_time inconsistent with length/speed");
    }
    for (std::size_t i = 0; i < zones_.size(); ++i) {
      const Zone& z = zones_[i];
      if (!zone_by_id_.emplace(z.id, static_cast<std::uint32_t>(i)).second)
        throw SchemaError("duplicate zone id '" + z.id + "'");
      if (z.attached_node >= nodes_.size() || z.centroid_node >= nodes_.size())
        throw ReferentialError("zone '" + z.id + "' references a missing node");
    }

    out_offset_.assign(nodes_.size() + 1, 0);
    for (const Link& l : links_) ++out_offset_[l.from + 1];
    for (std::size_t i = 0; i < nodes_.size(); ++i) out_offset_[i + 1] += out_offset_[i];
    out_index_.resize(links_.size());
    std::vector<std::uint32_t> fill(out_offset_.begin(), out_offset_.end() - 1);
    for (std::size_t i = 0; i < links_.size(); ++i)
      out_index_[fill[links_[i].from]++] = static_cast<std::uint32_t>(i);
  }

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Zone> zones_;
  std::vector<std::uint32_t> out_offset_;
  std::vector<std::uint32_t> out_index_;
  std::unordered_map<std::string, std::uint32_t> node_by_id_;
  std::unordered_map<std::string, std::uint32_t> link_by_id_;
  std::unordered_map<std::string, std::uint32_t> zone_by_id_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

inline Network load_network(std::istream& nodes_src, std::istream& links_src,
                            const HierarchyDefaults& defaults,
                            std::string_view nodes_name = "nodes.csv",
                            std::string_view links_name = "links.csv") {
  for (Hierarchy h : {Hierarchy::expressway, Hierarchy::highway, Hierarchy::local})
    if (!defaults.count(h))
      throw ValidationError(std::string("hierarchy defaults missing road class '") + to_string(h) +
                            "'");

  auto nt = csv::Table::read(nodes_src, nodes_name);
  nt.require_columns({"node_id", "x", "y", "coord_system"});
  std::vector<Node> nodes;
  std::unordered_map<std::string, std::uint32_t> node_ix;
  std::optional<CoordSystem> system;
  for (const auto& r : nt.rows()) {
    Node n;
    n.id = nt.get(r, "node_id");
    if (n.id.empty()) throw SchemaError(nt.where(r) + ": empty node_id");
    n.x = nt.number(r, "x");
    n.y = nt.number(r, "y");
    const auto& cs = nt.get(r, "coord_system");
    if (cs == "lonlat") n.coords = CoordSystem::lonlat;
    else if (cs == "km") n.coords = CoordSystem::km;
    else throw SchemaError(nt.where(r) + ": unknown coord_system '" + cs + "'");
    if (system && *system != n.coords)
      throw ValidationError(nt.where(r) + ": mixed coordinate systems in one network");
    system = n.coords;
    if (!node_ix.emplace(n.id, static_cast<std::uint32_t>(nodes.size())).second)
      throw SchemaError(nt.where(r) + ": duplicate node id '" + n.id + "'");
    nodes.push_back(std::move(n));
  }

  auto lt = csv::Table::read(links_src, links_name);
  lt.require_columns({"link_id", "from", "to", "length", "length_unit", "capacity",
                      "free_flow_speed", "speed_unit", "hierarchy"});
  std::vector<Link> links;
  std::unordered_map<std::string, bool> seen;
  for (const auto& r : lt.rows()) {
    Link l;
    l.id = lt.get(r, "link_id");
    if (l.id.empty()) throw SchemaError(lt.where(r) + ": empty link_id");
    if (!seen.emplace(l.id, true).second)
      throw SchemaError(lt.where(r) + ": duplicate link id '" + l.id + "'");
    auto from = node_ix.find(lt.get(r, "from"));
    auto to = node_ix.find(lt.get(r, "to"));
    if (from == node_ix.end() || to == node_ix.end())
      throw ReferentialError(lt.where(r) + ": link '" + l.id + "' references missing node '" +
                             (from == node_ix.end() ? lt.get(r, "from") : lt.get(r, "to")) + "'");
    l.from = from->second;
    l.to = to->second;
    if (l.from == l.to) throw ValidationError(lt.where(r) + ": link '" + l.id + "' is a self-loop");

    auto h = parse_hierarchy(lt.get(r, "hierarchy"));
    if (!h) throw SchemaError(lt.where(r) + ": unknown hierarchy '" + lt.get(r, "hierarchy") + "'");
    l.hierarchy = *h;

    double length = lt.number(r, "length");
    const auto& lu = lt.get(r, "length_unit");
    if (lu == "mi") length *= kKmPerMile;
    else if (lu != "km") throw SchemaError(lt.where(r) + ": unknown length_unit '" + lu + "'");
    l.length = length;

    const auto& su = lt.get(r, "speed_unit");
    if (su != "kmh" && su != "mph") throw SchemaError(lt.where(r) + ": unknown speed_unit '" + su + "'");

    const RoadClassDefaults* def = nullptr;
    if (auto it = defaults.find(l.hierarchy); it != defaults.end()) def = &it->second;
    auto fallback = [&](const char* what) -> const RoadClassDefaults& {
      if (!def)
        throw ValidationError(lt.where(r) + ": no default " + what + " for hierarchy '" +
                              to_string(l.hierarchy) + "'");
      return *def;
    };
    l.capacity = lt.get(r, "capacity").empty() ? fallback("capacity").capacity
                                                : lt.number(r, "capacity");
    if (lt.get(r, "free_flow_speed").empty()) {
      l.free_flow_speed = fallback("speed").free_flow_speed;
    } else {
      double v = lt.number(r, "free_flow_speed");
      l.free_flow_speed = su == "mph" ? v * kKmPerMile : v;
    }
    if (!(l.length > 0.0)) throw ValidationError(lt.where(r) + ": non-positive length");
    if (!(l.capacity > 0.0)) throw ValidationError(lt.where(r) + ": non-positive capacity");
    if (!(l.free_flow_speed > 0.0)) throw ValidationError(lt.where(r) + ": non-positive speed");
    l.free_flow_time = free_flow_minutes(l.length, l.free_flow_speed);
    links.push_back(std::move(l));
  }
  return Network(std::move(nodes), std::move(links));
}

inline std::vector<ZoneCentroid> load_zone_centroids(std::istream& src,
                                                     std::string_view name = "zones.csv") {
  auto t = csv::Table::read(src, name);
  t.require_columns({"zone_id", "x", "y"});
  std::vector<ZoneCentroid> out;
  std::unordered_map<std::string, bool> seen;
  for (const auto& r : t.rows()) {
    ZoneCentroid z{t.get(r, "zone_id"), t.number(r, "x"), t.number(r, "y")};
    if (!seen.emplace(z.zone_id, true).second)
      throw SchemaError(t.where(r) + ": duplicate zone id '" + z.zone_id + "'");
    if (!std::isfinite(z.x) || !std::isfinite(z.y))
      throw ValidationError(t.where(r) + ": non-finite centroid");
    out.push_back(std::move(z));
  }
  return out;
}

inline void write_nodes_csv(std::ostream& out, const Network& net) {
  csv::write_row(out, {"node_id", "x", "y", "coord_system"});
  for (const Node& n : net.nodes())
    csv::write_row(out, {n.id, csv::format_double(n.x), csv::format_double(n.y), to_string(n.coords)});
}

inline void write_links_csv(std::ostream& out, const Network& net) {
  csv::write_row(out, {"link_id", "from", "to", "length", "length_unit", "capacity",
                       "free_flow_speed", "speed_unit", "hierarchy"});
  for (const Link& l : net.links())
    csv::write_row(out, {l.id, net.nodes()[l.from].id, net.nodes()[l.to].id,
                         csv::format_double(l.length), "km", csv::format_double(l.capacity),
                         csv::format_double(l.free_flow_speed), "kmh", to_string(l.hierarchy)});
}

inline void write_zones_csv(std::ostream& out, const Network& net) {
  csv::write_row(out, {"zone_id", "x", "y"});
  for (const Zone& z : net.zones())
    csv::write_row(out, {z.id, csv::format_double(z.centroid_x), csv::format_double(z.centroid_y)});
}

// ---------------------------------------------------------------------------
// Connector generation

/// Straight-line distance in km between two points in the given system.
/// Lon/lat uses an equirectangular approximation, adequate at city scale.
inline double planar_distance_km(CoordSystem cs, double x1, double y1, double x2, double y2) {
  if (cs == CoordSystem::km) return std::hypot(x2 - x1, y2 - y1);
  constexpr double kKmPerDegree = 111.32;
  constexpr double kPi = 3.14159265358979323846;
  double mean_lat = 0.5 * (y1 + y2) * kPi / 180.0;
  return kKmPerDegree * std::hypot((x2 - x1) * std::cos(mean_lat), y2 - y1);
}

/// Appends one centroid node per zone plus a connector pair (in/out) to the
/// nearest road node. Existing nodes and links are copied unchanged.
inline Network generate_connectors(const Network& net, std::span<const ZoneCentroid> centroids) {
  if (net.node_count() == 0) throw ValidationError("cannot attach zones to an empty network");

  // Candidate attachment points: nodes touched by at least one road link.
  std::vector<char> eligible(net.node_count(), 0);
  for (const Link& l : net.links())
    if (!l.is_connector()) eligible[l.from] = eligible[l.to] = 1;
  for (std::size_t i = 0; i < net.node_count(); ++i)
    if (net.nodes()[i].centroid) eligible[i] = 0;

  CoordSystem cs = net.nodes().front().coords;
  std::vector<Node> nodes = net.nodes();
  std::vector<Link> links = net.links();
  std::vector<Zone> zones = net.zones();

  std::vector<std::string> unreachable;
  for (const ZoneCentroid& zc : centroids) {
    if (!std::isfinite(zc.x) || !std::isfinite(zc.y))
      throw ValidationError("zone '" + zc.zone_id + "' has a non-finite centroid");
    std::optional<std::uint32_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < net.node_count(); ++i) {
      if (!eligible[i]) continue;
      const Node& n = net.nodes()[i];
      double d = std::hypot(n.x - zc.x, n.y - zc.y);
      if (d < best_d || (d == best_d && best && id_less(n.id, net.nodes()[*best].id))) {
        best = i;
        best_d = d;
      }
    }
    if (!best) {
      unreachable.push_back(zc.zone_id);
      continue;
    }
    const Node& anchor = net.nodes()[*best];
    double len = std::max(planar_distance_km(cs, zc.x, zc.y, anchor.x, anchor.y), kMinConnectorLength);

    auto cix = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(Node{"zone:" + zc.zone_id, zc.x, zc.y, cs, true});
    auto make = [&](std::string id, std::uint32_t from, std::uint32_t to) {
      Link l;
      l.id = std::move(id);
      l.from = from;
      l.to = to;
      l.length = len;
      l.capacity = kConnectorCapacity;
      l.free_flow_speed = kConnectorSpeed;
      l.hierarchy = Hierarchy::connector;
      l.free_flow_time = free_flow_minutes(len, kConnectorSpeed);
      return l;
    };
    links.push_back(make("conn:" + zc.zone_id + ":out", cix, *best));
    links.push_back(make("conn:" + zc.zone_id + ":in", *best, cix));
    zones.push_back(Zone{zc.zone_id, zc.x, zc.y, *best, cix});
  }
  if (!unreachable.empty()) {
    std::string list;
    for (const auto& z : unreachable) list += (list.empty() ? "" : ", ") + z;
    throw ValidationError("no road node reachable for zone(s): " + list);
  }
  return Network(std::move(nodes), std::move(links), std::move(zones));
}

}  // namespace mue
