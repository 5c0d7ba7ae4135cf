#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mue/cost.hpp"
#include "mue/demand.hpp"
#include "mue/fixtures.hpp"
#include "mue/network.hpp"

namespace mue {

struct InputPaths {
  std::filesystem::path nodes;
  std::filesystem::path links;
  std::filesystem::path zones;  // optional
  std::filesystem::path od;
  std::filesystem::path cost;
};

struct Inputs {
  Network net;
  ODMatrix od;
  CostConfig cost;
  std::vector<ZoneCentroid> zones;
};

inline std::ifstream open_input(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ValidationError(std::string("missing ") + what + " file argument");
  std::ifstream in(p);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " file '" + p.string() + "'");
  return in;
}

/// Every OD endpoint must name a zone (or a node, in zone-less networks).
inline void check_od_references(const Network& net, const ODMatrix& od) {
  std::vector<std::string> bad;
  for (const auto& e : od.entries()) {
    if (!net.endpoint_node(e.origin)) bad.push_back(e.origin);
    if (!net.endpoint_node(e.destination)) bad.push_back(e.destination);
  }
  if (bad.empty()) return;
  std::sort(bad.begin(), bad.end());
  bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
  std::string list;
  for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
  throw ReferentialError("OD file references unknown zones: " + list);
}

inline Inputs load_inputs(const InputPaths& paths) {
  Inputs in;
  {
    auto s = open_input(paths.cost, "cost config");
    in.cost = load_cost_config(s);
  }
  HierarchyDefaults defaults = in.cost.road_classes.empty() ? fixtures::default_road_classes() : in.cost.road_classes;
  {
    auto ns = open_input(paths.nodes, "nodes");
    auto ls = open_input(paths.links, "links");
    in.net = load_network(ns, ls, defaults, paths.nodes.string(), paths.links.string());
  }
  if (!paths.zones.empty()) {
    auto zs = open_input(paths.zones, "zones");
    in.zones = load_zone_centroids(zs, paths.zones.string());
    in.net = generate_connectors(in.net, in.zones);
  }
  {
    auto os = open_input(paths.od, "OD");
    in.od = load_od(os, paths.od.string());
  }
  check_od_references(in.net, in.od);
  return in;
}

struct InputCounts {
  std::size_t nodes = 0, links = 0, road_links = 0, connector_links = 0, zones = 0, od_pairs = 0;
  double total_demand = 0.0;
  bool operator==(const InputCounts&) const = default;
};

inline InputCounts count_inputs(const Network& net, const ODMatrix& od) {
  InputCounts c;
  c.nodes = net.node_count();
  c.links = net.link_count();
  c.road_links = net.road_link_count();
  c.connector_links = c.links - c.road_links;
  c.zones = net.zones().size();
  c.od_pairs = od.size();
  c.total_demand = od.total_demand();
  return c;
}

inline nlohmann::json to_json(const InputCounts& c) {
  return {{"nodes", c.nodes}, {"links", c.links}, {"road_links", c.road_links},
          {"connector_links", c.connector_links}, {"zones", c.zones}, {"od_pairs", c.od_pairs},
          {"total_demand", c.total_demand}};
}

inline InputCounts counts_from_json(const nlohmann::json& j) {
  InputCounts c;
  c.nodes = j.at("nodes").get<std::size_t>();
  c.links = j.at("links").get<std::size_t>();
  c.road_links = j.at("road_links").get<std::size_t>();
  c.connector_links = j.at("connector_links").get<std::size_t>();
  c.zones = j.at("zones").get<std::size_t>();
  c.od_pairs = j.at("od_pairs").get<std::size_t>();
  c.total_demand = j.at("total_demand").get<double>();
  return c;
}

/// Writes nodes.csv, links.csv, zones.csv (when zoned), od.csv, cost.json
/// and manifest.json into `dir`.
inline void write_fixture(const std::filesystem::path& dir, const fixtures::Fixture& f) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream o(dir / name);
    if (!o) throw ValidationError("cannot write '" + (dir / name).string() + "'");
    return o;
  };
  {
    auto o = open("nodes.csv");
    write_nodes_csv(o, f.base);
  }
  {
    auto o = open("links.csv");
    write_links_csv(o, f.base);
  }
  if (!f.zones.empty()) {
    auto o = open("zones.csv");
    csv::write_row(o, {"zone_id", "x", "y"});
    for (const auto& z : f.zones) csv::write_row(o, {z.zone_id, csv::format_double(z.x), csv::format_double(z.y)});
  }
  {
    auto o = open("od.csv");
    write_od_csv(o, f.od);
  }
  {
    auto o = open("cost.json");
    o << nlohmann::json(f.cost).dump(2) << "\n";
  }
  {
    auto o = open("manifest.json");
    nlohmann::json m{{"fixture", f.name}, {"counts", to_json(count_inputs(f.net, f.od))}};
    o << m.dump(2) << "\n";
  }
}

}  // namespace mue
