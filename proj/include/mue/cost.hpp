#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mue/error.hpp"
#include "mue/network.hpp"

namespace mue {

enum class VehicleClass : int { gv = 0, ev = 1 };
inline constexpr std::size_t kClassCount = 2;
inline constexpr std::array<VehicleClass, kClassCount> kClasses{VehicleClass::gv, VehicleClass::ev};

inline const char* to_string(VehicleClass c) { return c == VehicleClass::gv ? "gv" : "ev"; }
inline std::size_t index_of(VehicleClass c) { return static_cast<std::size_t>(c); }

/// Per-mile operating cost components ($/mile).
struct GvComponents {
  double maint = 0, fix = 0, dep = 0, ins = 0, add = 0, env = 0;
  double sum() const { return maint + fix + dep + ins + add + env; }
};

struct EvComponents {
  double maint = 0, fix = 0, dep = 0, ins = 0, add = 0, env = 0;
  double sub = 0;  // subsidy, usually negative
  double sum() const { return maint + fix + dep + ins + add + env + sub; }
};

struct CostConfig {
  std::string name;
  double p_gas = 0.0;       // $/gallon
  double p_ele = 0.0;       // $/kWh
  double mpg_gv = 25.0;     // miles/gallon
  double mpge_ev = 110.0;   // miles/gallon-equivalent
  double kappa_gal = 33.7;  // kWh/gallon
  GvComponents gv_components;
  EvComponents ev_components;
  double r_dis = kKmPerMile;
  double vot = 0.3;  // $/min, common to both classes
  double bpr_alpha = 0.15;
  double bpr_beta = 4.0;
  HierarchyDefaults road_classes;  // optional, used when loading link files

  void validate() const {
    auto nonneg = [](double v, const char* what) {
      if (!(v >= 0.0)) throw ValidationError(std::string("cost config: ") + what + " must be >= 0");
    };
    nonneg(p_gas, "p_gas");
    nonneg(p_ele, "p_ele");
    nonneg(kappa_gal, "kappa_gal");
    const auto& g = gv_components;
    for (double v : {g.maint, g.fix, g.dep, g.ins, g.add, g.env}) nonneg(v, "gv component");
    const auto& e = ev_components;
    for (double v : {e.maint, e.fix, e.dep, e.ins, e.add, e.env}) nonneg(v, "ev component");
    if (!(r_dis > 0.0)) throw ValidationError("cost config: r_dis must be > 0");
    if (!(vot > 0.0)) throw ValidationError("cost config: vot must be > 0");
    if (!(bpr_alpha > 0.0)) throw ValidationError("cost config: bpr_alpha must be > 0");
    if (!(bpr_beta >= 1.0)) throw ValidationError("cost config: bpr_beta must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const CostConfig& c) {
  const auto& g = c.gv_components;
  const auto& e = c.ev_components;
  j = nlohmann::json{
      {"name", c.name},
      {"p_gas", c.p_gas},
      {"p_ele", c.p_ele},
      {"mpg_gv", c.mpg_gv},
      {"mpge_ev", c.mpge_ev},
      {"kappa_gal", c.kappa_gal},
      {"gv_components",
       {{"maint", g.maint}, {"fix", g.fix}, {"dep", g.dep}, {"ins", g.ins}, {"add", g.add}, {"env", g.env}}},
      {"ev_components",
       {{"maint", e.maint}, {"fix", e.fix}, {"dep", e.dep}, {"ins", e.ins}, {"add", e.add},
        {"env", e.env}, {"sub", e.sub}}},
      {"r_dis", c.r_dis},
      {"vot", c.vot},
      {"bpr_alpha", c.bpr_alpha},
      {"bpr_beta", c.bpr_beta},
  };
  if (!c.road_classes.empty()) {
    nlohmann::json rc = nlohmann::json::object();
    for (const auto& [h, d] : c.road_classes)
      rc[to_string(h)] = {{"capacity", d.capacity}, {"free_flow_speed", d.free_flow_speed}};
    j["road_classes"] = rc;
  }
}

inline void from_json(const nlohmann::json& j, CostConfig& c) {
  auto num = [&](const nlohmann::json& obj, const char* key, double& out) {
    if (obj.contains(key)) {
      if (!obj.at(key).is_number())
        throw SchemaError(std::string("cost config: '") + key + "' must be a number");
      out = obj.at(key).get<double>();
    }
  };
  if (!j.is_object()) throw SchemaError("cost config: top level must be an object");
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  num(j, "p_gas", c.p_gas);
  num(j, "p_ele", c.p_ele);
  num(j, "mpg_gv", c.mpg_gv);
  num(j, "mpge_ev", c.mpge_ev);
  num(j, "kappa_gal", c.kappa_gal);
  num(j, "r_dis", c.r_dis);
  num(j, "vot", c.vot);
  num(j, "bpr_alpha", c.bpr_alpha);
  num(j, "bpr_beta", c.bpr_beta);
  if (j.contains("gv_components")) {
    const auto& g = j.at("gv_components");
    num(g, "maint", c.gv_components.maint);
    num(g, "fix", c.gv_components.fix);
    num(g, "dep", c.gv_components.dep);
    num(g, "ins", c.gv_components.ins);
    num(g, "add", c.gv_components.add);
    num(g, "env", c.gv_components.env);
  }
  if (j.contains("ev_components")) {
    const auto& e = j.at("ev_components");
    num(e, "maint", c.ev_components.maint);
    num(e, "fix", c.ev_components.fix);
    num(e, "dep", c.ev_components.dep);
    num(e, "ins", c.ev_components.ins);
    num(e, "add", c.ev_components.add);
    num(e, "env", c.ev_components.env);
    num(e, "sub", c.ev_components.sub);
  }
  if (j.contains("road_classes")) {
    for (const auto& [key, val] : j.at("road_classes").items()) {
      auto h = parse_hierarchy(key);
      if (!h) throw SchemaError("cost config: unknown road class '" + key + "'");
      RoadClassDefaults d;
      num(val, "capacity", d.capacity);
      num(val, "free_flow_speed", d.free_flow_speed);
      c.road_classes[*h] = d;
    }
  }
}

inline CostConfig load_cost_config(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("cost config: ") + e.what());
  }
  CostConfig c = j.get<CostConfig>();
  c.validate();
  return c;
}

/// Per-distance operating costs of both classes. Per-mile values are kept
/// for reporting; the solvers use the per-km values.
struct ClassCost {
  double gv_fuel_per_mile = 0.0;
  double ev_energy_per_mile = 0.0;
  double gv_per_mile = 0.0;
  double ev_per_mile = 0.0;
  double gv_per_km = 0.0;
  double ev_per_km = 0.0;

  double per_km(VehicleClass c) const { return c == VehicleClass::gv ? gv_per_km : ev_per_km; }
  double per_mile(VehicleClass c) const { return c == VehicleClass::gv ? gv_per_mile : ev_per_mile; }

  /// GV over EV per-mile cost.
  double ratio() const {
    if (ev_per_mile == 0.0) throw UndefinedError("cost ratio undefined for zero EV cost");
    return gv_per_mile / ev_per_mile;
  }
};

inline ClassCost vehicle_costs(const CostConfig& c) {
  if (!(c.mpg_gv > 0.0)) throw DomainError("mpg_gv must be positive");
  if (!(c.mpge_ev > 0.0)) throw DomainError("mpge_ev must be positive");
  if (!(c.r_dis > 0.0)) throw DomainError("r_dis must be positive");
  ClassCost k;
  k.gv_fuel_per_mile = c.p_gas / c.mpg_gv;
  k.ev_energy_per_mile = c.p_ele * c.kappa_gal / c.mpge_ev;
  k.gv_per_mile = k.gv_fuel_per_mile + c.gv_components.sum();
  k.ev_per_mile = k.ev_energy_per_mile + c.ev_components.sum();
  k.gv_per_km = k.gv_per_mile / c.r_dis;
  k.ev_per_km = k.ev_per_mile / c.r_dis;
  return k;
}

// ---------------------------------------------------------------------------
// BPR link performance

inline double bpr_time(double t0, double capacity, double alpha, double beta, double flow) {
  if (flow < 0.0) throw ContractViolation("negative link flow");
  return t0 * (1.0 + alpha * std::pow(flow / capacity, beta));
}

/// d t / d x. At zero flow the limit is used: 0 for beta > 1, alpha*t0/c for beta == 1.
inline double bpr_time_derivative(double t0, double capacity, double alpha, double beta,
                                  double flow) {
  if (flow < 0.0) throw ContractViolation("negative link flow");
  if (beta == 1.0) return alpha * t0 / capacity;
  if (flow == 0.0) return 0.0;
  return alpha * beta * t0 / capacity * std::pow(flow / capacity, beta - 1.0);
}

/// Closed-form integral of bpr_time from 0 to flow.
inline double bpr_integral(double t0, double capacity, double alpha, double beta, double flow) {
  if (flow < 0.0) throw ContractViolation("negative link flow");
  return t0 * flow + alpha * t0 * std::pow(flow, beta + 1.0) / ((beta + 1.0) * std::pow(capacity, beta));
}

inline double link_time(const Link& l, const CostConfig& c, double flow) {
  return bpr_time(l.free_flow_time, l.capacity, c.bpr_alpha, c.bpr_beta, flow);
}

inline double link_time_derivative(const Link& l, const CostConfig& c, double flow) {
  return bpr_time_derivative(l.free_flow_time, l.capacity, c.bpr_alpha, c.bpr_beta, flow);
}

inline double link_integral(const Link& l, const CostConfig& c, double flow) {
  return bpr_integral(l.free_flow_time, l.capacity, c.bpr_alpha, c.bpr_beta, flow);
}

/// Dollars to traverse a link for one vehicle of the given class:
/// vot * travel time + per-km operating cost * length.
inline double generalized_link_cost(const Link& l, double flow, VehicleClass cls,
                                    const CostConfig& c, const ClassCost& k) {
  if (cls != VehicleClass::gv && cls != VehicleClass::ev) throw DomainError("unknown vehicle class");
  return c.vot * link_time(l, c, flow) + k.per_km(cls) * l.length;
}

}  // namespace mue
