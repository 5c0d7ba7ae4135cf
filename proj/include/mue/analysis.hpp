#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mue/metrics.hpp"
#include "mue/solve.hpp"

namespace mue {

inline constexpr double kActiveShare = 1e-6;  // of bundle demand
inline constexpr double kDefaultPlateauEpsilon = 0.7;  // min per unit penetration

/// Active paths (link sequences) of one (class, OD), sorted.
using ActiveSet = std::vector<LinkSequence>;

inline std::vector<ActiveSet> active_path_sets(const EquilibriumSolution& sol) {
  std::vector<ActiveSet> out(sol.paths.bundles.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    const auto& bundle = sol.paths.bundles[b];
    for (const auto& p : bundle.paths)
      if (bundle.demand > 0.0 && p.flow > kActiveShare * bundle.demand) out[b].push_back(p.links);
    std::sort(out[b].begin(), out[b].end());
  }
  return out;
}

/// Jaccard similarity of the GV and EV active path sets pooled over OD pairs.
inline double path_overlap_ratio(const std::set<LinkSequence>& gv, const std::set<LinkSequence>& ev) {
  if (gv.empty() || ev.empty()) throw UndefinedError("path overlap undefined when a class has no active paths");
  std::size_t common = 0;
  for (const auto& p : gv) common += ev.count(p);
  std::size_t uni = gv.size() + ev.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

inline double path_overlap_ratio(const EquilibriumSolution& sol) {
  if (!sol.path_based()) throw UnsupportedError("path overlap needs a path-based solution (pd or eg)");
  auto sets = active_path_sets(sol);
  std::set<LinkSequence> gv, ev;
  for (std::size_t b = 0; b < sets.size(); ++b)
    for (auto& p : sets[b]) (sol.paths.bundles[b].cls == VehicleClass::gv ? gv : ev).insert(p);
  return path_overlap_ratio(gv, ev);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Forward differences (T[i+1] - T[i]) / (R[i+1] - R[i]).
inline std::vector<double> forward_gradient(std::span<const double> levels, std::span<const double> t) {
  if (levels.size() != t.size()) throw ContractViolation("levels and values differ in length");
  std::vector<double> g;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) g.push_back((t[i + 1] - t[i]) / (levels[i + 1] - levels[i]));
  return g;
}

namespace detail {

template <typename Pred>
std::vector<Interval> merge_intervals(std::span<const double> levels, std::span<const double> gradient, Pred pred) {
  std::vector<Interval> out;
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!pred(std::abs(gradient[i]))) continue;
    if (!out.empty() && out.back().hi == levels[i]) out.back().hi = levels[i + 1];
    else out.push_back({levels[i], levels[i + 1]});
  }
  return out;
}

}  // namespace detail

/// Maximal runs of intervals with |dT/dR| < epsilon.
inline std::vector<Interval> detect_plateaus(std::span<const double> levels, std::span<const double> gradient,
                                             double epsilon = kDefaultPlateauEpsilon) {
  return detail::merge_intervals(levels, gradient, [&](double g) { return g < epsilon; });
}

/// Maximal runs of intervals with |dT/dR| > 3 epsilon.
inline std::vector<Interval> detect_transitions(std::span<const double> levels, std::span<const double> gradient,
                                                double epsilon = kDefaultPlateauEpsilon) {
  return detail::merge_intervals(levels, gradient, [&](double g) { return g > 3.0 * epsilon; });
}

enum class CityType { I, II, III };

inline const char* to_string(CityType t) {
  switch (t) {
    case CityType::I: return "I";
    case CityType::II: return "II";
    case CityType::III: return "III";
  }
  return "?";
}

struct Classification {
  CityType type = CityType::II;
  double total_rel_change = 0.0;  // percent, last vs first level
  std::optional<Interval> early_transition;
  std::optional<Interval> later_plateau;
  std::string rule;  // which predicate decided
};

inline constexpr double kTypeIIIMaxReduction = 3.0;  // percent
inline constexpr double kEarlyTransitionEnd = 0.3;

/// Type III: total reduction under 3 %. Type I: a transition that starts
/// below R = 0.3 and is followed by a plateau. Otherwise Type II.
inline Classification classify_city(std::span<const double> levels, std::span<const double> t,
                                    double epsilon = kDefaultPlateauEpsilon) {
  if (levels.size() < 5) throw ContractViolation("classification needs at least 5 levels");
  Classification c;
  c.total_rel_change = compare(t.front(), t.back()).rel;
  if (std::abs(c.total_rel_change) < kTypeIIIMaxReduction) {
    c.type = CityType::III;
    c.rule = "|dT_rel| < 3%";
    return c;
  }
  auto g = forward_gradient(levels, t);
  auto trans = detect_transitions(levels, g, epsilon);
  auto plat = detect_plateaus(levels, g, epsilon);
  for (const auto& tr : trans) {
    if (!(tr.lo < kEarlyTransitionEnd)) continue;
    for (const auto& p : plat) {
      if (p.lo >= tr.hi) {
        c.type = CityType::I;
        c.early_transition = tr;
        c.later_plateau = p;
        c.rule = "transition starting before R=0.3 followed by a plateau";
        return c;
      }
    }
  }
  c.type = CityType::II;
  c.rule = trans.empty() ? "no transition interval" : "no early transition followed by a plateau";
  return c;
}

struct SweepLevel {
  double penetration = 0.0;
  MetricsReport metrics;
  double ps = std::numeric_limits<double>::quiet_NaN();   // percent
  double dps = std::numeric_limits<double>::quiet_NaN();  // percent, vs previous level
  double overlap = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> link_flow;  // aggregate
  std::vector<ActiveSet> active;  // per bundle
  double rel_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct SweepResult {
  Method method = Method::bfw;
  std::vector<SweepLevel> levels;
  std::vector<double> gradient;  // per interval, min per unit penetration
  double epsilon = kDefaultPlateauEpsilon;
  std::vector<Interval> plateaus;
  std::vector<Interval> transitions;
  std::optional<std::vector<double>> thresholds;  // path-based sweeps only
  std::optional<Classification> classification;
  std::vector<std::string> bundle_labels;  // "class:origin->destination"
  bool complete = false;

  std::vector<double> level_values() const {
    std::vector<double> r;
    for (const auto& l : levels) r.push_back(l.penetration);
    return r;
  }
  std::vector<double> times() const {
    std::vector<double> r;
    for (const auto& l : levels) r.push_back(l.metrics.avg_travel_time_mue);
    return r;
  }
};

/// Raised when a level fails to converge; carries the completed prefix.
class PartialSweepError : public Error {
public:
  PartialSweepError(const std::string& what, SweepResult partial)
      : Error("convergence", what), partial_(std::make_shared<SweepResult>(std::move(partial))) {}
  const SweepResult& partial() const { return *partial_; }

private:
  std::shared_ptr<SweepResult> partial_;
};

/// Midpoints of the level intervals across which any active path set changes.
inline std::vector<double> critical_thresholds(const SweepResult& s) {
  if (!is_path_based(s.method))
    throw UnsupportedError("critical thresholds need a path-based sweep; rerun with --method pd or eg");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < s.levels.size(); ++i) {
    const auto& a = s.levels[i].active;
    const auto& b = s.levels[i + 1].active;
    bool changed = false;
    for (std::size_t k = 0; k < a.size() && k < b.size() && !changed; ++k) {
      // Only bundles with demand at both levels are comparable.
      if (a[k].empty() || b[k].empty()) continue;
      changed = a[k] != b[k];
    }
    if (changed) out.push_back(0.5 * (s.levels[i].penetration + s.levels[i + 1].penetration));
  }
  return out;
}

/// Fills PS, gradients, intervals, thresholds and the classification from
/// the per-level values already in `s`.
inline void analyse_sweep(SweepResult& s) {
  auto lv = s.level_values();
  auto t = s.times();
  if (!t.empty()) {
    double tmax = *std::max_element(t.begin(), t.end());
    double tmin = *std::min_element(t.begin(), t.end());
    for (std::size_t i = 0; i < s.levels.size(); ++i) {
      s.levels[i].ps = tmax == tmin ? std::numeric_limits<double>::quiet_NaN()
                                    : potential_savings(t[i], tmax, tmin);
      s.levels[i].dps = i == 0 ? std::numeric_limits<double>::quiet_NaN() : s.levels[i].ps - s.levels[i - 1].ps;
    }
  }
  s.gradient = forward_gradient(lv, t);
  s.plateaus = detect_plateaus(lv, s.gradient, s.epsilon);
  s.transitions = detect_transitions(lv, s.gradient, s.epsilon);
  if (is_path_based(s.method)) s.thresholds = critical_thresholds(s);
  bool all_converged = std::all_of(s.levels.begin(), s.levels.end(), [](const SweepLevel& l) { return l.converged; });
  bool spans = !lv.empty() && lv.front() == 0.0 && lv.back() == 1.0;
  if (all_converged && spans && lv.size() >= 5) s.classification = classify_city(lv, t, s.epsilon);
  else s.classification.reset();
}

struct SweepOptions {
  SolverOptions solver;
  bool warm_start = true;
  double epsilon = kDefaultPlateauEpsilon;
  TimeMode time_mode = TimeMode::mue;
};

inline std::vector<double> even_levels(std::size_t count) {
  if (count < 2) throw ValidationError("a sweep needs at least two levels");
  std::vector<double> r(count);
  for (std::size_t i = 0; i < count; ++i) r[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  return r;
}

/// Solves the equilibrium at every penetration level in order. Each level
/// starts from the previous level's paths when warm starting.
inline SweepResult run_sweep(const Network& net, const ODMatrix& od, const CostConfig& cost,
                             std::span<const double> levels, const SweepOptions& opt) {
  if (levels.size() < 2) throw ValidationError("a sweep needs at least two levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] >= 0.0 && levels[i] <= 1.0)) throw DomainError("penetration levels must lie in [0, 1]");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw ValidationError("penetration levels must be strictly increasing");
  }
  SweepResult s;
  s.method = opt.solver.method;
  s.epsilon = opt.epsilon;
  std::optional<PathSet> previous;
  for (double r : levels) {
    Instance inst(net, split_demand(od, r), cost);
    if (s.bundle_labels.empty())
      for (std::size_t b = 0; b < inst.bundle_count(); ++b) {
        const auto& p = inst.pairs()[inst.bundle_pair(b)];
        s.bundle_labels.push_back(std::string(to_string(inst.bundle_class(b))) + ":" + p.origin + "->" + p.destination);
      }
    auto sol = solve(inst, opt.solver, opt.warm_start && previous ? &*previous : nullptr);
    if (!sol.converged) {
      analyse_sweep(s);
      throw PartialSweepError("penetration level " + csv::format_double(r) + " did not converge within " +
                                  std::to_string(opt.solver.max_iters) + " iterations",
                              std::move(s));
    }
    SweepLevel lv;
    lv.penetration = r;
    lv.metrics = compute_metrics(sol, net, opt.time_mode);
    lv.link_flow = sol.flows.total;
    lv.active = active_path_sets(sol);
    lv.rel_gap = sol.rel_gap;
    lv.iterations = sol.iterations;
    lv.converged = sol.converged;
    if (sol.path_based()) {
      try {
        lv.overlap = path_overlap_ratio(sol);
      } catch (const UndefinedError&) {
      }
    }
    previous = std::move(sol.paths);
    s.levels.push_back(std::move(lv));
  }
  s.complete = true;
  analyse_sweep(s);
  return s;
}

inline nlohmann::json to_json(const Interval& i) { return {{"lo", i.lo}, {"hi", i.hi}}; }

inline nlohmann::json sweep_to_json(const SweepResult& s) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : s.levels)
    levels.push_back({{"penetration", l.penetration},
                      {"t_mue", l.metrics.avg_travel_time_mue},
                      {"t_ff", l.metrics.avg_travel_time_ff},
                      {"ps", json_number(l.ps)},
                      {"dps", json_number(l.dps)},
                      {"voc_total", l.metrics.voc_total},
                      {"rur", l.metrics.rur},
                      {"overlap", json_number(l.overlap)},
                      {"rel_gap", l.rel_gap},
                      {"iterations", l.iterations},
                      {"converged", l.converged}});
  nlohmann::json plateaus = nlohmann::json::array(), transitions = nlohmann::json::array();
  for (const auto& i : s.plateaus) plateaus.push_back(to_json(i));
  for (const auto& i : s.transitions) transitions.push_back(to_json(i));
  nlohmann::json j{{"method", to_string(s.method)},
                   {"complete", s.complete},
                   {"epsilon_per_unit", s.epsilon},
                   {"levels", levels},
                   {"gradient", s.gradient},
                   {"plateau_intervals", plateaus},
                   {"transition_intervals", transitions}};
  if (s.levels.size() >= 2) {
    const auto& a = s.levels.front();
    const auto& b = s.levels.back();
    auto c = compare(a.metrics.avg_travel_time_mue, b.metrics.avg_travel_time_mue);
    j["comparison"] = {{"base_penetration", a.penetration},
                       {"scenario_penetration", b.penetration},
                       {"delta_t_abs", c.abs},
                       {"delta_t_rel", c.rel}};
  } else {
    j["comparison"] = nullptr;
  }
  j["critical_thresholds"] = s.thresholds ? nlohmann::json(*s.thresholds) : nlohmann::json(nullptr);
  if (s.classification) {
    const auto& c = *s.classification;
    j["city_type"] = to_string(c.type);
    j["classification"] = {{"type", to_string(c.type)},
                           {"total_rel_change", c.total_rel_change},
                           {"rule", c.rule},
                           {"early_transition", c.early_transition ? to_json(*c.early_transition) : nlohmann::json(nullptr)},
                           {"later_plateau", c.later_plateau ? to_json(*c.later_plateau) : nlohmann::json(nullptr)}};
  } else {
    j["city_type"] = nullptr;
    j["classification"] = nullptr;
  }
  return j;
}

struct SweepRow {
  double penetration = 0.0, t_mue = 0.0, ps = 0.0, dps = 0.0, voc_total = 0.0, rur = 0.0;
};

inline void write_sweep_csv(std::ostream& out, const SweepResult& s) {
  csv::write_row(out, {"penetration", "t_mue", "ps", "dps", "voc_total", "rur"});
  for (const auto& l : s.levels)
    csv::write_row(out, {csv::format_double(l.penetration), csv::format_double(l.metrics.avg_travel_time_mue),
                         csv::format_double(l.ps), csv::format_double(l.dps),
                         csv::format_double(l.metrics.voc_total), csv::format_double(l.metrics.rur)});
}

/// Empty fields (undefined PS values) read back as NaN.
inline std::vector<SweepRow> read_sweep_csv(std::istream& in, std::string_view name = "sweep.csv") {
  auto t = csv::Table::read(in, name);
  t.require_columns({"penetration", "t_mue", "ps", "dps", "voc_total", "rur"});
  auto num = [&](const csv::Row& r, const char* c) {
    return t.get(r, c).empty() ? std::numeric_limits<double>::quiet_NaN() : t.number(r, c);
  };
  std::vector<SweepRow> rows;
  for (const auto& r : t.rows())
    rows.push_back({num(r, "penetration"), num(r, "t_mue"), num(r, "ps"), num(r, "dps"), num(r, "voc_total"),
                    num(r, "rur")});
  return rows;
}

/// Two-column plot series, e.g. penetration vs t_mue.
inline void write_series_csv(std::ostream& out, const SweepResult& s, const std::string& column) {
  csv::write_row(out, {"penetration", column});
  for (const auto& l : s.levels) {
    double v = 0.0;
    if (column == "t_mue") v = l.metrics.avg_travel_time_mue;
    else if (column == "ps") v = l.ps;
    else if (column == "voc_total") v = l.metrics.voc_total;
    else if (column == "rur") v = l.metrics.rur;
    else throw ContractViolation("unknown series '" + column + "'");
    csv::write_row(out, {csv::format_double(l.penetration), csv::format_double(v)});
  }
}

}  // namespace mue
