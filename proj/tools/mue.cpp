// mue: command-line front end for the fixed-class GV/EV equilibrium solver.
//
//   mue validate --network nodes.csv --links links.csv [--zones zones.csv] --od od.csv --cost-config cost.json
//   mue solve    ... --penetration 0.3 --out dir
//   mue sweep    ... --levels 21 --out dir
//   mue generate <fixture> --out dir
//
// Exit codes: 0 ok, 2 bad input, 3 iteration cap reached, 4 infeasible.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mue/analysis.hpp"
#include "mue/inputs.hpp"
#include "mue/solution_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIterationCap = 3;
constexpr int kExitInfeasible = 4;

struct Args {
  mue::InputPaths paths;
  std::string method = "bfw";
  double penetration = 0.0;
  std::string levels = "21";
  double rel_gap = 1e-4;
  std::size_t max_iters = 5000;
  std::string out;
  std::string format = "csv,json";
  std::string constraints;
  std::uint64_t seed = 0;
  std::string time_mode = "mue";
  bool cold_start = false;
  double epsilon = mue::kDefaultPlateauEpsilon;
  std::string fixture;
};

struct Formats {
  bool csv = false, json = false;
};

Formats parse_formats(const std::string& s) {
  Formats f;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = mue::csv::trim(item);
    if (item == "csv") f.csv = true;
    else if (item == "json") f.json = true;
    else throw mue::ValidationError("unknown format '" + item + "' (expected csv, json)");
  }
  if (!f.csv && !f.json) throw mue::ValidationError("--format selects no output");
  return f;
}

/// "21" means 21 evenly spaced levels on [0, 1]; "0,0.5,1" lists them.
std::vector<double> parse_levels(const std::string& s) {
  if (s.find(',') == std::string::npos) {
    std::size_t n = 0;
    try {
      n = std::stoul(s);
    } catch (...) {
      throw mue::ValidationError("--levels must be a count or a comma-separated list");
    }
    return mue::even_levels(n);
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw mue::ValidationError("bad penetration level '" + item + "'");
    }
  }
  return out;
}

mue::SolverOptions solver_options(const Args& a, const mue::Inputs& in) {
  mue::SolverOptions o;
  auto m = mue::parse_method(a.method);
  if (!m) throw mue::ValidationError("unknown method '" + a.method + "' (expected fw, bfw, pd, eg)");
  o.method = *m;
  o.rel_gap_tol = a.rel_gap;
  o.max_iters = a.max_iters;
  o.seed = a.seed;
  if (!a.constraints.empty()) {
    auto s = mue::open_input(a.constraints, "capacity constraints");
    o.capacity_constraints = mue::load_capacity_constraints(s, in.net, a.constraints);
  }
  o.validate();
  return o;
}

mue::TimeMode time_mode(const std::string& s) {
  if (s == "mue") return mue::TimeMode::mue;
  if (s == "min_time") return mue::TimeMode::min_time;
  throw mue::ValidationError("unknown time mode '" + s + "' (expected mue, min_time)");
}

fs::path output_dir(const Args& a) {
  if (a.out.empty()) throw mue::ValidationError("--out is required");
  fs::create_directories(a.out);
  return a.out;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream o(p);
  if (!o) throw mue::ValidationError("cannot write '" + p.string() + "'");
  return o;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  auto o = open_output(p);
  o << j.dump(2) << "\n";
}

int cmd_validate(const Args& a, const Formats& f) {
  auto in = mue::load_inputs(a.paths);
  auto c = mue::count_inputs(in.net, in.od);
  if (f.json) {
    std::cout << mue::to_json(c).dump() << "\n";
  } else {
    std::cout << c.zones << " zones, " << c.nodes << " nodes, " << c.road_links << " road + " << c.connector_links
              << " connector links, " << c.od_pairs << " OD pair" << (c.od_pairs == 1 ? "" : "s") << ", demand "
              << mue::csv::format_double(c.total_demand) << "\n";
  }
  return kExitOk;
}

int cmd_solve(const Args& a, const Formats& f) {
  auto in = mue::load_inputs(a.paths);
  auto opt = solver_options(a, in);
  auto dir = output_dir(a);
  mue::Instance inst(in.net, mue::split_demand(in.od, a.penetration), in.cost);
  auto sol = mue::solve(inst, opt);
  auto metrics = mue::compute_metrics(sol, in.net, time_mode(a.time_mode));
  if (f.json) {
    write_json(dir / "solution.json", mue::solution_to_json(sol, in.net));
    write_json(dir / "metrics.json", mue::to_json(metrics));
  }
  if (f.csv) {
    auto s = open_output(dir / "solution_links.csv");
    mue::write_solution_links_csv(s, sol, in.net);
    auto g = open_output(dir / "gap_trace.csv");
    mue::write_gap_trace_csv(g, sol.trace);
    auto m = open_output(dir / "metrics_links.csv");
    mue::write_metrics_links_csv(m, metrics);
    auto ms = open_output(dir / "metrics_summary.csv");
    mue::write_metrics_summary_csv(ms, metrics);
  }
  std::cout << "R_e=" << mue::csv::format_double(a.penetration) << " method=" << mue::to_string(sol.method)
            << " iterations=" << sol.iterations << " rel_gap=" << sol.rel_gap
            << " T_MUE=" << metrics.avg_travel_time_mue << " min\n";
  if (!sol.converged) {
    std::cerr << "warning: iteration cap reached before rel_gap <= " << opt.rel_gap_tol << "\n";
    return kExitIterationCap;
  }
  return kExitOk;
}

void write_sweep(const fs::path& dir, const Formats& f, const mue::SweepResult& s) {
  if (f.json) write_json(dir / "sweep.json", mue::sweep_to_json(s));
  if (f.csv) {
    auto o = open_output(dir / "sweep.csv");
    mue::write_sweep_csv(o, s);
    for (const char* col : {"t_mue", "ps", "voc_total", "rur"}) {
      auto so = open_output(dir / (std::string("series_") + col + ".csv"));
      mue::write_series_csv(so, s, col);
    }
  }
}

int cmd_sweep(const Args& a, const Formats& f) {
  auto in = mue::load_inputs(a.paths);
  mue::SweepOptions so;
  so.solver = solver_options(a, in);
  so.warm_start = !a.cold_start;
  so.epsilon = a.epsilon;
  so.time_mode = time_mode(a.time_mode);
  auto dir = output_dir(a);
  auto levels = parse_levels(a.levels);
  try {
    auto s = mue::run_sweep(in.net, in.od, in.cost, levels, so);
    write_sweep(dir, f, s);
    std::cout << s.levels.size() << " levels, T_MUE " << s.levels.front().metrics.avg_travel_time_mue << " -> "
              << s.levels.back().metrics.avg_travel_time_mue << " min";
    if (s.classification) std::cout << ", type " << mue::to_string(s.classification->type);
    std::cout << "\n";
  } catch (const mue::PartialSweepError& e) {
    write_sweep(dir, f, e.partial());
    throw;
  }
  return kExitOk;
}

int cmd_generate(const Args& a) {
  namespace fx = mue::fixtures;
  fx::Fixture f;
  if (a.fixture == "dual-route") f = fx::dual_route();
  else if (a.fixture == "grid3x3") f = fx::grid3x3();
  else if (a.fixture == "braess") f = fx::braess();
  else if (a.fixture == "grid10x10") f = fx::grid10x10();
  else if (a.fixture == "mini-city") f = fx::mini_city();
  else if (a.fixture == "honolulu-scale") f = fx::honolulu_scale();
  else if (a.fixture == "dallas-scale") f = fx::dallas_scale();
  else throw mue::ValidationError("unknown fixture '" + a.fixture + "'");
  mue::write_fixture(output_dir(a), f);
  std::cout << "wrote " << f.name << " to " << a.out << "\n";
  return kExitOk;
}

int exit_code_for(const mue::Error& e) {
  const auto& c = e.category();
  if (c == "infeasible") return kExitInfeasible;
  if (c == "convergence") return kExitIterationCap;
  if (c == "divergence" || c == "contract") return kExitFailure;
  return kExitValidation;
}

void report_error(const std::string& category, const std::string& message) {
  nlohmann::json j{{"errors", nlohmann::json::array({{{"category", category}, {"message", message}}})}};
  std::cerr << j.dump() << "\n";
}

void add_input_flags(CLI::App* sc, Args& a) {
  sc->add_option("--network", a.paths.nodes, "nodes CSV (node_id,x,y,coord_system)");
  sc->add_option("--links", a.paths.links, "links CSV");
  sc->add_option("--zones", a.paths.zones, "zones CSV (zone_id,x,y); adds centroid connectors");
  sc->add_option("--od", a.paths.od, "OD CSV (origin_zone,destination_zone,demand)");
  sc->add_option("--cost-config", a.paths.cost, "cost config JSON");
}

void add_solver_flags(CLI::App* sc, Args& a) {
  sc->add_option("--format", a.format, "comma-separated subset of csv,json");
  sc->add_option("--method", a.method, "fw | bfw | pd | eg");
  sc->add_option("--rel-gap", a.rel_gap, "relative Wardrop gap tolerance");
  sc->add_option("--max-iters", a.max_iters, "iteration cap");
  sc->add_option("--out", a.out, "output directory");
  sc->add_option("--capacity-constraints", a.constraints, "CSV link_id,capacity (pd/eg only)");
  sc->add_option("--seed", a.seed, "reserved; all solvers are deterministic");
  sc->add_option("--time-mode", a.time_mode, "mue (flow-weighted) | min_time");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-class GV/EV multi-user equilibrium solver"};
  app.require_subcommand(1);
  Args a;

  auto* validate = app.add_subcommand("validate", "load and check inputs, print counts");
  add_input_flags(validate, a);
  std::string validate_format = "text";
  validate->add_option("--format", validate_format, "text | json");

  auto* solve = app.add_subcommand("solve", "solve one penetration level");
  add_input_flags(solve, a);
  add_solver_flags(solve, a);
  solve->add_option("--penetration", a.penetration, "EV penetration rate in [0, 1]");

  auto* sweep = app.add_subcommand("sweep", "solve a range of penetration levels");
  add_input_flags(sweep, a);
  add_solver_flags(sweep, a);
  sweep->add_option("--levels", a.levels, "level count (evenly spaced on [0,1]) or a list like 0,0.5,1");
  sweep->add_flag("--cold-start", a.cold_start, "solve every level from scratch");
  sweep->add_option("--epsilon", a.epsilon, "plateau threshold in minutes per unit penetration");

  auto* generate = app.add_subcommand("generate", "write a synthetic fixture");
  generate->add_option("fixture", a.fixture,
                       "dual-route | grid3x3 | braess | grid10x10 | mini-city | honolulu-scale | dallas-scale")
      ->required();
  generate->add_option("--out", a.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*generate) return cmd_generate(a);
    if (*validate) {
      Formats f;
      f.json = validate_format == "json";
      return cmd_validate(a, f);
    }
    Formats f = parse_formats(a.format);
    if (*solve) return cmd_solve(a, f);
    if (*sweep) return cmd_sweep(a, f);
  } catch (const mue::Error& e) {
    report_error(e.category(), e.what());
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    report_error("schema", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
