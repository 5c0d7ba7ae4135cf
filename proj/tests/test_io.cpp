#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "mue/analysis.hpp"
#include "mue/fixtures.hpp"
#include "mue/inputs.hpp"
#include "mue/solution_io.hpp"

using namespace mue;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mue_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

EquilibriumSolution solved(const fixtures::Fixture& f, double r, Method m = Method::primal_dual) {
  SolverOptions o;
  o.method = m;
  return solve(Instance(f.net, split_demand(f.od, r), f.cost), o);
}

}  // namespace

TEST(SolutionLinksCsv, RoundTripIsExact) {
  auto f = fixtures::grid3x3();
  auto s = solved(f, 0.35);
  std::stringstream io;
  write_solution_links_csv(io, s, f.net);
  auto rows = read_solution_links_csv(io);
  EXPECT_EQ(rows, solution_link_rows(s, f.net));
  ASSERT_EQ(rows.size(), f.net.link_count());
  for (std::size_t a = 0; a < rows.size(); ++a) EXPECT_EQ(rows[a].flow_total, s.flows.total[a]);
}

TEST(GapTraceCsv, RoundTripKeepsNotes) {
  auto f = fixtures::grid3x3();
  SolverOptions o;
  o.method = Method::primal_dual;
  o.alpha = 1e6;
  o.max_iters = 4;
  auto s = solve(Instance(f.net, split_demand(f.od, 0.5), f.cost), o);
  std::stringstream io;
  write_gap_trace_csv(io, s.trace);
  auto back = read_gap_trace_csv(io);
  ASSERT_EQ(back.size(), s.trace.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].iteration, s.trace[k].iteration);
    EXPECT_EQ(back[k].rel_gap, s.trace[k].rel_gap);
    EXPECT_EQ(back[k].objective, s.trace[k].objective);
    EXPECT_EQ(back[k].g, s.trace[k].g);
    EXPECT_EQ(back[k].note, s.trace[k].note);
  }
}

TEST(GapTraceCsv, MissingColumnIsSchemaError) {
  std::istringstream in("iteration,rel_gap\n0,0.1\n");
  EXPECT_THROW(read_gap_trace_csv(in), SchemaError);
}

TEST(CapacityConstraints, LoadAndReject) {
  auto f = fixtures::dual_route();
  std::istringstream ok("link_id,capacity\na,40\n");
  auto c = load_capacity_constraints(ok, f.net);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].link, *f.net.find_link("a"));
  EXPECT_EQ(c[0].capacity, 40.0);

  std::istringstream unknown("link_id,capacity\nzz,40\n");
  EXPECT_THROW(load_capacity_constraints(unknown, f.net), ReferentialError);
  std::istringstream negative("link_id,capacity\na,-1\n");
  EXPECT_THROW(load_capacity_constraints(negative, f.net), ValidationError);
  std::istringstream dup("link_id,capacity\na,40\na,30\n");
  EXPECT_THROW(load_capacity_constraints(dup, f.net), SchemaError);
  std::istringstream nonnum("link_id,capacity\na,lots\n");
  EXPECT_THROW(load_capacity_constraints(nonnum, f.net), SchemaError);
}

TEST(SolutionJson, CarriesPathsDualsAndTrace) {
  auto f = fixtures::dual_route();
  SolverOptions o;
  o.method = Method::primal_dual;
  o.rel_gap_tol = 1e-7;
  o.capacity_constraints = {{*f.net.find_link("a"), 40.0}};
  auto s = solve(Instance(f.net, split_demand(f.od, 0.0), f.cost), o);
  auto j = solution_to_json(s, f.net);
  EXPECT_EQ(j["method"], "pd");
  EXPECT_TRUE(j["path_based"].get<bool>());
  ASSERT_EQ(j["lambda"].size(), 1u);
  EXPECT_EQ(j["lambda"][0]["link_id"], "a");
  EXPECT_GT(j["lambda"][0]["lambda"].get<double>(), 0.0);
  EXPECT_EQ(j["links"].size(), f.net.link_count());
  EXPECT_EQ(j["gap_trace"].size(), s.trace.size());
  ASSERT_EQ(j["pi"].size(), 1u);
  EXPECT_EQ(j["pi"][0]["class"], "gv");
  double total = 0.0;
  for (const auto& p : j["paths"]) total += p["flow"].get<double>();
  EXPECT_NEAR(total, 100.0, 1e-9);
  // Valid JSON text, reparsed.
  EXPECT_EQ(nlohmann::json::parse(j.dump()), j);
}

TEST(SweepCsv, RoundTripWithUndefinedFields) {
  auto f = fixtures::dual_route();
  SweepOptions o;
  o.solver.method = Method::primal_dual;
  auto lv = even_levels(5);
  auto s = run_sweep(f.net, f.od, f.cost, lv, o);
  std::stringstream io;
  write_sweep_csv(io, s);
  auto rows = read_sweep_csv(io);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_TRUE(std::isnan(rows[0].dps));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].penetration, lv[i]);
    EXPECT_EQ(rows[i].t_mue, s.levels[i].metrics.avg_travel_time_mue);
    EXPECT_EQ(rows[i].ps, s.levels[i].ps);
    EXPECT_EQ(rows[i].rur, s.levels[i].metrics.rur);
  }
  std::ostringstream series;
  write_series_csv(series, s, "t_mue");
  EXPECT_EQ(series.str().rfind("penetration,t_mue\n", 0), 0u);
  EXPECT_THROW(write_series_csv(series, s, "nope"), ContractViolation);
}

TEST(Fixtures, WrittenFilesLoadBackToTheSameInstance) {
  for (const auto& f : {fixtures::dual_route(), fixtures::grid3x3(), fixtures::mini_city()}) {
    auto dir = scratch(f.name);
    write_fixture(dir, f);
    InputPaths p{dir / "nodes.csv", dir / "links.csv", f.zones.empty() ? fs::path() : dir / "zones.csv",
                 dir / "od.csv", dir / "cost.json"};
    auto in = load_inputs(p);
    EXPECT_TRUE(in.net == f.net) << f.name;
    EXPECT_TRUE(in.od == f.od) << f.name;
    EXPECT_EQ(nlohmann::json(in.cost), nlohmann::json(f.cost)) << f.name;

    std::ifstream m(dir / "manifest.json");
    auto manifest = nlohmann::json::parse(m);
    EXPECT_EQ(manifest["fixture"], f.name);
    EXPECT_TRUE(counts_from_json(manifest["counts"]) == count_inputs(in.net, in.od)) << f.name;
    fs::remove_all(dir);
  }
}

TEST(Inputs, MissingFileNamesThePath) {
  auto dir = scratch("missing");
  write_fixture(dir, fixtures::dual_route());
  InputPaths p{dir / "nodes.csv", dir / "links.csv", dir / "zones.csv", dir / "no_such_od.csv", dir / "cost.json"};
  try {
    load_inputs(p);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no_such_od.csv"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Inputs, UnknownOdZoneIsReferential) {
  auto dir = scratch("badod");
  write_fixture(dir, fixtures::dual_route());
  {
    std::ofstream od(dir / "od.csv");
    od << "origin_zone,destination_zone,demand\nH,Nowhere,5\n";
  }
  InputPaths p{dir / "nodes.csv", dir / "links.csv", dir / "zones.csv", dir / "od.csv", dir / "cost.json"};
  try {
    load_inputs(p);
    FAIL();
  } catch (const ReferentialError& e) {
    EXPECT_NE(std::string(e.what()).find("Nowhere"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Inputs, CountsOfScaledFixtures) {
  auto h = fixtures::honolulu_scale();
  auto c = count_inputs(h.net, h.od);
  EXPECT_EQ(c.zones, 117u);
  EXPECT_EQ(c.connector_links, 234u);
  auto d = fixtures::dallas_scale();
  EXPECT_NEAR(count_inputs(d.net, d.od).total_demand, 345369.0, 1e-6);
}
