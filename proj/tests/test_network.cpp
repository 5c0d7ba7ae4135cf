#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mue/fixtures.hpp"
#include "mue/network.hpp"
#include "mue/shortest_path.hpp"

using namespace mue;

namespace {

const char* kNodes = "node_id,x,y,coord_system\nhome,0,0,km\nwork,8,0,km\n";
const char* kLinkHeader = "link_id,from,to,length,length_unit,capacity,free_flow_speed,speed_unit,hierarchy\n";

Network load(const std::string& nodes, const std::string& links) {
  std::istringstream n(nodes), l(links);
  return load_network(n, l, fixtures::default_road_classes());
}

template <typename E>
void expect_error(const std::string& nodes, const std::string& links, const std::string& needle) {
  try {
    load(nodes, links);
    FAIL() << "expected an error mentioning " << needle;
  } catch (const E& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(LoadNetwork, MileInputsConvertAtIngestion) {
  auto net = load(kNodes, std::string(kLinkHeader) + "a,home,work,6,mi,120,30,mph,highway\n");
  ASSERT_EQ(net.link_count(), 1u);
  const Link& a = net.links()[0];
  EXPECT_NEAR(a.length, 9.654, 1e-12);
  EXPECT_NEAR(a.free_flow_speed, 48.27, 1e-12);
  EXPECT_NEAR(a.free_flow_time, 12.0, 1e-12);
}

TEST(LoadNetwork, EmptyLinkTableIsValid) {
  auto net = load(kNodes, kLinkHeader);
  EXPECT_EQ(net.node_count(), 2u);
  EXPECT_EQ(net.link_count(), 0u);
}

TEST(LoadNetwork, DanglingEndpointIsReferentialError) {
  expect_error<ReferentialError>(kNodes, std::string(kLinkHeader) + "a,home,office,6,mi,120,30,mph,local\n",
                                 "office");
}

TEST(LoadNetwork, DuplicateIdsNameTheRow) {
  expect_error<SchemaError>(kNodes, std::string(kLinkHeader) + "a,home,work,1,km,10,10,kmh,local\n" +
                                        "a,work,home,1,km,10,10,kmh,local\n",
                            ":3");
  expect_error<SchemaError>("node_id,x,y,coord_system\nn,0,0,km\nn,1,1,km\n", kLinkHeader, ":3");
}

TEST(LoadNetwork, NonPositiveAttributesAreValidationErrors) {
  expect_error<ValidationError>(kNodes, std::string(kLinkHeader) + "a,home,work,0,km,10,10,kmh,local\n", "length");
  expect_error<ValidationError>(kNodes, std::string(kLinkHeader) + "a,home,work,1,km,-5,10,kmh,local\n",
                                "capacity");
  expect_error<ValidationError>(kNodes, std::string(kLinkHeader) + "a,home,work,1,km,10,0,kmh,local\n", "speed");
}

TEST(LoadNetwork, SelfLoopsAndMixedCoordinatesRejected) {
  expect_error<ValidationError>(kNodes, std::string(kLinkHeader) + "a,home,home,1,km,10,10,kmh,local\n",
                                "self-loop");
  expect_error<ValidationError>("node_id,x,y,coord_system\nn,0,0,km\nm,1,1,lonlat\n", kLinkHeader, "mixed");
}

TEST(LoadNetwork, MissingCapacityAndSpeedUseHierarchyDefaults) {
  auto net = load(kNodes, std::string(kLinkHeader) + "a,home,work,2,km,,,kmh,expressway\n" +
                              "b,home,work,3,km,900,,kmh,local\n");
  EXPECT_DOUBLE_EQ(net.links()[0].capacity, 2200);
  EXPECT_DOUBLE_EQ(net.links()[0].free_flow_speed, 90);
  EXPECT_DOUBLE_EQ(net.links()[1].capacity, 900);
  EXPECT_DOUBLE_EQ(net.links()[1].free_flow_speed, 40);
  EXPECT_NEAR(net.links()[1].free_flow_time, 60.0 * 3 / 40, 1e-12);
}

TEST(LoadNetwork, ParallelLinksAreDistinct) {
  auto net = load(kNodes, std::string(kLinkHeader) + "a,home,work,1,km,10,10,kmh,local\n" +
                              "b,home,work,1,km,10,10,kmh,local\n");
  EXPECT_EQ(net.out_links(0).size(), 2u);
}

TEST(LoadNetwork, MissingColumnIsSchemaError) {
  expect_error<SchemaError>("node_id,x,y\nn,0,0\n", kLinkHeader, "coord_system");
}

TEST(NetworkProperties, SerializeThenLoadIsIdentical) {
  for (const auto& f : {fixtures::dual_route(), fixtures::grid3x3(), fixtures::grid10x10()}) {
    std::ostringstream n, l;
    write_nodes_csv(n, f.base);
    write_links_csv(l, f.base);
    auto again = load(n.str(), l.str());
    EXPECT_TRUE(again == f.base) << f.name;
  }
}

TEST(NetworkProperties, AdjacencyMatchesLinkList) {
  auto net = fixtures::grid10x10().net;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> rebuilt, listed;
  for (std::uint32_t u = 0; u < net.node_count(); ++u)
    for (auto li : net.out_links(u)) {
      EXPECT_EQ(net.links()[li].from, u);
      rebuilt.emplace_back(li, u);
    }
  for (std::uint32_t i = 0; i < net.link_count(); ++i) listed.emplace_back(i, net.links()[i].from);
  std::sort(rebuilt.begin(), rebuilt.end());
  EXPECT_EQ(rebuilt, listed);
}

TEST(GenerateConnectors, AttachesToNearestNode) {
  auto net = load("node_id,x,y,coord_system\np,1,0,km\nq,3,0,km\n",
                  std::string(kLinkHeader) + "pq,p,q,2,km,100,40,kmh,local\n");
  std::vector<ZoneCentroid> z{{"Z", 0, 0}};
  auto out = generate_connectors(net, z);
  ASSERT_EQ(out.zones().size(), 1u);
  EXPECT_EQ(out.nodes()[out.zones()[0].attached_node].id, "p");
  EXPECT_NEAR(out.links()[1].length, 1.0, 1e-12);
  EXPECT_EQ(out.links()[1].hierarchy, Hierarchy::connector);
  EXPECT_DOUBLE_EQ(out.links()[1].capacity, 1e6);
  EXPECT_NEAR(out.links()[1].free_flow_time, 60.0 * 1.0 / 40.0, 1e-12);
}

TEST(GenerateConnectors, CoincidentCentroidIsClamped) {
  auto f = fixtures::dual_route();
  for (const auto& l : f.net.links())
    if (l.is_connector()) EXPECT_DOUBLE_EQ(l.length, 1e-6);
}

TEST(GenerateConnectors, TiesGoToSmallestNodeId) {
  auto net = load("node_id,x,y,coord_system\nb,1,0,km\na,-1,0,km\n",
                  std::string(kLinkHeader) + "ab,b,a,2,km,100,40,kmh,local\n");
  std::vector<ZoneCentroid> z{{"Z", 0, 0}};
  auto out = generate_connectors(net, z);
  EXPECT_EQ(out.nodes()[out.zones()[0].attached_node].id, "a");
}

TEST(GenerateConnectors, OnlyAppends) {
  auto f = fixtures::honolulu_scale();
  ASSERT_GE(f.net.node_count(), f.base.node_count());
  for (std::size_t i = 0; i < f.base.node_count(); ++i) EXPECT_EQ(f.net.nodes()[i], f.base.nodes()[i]);
  for (std::size_t i = 0; i < f.base.link_count(); ++i) EXPECT_EQ(f.net.links()[i], f.base.links()[i]);
}

TEST(GenerateConnectors, HonoluluScaleCounts) {
  auto f = fixtures::honolulu_scale();
  EXPECT_EQ(f.zones.size(), 117u);
  EXPECT_EQ(f.net.node_count() - f.base.node_count(), 117u);
  std::size_t connectors = 0;
  for (const auto& l : f.net.links()) connectors += l.is_connector();
  EXPECT_EQ(connectors, 234u);
  EXPECT_EQ(f.net.link_count() - f.base.link_count(), 234u);
}

TEST(GenerateConnectors, ConnectorsAreTheOnlyLinksAtCentroids) {
  auto f = fixtures::mini_city();
  for (const auto& l : f.net.links()) {
    bool touches = f.net.nodes()[l.from].centroid || f.net.nodes()[l.to].centroid;
    EXPECT_EQ(touches, l.is_connector()) << l.id;
  }
}

TEST(GenerateConnectors, EmptyNetworkAndNonFiniteCentroidRejected) {
  std::vector<ZoneCentroid> z{{"Z", 0, 0}};
  EXPECT_THROW(generate_connectors(Network{}, z), ValidationError);
  auto net = fixtures::grid3x3().base;
  std::vector<ZoneCentroid> bad{{"Z", std::nan(""), 0}};
  EXPECT_THROW(generate_connectors(net, bad), ValidationError);
}

TEST(GenerateConnectors, ZoneWithoutRoadNodeIsListed) {
  auto net = load("node_id,x,y,coord_system\nlonely,0,0,km\n", kLinkHeader);
  std::vector<ZoneCentroid> z{{"Z9", 0, 0}};
  try {
    generate_connectors(net, z);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Z9"), std::string::npos);
  }
}

TEST(ShortestPath, DualRouteTakesRouteB) {
  auto f = fixtures::dual_route();
  std::vector<double> costs(f.base.link_count());
  costs[*f.base.find_link("a")] = 12.0;
  costs[*f.base.find_link("b")] = 11.25;
  auto tree = shortest_path(f.base, costs, *f.base.find_node("home"));
  auto work = *f.base.find_node("work");
  EXPECT_DOUBLE_EQ(tree.cost[work], 11.25);
  auto path = tree.path_to(f.base, work);
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(f.base.links()[path[0]].id, "b");
}

TEST(ShortestPath, OriginIsZeroWithEmptyPath) {
  auto net = fixtures::grid3x3().base;
  std::vector<double> costs(net.link_count(), 1.0);
  auto tree = shortest_path(net, costs, 4);
  EXPECT_EQ(tree.cost[4], 0.0);
  EXPECT_TRUE(tree.path_to(net, 4).empty());
}

TEST(ShortestPath, DisconnectedNodesAreInfinite) {
  auto net = fixtures::grid3x3().base;  // links only point right and down
  std::vector<double> costs(net.link_count(), 1.0);
  auto tree = shortest_path(net, costs, 8);
  EXPECT_TRUE(std::isinf(tree.cost[0]));
  EXPECT_FALSE(tree.reachable(0));
  EXPECT_TRUE(tree.path_to(net, 0).empty());
}

TEST(ShortestPath, NegativeCostIsContractViolation) {
  auto net = fixtures::grid3x3().base;
  std::vector<double> costs(net.link_count(), 1.0);
  costs[3] = -0.5;
  EXPECT_THROW(shortest_path(net, costs, 0), ContractViolation);
}

TEST(ShortestPath, EqualCostTieIsLexicographic) {
  auto net = fixtures::grid3x3().base;
  std::vector<double> costs(net.link_count(), 1.0);
  auto tree = shortest_path(net, costs, 0);
  auto path = tree.path_to(net, 4);
  // r00 (index 0) then d01 beats d00 (index 1) then r10.
  ASSERT_EQ(path.size(), 2u);
  EXPECT_EQ(net.links()[path[0]].id, "r00");
}

TEST(ShortestPathProperty, RelaxationHoldsOnRandomCosts) {
  auto net = fixtures::grid10x10().net;
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> costs(net.link_count());
    for (auto& c : costs) c = u(rng);
    auto origin = static_cast<std::uint32_t>(rng() % net.node_count());
    auto tree = shortest_path(net, costs, origin);
    for (std::size_t a = 0; a < net.link_count(); ++a) {
      const auto& l = net.links()[a];
      if (!tree.reachable(l.from)) continue;
      EXPECT_LE(tree.cost[l.to], tree.cost[l.from] + costs[a] + 1e-9);
    }
    // Reported cost equals the cost of the reported path.
    for (std::size_t v = 0; v < net.node_count(); ++v) {
      double s = 0.0;
      for (auto a : tree.path_to(net, v)) s += costs[a];
      EXPECT_NEAR(s, tree.cost[v], 1e-9);
    }
  }
}

TEST(ShortestPathProperty, RoutesNeverPassThroughCentroids) {
  auto f = fixtures::mini_city();
  std::vector<double> costs(f.net.link_count());
  for (std::size_t a = 0; a < costs.size(); ++a) costs[a] = f.net.links()[a].free_flow_time;
  auto o = f.net.zones()[0].centroid_node;
  auto tree = shortest_path(f.net, costs, o);
  for (std::size_t v = 0; v < f.net.node_count(); ++v) {
    auto path = tree.path_to(f.net, v);
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      EXPECT_FALSE(f.net.nodes()[f.net.links()[path[i]].to].centroid);
  }
}
