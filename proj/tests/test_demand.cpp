#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mue/demand.hpp"
#include "mue/fixtures.hpp"

using namespace mue;

TEST(SplitDemand, ProportionalSplit) {
  ODMatrix od({{"A", "B", 100.0}});
  auto cd = split_demand(od, 0.25);
  EXPECT_DOUBLE_EQ(cd.ev[0].demand, 25.0);
  EXPECT_DOUBLE_EQ(cd.gv[0].demand, 75.0);
}

TEST(SplitDemand, ZeroPenetrationHasNoEvs) {
  auto od = fixtures::grid10x10().od;
  auto cd = split_demand(od, 0.0);
  for (const auto& e : cd.ev) EXPECT_EQ(e.demand, 0.0);
  EXPECT_EQ(cd.total_gv(), od.total_demand());
}

TEST(SplitDemand, DallasTripVolumeAtFullPenetration) {
  auto f = fixtures::dallas_scale();
  EXPECT_NEAR(f.od.total_demand(), 345369.0, 1e-6);
  auto cd = split_demand(f.od, 1.0);
  EXPECT_NEAR(cd.total_ev(), 345369.0, 1e-6);
  EXPECT_EQ(cd.total_gv(), 0.0);
}

TEST(SplitDemand, OutOfRangeIsDomainError) {
  ODMatrix od({{"A", "B", 1.0}});
  EXPECT_THROW(split_demand(od, -0.01), DomainError);
  EXPECT_THROW(split_demand(od, 1.5), DomainError);
  EXPECT_THROW(split_demand(od, std::nan("")), DomainError);
}

TEST(SplitDemandProperty, LinearInPenetration) {
  auto od = fixtures::grid10x10().od;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    double r1 = u(rng), r2 = u(rng), a = u(rng);
    auto mix = split_demand(od, a * r1 + (1 - a) * r2);
    auto s1 = split_demand(od, r1), s2 = split_demand(od, r2);
    for (std::size_t i = 0; i < od.size(); ++i)
      EXPECT_NEAR(mix.ev[i].demand, a * s1.ev[i].demand + (1 - a) * s2.ev[i].demand,
                  1e-12 * od.entries()[i].demand);
  }
}

TEST(SplitDemandProperty, ClassesConserveEachPair) {
  auto od = fixtures::mini_city().od;
  for (double r : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) {
    auto cd = split_demand(od, r);
    for (std::size_t i = 0; i < od.size(); ++i)
      EXPECT_NEAR(cd.gv[i].demand + cd.ev[i].demand, od.entries()[i].demand, 1e-9 * od.entries()[i].demand);
    EXPECT_NEAR(cd.total_gv() + cd.total_ev(), od.total_demand(), 1e-9 * od.total_demand());
  }
}

TEST(OdMatrix, DuplicatePairsAndNegativeDemandRejected) {
  EXPECT_THROW(ODMatrix({{"A", "B", 1.0}, {"A", "B", 2.0}}), SchemaError);
  EXPECT_THROW(ODMatrix({{"A", "B", -1.0}}), ValidationError);
  std::istringstream in("origin_zone,destination_zone,demand\nA,B,1\nA,B,2\n");
  EXPECT_THROW(load_od(in), SchemaError);
}

TEST(OdMatrix, CsvRoundTripKeepsZeroRows) {
  ODMatrix od({{"A", "B", 1.5}, {"B", "A", 0.0}, {"C", "C", 3.0}});
  std::ostringstream out;
  write_od_csv(out, od);
  std::istringstream in(out.str());
  auto again = load_od(in);
  EXPECT_TRUE(again == od);
  EXPECT_DOUBLE_EQ(again.total_demand(), 4.5);
}

TEST(CommuteDistance, MomentMatchingOnTwoPairs) {
  const double e2 = std::exp(2.0);
  std::vector<ZoneCentroid> z{{"o", 0, 0}, {"a", 1, 0}, {"b", e2, 0}};
  ODMatrix od({{"o", "a", 10.0}, {"o", "b", 10.0}});
  auto st = commute_distance_stats(od, z);
  EXPECT_NEAR(st.mu, 1.0, 1e-12);
  EXPECT_NEAR(st.sigma, 1.0, 1e-12);
}

TEST(CommuteDistance, SinglePairIsDegenerate) {
  std::vector<ZoneCentroid> z{{"o", 0, 0}, {"d", 3, 4}};
  ODMatrix od({{"o", "d", 7.0}});
  auto st = commute_distance_stats(od, z);
  EXPECT_NEAR(st.mu, std::log(5.0), 1e-12);
  EXPECT_EQ(st.sigma, 0.0);
}

TEST(CommuteDistance, AllZeroDistancesIsFitError) {
  std::vector<ZoneCentroid> z{{"o", 1, 1}, {"d", 1, 1}};
  ODMatrix od({{"o", "d", 7.0}, {"o", "o", 1.0}});
  EXPECT_THROW(commute_distance_stats(od, z), FitError);
}

TEST(CommuteDistance, RecoversModeOfSampledLognormal) {
  // Lognormal with mode 5 km: mode = exp(mu - sigma^2).
  const double sigma = 0.5, mu = std::log(5.0) + sigma * sigma;
  std::mt19937 rng(99);
  std::lognormal_distribution<double> dist(mu, sigma);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::vector<ZoneCentroid> z{{"o", 0, 0}};
  std::vector<OdEntry> entries;
  for (int i = 0; i < 4000; ++i) {
    double d = dist(rng), th = angle(rng);
    std::string id = "d" + std::to_string(i);
    z.push_back({id, d * std::cos(th), d * std::sin(th)});
    entries.push_back({"o", id, 1.0});
  }
  auto st = commute_distance_stats(ODMatrix(std::move(entries)), z);
  EXPECT_NEAR(st.mu, mu, 0.05);
  EXPECT_NEAR(st.sigma, sigma, 0.05);
  EXPECT_GE(st.mode(), 2.5);
  EXPECT_LE(st.mode(), 7.5);
  double total = 0.0;
  for (double d : st.density) total += d;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(CommuteDistance, UnknownZoneIsReferentialError) {
  std::vector<ZoneCentroid> z{{"o", 0, 0}};
  ODMatrix od({{"o", "x", 1.0}});
  EXPECT_THROW(commute_distance_stats(od, z), ReferentialError);
}
