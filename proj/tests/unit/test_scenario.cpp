#include <cmath>

#include <gtest/gtest.h>

#include "support/test_support.hpp"
#include "vlsplit/errors.hpp"
#include "vlsplit/scenario.hpp"
#include "vlsplit/scenario_io.hpp"

using namespace vlsplit;

TEST(ChannelGain, PathLossExamples) {
  EXPECT_NEAR(channel_gain(1000.0, 0.0) / std::pow(10.0, -12.81), 1.0, 1e-12);
  EXPECT_NEAR(channel_gain(10000.0, 0.0) / std::pow(10.0, -16.57), 1.0, 1e-12);
  EXPECT_NEAR(channel_gain(1000.0, 3.0) / std::pow(10.0, -13.11), 1.0, 1e-12);
  EXPECT_THROW(channel_gain(0.0, 0.0), InvalidArgument);
  double prev = channel_gain(1.0, 0.0);
  for (double d = 2.0; d < 5000.0; d *= 1.7) {
    EXPECT_LT(channel_gain(d, 0.0), prev);
    prev = channel_gain(d, 0.0);
  }
}

TEST(Associate, StrongestGainWithLowIndexTies) {
  Eigen::MatrixXd g(3, 2);
  g << 1e-13, 5e-13, 2e-13, 2e-13, 7e-12, 1e-12;
  EXPECT_EQ(associate(g), (std::vector<int>{1, 0, 0}));
  Eigen::MatrixXd swapped(3, 2);
  swapped.col(0) = g.col(1);
  swapped.col(1) = g.col(0);
  // Ties stay on the lowest index; other vehicles follow the permutation.
  EXPECT_EQ(associate(swapped), (std::vector<int>{0, 0, 1}));
  EXPECT_THROW(associate(Eigen::MatrixXd(2, 0)), InvalidArgument);
}

TEST(GenerateScenario, DefaultsMatchTheUrbanSetting) {
  const Scenario s = generate_scenario({});
  EXPECT_EQ(s.vehicle_count(), 20);
  EXPECT_EQ(s.rsu_count(), 5);
  EXPECT_DOUBLE_EQ(s.noise_psd, std::pow(10.0, -16.4));
  for (const auto& r : s.rsus) {
    EXPECT_DOUBLE_EQ(r.hardware.b_max, 20e6);
    EXPECT_GE(r.position.x, 0.0);
    EXPECT_LE(r.position.x, 1000.0);
  }
  for (const auto& v : s.vehicles) {
    EXPECT_DOUBLE_EQ(v.hardware.p_max, 20.0);
    EXPECT_GE(v.token_count, 128);
    EXPECT_LE(v.token_count, 1024);
    EXPECT_DOUBLE_EQ(v.payload_bits, 16.0 * v.token_count * 4096);
    EXPECT_GE(v.position.y, 0.0);
    EXPECT_LE(v.position.y, 1000.0);
  }
}

TEST(GenerateScenario, DeterministicPerSeed) {
  const ScenarioParams p = vlsplit::testing::small_params(9, 3, 77);
  EXPECT_EQ(to_json(generate_scenario(p)).dump(), to_json(generate_scenario(p)).dump());
  ScenarioParams q = p;
  q.seed = 78;
  EXPECT_NE(to_json(generate_scenario(p)).dump(), to_json(generate_scenario(q)).dump());
}

TEST(GenerateScenario, SingleLink) {
  const Scenario s = vlsplit::testing::small_scenario(1, 1, 4);
  EXPECT_EQ(s.association, std::vector<int>{0});
  EXPECT_EQ(s.occupied_rsus(), std::vector<int>{0});
}

TEST(GenerateScenario, AssociationIsGainOptimal) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = vlsplit::testing::small_scenario(15, 4, seed);
    for (int n = 0; n < s.vehicle_count(); ++n) {
      for (int m = 0; m < s.rsu_count(); ++m) EXPECT_GE(s.link_gain(n), s.gains(n, m));
    }
  }
}

TEST(GenerateScenario, LiteralPayloadMode) {
  ScenarioParams p = vlsplit::testing::small_params(4, 2, 1);
  p.paper_literal_payload = true;
  for (const auto& v : generate_scenario(p).vehicles) EXPECT_DOUBLE_EQ(v.payload_bits, double(v.token_count));
}

TEST(GenerateScenario, WithoutShadowingGainDependsOnDistanceOnly) {
  ScenarioParams p = vlsplit::testing::small_params(30, 3, 8);
  p.shadow_sigma_db = 0.0;
  const Scenario s = generate_scenario(p);
  for (int n = 0; n < s.vehicle_count(); ++n) {
    for (int m = 0; m < s.rsu_count(); ++m) {
      const auto& v = s.vehicles[static_cast<std::size_t>(n)].position;
      const auto& r = s.rsus[static_cast<std::size_t>(m)].position;
      const double d = std::max(std::hypot(v.x - r.x, v.y - r.y), p.min_distance);
      EXPECT_NEAR(s.gains(n, m) / channel_gain(d, 0.0), 1.0, 1e-12);
    }
  }
}

TEST(GenerateScenario, RejectsInvalidParams) {
  ScenarioParams p;
  p.vehicle_count = 0;
  EXPECT_THROW(generate_scenario(p), InvalidArgument);
  p = {};
  p.arena_side = -1.0;
  EXPECT_THROW(generate_scenario(p), InvalidArgument);
}

TEST(ScenarioJson, RoundTripIsExact) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = vlsplit::testing::small_scenario(20, 5, seed);
    const std::string text = to_json(s).dump();
    const Scenario back = scenario_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(to_json(back).dump(), text);
    for (int n = 0; n < s.vehicle_count(); ++n) {
      for (int m = 0; m < s.rsu_count(); ++m) ASSERT_EQ(back.gains(n, m), s.gains(n, m));
      ASSERT_EQ(back.vehicles[static_cast<std::size_t>(n)].position.x, s.vehicles[static_cast<std::size_t>(n)].position.x);
    }
    EXPECT_EQ(back.association, s.association);
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_EQ(back.noise_psd, s.noise_psd);
  }
}

TEST(ScenarioJson, TopLevelKeys) {
  const nlohmann::json doc = to_json(vlsplit::testing::small_scenario(2, 1, 1));
  for (const char* key : {"params", "vehicles", "rsus", "gains", "association", "llm", "seed"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
}

TEST(ScenarioJson, RejectsBrokenDocuments) {
  nlohmann::json doc = to_json(vlsplit::testing::small_scenario(3, 2, 1));
  doc["association"] = {0, 5, 1};
  EXPECT_THROW(scenario_from_json(doc), InvalidArgument);
  doc = to_json(vlsplit::testing::small_scenario(3, 2, 1));
  doc["gains"][0][0] = -1.0;
  EXPECT_THROW(scenario_from_json(doc), InvalidArgument);
  doc = to_json(vlsplit::testing::small_scenario(3, 2, 1));
  doc.erase("vehicles");
  EXPECT_ANY_THROW(scenario_from_json(doc));
}

TEST(ScenarioJson, AllocationRoundTrip) {
  const Allocation a{{1, 7}, {0.25, 19.5}, {1e6, 1.9e7}, {1.1e9, 3e8}, {1e9, 1e9}};
  const Allocation b = allocation_from_json(nlohmann::json::parse(to_json(a).dump()));
  EXPECT_EQ(b.layers_local, a.layers_local);
  EXPECT_EQ(b.power, a.power);
  EXPECT_EQ(b.bandwidth, a.bandwidth);
  EXPECT_EQ(b.vehicle_frequency, a.vehicle_frequency);
  EXPECT_EQ(b.rsu_frequency, a.rsu_frequency);
}
