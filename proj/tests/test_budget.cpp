#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dpe/budget.hpp"

using namespace dpe;

namespace {

EfficiencyChain from_percent(std::vector<double> percent) {
  EfficiencyChain c{"chain", {}};
  for (std::size_t i = 0; i < percent.size(); ++i)
    c.stages.push_back({"stage" + std::to_string(i), percent[i] / 100.0});
  return c;
}

}  // namespace

TEST(Budget, ReferenceChains) {
  const auto dpe = from_percent({9.0, 88.9, 92.6, 49.8, 98.4, 81.4, 55.0, 39.0});
  EXPECT_NEAR(100.0 * chain_efficiency(dpe), 0.63, 0.01);
  EXPECT_NEAR(100.0 * chain_efficiency(double_pulse_chain()), 0.63, 0.01);
  EXPECT_NEAR(100.0 * chain_efficiency(resonance_fluorescence_chain()), 0.81, 0.01);
  EXPECT_NEAR(100.0 * chain_efficiency(double_pulse_chain(0.90)), 1.46, 0.01);
  EXPECT_DOUBLE_EQ(chain_efficiency(dpe), chain_efficiency(double_pulse_chain()));
}

TEST(Budget, PermutationAndConcatenation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    EfficiencyChain a{"a", {}}, b{"b", {}};
    for (int i = 0; i < 6; ++i) a.stages.push_back({"s" + std::to_string(i), u(rng)});
    for (int i = 0; i < 4; ++i) b.stages.push_back({"t" + std::to_string(i), u(rng)});
    auto shuffled = a;
    std::shuffle(shuffled.stages.begin(), shuffled.stages.end(), rng);
    EXPECT_NEAR(chain_efficiency(shuffled), chain_efficiency(a), 1e-15);
    auto joined = a;
    joined.stages.insert(joined.stages.end(), b.stages.begin(), b.stages.end());
    EXPECT_NEAR(chain_efficiency(joined), chain_efficiency(a) * chain_efficiency(b), 1e-15);
  }
}

TEST(Budget, StageValidation) {
  auto c = double_pulse_chain();
  c.stages[3].efficiency = 1.2;
  try {
    chain_efficiency(c);
    FAIL() << "expected a validation error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(c.stages[3].name), std::string::npos) << e.what();
  }
  c.stages[3].efficiency = 0.0;
  EXPECT_THROW(chain_efficiency(c), std::invalid_argument);
  EXPECT_THROW(chain_efficiency(double_pulse_chain(-0.1)), std::invalid_argument);
  EXPECT_DOUBLE_EQ(chain_efficiency(from_percent({100.0})), 1.0);
}

TEST(Extinction, Products) {
  const std::vector<double> two{1e-4, 1e-4};
  EXPECT_NEAR(combined_extinction(two), 1e-8, 1e-22);
  const std::vector<double> mixed{1e-5, 1e-4};
  EXPECT_NEAR(combined_extinction(mixed), 1e-9, 1e-23);
  const std::vector<double> one{3e-3};
  EXPECT_DOUBLE_EQ(combined_extinction(one), 3e-3);
  const std::vector<double> bad{1e-4, 0.0};
  EXPECT_THROW(combined_extinction(bad), std::invalid_argument);
  const std::vector<double> big{2.0};
  EXPECT_THROW(combined_extinction(big), std::invalid_argument);
}

TEST(Budget, TableLayout) {
  const std::vector<EfficiencyChain> chains{resonance_fluorescence_chain(), double_pulse_chain()};
  std::ostringstream os;
  write_budget_table(os, chains);
  const std::string s = os.str();
  EXPECT_NE(s.find("stage," + chains[0].name + "_percent," + chains[1].name + "_percent"), std::string::npos) << s;
  EXPECT_NE(s.find("spectral_filter,N/A,39"), std::string::npos) << s;
  EXPECT_NE(s.find("overall,"), std::string::npos);
  // one header, one row per distinct stage, one overall row
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 8 + 1);
}
