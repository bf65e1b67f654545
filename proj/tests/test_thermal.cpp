#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "rydchain/errors.hpp"
#include "rydchain/thermal.hpp"

using namespace rydchain;

TEST(Thermal, ZeroTemperatureGivesExactZeros) {
  PhysicalParams p;
  p.temperature = 0.0;
  const auto s = sample_thermal(p, 5, 123);
  EXPECT_TRUE(s.is_static());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(s.displacement[i], Vec3::Zero());
    EXPECT_EQ(s.velocity[i], Vec3::Zero());
  }
  EXPECT_TRUE(ThermalSample::at_rest(3).is_static());
}

TEST(Thermal, SameSeedSameSample) {
  const PhysicalParams p;
  const auto a = sample_thermal(p, 4, 99);
  const auto b = sample_thermal(p, 4, 99);
  const auto c = sample_thermal(p, 4, 100);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.displacement[i], b.displacement[i]);
    EXPECT_EQ(a.velocity[i], b.velocity[i]);
  }
  EXPECT_NE(a.velocity[0], c.velocity[0]);
}

TEST(Thermal, RmsSpreadsAtFiftyMicroKelvin) {
  const PhysicalParams p;
  EXPECT_NEAR(position_rms(p)[0], 0.122, 0.002);
  EXPECT_NEAR(velocity_rms(p), 0.069, 0.001);
  PhysicalParams axes = p;
  axes.trap_omega_axes = std::array<double, 3>{p.omega_perp, p.omega_perp, p.omega_perp / 5.0};
  EXPECT_NEAR(position_rms(axes)[2], 5.0 * position_rms(axes)[0], 1e-12);
}

TEST(Thermal, SampleMomentsConverge) {
  const PhysicalParams p;
  const std::size_t n = 100000;
  const auto s = sample_thermal(p, n, 2024);
  double sx = 0.0;
  double sv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += s.displacement[i].squaredNorm();
    sv += s.velocity[i].squaredNorm();
  }
  const double rx = std::sqrt(sx / (3.0 * static_cast<double>(n)));
  const double rv = std::sqrt(sv / (3.0 * static_cast<double>(n)));
  EXPECT_NEAR(rx / position_rms(p)[0], 1.0, 0.02);
  EXPECT_NEAR(rv / velocity_rms(p), 1.0, 0.02);
}

TEST(Thermal, FreeFlight) {
  ThermalSample s;
  s.displacement = {Vec3(0.1, 0.0, -0.2)};
  s.velocity = {Vec3(0.07, 0.0, 0.0)};
  EXPECT_EQ(free_flight(s, 0, 0.0), s.displacement[0]);
  EXPECT_NEAR((free_flight(s, 0, 5.0) - s.displacement[0] - Vec3(0.35, 0, 0)).norm(), 0.0, 1e-15);
  const Vec3 d1 = free_flight(s, 0, 3.0) - s.displacement[0];
  const Vec3 d2 = free_flight(s, 0, 6.0) - s.displacement[0];
  EXPECT_NEAR((d2 - 2.0 * d1).norm(), 0.0, 1e-15);
  EXPECT_EQ(free_flight(s, 2.0).size(), 1u);
}

TEST(Seeds, DerivedSeedsAreDistinctAndStable) {
  const auto a = derive_seeds(1, 1000);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
  EXPECT_EQ(a, derive_seeds(1, 1000));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
}

namespace {

Eigen::MatrixXd noisy_run(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(3, 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng) / 3.0 + 1e-3 * static_cast<double>(i);
  return m;
}

}  // namespace

TEST(MonteCarlo, SingleRealization) {
  const std::vector<std::uint64_t> seeds{42};
  const auto r = monte_carlo(noisy_run, seeds);
  EXPECT_EQ(r.mean, noisy_run(42));
  EXPECT_EQ(r.standard_error.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.n_realizations, 1u);
}

TEST(MonteCarlo, DeterministicRunsHaveZeroVariance) {
  const auto run = [](std::uint64_t) { return Eigen::MatrixXd::Constant(2, 2, 0.25); };
  const auto r = monte_carlo(run, 50, 3);
  EXPECT_EQ(r.standard_error.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.mean(1, 1), 0.25);
}

TEST(MonteCarlo, MeanIsIndependentOfSeedOrderAndWorkers) {
  auto seeds = derive_seeds(77, 64);
  const auto ref = monte_carlo(noisy_run, seeds, 1);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(seeds.begin(), seeds.end(), rng);
    for (std::size_t workers : {1u, 2u, 4u}) {
      const auto r = monte_carlo(noisy_run, seeds, workers);
      EXPECT_EQ(r.mean, ref.mean);
      EXPECT_EQ(r.standard_error, ref.standard_error);
    }
  }
}

TEST(MonteCarlo, StandardErrorMatchesDirectFormula) {
  const auto seeds = derive_seeds(8, 10);
  const auto r = monte_carlo(noisy_run, seeds);
  std::vector<double> x;
  for (auto s : seeds) x.push_back(noisy_run(s)(0, 0));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 10.0;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= 9.0;
  EXPECT_NEAR(r.mean(0, 0), mean, 1e-15);
  EXPECT_NEAR(r.standard_error(0, 0), std::sqrt(var / 10.0), 1e-15);
}

TEST(MonteCarlo, FailureReportsLowestFailingSeed) {
  const std::vector<std::uint64_t> seeds{50, 7, 30, 12};
  const auto run = [](std::uint64_t seed) -> Eigen::MatrixXd {
    if (seed == 30 || seed == 12) throw SingularGeometryError("boom");
    return Eigen::MatrixXd::Zero(1, 1);
  };
  for (std::size_t workers : {1u, 3u}) {
    try {
      monte_carlo(run, seeds, workers);
      FAIL() << "expected RealizationError";
    } catch (const RealizationError& e) {
      EXPECT_EQ(e.seed(), 12u);
      EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
      EXPECT_THROW(std::rethrow_exception(e.cause()), SingularGeometryError);
    }
  }
  EXPECT_THROW(monte_carlo(run, std::vector<std::uint64_t>{}), ContractError);
}

TEST(Recapture, ZeroFlightDeepTrapAndZeroTemperature) {
  const PhysicalParams p;
  EXPECT_LT(recapture_epsilon(p, 5000.0, 0.0, 20000, 0.0, 1), 1e-3);
  PhysicalParams cold = p;
  cold.temperature = 0.0;
  EXPECT_EQ(recapture_epsilon(cold, 10.0, 7.0, 20000, 0.013, 1), 0.013);
  EXPECT_THROW(recapture_epsilon(p, 100.0, -1.0, 10, 0.0, 1), ContractError);
}

TEST(Recapture, NonDecreasingInTimeAndTemperature) {
  PhysicalParams p;
  const double depth = 2088.73;
  double prev = 0.0;
  for (double t = 0.0; t <= 10.0; t += 0.5) {
    const double e = recapture_epsilon(p, depth, t, 20000, 0.01, 7);
    EXPECT_GE(e, prev);
    prev = e;
  }
  prev = 0.0;
  for (double temp : {0.0, 5.0, 10.0, 25.0, 50.0, 80.0}) {
    p.temperature = temp;
    const double e = recapture_epsilon(p, depth, 6.0, 20000, 0.01, 7);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Recapture, CalibratedDepthReachesTwentyPercentAtSevenMicroseconds) {
  const PhysicalParams p;
  const double depth = calibrate_trap_depth(p, 7.0, 0.2, 0.01, 20000, 7);
  EXPECT_NEAR(recapture_epsilon(p, depth, 7.0, 20000, 0.01, 7), 0.2, 1e-3);
  EXPECT_NEAR(recapture_epsilon(p, depth, 0.0, 20000, 0.01, 7), 0.01, 1e-3);
  EXPECT_THROW(calibrate_trap_depth(p, 7.0, 0.005, 0.01, 100, 7), ConfigError);
}
