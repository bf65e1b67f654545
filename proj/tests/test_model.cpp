#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rydchain/errors.hpp"
#include "rydchain/model.hpp"
#include "rydchain/populations.hpp"
#include "rydchain/units.hpp"

using namespace rydchain;

namespace {

bool has_kind(const std::vector<Diagnostic>& d, DiagnosticKind kind) {
  for (const auto& x : d) {
    if (x.kind == kind) return true;
  }
  return false;
}

const double kMagic = std::acos(1.0 / std::sqrt(3.0));

}  // namespace

TEST(Units, FrequencyRoundTripIsExact) {
  for (double nu : {0.0, 0.295, 1.0, 4.6, 5.3, 123.456}) {
    EXPECT_NEAR(units::to_ordinary(units::to_angular(nu)), nu, 4 * std::numeric_limits<double>::epsilon() * nu);
  }
}

TEST(Params, DefaultLifetimes) {
  PhysicalParams p;
  EXPECT_DOUBLE_EQ(1.0 / p.gamma_up, 101.0);
  EXPECT_DOUBLE_EQ(1.0 / p.gamma_down, 135.0);
  EXPECT_DOUBLE_EQ(p.c3, 7965.0);
}

TEST(Params, IdealClearsDampingAndTemperature) {
  const PhysicalParams p = PhysicalParams{}.ideal();
  EXPECT_EQ(p.gamma_up, 0.0);
  EXPECT_EQ(p.gamma_down, 0.0);
  EXPECT_EQ(p.gamma_eff_at(2), 0.0);
  EXPECT_EQ(p.temperature, 0.0);
  EXPECT_EQ(p.c3, 7965.0);
}

TEST(Params, PerAtomBroadcast) {
  PhysicalParams p;
  p.omega_opt = {5.0, 6.0, 7.0};
  EXPECT_EQ(p.omega_opt_at(1), 6.0);
  p.omega_opt = {5.3};
  EXPECT_EQ(p.omega_opt_at(17), 5.3);
  EXPECT_EQ(p.trap_omegas()[2], p.omega_perp);
}

TEST(AngularC3, Examples) {
  EXPECT_NEAR(angular_c3(1.0, kMagic), 0.0, 1e-15);
  EXPECT_NEAR(angular_c3(1.0, std::numbers::pi / 2), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(angular_c3(-3982.5, 0.0), 7965.0);
}

TEST(AngularC3, EvenAndVanishingAtMagicAngle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(-10.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const double t = th(rng);
    EXPECT_DOUBLE_EQ(angular_c3(2.5, t), angular_c3(2.5, -t));
  }
  EXPECT_NEAR(angular_c3(100.0, -kMagic), 0.0, 1e-12);
  EXPECT_NEAR(angular_c3(100.0, std::numbers::pi - kMagic), 0.0, 1e-12);
}

TEST(PairCoupling, Examples) {
  PhysicalParams p;
  const auto two = ChainGeometry::linear(2, 30.0);
  EXPECT_NEAR(pair_coupling(two, p, 0, 1), 7965.0 / 27000.0, 1e-15);
  EXPECT_NEAR(pair_coupling(two, p, 0, 1), 0.295, 1e-12);
  const auto close = ChainGeometry::linear(2, 20.0);
  EXPECT_NEAR(pair_coupling(close, p, 0, 1), 0.9956, 1e-4);
}

TEST(PairCoupling, SymmetricUnderSwap) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.5);
  PhysicalParams p;
  p.c3_tilde = -3982.5;
  const auto g = ChainGeometry::linear(4, 15.0, 0.3);
  for (int k = 0; k < 100; ++k) {
    const Vec3 di(n(rng), n(rng), n(rng));
    const Vec3 dj(n(rng), n(rng), n(rng));
    EXPECT_NEAR(pair_coupling(g, p, 1, 3, di, dj), pair_coupling(g, p, 3, 1, dj, di), 1e-14);
  }
}

TEST(PairCoupling, DilationScalesAsInverseCube) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  PhysicalParams p;
  for (int k = 0; k < 50; ++k) {
    const double s = u(rng);
    const double base = pair_coupling(ChainGeometry::linear(3, 20.0, 0.4), p, 0, 2);
    const double scaled = pair_coupling(ChainGeometry::linear(3, 20.0 * s, 0.4), p, 0, 2);
    EXPECT_NEAR(scaled, base / (s * s * s), 1e-12 * base / (s * s * s));
  }
}

TEST(PairCoupling, AngularLawFollowsChainAngle) {
  PhysicalParams p;
  p.c3_tilde = -3982.5;
  EXPECT_NEAR(pair_coupling(ChainGeometry::linear(2, 30.0, 0.0), p, 0, 1), 0.295, 1e-12);
  EXPECT_NEAR(pair_coupling(ChainGeometry::linear(2, 30.0, kMagic), p, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(pair_coupling(ChainGeometry::linear(2, 30.0, std::numbers::pi / 2), p, 0, 1), -3982.5 / 27000.0,
              1e-12);
}

TEST(PairCoupling, DisplacementEntersSeparation) {
  PhysicalParams p;
  const auto g = ChainGeometry::linear(2, 30.0);
  EXPECT_NEAR(pair_coupling(g, p, 0, 1, Vec3(0, 0, 5.0), Vec3::Zero()), 7965.0 / 15625.0, 1e-12);
}

TEST(PairCoupling, Errors) {
  PhysicalParams p;
  const auto g = ChainGeometry::linear(2, 30.0);
  EXPECT_THROW(pair_coupling(g, p, 0, 0), ContractError);
  EXPECT_THROW(pair_coupling(g, p, 0, 1, Vec3(0, 0, 30.0), Vec3::Zero()), SingularGeometryError);
}

TEST(Geometry, LinearLayout) {
  const auto g = ChainGeometry::linear(3, 20.0);
  EXPECT_EQ(g.n_atoms(), 3u);
  EXPECT_NEAR((g.position(2) - Vec3(0, 0, 40.0)).norm(), 0.0, 1e-14);
  const auto tilted = ChainGeometry::linear(2, 10.0, std::numbers::pi / 2);
  EXPECT_NEAR((tilted.position(1) - Vec3(10.0, 0, 0)).norm(), 0.0, 1e-12);
  const ChainGeometry scaled_axis({Vec3::Zero(), Vec3(1, 0, 0)}, Vec3(0, 0, 4.0));
  EXPECT_DOUBLE_EQ(scaled_axis.quantization_axis().norm(), 1.0);
}

TEST(Validate, ValidChainIsClean) {
  EXPECT_TRUE(validate(ChainGeometry::linear(3, 20.0), PhysicalParams{}).empty());
}

TEST(Validate, CoincidentAtoms) {
  const ChainGeometry g({Vec3::Zero(), Vec3::Zero()});
  EXPECT_TRUE(has_kind(validate(g, PhysicalParams{}), DiagnosticKind::singular_geometry));
}

TEST(Validate, NegativeLifetime) {
  PhysicalParams p;
  p.gamma_up = -0.01;
  EXPECT_TRUE(has_kind(validate(ChainGeometry::linear(3, 20.0), p), DiagnosticKind::non_physical_rate));
}

TEST(Validate, OtherKinds) {
  PhysicalParams p;
  EXPECT_TRUE(has_kind(validate(ChainGeometry({}), p), DiagnosticKind::empty_geometry));
  EXPECT_TRUE(has_kind(validate(ChainGeometry({Vec3::Zero(), Vec3(0, 0, 1)}, Vec3::Zero()), p),
                       DiagnosticKind::invalid_axis));
  EXPECT_TRUE(has_kind(validate(ChainGeometry({Vec3(0, 0, 0), Vec3(0, 0, 40), Vec3(0, 0, 20)}), p),
                       DiagnosticKind::non_monotonic_chain));

  PhysicalParams sized = p;
  sized.omega_opt = {5.0, 5.0};
  EXPECT_TRUE(has_kind(validate(ChainGeometry::linear(3, 20.0), sized), DiagnosticKind::size_mismatch));

  PhysicalParams trap = p;
  trap.omega_perp = 0.0;
  EXPECT_TRUE(has_kind(validate(ChainGeometry::linear(3, 20.0), trap), DiagnosticKind::non_physical_rate));
  trap.temperature = 0.0;
  EXPECT_TRUE(validate(ChainGeometry::linear(3, 20.0), trap).empty());

  PhysicalParams mass = p;
  mass.mass = 0.0;
  EXPECT_TRUE(has_kind(validate(ChainGeometry::linear(3, 20.0), mass), DiagnosticKind::non_physical_rate));
}

TEST(Validate, DiagnosticsCarryMessages) {
  const auto d = validate(ChainGeometry({Vec3::Zero(), Vec3::Zero()}), PhysicalParams{});
  ASSERT_FALSE(d.empty());
  EXPECT_FALSE(d.front().message.empty());
  EXPECT_EQ(to_string(DiagnosticKind::singular_geometry), "singular-geometry");
}

TEST(Populations, LabelsFollowMostSignificantAtomFirst) {
  RecaptureDistribution r(3);
  EXPECT_EQ(r.size(), 8u);
  EXPECT_EQ(r.index_of("100"), 4u);
  EXPECT_EQ(r.label(4), "100");
  EXPECT_EQ(r.digit(4, 0), 1u);
  EXPECT_EQ(r.digit(4, 2), 0u);

  LevelPopulations l(3);
  EXPECT_EQ(l.size(), 27u);
  EXPECT_EQ(l.index_of("udd"), 1u * 9 + 2u * 3 + 2u);
  EXPECT_EQ(l.label(l.index_of("gud")), "gud");

  ReadoutPopulations q(2);
  EXPECT_EQ(q.index_of("gr"), 2u);
}

TEST(Populations, TotalAndLookup) {
  RecaptureDistribution r(2, {0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(r.total(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.at("10"), 0.3);
}
