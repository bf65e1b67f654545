#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rydchain/errors.hpp"
#include "rydchain/obe.hpp"
#include "rydchain/xy_dynamics.hpp"

using namespace rydchain;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> grid(double stop, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = stop * static_cast<double>(k) / static_cast<double>(n - 1);
  return t;
}

PhysicalParams closed_params() { return PhysicalParams{}.ideal(); }

std::vector<Level> levels_of(std::string_view s) {
  std::vector<Level> out;
  for (char c : s) out.push_back(c == 'g' ? Level::g : c == 'u' ? Level::up : Level::down);
  return out;
}

double row(const Eigen::MatrixXd& pops, std::size_t n, std::string_view label, Eigen::Index col) {
  return pops(static_cast<Eigen::Index>(LevelPopulations(n).index_of(label)), col);
}

Eigen::MatrixXcd random_density(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(dim, dim);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = {nd(rng), nd(rng)};
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST(PulseSegment, FactoriesAndAddressing) {
  const auto s = PulseSegment::optical(0.1, {true, false});
  EXPECT_EQ(s.kind, SegmentKind::optical);
  EXPECT_TRUE(s.addressed(0));
  EXPECT_FALSE(s.addressed(1));
  EXPECT_FALSE(s.addressed(5));
  PulseSequence seq{{PulseSegment::microwave(0.2), PulseSegment::free_evolution(1.0)}};
  EXPECT_DOUBLE_EQ(seq.total_duration(), 1.2);
}

TEST(Hamiltonian, FreeEvolutionHasOnlyInteraction) {
  const auto g = ChainGeometry::linear(2, 30.0);
  const auto h = hamiltonian_at(0.0, PulseSegment::free_evolution(1.0), PhysicalParams{}, g, ThermalSample::at_rest(2));
  LevelPopulations idx(2);
  const auto ud = static_cast<Eigen::Index>(idx.index_of("ud"));
  const auto du = static_cast<Eigen::Index>(idx.index_of("du"));
  EXPECT_NEAR(h(ud, du), 0.295, 1e-12);
  EXPECT_NEAR(h(du, ud), 0.295, 1e-12);
  Eigen::MatrixXd rest = h;
  rest(ud, du) = rest(du, ud) = 0.0;
  EXPECT_EQ(rest.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hamiltonian, MicrowaveDrivesUpDownOnly) {
  const auto g = ChainGeometry::linear(1, 1.0);
  const auto h = hamiltonian_at(0.0, PulseSegment::microwave(1.0), PhysicalParams{}, g, ThermalSample::at_rest(1));
  Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
  expected(1, 2) = expected(2, 1) = 2.3;
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hamiltonian, AddressingShiftsDetuning) {
  const auto g = ChainGeometry::linear(2, 1000.0);
  const auto h = hamiltonian_at(0.0, PulseSegment::optical(0.1, {false, true}), PhysicalParams{}, g,
                                ThermalSample::at_rest(2));
  LevelPopulations idx(2);
  EXPECT_DOUBLE_EQ(h(static_cast<Eigen::Index>(idx.index_of("gu")), static_cast<Eigen::Index>(idx.index_of("gu"))),
                   -20.0);
  EXPECT_DOUBLE_EQ(h(static_cast<Eigen::Index>(idx.index_of("ug")), static_cast<Eigen::Index>(idx.index_of("ug"))),
                   0.0);
  EXPECT_DOUBLE_EQ(h(static_cast<Eigen::Index>(idx.index_of("gg")), static_cast<Eigen::Index>(idx.index_of("ug"))),
                   2.65);
}

TEST(Dissipator, GroundStateIsDark) {
  const std::vector<Level> ggg(3, Level::g);
  const auto rho = ProductDensityMatrix::product_state(ggg);
  const auto d = lindblad_dissipator(rho.matrix(), 3, PhysicalParams{}, SegmentKind::optical);
  EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dissipator, UpDecaysAtGammaUpOutsideOpticalSegments) {
  const auto rho = ProductDensityMatrix::product_state(levels_of("u"));
  PhysicalParams p;
  const auto d = lindblad_dissipator(rho.matrix(), 1, p, SegmentKind::free_evolution);
  EXPECT_NEAR(d(1, 1).real(), -1.0 / 101.0, 1e-15);
  EXPECT_NEAR(d(0, 0).real(), 1.0 / 101.0, 1e-15);
  const auto opt = lindblad_dissipator(rho.matrix(), 1, p, SegmentKind::optical);
  EXPECT_NEAR(opt(1, 1).real(), -(1.0 + 1.0 / 101.0), 1e-15);
  const auto mw = lindblad_dissipator(rho.matrix(), 1, p, SegmentKind::microwave);
  EXPECT_NEAR(mw(1, 1).real(), -1.0 / 101.0, 1e-15);
}

TEST(Dissipator, TracelessForRandomStates) {
  PhysicalParams p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rho = random_density(9, seed);
    for (auto kind : {SegmentKind::optical, SegmentKind::microwave, SegmentKind::free_evolution}) {
      EXPECT_LT(std::abs(lindblad_dissipator(rho, 2, p, kind).trace()), 1e-14);
    }
  }
}

TEST(RunSequence, UpStateDecaysExponentially) {
  PhysicalParams p;
  const auto g = ChainGeometry::linear(1, 1.0);
  ObeEngine engine(g, p, ThermalSample::at_rest(1));
  PulseSequence seq{{PulseSegment::free_evolution(20.0)}};
  const auto t = grid(20.0, 11);
  const auto pops = engine.run_sequence(seq, ProductDensityMatrix::product_state(levels_of("u")), t);
  for (Eigen::Index k = 0; k < pops.cols(); ++k) {
    EXPECT_NEAR(pops(1, k), std::exp(-t[static_cast<std::size_t>(k)] / 101.0), 1e-9);
  }
}

TEST(RunSequence, MicrowaveRabiFlopping) {
  PhysicalParams p = closed_params();
  const auto g = ChainGeometry::linear(1, 1.0);
  ObeEngine engine(g, p, ThermalSample::at_rest(1));
  PulseSequence seq{{PulseSegment::microwave(4.0)}};
  const auto t = grid(4.0, 801);
  const auto pops = engine.run_sequence(seq, ProductDensityMatrix::product_state(levels_of("u")), t);
  int flips = 0;
  for (Eigen::Index k = 0; k < pops.cols(); ++k) {
    const double s = std::sin(std::numbers::pi * p.omega_mw * t[static_cast<std::size_t>(k)]);
    EXPECT_NEAR(pops(2, k), s * s, 1e-6);
    if (k > 0 && (pops(2, k) - 0.5) * (pops(2, k - 1) - 0.5) < 0.0) ++flips;
  }
  EXPECT_GT(flips, 35);
}

TEST(RunSequence, OpticalPiPulseExcitesAndAddressingBlocks) {
  PhysicalParams p = closed_params();
  const auto g = ChainGeometry::linear(2, 1000.0);
  const double pi_time = 1.0 / (2.0 * p.omega_opt_at(0));
  PulseSequence seq{{PulseSegment::optical(pi_time, {true, false})}};
  const std::vector<double> t{pi_time};
  const auto pops = run_sequence(seq, g, p, ThermalSample::at_rest(2), t);
  // The unaddressed atom is fully transferred; the addressed one barely moves.
  const double unaddressed_up = row(pops, 2, "gu", 0) + row(pops, 2, "uu", 0);
  const double addressed_up = row(pops, 2, "ug", 0) + row(pops, 2, "uu", 0);
  EXPECT_NEAR(unaddressed_up, 1.0, 1e-6);
  const double x = p.omega_opt_at(0) / std::hypot(p.omega_opt_at(0), p.addressing_shift);
  EXPECT_LE(addressed_up, x * x + 1e-9);
  EXPECT_LT(addressed_up, 0.07);
}

TEST(RunSequence, ClosedSystemMatchesXyDynamics) {
  const auto params = closed_params();
  for (std::size_t n : {2u, 3u}) {
    const auto g = ChainGeometry::linear(n, n == 2 ? 30.0 : 20.0);
    std::string start(n, 'd');
    start[0] = 'u';
    ObeEngine engine(g, params, ThermalSample::at_rest(n));
    PulseSequence seq{{PulseSegment::free_evolution(8.0)}};
    const auto t = grid(8.0, 41);
    const auto pops = engine.run_sequence(seq, ProductDensityMatrix::product_state(levels_of(start)), t);
    const auto xy = propagate(build_coupling_matrix(g, params, RangeMode::full), SpinState::excitation_at(n, 0), t);
    for (std::size_t site = 0; site < n; ++site) {
      std::string label(n, 'd');
      label[site] = 'u';
      for (Eigen::Index k = 0; k < pops.cols(); ++k) {
        EXPECT_NEAR(row(pops, n, label, k), xy(static_cast<Eigen::Index>(site), k), 1e-6)
            << "n=" << n << " site=" << site;
      }
    }
  }
}

TEST(RunSequence, MagnetizationConservedInFreeEvolution) {
  const auto params = closed_params();
  const auto g = ChainGeometry::linear(3, 20.0);
  ObeEngine engine(g, params, ThermalSample::at_rest(3));
  PulseSequence seq{{PulseSegment::free_evolution(5.0)}};
  const auto t = grid(5.0, 21);
  const auto pops = engine.run_sequence(seq, ProductDensityMatrix::product_state(levels_of("uud")), t);
  LevelPopulations idx(3);
  for (Eigen::Index k = 0; k < pops.cols(); ++k) {
    double m = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t s = 0; s < 3; ++s) {
        const auto d = idx.digit(a, s);
        m += pops(static_cast<Eigen::Index>(a), k) * (d == 1 ? 1.0 : d == 2 ? -1.0 : 0.0);
      }
    }
    EXPECT_NEAR(m, 1.0, 1e-8);
  }
}

TEST(RunSequence, FullSequenceKeepsStateValid) {
  PhysicalParams p;
  p.temperature = 0.0;
  const auto g = ChainGeometry::linear(3, 20.0);
  ObeEngine engine(g, p, ThermalSample::at_rest(3));
  const double opt = 1.0 / (2.0 * p.omega_opt_at(0));
  const double mw = 1.0 / (2.0 * p.omega_mw);
  std::vector<PulseSegment> prep{PulseSegment::optical(opt, {true, false, false}), PulseSegment::microwave(mw),
                                 PulseSegment::optical(opt)};
  ProductDensityMatrix rho = ProductDensityMatrix::ground_state(3);
  double t = 0.0;
  for (const auto& s : prep) {
    engine.evolve(rho, s, t, s.duration);
    t += s.duration;
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-8);
    EXPECT_LT(rho.hermiticity_error(), 1e-9);
    EXPECT_GT(rho.min_eigenvalue(), -1e-7);
  }
  // The addressed atom ends in ↑, the others in ↓, up to pulse errors.
  EXPECT_GT(rho.populations().at("udd"), 0.4);
  EXPECT_LT(engine.max_trace_deviation(), 1e-8);
}

TEST(RunSequence, SegmentBoundariesAreContinuous) {
  PhysicalParams p = closed_params();
  const auto g = ChainGeometry::linear(1, 1.0);
  PulseSequence seq{{PulseSegment::microwave(0.05), PulseSegment::free_evolution(0.05)}};
  const std::vector<double> t{0.05 - 1e-4, 0.05, 0.05 + 1e-4};
  ObeEngine engine(g, p, ThermalSample::at_rest(1));
  const auto pops = engine.run_sequence(seq, ProductDensityMatrix::product_state(levels_of("u")), t);
  EXPECT_LT(std::abs(pops(2, 1) - pops(2, 0)), 2e-3);
  EXPECT_NEAR(pops(2, 2), pops(2, 1), 1e-12);
}

TEST(RunSequence, HalvingTheStepChangesLittle) {
  PhysicalParams p;
  p.temperature = 0.0;
  const auto g = ChainGeometry::linear(2, 30.0);
  const double opt = 1.0 / (2.0 * p.omega_opt_at(0));
  PulseSequence seq{{PulseSegment::optical(opt, {true, false}), PulseSegment::microwave(1.0 / (2 * p.omega_mw)),
                     PulseSegment::optical(opt), PulseSegment::free_evolution(2.0)}};
  const std::vector<double> t{seq.total_duration()};
  ObeEngine coarse(g, p, ThermalSample::at_rest(2));
  ObeEngine fine(g, p, ThermalSample::at_rest(2));
  fine.set_step_scale(0.5);
  const auto init = ProductDensityMatrix::ground_state(2);
  const auto a = coarse.run_sequence(seq, init, t);
  const auto b = fine.run_sequence(seq, init, t);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(RunSequence, TauScanMatchesSequentialRuns) {
  PhysicalParams p;
  p.temperature = 0.0;
  const auto g = ChainGeometry::linear(2, 30.0);
  const double opt = 1.0 / (2.0 * p.omega_opt_at(0));
  std::vector<PulseSegment> prep{PulseSegment::optical(opt, {true, false})};
  std::vector<PulseSegment> readout{PulseSegment::optical(opt)};
  const std::vector<double> taus{1.5, 0.0, 0.7};
  ObeEngine engine(g, p, ThermalSample::at_rest(2));
  const auto scan = engine.run_tau_scan(prep, ProductDensityMatrix::ground_state(2), taus, readout);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    std::vector<PulseSegment> segs = prep;
    if (taus[k] > 0.0) segs.push_back(PulseSegment::free_evolution(taus[k]));
    segs.push_back(readout.front());
    PulseSequence seq{segs};
    const std::vector<double> t{seq.total_duration()};
    ObeEngine single(g, p, ThermalSample::at_rest(2));
    const auto ref = single.run_sequence(seq, ProductDensityMatrix::ground_state(2), t);
    EXPECT_LT((scan.col(static_cast<Eigen::Index>(k)) - ref.col(0)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ObeEngine, Limits) {
  const PhysicalParams p;
  EXPECT_THROW(ObeEngine(ChainGeometry::linear(7, 20.0), p, ThermalSample::at_rest(7)), ConfigError);
  EXPECT_THROW(ObeEngine(ChainGeometry({}), p, ThermalSample::at_rest(0)), ContractError);
  ObeOptions bad;
  bad.step_fraction = 0.0;
  EXPECT_THROW(ObeEngine(ChainGeometry::linear(2, 20.0), p, ThermalSample::at_rest(2), bad), ConfigError);
  EXPECT_THROW(ObeEngine(ChainGeometry({Vec3::Zero(), Vec3::Zero()}), p, ThermalSample::at_rest(2)),
               SingularGeometryError);
}

TEST(ObeEngine, StepRule) {
  const PhysicalParams p;
  ObeEngine engine(ChainGeometry::linear(2, 30.0), p, ThermalSample::at_rest(2));
  const auto seg = PulseSegment::optical(0.1, {true, false});
  const double dt = engine.max_step(seg, 0.0, 0.1);
  EXPECT_LE(kTwoPi * dt * 20.0, 0.03 + 1e-12);
}

TEST(ProjectToReadout, Conventions) {
  LevelPopulations all_g(3);
  all_g[0] = 1.0;
  const auto r = project_to_readout(all_g, ReadoutConvention::simulated_deexcitation);
  EXPECT_DOUBLE_EQ(r.at("ggg"), 1.0);

  LevelPopulations udd(3);
  udd[udd.index_of("udd")] = 1.0;
  EXPECT_DOUBLE_EQ(project_to_readout(udd, ReadoutConvention::ideal_deexcitation).at("grr"), 1.0);
  EXPECT_DOUBLE_EQ(project_to_readout(udd, ReadoutConvention::simulated_deexcitation).at("rrr"), 1.0);
}

TEST(ProjectToReadout, MixedPopulationsStayNormalized) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LevelPopulations p(3);
  double sum = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) sum += (p[a] = u(rng));
  for (std::size_t a = 0; a < p.size(); ++a) p[a] /= sum;
  for (auto c : {ReadoutConvention::ideal_deexcitation, ReadoutConvention::simulated_deexcitation}) {
    EXPECT_NEAR(project_to_readout(p, c).total(), 1.0, 1e-14);
  }
}
