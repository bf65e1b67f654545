#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rydchain/detection.hpp"
#include "rydchain/errors.hpp"
#include "rydchain/obe.hpp"

using namespace rydchain;

namespace {

LevelPopulations random_levels(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LevelPopulations p(n);
  double sum = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) sum += (p[a] = u(rng));
  for (std::size_t a = 0; a < p.size(); ++a) p[a] /= sum;
  return p;
}

ReadoutPopulations random_readout(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ReadoutPopulations p(n);
  double sum = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) sum += (p[a] = u(rng));
  for (std::size_t a = 0; a < p.size(); ++a) p[a] /= sum;
  return p;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(ForwardDetection, MatchesEnumerationOracle) {
  std::mt19937_64 rng(31);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (double eps : {0.0, 0.01, 0.1, 0.2, 0.35, 0.5, 0.9, 1.0}) {
      const auto truth = random_levels(n, rng);
      const auto got = forward_detection(truth, eps);
      const auto ref = oracle::detection_enumeration(truth.values(), n, eps);
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(got[k], ref[k], 1e-12) << "n=" << n << " eps=" << eps;
    }
  }
}

TEST(ForwardDetection, ReadoutAndLevelInputsAgree) {
  std::mt19937_64 rng(8);
  for (double eps : {0.0, 0.13, 0.6}) {
    const auto levels = random_levels(3, rng);
    const auto a = forward_detection(levels, eps);
    const auto b = forward_detection(project_to_readout(levels, ReadoutConvention::simulated_deexcitation), eps);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
  }
}

TEST(ForwardDetection, IdealDetectionOfSingleGroundAtom) {
  ReadoutPopulations truth(3);
  truth[truth.index_of("grr")] = 1.0;
  EXPECT_DOUBLE_EQ(forward_detection(truth, 0.0).at("100"), 1.0);
}

TEST(ForwardDetection, AllGroundAtTenPercent) {
  ReadoutPopulations truth(3);
  truth[truth.index_of("ggg")] = 1.0;
  const auto obs = forward_detection(truth, 0.1);
  const auto sums = partition_sums(obs);
  EXPECT_NEAR(obs.at("111"), 0.729, 1e-12);
  EXPECT_NEAR(sums[3], 0.729, 1e-12);
  EXPECT_NEAR(sums[2], 0.243, 1e-12);
  EXPECT_NEAR(sums[1], 0.027, 1e-12);
  EXPECT_NEAR(obs.at("000"), 0.001, 1e-12);
  const auto pred = predicted_partitions(0.1, 3);
  for (std::size_t k = 0; k <= 3; ++k) EXPECT_NEAR(pred[k], sums[k], 1e-12);
}

TEST(ForwardDetection, SinglePatternExpansion) {
  // Atom 0 seen, atoms 1 and 2 unseen: only configurations with atom 0 in g
  // contribute, and each extra ground atom must be lost.
  std::mt19937_64 rng(12);
  const double eps = 0.2;
  for (int trial = 0; trial < 10; ++trial) {
    const auto truth = random_readout(3, rng);
    const double expected = (1.0 - eps) * (truth.at("grr") + eps * (truth.at("ggr") + truth.at("grg")) +
                                           eps * eps * truth.at("ggg"));
    EXPECT_NEAR(forward_detection(truth, eps).at("100"), expected, 1e-14);
  }
}

TEST(ForwardDetection, PreservesNormalization) {
  std::mt19937_64 rng(4);
  for (double eps : {0.0, 0.3, 1.0}) EXPECT_NEAR(forward_detection(random_readout(4, rng), eps).total(), 1.0, 1e-14);
}

TEST(ForwardDetection, Contracts) {
  ReadoutPopulations bad(2, {0.5, 0.2, 0.1, 0.1});
  EXPECT_THROW(forward_detection(bad, 0.1), ContractError);
  ReadoutPopulations ok(2, {0.25, 0.25, 0.25, 0.25});
  EXPECT_THROW(forward_detection(ok, -0.1), ContractError);
  EXPECT_THROW(forward_detection(ok, 1.5), ContractError);
}

TEST(InvertDetection, RoundTrip) {
  std::mt19937_64 rng(19);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (double eps : {0.0, 0.05, 0.2, 0.5}) {
      const auto truth = random_readout(n, rng);
      const auto back = invert_detection(forward_detection(truth, eps), eps);
      for (std::size_t k = 0; k < truth.size(); ++k) EXPECT_NEAR(back[k], truth[k], 1e-10);
    }
  }
  RecaptureDistribution obs(1, {0.5, 0.5});
  EXPECT_THROW(invert_detection(obs, 1.0), ContractError);
}

TEST(EpsilonModel, Backends) {
  EXPECT_DOUBLE_EQ(EpsilonModel::constant(0.3)(5.0), 0.3);
  const auto table = EpsilonModel::table({0.0, 2.0, 4.0}, {0.01, 0.05, 0.2});
  EXPECT_DOUBLE_EQ(table(1.0), 0.03);
  EXPECT_DOUBLE_EQ(table(-1.0), 0.01);
  EXPECT_DOUBLE_EQ(table(9.0), 0.2);
  const auto poly = EpsilonModel::polynomial({0.01, 0.027}, 0.0, 7.0);
  EXPECT_NEAR(poly(7.0), 0.199, 1e-15);
  EXPECT_TRUE(poly.in_range(3.0));
  EXPECT_FALSE(poly.in_range(8.0));
  EXPECT_THROW(EpsilonModel::table({0.0, 0.0}, {0.1, 0.1}), DataError);
  EXPECT_THROW(EpsilonModel::table({0.0, 1.0}, {0.1, 1.1}), DataError);
  EXPECT_THROW(EpsilonModel::polynomial({}, 0.0, 1.0), DataError);
}

TEST(EpsilonModel, DecreasingTableIsFlagged) {
  EXPECT_TRUE(EpsilonModel::table({0.0, 1.0, 2.0}, {0.01, 0.05, 0.2}).diagnostics().empty());
  EXPECT_EQ(EpsilonModel::table({0.0, 1.0, 2.0}, {0.01, 0.05, 0.04}).diagnostics().size(), 1u);
}

TEST(EpsilonModel, LoadTable) {
  const auto eps_file = temp_file("rydchain_eps.txt", "# t_us epsilon\n\n0 0.01\n1.0, 0.02\n  # trailing\n2 0.05\n");
  const auto m = EpsilonModel::load_table(eps_file);
  EXPECT_EQ(m.table_times().size(), 3u);
  EXPECT_DOUBLE_EQ(m(1.5), 0.035);

  const auto p_file = temp_file("rydchain_p111.txt", "0 1.0\n1 0.729\n");
  const auto q = EpsilonModel::load_table(p_file, EpsilonModel::TableQuantity::p111);
  EXPECT_NEAR(q(1.0), 0.1, 1e-12);
  EXPECT_NEAR(q(0.0), 0.0, 1e-15);

  const auto bad = temp_file("rydchain_bad.txt", "0 0.01\nzero one\n");
  EXPECT_THROW(EpsilonModel::load_table(bad), DataError);
  EXPECT_THROW(EpsilonModel::load_table(std::filesystem::temp_directory_path() / "rydchain_missing_table.txt"),
               IoError);
  std::filesystem::remove(eps_file);
  std::filesystem::remove(p_file);
  std::filesystem::remove(bad);
}

TEST(FitEpsilon, RecoversLinearGroundTruth) {
  std::vector<double> t, p;
  for (double x = 0.0; x <= 7.0 + 1e-12; x += 0.25) {
    t.push_back(x);
    p.push_back(std::pow(1.0 - 0.01 - 0.027 * x, 3));
  }
  const auto fit = fit_epsilon(t, p, 1);
  ASSERT_EQ(fit.model.coefficients().size(), 2u);
  EXPECT_NEAR(fit.model.coefficients()[0], 0.01, 1e-6);
  EXPECT_NEAR(fit.model.coefficients()[1], 0.027, 1e-6);
  EXPECT_LT(fit.residual_rms, 1e-12);
}

TEST(FitEpsilon, RoundTripsPolynomials) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 0.003);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> c{0.005 + u(rng), u(rng), u(rng)};
    const auto truth = EpsilonModel::polynomial(c, 0.0, 10.0);
    std::vector<double> t, p;
    for (double x = 0.0; x <= 10.0 + 1e-12; x += 0.5) {
      t.push_back(x);
      p.push_back(std::pow(1.0 - truth(x), 3));
    }
    const auto fit = fit_epsilon(t, p, 2);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(fit.model.coefficients()[k], c[k], 1e-6);
  }
}

TEST(FitEpsilon, ConstantUnitySurvival) {
  const std::vector<double> t{0, 1, 2, 3, 4};
  const std::vector<double> p(5, 1.0);
  const auto fit = fit_epsilon(t, p, 2);
  for (double x : t) EXPECT_NEAR(fit.model(x), 0.0, 1e-12);
}

TEST(FitEpsilon, Errors) {
  const std::vector<double> t{0, 1};
  EXPECT_THROW(fit_epsilon(t, std::vector<double>{0.9, 0.8}, 2), DataError);
  EXPECT_THROW(fit_epsilon(t, std::vector<double>{0.9, 0.0}, 1), DataError);
  EXPECT_THROW(fit_epsilon(t, std::vector<double>{0.9}, 0), DataError);
}

TEST(ScaleExcitation, Factors) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 2, 0.5);
  const std::vector<double> t{1.0, 2.0};
  const auto zero = scale_excitation_large_n(p, t, EpsilonModel::constant(0.0), 20);
  EXPECT_EQ(zero.values, p);
  const auto single = scale_excitation_large_n(p, t, EpsilonModel::constant(0.4), 1);
  EXPECT_EQ(single.values, p);
  const auto twenty = scale_excitation_large_n(p, t, EpsilonModel::constant(0.2), 20);
  EXPECT_NEAR(twenty.values(0, 0) / 0.5, std::pow(0.8, 19), 1e-15);
  EXPECT_NEAR(std::pow(0.8, 19), 0.0144, 1e-4);
}

TEST(ScaleExcitation, WarnsOutsideModelRange) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 3, 0.5);
  const std::vector<double> t{1.0, 7.0, 12.0};
  const auto out = scale_excitation_large_n(p, t, EpsilonModel::polynomial({0.01, 0.027}, 0.0, 7.0), 5);
  EXPECT_EQ(out.warnings.size(), 1u);
  EXPECT_THROW(scale_excitation_large_n(p, std::vector<double>{1.0}, EpsilonModel::constant(0.1), 5), ContractError);
}
