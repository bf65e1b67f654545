#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydchain/model.hpp"
#include "rydchain/populations.hpp"

namespace rydchain {

/// Time-dependent probability ε(t) that an atom is lost regardless of its
/// internal state. Three backends: a (t, ε) table with linear interpolation,
/// a polynomial in t, and the thermal recapture Monte-Carlo model.
class EpsilonModel {
 public:
  enum class Backend { table, polynomial, recapture_mc };

  static EpsilonModel constant(double epsilon);
  static EpsilonModel table(std::vector<double> times, std::vector<double> epsilons);
  /// coefficients[k] multiplies t^k.
  static EpsilonModel polynomial(std::vector<double> coefficients, double t_min, double t_max);
  static EpsilonModel recapture_mc(const PhysicalParams& params, double trap_depth, double floor, std::size_t n_mc,
                                   std::uint64_t seed, double t_max);

  enum class TableQuantity { epsilon, p111 };
  /// Two-column text file (t in µs, then ε or P_111). Lines starting with
  /// '#' and blank lines are skipped.
  static EpsilonModel load_table(const std::filesystem::path& path, TableQuantity quantity = TableQuantity::epsilon);

  Backend backend() const noexcept { return backend_; }
  double operator()(double t) const;
  bool in_range(double t) const noexcept { return t >= t_min_ - 1e-12 && t <= t_max_ + 1e-12; }
  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const std::vector<double>& table_times() const noexcept { return times_; }
  const std::vector<double>& table_values() const noexcept { return values_; }

  /// Warnings about the data, e.g. a table that decreases somewhere.
  std::vector<std::string> diagnostics() const;

 private:
  Backend backend_ = Backend::polynomial;
  std::vector<double> coefficients_;
  std::vector<double> times_;
  std::vector<double> values_;
  PhysicalParams params_;
  double trap_depth_ = 0.0;
  double floor_ = 0.0;
  std::size_t n_mc_ = 0;
  std::uint64_t seed_ = 0;
  double t_min_ = 0.0;
  double t_max_ = 0.0;
};

std::string to_string(EpsilonModel::Backend backend);

/// Observed recapture distribution given ground/Rydberg content: each atom
/// independently is seen with probability 1 - ε if in g and never if in a
/// Rydberg level. Throws ContractError unless the input sums to 1 within
/// 1e-9 and 0 ≤ ε ≤ 1.
RecaptureDistribution forward_detection(const ReadoutPopulations& truth, double epsilon);
/// Same channel on level populations; ↑ and ↓ are both unseen.
RecaptureDistribution forward_detection(const LevelPopulations& truth, double epsilon);

/// Least-squares estimate of the ground/Rydberg content that produced
/// `observed`, solving the Kronecker product of single-atom channels. The
/// estimate can leave [0, 1] on noisy data. Throws ContractError for ε ≥ 1,
/// where the channel is singular.
ReadoutPopulations invert_detection(const RecaptureDistribution& observed, double epsilon);

/// Σ over patterns with exactly k recaptured atoms, for k = 0..N.
std::vector<double> partition_sums(const RecaptureDistribution& observed);
/// Binomial prediction for N ground-state atoms: C(N,k) (1-ε)^k ε^(N-k).
std::vector<double> predicted_partitions(double epsilon, std::size_t n_atoms);

struct EpsilonFit {
  EpsilonModel model;
  double residual_rms = 0.0;
};

/// ε_raw(t) = 1 - P_111(t)^(1/3), then ordinary least squares in t of the
/// given degree. Throws DataError for probabilities outside (0, 1] or fewer
/// than degree + 1 points.
EpsilonFit fit_epsilon(std::span<const double> times, std::span<const double> p111, std::size_t degree = 2);

struct ScaledExcitation {
  Eigen::MatrixXd values;
  std::vector<std::string> warnings;
};

/// Multiplies each column (time) by (1 - ε(t))^(N-1). Times outside the
/// model's valid range produce an extrapolation warning.
ScaledExcitation scale_excitation_large_n(const Eigen::MatrixXd& p_excited, std::span<const double> times,
                                          const EpsilonModel& epsilon, std::size_t n_atoms);

}  // namespace rydchain
