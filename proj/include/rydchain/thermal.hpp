#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rydchain/model.hpp"

namespace rydchain {

/// Initial displacement (µm) and velocity (µm/µs) of every atom at the
/// moment the traps are switched off. Atoms are in free flight afterwards.
struct ThermalSample {
  std::vector<Vec3> displacement;
  std::vector<Vec3> velocity;
  std::uint64_t seed = 0;

  std::size_t n_atoms() const noexcept { return displacement.size(); }
  bool is_static() const;

  /// All atoms exactly at rest on their trap centres.
  static ThermalSample at_rest(std::size_t n_atoms);
};

/// rms position spread per axis, σ_r = sqrt(k_B T / (m ω^2)), µm.
std::array<double, 3> position_rms(const PhysicalParams& params);
/// rms velocity spread per axis, σ_v = sqrt(k_B T / m), µm/µs.
double velocity_rms(const PhysicalParams& params);

/// Draws i.i.d. Gaussian displacements and velocities. T = 0 gives exact
/// zeros. The same seed always gives the same sample.
ThermalSample sample_thermal(const PhysicalParams& params, std::size_t n_atoms, std::uint64_t seed);

/// d_i(t) = r_i^0 + v_i^0 t for every atom.
std::vector<Vec3> free_flight(const ThermalSample& sample, double t);
Vec3 free_flight(const ThermalSample& sample, std::size_t atom, double t);

/// Per-realization seeds derived from a master seed.
std::vector<std::uint64_t> derive_seeds(std::uint64_t base_seed, std::size_t n);
/// One splitmix64 step; used to fan out independent seed streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct EnsembleResult {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd standard_error;
  std::size_t n_realizations = 0;
};

using Realization = std::function<Eigen::MatrixXd(std::uint64_t seed)>;

/// A realization threw; carries the seed that produced the failure.
class RealizationError : public std::runtime_error {
 public:
  RealizationError(std::uint64_t seed, const std::string& what, std::exception_ptr cause = nullptr);
  std::uint64_t seed() const noexcept { return seed_; }
  /// The exception the realization threw.
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::uint64_t seed_;
  std::exception_ptr cause_;
};

/// Runs one realization per seed on up to `workers` threads and averages.
///
/// Results are summed in ascending seed order, so the mean is bit-identical
/// for any permutation of `seeds` and any worker count. The standard error
/// uses the unbiased variance and is zero for a single realization.
EnsembleResult monte_carlo(const Realization& run, std::span<const std::uint64_t> seeds,
                           std::size_t workers = 1);
EnsembleResult monte_carlo(const Realization& run, std::size_t n_realizations, std::uint64_t base_seed,
                           std::size_t workers = 1);

/// Fraction of thermally sampled atoms that fail recapture after a free
/// flight of duration t in a harmonic trap of depth `trap_depth` (µK).
/// Returns floor + (1 - floor) * p_escape.
double recapture_epsilon(const PhysicalParams& params, double trap_depth, double t, std::size_t n_mc,
                         double floor, std::uint64_t seed);

/// Trap depth (µK) for which recapture_epsilon(t) equals `target` at the
/// given temperature. Bisection on a fixed sample set.
double calibrate_trap_depth(const PhysicalParams& params, double t, double target, double floor,
                            std::size_t n_mc, std::uint64_t seed);

}  // namespace rydchain
