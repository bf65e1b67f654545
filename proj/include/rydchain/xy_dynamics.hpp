#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "rydchain/model.hpp"
#include "rydchain/thermal.hpp"

namespace rydchain {

enum class RangeMode { full, nearest_neighbor };

std::string to_string(RangeMode mode);
RangeMode range_mode_from_string(const std::string& name);

/// Hopping frequencies (MHz) of the XY Hamiltonian restricted to the
/// single-excitation subspace. Symmetric with an exactly zero diagonal; in
/// nearest-neighbour mode every entry with |i - j| > 1 is exactly zero.
struct CouplingMatrix {
  Eigen::MatrixXd entries;
  RangeMode range_mode = RangeMode::full;

  std::size_t n() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

/// Builds the coupling matrix from rest positions plus optional per-atom
/// displacements (empty span means no displacement).
CouplingMatrix build_coupling_matrix(const ChainGeometry& geometry, const PhysicalParams& params,
                                     RangeMode range_mode, std::span<const Vec3> displacements = {});

struct Eigenmodes {
  Eigen::VectorXd values;   // MHz, ascending
  Eigen::MatrixXd vectors;  // columns are orthonormal eigenvectors
};

Eigenmodes eigenmodes(const CouplingMatrix& matrix);

/// Amplitudes over the basis |i> = spin up on site i, all others down.
class SpinState {
 public:
  explicit SpinState(Eigen::VectorXcd amplitudes);
  static SpinState excitation_at(std::size_t n_sites, std::size_t site);

  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }

 private:
  Eigen::VectorXcd amplitudes_;
};

/// Site populations P_i(t) (rows = sites, columns = times) from exact
/// eigen-decomposition: ψ(t) = Σ_k exp(-2πi λ_k t) <v_k|ψ0> v_k.
Eigen::MatrixXd propagate(const CouplingMatrix& matrix, const SpinState& initial, std::span<const double> times);

/// Piecewise-constant propagation for moving atoms. Each sub-step of length
/// h ≤ dt uses the coupling matrix at the midpoint positions and its exact
/// exponential. Throws ConfigError when 2π ν_max dt ≥ 0.05.
Eigen::MatrixXd propagate_time_dependent(const ChainGeometry& geometry, const PhysicalParams& params,
                                         const ThermalSample& trajectories, RangeMode range_mode,
                                         const SpinState& initial, std::span<const double> times, double dt);

/// Largest 2π ν_max dt accepted by propagate_time_dependent.
inline constexpr double kMaxPhasePerStep = 0.05;

/// Upper bound on any coupling entry (MHz) over [t0, t1] under free flight,
/// from the closest approach of every coupled pair.
double max_coupling(const ChainGeometry& geometry, const PhysicalParams& params, const ThermalSample& trajectories,
                    RangeMode range_mode, double t0, double t1);

/// Step giving half the allowed phase per step over [0, t_max].
double auto_time_step(const ChainGeometry& geometry, const PhysicalParams& params, const ThermalSample& trajectories,
                      RangeMode range_mode, double t_max);

}  // namespace rydchain
