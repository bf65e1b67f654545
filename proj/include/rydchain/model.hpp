#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydchain/units.hpp"

namespace rydchain {

using Vec3 = Eigen::Vector3d;

/// Atom rest positions (µm) and the quantization axis.
///
/// Positions are full 3-vectors even for linear chains. The object is
/// immutable once built; use validate() to check it before simulating.
class ChainGeometry {
 public:
  explicit ChainGeometry(std::vector<Vec3> positions, Vec3 quantization_axis = Vec3::UnitZ());

  /// n atoms spaced by `spacing` along a line at angle `theta` to the
  /// quantization axis (z). theta = 0 puts the chain on the axis.
  static ChainGeometry linear(std::size_t n, double spacing, double theta = 0.0);

  std::size_t n_atoms() const noexcept { return positions_.size(); }
  const std::vector<Vec3>& positions() const noexcept { return positions_; }
  const Vec3& position(std::size_t i) const { return positions_.at(i); }
  const Vec3& quantization_axis() const noexcept { return axis_; }

 private:
  std::vector<Vec3> positions_;
  Vec3 axis_;
};

/// Physical parameters shared by every model. Per-atom vectors of length 1
/// broadcast to all atoms.
struct PhysicalParams {
  /// Effective C3 along the chain axis, MHz µm^3.
  double c3 = 7965.0;
  /// When set, each pair uses c3_tilde * (1 - 3 cos^2 theta_ij) instead of c3.
  std::optional<double> c3_tilde;

  std::vector<double> omega_opt{5.3};
  std::vector<double> delta_opt{0.0};
  double omega_mw = 4.6;
  /// Light shift added to delta_opt of addressed atoms, MHz.
  double addressing_shift = 20.0;

  /// Optical-pulse damping, 1/µs. Active only during optical segments.
  std::vector<double> gamma_eff{1.0};
  double gamma_up = 1.0 / 101.0;
  double gamma_down = 1.0 / 135.0;

  double temperature = 50.0;  // µK
  /// Angular trap frequency, rad/µs.
  double omega_perp = units::kTwoPi * 0.09;
  /// Optional per-axis override of omega_perp (x, y, z), rad/µs.
  std::optional<std::array<double, 3>> trap_omega_axes;
  double mass = units::kRubidium87Mass;

  double omega_opt_at(std::size_t atom) const { return broadcast(omega_opt, atom); }
  double delta_opt_at(std::size_t atom) const { return broadcast(delta_opt, atom); }
  double gamma_eff_at(std::size_t atom) const { return broadcast(gamma_eff, atom); }
  std::array<double, 3> trap_omegas() const;

  /// Zero temperature, no damping and no lifetimes.
  PhysicalParams ideal() const;

 private:
  static double broadcast(const std::vector<double>& values, std::size_t atom);
};

/// c3_tilde * (1 - 3 cos^2 theta).
double angular_c3(double c3_tilde, double theta);

/// Coupling between two points (µm) in MHz. Uses params.c3, or the angular
/// law when params.c3_tilde is set. Throws SingularGeometryError when the
/// points coincide.
double coupling_between(const PhysicalParams& params, const Vec3& quantization_axis, const Vec3& ri,
                        const Vec3& rj);

/// C3 / |r_i + d_i - r_j - d_j|^3 in MHz.
double pair_coupling(const ChainGeometry& geometry, const PhysicalParams& params, std::size_t i,
                     std::size_t j, const Vec3& displacement_i = Vec3::Zero(),
                     const Vec3& displacement_j = Vec3::Zero());

enum class DiagnosticKind {
  empty_geometry,
  singular_geometry,
  invalid_axis,
  non_monotonic_chain,
  size_mismatch,
  non_physical_rate,
};

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
};

std::string to_string(DiagnosticKind kind);

/// Empty iff geometry and params satisfy every invariant. Non-monotonic
/// chains are reported too since nearest-neighbour truncation follows the
/// input order.
std::vector<Diagnostic> validate(const ChainGeometry& geometry, const PhysicalParams& params);

}  // namespace rydchain
