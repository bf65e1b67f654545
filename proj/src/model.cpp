#include "rydchain/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rydchain/errors.hpp"

namespace rydchain {

ChainGeometry::ChainGeometry(std::vector<Vec3> positions, Vec3 quantization_axis)
    : positions_(std::move(positions)), axis_(std::move(quantization_axis)) {
  const double norm = axis_.norm();
  if (norm > 0.0) axis_ /= norm;
}

ChainGeometry ChainGeometry::linear(std::size_t n, double spacing, double theta) {
  const Vec3 direction(std::sin(theta), 0.0, std::cos(theta));
  std::vector<Vec3> positions;
  positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) positions.push_back(static_cast<double>(i) * spacing * direction);
  return ChainGeometry(std::move(positions));
}

std::array<double, 3> PhysicalParams::trap_omegas() const {
  if (trap_omega_axes) return *trap_omega_axes;
  return {omega_perp, omega_perp, omega_perp};
}

PhysicalParams PhysicalParams::ideal() const {
  PhysicalParams p = *this;
  p.gamma_eff = {0.0};
  p.gamma_up = 0.0;
  p.gamma_down = 0.0;
  p.temperature = 0.0;
  return p;
}

double PhysicalParams::broadcast(const std::vector<double>& values, std::size_t atom) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values.front();
  return values.at(atom);
}

double angular_c3(double c3_tilde, double theta) {
  const double c = std::cos(theta);
  return c3_tilde * (1.0 - 3.0 * c * c);
}

double coupling_between(const PhysicalParams& params, const Vec3& quantization_axis, const Vec3& ri,
                        const Vec3& rj) {
  const Vec3 separation = ri - rj;
  const double r = separation.norm();
  if (!(r > 0.0)) throw SingularGeometryError("coincident atoms: pair separation is zero");
  double c3 = params.c3;
  if (params.c3_tilde) {
    const double cos_theta = std::clamp(separation.dot(quantization_axis) / r, -1.0, 1.0);
    c3 = angular_c3(*params.c3_tilde, std::acos(cos_theta));
  }
  return c3 / (r * r * r);
}

double pair_coupling(const ChainGeometry& geometry, const PhysicalParams& params, std::size_t i,
                     std::size_t j, const Vec3& displacement_i, const Vec3& displacement_j) {
  if (i == j) throw ContractError("pair_coupling requires two distinct atoms");
  // Symmetric by construction: the separation enters only through |.| and cos^2.
  return coupling_between(params, geometry.quantization_axis(), geometry.position(i) + displacement_i,
                          geometry.position(j) + displacement_j);
}

std::string to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::empty_geometry: return "empty-geometry";
    case DiagnosticKind::singular_geometry: return "singular-geometry";
    case DiagnosticKind::invalid_axis: return "invalid-axis";
    case DiagnosticKind::non_monotonic_chain: return "non-monotonic-chain";
    case DiagnosticKind::size_mismatch: return "size-mismatch";
    case DiagnosticKind::non_physical_rate: return "non-physical-rate";
  }
  return "unknown";
}

namespace {

void check_rate(std::vector<Diagnostic>& out, const char* name, double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << name << " must be a finite non-negative rate, got " << value;
    out.push_back({DiagnosticKind::non_physical_rate, msg.str()});
  }
}

void check_per_atom(std::vector<Diagnostic>& out, const char* name, const std::vector<double>& values,
                    std::size_t n) {
  if (values.size() != 1 && values.size() != n) {
    std::ostringstream msg;
    msg << name << " has " << values.size() << " entries; expected 1 or " << n;
    out.push_back({DiagnosticKind::size_mismatch, msg.str()});
  }
}

}  // namespace

std::vector<Diagnostic> validate(const ChainGeometry& geometry, const PhysicalParams& params) {
  std::vector<Diagnostic> out;
  const std::size_t n = geometry.n_atoms();
  if (n == 0) out.push_back({DiagnosticKind::empty_geometry, "geometry contains no atoms"});
  if (!(std::abs(geometry.quantization_axis().norm() - 1.0) < 1e-12))
    out.push_back({DiagnosticKind::invalid_axis, "quantization axis must be a non-zero vector"});

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!((geometry.position(i) - geometry.position(j)).norm() > 0.0)) {
        std::ostringstream msg;
        msg << "atoms " << i << " and " << j << " coincide";
        out.push_back({DiagnosticKind::singular_geometry, msg.str()});
      }
    }
  }

  if (n >= 3) {
    const Vec3 axis = geometry.position(n - 1) - geometry.position(0);
    for (std::size_t i = 1; i < n; ++i) {
      if ((geometry.position(i) - geometry.position(i - 1)).dot(axis) <= 0.0) {
        out.push_back({DiagnosticKind::non_monotonic_chain,
                       "positions are not ordered along the chain; nearest-neighbour truncation "
                       "follows input order"});
        break;
      }
    }
  }

  check_per_atom(out, "omega_opt", params.omega_opt, n);
  check_per_atom(out, "delta_opt", params.delta_opt, n);
  check_per_atom(out, "gamma_eff", params.gamma_eff, n);

  for (double g : params.gamma_eff) check_rate(out, "gamma_eff", g);
  for (double w : params.omega_opt) check_rate(out, "omega_opt", w);
  check_rate(out, "omega_mw", params.omega_mw);
  check_rate(out, "gamma_up", params.gamma_up);
  check_rate(out, "gamma_down", params.gamma_down);
  check_rate(out, "temperature", params.temperature);
  if (!(params.mass > 0.0)) out.push_back({DiagnosticKind::non_physical_rate, "mass must be positive"});
  if (params.temperature > 0.0) {
    for (double w : params.trap_omegas()) {
      if (!(w > 0.0)) {
        out.push_back({DiagnosticKind::non_physical_rate,
                       "trap frequency must be positive when temperature > 0"});
        break;
      }
    }
  }
  if (!std::isfinite(params.c3)) out.push_back({DiagnosticKind::non_physical_rate, "c3 must be finite"});
  return out;
}

}  // namespace rydchain
