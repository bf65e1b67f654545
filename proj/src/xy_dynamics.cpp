#include "rydchain/xy_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "rydchain/errors.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

std::string to_string(RangeMode mode) {
  return mode == RangeMode::full ? "full" : "nearest_neighbor";
}

RangeMode range_mode_from_string(const std::string& name) {
  if (name == "full") return RangeMode::full;
  if (name == "nearest_neighbor" || name == "nn") return RangeMode::nearest_neighbor;
  throw ConfigError("unknown range mode '" + name + "' (expected full or nearest_neighbor)");
}

CouplingMatrix build_coupling_matrix(const ChainGeometry& geometry, const PhysicalParams& params,
                                     RangeMode range_mode, std::span<const Vec3> displacements) {
  const std::size_t n = geometry.n_atoms();
  if (!displacements.empty() && displacements.size() != n)
    throw ContractError("displacement count does not match atom count");

  CouplingMatrix m{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), range_mode};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (range_mode == RangeMode::nearest_neighbor && j - i > 1) continue;
      const double c = displacements.empty()
                           ? pair_coupling(geometry, params, i, j)
                           : pair_coupling(geometry, params, i, j, displacements[i], displacements[j]);
      m.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      m.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  return m;
}

Eigenmodes eigenmodes(const CouplingMatrix& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix.entries);
  if (solver.info() != Eigen::Success) throw NumericalError("xy-dynamics", 0.0, "eigen-decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

SpinState::SpinState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw ContractError("spin state needs at least one site");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "spin state must be normalized, |psi| = " << norm;
    throw ContractError(msg.str());
  }
}

SpinState SpinState::excitation_at(std::size_t n_sites, std::size_t site) {
  if (site >= n_sites) throw ContractError("excitation site out of range");
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_sites));
  a(static_cast<Eigen::Index>(site)) = 1.0;
  return SpinState(std::move(a));
}

namespace {

using cd = std::complex<double>;

// exp(-2πi H h) ψ for H = V diag(λ) V^T.
Eigen::VectorXcd apply_exponential(const Eigenmodes& modes, const Eigen::VectorXcd& psi, double h) {
  Eigen::VectorXcd coeffs = modes.vectors.transpose().cast<cd>() * psi;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k)
    coeffs(k) *= std::polar(1.0, -units::kTwoPi * modes.values(k) * h);
  return modes.vectors.cast<cd>() * coeffs;
}

void require_non_negative(std::span<const double> times) {
  for (double t : times) {
    if (!(t >= 0.0)) throw ContractError("propagation times must be non-negative");
  }
}

}  // namespace

Eigen::MatrixXd propagate(const CouplingMatrix& matrix, const SpinState& initial, std::span<const double> times) {
  if (initial.n() != matrix.n()) throw ContractError("state and coupling matrix sizes differ");
  require_non_negative(times);
  const auto modes = eigenmodes(matrix);
  const auto n = static_cast<Eigen::Index>(matrix.n());
  Eigen::MatrixXd populations(n, static_cast<Eigen::Index>(times.size()));
  for (std::size_t c = 0; c < times.size(); ++c) {
    populations.col(static_cast<Eigen::Index>(c)) = apply_exponential(modes, initial.amplitudes(), times[c]).cwiseAbs2();
  }
  return populations;
}

Eigen::MatrixXd propagate_time_dependent(const ChainGeometry& geometry, const PhysicalParams& params,
                                         const ThermalSample& trajectories, RangeMode range_mode,
                                         const SpinState& initial, std::span<const double> times, double dt) {
  const std::size_t n = geometry.n_atoms();
  if (initial.n() != n) throw ContractError("state and geometry sizes differ");
  if (trajectories.n_atoms() != n) throw ContractError("trajectory count does not match atom count");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  require_non_negative(times);

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  const bool moving = !trajectories.is_static();
  auto modes_at = [&](double t) {
    const auto displaced = free_flight(trajectories, t);
    const auto m = build_coupling_matrix(geometry, params, range_mode, displaced);
    const double nu_max = m.entries.cwiseAbs().maxCoeff();
    if (units::kTwoPi * nu_max * dt >= kMaxPhasePerStep) {
      std::ostringstream msg;
      msg << "time step " << dt << " us too large: 2*pi*nu_max*dt = " << units::kTwoPi * nu_max * dt
          << " at t = " << t << " us (limit " << kMaxPhasePerStep << ")";
      throw ConfigError(msg.str());
    }
    return eigenmodes(m);
  };

  Eigen::MatrixXd populations(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(times.size()));
  Eigen::VectorXcd psi = initial.amplitudes();
  double t = 0.0;
  Eigenmodes frozen;
  if (!moving) frozen = modes_at(0.0);

  for (std::size_t idx : order) {
    const double target = times[idx];
    const double span = target - t;
    if (span > 0.0) {
      // Static couplings commute with themselves, so one exact jump suffices.
      const auto steps = moving ? static_cast<std::size_t>(std::ceil(span / dt - 1e-9)) : 1;
      const double h = span / static_cast<double>(std::max<std::size_t>(steps, 1));
      for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
        const double t_mid = t + (static_cast<double>(s) + 0.5) * h;
        psi = apply_exponential(moving ? modes_at(t_mid) : frozen, psi, h);
      }
      t = target;
    }
    populations.col(static_cast<Eigen::Index>(idx)) = psi.cwiseAbs2();
  }
  return populations;
}

double max_coupling(const ChainGeometry& geometry, const PhysicalParams& params, const ThermalSample& trajectories,
                    RangeMode range_mode, double t0, double t1) {
  const std::size_t n = geometry.n_atoms();
  if (trajectories.n_atoms() != n) throw ContractError("trajectory count does not match atom count");
  const double c3_bound = params.c3_tilde ? 2.0 * std::abs(*params.c3_tilde) : std::abs(params.c3);
  double nu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (range_mode == RangeMode::nearest_neighbor && j != i + 1) continue;
      const Vec3 dp = geometry.position(i) - geometry.position(j) + trajectories.displacement[i] -
                      trajectories.displacement[j];
      const Vec3 dv = trajectories.velocity[i] - trajectories.velocity[j];
      double t_star = t0;
      if (dv.squaredNorm() > 0.0) t_star = std::clamp(-dp.dot(dv) / dv.squaredNorm(), t0, t1);
      const double r = (dp + dv * t_star).norm();
      if (!(r > 0.0)) throw SingularGeometryError("atoms collide during free flight");
      nu = std::max(nu, c3_bound / (r * r * r));
    }
  }
  return nu;
}

double auto_time_step(const ChainGeometry& geometry, const PhysicalParams& params, const ThermalSample& trajectories,
                      RangeMode range_mode, double t_max) {
  const double nu = max_coupling(geometry, params, trajectories, range_mode, 0.0, t_max);
  if (!(nu > 0.0)) return std::max(t_max, 1e-3);
  return 0.5 * kMaxPhasePerStep / (units::kTwoPi * nu);
}

}  // namespace rydchain
