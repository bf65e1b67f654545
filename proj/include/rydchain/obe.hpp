#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydchain/model.hpp"
#include "rydchain/populations.hpp"
#include "rydchain/thermal.hpp"
#include "rydchain/xy_dynamics.hpp"

namespace rydchain {

/// Dense 3^N density matrices become impractical beyond this.
inline constexpr std::size_t kMaxObeAtoms = 6;

enum class SegmentKind { optical, microwave, free_evolution };

std::string to_string(SegmentKind kind);

/// One piece of the experimental sequence. The kind decides which drives are
/// on: optical segments switch on Ω_L, δ_L and the effective damping γ_i;
/// microwave segments switch on Ω_MW; free evolution keeps only the
/// interaction. Lifetimes of both Rydberg levels act in every segment.
struct PulseSegment {
  SegmentKind kind = SegmentKind::free_evolution;
  double duration = 0.0;  // µs, > 0
  /// true = atom shifted by the addressing beam. Empty means no addressing.
  std::vector<bool> addressing_mask;

  static PulseSegment optical(double duration, std::vector<bool> addressing_mask = {});
  static PulseSegment microwave(double duration);
  static PulseSegment free_evolution(double duration);

  bool addressed(std::size_t atom) const {
    return atom < addressing_mask.size() && addressing_mask[atom];
  }
};

/// How level populations at the end of a sequence turn into ground/Rydberg
/// content at recapture time.
enum class ReadoutConvention {
  /// The sequence already ends with the de-excitation pulse: g is ground,
  /// both Rydberg levels are lost.
  simulated_deexcitation,
  /// No de-excitation pulse was simulated; ↑ is mapped to g as if a perfect
  /// pulse had been applied, ↓ is lost.
  ideal_deexcitation,
};

struct PulseSequence {
  std::vector<PulseSegment> segments;
  ReadoutConvention readout = ReadoutConvention::simulated_deexcitation;

  double total_duration() const;
};

/// Density matrix over {g, ↑, ↓}^N with atom 0 as the most significant digit.
class ProductDensityMatrix {
 public:
  ProductDensityMatrix(std::size_t n_atoms, Eigen::MatrixXcd rho);

  static ProductDensityMatrix product_state(std::span<const Level> levels);
  static ProductDensityMatrix ground_state(std::size_t n_atoms);

  std::size_t n_atoms() const noexcept { return n_atoms_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }
  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
  Eigen::MatrixXcd& matrix() noexcept { return rho_; }

  std::complex<double> trace() const { return rho_.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  LevelPopulations populations() const;

 private:
  std::size_t n_atoms_;
  Eigen::MatrixXcd rho_;
};

struct ObeOptions {
  RangeMode range_mode = RangeMode::full;
  /// Step rule: 2π dt max(Ω_opt, Ω_MW, ν_row, |δ|) ≤ step_fraction, with ν_row
  /// the largest row sum of pair couplings.
  double step_fraction = 0.02;
  bool check_positivity = true;
  double positivity_tolerance = 1e-5;
  double trace_tolerance = 1e-8;
  double hermiticity_tolerance = 1e-9;
};

/// Open-system integrator for a fixed chain, parameter set and trajectory
/// draw. Integration is fixed-step RK4 on dρ/dt = -2πi[H, ρ] + L[ρ].
class ObeEngine {
 public:
  ObeEngine(ChainGeometry geometry, PhysicalParams params, ThermalSample trajectories, ObeOptions options = {});

  std::size_t n_atoms() const noexcept { return geometry_.n_atoms(); }
  std::size_t dim() const noexcept { return dim_; }

  /// Dense Hamiltonian in MHz at time t within `segment`.
  Eigen::MatrixXd hamiltonian(double t, const PulseSegment& segment) const;
  /// Lindblad dissipator L[ρ] in 1/µs.
  Eigen::MatrixXcd dissipator(const Eigen::MatrixXcd& rho, SegmentKind kind) const;
  /// Full right-hand side dρ/dt at time t.
  Eigen::MatrixXcd rhs(double t, const PulseSegment& segment, const Eigen::MatrixXcd& rho) const;

  /// Largest step allowed by the step rule on [t0, t1] within `segment`.
  double max_step(const PulseSegment& segment, double t0, double t1) const;

  /// Integrates ρ from t_start for `duration` under `segment`.
  void evolve(ProductDensityMatrix& rho, const PulseSegment& segment, double t_start, double duration,
              double step_scale = 1.0) const;

  /// Level populations (rows = 3^N basis states, columns = sample times).
  /// Sample times are absolute times within the sequence.
  Eigen::MatrixXd run_sequence(const PulseSequence& sequence, const ProductDensityMatrix& initial,
                               std::span<const double> sample_times);

  /// Runs `preparation`, then free evolution for each τ followed by the
  /// `readout` segments, branching from the shared trajectory. Returns level
  /// populations at the end of each readout (columns follow `taus`).
  Eigen::MatrixXd run_tau_scan(std::span<const PulseSegment> preparation, const ProductDensityMatrix& initial,
                               std::span<const double> taus, std::span<const PulseSegment> readout);

  /// Largest |tr ρ - 1| seen at checked points since construction.
  double max_trace_deviation() const noexcept { return max_trace_deviation_; }
  /// Halves every step when set below 1 (used for convergence checks).
  void set_step_scale(double scale) { step_scale_ = scale; }

 private:
  struct Entry {
    int row;
    int col;
    double value;
  };
  struct PairTerm {
    std::size_t i;
    std::size_t j;
    std::vector<std::pair<int, int>> transitions;  // (a, b): a has i=↑, j=↓; b has i=↓, j=↑
  };
  struct JumpChannel {
    std::vector<int> source;
    std::vector<int> target;
    std::size_t atom;
    Level level;
  };
  struct SegmentTerms {
    std::vector<Entry> offdiag;
    Eigen::VectorXd diag;
    Eigen::VectorXd decay;  // Γ_a, total decay rate out of basis state a
    std::vector<double> jump_rates;
  };

  SegmentTerms terms_for(const PulseSegment& segment) const;
  void couplings_at(double t, std::vector<double>& out) const;
  void rhs_into(const SegmentTerms& terms, const std::vector<double>& couplings, const Eigen::MatrixXcd& rho,
                Eigen::MatrixXcd& work, Eigen::MatrixXcd& out) const;
  double jump_rate(const JumpChannel& channel, SegmentKind kind) const;
  void check_state(const ProductDensityMatrix& rho, double t);

  ChainGeometry geometry_;
  PhysicalParams params_;
  ThermalSample trajectories_;
  ObeOptions options_;
  std::size_t dim_;
  bool moving_;
  std::vector<std::uint8_t> levels_;  // levels_[a * N + k]
  std::vector<PairTerm> pairs_;
  std::vector<JumpChannel> jumps_;
  double max_trace_deviation_ = 0.0;
  double step_scale_ = 1.0;
};

Eigen::MatrixXd hamiltonian_at(double t, const PulseSegment& segment, const PhysicalParams& params,
                               const ChainGeometry& geometry, const ThermalSample& trajectories,
                               RangeMode range_mode = RangeMode::full);

Eigen::MatrixXcd lindblad_dissipator(const Eigen::MatrixXcd& rho, std::size_t n_atoms, const PhysicalParams& params,
                                     SegmentKind kind);

Eigen::MatrixXd run_sequence(const PulseSequence& sequence, const ChainGeometry& geometry,
                             const PhysicalParams& params, const ThermalSample& trajectories,
                             std::span<const double> sample_times, ObeOptions options = {});

/// Ground/Rydberg content at recapture under the given readout convention.
ReadoutPopulations project_to_readout(const LevelPopulations& populations, ReadoutConvention convention);

}  // namespace rydchain
