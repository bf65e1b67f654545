#include "rydchain/obe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rydchain/errors.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

namespace {

using cd = std::complex<double>;
constexpr std::uint8_t kG = static_cast<std::uint8_t>(Level::g);
constexpr std::uint8_t kUp = static_cast<std::uint8_t>(Level::up);
constexpr std::uint8_t kDown = static_cast<std::uint8_t>(Level::down);

}  // namespace

std::string to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::optical: return "optical";
    case SegmentKind::microwave: return "microwave";
    case SegmentKind::free_evolution: return "free_evolution";
  }
  return "unknown";
}

PulseSegment PulseSegment::optical(double duration, std::vector<bool> addressing_mask) {
  return {SegmentKind::optical, duration, std::move(addressing_mask)};
}
PulseSegment PulseSegment::microwave(double duration) { return {SegmentKind::microwave, duration, {}}; }
PulseSegment PulseSegment::free_evolution(double duration) { return {SegmentKind::free_evolution, duration, {}}; }

double PulseSequence::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

// ---------------------------------------------------------------------------
// ProductDensityMatrix

ProductDensityMatrix::ProductDensityMatrix(std::size_t n_atoms, Eigen::MatrixXcd rho)
    : n_atoms_(n_atoms), rho_(std::move(rho)) {
  const auto dim = static_cast<Eigen::Index>(ipow(3, n_atoms_));
  if (rho_.rows() != dim || rho_.cols() != dim)
    throw ContractError("density matrix must be 3^N x 3^N for N = " + std::to_string(n_atoms_));
}

ProductDensityMatrix ProductDensityMatrix::product_state(std::span<const Level> levels) {
  const std::size_t n = levels.size();
  const auto dim = static_cast<Eigen::Index>(ipow(3, n));
  Eigen::Index index = 0;
  for (Level l : levels) index = index * 3 + static_cast<Eigen::Index>(l);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho(index, index) = 1.0;
  return ProductDensityMatrix(n, std::move(rho));
}

ProductDensityMatrix ProductDensityMatrix::ground_state(std::size_t n_atoms) {
  std::vector<Level> levels(n_atoms, Level::g);
  return product_state(levels);
}

double ProductDensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double ProductDensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

LevelPopulations ProductDensityMatrix::populations() const {
  std::vector<double> p(dim());
  for (std::size_t a = 0; a < p.size(); ++a) p[a] = rho_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real();
  return LevelPopulations(n_atoms_, std::move(p));
}

// ---------------------------------------------------------------------------
// ObeEngine

ObeEngine::ObeEngine(ChainGeometry geometry, PhysicalParams params, ThermalSample trajectories, ObeOptions options)
    : geometry_(std::move(geometry)),
      params_(std::move(params)),
      trajectories_(std::move(trajectories)),
      options_(options) {
  const std::size_t n = geometry_.n_atoms();
  if (n == 0) throw ContractError("obe-engine needs at least one atom");
  if (n > kMaxObeAtoms)
    throw ConfigError("obe-engine supports at most " + std::to_string(kMaxObeAtoms) + " atoms, got " +
                      std::to_string(n));
  if (trajectories_.n_atoms() != n) throw ContractError("trajectory count does not match atom count");
  if (!(options_.step_fraction > 0.0)) throw ConfigError("step_fraction must be positive");

  dim_ = ipow(3, n);
  moving_ = !trajectories_.is_static();
  levels_.resize(dim_ * n);
  for (std::size_t a = 0; a < dim_; ++a) {
    std::size_t rest = a;
    for (std::size_t k = n; k-- > 0;) {
      levels_[a * n + k] = static_cast<std::uint8_t>(rest % 3);
      rest /= 3;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (options_.range_mode == RangeMode::nearest_neighbor && j - i > 1) continue;
      PairTerm term{i, j, {}};
      const auto wi = static_cast<int>(ipow(3, n - 1 - i));
      const auto wj = static_cast<int>(ipow(3, n - 1 - j));
      for (std::size_t a = 0; a < dim_; ++a) {
        if (levels_[a * n + i] == kUp && levels_[a * n + j] == kDown) {
          // ↑ -> ↓ on i (+wi), ↓ -> ↑ on j (-wj)
          term.transitions.emplace_back(static_cast<int>(a), static_cast<int>(a) + wi - wj);
        }
      }
      pairs_.push_back(std::move(term));
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    const auto w = static_cast<int>(ipow(3, n - 1 - k));
    for (Level level : {Level::up, Level::down}) {
      JumpChannel channel{{}, {}, k, level};
      const auto shift = static_cast<int>(level) * w;
      for (std::size_t a = 0; a < dim_; ++a) {
        if (levels_[a * n + k] == static_cast<std::uint8_t>(level)) {
          channel.source.push_back(static_cast<int>(a));
          channel.target.push_back(static_cast<int>(a) - shift);
        }
      }
      jumps_.push_back(std::move(channel));
    }
  }

  // Fail early on coincident atoms.
  std::vector<double> probe;
  couplings_at(0.0, probe);
}

double ObeEngine::jump_rate(const JumpChannel& channel, SegmentKind kind) const {
  if (channel.level == Level::down) return params_.gamma_down;
  const double optical = kind == SegmentKind::optical ? params_.gamma_eff_at(channel.atom) : 0.0;
  return optical + params_.gamma_up;
}

ObeEngine::SegmentTerms ObeEngine::terms_for(const PulseSegment& segment) const {
  const std::size_t n = n_atoms();
  SegmentTerms terms;
  terms.diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  terms.decay = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));

  for (std::size_t k = 0; k < n; ++k) {
    const auto w = static_cast<int>(ipow(3, n - 1 - k));
    double drive = 0.0;
    std::uint8_t from = kG;
    if (segment.kind == SegmentKind::optical) {
      drive = 0.5 * params_.omega_opt_at(k);
      from = kG;
    } else if (segment.kind == SegmentKind::microwave) {
      drive = 0.5 * params_.omega_mw;
      from = kUp;
    }
    if (drive != 0.0) {
      for (std::size_t a = 0; a < dim_; ++a) {
        if (levels_[a * n + k] != from) continue;
        const int b = static_cast<int>(a) + w;  // g -> ↑ or ↑ -> ↓ increments the digit
        terms.offdiag.push_back({static_cast<int>(a), b, drive});
        terms.offdiag.push_back({b, static_cast<int>(a), drive});
      }
    }
    if (segment.kind == SegmentKind::optical) {
      const double delta = params_.delta_opt_at(k) + (segment.addressed(k) ? params_.addressing_shift : 0.0);
      if (delta != 0.0) {
        for (std::size_t a = 0; a < dim_; ++a) {
          if (levels_[a * n + k] != kG) terms.diag(static_cast<Eigen::Index>(a)) -= delta;
        }
      }
    }
  }

  terms.jump_rates.reserve(jumps_.size());
  for (const auto& channel : jumps_) {
    const double rate = jump_rate(channel, segment.kind);
    terms.jump_rates.push_back(rate);
    for (int a : channel.source) terms.decay(a) += rate;
  }
  return terms;
}

void ObeEngine::couplings_at(double t, std::vector<double>& out) const {
  out.resize(pairs_.size());
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto& term = pairs_[p];
    const Vec3 ri = geometry_.position(term.i) + free_flight(trajectories_, term.i, t);
    const Vec3 rj = geometry_.position(term.j) + free_flight(trajectories_, term.j, t);
    out[p] = coupling_between(params_, geometry_.quantization_axis(), ri, rj);
  }
}

void ObeEngine::rhs_into(const SegmentTerms& terms, const std::vector<double>& couplings,
                         const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& work, Eigen::MatrixXcd& out) const {
  // work = ρ H, column by column (H is real symmetric and sparse).
  const auto dim = static_cast<Eigen::Index>(dim_);
  for (Eigen::Index a = 0; a < dim; ++a) work.col(a) = terms.diag(a) * rho.col(a);
  for (const auto& e : terms.offdiag) work.col(e.col) += e.value * rho.col(e.row);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const double v = couplings[p];
    for (const auto& [a, b] : pairs_[p].transitions) {
      work.col(b) += v * rho.col(a);
      work.col(a) += v * rho.col(b);
    }
  }

  // -2πi [H, ρ] = 2πi (ρH - (ρH)^†), plus the anticommutator part of L.
  const cd two_pi_i(0.0, units::kTwoPi);
  for (Eigen::Index b = 0; b < dim; ++b) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      out(a, b) = two_pi_i * (work(a, b) - std::conj(work(b, a))) - 0.5 * (terms.decay(a) + terms.decay(b)) * rho(a, b);
    }
  }

  // Quantum jumps: rate * L ρ L^† with L = |g><level| on one atom.
  for (std::size_t c = 0; c < jumps_.size(); ++c) {
    const double rate = terms.jump_rates[c];
    if (rate == 0.0) continue;
    const auto& src = jumps_[c].source;
    const auto& dst = jumps_[c].target;
    for (std::size_t m = 0; m < src.size(); ++m) {
      for (std::size_t l = 0; l < src.size(); ++l) out(dst[l], dst[m]) += rate * rho(src[l], src[m]);
    }
  }
}

Eigen::MatrixXd ObeEngine::hamiltonian(double t, const PulseSegment& segment) const {
  const auto terms = terms_for(segment);
  std::vector<double> couplings;
  couplings_at(t, couplings);
  Eigen::MatrixXd h = terms.diag.asDiagonal();
  for (const auto& e : terms.offdiag) h(e.row, e.col) += e.value;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    for (const auto& [a, b] : pairs_[p].transitions) {
      h(a, b) += couplings[p];
      h(b, a) += couplings[p];
    }
  }
  return h;
}

Eigen::MatrixXcd ObeEngine::dissipator(const Eigen::MatrixXcd& rho, SegmentKind kind) const {
  PulseSegment silent{kind, 1.0, {}};
  auto terms = terms_for(silent);
  terms.offdiag.clear();
  terms.diag.setZero();
  std::vector<double> zero(pairs_.size(), 0.0);
  Eigen::MatrixXcd work(rho.rows(), rho.cols());
  Eigen::MatrixXcd out(rho.rows(), rho.cols());
  rhs_into(terms, zero, rho, work, out);
  return out;
}

Eigen::MatrixXcd ObeEngine::rhs(double t, const PulseSegment& segment, const Eigen::MatrixXcd& rho) const {
  const auto terms = terms_for(segment);
  std::vector<double> couplings;
  couplings_at(t, couplings);
  Eigen::MatrixXcd work(rho.rows(), rho.cols());
  Eigen::MatrixXcd out(rho.rows(), rho.cols());
  rhs_into(terms, couplings, rho, work, out);
  return out;
}

double ObeEngine::max_step(const PulseSegment& segment, double t0, double t1) const {
  const std::size_t n = n_atoms();
  double f_max = 0.0;
  if (segment.kind == SegmentKind::optical) {
    for (std::size_t k = 0; k < n; ++k) {
      f_max = std::max(f_max, std::abs(params_.omega_opt_at(k)));
      f_max = std::max(f_max, std::abs(params_.delta_opt_at(k) + (segment.addressed(k) ? params_.addressing_shift : 0.0)));
    }
  } else if (segment.kind == SegmentKind::microwave) {
    f_max = std::max(f_max, std::abs(params_.omega_mw));
  }

  // Coupling part of the spectral width: the largest row sum of pair
  // couplings (Gershgorin), each taken at its closest approach on [t0, t1].
  // Pair distances under linear motion are convex in t, so the closest
  // approach is at the clamped stationary point.
  const double c3_bound = params_.c3_tilde ? 2.0 * std::abs(*params_.c3_tilde) : std::abs(params_.c3);
  std::vector<double> row_sum(n, 0.0);
  for (const auto& term : pairs_) {
    const Vec3 dp = geometry_.position(term.i) - geometry_.position(term.j) + trajectories_.displacement[term.i] -
                    trajectories_.displacement[term.j];
    const Vec3 dv = trajectories_.velocity[term.i] - trajectories_.velocity[term.j];
    double t_star = t0;
    if (dv.squaredNorm() > 0.0) t_star = std::clamp(-dp.dot(dv) / dv.squaredNorm(), t0, t1);
    const double r = (dp + dv * t_star).norm();
    if (!(r > 0.0)) throw SingularGeometryError("atoms collide during free flight");
    const double nu = c3_bound / (r * r * r);
    row_sum[term.i] += nu;
    row_sum[term.j] += nu;
  }
  for (double nu : row_sum) f_max = std::max(f_max, nu);

  // Decay rates bound the step too, in units where they compare to 2πf.
  double gamma_max = std::max(params_.gamma_up, params_.gamma_down);
  if (segment.kind == SegmentKind::optical) {
    for (std::size_t k = 0; k < n; ++k) gamma_max = std::max(gamma_max, params_.gamma_eff_at(k) + params_.gamma_up);
  }
  const double rate = std::max(units::kTwoPi * f_max, gamma_max);
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return options_.step_fraction / rate;
}

void ObeEngine::evolve(ProductDensityMatrix& state, const PulseSegment& segment, double t_start, double duration,
                       double step_scale) const {
  if (duration <= 0.0) return;
  if (state.n_atoms() != n_atoms()) throw ContractError("state and engine atom counts differ");

  const auto terms = terms_for(segment);
  const double h_max = max_step(segment, t_start, t_start + duration) * step_scale * step_scale_;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / h_max - 1e-9)));
  const double h = duration / static_cast<double>(steps);

  auto& rho = state.matrix();
  const auto dim = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXcd work(dim, dim), k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), tmp(dim, dim);
  std::vector<double> c_start, c_mid, c_end;
  if (!moving_) {
    couplings_at(t_start, c_start);
    c_mid = c_end = c_start;
  }

  for (std::size_t s = 0; s < steps; ++s) {
    const double t = t_start + static_cast<double>(s) * h;
    if (moving_) {
      couplings_at(t, c_start);
      couplings_at(t + 0.5 * h, c_mid);
      couplings_at(t + h, c_end);
    }
    rhs_into(terms, c_start, rho, work, k1);
    tmp = rho + (0.5 * h) * k1;
    rhs_into(terms, c_mid, tmp, work, k2);
    tmp = rho + (0.5 * h) * k2;
    rhs_into(terms, c_mid, tmp, work, k3);
    tmp = rho + h * k3;
    rhs_into(terms, c_end, tmp, work, k4);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

void ObeEngine::check_state(const ProductDensityMatrix& rho, double t) {
  const double trace_dev = std::abs(rho.trace() - cd(1.0, 0.0));
  max_trace_deviation_ = std::max(max_trace_deviation_, trace_dev);
  if (!(trace_dev <= options_.trace_tolerance)) {
    std::ostringstream msg;
    msg << "trace deviates from 1 by " << trace_dev;
    throw NumericalError("obe-engine", t, msg.str());
  }
  const double herm = rho.hermiticity_error();
  if (!(herm <= options_.hermiticity_tolerance)) {
    std::ostringstream msg;
    msg << "density matrix lost hermiticity (" << herm << ")";
    throw NumericalError("obe-engine", t, msg.str());
  }
  if (options_.check_positivity) {
    const double lambda = rho.min_eigenvalue();
    if (lambda < -options_.positivity_tolerance) {
      std::ostringstream msg;
      msg << "positivity violated, minimum eigenvalue " << lambda;
      throw NumericalError("obe-engine", t, msg.str());
    }
  }
}

Eigen::MatrixXd ObeEngine::run_sequence(const PulseSequence& sequence, const ProductDensityMatrix& initial,
                                        std::span<const double> sample_times) {
  for (const auto& seg : sequence.segments) {
    if (!(seg.duration > 0.0)) throw ConfigError("pulse segment durations must be positive");
  }
  const double total = sequence.total_duration();
  std::vector<std::size_t> order(sample_times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample_times[a] < sample_times[b]; });
  for (double t : sample_times) {
    if (!(t >= 0.0 && t <= total * (1.0 + 1e-12))) throw ContractError("sample time outside the sequence");
  }

  ProductDensityMatrix rho = initial;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(sample_times.size()));
  std::size_t seg_index = 0;
  double seg_start = 0.0;
  double t = 0.0;
  for (std::size_t idx : order) {
    const double target = std::min(sample_times[idx], total);
    while (t < target) {
      const auto& seg = sequence.segments[seg_index];
      const double seg_end = seg_start + seg.duration;
      const double stop = std::min(target, seg_end);
      evolve(rho, seg, t, stop - t);
      t = stop;
      if (t >= seg_end && seg_index + 1 < sequence.segments.size()) {
        seg_start = seg_end;
        ++seg_index;
      }
    }
    check_state(rho, t);
    const auto pops = rho.populations();
    for (std::size_t a = 0; a < dim_; ++a) out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(idx)) = pops[a];
  }
  return out;
}

Eigen::MatrixXd ObeEngine::run_tau_scan(std::span<const PulseSegment> preparation, const ProductDensityMatrix& initial,
                                        std::span<const double> taus, std::span<const PulseSegment> readout) {
  for (double tau : taus) {
    if (!(tau >= 0.0)) throw ContractError("interaction times must be non-negative");
  }
  ProductDensityMatrix rho = initial;
  double t = 0.0;
  for (const auto& seg : preparation) {
    evolve(rho, seg, t, seg.duration);
    t += seg.duration;
  }
  check_state(rho, t);
  const double t_prep = t;

  std::vector<std::size_t> order(taus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });

  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(taus.size()));
  const PulseSegment free_segment = PulseSegment::free_evolution(1.0);
  for (std::size_t idx : order) {
    const double target = t_prep + taus[idx];
    evolve(rho, free_segment, t, target - t);
    t = target;

    ProductDensityMatrix branch = rho;
    double tb = t;
    for (const auto& seg : readout) {
      evolve(branch, seg, tb, seg.duration);
      tb += seg.duration;
    }
    check_state(branch, tb);
    const auto pops = branch.populations();
    for (std::size_t a = 0; a < dim_; ++a) out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(idx)) = pops[a];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-function entry points

Eigen::MatrixXd hamiltonian_at(double t, const PulseSegment& segment, const PhysicalParams& params,
                               const ChainGeometry& geometry, const ThermalSample& trajectories,
                               RangeMode range_mode) {
  ObeOptions options;
  options.range_mode = range_mode;
  return ObeEngine(geometry, params, trajectories, options).hamiltonian(t, segment);
}

Eigen::MatrixXcd lindblad_dissipator(const Eigen::MatrixXcd& rho, std::size_t n_atoms, const PhysicalParams& params,
                                     SegmentKind kind) {
  // Positions do not enter the dissipator; a far-spaced dummy chain suffices.
  const auto geometry = ChainGeometry::linear(n_atoms, 1.0);
  return ObeEngine(geometry, params, ThermalSample::at_rest(n_atoms)).dissipator(rho, kind);
}

Eigen::MatrixXd run_sequence(const PulseSequence& sequence, const ChainGeometry& geometry,
                             const PhysicalParams& params, const ThermalSample& trajectories,
                             std::span<const double> sample_times, ObeOptions options) {
  ObeEngine engine(geometry, params, trajectories, options);
  return engine.run_sequence(sequence, ProductDensityMatrix::ground_state(geometry.n_atoms()), sample_times);
}

ReadoutPopulations project_to_readout(const LevelPopulations& populations, ReadoutConvention convention) {
  const std::size_t n = populations.n_atoms();
  ReadoutPopulations out(n);
  for (std::size_t a = 0; a < populations.size(); ++a) {
    std::size_t index = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto level = static_cast<Level>(populations.digit(a, k));
      const bool ground = level == Level::g ||
                          (convention == ReadoutConvention::ideal_deexcitation && level == Level::up);
      index = index * 2 + (ground ? 1 : 0);
    }
    out[index] += populations[a];
  }
  return out;
}

}  // namespace rydchain
