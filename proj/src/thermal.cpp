#include "rydchain/thermal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "rydchain/errors.hpp"

namespace rydchain {

bool ThermalSample::is_static() const {
  for (std::size_t i = 0; i < n_atoms(); ++i) {
    if (!velocity[i].isZero(0.0)) return false;
  }
  return true;
}

ThermalSample ThermalSample::at_rest(std::size_t n_atoms) {
  ThermalSample s;
  s.displacement.assign(n_atoms, Vec3::Zero());
  s.velocity.assign(n_atoms, Vec3::Zero());
  return s;
}

std::array<double, 3> position_rms(const PhysicalParams& params) {
  const double sv = velocity_rms(params);
  std::array<double, 3> out{};
  const auto omegas = params.trap_omegas();
  for (std::size_t k = 0; k < 3; ++k) out[k] = sv > 0.0 ? sv / omegas[k] : 0.0;
  return out;
}

double velocity_rms(const PhysicalParams& params) {
  if (params.temperature <= 0.0) return 0.0;
  return std::sqrt(units::thermal_velocity_variance(params.temperature, params.mass));
}

ThermalSample sample_thermal(const PhysicalParams& params, std::size_t n_atoms, std::uint64_t seed) {
  ThermalSample s = ThermalSample::at_rest(n_atoms);
  s.seed = seed;
  if (params.temperature <= 0.0) return s;

  const auto sr = position_rms(params);
  const double sv = velocity_rms(params);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n_atoms; ++i) {
    for (int k = 0; k < 3; ++k) s.displacement[i][k] = sr[k] * normal(rng);
    for (int k = 0; k < 3; ++k) s.velocity[i][k] = sv * normal(rng);
  }
  return s;
}

std::vector<Vec3> free_flight(const ThermalSample& sample, double t) {
  std::vector<Vec3> out(sample.n_atoms());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = free_flight(sample, i, t);
  return out;
}

Vec3 free_flight(const ThermalSample& sample, std::size_t atom, double t) {
  return sample.displacement[atom] + sample.velocity[atom] * t;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t base_seed, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t k = 0; k < n; ++k) seeds[k] = mix_seed(base_seed, k);
  return seeds;
}

RealizationError::RealizationError(std::uint64_t seed, const std::string& what, std::exception_ptr cause)
    : std::runtime_error("realization with seed " + std::to_string(seed) + " failed: " + what),
      seed_(seed),
      cause_(std::move(cause)) {}

EnsembleResult monte_carlo(const Realization& run, std::span<const std::uint64_t> seeds, std::size_t workers) {
  const std::size_t n = seeds.size();
  if (n == 0) throw ContractError("monte_carlo needs at least one realization");

  std::vector<Eigen::MatrixXd> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        results[k] = run(seeds[k]);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, n);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });

  for (std::size_t k : order) {
    if (!failures[k]) continue;
    try {
      std::rethrow_exception(failures[k]);
    } catch (const std::exception& e) {
      throw RealizationError(seeds[k], e.what(), failures[k]);
    } catch (...) {
      throw RealizationError(seeds[k], "unknown exception", failures[k]);
    }
  }

  const auto& first = results[order.front()];
  for (const auto& r : results) {
    if (r.rows() != first.rows() || r.cols() != first.cols())
      throw ContractError("realizations returned matrices of different shapes");
  }

  EnsembleResult out;
  out.n_realizations = n;
  out.mean = Eigen::MatrixXd::Zero(first.rows(), first.cols());
  for (std::size_t k : order) out.mean += results[k];
  out.mean /= static_cast<double>(n);

  out.standard_error = Eigen::MatrixXd::Zero(first.rows(), first.cols());
  if (n > 1) {
    for (std::size_t k : order) out.standard_error += (results[k] - out.mean).cwiseAbs2();
    out.standard_error = (out.standard_error / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  }
  return out;
}

EnsembleResult monte_carlo(const Realization& run, std::size_t n_realizations, std::uint64_t base_seed,
                           std::size_t workers) {
  const auto seeds = derive_seeds(base_seed, n_realizations);
  return monte_carlo(run, seeds, workers);
}

namespace {

// Squared energy threshold, in (µm/µs)^2: an atom escapes when
// Σ_axes (v^2 + ω^2 x^2) > 2 k_B U / m.
double escape_fraction(const PhysicalParams& params, double trap_depth, double t, std::size_t n_mc,
                       std::uint64_t seed) {
  if (params.temperature <= 0.0 || n_mc == 0) return 0.0;
  const auto sr = position_rms(params);
  const double sv = velocity_rms(params);
  const auto omegas = params.trap_omegas();
  const double threshold = 2.0 * units::thermal_velocity_variance(trap_depth, params.mass);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t escaped = 0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    double energy = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double x0 = sr[k] * normal(rng);
      const double v = sv * normal(rng);
      const double x = x0 + v * t;
      energy += v * v + omegas[k] * omegas[k] * x * x;
    }
    if (energy > threshold) ++escaped;
  }
  return static_cast<double>(escaped) / static_cast<double>(n_mc);
}

}  // namespace

double recapture_epsilon(const PhysicalParams& params, double trap_depth, double t, std::size_t n_mc,
                         double floor, std::uint64_t seed) {
  if (t < 0.0) throw ContractError("recapture_epsilon: t must be non-negative");
  if (!(floor >= 0.0 && floor <= 1.0)) throw ContractError("recapture_epsilon: floor must lie in [0, 1]");
  const double p = escape_fraction(params, trap_depth, t, n_mc, seed);
  return floor + (1.0 - floor) * p;
}

double calibrate_trap_depth(const PhysicalParams& params, double t, double target, double floor,
                            std::size_t n_mc, std::uint64_t seed) {
  if (!(target > floor && target < 1.0))
    throw ConfigError("calibrate_trap_depth: target must lie between the floor and 1");
  if (params.temperature <= 0.0) throw ConfigError("calibrate_trap_depth: needs a positive temperature");
  auto eps = [&](double depth) { return recapture_epsilon(params, depth, t, n_mc, floor, seed); };
  double lo = 0.0;
  double hi = params.temperature;
  while (eps(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) throw ConfigError("calibrate_trap_depth: no depth reaches the target");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-9 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (eps(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace rydchain
