#include "rydchain/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "rydchain/errors.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) throw DataError(std::string(who) + ": time and value columns differ in length");
}

double wrap_phase(double phi) {
  phi = std::remainder(phi, units::kTwoPi);
  if (phi <= -units::kPi) phi += units::kTwoPi;
  return phi;
}

}  // namespace

Periodogram periodogram(std::span<const double> times, std::span<const double> values, std::size_t oversample) {
  require_same_length(times, values, "periodogram");
  const std::size_t n = times.size();
  if (n < 4) throw FitError("periodogram: need at least 4 samples");
  const double t0 = times.front();
  const double t1 = times.back();
  if (!(t1 > t0)) throw FitError("periodogram: times must span a positive interval");

  // Uniform resampling (times are assumed sorted).
  const double dt = (t1 - t0) / static_cast<double>(n - 1);
  std::vector<double> uniform(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + dt * static_cast<double>(i);
    while (j + 2 < n && times[j + 1] < t) ++j;
    const double span = times[j + 1] - times[j];
    const double w = span > 0.0 ? std::clamp((t - times[j]) / span, 0.0, 1.0) : 0.0;
    uniform[i] = values[j] + w * (values[j + 1] - values[j]);
  }
  const double mean = std::accumulate(uniform.begin(), uniform.end(), 0.0) / static_cast<double>(n);
  for (double& u : uniform) u -= mean;

  const std::size_t m = std::max<std::size_t>(oversample, 1) * n;
  Periodogram out;
  out.frequencies.resize(m / 2 + 1);
  out.power.resize(m / 2 + 1);
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double f = static_cast<double>(k) / (static_cast<double>(m) * dt);
    const std::complex<double> step = std::polar(1.0, -units::kTwoPi * f * dt);
    std::complex<double> phasor(1.0, 0.0);
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      acc += uniform[i] * phasor;
      phasor *= step;
    }
    out.frequencies[k] = f;
    out.power[k] = std::norm(acc);
  }
  return out;
}

double dominant_frequency(std::span<const double> times, std::span<const double> values) {
  require_same_length(times, values, "dominant_frequency");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (values.empty() || *hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi)))
    throw FitError("series is constant: no spectral peak above the noise floor");

  const auto pg = periodogram(times, values);
  const std::size_t m = pg.power.size();
  std::size_t k_best = 1;
  for (std::size_t k = 1; k < m; ++k) {
    if (pg.power[k] > pg.power[k_best]) k_best = k;
  }
  std::vector<double> sorted(pg.power.begin() + 1, pg.power.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(pg.power[k_best] > 10.0 * median)) {
    std::ostringstream msg;
    msg << "no spectral peak above the noise floor (peak " << pg.power[k_best] << ", median " << median << ")";
    throw FitError(msg.str());
  }

  double f = pg.frequencies[k_best];
  if (k_best + 1 < m) {
    const double a = pg.power[k_best - 1], b = pg.power[k_best], c = pg.power[k_best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) {
      const double delta = 0.5 * (a - c) / denom;
      f += std::clamp(delta, -0.5, 0.5) * (pg.frequencies[1] - pg.frequencies[0]);
    }
  }
  return f;
}

OscillationFit fit_sinusoid(std::span<const double> times, std::span<const double> values) {
  require_same_length(times, values, "fit_sinusoid");
  const std::size_t n = times.size();
  if (n < 8) throw FitError("fit_sinusoid: need at least 8 points");
  const double f0 = dominant_frequency(times, values);
  const double span = times.back() - times.front();
  if (span * f0 < 1.0) throw FitError("fit_sinusoid: series spans less than one period");

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) y(r) = values[static_cast<std::size_t>(r)];

  // Linear solve for offset and quadratures at the spectral estimate.
  Eigen::MatrixXd lin(rows, 3);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double x = units::kTwoPi * f0 * times[static_cast<std::size_t>(r)];
    lin(r, 0) = 1.0;
    lin(r, 1) = std::cos(x);
    lin(r, 2) = std::sin(x);
  }
  const Eigen::Vector3d abc = lin.colPivHouseholderQr().solve(y);

  // theta = (offset, half amplitude, frequency, phase)
  Eigen::Vector4d theta(abc(0), std::hypot(abc(1), abc(2)), f0, std::atan2(-abc(2), abc(1)));
  auto residual = [&](const Eigen::Vector4d& p) {
    Eigen::VectorXd res(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double t = times[static_cast<std::size_t>(r)];
      res(r) = p(0) + p(1) * std::cos(units::kTwoPi * p(2) * t + p(3)) - y(r);
    }
    return res;
  };

  Eigen::VectorXd res = residual(theta);
  double cost = res.squaredNorm();
  double lambda = 1e-3;
  std::size_t iter = 0;
  for (; iter < 200; ++iter) {
    Eigen::MatrixXd jac(rows, 4);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double t = times[static_cast<std::size_t>(r)];
      const double x = units::kTwoPi * theta(2) * t + theta(3);
      jac(r, 0) = 1.0;
      jac(r, 1) = std::cos(x);
      jac(r, 2) = -theta(1) * std::sin(x) * units::kTwoPi * t;
      jac(r, 3) = -theta(1) * std::sin(x);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d grad = jac.transpose() * res;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d step = damped.ldlt().solve(-grad);
      const Eigen::Vector4d trial = theta + step;
      const Eigen::VectorXd trial_res = residual(trial);
      const double trial_cost = trial_res.squaredNorm();
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        theta = trial;
        res = trial_res;
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = rel > 1e-14 && step.norm() > 1e-14 * (theta.norm() + 1e-14);
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  OscillationFit fit;
  double half = theta(1);
  double freq = theta(2);
  double phase = theta(3);
  if (half < 0.0) {
    half = -half;
    phase += units::kPi;
  }
  if (freq < 0.0) {
    freq = -freq;
    phase = -phase;
  }
  if (!(freq > 0.0)) throw FitError("fit_sinusoid: fitted frequency collapsed to zero");
  fit.frequency = freq;
  fit.amplitude = 2.0 * half;
  fit.offset = theta(0);
  fit.phase = wrap_phase(phase);
  fit.contrast = std::clamp(fit.amplitude, 0.0, 1.0);
  fit.residual_rms = std::sqrt(cost / static_cast<double>(n));
  fit.iterations = iter;
  return fit;
}

HarmonicFit fit_harmonics(std::span<const double> times, std::span<const double> values, std::size_t harmonics) {
  require_same_length(times, values, "fit_harmonics");
  const std::size_t n = times.size();
  if (harmonics == 0) throw FitError("fit_harmonics: need at least one harmonic");
  if (n < 4 * harmonics + 4) throw FitError("fit_harmonics: too few points for the requested harmonics");
  const double f0 = dominant_frequency(times, values);
  const double span = times.back() - times.front();
  if (span * f0 < 1.0) throw FitError("fit_harmonics: series spans less than one period");

  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(2 * harmonics + 1);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) y(r) = values[static_cast<std::size_t>(r)];

  auto solve = [&](double f, Eigen::VectorXd& coeffs) {
    Eigen::MatrixXd design(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double x = units::kTwoPi * f * times[static_cast<std::size_t>(r)];
      design(r, 0) = 1.0;
      for (std::size_t h = 1; h <= harmonics; ++h) {
        design(r, static_cast<Eigen::Index>(2 * h - 1)) = std::cos(static_cast<double>(h) * x);
        design(r, static_cast<Eigen::Index>(2 * h)) = std::sin(static_cast<double>(h) * x);
      }
    }
    coeffs = design.colPivHouseholderQr().solve(y);
    return (design * coeffs - y).squaredNorm();
  };

  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = f0 - 0.5 / span;
  double hi = f0 + 0.5 / span;
  Eigen::VectorXd coeffs;
  double x1 = hi - golden * (hi - lo);
  double x2 = lo + golden * (hi - lo);
  double c1 = solve(x1, coeffs);
  double c2 = solve(x2, coeffs);
  for (int iter = 0; iter < 200 && hi - lo > 1e-13 * f0; ++iter) {
    if (c1 < c2) {
      hi = x2;
      x2 = x1;
      c2 = c1;
      x1 = hi - golden * (hi - lo);
      c1 = solve(x1, coeffs);
    } else {
      lo = x1;
      x1 = x2;
      c1 = c2;
      x2 = lo + golden * (hi - lo);
      c2 = solve(x2, coeffs);
    }
  }
  HarmonicFit fit;
  fit.frequency = 0.5 * (lo + hi);
  const double cost = solve(fit.frequency, coeffs);
  fit.offset = coeffs(0);
  for (std::size_t h = 1; h <= harmonics; ++h)
    fit.amplitudes.push_back(2.0 * std::hypot(coeffs(static_cast<Eigen::Index>(2 * h - 1)),
                                              coeffs(static_cast<Eigen::Index>(2 * h))));
  fit.residual_rms = std::sqrt(cost / static_cast<double>(n));
  return fit;
}

PowerLawFit fit_power_law(std::span<const double> distances, std::span<const double> energies) {
  require_same_length(distances, energies, "fit_power_law");
  const std::size_t n = distances.size();
  if (n < 3) throw DataError("fit_power_law: need at least 3 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(distances[i] > 0.0 && energies[i] > 0.0)) throw DataError("fit_power_law: values must be positive");
    x[i] = std::log(distances[i]);
    y[i] = std::log(energies[i]);
  }
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw DataError("fit_power_law: distances must not all be equal");
  const double slope = sxy / sxx;
  const double intercept = ym - slope * xm;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(n - 2);
  PowerLawFit fit;
  fit.exponent = slope;
  fit.prefactor = std::exp(intercept);
  fit.exponent_error = std::sqrt(s2 / sxx);
  fit.prefactor_error = fit.prefactor * std::sqrt(s2 * (1.0 / static_cast<double>(n) + xm * xm / sxx));
  return fit;
}

FixedExponentFit fit_power_law_fixed(std::span<const double> distances, std::span<const double> energies,
                                     double exponent) {
  require_same_length(distances, energies, "fit_power_law_fixed");
  const std::size_t n = distances.size();
  if (n < 3) throw DataError("fit_power_law_fixed: need at least 3 points");
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(distances[i] > 0.0 && energies[i] > 0.0)) throw DataError("fit_power_law_fixed: values must be positive");
    z[i] = std::log(energies[i]) - exponent * std::log(distances[i]);
  }
  const double zm = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : z) var += (v - zm) * (v - zm);
  var /= static_cast<double>(n - 1);
  FixedExponentFit fit;
  fit.exponent = exponent;
  fit.prefactor = std::exp(zm);
  fit.prefactor_error = fit.prefactor * std::sqrt(var / static_cast<double>(n));
  return fit;
}

std::vector<double> beat_spectrum(std::span<const double> eigenvalues) {
  if (eigenvalues.size() < 2) throw DataError("beat_spectrum: need at least 2 eigenvalues");
  std::vector<double> out;
  out.reserve(eigenvalues.size() * (eigenvalues.size() - 1) / 2);
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    for (std::size_t j = i + 1; j < eigenvalues.size(); ++j) out.push_back(std::abs(eigenvalues[i] - eigenvalues[j]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double window_contrast(std::span<const double> times, std::span<const double> values, double t, double window) {
  require_same_length(times, values, "window_contrast");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const double eps = 1e-9 * window;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 0.5 * window + eps) {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
  }
  if (!(hi >= lo)) throw DataError("window_contrast: no samples inside the window");
  return hi - lo;
}

ContrastCurve envelope_contrast(std::span<const double> times, std::span<const double> values, double window) {
  require_same_length(times, values, "envelope_contrast");
  if (times.size() < 3) throw ConfigError("envelope_contrast: need at least 3 samples");
  const double spacing = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(window >= 2.0 * spacing)) throw ConfigError("envelope_contrast: window must cover at least 3 samples");
  try {
    const double period = 1.0 / dominant_frequency(times, values);
    if (window < period * (1.0 - 1e-9)) {
      std::ostringstream msg;
      msg << "envelope_contrast: window " << window << " us is shorter than the oscillation period " << period
          << " us";
      throw ConfigError(msg.str());
    }
  } catch (const FitError&) {
    // No oscillation to resolve; any window of at least 3 samples works.
  }

  ContrastCurve out;
  const double eps = 1e-9 * window;
  for (double t : times) {
    if (t - 0.5 * window < times.front() - eps || t + 0.5 * window > times.back() + eps) continue;
    out.times.push_back(t);
    out.contrast.push_back(window_contrast(times, values, t, window));
  }
  return out;
}

}  // namespace rydchain
