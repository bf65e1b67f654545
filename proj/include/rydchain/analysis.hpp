#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rydchain {

/// p(t) = offset + (amplitude / 2) cos(2π f t + phase).
struct OscillationFit {
  double frequency = 0.0;  // MHz, > 0
  double amplitude = 0.0;  // peak-to-trough, ≥ 0
  double offset = 0.0;
  double phase = 0.0;      // radians in (-π, π]
  double contrast = 0.0;   // amplitude clipped to [0, 1]
  double residual_rms = 0.0;
  std::size_t iterations = 0;
};

struct Periodogram {
  std::vector<double> frequencies;
  std::vector<double> power;
};

/// Power spectrum of the mean-removed series after linear resampling onto a
/// uniform grid, zero-padded by `oversample`.
Periodogram periodogram(std::span<const double> times, std::span<const double> values, std::size_t oversample = 8);

/// Frequency of the strongest non-DC spectral peak, refined by parabolic
/// interpolation. Throws FitError if no peak stands above the noise floor.
double dominant_frequency(std::span<const double> times, std::span<const double> values);

/// Nonlinear least squares sinusoid fit seeded from dominant_frequency and
/// refined by damped Gauss-Newton. Needs at least 8 points spanning one
/// period.
OscillationFit fit_sinusoid(std::span<const double> times, std::span<const double> values);

/// p(t) = offset + Σ_h [a_h cos(2π h f t) + b_h sin(2π h f t)], h = 1..H.
/// For periodic but non-sinusoidal signals such as cos^4.
struct HarmonicFit {
  double frequency = 0.0;
  double offset = 0.0;
  std::vector<double> amplitudes;  // peak-to-trough of each harmonic
  double residual_rms = 0.0;
};

/// Frequency by golden-section search on the residual within half a
/// spectral bin of dominant_frequency; linear least squares otherwise.
HarmonicFit fit_harmonics(std::span<const double> times, std::span<const double> values, std::size_t harmonics);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double exponent_error = 0.0;
  double prefactor_error = 0.0;
};

struct FixedExponentFit {
  double exponent = -3.0;
  double prefactor = 0.0;
  double prefactor_error = 0.0;
};

/// E = prefactor * R^exponent by linear least squares in log-log space.
/// Errors come from the fit covariance. Needs ≥ 3 positive points.
PowerLawFit fit_power_law(std::span<const double> distances, std::span<const double> energies);

/// Prefactor with the exponent held fixed, also fitted in log space.
FixedExponentFit fit_power_law_fixed(std::span<const double> distances, std::span<const double> energies,
                                     double exponent = -3.0);

/// All |λ_i - λ_j| for i < j in ascending order.
std::vector<double> beat_spectrum(std::span<const double> eigenvalues);

struct ContrastCurve {
  std::vector<double> times;     // window centres
  std::vector<double> contrast;  // max - min over the window
};

/// Sliding-window peak-to-trough contrast. Only centres whose full window
/// fits inside the data are reported. Throws ConfigError if the window is
/// shorter than the dominant oscillation period.
ContrastCurve envelope_contrast(std::span<const double> times, std::span<const double> values, double window);

/// Contrast of the window centred on `t` (max - min of samples within ±window/2).
double window_contrast(std::span<const double> times, std::span<const double> values, double t, double window);

}  // namespace rydchain
