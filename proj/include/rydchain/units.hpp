#pragma once

// Unit conventions used throughout rydchain:
//   length       µm
//   time         µs
//   frequency    MHz, always ordinary (ν, not ω); energies are quoted as E/h
//   rates        1/µs (decay rates enter the master equation without 2π)
//   temperature  µK
//   mass         kg
//
// Public APIs take and return ordinary frequencies. Propagators build the
// phase as 2πνt internally.

#include <numbers>

namespace rydchain::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Boltzmann constant in J/K.
inline constexpr double kBoltzmann = 1.380649e-23;

/// Mass of a 87Rb atom in kg.
inline constexpr double kRubidium87Mass = 1.443160e-25;

constexpr double to_angular(double nu) { return kTwoPi * nu; }
constexpr double to_ordinary(double omega) { return omega / kTwoPi; }

/// k_B T / m expressed in (µm/µs)^2 for T in µK and m in kg.
///
/// 1 m/s equals 1 µm/µs, so the SI value carries over unchanged once the
/// temperature is converted from µK.
constexpr double thermal_velocity_variance(double temperature_uk, double mass_kg) {
  return kBoltzmann * temperature_uk * 1e-6 / mass_kg;
}

}  // namespace rydchain::units
