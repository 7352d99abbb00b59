#pragma once

#include <numbers>

namespace qrsim::constants {

// CODATA 2018 exact values (SI).
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Angular frequency of "x GHz" quoted as 2*pi*x.
inline constexpr double ghz(double x) { return two_pi * x * 1e9; }
inline constexpr double mhz(double x) { return two_pi * x * 1e6; }
inline constexpr double khz(double x) { return two_pi * x * 1e3; }

} // namespace qrsim::constants
