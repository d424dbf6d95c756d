// units.hpp - unit conventions shared by every module.
//
// hbar = 1. Energies and rates are carried in wavenumbers (cm^-1), times in
// femtoseconds. A wavenumber converts to an angular frequency in rad/fs by
// multiplying with 2*pi*c.

#pragma once

#include <numbers>

namespace vibronic::units {

inline constexpr double kSpeedOfLightCmPerFs = 2.99792458e-5;
inline constexpr double kCmToRadPerFs = 2.0 * std::numbers::pi * kSpeedOfLightCmPerFs;
inline constexpr double kBoltzmannCmPerK = 0.695035;
inline constexpr double kFsPerPs = 1000.0;

constexpr double to_rad_per_fs(double wavenumber) { return wavenumber * kCmToRadPerFs; }
constexpr double thermal_energy_cm(double temperature_k) { return kBoltzmannCmPerK * temperature_k; }
constexpr double fs_to_ps(double t_fs) { return t_fs / kFsPerPs; }
constexpr double ps_to_fs(double t_ps) { return t_ps * kFsPerPs; }

}  // namespace vibronic::units
