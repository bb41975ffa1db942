#pragma once

// Physical constants and unit conversions used throughout the library.
//
// Two unit systems coexist:
//   * molecular mechanics (anm, molecule): Angstrom, picosecond, kcal/mol, amu
//   * everything else: SI, with Hamiltonian-facing quantities in rad/s.
// All conversions between them go through this header.

#include <numbers>

namespace nvsense::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double boltzmann = 1.380649e-23;          // J/K
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // N/A^2
inline constexpr double avogadro = 6.02214076e23;          // 1/mol

// Gyromagnetic ratios in rad s^-1 T^-1.
inline constexpr double gamma_electron = two_pi * 28.024e9;
inline constexpr double gamma_fluorine19 = two_pi * 40.1e6;

// NV ground-state zero-field splitting (rad/s). Not used by any dressed-frame
// equation; kept for reference and reporting.
inline constexpr double nv_zero_field_splitting = two_pi * 2.87e9;

// Length and time.
inline constexpr double angstrom = 1e-10;  // m
inline constexpr double nanometer = 1e-9;  // m
inline constexpr double picosecond = 1e-12;  // s
inline constexpr double nanosecond = 1e-9;  // s
inline constexpr double microsecond = 1e-6;  // s
inline constexpr double millisecond = 1e-3;  // s

// Molecular-mechanics energy units. 1 amu A^2 ps^-2 = 10 J/mol.
inline constexpr double kcal_per_mol_in_amu_A2_per_ps2 = 418.4;
inline constexpr double boltzmann_kcal_per_mol_K = boltzmann * avogadro / 4184.0;

/// k_B T in amu A^2 ps^-2.
constexpr double thermal_energy_mm(double temperature_kelvin) {
  return boltzmann_kcal_per_mol_K * temperature_kelvin * kcal_per_mol_in_amu_A2_per_ps2;
}

/// Ordinary frequency (Hz) to angular frequency (rad/s).
constexpr double hz_to_angular(double hz) { return two_pi * hz; }
constexpr double angular_to_hz(double rad_per_s) { return rad_per_s / two_pi; }

}  // namespace nvsense::units
