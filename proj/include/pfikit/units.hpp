#pragma once

// Physical constants and the SI-flavoured <-> Hartree atomic unit
// conversions used by the physics modules. Internally everything is in
// Hartree units (e = hbar = m_e = 4 pi eps0 = 1); eV, nm, V/nm and s^-1
// only appear at API boundaries.

#include <filesystem>

namespace pfikit::units {

struct PhysConstants {
  double C_image;           // e^2 / (16 pi eps0), eV nm
  double W_image;           // e^2 / (4 pi eps0) = 4 C, eV nm
  double c_s;               // (W e)^1/2, eV (V/nm)^-1/2
  double hartree_in_eV;
  double bohr_in_nm;
  double field_au_in_Vnm;
  double inv_second_in_au;  // 1 s^-1 expressed in atomic rate units
  double amu_in_me;         // unified atomic mass unit in electron masses

  // CODATA-2018 values; C, W and c_s are derived from Hartree * Bohr.
  static PhysConstants defaults();
};

// Reads a constants.json asset. Missing keys fall back to defaults().
PhysConstants load_constants(const std::filesystem::path& path);

// Process-wide constants. Initialised once, on first use, from
// $PFIKIT_ASSETS/constants.json (or the built-in asset dir) when present.
const PhysConstants& active();

double to_hartree(double energy_eV);
double from_hartree(double energy_Ha);

double field_to_au(double field_Vnm);
double field_from_au(double field_au);

double length_to_au(double length_nm);
double length_from_au(double length_au);

double rate_si_to_au(double rate_per_s);
double rate_au_to_si(double rate_au);

double mass_to_au(double mass_amu);

}  // namespace pfikit::units
