#pragma once

#include <span>

#include "pfikit/species.hpp"

namespace pfikit::physics {

// System potential energy U_n(L) of the charge-n ion at distance L from the
// image plane:
//   U_n(L) = sum_{i<=n} I_i - n phi - n e F L - n^2 C / L
// Stark shift is taken as zero. Returns eV.
double system_potential(const SpeciesParams& species, const Environment& env, int n,
                        double field_Vnm, double L_nm);

struct CrossingGeometry {
  double L_c_nm = 0.0;        // outer crossing of U_n and U_{n+1}, from the image plane
  double z_c_nm = 0.0;        // same point measured from the model surface
  double L_i_nm = 0.0;        // Schottky hump (escape point of the 1+ ion)
  double discriminant_eV2 = 0.0;
  bool barrier_vanished = false;  // no real crossing; L_c and z_c are 0
};

// Critical distance for the charge step n -> n+1. Solves
//   e F L^2 - (I_{n+1} - phi) L + (2n+1) C = 0
// and keeps the larger root.
CrossingGeometry critical_distance(const SpeciesParams& species, const Environment& env, int n,
                                   double field_Vnm);

// L_i = 0.5 sqrt(W / eF), nm.
double hump_position(double field_Vnm);

// Kinetic energy (eV) of an ion that left the hump with charge n_initial and
// has charge n at distance L (nm, from the image plane). `crossing_z_nm`
// lists z_r (model-surface distances, nm) of every completed step
// r -> r+1 for r = n_initial .. n-1.
double kinetic_energy(const SpeciesParams& species, const Environment& env, double field_Vnm,
                      int n, std::span<const double> crossing_z_nm, double L_nm,
                      int n_initial = 1);

// u = sqrt(2k/m), atomic units.
double ion_velocity(const SpeciesParams& species, double kinetic_eV);

// Hartree-unit kernels used inside the tunneling integrand. Distances are
// model-surface z values; lambda is the screening length, all in bohr.
namespace au {

double kinetic_energy(double field, int n, int n_initial, std::span<const double> crossing_z,
                      double lambda, double z);

// Larger root of the n -> n+1 crossing quadratic, measured from the image
// plane; negative discriminant returns 0 and sets *vanished.
double crossing_distance(double ie_next, double phi, double field, int n, bool* vanished,
                         double* discriminant = nullptr);

double hump_position(double field, int n_initial = 1);

}  // namespace au

}  // namespace pfikit::physics
