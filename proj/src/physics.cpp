#include "pfikit/physics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pfikit/error.hpp"
#include "pfikit/units.hpp"

namespace pfikit::physics {

namespace {

void require_positive_field(double field_Vnm) {
  if (!(field_Vnm > 0.0) || !std::isfinite(field_Vnm))
    fail(ErrorKind::Domain, "field must be positive, got " + std::to_string(field_Vnm));
}

void require_step(const SpeciesParams& s, int n) {
  if (n < 1 || n >= s.max_charge())
    fail(ErrorKind::Config, s.name + ": charge step " + std::to_string(n) + "->" +
                                std::to_string(n + 1) + " needs I_" + std::to_string(n + 1));
}

}  // namespace

double system_potential(const SpeciesParams& species, const Environment& env, int n,
                        double field_Vnm, double L_nm) {
  if (n < 1 || n > species.max_charge())
    fail(ErrorKind::Config, species.name + ": charge " + std::to_string(n) + " outside ladder");
  if (!(L_nm > 0.0)) fail(ErrorKind::Domain, "system_potential: L must be positive");
  const auto& k = units::active();
  double sum_ie = 0.0;
  for (int i = 1; i <= n; ++i) sum_ie += species.ie(i);
  // e F L with F in V/nm and L in nm is already in eV.
  return sum_ie - n * env.phi_eV - n * field_Vnm * L_nm - n * n * k.C_image / L_nm;
}

CrossingGeometry critical_distance(const SpeciesParams& species, const Environment& env, int n,
                                   double field_Vnm) {
  require_step(species, n);
  require_positive_field(field_Vnm);
  const auto& k = units::active();
  const double a = species.ie(n + 1) - env.phi_eV;
  CrossingGeometry g;
  g.discriminant_eV2 = a * a - (2 * n + 1) * field_Vnm * k.W_image;
  g.L_i_nm = hump_position(field_Vnm);
  if (g.discriminant_eV2 < 0.0) {
    g.barrier_vanished = true;
    return g;
  }
  g.L_c_nm = (a + std::sqrt(g.discriminant_eV2)) / (2.0 * field_Vnm);
  g.z_c_nm = std::max(0.0, g.L_c_nm - env.lambda_nm);
  return g;
}

double hump_position(double field_Vnm) {
  require_positive_field(field_Vnm);
  return 0.5 * std::sqrt(units::active().W_image / field_Vnm);
}

double kinetic_energy(const SpeciesParams& species, const Environment& env, double field_Vnm,
                      int n, std::span<const double> crossing_z_nm, double L_nm, int n_initial) {
  require_positive_field(field_Vnm);
  if (n < n_initial || n > species.max_charge())
    fail(ErrorKind::Domain, "kinetic_energy: charge " + std::to_string(n) + " invalid");
  if (crossing_z_nm.size() != static_cast<size_t>(n - n_initial))
    fail(ErrorKind::Domain, "kinetic_energy: need one crossing per completed step");
  if (!(L_nm > 0.0)) fail(ErrorKind::Domain, "kinetic_energy: L must be positive");

  const double F = units::field_to_au(field_Vnm);
  const double lambda = units::length_to_au(env.lambda_nm);
  const double L = units::length_to_au(L_nm);
  if (n == n_initial && L < au::hump_position(F, n_initial) * (1.0 - 1e-12))
    fail(ErrorKind::NonphysicalKinematics,
         "kinetic_energy: L = " + std::to_string(L_nm) + " nm lies inside the escape hump");

  std::vector<double> history;
  history.reserve(crossing_z_nm.size());
  for (double z : crossing_z_nm) history.push_back(units::length_to_au(z));

  const double k = au::kinetic_energy(F, n, n_initial, history, lambda, L - lambda);
  if (k < 0.0)
    fail(ErrorKind::NonphysicalKinematics,
         "kinetic_energy: ion cannot reach L = " + std::to_string(L_nm) + " nm (k < 0)");
  return units::from_hartree(k);
}

double ion_velocity(const SpeciesParams& species, double kinetic_eV) {
  if (!(kinetic_eV >= 0.0)) fail(ErrorKind::Domain, "ion_velocity: kinetic energy must be >= 0");
  return std::sqrt(2.0 * units::to_hartree(kinetic_eV) / units::mass_to_au(species.mass_amu));
}

namespace au {

double kinetic_energy(double field, int n, int n_initial, std::span<const double> crossing_z,
                      double lambda, double z) {
  const double L = z + lambda;
  double k = n * field * L + n * n / (4.0 * L) -
             std::sqrt(static_cast<double>(n_initial * n_initial * n_initial) * field);
  int r = n_initial;
  for (double zr : crossing_z) {
    const double Lr = zr + lambda;
    k -= field * Lr + (2 * r + 1) / (4.0 * Lr);
    ++r;
  }
  // The hump itself evaluates to a rounding-level negative number.
  if (k < 0.0 && k > -1e-14 * (n * field * L + n * n / (4.0 * L))) k = 0.0;
  return k;
}

double crossing_distance(double ie_next, double phi, double field, int n, bool* vanished,
                         double* discriminant) {
  const double a = ie_next - phi;
  const double d = a * a - (2 * n + 1) * field;
  if (discriminant) *discriminant = d;
  *vanished = d < 0.0;
  if (*vanished) return 0.0;
  return (a + std::sqrt(d)) / (2.0 * field);
}

double hump_position(double field, int n_initial) {
  return 0.5 * std::sqrt(n_initial / field);
}

}  // namespace au

}  // namespace pfikit::physics
