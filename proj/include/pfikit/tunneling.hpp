#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfikit/species.hpp"

namespace pfikit::tunneling {

// Effective nuclear charge seen by the tunnelling electron,
//   Z(n, z0) = n + c0 + c1 / z0     (z0 in bohr).
struct ZModel {
  double c0 = 1.0;
  double c1 = 4.5;
  std::string note;

  double operator()(int n, double z0_au) const { return n + c0 + c1 / z0_au; }
};

void validate(const ZModel& z);
ZModel zmodel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ZModel& z);
ZModel load_zmodel(const std::filesystem::path& path);

// A^2 nu = I_{n+1} / (6 pi m_q e^{2/3}), atomic units.
double prefactor_a2nu(const SpeciesParams& species, int n);

// Ionization rate constant R(z0) for the step n -> n+1, atomic units
// (multiply by 1/inv_second_in_au for s^-1). The emitter-side barrier term
// I - Z F / I - F z0 is clamped at zero, so R is z0-independent beyond the
// point where it vanishes.
double rate_constant(const SpeciesParams& species, const Environment& env, const ZModel& zmodel,
                     int n, double field_Vnm, double z0_au);

struct PfiStepResult {
  int n = 1;                   // step n -> n+1
  double P_t = 0.0;
  double integral = 0.0;       // int R/u dz0; +inf when the step saturates at the escape point
  double z_c_au = 0.0;         // critical distance from the model surface
  double z_lower_au = 0.0;     // actual lower integration limit
  double z_upper_au = 0.0;
  bool barrier_vanished = false;
  int evaluations = 0;
  double error_estimate = 0.0;
  std::vector<std::string> diagnostics;

  // log(1 - P_t) = -integral, kept separately for accurate ratios.
  double log_survival() const { return -integral; }
};

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_floor = 1e-300;
  unsigned max_depth = 30;
};

// P_t = 1 - exp(-int_{z_c}^{z_max} R(z0) / u(z0) dz0) for the step n -> n+1.
// `crossing_z_au` holds the z_r of the completed steps 1..n-1 (bohr).
PfiStepResult pfi_step_probability(const SpeciesParams& species, const Environment& env,
                                   const ZModel& zmodel, int n, double field_Vnm,
                                   std::span<const double> crossing_z_au = {},
                                   const QuadratureOptions& quad = {});

// Charge-state abundances under the sequential model: the ion leaves as 1+
// and each step n -> n+1 fires with probability P_t(n) given it reached n.
struct ChargeFractions {
  double field_Vnm = 0.0;
  std::vector<double> fractions;      // index 0 <-> charge 1
  std::vector<double> log_fractions;
  std::vector<PfiStepResult> steps;

  int max_charge() const { return static_cast<int>(fractions.size()); }
  // f_high / (f_low + f_high), evaluated in log space.
  double csr(int low = 1, int high = 2) const;
};

int default_max_charge(const SpeciesParams& species);

ChargeFractions charge_fractions(const SpeciesParams& species, const Environment& env,
                                 const ZModel& zmodel, double field_Vnm, int max_charge,
                                 const QuadratureOptions& quad = {});

}  // namespace pfikit::tunneling
