#include "pfikit/tunneling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "pfikit/assets.hpp"
#include "pfikit/error.hpp"
#include "pfikit/physics.hpp"
#include "pfikit/units.hpp"

namespace pfikit::tunneling {

void validate(const ZModel& z) {
  if (!std::isfinite(z.c0) || !std::isfinite(z.c1))
    fail(ErrorKind::Config, "Z-model coefficients must be finite");
  if (z.c1 < 0.0) fail(ErrorKind::Config, "Z-model c1 must be >= 0");
}

ZModel zmodel_from_json(const nlohmann::json& j) {
  ZModel z;
  try {
    z.c0 = j.at("c0").get<double>();
    z.c1 = j.at("c1").get<double>();
    z.note = j.value("note", std::string{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("Z-model record: ") + e.what());
  }
  validate(z);
  return z;
}

nlohmann::json to_json(const ZModel& z) {
  return {{"c0", z.c0}, {"c1", z.c1}, {"note", z.note}};
}

ZModel load_zmodel(const std::filesystem::path& path) { return zmodel_from_json(read_json(path)); }

double prefactor_a2nu(const SpeciesParams& species, int n) {
  const double I = units::to_hartree(species.ie(n + 1));
  return I / (6.0 * std::numbers::pi * species.m_q * std::exp(2.0 / 3.0));
}

namespace {

// Everything needed to evaluate R(z0)/u(z0) for one (species, step, field),
// in Hartree units.
struct StepKernel {
  int n = 1;
  double I = 0.0;       // I_{n+1}
  double F = 0.0;
  double lambda = 0.0;
  double mass = 0.0;
  double log_prefactor = 0.0;  // log(6 pi A^2 nu F / 2^{5/2})
  double I32 = 0.0;
  ZModel zmodel;
  std::vector<double> history;

  static constexpr double k2_52 = 5.656854249492380195;  // 2^{5/2}

  StepKernel(const SpeciesParams& s, const Environment& env, const ZModel& z, int step, double field_Vnm)
      : n(step), zmodel(z) {
    I = units::to_hartree(s.ie(n + 1));
    F = units::field_to_au(field_Vnm);
    lambda = units::length_to_au(env.lambda_nm);
    mass = units::mass_to_au(s.mass_amu);
    const double a2nu = prefactor_a2nu(s, n);
    log_prefactor = std::log(6.0 * std::numbers::pi * a2nu * F / k2_52);
    I32 = I * std::sqrt(I);
  }

  // Emitter-side barrier term, clamped at zero.
  double barrier(double z, double Z) const { return std::max(0.0, I - Z * F / I - F * z); }

  double log_rate(double z) const {
    const double Z = zmodel(n, z);
    const double T = barrier(z, Z);
    const double T32 = T * std::sqrt(T);
    const double expo = Z * std::sqrt(2.0 / I);
    return log_prefactor - std::log(I32 - T32) + expo * std::log(16.0 * I * I / (Z * F)) -
           k2_52 * I32 / (3.0 * F) + expo / 3.0 + k2_52 * T32 / (3.0 * F);
  }

  double kinetic(double z) const {
    return physics::au::kinetic_energy(F, n, 1, history, lambda, z);
  }

  double integrand(double z) const {
    const double k = kinetic(z);
    if (!(k > 0.0)) return std::numeric_limits<double>::infinity();
    return std::exp(log_rate(z)) / std::sqrt(2.0 * k / mass);
  }

  // Zeros of I - Z(z) F / I - F z, i.e. F z^2 - (I - (n + c0) F / I) z + c1 F / I = 0;
  // the integrand has a kink there.
  std::vector<double> clamp_points() const {
    const double b = I - (n + zmodel.c0) * F / I;
    const double c = zmodel.c1 * F / I;
    const double d = b * b - 4.0 * F * c;
    if (d < 0.0) return {};
    const double s = std::sqrt(d);
    return {(b - s) / (2.0 * F), (b + s) / (2.0 * F)};
  }
};

void require_field(double field_Vnm) {
  if (!(field_Vnm > 0.0) || !std::isfinite(field_Vnm))
    fail(ErrorKind::Domain, "field must be positive, got " + std::to_string(field_Vnm));
}

constexpr double kFloorAu = 0.05;

}  // namespace

double rate_constant(const SpeciesParams& species, const Environment& env, const ZModel& zmodel,
                     int n, double field_Vnm, double z0_au) {
  require_field(field_Vnm);
  if (!(z0_au > 0.0)) fail(ErrorKind::Domain, "rate_constant: z0 must be positive");
  if (n < 1 || n >= species.max_charge())
    fail(ErrorKind::Config, species.name + ": no I_" + std::to_string(n + 1) + " for step " +
                                std::to_string(n));
  StepKernel kernel(species, env, zmodel, n, field_Vnm);
  return std::exp(kernel.log_rate(z0_au));
}

PfiStepResult pfi_step_probability(const SpeciesParams& species, const Environment& env,
                                   const ZModel& zmodel, int n, double field_Vnm,
                                   std::span<const double> crossing_z_au,
                                   const QuadratureOptions& quad) {
  require_field(field_Vnm);
  if (n < 1 || n >= species.max_charge())
    fail(ErrorKind::Config, species.name + ": no I_" + std::to_string(n + 1) + " for step " +
                                std::to_string(n));
  if (crossing_z_au.size() != static_cast<size_t>(n - 1))
    fail(ErrorKind::Domain, "pfi_step_probability: need the crossing of every earlier step");

  StepKernel kernel(species, env, zmodel, n, field_Vnm);
  kernel.history.assign(crossing_z_au.begin(), crossing_z_au.end());

  PfiStepResult res;
  res.n = n;
  res.z_upper_au = env.z_max_au;

  const double phi = units::to_hartree(env.phi_eV);
  bool vanished = false;
  const double L_c = physics::au::crossing_distance(kernel.I, phi, kernel.F, n, &vanished);
  res.barrier_vanished = vanished;
  res.z_c_au = vanished ? 0.0 : std::max(0.0, L_c - kernel.lambda);

  double lo = std::max(res.z_c_au, kFloorAu);
  if (n == 1) {
    const double escape = physics::au::hump_position(kernel.F) - kernel.lambda;
    if (lo <= escape) {
      // The ion starts at rest on the hump: 1/u is not integrable there.
      res.z_lower_au = std::max(escape, kFloorAu);
      res.integral = std::numeric_limits<double>::infinity();
      res.P_t = 1.0;
      res.diagnostics.push_back("divergent_at_escape_point");
      return res;
    }
  } else {
    lo = std::max(lo, kernel.history.back());
  }
  if (vanished) res.diagnostics.push_back("barrier_vanished");

  const double hi = env.z_max_au;
  if (!(hi > lo)) {
    std::ostringstream msg;
    msg << species.name << " step " << n << " at " << field_Vnm << " V/nm: z_max " << hi
        << " a.u. does not exceed the lower limit " << lo << " a.u.";
    fail(ErrorKind::Domain, msg.str());
  }

  // k(z) is smallest where n F = n^2 / (4 L^2). An ion of charge n >= 2
  // created close to the surface can be pulled back below zero kinetic
  // energy; integration then starts where k turns positive again.
  const double z_min_k = 0.5 * std::sqrt(n / kernel.F) - kernel.lambda;
  const double z_check = std::max(lo, z_min_k);
  if (z_check < hi && !(kernel.kinetic(z_check) > 0.0)) {
    if (!(kernel.kinetic(hi) > 0.0))
      fail(ErrorKind::NonphysicalKinematics,
           species.name + ": ion never gains kinetic energy on [z_c, z_max]");
    auto k = [&](double z) { return kernel.kinetic(z); };
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(b)); };
    boost::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(k, z_check, hi, tol, iters);
    (void)a;
    res.diagnostics.push_back("lower_limit_advanced_to_positive_k");
    lo = b;
  }
  res.z_lower_au = lo;

  std::vector<double> knots{lo};
  for (double p : kernel.clamp_points())
    if (p > lo && p < hi) knots.push_back(p);
  if (z_min_k > lo && z_min_k < hi) knots.push_back(z_min_k);
  std::sort(knots.begin(), knots.end());
  knots.push_back(hi);

  int evaluations = 0;
  auto f = [&](double z) {
    ++evaluations;
    return kernel.integrand(z);
  };

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double total = 0.0, total_err = 0.0, total_l1 = 0.0;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    if (i == 0) {
      // z = lo + t^2 absorbs the 1/sqrt(k) endpoint singularity when k(lo) = 0.
      const double a = knots[0];
      auto g = [&](double t) { return 2.0 * t * f(a + t * t); };
      total += GK::integrate(g, 0.0, std::sqrt(knots[1] - a), quad.max_depth, quad.rel_tol, &err, &l1);
    } else {
      total += GK::integrate(f, knots[i], knots[i + 1], quad.max_depth, quad.rel_tol, &err, &l1);
    }
    total_err += err;
    total_l1 += l1;
  }
  res.integral = total;
  res.error_estimate = total_err;
  res.evaluations = evaluations;

  if (!std::isfinite(total) || total < 0.0 ||
      total_err > std::max(100.0 * quad.rel_tol * total_l1, quad.abs_floor)) {
    std::ostringstream msg;
    msg << species.name << " step " << n << "->" << n + 1 << " at " << field_Vnm
        << " V/nm: quadrature did not converge (integral " << total << ", error " << total_err
        << ", " << evaluations << " evaluations)";
    fail(ErrorKind::Numerical, msg.str());
  }
  res.P_t = -std::expm1(-total);
  return res;
}

double ChargeFractions::csr(int low, int high) const {
  if (low < 1 || high > max_charge() || low >= high)
    fail(ErrorKind::Domain, "csr: charge pair outside computed states");
  const double a = log_fractions[static_cast<size_t>(low - 1)];
  const double b = log_fractions[static_cast<size_t>(high - 1)];
  if (a == -std::numeric_limits<double>::infinity() && b == a)
    fail(ErrorKind::UndefinedCsr, "csr: both charge states are empty");
  // b / (a + b) in log space.
  if (a == -std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 / (1.0 + std::exp(a - b));
}

int default_max_charge(const SpeciesParams& species) { return std::min(3, species.max_charge()); }

ChargeFractions charge_fractions(const SpeciesParams& species, const Environment& env,
                                 const ZModel& zmodel, double field_Vnm, int max_charge,
                                 const QuadratureOptions& quad) {
  if (max_charge < 2 || max_charge > species.max_charge())
    fail(ErrorKind::Config, species.name + ": max_charge " + std::to_string(max_charge) +
                                " outside [2, " + std::to_string(species.max_charge()) + "]");
  ChargeFractions out;
  out.field_Vnm = field_Vnm;
  out.log_fractions.assign(static_cast<size_t>(max_charge), 0.0);

  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> history;
  double log_reached = 0.0;  // log P(ion reaches charge n)
  for (int n = 1; n < max_charge; ++n) {
    if (log_reached == neg_inf) {
      out.log_fractions[static_cast<size_t>(n - 1)] = neg_inf;
      continue;
    }
    auto step = pfi_step_probability(species, env, zmodel, n, field_Vnm, history, quad);
    out.log_fractions[static_cast<size_t>(n - 1)] = log_reached + step.log_survival();
    log_reached += step.P_t > 0.0 ? std::log(step.P_t) : neg_inf;
    history.push_back(step.z_lower_au);
    out.steps.push_back(std::move(step));
  }
  out.log_fractions.back() = log_reached;

  out.fractions.reserve(out.log_fractions.size());
  for (double lf : out.log_fractions) out.fractions.push_back(std::exp(lf));
  return out;
}

}  // namespace pfikit::tunneling
