#include "pfikit/curves.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "pfikit/error.hpp"

namespace pfikit::curves {

std::vector<double> FieldGrid::points() const {
  validate(*this);
  const auto count = static_cast<size_t>(std::floor((hi - lo) / step + 1e-3)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

void validate(const FieldGrid& g) {
  if (!(g.lo > 0.0) || !(g.hi <= 60.0) || !(g.hi >= g.lo) || !(g.step > 0.0))
    fail(ErrorKind::Config, "field grid must satisfy 0 < lo <= hi <= 60 V/nm and step > 0");
}

FieldGrid parse_grid(const std::string& text) {
  FieldGrid g;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.step) || c1 != ':' || c2 != ':' || !in.eof())
    fail(ErrorKind::Config, "grid must look like lo:hi:step, got '" + text + "'");
  validate(g);
  return g;
}

namespace {

int resolve_max_charge(const SpeciesParams& s, const CurveOptions& opt) {
  return opt.max_charge > 0 ? opt.max_charge : tunneling::default_max_charge(s);
}

void check_pair(const std::pair<int, int>& pair, int max_charge) {
  if (pair.first < 1 || pair.second > max_charge || pair.first >= pair.second)
    fail(ErrorKind::Config, "CSR charge pair outside the computed charge states");
}

void check_fields(const std::vector<double>& fields) {
  if (fields.empty()) fail(ErrorKind::Config, "empty field grid");
  for (size_t i = 0; i < fields.size(); ++i) {
    if (!(fields[i] > 0.0) || fields[i] > 60.0)
      fail(ErrorKind::Config, "field grid must lie within (0, 60] V/nm");
    if (i > 0 && !(fields[i] > fields[i - 1]))
      fail(ErrorKind::Config, "field grid must be strictly ascending");
  }
}

KinghamCurve empty_curve(const SpeciesParams& s, const std::vector<double>& fields,
                         const CurveOptions& opt) {
  KinghamCurve c;
  c.species = s.name;
  c.field_grid = fields;
  c.fractions.resize(fields.size());
  c.csr.resize(fields.size());
  c.csr_pair = opt.csr_pair;
  return c;
}

// Evaluates one grid point into the curve; shared by both drivers.
void evaluate_point(const SpeciesParams& s, const Environment& env, const tunneling::ZModel& z,
                    const CurveOptions& opt, int max_charge, KinghamCurve& curve, size_t i) {
  auto cf = tunneling::charge_fractions(s, env, z, curve.field_grid[i], max_charge, opt.quad);
  curve.csr[i] = cf.csr(opt.csr_pair.first, opt.csr_pair.second);
  curve.fractions[i] = std::move(cf.fractions);
}

[[noreturn]] void rethrow_at(const std::exception_ptr& ep, const std::string& species, double field) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << e.what() << " [species " << species << ", field " << field << " V/nm]";
    throw Error(e.kind(), msg.str());
  }
}

}  // namespace

KinghamCurve generate_curve_serial(const SpeciesParams& species, const Environment& env,
                                   const tunneling::ZModel& zmodel,
                                   const std::vector<double>& fields, const CurveOptions& opt) {
  check_fields(fields);
  const int max_charge = resolve_max_charge(species, opt);
  check_pair(opt.csr_pair, max_charge);
  auto curve = empty_curve(species, fields, opt);
  for (size_t i = 0; i < fields.size(); ++i) {
    try {
      evaluate_point(species, env, zmodel, opt, max_charge, curve, i);
    } catch (const Error&) {
      rethrow_at(std::current_exception(), species.name, fields[i]);
    }
  }
  return curve;
}

KinghamCurve generate_curve(const SpeciesParams& species, const Environment& env,
                            const tunneling::ZModel& zmodel, const std::vector<double>& fields,
                            const CurveOptions& opt) {
  check_fields(fields);
  const int max_charge = resolve_max_charge(species, opt);
  check_pair(opt.csr_pair, max_charge);
  auto curve = empty_curve(species, fields, opt);

  const auto n = static_cast<long>(fields.size());
  std::vector<std::exception_ptr> errors(fields.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      evaluate_point(species, env, zmodel, opt, max_charge, curve, static_cast<size_t>(i));
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  // Report the lowest failing field regardless of thread timing.
  for (size_t i = 0; i < errors.size(); ++i)
    if (errors[i]) rethrow_at(errors[i], species.name, fields[i]);
  return curve;
}

double csr_at(const SpeciesParams& species, const Environment& env, const tunneling::ZModel& zmodel,
              double field_Vnm, const CurveOptions& opt) {
  const int max_charge = resolve_max_charge(species, opt);
  check_pair(opt.csr_pair, max_charge);
  auto cf = tunneling::charge_fractions(species, env, zmodel, field_Vnm, max_charge, opt.quad);
  return cf.csr(opt.csr_pair.first, opt.csr_pair.second);
}

CrossoverResult find_f50(const SpeciesParams& species, const Environment& env,
                         const tunneling::ZModel& zmodel, SearchRange range,
                         const CurveOptions& opt, double target) {
  if (!(range.lo > 0.0) || !(range.hi > range.lo))
    fail(ErrorKind::Config, "find_f50: search range must satisfy 0 < lo < hi");
  CrossoverResult res;
  auto g = [&](double F) {
    ++res.evaluations;
    return csr_at(species, env, zmodel, F, opt) - target;
  };
  const double g_lo = g(range.lo);
  const double g_hi = g(range.hi);
  if (!(g_lo < 0.0 && g_hi > 0.0)) {
    std::ostringstream msg;
    msg << species.name << ": CSR does not cross " << target << " in [" << range.lo << ", "
        << range.hi << "] V/nm (CSR " << g_lo + target << " .. " << g_hi + target << ")";
    fail(ErrorKind::Bracket, msg.str());
  }

  auto width_tol = [](double a, double b) { return std::abs(b - a) < 1e-8; };
  boost::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(g, range.lo, range.hi, g_lo, g_hi, width_tol, iters);
  res.bracket = {a, b};
  res.f50 = 0.5 * (a + b);
  res.achieved_csr = g(res.f50) + target;
  if (std::abs(res.achieved_csr - target) >= 1e-6) {
    std::ostringstream msg;
    msg << species.name << ": CSR jumps across " << target << " near " << res.f50
        << " V/nm (reached " << res.achieved_csr << ")";
    fail(ErrorKind::Numerical, msg.str());
  }
  return res;
}

FieldEstimate csr_to_field(const KinghamCurve& curve, double csr, std::optional<double> sigma) {
  const auto& x = curve.field_grid;
  const auto& y = curve.csr;
  if (x.size() < 2) fail(ErrorKind::Extrapolation, "csr_to_field: curve needs at least two points");
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  if (!(csr > ymin && csr < ymax)) {
    std::ostringstream msg;
    msg << "csr_to_field: CSR " << csr << " outside the curve range (" << ymin << ", " << ymax << ")";
    fail(ErrorKind::Extrapolation, msg.str());
  }

  // Cells whose end values straddle the query; contiguous cells form one branch.
  auto straddles = [&](size_t i, double c) {
    return (y[i] - c) * (y[i + 1] - c) <= 0.0 && y[i] != y[i + 1];
  };
  auto find_cells = [&](double c) {
    std::vector<size_t> cells;
    for (size_t i = 0; i + 1 < x.size(); ++i)
      if (straddles(i, c)) cells.push_back(i);
    return cells;
  };

  // PCHIP wants a strictly increasing abscissa, which the grid is.
  std::vector<double> xs = x, ys = y;
  boost::math::interpolators::pchip<std::vector<double>> interp(std::move(xs), std::move(ys));

  auto invert = [&](double c) {
    auto cells = find_cells(c);
    // Adjacent cells only belong to one branch when the slope keeps its sign
    // (they then meet at a node equal to the query).
    auto new_branch = [&](size_t k) {
      if (k == 0 || cells[k] != cells[k - 1] + 1) return true;
      const size_t i = cells[k], j = cells[k - 1];
      return (y[i + 1] > y[i]) != (y[j + 1] > y[j]);
    };
    size_t branches = 0;
    for (size_t k = 0; k < cells.size(); ++k)
      if (new_branch(k)) ++branches;
    if (branches > 1) {
      std::ostringstream msg;
      msg << "csr_to_field: CSR " << c << " is reached on " << branches
          << " branches; candidate fields:";
      for (size_t k = 0; k < cells.size(); ++k)
        if (new_branch(k)) msg << " [" << x[cells[k]] << ", " << x[cells[k] + 1] << "]";
      fail(ErrorKind::Ambiguity, msg.str());
    }
    const size_t i = cells.front();
    if (y[i] == c) return x[i];
    if (y[i + 1] == c) return x[i + 1];
    auto h = [&](double F) { return interp(F) - c; };
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-12; };
    boost::uintmax_t iters = 100;
    auto [a, b] = boost::math::tools::toms748_solve(h, x[i], x[i + 1], y[i] - c, y[i + 1] - c, tol, iters);
    return 0.5 * (a + b);
  };

  FieldEstimate est;
  est.field = invert(csr);
  est.low = est.high = est.field;
  if (sigma) {
    if (!(*sigma >= 0.0)) fail(ErrorKind::Domain, "csr_to_field: uncertainty must be >= 0");
    if (*sigma > 0.0) {
      auto bound = [&](double c, bool upper) {
        if (c > ymin && c < ymax) return invert(c);
        est.clamped = true;
        // Edge of the monotone branch: last grid point at the extreme value.
        const double edge = upper ? ymax : ymin;
        if (upper) {
          for (size_t i = 0; i < y.size(); ++i)
            if (y[i] == edge) return x[i];
        } else {
          for (size_t i = y.size(); i-- > 0;)
            if (y[i] == edge) return x[i];
        }
        return upper ? x.back() : x.front();
      };
      est.low = bound(csr - *sigma, false);
      est.high = bound(csr + *sigma, true);
    }
  }
  return est;
}

namespace {

// Evaluates F50 at an end of the parameter interval. Where no clean
// crossover exists (no bracket, or the CSR jumps) the end is pulled halfway
// toward `inner` until one does.
template <class F50Fn>
double usable_end(F50Fn& f50_of, double& p, double inner) {
  for (int i = 0; i < 40; ++i) {
    try {
      return f50_of(p);
    } catch (const Error&) {
      p = 0.5 * (p + inner);
    }
  }
  return f50_of(p);
}

template <class F50Fn>
std::pair<double, double> solve_fit(F50Fn f50_of, double lo, double hi, double inner, double target,
                                    double& f50_lo, double& f50_hi, const std::string& what) {
  try {
    f50_lo = usable_end(f50_of, lo, inner);
    f50_hi = usable_end(f50_of, hi, inner);
  } catch (const Error& e) {
    fail(ErrorKind::FitRange, what + ": F50 undefined across the parameter interval: " + e.what());
  }
  const double g_lo = f50_lo - target, g_hi = f50_hi - target;
  if (g_lo * g_hi > 0.0) {
    std::ostringstream msg;
    msg << what << ": target F50 " << target << " V/nm unreachable; achievable interval ["
        << std::min(f50_lo, f50_hi) << ", " << std::max(f50_lo, f50_hi) << "] V/nm for parameter in ["
        << lo << ", " << hi << "]";
    fail(ErrorKind::FitRange, msg.str());
  }
  if (g_lo == 0.0) return {lo, lo};
  if (g_hi == 0.0) return {hi, hi};
  auto g = [&](double p) {
    try {
      return f50_of(p) - target;
    } catch (const Error& e) {
      fail(ErrorKind::FitRange, what + ": " + e.what());
    }
  };
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-7 * std::max(1.0, std::abs(a)); };
  boost::uintmax_t iters = 100;
  return boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, iters);
}

}  // namespace

ZFitResult fit_z_offset(const SpeciesParams& species, const Environment& env, double target_f50,
                        double c1, std::pair<double, double> c0_range, const CurveOptions& opt) {
  if (!(c1 >= 0.0)) fail(ErrorKind::Config, "fit_z_offset: c1 must be >= 0");
  if (!(c0_range.second > c0_range.first))
    fail(ErrorKind::Config, "fit_z_offset: empty c0 interval");
  auto f50_of = [&](double c0) { return find_f50(species, env, {c0, c1, {}}, {}, opt).f50; };
  ZFitResult res;
  res.target = target_f50;
  double f_lo = 0.0, f_hi = 0.0;
  auto [a, b] = solve_fit(f50_of, c0_range.first, c0_range.second,
                          std::clamp(1.0, c0_range.first, c0_range.second), target_f50, f_lo, f_hi,
                          species.name + " Z-offset fit");
  res.achievable = {std::min(f_lo, f_hi), std::max(f_lo, f_hi)};
  res.zmodel = {0.5 * (a + b), c1, "c0 fitted to F50 = " + std::to_string(target_f50) + " V/nm"};
  res.f50 = find_f50(species, env, res.zmodel, {}, opt).f50;
  res.residual = res.f50 - target_f50;
  return res;
}

IeFitResult fit_ie(const SpeciesParams& species, const Environment& env,
                   const tunneling::ZModel& zmodel, double target_f50, int index,
                   const CurveOptions& opt) {
  if (index < 1 || index > species.max_charge())
    fail(ErrorKind::Config, "fit_ie: IE index outside the ladder");
  const double nominal = species.ie(index);
  // +-30 % of nominal, kept strictly inside the neighbouring rungs.
  double lo = 0.7 * nominal, hi = 1.3 * nominal;
  constexpr double margin = 1e-3;
  if (index > 1) lo = std::max(lo, species.ie(index - 1) + margin);
  if (index < species.max_charge()) hi = std::min(hi, species.ie(index + 1) - margin);

  auto with_ie = [&](double ie) {
    SpeciesParams s = species;
    s.ie_ladder_eV[static_cast<size_t>(index - 1)] = ie;
    return s;
  };
  auto f50_of = [&](double ie) { return find_f50(with_ie(ie), env, zmodel, {}, opt).f50; };
  IeFitResult res;
  res.index = index;
  res.target = target_f50;
  res.nominal_eV = nominal;
  double f_lo = 0.0, f_hi = 0.0;
  auto [a, b] = solve_fit(f50_of, lo, hi, nominal, target_f50, f_lo, f_hi, species.name + " IE fit");
  res.achievable = {std::min(f_lo, f_hi), std::max(f_lo, f_hi)};
  res.fitted_eV = 0.5 * (a + b);
  res.species = with_ie(res.fitted_eV);
  res.shift_eV = res.fitted_eV - nominal;
  res.relative_shift = res.shift_eV / nominal;
  res.f50 = find_f50(res.species, env, zmodel, {}, opt).f50;
  res.residual = res.f50 - target_f50;
  return res;
}

ScanParameter parse_scan_parameter(const std::string& name) {
  if (name == "mq" || name == "m_q") return ScanParameter::PrincipalQuantumNumber;
  if (name == "phi") return ScanParameter::WorkFunction;
  fail(ErrorKind::Config, "scan parameter must be 'mq' or 'phi', got '" + name + "'");
}

const char* to_string(ScanParameter p) {
  return p == ScanParameter::PrincipalQuantumNumber ? "m_q" : "phi";
}

std::vector<std::pair<double, double>> sensitivity_scan(const SpeciesParams& species,
                                                        const Environment& env,
                                                        const tunneling::ZModel& zmodel,
                                                        ScanParameter parameter,
                                                        const std::vector<double>& values,
                                                        const CurveOptions& opt) {
  std::vector<std::pair<double, double>> out;
  out.reserve(values.size());
  for (double v : values) {
    SpeciesParams s = species;
    Environment e = env;
    if (parameter == ScanParameter::PrincipalQuantumNumber) {
      if (!(v >= 1.0) || v != std::floor(v))
        fail(ErrorKind::Config, "m_q scan values must be integers >= 1");
      s.m_q = static_cast<int>(v);
    } else {
      if (!(v > 0.0)) fail(ErrorKind::Config, "work function scan values must be > 0");
      e.phi_eV = v;
    }
    out.emplace_back(v, find_f50(s, e, zmodel, {}, opt).f50);
  }
  return out;
}

}  // namespace pfikit::curves
