#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pfikit/species.hpp"
#include "pfikit/tunneling.hpp"

namespace pfikit::curves {

struct FieldGrid {
  double lo = 5.0;
  double hi = 45.0;
  double step = 0.1;

  // lo, lo+step, ... up to hi (inclusive within step/1000); computed as
  // lo + i*step so the points do not drift.
  std::vector<double> points() const;
};

// "lo:hi:step"; throws Config when malformed or outside (0, 60] V/nm.
FieldGrid parse_grid(const std::string& text);
void validate(const FieldGrid& grid);

struct CurveOptions {
  int max_charge = 0;                  // 0 -> min(3, ladder length)
  std::pair<int, int> csr_pair{1, 2};  // CSR = f_high / (f_low + f_high)
  tunneling::QuadratureOptions quad{};
};

struct KinghamCurve {
  std::string species;
  std::vector<double> field_grid;                 // V/nm, strictly ascending
  std::vector<std::vector<double>> fractions;     // per grid point, index 0 <-> 1+
  std::vector<double> csr;
  std::pair<int, int> csr_pair{1, 2};

  int max_charge() const { return fractions.empty() ? 0 : static_cast<int>(fractions.front().size()); }
};

// Grid points are evaluated in parallel (OpenMP). Each point is computed with
// the same code path as the serial version, so the output is bit-identical.
KinghamCurve generate_curve(const SpeciesParams& species, const Environment& env,
                            const tunneling::ZModel& zmodel, const std::vector<double>& fields,
                            const CurveOptions& opt = {});

// Serial reference kept for tests and the benchmark.
KinghamCurve generate_curve_serial(const SpeciesParams& species, const Environment& env,
                                   const tunneling::ZModel& zmodel,
                                   const std::vector<double>& fields, const CurveOptions& opt = {});

// Direct model evaluation of the CSR at one field.
double csr_at(const SpeciesParams& species, const Environment& env, const tunneling::ZModel& zmodel,
              double field_Vnm, const CurveOptions& opt = {});

struct SearchRange {
  double lo = 5.0;
  double hi = 45.0;
};

struct CrossoverResult {
  double f50 = 0.0;
  std::pair<double, double> bracket;
  double achieved_csr = 0.0;
  int evaluations = 0;
};

// Field at which the CSR crosses `target` (0.5 by default).
CrossoverResult find_f50(const SpeciesParams& species, const Environment& env,
                         const tunneling::ZModel& zmodel, SearchRange range = {},
                         const CurveOptions& opt = {}, double target = 0.5);

struct FieldEstimate {
  double field = 0.0;
  double low = 0.0;    // image of csr - sigma
  double high = 0.0;   // image of csr + sigma
  bool clamped = false;  // an interval end hit the curve's CSR range
};

// Inverts the curve's CSR with a shape-preserving (PCHIP) interpolant.
FieldEstimate csr_to_field(const KinghamCurve& curve, double csr,
                           std::optional<double> sigma = std::nullopt);

struct ZFitResult {
  tunneling::ZModel zmodel;
  double f50 = 0.0;
  double target = 0.0;
  double residual = 0.0;  // f50 - target
  std::pair<double, double> achievable;  // F50 range over the c0 interval
};

ZFitResult fit_z_offset(const SpeciesParams& species, const Environment& env, double target_f50,
                        double c1, std::pair<double, double> c0_range = {0.01, 2.0},
                        const CurveOptions& opt = {});

struct IeFitResult {
  SpeciesParams species;  // with the adjusted ladder
  int index = 2;          // 1-based IE index that was varied
  double nominal_eV = 0.0;
  double fitted_eV = 0.0;
  double shift_eV = 0.0;
  double relative_shift = 0.0;
  double f50 = 0.0;
  double target = 0.0;
  double residual = 0.0;
  std::pair<double, double> achievable;
};

IeFitResult fit_ie(const SpeciesParams& species, const Environment& env,
                   const tunneling::ZModel& zmodel, double target_f50, int index,
                   const CurveOptions& opt = {});

enum class ScanParameter { PrincipalQuantumNumber, WorkFunction };

ScanParameter parse_scan_parameter(const std::string& name);
const char* to_string(ScanParameter p);

std::vector<std::pair<double, double>> sensitivity_scan(const SpeciesParams& species,
                                                        const Environment& env,
                                                        const tunneling::ZModel& zmodel,
                                                        ScanParameter parameter,
                                                        const std::vector<double>& values,
                                                        const CurveOptions& opt = {});

}  // namespace pfikit::curves
