#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfikit/curves.hpp"
#include "pfikit/spectrum.hpp"

namespace pfikit::pipeline {

struct FieldInterval {
  double value = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool clamped = false;
  std::string source;
};

// Reference CSR (with its 2 sigma) inverted on the reference species' curve.
FieldInterval estimate_field(const spectrum::CsrEstimate& reference,
                             const curves::KinghamCurve& curve);

// F = F0 V / V0.
double kellogg_field(double F0_Vnm, double V, double V0);

// Charge-state fractions of one species at the working field, index 0 <-> 1+.
// Charges beyond the list are predicted absent.
struct PredictedFractions {
  std::string species;
  std::vector<double> fractions;
  std::string source;

  double fraction(int charge) const;
  double csr(int low = 1, int high = 2) const;
};

// Two-state prediction {1 - r, r} from a 2+/(1+ + 2+) ratio.
PredictedFractions fractions_from_csr(const std::string& species, double r);

struct Flag {
  std::string code;
  std::string detail;
  nlohmann::json data;
};

// A target peak shared by a visible contributor and a hidden one. The hidden
// count is inferred from an overlap-free anchor peak of the same species at
// another charge: hidden = anchor * f(hidden charge) / f(anchor charge).
struct OverlapCase {
  std::string name;
  double target_mz = 0.0;
  double target_counts = 0.0;
  spectrum::ColumnKey visible;
  spectrum::ColumnKey hidden;
  int anchor_charge = 1;
  double anchor_counts = 0.0;
};

struct OverlapResolution {
  OverlapCase input;
  double ratio = 0.0;            // f(hidden) / f(anchor); +inf when saturated
  double predicted_hidden = 0.0; // before clamping
  double hidden = 0.0;
  double remainder = 0.0;        // assigned to the visible contributor
  double deficit = 0.0;          // max(0, predicted_hidden - target)
  std::vector<Flag> flags;       // infeasible_overlap, saturated_fraction
};

OverlapResolution resolve_overlap(const OverlapCase& c, const PredictedFractions& hidden_species);

struct AuditThresholds {
  double unexpected_fraction = 1e-4;  // observed charge state predicted below this
  double expected_fraction = 0.01;    // predicted at least this but never ranged
  double csr_tolerance = 0.05;        // |observed - predicted| CSR beyond max(this, 2 sigma)
  double composition_tolerance_pct = 0.0;
};

struct CompositionSpec {
  std::string element;
  std::optional<double> nominal_at_pct;
  double other_atoms = 0.0;  // atoms of other elements not listed in the peak file
};

struct Composition {
  double element_atoms = 0.0;
  double total_atoms = 0.0;
  double at_pct = 0.0;
};

// Counts attributed to each (species, charge), with the peak data needed by the audit.
struct SpectrumFacts {
  spectrum::RangedPeakSet peaks;
  std::map<spectrum::ColumnKey, double> counts;  // after overlap resolution
};

Composition composition(const std::map<spectrum::ColumnKey, double>& counts,
                        const CompositionSpec& spec);

// Total: every violated arithmetic check becomes a flag, in a fixed order.
std::vector<Flag> audit_consistency(const std::vector<OverlapResolution>& cases,
                                    const SpectrumFacts& facts,
                                    const std::map<std::string, PredictedFractions>& predicted,
                                    const std::optional<CompositionSpec>& comp,
                                    const AuditThresholds& thresholds = {});

struct ResolutionReport {
  std::string name;
  FieldInterval field;
  std::map<std::string, PredictedFractions> predicted;
  std::vector<OverlapResolution> cases;
  std::map<spectrum::ColumnKey, double> ranged_counts;
  std::map<spectrum::ColumnKey, double> resolved_counts;
  std::optional<Composition> original_composition;
  std::optional<Composition> revised_composition;
  std::optional<CompositionSpec> composition_spec;
  std::vector<Flag> flags;  // audit flags
  nlohmann::json config;    // echoed input
};

// Runs field estimation, prediction, overlap resolution and the audit from a
// JSON config; relative paths resolve against `base_dir`.
ResolutionReport run_pipeline(const nlohmann::json& config, const std::filesystem::path& base_dir,
                              const Environment& env = {});
ResolutionReport run_pipeline_file(const std::filesystem::path& path, const Environment& env = {});

// Parses and resolves every input without computing anything.
void validate_config(const nlohmann::json& config, const std::filesystem::path& base_dir);

nlohmann::json to_json(const ResolutionReport& r);
std::string to_text(const ResolutionReport& r);

}  // namespace pfikit::pipeline
