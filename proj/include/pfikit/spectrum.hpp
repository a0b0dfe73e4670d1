#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace pfikit::spectrum {

struct Isotope {
  int mass_number = 0;
  double mass_Da = 0.0;
  double abundance = 0.0;
};

struct IsotopeTable {
  std::string version;
  std::map<std::string, std::vector<Isotope>> elements;

  // Throws Config for an unknown element.
  const std::vector<Isotope>& element(const std::string& symbol) const;
};

void validate(const IsotopeTable& table);
IsotopeTable isotope_table_from_json(const nlohmann::json& j);
IsotopeTable load_isotope_table(const std::filesystem::path& path);
// isotopes.json from the asset directory, loaded once.
const IsotopeTable& default_isotopes();

// One aggregated line of a cluster's isotope pattern.
struct Isotopologue {
  int mass_number = 0;
  double mass_Da = 0.0;       // probability-weighted mean over the combinations
  double probability = 0.0;
};

// k-fold convolution of the element's isotope distribution, ordered by mass number.
std::vector<Isotopologue> isotopologue_distribution(const IsotopeTable& table,
                                                    const std::string& element, int k);

// "Si2" -> {"Si", 2}; "As" -> {"As", 1}.
std::pair<std::string, int> parse_cluster(const std::string& species);

struct Assignment {
  std::string species;
  int charge = 1;
  int mass_number = 0;
};

struct Peak {
  double mz_Da = 0.0;
  double counts = 0.0;
  std::vector<Assignment> assignments;
};

struct RangedPeakSet {
  std::vector<Peak> peaks;
};

// CSV with header `mz_Da,counts,assignments`; assignments `Species:charge:massnumber`
// separated by ';'.
RangedPeakSet parse_peak_csv(std::istream& in);
RangedPeakSet load_peak_csv(const std::filesystem::path& path);
void write_peak_csv(std::ostream& out, const RangedPeakSet& peaks);

// (species, charge)
using ColumnKey = std::pair<std::string, int>;
std::string column_name(const ColumnKey& key);  // "Si2^2+"

struct OverlapMatrix {
  std::vector<ColumnKey> columns;
  Eigen::MatrixXd matrix;          // peaks x columns: expected fraction of the column's counts
  std::vector<double> coverage;    // column sums
};

// Columns appear in order of first mention in the peak list unless `columns`
// is given. `mz_tolerance_Da` bounds |isotopologue mass / charge - peak m/z|.
OverlapMatrix build_overlap_matrix(const RangedPeakSet& peaks, const IsotopeTable& table,
                                   const std::vector<ColumnKey>& columns = {},
                                   double mz_tolerance_Da = 0.3);

struct DeconvolutionResult {
  std::vector<ColumnKey> columns;
  std::vector<double> totals;        // redistributed counts summed per column
  std::vector<double> model_totals;  // NNLS amplitudes (whole isotope pattern)
  std::vector<std::vector<double>> per_peak;  // peak x column redistributed counts
  double residual_norm = 0.0;
  int iterations = 0;

  double total(const std::string& species, int charge) const;  // Config if absent
};

DeconvolutionResult deconvolve(const RangedPeakSet& peaks, const OverlapMatrix& m);

// Ranging without deconvolution: each peak's counts go to its first assignment.
DeconvolutionResult ranged_totals(const RangedPeakSet& peaks);

struct CsrEstimate {
  std::string species;
  double value = 0.0;
  double two_sigma = 0.0;
  double n_low = 0.0;
  double n_high = 0.0;
};

CsrEstimate csr_from_counts(const std::string& species, double n_low, double n_high);
CsrEstimate compute_csr(const DeconvolutionResult& decon, const std::string& species,
                        std::pair<int, int> charges = {1, 2});

// Sum of histogram counts within +-half_width of each centre.
std::vector<double> window_sums(const std::vector<std::pair<double, double>>& histogram,
                                const std::vector<double>& centres, double half_width_Da = 0.25);
std::vector<std::pair<double, double>> load_histogram_csv(const std::filesystem::path& path);

nlohmann::json to_json(const DeconvolutionResult& r, const RangedPeakSet& peaks);
nlohmann::json to_json(const CsrEstimate& c);

}  // namespace pfikit::spectrum
