#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pfikit {

// An atomic or homonuclear cluster ion species. The ionization-energy ladder
// holds I_1..I_K in eV; charge states 1..K are addressable.
struct SpeciesParams {
  std::string name;
  int cluster_size = 1;
  double mass_amu = 0.0;
  std::vector<double> ie_ladder_eV;
  int m_q = 1;

  int max_charge() const { return static_cast<int>(ie_ladder_eV.size()); }
  // I_n for 1-based n.
  double ie(int n) const;
};

// Throws Config when an invariant is violated.
void validate(const SpeciesParams& s);

SpeciesParams species_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpeciesParams& s);

// A species file holds one object or a list of objects.
std::vector<SpeciesParams> load_species_file(const std::filesystem::path& path);

// Accepts "file.json", "file.json:Name" or a bare species name searched in the
// shipped species assets (case-insensitive).
std::vector<SpeciesParams> resolve_species(const std::string& spec);

// Emitter-side parameters shared by every evaluation. The field is passed per
// call, never stored.
struct Environment {
  double phi_eV = 4.9;        // work function
  double lambda_nm = 0.048;   // field screening length (image plane to model surface)
  double z_max_au = 200.0;    // upper limit of the PFI integral
};

void validate(const Environment& env);

}  // namespace pfikit
