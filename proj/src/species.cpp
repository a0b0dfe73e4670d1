#include "pfikit/species.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pfikit/assets.hpp"
#include "pfikit/error.hpp"

namespace pfikit {

double SpeciesParams::ie(int n) const {
  if (n < 1 || n > max_charge())
    fail(ErrorKind::Config, name + ": ionization energy I_" + std::to_string(n) +
                                " not in ladder of length " + std::to_string(max_charge()));
  return ie_ladder_eV[static_cast<size_t>(n - 1)];
}

void validate(const SpeciesParams& s) {
  auto bad = [&](const std::string& why) { fail(ErrorKind::Config, "species '" + s.name + "': " + why); };
  if (s.name.empty()) bad("empty name");
  if (s.cluster_size < 1) bad("cluster_size must be >= 1");
  if (!(s.mass_amu > 0.0)) bad("mass must be positive");
  if (s.m_q < 1) bad("m_q must be >= 1");
  if (s.ie_ladder_eV.size() < 2) bad("ionization-energy ladder needs at least I1 and I2");
  for (size_t i = 0; i < s.ie_ladder_eV.size(); ++i) {
    if (!(s.ie_ladder_eV[i] > 0.0)) bad("ionization energies must be positive");
    if (i > 0 && !(s.ie_ladder_eV[i] > s.ie_ladder_eV[i - 1]))
      bad("ionization energies must be strictly increasing");
  }
}

SpeciesParams species_from_json(const nlohmann::json& j) {
  SpeciesParams s;
  try {
    s.name = j.at("name").get<std::string>();
    s.cluster_size = j.value("cluster_size", 1);
    s.mass_amu = j.at("mass_amu").get<double>();
    s.ie_ladder_eV = j.at("ie_ladder_eV").get<std::vector<double>>();
    s.m_q = j.at("m_q").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("species record: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const SpeciesParams& s) {
  return {{"name", s.name},
          {"cluster_size", s.cluster_size},
          {"mass_amu", s.mass_amu},
          {"ie_ladder_eV", s.ie_ladder_eV},
          {"m_q", s.m_q}};
}

std::vector<SpeciesParams> load_species_file(const std::filesystem::path& path) {
  auto doc = read_json(path);
  if (doc.is_object() && doc.contains("species")) doc = doc.at("species");
  std::vector<SpeciesParams> out;
  if (doc.is_array()) {
    for (const auto& item : doc) out.push_back(species_from_json(item));
  } else if (doc.is_object()) {
    out.push_back(species_from_json(doc));
  } else {
    fail(ErrorKind::Config, path.string() + ": expected a species object or list");
  }
  return out;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<SpeciesParams> filter_by_name(std::vector<SpeciesParams> all, const std::string& name,
                                          const std::string& where) {
  std::vector<SpeciesParams> hit;
  for (auto& s : all)
    if (lower(s.name) == lower(name)) hit.push_back(std::move(s));
  if (hit.empty()) fail(ErrorKind::Config, "species '" + name + "' not found in " + where);
  return hit;
}

}  // namespace

std::vector<SpeciesParams> resolve_species(const std::string& spec) {
  if (spec.empty()) fail(ErrorKind::Config, "no species");
  // file.json:Name
  if (auto colon = spec.rfind(':'); colon != std::string::npos && colon > 0 &&
                                    spec.substr(0, colon).ends_with(".json")) {
    auto file = resolve_asset(spec.substr(0, colon));
    return filter_by_name(load_species_file(file), spec.substr(colon + 1), file.string());
  }
  if (spec.ends_with(".json")) return load_species_file(resolve_asset(spec));

  // Bare name: search every shipped species file.
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(asset_dir()))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<SpeciesParams> all;
  for (const auto& path : files) {
    auto doc = read_json(path);
    if (doc.is_object() && doc.contains("species")) doc = doc.at("species");
    bool looks_like_species =
        (doc.is_array() && !doc.empty() && doc.front().contains("ie_ladder_eV")) ||
        (doc.is_object() && doc.contains("ie_ladder_eV"));
    if (!looks_like_species) continue;
    for (auto& s : load_species_file(path)) all.push_back(std::move(s));
  }
  return filter_by_name(std::move(all), spec, asset_dir().string());
}

void validate(const Environment& env) {
  if (!(env.phi_eV > 0.0) || !std::isfinite(env.phi_eV))
    fail(ErrorKind::Config, "work function must be positive");
  if (!(env.lambda_nm >= 0.0) || !std::isfinite(env.lambda_nm))
    fail(ErrorKind::Config, "screening length must be >= 0");
  if (!(env.z_max_au > 0.0) || !std::isfinite(env.z_max_au))
    fail(ErrorKind::Config, "z_max must be positive");
}

}  // namespace pfikit
