#include "pfikit/assets.hpp"

#include <cstdlib>
#include <fstream>

#include "pfikit/error.hpp"

namespace pfikit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain_error";
    case ErrorKind::Config: return "config_error";
    case ErrorKind::Numerical: return "numerical_error";
    case ErrorKind::NonphysicalKinematics: return "nonphysical_kinematics";
    case ErrorKind::Bracket: return "bracket_error";
    case ErrorKind::FitRange: return "fit_range_error";
    case ErrorKind::Extrapolation: return "extrapolation_error";
    case ErrorKind::Ambiguity: return "ambiguity_error";
    case ErrorKind::DegenerateColumn: return "degenerate_column";
    case ErrorKind::UndefinedCsr: return "undefined_csr";
  }
  return "error";
}

std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("PFIKIT_ASSETS"); env && *env) return env;
  return PFIKIT_DEFAULT_ASSET_DIR;
}

std::filesystem::path resolve_asset(const std::string& name) {
  std::filesystem::path p(name);
  if (std::filesystem::exists(p)) return p;
  auto in_assets = asset_dir() / p;
  if (std::filesystem::exists(in_assets)) return in_assets;
  fail(ErrorKind::Config, "file not found: " + name + " (also looked in " +
                              asset_dir().string() + ")");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

}  // namespace pfikit
