#include "pfikit/units.hpp"

#include <cmath>
#include <string>

#include "pfikit/assets.hpp"
#include "pfikit/error.hpp"

namespace pfikit::units {

PhysConstants PhysConstants::defaults() {
  PhysConstants c{};
  c.hartree_in_eV = 27.211386245988;
  c.bohr_in_nm = 0.0529177210903;
  c.field_au_in_Vnm = 514.220674763;
  c.inv_second_in_au = 2.418884326509e-17;
  c.amu_in_me = 1822.888486209;
  // e^2/(4 pi eps0) = Hartree * Bohr in eV nm.
  c.W_image = c.hartree_in_eV * c.bohr_in_nm;
  c.C_image = c.W_image / 4.0;
  c.c_s = std::sqrt(c.W_image);
  return c;
}

PhysConstants load_constants(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  auto c = PhysConstants::defaults();
  const auto& items = doc.contains("constants") ? doc.at("constants") : doc;
  auto pick = [&](const char* key, double& slot) {
    if (!items.contains(key)) return;
    const auto& v = items.at(key);
    double value = v.is_object() ? v.at("value").get<double>() : v.get<double>();
    if (!(value > 0.0) || !std::isfinite(value))
      fail(ErrorKind::Config, path.string() + ": constant " + key + " must be positive");
    slot = value;
  };
  pick("hartree_in_eV", c.hartree_in_eV);
  pick("bohr_in_nm", c.bohr_in_nm);
  pick("field_au_in_Vnm", c.field_au_in_Vnm);
  pick("inv_second_in_au", c.inv_second_in_au);
  pick("amu_in_me", c.amu_in_me);
  pick("W_image", c.W_image);
  // C and c_s are always tied to W so that W = 4C holds exactly.
  c.C_image = c.W_image / 4.0;
  c.c_s = std::sqrt(c.W_image);
  return c;
}

const PhysConstants& active() {
  static const PhysConstants instance = [] {
    auto path = asset_dir() / "constants.json";
    if (std::filesystem::exists(path)) return load_constants(path);
    return PhysConstants::defaults();
  }();
  return instance;
}

namespace {

void require_nonnegative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    fail(ErrorKind::Domain, std::string(what) + " must be finite and >= 0, got " +
                                std::to_string(v));
}

}  // namespace

double to_hartree(double energy_eV) { return energy_eV / active().hartree_in_eV; }
double from_hartree(double energy_Ha) { return energy_Ha * active().hartree_in_eV; }

double field_to_au(double field_Vnm) {
  require_nonnegative(field_Vnm, "field");
  return field_Vnm / active().field_au_in_Vnm;
}
double field_from_au(double field_au) {
  require_nonnegative(field_au, "field");
  return field_au * active().field_au_in_Vnm;
}

double length_to_au(double length_nm) {
  require_nonnegative(length_nm, "length");
  return length_nm / active().bohr_in_nm;
}
double length_from_au(double length_au) {
  require_nonnegative(length_au, "length");
  return length_au * active().bohr_in_nm;
}

double rate_si_to_au(double rate_per_s) {
  require_nonnegative(rate_per_s, "rate");
  return rate_per_s * active().inv_second_in_au;
}
double rate_au_to_si(double rate_au) {
  require_nonnegative(rate_au, "rate");
  return rate_au / active().inv_second_in_au;
}

double mass_to_au(double mass_amu) {
  if (!(mass_amu > 0.0)) fail(ErrorKind::Domain, "mass must be positive");
  return mass_amu * active().amu_in_me;
}

}  // namespace pfikit::units
