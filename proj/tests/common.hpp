#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "pfikit/assets.hpp"
#include "pfikit/species.hpp"
#include "pfikit/tunneling.hpp"

// doctest's Approx adds 1 to the scale by default, which turns small
// relative tolerances into absolute ones; these are purely relative.
inline doctest::Approx approx(double v) { return doctest::Approx(v).scale(1e-300).epsilon(1e-12); }

namespace testing {

inline pfikit::SpeciesParams species(const std::string& name) {
  return pfikit::resolve_species(name).front();
}

inline pfikit::tunneling::ZModel zmodel(const std::string& asset) {
  return pfikit::tunneling::load_zmodel(pfikit::resolve_asset(asset));
}

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(PFIKIT_FIXTURE_DIR) / rel;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace testing
