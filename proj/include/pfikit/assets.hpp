#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace pfikit {

// $PFIKIT_ASSETS if set, otherwise the asset directory baked in at build time.
std::filesystem::path asset_dir();

// Returns `name` if it exists relative to the working directory, else the
// same name under asset_dir(). Throws Config if neither exists.
std::filesystem::path resolve_asset(const std::string& name);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace pfikit
