#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "pfikit/curves.hpp"

namespace pfikit::io {

// 9 significant digits, so identical inputs give identical bytes.
std::string format9(double v);

// Header `field_Vnm,f1,...,fK,csr`.
void write_curve_csv(std::ostream& out, const curves::KinghamCurve& curve);
nlohmann::json curve_to_json(const curves::KinghamCurve& curve);

// gnuplot script plotting the CSR column of each CSV file.
std::string gnuplot_script(const std::vector<std::filesystem::path>& csv_files,
                           const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace pfikit::io
