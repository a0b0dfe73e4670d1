#include "pfikit/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pfikit/error.hpp"

namespace pfikit::io {

std::string format9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_curve_csv(std::ostream& out, const curves::KinghamCurve& curve) {
  out << "field_Vnm";
  for (int q = 1; q <= curve.max_charge(); ++q) out << ",f" << q;
  out << ",csr\n";
  for (size_t i = 0; i < curve.field_grid.size(); ++i) {
    out << format9(curve.field_grid[i]);
    for (double f : curve.fractions[i]) out << ',' << format9(f);
    out << ',' << format9(curve.csr[i]) << '\n';
  }
}

nlohmann::json curve_to_json(const curves::KinghamCurve& curve) {
  return {{"species", curve.species},
          {"csr_pair", {curve.csr_pair.first, curve.csr_pair.second}},
          {"field_Vnm", curve.field_grid},
          {"fractions", curve.fractions},
          {"csr", curve.csr}};
}

std::string gnuplot_script(const std::vector<std::filesystem::path>& csv_files,
                           const std::string& title) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set title '" << title << "'\n"
    << "set xlabel 'Field (V/nm)'\n"
    << "set ylabel 'CSR'\n"
    << "set yrange [0:1]\n"
    << "plot ";
  for (size_t i = 0; i < csv_files.size(); ++i) {
    if (i) s << ", \\\n     ";
    s << "'" << csv_files[i].filename().string() << "' using 1:'csr' with lines title '"
      << csv_files[i].stem().string() << "'";
  }
  s << '\n';
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Config, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace pfikit::io
