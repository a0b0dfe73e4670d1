// pfikit command-line front end. Results go to files under --out; stderr
// carries diagnostics; stdout is used only with --verbose.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pfikit/assets.hpp"
#include "pfikit/curves.hpp"
#include "pfikit/error.hpp"
#include "pfikit/pipeline.hpp"
#include "pfikit/report_io.hpp"
#include "pfikit/spectrum.hpp"
#include "pfikit/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pfikit;

namespace {

struct Globals {
  std::string species;
  std::string zmodel;
  double phi = 4.9;
  double lambda = 0.048;
  double zmax = 200.0;
  std::string grid = "5:45:0.1";
  std::string out = ".";
  std::string format = "csv";
  bool verbose = false;
  bool dry_run = false;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::FitRange:
      return 4;
    case ErrorKind::Ambiguity:
    case ErrorKind::DegenerateColumn:
      return 5;
    default:
      return 3;
  }
}

Environment environment(const Globals& g) {
  if (!(g.phi > 0.0 && g.phi <= 10.0)) fail(ErrorKind::Config, "--phi must lie in (0, 10] eV");
  if (!(g.zmax >= 50.0 && g.zmax <= 1000.0)) fail(ErrorKind::Config, "--zmax must lie in [50, 1000] a.u.");
  if (!(g.lambda >= 0.0 && g.lambda <= 0.5)) fail(ErrorKind::Config, "--lambda must lie in [0, 0.5] nm");
  Environment env{g.phi, g.lambda, g.zmax};
  validate(env);
  return env;
}

tunneling::ZModel zmodel(const Globals& g) {
  if (g.zmodel.empty()) return {};
  return tunneling::load_zmodel(resolve_asset(g.zmodel));
}

std::vector<SpeciesParams> species(const Globals& g) { return resolve_species(g.species); }

json env_json(const Environment& e) {
  return {{"phi_eV", e.phi_eV}, {"lambda_nm", e.lambda_nm}, {"z_max_au", e.z_max_au}};
}

json common_inputs(const Globals& g, const std::vector<SpeciesParams>& list, const Environment& env,
                   const tunneling::ZModel& z) {
  json sp = json::array();
  for (const auto& s : list) sp.push_back(to_json(s));
  return {{"species", sp}, {"zmodel", tunneling::to_json(z)}, {"environment", env_json(env)},
          {"species_ref", g.species}};
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& what) {
  double a = 0, b = 0;
  char c = 0;
  std::istringstream in(text);
  if (!(in >> a >> c >> b) || c != ':' || !in.eof())
    fail(ErrorKind::Config, what + " must look like lo:hi, got '" + text + "'");
  if (!(b > a)) fail(ErrorKind::Config, what + " needs lo < hi");
  return {a, b};
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::Config, what + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::Config, what + ": empty list");
  return out;
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (char c : name) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s;
}

void check_format(const Globals& g) {
  if (g.format != "csv" && g.format != "json") fail(ErrorKind::Config, "--format must be csv or json");
}

void say(const Globals& g, const std::string& line) {
  if (g.verbose) std::cout << line << '\n';
}

std::string fmt(double v) { return io::format9(v); }

// ---- subcommands ----------------------------------------------------------

struct CurvesOpts {
  bool gnuplot = false;
};

int cmd_curves(const Globals& g, const CurvesOpts& o) {
  check_format(g);
  const auto env = environment(g);
  const auto z = zmodel(g);
  const auto grid = curves::parse_grid(g.grid);
  const auto list = species(g);
  if (g.dry_run) return 0;

  const auto fields = grid.points();
  json summary = {{"inputs", common_inputs(g, list, env, z)}, {"grid", g.grid}};
  json results = json::array();
  std::vector<fs::path> files;
  for (const auto& s : list) {
    say(g, "curve " + s.name);
    const auto curve = curves::generate_curve(s, env, z, fields);
    const fs::path file = fs::path(g.out) / ("curve_" + file_stem(s.name) + "." + g.format);
    if (g.format == "csv") {
      std::ostringstream csv;
      io::write_curve_csv(csv, curve);
      io::write_text(file, csv.str());
      files.push_back(file);
    } else {
      io::write_json(file, io::curve_to_json(curve));
    }
    json entry = {{"species", s.name}, {"file", file.filename().string()}};
    try {
      const auto x = curves::find_f50(s, env, z, {grid.lo, grid.hi});
      entry["f50_Vnm"] = x.f50;
    } catch (const Error& e) {
      entry["f50_Vnm"] = nullptr;
      entry["f50_note"] = e.what();
    }
    results.push_back(entry);
  }
  summary["results"] = results;
  io::write_json(fs::path(g.out) / "curves_summary.json", summary);
  if (o.gnuplot && !files.empty())
    io::write_text(fs::path(g.out) / "curves.gp", io::gnuplot_script(files, "Kingham curves"));
  return 0;
}

struct F50Opts {
  std::string range = "5:45";
  double target = 0.5;
};

int cmd_f50(const Globals& g, const F50Opts& o) {
  const auto env = environment(g);
  const auto z = zmodel(g);
  const auto [lo, hi] = parse_pair(o.range, "--range");
  if (!(o.target > 0.0 && o.target < 1.0)) fail(ErrorKind::Config, "--target must lie in (0, 1)");
  const auto list = species(g);
  if (g.dry_run) return 0;
  json results = json::array();
  for (const auto& s : list) {
    const auto r = curves::find_f50(s, env, z, {lo, hi}, {}, o.target);
    say(g, s.name + " F50 " + fmt(r.f50) + " V/nm");
    results.push_back({{"species", s.name},
                       {"f50_Vnm", r.f50},
                       {"bracket_Vnm", {r.bracket.first, r.bracket.second}},
                       {"achieved_csr", r.achieved_csr},
                       {"residual", r.achieved_csr - o.target},
                       {"evaluations", r.evaluations}});
  }
  auto inputs = common_inputs(g, list, env, z);
  inputs["range_Vnm"] = {lo, hi};
  inputs["target_csr"] = o.target;
  io::write_json(fs::path(g.out) / "f50.json", {{"inputs", inputs}, {"results", results}});
  return 0;
}

struct FitZOpts {
  double target = 0.0;
  double c1 = 1.0;
  std::string c0_range = "0.01:2";
};

int cmd_fit_z(const Globals& g, const FitZOpts& o) {
  const auto env = environment(g);
  const auto range = parse_pair(o.c0_range, "--c0-range");
  if (!(o.target > 0.0)) fail(ErrorKind::Config, "--target must be a positive field in V/nm");
  const auto list = species(g);
  if (g.dry_run) return 0;
  json results = json::array();
  for (const auto& s : list) {
    const auto r = curves::fit_z_offset(s, env, o.target, o.c1, range);
    say(g, s.name + " c0 " + fmt(r.zmodel.c0));
    results.push_back({{"species", s.name},
                       {"zmodel", tunneling::to_json(r.zmodel)},
                       {"f50_Vnm", r.f50},
                       {"residual_Vnm", r.residual},
                       {"achievable_f50_Vnm", {r.achievable.first, r.achievable.second}}});
  }
  json inputs = common_inputs(g, list, env, {});
  inputs.erase("zmodel");
  inputs["target_f50_Vnm"] = o.target;
  inputs["c1"] = o.c1;
  inputs["c0_range"] = {range.first, range.second};
  io::write_json(fs::path(g.out) / "fit_z.json", {{"inputs", inputs}, {"results", results}});
  return 0;
}

struct FitIeOpts {
  double target = 0.0;
  int index = 2;
};

int cmd_fit_ie(const Globals& g, const FitIeOpts& o) {
  const auto env = environment(g);
  const auto z = zmodel(g);
  if (!(o.target > 0.0)) fail(ErrorKind::Config, "--target must be a positive field in V/nm");
  const auto list = species(g);
  if (g.dry_run) return 0;
  json results = json::array();
  for (const auto& s : list) {
    const auto r = curves::fit_ie(s, env, z, o.target, o.index);
    say(g, s.name + " I" + std::to_string(o.index) + " " + fmt(r.fitted_eV) + " eV");
    results.push_back({{"species", s.name},
                       {"index", r.index},
                       {"nominal_eV", r.nominal_eV},
                       {"fitted_eV", r.fitted_eV},
                       {"shift_eV", r.shift_eV},
                       {"relative_shift", r.relative_shift},
                       {"f50_Vnm", r.f50},
                       {"residual_Vnm", r.residual},
                       {"achievable_f50_Vnm", {r.achievable.first, r.achievable.second}},
                       {"ie_ladder_eV", r.species.ie_ladder_eV}});
  }
  auto inputs = common_inputs(g, list, env, z);
  inputs["target_f50_Vnm"] = o.target;
  inputs["ie_index"] = o.index;
  io::write_json(fs::path(g.out) / "fit_ie.json", {{"inputs", inputs}, {"results", results}});
  return 0;
}

struct ScanOpts {
  std::string param;
  std::string values;
};

int cmd_scan(const Globals& g, const ScanOpts& o) {
  const auto env = environment(g);
  const auto z = zmodel(g);
  const auto p = curves::parse_scan_parameter(o.param);
  const auto values = parse_list(o.values, "--values");
  const auto list = species(g);
  if (g.dry_run) return 0;
  json results = json::array();
  std::ostringstream csv;
  csv << "species," << curves::to_string(p) << ",f50_Vnm\n";
  for (const auto& s : list) {
    const auto rows = curves::sensitivity_scan(s, env, z, p, values);
    json table = json::array();
    for (const auto& [v, f] : rows) {
      table.push_back({{"value", v}, {"f50_Vnm", f}});
      csv << s.name << ',' << fmt(v) << ',' << fmt(f) << '\n';
      say(g, s.name + " " + curves::to_string(p) + "=" + fmt(v) + " F50 " + fmt(f));
    }
    results.push_back({{"species", s.name}, {"table", table}});
  }
  auto inputs = common_inputs(g, list, env, z);
  inputs["parameter"] = curves::to_string(p);
  inputs["values"] = values;
  io::write_json(fs::path(g.out) / "scan.json", {{"inputs", inputs}, {"results", results}});
  io::write_text(fs::path(g.out) / "scan.csv", csv.str());
  return 0;
}

struct DeconvOpts {
  std::string peaks;
  std::string isotopes;
  double tolerance = 0.3;
};

spectrum::IsotopeTable isotopes(const std::string& path) {
  return path.empty() ? spectrum::default_isotopes() : spectrum::load_isotope_table(resolve_asset(path));
}

json csr_table(const spectrum::DeconvolutionResult& r) {
  json out = json::array();
  std::vector<std::string> names;
  for (const auto& c : r.columns)
    if (std::find(names.begin(), names.end(), c.first) == names.end()) names.push_back(c.first);
  for (const auto& n : names) {
    const bool has1 = std::count(r.columns.begin(), r.columns.end(), spectrum::ColumnKey{n, 1});
    const bool has2 = std::count(r.columns.begin(), r.columns.end(), spectrum::ColumnKey{n, 2});
    if (!has1 || !has2) continue;
    try {
      out.push_back(spectrum::to_json(spectrum::compute_csr(r, n)));
    } catch (const Error&) {
    }
  }
  return out;
}

int cmd_deconv(const Globals& g, const DeconvOpts& o) {
  if (o.peaks.empty()) fail(ErrorKind::Config, "--peaks is required");
  const auto peaks = spectrum::load_peak_csv(o.peaks);
  const auto table = isotopes(o.isotopes);
  const auto m = spectrum::build_overlap_matrix(peaks, table, {}, o.tolerance);
  if (g.dry_run) return 0;
  const auto r = spectrum::deconvolve(peaks, m);
  const auto naive = spectrum::ranged_totals(peaks);
  json j = spectrum::to_json(r, peaks);
  j["inputs"] = {{"peaks", o.peaks}, {"isotopes", o.isotopes.empty() ? "isotopes.json" : o.isotopes},
                 {"isotope_table_version", table.version}, {"mz_tolerance_Da", o.tolerance}};
  json cov = json::object();
  for (size_t c = 0; c < m.columns.size(); ++c) cov[spectrum::column_name(m.columns[c])] = m.coverage[c];
  j["coverage"] = cov;
  j["csr_ranged"] = csr_table(naive);
  j["csr_deconvolved"] = csr_table(r);
  io::write_json(fs::path(g.out) / "deconv.json", j);

  std::ostringstream csv;
  csv << "mz_Da,counts";
  for (const auto& c : r.columns) csv << ',' << spectrum::column_name(c);
  csv << '\n';
  for (size_t p = 0; p < peaks.peaks.size(); ++p) {
    csv << fmt(peaks.peaks[p].mz_Da) << ',' << fmt(peaks.peaks[p].counts);
    for (double v : r.per_peak[p]) csv << ',' << fmt(v);
    csv << '\n';
  }
  io::write_text(fs::path(g.out) / "deconv_peaks.csv", csv.str());
  std::cerr << "deconvolution residual norm " << fmt(r.residual_norm) << '\n';
  return 0;
}

struct CsrOpts {
  std::string peaks;
  std::string name;
  bool deconvolve = false;
  std::optional<double> n1, n2;
  std::string isotopes;
};

int cmd_csr(const Globals& g, const CsrOpts& o) {
  if (o.name.empty()) fail(ErrorKind::Config, "--name is required");
  spectrum::CsrEstimate c;
  json inputs = {{"name", o.name}};
  if (o.n1 || o.n2) {
    if (g.dry_run) return 0;
    c = spectrum::csr_from_counts(o.name, o.n1.value_or(0.0), o.n2.value_or(0.0));
    inputs["n1"] = o.n1.value_or(0.0);
    inputs["n2"] = o.n2.value_or(0.0);
  } else {
    if (o.peaks.empty()) fail(ErrorKind::Config, "give --peaks or --n1/--n2");
    const auto peaks = spectrum::load_peak_csv(o.peaks);
    inputs["peaks"] = o.peaks;
    inputs["deconvolve"] = o.deconvolve;
    if (o.deconvolve) {
      const auto m = spectrum::build_overlap_matrix(peaks, isotopes(o.isotopes));
      if (g.dry_run) return 0;
      c = spectrum::compute_csr(spectrum::deconvolve(peaks, m), o.name);
    } else {
      if (g.dry_run) return 0;
      c = spectrum::compute_csr(spectrum::ranged_totals(peaks), o.name);
    }
  }
  say(g, o.name + " CSR " + fmt(c.value) + " +- " + fmt(c.two_sigma));
  io::write_json(fs::path(g.out) / "csr.json", {{"inputs", inputs}, {"result", spectrum::to_json(c)}});
  return 0;
}

struct FieldOpts {
  double csr = -1.0;
  std::optional<double> sigma;
};

int cmd_field(const Globals& g, const FieldOpts& o) {
  const auto env = environment(g);
  const auto z = zmodel(g);
  const auto grid = curves::parse_grid(g.grid);
  const auto list = species(g);
  if (list.size() != 1) fail(ErrorKind::Config, "field needs exactly one reference species");
  if (!(o.csr >= 0.0 && o.csr <= 1.0)) fail(ErrorKind::Config, "--csr must lie in [0, 1]");
  if (g.dry_run) return 0;
  const auto curve = curves::generate_curve(list.front(), env, z, grid.points());
  const auto est = curves::csr_to_field(curve, o.csr, o.sigma);
  say(g, list.front().name + " field " + fmt(est.field) + " V/nm");
  auto inputs = common_inputs(g, list, env, z);
  inputs["grid"] = g.grid;
  inputs["csr"] = o.csr;
  if (o.sigma) inputs["sigma"] = *o.sigma;
  io::write_json(fs::path(g.out) / "field.json",
                 {{"inputs", inputs},
                  {"result", {{"field_Vnm", est.field}, {"low_Vnm", est.low}, {"high_Vnm", est.high},
                              {"clamped", est.clamped}}}});
  return 0;
}

struct ResolveOpts {
  std::string config;
};

int cmd_resolve(const Globals& g, const ResolveOpts& o) {
  if (o.config.empty()) fail(ErrorKind::Config, "--config is required");
  const auto env = environment(g);
  const fs::path path(o.config);
  const auto cfg = read_json(path);
  if (g.dry_run) {
    pipeline::validate_config(cfg, path.parent_path());
    return 0;
  }
  const auto rep = pipeline::run_pipeline(cfg, path.parent_path(), env);
  io::write_json(fs::path(g.out) / "resolve.json", pipeline::to_json(rep));
  io::write_text(fs::path(g.out) / "resolve.txt", pipeline::to_text(rep));
  for (const auto& f : rep.flags) std::cerr << "flag " << f.code << ": " << f.detail << '\n';
  return 0;
}

struct KelloggOpts {
  double F0 = 0.0, V = 0.0, V0 = 0.0;
};

int cmd_kellogg(const Globals& g, const KelloggOpts& o) {
  const double F = pipeline::kellogg_field(o.F0, o.V, o.V0);
  if (g.dry_run) return 0;
  say(g, "F = " + fmt(F) + " V/nm");
  io::write_json(fs::path(g.out) / "kellogg.json",
                 {{"inputs", {{"F0_Vnm", o.F0}, {"V", o.V}, {"V0", o.V0}}}, {"result", {{"field_Vnm", F}}}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kingham post-field-ionization toolkit for atom-probe charge-state analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--species", g.species, "Species file, file.json:Name, or shipped species name");
  app.add_option("--zmodel", g.zmodel, "Z-model JSON (default Z = n + 1 + 4.5/z0)");
  app.add_option("--phi", g.phi, "Work function, eV")->capture_default_str();
  app.add_option("--lambda", g.lambda, "Screening length, nm")->capture_default_str();
  app.add_option("--zmax", g.zmax, "Upper integration limit, bohr")->capture_default_str();
  app.add_option("--grid", g.grid, "Field grid lo:hi:step, V/nm")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Curve output format: csv or json")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "Progress on stdout");
  app.add_flag("--dry-run", g.dry_run, "Validate inputs, compute nothing");

  CurvesOpts curves_o;
  auto* curves_c = app.add_subcommand("curves", "Kingham curves on the field grid, one file per species");
  curves_c->add_flag("--gnuplot", curves_o.gnuplot, "Also write a gnuplot script");

  F50Opts f50_o;
  auto* f50_c = app.add_subcommand("f50", "Field where the CSR crosses the target");
  f50_c->add_option("--range", f50_o.range, "Search range lo:hi, V/nm")->capture_default_str();
  f50_c->add_option("--target", f50_o.target, "Target CSR")->capture_default_str();

  FitZOpts fitz_o;
  auto* fitz_c = app.add_subcommand("fit-z", "Fit the Z-model offset c0 to a target F50");
  fitz_c->add_option("--target", fitz_o.target, "Target F50, V/nm")->required();
  fitz_c->add_option("--c1", fitz_o.c1, "Fixed c1")->capture_default_str();
  fitz_c->add_option("--c0-range", fitz_o.c0_range, "Search interval lo:hi")->capture_default_str();

  FitIeOpts fitie_o;
  auto* fitie_c = app.add_subcommand("fit-ie", "Fit one ionization energy to a target F50");
  fitie_c->add_option("--target", fitie_o.target, "Target F50, V/nm")->required();
  fitie_c->add_option("--ie", fitie_o.index, "1-based IE index")->capture_default_str();

  ScanOpts scan_o;
  auto* scan_c = app.add_subcommand("scan", "F50 sensitivity to m_q or phi");
  scan_c->add_option("--param", scan_o.param, "mq or phi")->required();
  scan_c->add_option("--values", scan_o.values, "Comma-separated values")->required();

  DeconvOpts deconv_o;
  auto* deconv_c = app.add_subcommand("deconv", "Isotope-constrained peak deconvolution");
  deconv_c->add_option("--peaks", deconv_o.peaks, "Peak CSV mz_Da,counts,assignments")->required();
  deconv_c->add_option("--isotopes", deconv_o.isotopes, "Isotope table JSON");
  deconv_c->add_option("--tolerance", deconv_o.tolerance, "m/z tolerance, Da")->capture_default_str();

  CsrOpts csr_o;
  auto* csr_c = app.add_subcommand("csr", "Charge-state ratio with 2 sigma counting error");
  csr_c->add_option("--name", csr_o.name, "Species label")->required();
  csr_c->add_option("--peaks", csr_o.peaks, "Peak CSV");
  csr_c->add_flag("--deconvolve", csr_o.deconvolve, "Deconvolve before counting");
  csr_c->add_option("--n1", csr_o.n1, "1+ counts");
  csr_c->add_option("--n2", csr_o.n2, "2+ counts");
  csr_c->add_option("--isotopes", csr_o.isotopes, "Isotope table JSON");

  FieldOpts field_o;
  auto* field_c = app.add_subcommand("field", "Field from a measured CSR on the reference curve");
  field_c->add_option("--csr", field_o.csr, "Measured CSR")->required();
  field_c->add_option("--sigma", field_o.sigma, "CSR uncertainty");

  ResolveOpts resolve_o;
  auto* resolve_c = app.add_subcommand("resolve", "Overlap-resolution pipeline from a JSON config");
  resolve_c->add_option("--config", resolve_o.config, "Pipeline config JSON")->required();

  KelloggOpts kel_o;
  auto* kel_c = app.add_subcommand("kellogg", "Voltage-scaled field F = F0 V / V0");
  kel_c->add_option("--F0", kel_o.F0, "Reference field, V/nm")->required();
  kel_c->add_option("--V", kel_o.V, "Voltage")->required();
  kel_c->add_option("--V0", kel_o.V0, "Reference voltage")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!g.dry_run) fs::create_directories(g.out);
    if (*curves_c) return cmd_curves(g, curves_o);
    if (*f50_c) return cmd_f50(g, f50_o);
    if (*fitz_c) return cmd_fit_z(g, fitz_o);
    if (*fitie_c) return cmd_fit_ie(g, fitie_o);
    if (*scan_c) return cmd_scan(g, scan_o);
    if (*deconv_c) return cmd_deconv(g, deconv_o);
    if (*csr_c) return cmd_csr(g, csr_o);
    if (*field_c) return cmd_field(g, field_o);
    if (*resolve_c) return cmd_resolve(g, resolve_o);
    if (*kel_c) return cmd_kellogg(g, kel_o);
  } catch (const Error& e) {
    std::cerr << "pfikit: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "pfikit: io: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
