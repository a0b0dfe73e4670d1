#include "pfikit/spectrum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pfikit/assets.hpp"
#include "pfikit/error.hpp"
#include "pfikit/nnls.hpp"

namespace pfikit::spectrum {

const std::vector<Isotope>& IsotopeTable::element(const std::string& symbol) const {
  auto it = elements.find(symbol);
  if (it == elements.end()) fail(ErrorKind::Config, "isotope table has no element '" + symbol + "'");
  return it->second;
}

void validate(const IsotopeTable& table) {
  for (const auto& [sym, list] : table.elements) {
    if (list.empty()) fail(ErrorKind::Config, sym + ": empty isotope list");
    double sum = 0.0;
    for (size_t i = 0; i < list.size(); ++i) {
      if (!(list[i].abundance >= 0.0) || !(list[i].mass_Da > 0.0))
        fail(ErrorKind::Config, sym + ": isotope masses must be > 0 and abundances >= 0");
      if (i > 0 && (list[i].mass_Da <= list[i - 1].mass_Da ||
                    list[i].mass_number <= list[i - 1].mass_number))
        fail(ErrorKind::Config, sym + ": isotope masses must be strictly increasing");
      sum += list[i].abundance;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      fail(ErrorKind::Config, sym + ": abundances sum to " + std::to_string(sum) + ", not 1");
  }
}

IsotopeTable isotope_table_from_json(const nlohmann::json& j) {
  IsotopeTable t;
  try {
    t.version = j.value("version", std::string{});
    for (const auto& [sym, list] : j.at("elements").items()) {
      auto& iso = t.elements[sym];
      for (const auto& e : list)
        iso.push_back({e.at("A").get<int>(), e.at("mass_Da").get<double>(),
                       e.at("abundance").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("isotope table: ") + e.what());
  }
  validate(t);
  return t;
}

IsotopeTable load_isotope_table(const std::filesystem::path& path) {
  return isotope_table_from_json(read_json(path));
}

const IsotopeTable& default_isotopes() {
  static const IsotopeTable table = load_isotope_table(asset_dir() / "isotopes.json");
  return table;
}

std::vector<Isotopologue> isotopologue_distribution(const IsotopeTable& table,
                                                    const std::string& element, int k) {
  if (k < 1) fail(ErrorKind::Domain, "isotopologue_distribution: cluster size must be >= 1");
  const auto& iso = table.element(element);
  // mass number -> (probability, probability * mass)
  std::map<int, std::pair<double, double>> dist{{0, {1.0, 0.0}}};
  for (int step = 0; step < k; ++step) {
    std::map<int, std::pair<double, double>> next;
    for (const auto& [A, pm] : dist)
      for (const auto& i : iso) {
        auto& slot = next[A + i.mass_number];
        slot.first += pm.first * i.abundance;
        slot.second += pm.second * i.abundance + pm.first * i.abundance * i.mass_Da;
      }
    dist = std::move(next);
  }
  std::vector<Isotopologue> out;
  for (const auto& [A, pm] : dist) {
    if (pm.first <= 0.0) continue;
    out.push_back({A, pm.second / pm.first, pm.first});
  }
  return out;
}

std::pair<std::string, int> parse_cluster(const std::string& species) {
  size_t i = 0;
  if (species.empty() || !std::isupper(static_cast<unsigned char>(species[0])))
    fail(ErrorKind::Config, "bad species name '" + species + "'");
  ++i;
  while (i < species.size() && std::islower(static_cast<unsigned char>(species[i]))) ++i;
  std::string element = species.substr(0, i);
  if (i == species.size()) return {element, 1};
  int k = 0;
  for (size_t j = i; j < species.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(species[j])))
      fail(ErrorKind::Config, "bad species name '" + species + "' (homonuclear clusters only)");
    k = 10 * k + (species[j] - '0');
  }
  if (k < 1) fail(ErrorKind::Config, "bad cluster size in '" + species + "'");
  return {element, k};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& what, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "line " + std::to_string(line) + ": bad " + what + " '" + text + "'");
  }
}

Assignment parse_assignment(const std::string& text, int line) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(trim(item));
  if (parts.size() != 3)
    fail(ErrorKind::Config, "line " + std::to_string(line) + ": assignment '" + text +
                                "' is not Species:charge:massnumber");
  Assignment a;
  a.species = parts[0];
  parse_cluster(a.species);
  const double q = parse_number(parts[1], "charge", line);
  const double m = parse_number(parts[2], "mass number", line);
  if (q < 1 || q != std::floor(q) || m < 1 || m != std::floor(m))
    fail(ErrorKind::Config, "line " + std::to_string(line) + ": charge and mass number must be positive integers");
  a.charge = static_cast<int>(q);
  a.mass_number = static_cast<int>(m);
  return a;
}

std::string fmt9(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

}  // namespace

RangedPeakSet parse_peak_csv(std::istream& in) {
  RangedPeakSet set;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#') continue;
    if (text.rfind("mz_Da", 0) == 0) continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string::npos)
      fail(ErrorKind::Config, "line " + std::to_string(line) + ": expected mz_Da,counts,assignments");
    Peak p;
    p.mz_Da = parse_number(trim(text.substr(0, c1)), "m/z", line);
    p.counts = parse_number(trim(text.substr(c1 + 1, c2 - c1 - 1)), "counts", line);
    if (!(p.counts >= 0.0))
      fail(ErrorKind::Config, "line " + std::to_string(line) + ": counts must be >= 0");
    std::stringstream ss(text.substr(c2 + 1));
    std::string item;
    while (std::getline(ss, item, ';'))
      if (!trim(item).empty()) p.assignments.push_back(parse_assignment(trim(item), line));
    if (p.assignments.empty())
      fail(ErrorKind::Config, "line " + std::to_string(line) + ": peak has no assignment");
    set.peaks.push_back(std::move(p));
  }
  if (set.peaks.empty()) fail(ErrorKind::Config, "peak file contains no peaks");
  return set;
}

RangedPeakSet load_peak_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open peak file " + path.string());
  return parse_peak_csv(in);
}

void write_peak_csv(std::ostream& out, const RangedPeakSet& peaks) {
  out << "mz_Da,counts,assignments\n";
  for (const auto& p : peaks.peaks) {
    out << fmt9(p.mz_Da) << ',' << fmt9(p.counts) << ',';
    for (size_t i = 0; i < p.assignments.size(); ++i) {
      const auto& a = p.assignments[i];
      out << (i ? ";" : "") << a.species << ':' << a.charge << ':' << a.mass_number;
    }
    out << '\n';
  }
}

std::string column_name(const ColumnKey& key) {
  return key.first + "^" + std::to_string(key.second) + "+";
}

namespace {

std::vector<ColumnKey> mentioned_columns(const RangedPeakSet& peaks) {
  std::vector<ColumnKey> cols;
  for (const auto& p : peaks.peaks)
    for (const auto& a : p.assignments) {
      ColumnKey key{a.species, a.charge};
      if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
    }
  return cols;
}

}  // namespace

OverlapMatrix build_overlap_matrix(const RangedPeakSet& peaks, const IsotopeTable& table,
                                   const std::vector<ColumnKey>& columns, double mz_tolerance_Da) {
  OverlapMatrix m;
  m.columns = columns.empty() ? mentioned_columns(peaks) : columns;
  const auto np = static_cast<Eigen::Index>(peaks.peaks.size());
  const auto nc = static_cast<Eigen::Index>(m.columns.size());
  m.matrix = Eigen::MatrixXd::Zero(np, nc);

  std::map<std::string, std::vector<Isotopologue>> patterns;
  for (Eigen::Index p = 0; p < np; ++p) {
    const auto& peak = peaks.peaks[static_cast<size_t>(p)];
    std::set<std::pair<ColumnKey, int>> seen;
    for (const auto& a : peak.assignments) {
      const ColumnKey key{a.species, a.charge};
      const auto col = std::find(m.columns.begin(), m.columns.end(), key);
      if (col == m.columns.end())
        fail(ErrorKind::Config, "peak at " + fmt9(peak.mz_Da) + " Da: " + column_name(key) +
                                    " is not among the requested species");
      if (!seen.insert({key, a.mass_number}).second) continue;
      auto it = patterns.find(a.species);
      if (it == patterns.end()) {
        const auto [element, k] = parse_cluster(a.species);
        it = patterns.emplace(a.species, isotopologue_distribution(table, element, k)).first;
      }
      const auto line = std::find_if(it->second.begin(), it->second.end(),
                                     [&](const Isotopologue& i) { return i.mass_number == a.mass_number; });
      if (line == it->second.end())
        fail(ErrorKind::Config, a.species + " has no isotopologue with mass number " +
                                    std::to_string(a.mass_number));
      const double mz = line->mass_Da / a.charge;
      if (std::abs(mz - peak.mz_Da) > mz_tolerance_Da)
        fail(ErrorKind::Config, column_name(key) + " mass " + std::to_string(a.mass_number) +
                                    " lies at " + fmt9(mz) + " Da, not at the peak " +
                                    fmt9(peak.mz_Da) + " Da");
      m.matrix(p, col - m.columns.begin()) += line->probability;
    }
  }
  m.coverage.resize(static_cast<size_t>(nc));
  for (Eigen::Index c = 0; c < nc; ++c) {
    m.coverage[static_cast<size_t>(c)] = m.matrix.col(c).sum();
    if (!(m.coverage[static_cast<size_t>(c)] > 0.0))
      fail(ErrorKind::DegenerateColumn,
           column_name(m.columns[static_cast<size_t>(c)]) + " captures no isotopologue probability");
  }
  return m;
}

double DeconvolutionResult::total(const std::string& species, int charge) const {
  const auto it = std::find(columns.begin(), columns.end(), ColumnKey{species, charge});
  if (it == columns.end())
    fail(ErrorKind::Config, "no counts column for " + column_name({species, charge}));
  return totals[static_cast<size_t>(it - columns.begin())];
}

DeconvolutionResult deconvolve(const RangedPeakSet& peaks, const OverlapMatrix& m) {
  const auto np = m.matrix.rows();
  const auto nc = m.matrix.cols();
  if (np != static_cast<Eigen::Index>(peaks.peaks.size()))
    fail(ErrorKind::Domain, "deconvolve: matrix does not match the peak list");
  Eigen::VectorXd b(np);
  for (Eigen::Index p = 0; p < np; ++p) {
    b(p) = peaks.peaks[static_cast<size_t>(p)].counts;
    if (!(b(p) >= 0.0)) fail(ErrorKind::Domain, "deconvolve: counts must be >= 0");
  }
  for (Eigen::Index c = 0; c < nc; ++c)
    if (!(m.matrix.col(c).sum() > 0.0))
      fail(ErrorKind::DegenerateColumn, column_name(m.columns[static_cast<size_t>(c)]) +
                                            " captures no isotopologue probability");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m.matrix);
  lu.setThreshold(1e-10);
  if (lu.rank() < nc) {
    const Eigen::MatrixXd kernel = lu.kernel();
    std::string names;
    for (Eigen::Index c = 0; c < nc; ++c)
      if (kernel.row(c).cwiseAbs().maxCoeff() > 1e-9)
        names += (names.empty() ? "" : ", ") + column_name(m.columns[static_cast<size_t>(c)]);
    fail(ErrorKind::Ambiguity, "isotope patterns cannot separate colinear columns: " + names);
  }

  const auto fit = nnls(m.matrix, b);
  if (!fit.converged) fail(ErrorKind::Numerical, "deconvolve: NNLS did not converge");

  DeconvolutionResult r;
  r.columns = m.columns;
  r.model_totals.assign(fit.x.data(), fit.x.data() + nc);
  r.residual_norm = fit.residual_norm;
  r.iterations = fit.iterations;
  r.per_peak.assign(static_cast<size_t>(np), std::vector<double>(static_cast<size_t>(nc), 0.0));
  r.totals.assign(static_cast<size_t>(nc), 0.0);

  for (Eigen::Index p = 0; p < np; ++p) {
    auto& row = r.per_peak[static_cast<size_t>(p)];
    const Eigen::VectorXd pred = m.matrix.row(p).transpose().cwiseProduct(fit.x);
    double sum = pred.sum();
    std::vector<double> share(static_cast<size_t>(nc), 0.0);
    if (sum > 0.0) {
      for (Eigen::Index c = 0; c < nc; ++c) share[static_cast<size_t>(c)] = pred(c) / sum;
    } else {
      // The fit gives this peak nothing: split it evenly among its candidates.
      double n = 0.0;
      for (Eigen::Index c = 0; c < nc; ++c) n += m.matrix(p, c) > 0.0 ? 1.0 : 0.0;
      for (Eigen::Index c = 0; c < nc; ++c)
        share[static_cast<size_t>(c)] = m.matrix(p, c) > 0.0 ? 1.0 / n : 0.0;
    }
    // The last contributing column takes the remainder so each peak is conserved.
    Eigen::Index last = -1;
    double assigned = 0.0;
    for (Eigen::Index c = 0; c < nc; ++c)
      if (share[static_cast<size_t>(c)] > 0.0) last = c;
    for (Eigen::Index c = 0; c < nc; ++c) {
      if (c == last) continue;
      row[static_cast<size_t>(c)] = b(p) * share[static_cast<size_t>(c)];
      assigned += row[static_cast<size_t>(c)];
    }
    if (last >= 0) row[static_cast<size_t>(last)] = std::max(0.0, b(p) - assigned);
    for (Eigen::Index c = 0; c < nc; ++c) r.totals[static_cast<size_t>(c)] += row[static_cast<size_t>(c)];
  }
  return r;
}

DeconvolutionResult ranged_totals(const RangedPeakSet& peaks) {
  DeconvolutionResult r;
  r.columns = mentioned_columns(peaks);
  const size_t nc = r.columns.size();
  r.totals.assign(nc, 0.0);
  for (const auto& p : peaks.peaks) {
    std::vector<double> row(nc, 0.0);
    const ColumnKey key{p.assignments.front().species, p.assignments.front().charge};
    const auto c = static_cast<size_t>(std::find(r.columns.begin(), r.columns.end(), key) - r.columns.begin());
    row[c] = p.counts;
    r.totals[c] += p.counts;
    r.per_peak.push_back(std::move(row));
  }
  r.model_totals = r.totals;
  return r;
}

CsrEstimate csr_from_counts(const std::string& species, double n_low, double n_high) {
  if (!(n_low >= 0.0) || !(n_high >= 0.0)) fail(ErrorKind::Domain, "CSR counts must be >= 0");
  const double n = n_low + n_high;
  if (!(n > 0.0)) fail(ErrorKind::UndefinedCsr, species + ": no counts in either charge state");
  CsrEstimate c;
  c.species = species;
  c.n_low = n_low;
  c.n_high = n_high;
  c.value = n_high / n;
  c.two_sigma = 2.0 * std::sqrt(c.value * (1.0 - c.value) / n);
  return c;
}

CsrEstimate compute_csr(const DeconvolutionResult& decon, const std::string& species,
                        std::pair<int, int> charges) {
  return csr_from_counts(species, decon.total(species, charges.first),
                         decon.total(species, charges.second));
}

std::vector<double> window_sums(const std::vector<std::pair<double, double>>& histogram,
                                const std::vector<double>& centres, double half_width_Da) {
  if (!(half_width_Da > 0.0)) fail(ErrorKind::Config, "ranging window must be > 0");
  std::vector<double> out;
  out.reserve(centres.size());
  for (double c : centres) {
    double s = 0.0;
    for (const auto& [mz, n] : histogram)
      if (std::abs(mz - c) <= half_width_Da) s += n;
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<double, double>> load_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open histogram " + path.string());
  std::vector<std::pair<double, double>> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#' || text.rfind("mz_Da", 0) == 0) continue;
    const auto c = text.find(',');
    if (c == std::string::npos) fail(ErrorKind::Config, "line " + std::to_string(line) + ": expected mz_Da,counts");
    out.emplace_back(parse_number(trim(text.substr(0, c)), "m/z", line),
                     parse_number(trim(text.substr(c + 1)), "counts", line));
  }
  return out;
}

nlohmann::json to_json(const DeconvolutionResult& r, const RangedPeakSet& peaks) {
  nlohmann::json totals = nlohmann::json::array();
  for (size_t c = 0; c < r.columns.size(); ++c)
    totals.push_back({{"species", r.columns[c].first},
                      {"charge", r.columns[c].second},
                      {"total", r.totals[c]},
                      {"model_total", r.model_totals[c]}});
  nlohmann::json per_peak = nlohmann::json::array();
  for (size_t p = 0; p < r.per_peak.size(); ++p) {
    nlohmann::json contrib = nlohmann::json::object();
    for (size_t c = 0; c < r.columns.size(); ++c)
      if (r.per_peak[p][c] != 0.0) contrib[column_name(r.columns[c])] = r.per_peak[p][c];
    per_peak.push_back({{"mz_Da", peaks.peaks[p].mz_Da},
                        {"counts", peaks.peaks[p].counts},
                        {"contributors", contrib}});
  }
  return {{"totals", totals},
          {"peaks", per_peak},
          {"residual_norm", r.residual_norm},
          {"iterations", r.iterations}};
}

nlohmann::json to_json(const CsrEstimate& c) {
  return {{"species", c.species},
          {"value", c.value},
          {"two_sigma", c.two_sigma},
          {"n_low", c.n_low},
          {"n_high", c.n_high}};
}

}  // namespace pfikit::spectrum
