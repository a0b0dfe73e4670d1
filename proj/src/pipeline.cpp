#include "pfikit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "pfikit/assets.hpp"
#include "pfikit/error.hpp"
#include "pfikit/units.hpp"

namespace pfikit::pipeline {

using spectrum::ColumnKey;
using spectrum::column_name;

FieldInterval estimate_field(const spectrum::CsrEstimate& reference,
                             const curves::KinghamCurve& curve) {
  const auto est = curves::csr_to_field(curve, reference.value, reference.two_sigma);
  FieldInterval f;
  f.value = est.field;
  f.low = est.low;
  f.high = est.high;
  f.clamped = est.clamped;
  f.source = "CSR " + std::to_string(reference.value) + " of " + reference.species +
             " on its curve";
  return f;
}

double kellogg_field(double F0_Vnm, double V, double V0) {
  if (!(V0 > 0.0)) fail(ErrorKind::Domain, "kellogg_field: V0 must be > 0");
  if (!(F0_Vnm > 0.0)) fail(ErrorKind::Domain, "kellogg_field: F0 must be > 0");
  if (!(V >= 0.0)) fail(ErrorKind::Domain, "kellogg_field: V must be >= 0");
  return F0_Vnm * V / V0;
}

double PredictedFractions::fraction(int charge) const {
  if (charge < 1 || charge > static_cast<int>(fractions.size())) return 0.0;
  return fractions[static_cast<size_t>(charge - 1)];
}

double PredictedFractions::csr(int low, int high) const {
  const double a = fraction(low), b = fraction(high);
  if (!(a + b > 0.0)) fail(ErrorKind::UndefinedCsr, species + ": both predicted states are empty");
  return b / (a + b);
}

PredictedFractions fractions_from_csr(const std::string& species, double r) {
  if (!(r >= 0.0 && r <= 1.0)) fail(ErrorKind::Config, species + ": predicted CSR must lie in [0, 1]");
  return {species, {1.0 - r, r}, "injected CSR"};
}

namespace {

Flag make_flag(std::string code, std::string detail, nlohmann::json data) {
  return {std::move(code), std::move(detail), std::move(data)};
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

OverlapResolution resolve_overlap(const OverlapCase& c, const PredictedFractions& hidden_species) {
  if (!(c.target_counts >= 0.0) || !(c.anchor_counts >= 0.0))
    fail(ErrorKind::Domain, c.name + ": peak counts must be >= 0");
  if (hidden_species.species != c.hidden.first)
    fail(ErrorKind::Config, c.name + ": prediction for " + hidden_species.species +
                                " does not match the hidden contributor " + c.hidden.first);
  OverlapResolution r;
  r.input = c;
  const double f_hidden = hidden_species.fraction(c.hidden.second);
  const double f_anchor = hidden_species.fraction(c.anchor_charge);

  if (f_hidden > 0.0 && f_anchor <= 0.0) {
    // The anchor state is predicted empty: nothing of the hidden species can
    // show up elsewhere, so the whole target peak is taken as hidden.
    r.ratio = std::numeric_limits<double>::infinity();
    r.predicted_hidden = c.target_counts;
    r.hidden = c.target_counts;
    r.remainder = 0.0;
    r.flags.push_back(make_flag(
        "saturated_fraction",
        c.name + ": predicted " + column_name({c.hidden.first, c.anchor_charge}) +
            " fraction is 0, all " + num(c.target_counts) + " counts assigned to " +
            column_name(c.hidden),
        {{"case", c.name}, {"f_hidden", f_hidden}, {"f_anchor", f_anchor},
         {"anchor_counts", c.anchor_counts}, {"target_counts", c.target_counts}}));
    return r;
  }

  r.ratio = f_hidden > 0.0 ? f_hidden / f_anchor : 0.0;
  r.predicted_hidden = c.anchor_counts * r.ratio;
  const double raw_remainder = c.target_counts - r.predicted_hidden;
  if (raw_remainder < 0.0) {
    r.deficit = -raw_remainder;
    r.hidden = c.target_counts;
    r.remainder = 0.0;
    r.flags.push_back(make_flag(
        "infeasible_overlap",
        c.name + ": " + num(c.anchor_counts) + " x " + num(r.ratio) + " = " +
            num(r.predicted_hidden) + " predicted " + column_name(c.hidden) + " counts exceed the " +
            num(c.target_counts) + " counts at " + num(c.target_mz) + " Da (deficit " +
            num(r.deficit) + ")",
        {{"case", c.name}, {"predicted_hidden", r.predicted_hidden},
         {"target_counts", c.target_counts}, {"deficit", r.deficit}}));
  } else {
    r.hidden = r.predicted_hidden;
    r.remainder = raw_remainder;
  }
  return r;
}

Composition composition(const std::map<ColumnKey, double>& counts, const CompositionSpec& spec) {
  Composition c;
  for (const auto& [key, n] : counts) {
    const auto [element, k] = spectrum::parse_cluster(key.first);
    c.total_atoms += n * k;
    if (element == spec.element) c.element_atoms += n * k;
  }
  c.total_atoms += spec.other_atoms;
  if (!(c.total_atoms > 0.0)) fail(ErrorKind::Config, "composition: no atoms counted");
  c.at_pct = 100.0 * c.element_atoms / c.total_atoms;
  return c;
}

std::vector<Flag> audit_consistency(const std::vector<OverlapResolution>& cases,
                                    const SpectrumFacts& facts,
                                    const std::map<std::string, PredictedFractions>& predicted,
                                    const std::optional<CompositionSpec>& comp,
                                    const AuditThresholds& th) {
  std::vector<Flag> flags;

  if (comp && comp->nominal_at_pct) {
    const auto c = composition(facts.counts, *comp);
    if (c.at_pct > *comp->nominal_at_pct + th.composition_tolerance_pct)
      flags.push_back(make_flag(
          "composition_exceeds_nominal",
          comp->element + " content " + num(c.at_pct) + " at.% after overlap resolution exceeds the nominal " +
              num(*comp->nominal_at_pct) + " at.% (" + num(c.element_atoms) + " of " +
              num(c.total_atoms) + " atoms)",
          {{"element", comp->element}, {"at_pct", c.at_pct},
           {"nominal_at_pct", *comp->nominal_at_pct}, {"element_atoms", c.element_atoms},
           {"total_atoms", c.total_atoms}}));
  }

  for (const auto& r : cases)
    if (r.deficit > 0.0)
      flags.push_back(make_flag(
          "predicted_counts_exceed_peak",
          r.input.name + ": predicted " + column_name(r.input.hidden) + " = " +
              num(r.input.anchor_counts) + " x " + num(r.ratio) + " = " + num(r.predicted_hidden) +
              " counts, but the " + num(r.input.target_mz) + " Da peak holds only " +
              num(r.input.target_counts),
          {{"case", r.input.name}, {"column", column_name(r.input.hidden)},
           {"anchor_counts", r.input.anchor_counts}, {"ratio", r.ratio},
           {"predicted", r.predicted_hidden}, {"available", r.input.target_counts}}));

  for (const auto& [key, n] : facts.counts) {
    if (!(n > 0.0)) continue;
    const auto it = predicted.find(key.first);
    if (it == predicted.end()) continue;
    const double f = it->second.fraction(key.second);
    if (f < th.unexpected_fraction)
      flags.push_back(make_flag(
          "unexpected_charge_state_present",
          column_name(key) + " observed with " + num(n) + " counts but its predicted fraction is " +
              num(f) + " (< " + num(th.unexpected_fraction) + ")",
          {{"column", column_name(key)}, {"counts", n}, {"predicted_fraction", f},
           {"threshold", th.unexpected_fraction}}));
  }

  std::set<ColumnKey> ranged;
  std::set<ColumnKey> shared;
  for (const auto& p : facts.peaks.peaks)
    for (const auto& a : p.assignments) {
      ranged.insert({a.species, a.charge});
      if (p.assignments.size() > 1) shared.insert({a.species, a.charge});
    }

  for (const auto& [species, pf] : predicted) {
    bool observed = false;
    for (const auto& key : ranged) observed = observed || key.first == species;
    if (!observed) continue;
    for (int q = 1; q <= static_cast<int>(pf.fractions.size()); ++q)
      if (pf.fraction(q) >= th.expected_fraction && !ranged.count({species, q}))
        flags.push_back(make_flag(
            "missing_expected_peak",
            column_name({species, q}) + " predicted at fraction " + num(pf.fraction(q)) +
                " but no peak is ranged for it",
            {{"column", column_name({species, q})}, {"predicted_fraction", pf.fraction(q)}}));
  }

  for (const auto& [species, pf] : predicted) {
    const ColumnKey lo{species, 1}, hi{species, 2};
    if (!ranged.count(lo) || !ranged.count(hi) || shared.count(lo) || shared.count(hi)) continue;
    const auto ilo = facts.counts.find(lo), ihi = facts.counts.find(hi);
    const double n1 = ilo == facts.counts.end() ? 0.0 : ilo->second;
    const double n2 = ihi == facts.counts.end() ? 0.0 : ihi->second;
    if (!(n1 + n2 > 0.0) || pf.fraction(1) + pf.fraction(2) <= 0.0) continue;
    const auto obs = spectrum::csr_from_counts(species, n1, n2);
    const double pred = pf.csr(1, 2);
    const double tol = std::max(th.csr_tolerance, obs.two_sigma);
    if (std::abs(obs.value - pred) > tol)
      flags.push_back(make_flag(
          "csr_theory_mismatch",
          species + " peaks are overlap-free, yet the observed CSR " + num(obs.value) + " +- " +
              num(obs.two_sigma) + " disagrees with the predicted " + num(pred),
          {{"species", species}, {"observed", obs.value}, {"two_sigma", obs.two_sigma},
           {"predicted", pred}, {"tolerance", tol}}));
  }
  return flags;
}

namespace {

std::filesystem::path locate(const std::string& name, const std::filesystem::path& base) {
  const std::filesystem::path p(name);
  if (p.is_absolute()) return p;
  if (std::filesystem::exists(base / p)) return base / p;
  return resolve_asset(name);
}

SpeciesParams species_ref(const std::string& spec, const std::filesystem::path& base) {
  std::string file = spec, name;
  const auto json_pos = spec.find(".json");
  if (json_pos != std::string::npos) {
    file = spec.substr(0, json_pos + 5);
    if (json_pos + 5 < spec.size()) {
      if (spec[json_pos + 5] != ':') fail(ErrorKind::Config, "bad species reference '" + spec + "'");
      name = spec.substr(json_pos + 6);
    }
    const auto path = locate(file, base);
    auto list = resolve_species(path.string() + (name.empty() ? "" : ":" + name));
    if (list.size() != 1) fail(ErrorKind::Config, "species reference '" + spec + "' is not unique");
    return list.front();
  }
  auto list = resolve_species(spec);
  if (list.size() != 1) fail(ErrorKind::Config, "species reference '" + spec + "' is not unique");
  return list.front();
}

tunneling::ZModel zmodel_ref(const nlohmann::json& j, const std::filesystem::path& base) {
  if (j.is_null()) return {};
  if (j.is_string()) return tunneling::load_zmodel(locate(j.get<std::string>(), base));
  return tunneling::zmodel_from_json(j);
}

ColumnKey parse_column(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorKind::Config, "contributor '" + text + "' is not Species:charge");
  ColumnKey k{text.substr(0, colon), 0};
  try {
    k.second = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "contributor '" + text + "' has a bad charge");
  }
  spectrum::parse_cluster(k.first);
  if (k.second < 1) fail(ErrorKind::Config, "contributor '" + text + "' has a bad charge");
  return k;
}

spectrum::RangedPeakSet load_peaks(const nlohmann::json& config, const std::filesystem::path& base) {
  const auto& p = config.at("peaks");
  if (p.is_string()) return spectrum::load_peak_csv(locate(p.get<std::string>(), base));
  std::ostringstream csv;
  for (const auto& row : p) csv << row.get<std::string>() << '\n';
  std::istringstream in(csv.str());
  return spectrum::parse_peak_csv(in);
}

struct Parsed {
  spectrum::RangedPeakSet peaks;
  std::map<ColumnKey, double> ranged;
  std::vector<OverlapCase> cases;
  std::vector<size_t> target_index;
  std::optional<CompositionSpec> comp;
  AuditThresholds th;
};

Parsed parse(const nlohmann::json& config, const std::filesystem::path& base) {
  Parsed out;
  out.peaks = load_peaks(config, base);
  const auto ranged = spectrum::ranged_totals(out.peaks);
  for (size_t c = 0; c < ranged.columns.size(); ++c) out.ranged[ranged.columns[c]] = ranged.totals[c];

  for (const auto& jc : config.value("cases", nlohmann::json::array())) {
    OverlapCase c;
    c.target_mz = jc.at("target_mz").get<double>();
    c.name = jc.value("name", num(c.target_mz) + " Da");
    c.visible = parse_column(jc.at("visible").get<std::string>());
    c.hidden = parse_column(jc.at("hidden").get<std::string>());
    c.anchor_charge = jc.at("anchor_charge").get<int>();
    if (c.anchor_charge == c.hidden.second || c.anchor_charge < 1)
      fail(ErrorKind::Config, c.name + ": anchor charge must differ from the hidden charge");

    size_t idx = out.peaks.peaks.size();
    for (size_t i = 0; i < out.peaks.peaks.size(); ++i)
      if (std::abs(out.peaks.peaks[i].mz_Da - c.target_mz) <= 0.3) idx = i;
    if (idx == out.peaks.peaks.size())
      fail(ErrorKind::Config, c.name + ": no ranged peak at " + num(c.target_mz) + " Da");
    const auto& peak = out.peaks.peaks[idx];
    auto lists = [&](const ColumnKey& k) {
      return std::any_of(peak.assignments.begin(), peak.assignments.end(),
                         [&](const spectrum::Assignment& a) { return a.species == k.first && a.charge == k.second; });
    };
    if (!lists(c.visible) || !lists(c.hidden))
      fail(ErrorKind::Config, c.name + ": both contributors must be assigned to the " +
                                  num(peak.mz_Da) + " Da peak");
    c.target_counts = peak.counts;

    const ColumnKey anchor{c.hidden.first, c.anchor_charge};
    for (const auto& p : out.peaks.peaks)
      for (const auto& a : p.assignments)
        if (a.species == anchor.first && a.charge == anchor.second && p.assignments.size() > 1)
          fail(ErrorKind::Config, c.name + ": anchor " + column_name(anchor) +
                                      " shares the " + num(p.mz_Da) + " Da peak; it must be overlap-free");
    const auto it = out.ranged.find(anchor);
    c.anchor_counts = it == out.ranged.end() ? 0.0 : it->second;
    out.cases.push_back(c);
    out.target_index.push_back(idx);
  }

  if (config.contains("composition")) {
    const auto& j = config.at("composition");
    CompositionSpec s;
    s.element = j.at("element").get<std::string>();
    if (j.contains("nominal_at_pct")) s.nominal_at_pct = j.at("nominal_at_pct").get<double>();
    s.other_atoms = j.value("other_atoms", 0.0);
    if (s.other_atoms < 0.0) fail(ErrorKind::Config, "composition: other_atoms must be >= 0");
    out.comp = s;
  }
  if (config.contains("thresholds")) {
    const auto& j = config.at("thresholds");
    out.th.unexpected_fraction = j.value("unexpected_fraction", out.th.unexpected_fraction);
    out.th.expected_fraction = j.value("expected_fraction", out.th.expected_fraction);
    out.th.csr_tolerance = j.value("csr_tolerance", out.th.csr_tolerance);
    out.th.composition_tolerance_pct = j.value("composition_tolerance_pct", out.th.composition_tolerance_pct);
  }
  return out;
}

FieldInterval field_from_config(const nlohmann::json& j, const std::map<ColumnKey, double>& ranged,
                                const std::filesystem::path& base, const Environment& env) {
  FieldInterval f;
  if (j.contains("value")) {
    f.value = f.low = f.high = j.at("value").get<double>();
    if (!(f.value > 0.0)) fail(ErrorKind::Config, "field value must be > 0");
    f.source = j.value("note", std::string("injected"));
    return f;
  }
  if (j.contains("kellogg")) {
    const auto& k = j.at("kellogg");
    f.value = f.low = f.high =
        kellogg_field(k.at("F0").get<double>(), k.at("V").get<double>(), k.at("V0").get<double>());
    f.source = "Kellogg voltage scaling";
    return f;
  }
  const auto& ref = j.at("reference");
  const auto species = species_ref(ref.at("species").get<std::string>(), base);
  const auto z = zmodel_ref(ref.value("zmodel", nlohmann::json()), base);
  const auto grid = curves::parse_grid(ref.value("grid", std::string("5:45:0.1")));
  const auto curve = curves::generate_curve(species, env, z, grid.points());
  spectrum::CsrEstimate csr;
  if (ref.contains("csr")) {
    csr.species = species.name;
    csr.value = ref.at("csr").get<double>();
    if (ref.contains("counts")) {
      const double n = ref.at("counts").get<double>();
      csr = spectrum::csr_from_counts(species.name, n * (1.0 - csr.value), n * csr.value);
    }
  } else {
    const std::string label = ref.value("peak_species", species.name);
    const auto lo = ranged.find({label, 1}), hi = ranged.find({label, 2});
    csr = spectrum::csr_from_counts(label, lo == ranged.end() ? 0.0 : lo->second,
                                    hi == ranged.end() ? 0.0 : hi->second);
  }
  return estimate_field(csr, curve);
}

PredictedFractions prediction_from_config(const std::string& species, const nlohmann::json& j,
                                          double field, const std::filesystem::path& base,
                                          const Environment& env) {
  if (j.contains("csr")) {
    auto p = fractions_from_csr(species, j.at("csr").get<double>());
    p.source = j.value("note", p.source);
    return p;
  }
  if (j.contains("fractions")) {
    PredictedFractions p{species, j.at("fractions").get<std::vector<double>>(),
                         j.value("note", std::string("injected fractions"))};
    double sum = 0.0;
    for (double f : p.fractions) {
      if (!(f >= 0.0)) fail(ErrorKind::Config, species + ": predicted fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-6) fail(ErrorKind::Config, species + ": predicted fractions must sum to 1");
    return p;
  }
  const auto& m = j.at("model");
  const auto s = species_ref(m.at("species").get<std::string>(), base);
  const auto z = zmodel_ref(m.value("zmodel", nlohmann::json()), base);
  const int max_charge = m.value("max_charge", tunneling::default_max_charge(s));
  auto cf = tunneling::charge_fractions(s, env, z, field, max_charge);
  return {species, cf.fractions, "Kingham model (" + s.name + ") at " + num(field) + " V/nm"};
}

}  // namespace

void validate_config(const nlohmann::json& config, const std::filesystem::path& base) {
  try {
    auto p = parse(config, base);
    const auto& field = config.at("field");
    if (field.contains("reference")) {
      species_ref(field.at("reference").at("species").get<std::string>(), base);
      zmodel_ref(field.at("reference").value("zmodel", nlohmann::json()), base);
    } else if (!field.contains("value") && !field.contains("kellogg")) {
      fail(ErrorKind::Config, "field needs value, kellogg or reference");
    }
    for (const auto& c : p.cases)
      if (!config.at("predicted").contains(c.hidden.first))
        fail(ErrorKind::Config, c.name + ": no prediction for " + c.hidden.first);
    for (const auto& [name, j] : config.at("predicted").items())
      if (j.contains("model")) {
        species_ref(j.at("model").at("species").get<std::string>(), base);
        zmodel_ref(j.at("model").value("zmodel", nlohmann::json()), base);
      }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("pipeline config: ") + e.what());
  }
}

ResolutionReport run_pipeline(const nlohmann::json& config, const std::filesystem::path& base,
                              const Environment& env) {
  validate(env);
  ResolutionReport rep;
  try {
    rep.config = config;
    rep.name = config.value("name", std::string("pipeline"));
    auto p = parse(config, base);
    rep.ranged_counts = p.ranged;
    rep.composition_spec = p.comp;

    rep.field = field_from_config(config.at("field"), p.ranged, base, env);
    for (const auto& [name, j] : config.at("predicted").items())
      rep.predicted[name] = prediction_from_config(name, j, rep.field.value, base, env);

    rep.resolved_counts = p.ranged;
    for (size_t i = 0; i < p.cases.size(); ++i) {
      const auto& c = p.cases[i];
      const auto it = rep.predicted.find(c.hidden.first);
      if (it == rep.predicted.end()) fail(ErrorKind::Config, c.name + ": no prediction for " + c.hidden.first);
      auto r = resolve_overlap(c, it->second);
      // Undo the naive ranging of the target peak, then apply the split.
      const auto& first = p.peaks.peaks[p.target_index[i]].assignments.front();
      rep.resolved_counts[{first.species, first.charge}] -= c.target_counts;
      rep.resolved_counts[c.visible] += r.remainder;
      rep.resolved_counts[c.hidden] += r.hidden;
      rep.cases.push_back(std::move(r));
    }
    for (auto& [key, n] : rep.resolved_counts)
      if (std::abs(n) < 1e-9) n = 0.0;

    if (p.comp) {
      rep.original_composition = composition(rep.ranged_counts, *p.comp);
      rep.revised_composition = composition(rep.resolved_counts, *p.comp);
    }
    SpectrumFacts facts{p.peaks, rep.resolved_counts};
    rep.flags = audit_consistency(rep.cases, facts, rep.predicted, p.comp, p.th);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("pipeline config: ") + e.what());
  }
  return rep;
}

ResolutionReport run_pipeline_file(const std::filesystem::path& path, const Environment& env) {
  return run_pipeline(read_json(path), path.parent_path(), env);
}

namespace {

nlohmann::json flag_json(const Flag& f) {
  return {{"code", f.code}, {"detail", f.detail}, {"data", f.data}};
}

nlohmann::json counts_json(const std::map<ColumnKey, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[column_name(k)] = v;
  return j;
}

nlohmann::json comp_json(const Composition& c) {
  return {{"element_atoms", c.element_atoms}, {"total_atoms", c.total_atoms}, {"at_pct", c.at_pct}};
}

}  // namespace

nlohmann::json to_json(const ResolutionReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["inputs"] = r.config;
  j["field"] = {{"value_Vnm", r.field.value}, {"low_Vnm", r.field.low}, {"high_Vnm", r.field.high},
                {"clamped", r.field.clamped}, {"source", r.field.source}};
  auto pred = nlohmann::json::object();
  for (const auto& [name, p] : r.predicted) {
    nlohmann::json e = {{"fractions", p.fractions}, {"source", p.source}};
    if (p.fraction(1) + p.fraction(2) > 0.0) e["csr"] = p.csr(1, 2);
    pred[name] = e;
  }
  j["predicted"] = pred;
  auto cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    auto flags = nlohmann::json::array();
    for (const auto& f : c.flags) flags.push_back(flag_json(f));
    cases.push_back({{"name", c.input.name},
                     {"target_mz", c.input.target_mz},
                     {"target_counts", c.input.target_counts},
                     {"visible", column_name(c.input.visible)},
                     {"hidden", column_name(c.input.hidden)},
                     {"anchor", column_name({c.input.hidden.first, c.input.anchor_charge})},
                     {"anchor_counts", c.input.anchor_counts},
                     {"ratio", std::isfinite(c.ratio) ? nlohmann::json(c.ratio) : nlohmann::json("inf")},
                     {"predicted_hidden", c.predicted_hidden},
                     {"hidden_counts", c.hidden},
                     {"remainder", c.remainder},
                     {"deficit", c.deficit},
                     {"flags", flags}});
  }
  j["cases"] = cases;
  j["ranged_counts"] = counts_json(r.ranged_counts);
  j["resolved_counts"] = counts_json(r.resolved_counts);
  if (r.composition_spec) {
    nlohmann::json c = {{"element", r.composition_spec->element}};
    if (r.composition_spec->nominal_at_pct) c["nominal_at_pct"] = *r.composition_spec->nominal_at_pct;
    if (r.original_composition) c["original"] = comp_json(*r.original_composition);
    if (r.revised_composition) c["revised"] = comp_json(*r.revised_composition);
    j["composition"] = c;
  }
  auto flags = nlohmann::json::array();
  for (const auto& f : r.flags) flags.push_back(flag_json(f));
  j["flags"] = flags;
  return j;
}

std::string to_text(const ResolutionReport& r) {
  std::ostringstream s;
  s << "Overlap resolution: " << r.name << "\n\n";
  s << "Field: " << num(r.field.value) << " V/nm";
  if (r.field.high > r.field.low) s << " [" << num(r.field.low) << ", " << num(r.field.high) << "]";
  s << " (" << r.field.source << ")\n\nPredicted charge-state fractions:\n";
  for (const auto& [name, p] : r.predicted) {
    s << "  " << name << ":";
    for (size_t i = 0; i < p.fractions.size(); ++i) s << "  f" << i + 1 << "=" << num(p.fractions[i]);
    s << "  (" << p.source << ")\n";
  }
  s << "\nOverlap cases:\n";
  for (const auto& c : r.cases) {
    s << "  " << c.input.name << ": " << num(c.input.target_counts) << " counts at "
      << num(c.input.target_mz) << " Da -> " << column_name(c.input.hidden) << " "
      << num(c.hidden) << ", " << column_name(c.input.visible) << " " << num(c.remainder) << "\n";
    for (const auto& f : c.flags) s << "    [" << f.code << "] " << f.detail << "\n";
  }
  if (r.original_composition && r.revised_composition) {
    s << "\n" << r.composition_spec->element << " content: " << num(r.original_composition->at_pct)
      << " at.% as ranged, " << num(r.revised_composition->at_pct) << " at.% after resolution";
    if (r.composition_spec->nominal_at_pct)
      s << " (nominal " << num(*r.composition_spec->nominal_at_pct) << " at.%)";
    s << "\n";
  }
  s << "\nConsistency audit: " << r.flags.size() << " flag(s)\n";
  for (const auto& f : r.flags) s << "  [" << f.code << "] " << f.detail << "\n";
  return s.str();
}

}  // namespace pfikit::pipeline
