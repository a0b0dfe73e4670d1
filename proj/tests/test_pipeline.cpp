#include <doctest.h>

#include <cmath>
#include <limits>

#include "common.hpp"
#include "pfikit/curves.hpp"
#include "pfikit/error.hpp"
#include "pfikit/pipeline.hpp"

using namespace pfikit;
using namespace pfikit::pipeline;
using testing::fixture;

namespace {

OverlapCase case_150(double anchor, double target) {
  OverlapCase c;
  c.name = "150 Da";
  c.target_mz = 149.8432;
  c.target_counts = target;
  c.visible = {"As2", 1};
  c.hidden = {"As4", 2};
  c.anchor_charge = 1;
  c.anchor_counts = anchor;
  return c;
}

std::vector<std::string> codes(const std::vector<Flag>& flags) {
  std::vector<std::string> out;
  for (const auto& f : flags) out.push_back(f.code);
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("Kellogg scaling") {
  CHECK(kellogg_field(35.0, 1000.0, 1000.0) == 35.0);
  CHECK(kellogg_field(27.5, 4200.0, 4200.0) == 27.5);
  CHECK(kellogg_field(35.0, 800.0, 1000.0) == approx(28.0).epsilon(1e-15));
  CHECK(kellogg_field(35.0, 0.0, 1000.0) == 0.0);
  CHECK_THROWS_AS(kellogg_field(35.0, 800.0, 0.0), Error);
  CHECK_THROWS_AS(kellogg_field(35.0, -1.0, 1000.0), Error);
}

TEST_CASE("predicted fractions") {
  const auto p = fractions_from_csr("As4", 0.2);
  CHECK(p.fraction(1) == approx(0.8));
  CHECK(p.fraction(2) == approx(0.2));
  CHECK(p.fraction(3) == 0.0);
  CHECK(p.csr() == approx(0.2));
  CHECK_THROWS_AS(fractions_from_csr("As4", 1.2), Error);
}

TEST_CASE("r = 0 leaves the target with the visible contributor") {
  const auto r = resolve_overlap(case_150(1000, 950), fractions_from_csr("As4", 0.0));
  CHECK(r.hidden == 0.0);
  CHECK(r.remainder == 950.0);
  CHECK(r.flags.empty());
}

TEST_CASE("synthetic r = 0.2") {
  const auto r = resolve_overlap(case_150(1000, 950), fractions_from_csr("As4", 0.2));
  CHECK(r.ratio == approx(0.25).epsilon(1e-15));
  CHECK(r.hidden == approx(250.0).epsilon(1e-12));
  CHECK(r.remainder == approx(700.0).epsilon(1e-12));
  CHECK(r.hidden + r.remainder == 950.0);
  CHECK(r.flags.empty());
}

TEST_CASE("saturated fraction sends the whole peak to the hidden contributor") {
  const auto r = resolve_overlap(case_150(0, 14666), fractions_from_csr("As4", 1.0));
  CHECK(r.hidden == 14666.0);
  CHECK(r.remainder == 0.0);
  CHECK(std::isinf(r.ratio));
  REQUIRE(r.flags.size() == 1);
  CHECK(r.flags[0].code == "saturated_fraction");
  // with a non-empty anchor as well
  const auto s = resolve_overlap(case_150(30, 14666), fractions_from_csr("As4", 1.0));
  CHECK(s.hidden == 14666.0);
  CHECK(codes(s.flags) == std::vector<std::string>{"saturated_fraction"});
}

TEST_CASE("infeasible overlap clamps and reports the deficit") {
  const auto r = resolve_overlap(case_150(1000, 100), fractions_from_csr("As4", 0.5));
  CHECK(r.predicted_hidden == 1000.0);
  CHECK(r.hidden == 100.0);
  CHECK(r.remainder == 0.0);
  CHECK(r.deficit == 900.0);
  REQUIRE(r.flags.size() == 1);
  CHECK(r.flags[0].code == "infeasible_overlap");
  CHECK(r.flags[0].data.at("deficit").get<double>() == 900.0);
}

TEST_CASE("hidden share grows with r") {
  double prev = -1.0;
  for (double r = 0.0; r < 1.0; r += 0.01) {
    const auto res = resolve_overlap(case_150(1000, 5000), fractions_from_csr("As4", r));
    CHECK(res.hidden >= prev);
    if (res.flags.empty()) CHECK(res.hidden + res.remainder == approx(5000.0).epsilon(1e-15));
    prev = res.hidden;
  }
}

TEST_CASE("mismatched prediction is a configuration error") {
  CHECK_THROWS_AS(resolve_overlap(case_150(1000, 950), fractions_from_csr("As2", 0.2)), Error);
  CHECK_THROWS_AS(resolve_overlap(case_150(-1, 950), fractions_from_csr("As4", 0.2)), Error);
}

TEST_CASE("field estimate from a reference CSR") {
  const auto si = testing::species("Si");
  const auto curve = curves::generate_curve(si, Environment{}, tunneling::ZModel{},
                                            curves::FieldGrid{5, 45, 0.1}.points());
  const double f50 = curves::find_f50(si, Environment{}, tunneling::ZModel{}).f50;
  spectrum::CsrEstimate half{"Si", 0.5, 0.0, 1000, 1000};
  const auto a = estimate_field(half, curve);
  CHECK(std::abs(a.value - f50) < 1e-3);
  CHECK(a.low == a.value);
  CHECK(a.high == a.value);
  const auto b = estimate_field(spectrum::csr_from_counts("Si", 10000, 10000), curve);
  CHECK(b.low < b.value);
  CHECK(b.value < b.high);
}

TEST_CASE("synthetic fixture end to end") {
  const auto rep = run_pipeline_file(fixture("pipeline/synthetic_r02.json"));
  REQUIRE(rep.cases.size() == 1);
  CHECK(rep.cases[0].hidden == approx(250.0));
  CHECK(rep.cases[0].remainder == approx(700.0));
  CHECK(rep.flags.empty());
}

TEST_CASE("consistent fixture raises no flags") {
  const auto rep = run_pipeline_file(fixture("pipeline/consistent.json"));
  CHECK(rep.flags.empty());
  for (const auto& c : rep.cases) CHECK(c.flags.empty());
  CHECK(std::abs(rep.field.value - 19.6) <= 0.4);
}

TEST_CASE("As overlap fixture reproduces the four inconsistencies") {
  const auto rep = run_pipeline_file(fixture("pipeline/as_ingaas.json"));
  CHECK(codes(rep.flags) == std::vector<std::string>{"composition_exceeds_nominal",
                                                     "predicted_counts_exceed_peak",
                                                     "unexpected_charge_state_present",
                                                     "csr_theory_mismatch"});
  REQUIRE(rep.original_composition);
  REQUIRE(rep.revised_composition);
  CHECK(std::abs(rep.original_composition->at_pct - 46.5) < 0.05);
  CHECK(std::round(rep.revised_composition->at_pct) == 53.0);
  // 150 Da goes entirely to As4^2+
  CHECK(rep.cases[0].hidden == rep.cases[0].input.target_counts);
  // the As+ prediction at 75 Da overshoots the 55482 counts
  CHECK(rep.cases[1].input.target_counts == 55482.0);
  CHECK(rep.cases[1].predicted_hidden > 55482.0);
  CHECK(rep.flags[2].detail.find("As^3+") != std::string::npos);
  CHECK(rep.flags[3].detail.find("As3") != std::string::npos);
}

TEST_CASE("audit is deterministic") {
  const auto a = to_json(run_pipeline_file(fixture("pipeline/as_ingaas.json")));
  const auto b = to_json(run_pipeline_file(fixture("pipeline/as_ingaas.json")));
  CHECK(a == b);
}

TEST_CASE("config validation") {
  const auto base = fixture("pipeline");
  auto cfg = nlohmann::json::parse(R"({"peaks": "as_ingaas_peaks.csv", "field": {"value": 21.3},
    "predicted": {"As4": {"csr": 1.0}},
    "cases": [{"name": "x", "target_mz": 149.8432, "visible": "As2:1", "hidden": "As4:2", "anchor_charge": 1}]})");
  CHECK_NOTHROW(validate_config(cfg, base));
  auto missing = cfg;
  missing.erase("field");
  CHECK_THROWS_AS(validate_config(missing, base), Error);
  auto badref = cfg;
  badref["cases"][0]["hidden"] = "As4-2";
  CHECK_THROWS_AS(validate_config(badref, base), Error);
  auto nopred = cfg;
  nopred["predicted"] = nlohmann::json::object();
  CHECK_THROWS_AS(run_pipeline(nopred, base), Error);
}

}  // TEST_SUITE
