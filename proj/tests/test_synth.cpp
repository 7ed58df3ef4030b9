#include <doctest.h>

#include <cmath>
#include <set>

#include "riskbn/error.hpp"
#include "riskbn/pipeline/csv.hpp"
#include "riskbn/stats/association.hpp"
#include "riskbn/synth/generator.hpp"
#include "riskbn/synth/random.hpp"
#include "support/fixtures.hpp"

using namespace riskbn;
using riskbn::testing::null_generator;
using riskbn::testing::shipped_generator;
using riskbn::testing::shipped_mapping;
using riskbn::testing::shipped_model;

TEST_CASE("rng streams are fixed") {
  // First outputs of mt19937_64 with the default seed are fixed by the standard.
  Rng a(5489);
  for (int i = 0; i < 9999; ++i) a.next();
  CHECK(a.next() == 9981545732273789042ULL);
  Rng b(1), c(1);
  for (int i = 0; i < 100; ++i) {
    const double u = b.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == c.uniform());
    CHECK(b.below(7) < 7);
    c.below(7);
  }
  std::vector<int> v{1, 2, 3, 4, 5};
  Rng s(3);
  s.shuffle(v);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 5);
}

TEST_CASE("generate_cohort is deterministic and balanced") {
  const auto& spec = shipped_generator();
  const auto a = generate_cohort(spec, shipped_model());
  CHECK(a.rows.size() == 2242);
  CHECK(a.positives() == 1121);
  CHECK(a == generate_cohort(spec, shipped_model()));
  auto other = spec;
  other.seed += 1;
  CHECK(!(generate_cohort(other, shipped_model()) == a));
  CHECK(a.rows.front().patient_id == "P000001");
}

TEST_CASE("spec validation") {
  auto spec = shipped_generator();
  CHECK(generator_spec_from_json(generator_spec_to_json(spec)).factors.size() == 16);
  spec.factors[0].distribution[0] += 0.5;
  spec.missingness["nope"] = 0.1;
  spec.n_patients = 11;
  try {
    validate_generator_spec(spec, shipped_model());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 3);
  }
  auto raw_spec = shipped_generator();
  raw_spec.missingness["hypertension"] = 0.1;
  CHECK_THROWS_AS(generate_raw(raw_spec, shipped_model(), shipped_mapping()), ConfigurationError);
}

TEST_CASE("null effects give vanishing association") {
  int small = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto cohort = generate_cohort(null_generator(shipped_model(), 5000, static_cast<std::uint64_t>(seed)), shipped_model());
    bool all_small = true;
    for (const auto& r : association_report(cohort).results) all_small &= r.result.cramers_v < 0.05;
    small += all_small;
  }
  CHECK(small >= 18);
}

TEST_CASE("strong binary effect") {
  auto spec = null_generator(shipped_model(), 2000, 4);
  // hypertension: P(present) = 0.5, log-odds 2 when present, intercept -1.
  spec.intercept = -1.0;
  for (auto& f : spec.factors) {
    if (f.name == "hypertension") f.effects = {0.0, 2.0};
  }
  // Analytic V for a 2x2 table with equal rows: |p1 - p0| / 2 / sqrt(q(1-q)).
  const double p0 = 1.0 / (1.0 + std::exp(1.0)), p1 = 1.0 / (1.0 + std::exp(-1.0));
  const double q = (p0 + p1) / 2.0;
  const double v_expected = (p1 - p0) / 2.0 / std::sqrt(q * (1.0 - q));
  CHECK(v_expected > 0.24);
  const auto cohort = generate_cohort(spec, shipped_model());
  const auto t = contingency_table(cohort, cohort.column_index("hypertension"));
  const double v = cramers_v(t).cramers_v;
  CHECK(v > 0.24);
  CHECK(std::abs(v - v_expected) < 0.05);
}

TEST_CASE("planted effect signs show up in prevalence") {
  const auto& model = shipped_model();
  int agree = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto spec = shipped_generator();
    spec.seed = seed;
    const auto cohort = generate_cohort(spec, model);
    const Index c = cohort.column_index("cardiovascular_disease");
    double pos[2] = {0, 0}, n[2] = {0, 0};
    for (const auto& r : cohort.rows) {
      const Index s = r.values[static_cast<std::size_t>(c)];
      n[s] += 1;
      pos[s] += r.label;
    }
    ++total;
    agree += pos[1] / n[1] > pos[0] / n[0];
  }
  CHECK(agree >= total * 95 / 100);
}

TEST_CASE("raw tables reproduce the generated cohort") {
  const auto& spec = shipped_generator();
  const auto fx = generate_raw(spec, shipped_model(), shipped_mapping());
  const auto cohort = build_cohort(fx.raw, shipped_model(), shipped_mapping(), spec.seed);
  CHECK(cohort == fx.cohort);
  CHECK(cohort.positives() * 2 == static_cast<Index>(cohort.rows.size()));
  REQUIRE(!fx.height_conflicts.empty());
  REQUIRE(!fx.single_ecg.empty());
  REQUIRE(!fx.distractors.empty());

  std::map<std::string, const PatientFeatures*> by_id;
  for (const auto& r : cohort.rows) by_id[r.patient_id] = &r;
  const Index height = cohort.column_index("height_group");
  const Index variation = cohort.column_index("pr_variation");
  for (const auto& id : fx.height_conflicts) CHECK(by_id.at(id)->values[static_cast<std::size_t>(height)] == kMissing);
  for (const auto& id : fx.single_ecg) CHECK(by_id.at(id)->values[static_cast<std::size_t>(variation)] == 0);
  for (const auto& id : fx.distractors) CHECK(by_id.count(id) == 0);

  // Byte-identical CSV regeneration.
  CHECK(write_cohort_csv(generate_raw(spec, shipped_model(), shipped_mapping()).cohort) == write_cohort_csv(cohort));
}

TEST_CASE("stripping post-cutoff records changes nothing") {
  auto spec = shipped_generator();
  spec.n_patients = 300;
  const auto fx = generate_raw(spec, shipped_model(), shipped_mapping());
  const auto sel = select_cohort(fx.raw.visits, shipped_mapping().target_prefixes, spec.seed);
  RawTables clean = fx.raw;
  const auto after = [&](const std::string& id, const Date& d) {
    const auto it = sel.cutoffs.find(id);
    return it != sel.cutoffs.end() && !(d < it->second);
  };
  std::erase_if(clean.measurements, [&](const MeasurementRecord& m) { return after(m.patient_id, m.date); });
  std::erase_if(clean.ecg, [&](const EcgRecord& e) { return after(e.patient_id, e.date); });
  // Keep only the target code on and after the cutoff visit.
  for (auto& v : clean.visits) {
    if (!after(v.patient_id, v.date)) continue;
    std::erase_if(v.icd_codes, [&](const std::string& c) { return !matches_prefix(c, shipped_mapping().target_prefixes); });
  }
  CHECK(fx.raw.measurements.size() > clean.measurements.size());
  CHECK(build_cohort(clean, shipped_model(), shipped_mapping(), spec.seed) ==
        build_cohort(fx.raw, shipped_model(), shipped_mapping(), spec.seed));
  CHECK(fx.poisoned.size() == 150);
}

TEST_CASE("target coded at the last of three visits is a positive") {
  const std::vector<VisitRecord> v{{"x", Date::parse("2020-01-01"), {}},
                                   {"x", Date::parse("2020-02-01"), {}},
                                   {"x", Date::parse("2020-03-01"), {"I480"}},
                                   {"y", Date::parse("2020-01-01"), {}},
                                   {"y", Date::parse("2020-02-01"), {}},
                                   {"y", Date::parse("2020-03-01"), {}}};
  const auto sel = select_cohort(v, shipped_mapping().target_prefixes, 0);
  CHECK(sel.positives == std::vector<std::string>{"x"});
  CHECK(sel.negatives == std::vector<std::string>{"y"});
  CHECK_THROWS_AS(select_cohort(std::span(v).first(3), shipped_mapping().target_prefixes, 0), DataError);
}
