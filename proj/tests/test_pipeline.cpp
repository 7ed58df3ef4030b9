#include <doctest.h>

#include <random>

#include "riskbn/error.hpp"
#include "riskbn/pipeline/cohort.hpp"
#include "riskbn/pipeline/csv.hpp"
#include "support/fixtures.hpp"

using namespace riskbn;
using riskbn::testing::shipped_mapping;
using riskbn::testing::shipped_model;

namespace {

Date day(int n) { return Date::parse("2015-01-01").plus_days(n); }

std::vector<MeasurementRecord> bmis(std::vector<double> values) {
  std::vector<MeasurementRecord> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"p", day(static_cast<int>(i) * 10), MeasurementKind::bmi, values[i]});
  }
  return out;
}

std::vector<MeasurementRecord> heights(std::vector<double> values) {
  std::vector<MeasurementRecord> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"p", day(static_cast<int>(i) * 10), MeasurementKind::height_cm, values[i]});
  }
  return out;
}

std::vector<EcgRecord> ecgs(std::vector<double> pr, double pwave = 102.0) {
  std::vector<EcgRecord> out;
  for (std::size_t i = 0; i < pr.size(); ++i) out.push_back({"p", day(static_cast<int>(i)), pr[i], pwave});
  return out;
}

VisitRecord visit(const std::string& id, int d, std::vector<std::string> codes = {}) {
  return {id, day(d), std::move(codes)};
}

}  // namespace

TEST_CASE("csv reader handles quotes and CRLF") {
  const auto t = parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n,\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1] == std::vector<std::string>{"", ""});
  CHECK(parse_csv(write_csv(t.header, t.rows)).rows == t.rows);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ParseError);
}

TEST_CASE("dates parse strictly") {
  CHECK(Date::parse("2020-02-29").to_string() == "2020-02-29");
  CHECK(Date::parse("2020-01-31").plus_days(1).to_string() == "2020-02-01");
  CHECK_THROWS_AS(Date::parse("2019-02-29"), ParseError);
  CHECK_THROWS_AS(Date::parse("2019/02/01"), ParseError);
}

TEST_CASE("bmi_class aggregation") {
  // std <= 1: plain mean 24.27.
  CHECK(bmi_class(bmis({24.0, 24.5, 24.3}), std::nullopt) == "normal");
  // std > 1: (1*22 + 2*31 + 3*31.5) / 6 = 29.75.
  CHECK(bmi_class(bmis({22.0, 31.0, 31.5}), std::nullopt) == "overweight");
  CHECK(bmi_class(bmis({17.0}), std::nullopt) == "underweight");
  CHECK(bmi_class(bmis({}), std::nullopt) == std::nullopt);
  // Unordered input is sorted chronologically first.
  auto shuffled = bmis({22.0, 31.0, 31.5});
  std::swap(shuffled[0], shuffled[2]);
  CHECK(bmi_class(shuffled, std::nullopt) == "overweight");
  // Records on or after the cutoff are ignored.
  CHECK(bmi_class(bmis({22.0, 45.0}), day(10)) == "normal");
}

TEST_CASE("classify_bmi boundaries and monotonicity") {
  CHECK(classify_bmi(18.49) == "underweight");
  CHECK(classify_bmi(18.5) == "normal");
  CHECK(classify_bmi(25.0) == "overweight");
  CHECK(classify_bmi(30.0) == "obese_1");
  CHECK(classify_bmi(35.0) == "obese_2");
  CHECK(classify_bmi(40.0) == "obese_3");
  auto rank = [](const std::string& s) {
    return std::find(kBmiClasses.begin(), kBmiClasses.end(), s) - kBmiClasses.begin();
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(12.0, 60.0);
  for (int i = 0; i < 2000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(rank(classify_bmi(a)) <= rank(classify_bmi(b)));
  }
}

TEST_CASE("height_group") {
  CHECK(height_group(heights({154.0}), "female", std::nullopt) == "band_1");
  CHECK(height_group(heights({170.0, 173.0}), "male", std::nullopt) == std::nullopt);
  CHECK(height_group(heights({179.0, 179.5}), "male", std::nullopt) == "band_5");
  CHECK(height_group(heights({155.0}), "female", std::nullopt) == "band_1");
  CHECK(height_group(heights({156.0}), "female", std::nullopt) == "band_2");
  CHECK(height_group(heights({163.5}), "female", std::nullopt) == "band_5");
  CHECK(height_group(heights({176.0, 178.0}), "male", std::nullopt) == "band_4");
  CHECK(height_group(heights({}), "male", std::nullopt) == std::nullopt);
  CHECK_THROWS_AS(height_group(heights({170.0}), "x", std::nullopt), ClassificationError);
}

TEST_CASE("demographic_features") {
  CHECK(age_group(67) == "65-74");
  CHECK(age_group(60) == "60-64");
  CHECK(age_group(59) == "<60");
  CHECK(age_group(74) == "65-74");
  CHECK(age_group(75) == ">74");
  CHECK(race_category("unknown") == "other");
  CHECK(race_category("WHITE - OTHER EUROPEAN") == "white");
  CHECK(race_category("HISPANIC/LATINO - PUERTO RICAN") == "hispanic");
  CHECK(race_category("BLACK/AFRICAN AMERICAN") == "black");
  CHECK(race_category("ASIAN - CHINESE") == "asian");
  CHECK(race_category("WHITE/BLACK") == "other");
  CHECK(race_category("") == "other");
  CHECK(sex_category("F") == "female");
  CHECK(sex_category(" male ") == "male");
  CHECK_THROWS_AS(sex_category("X"), ClassificationError);
  CHECK_THROWS_AS(demographic_features(67, "WHITE", "?"), ClassificationError);
  const auto d = demographic_features(78, "WHITE", "F");
  CHECK(d.age_group == ">74");
  CHECK(d.race == "white");
  CHECK(d.sex == "female");
}

TEST_CASE("ecg_features") {
  CHECK(ecg_features(ecgs({210, 212, 208}), std::nullopt)->prolonged_pr == "present");
  CHECK(ecg_features(ecgs({200, 200}), std::nullopt)->prolonged_pr == "absent");
  // Population std of {187, 200, 213} is 10.6; of {184, 200, 216} it is 13.06.
  CHECK(ecg_features(ecgs({187, 200, 213}), std::nullopt)->pr_variation == "absent");
  CHECK(ecg_features(ecgs({184, 200, 216}), std::nullopt)->pr_variation == "present");
  // Exactly std 13: {187, 213}.
  CHECK(ecg_features(ecgs({187, 213}), std::nullopt)->pr_variation == "present");
  CHECK(ecg_features(ecgs({250}), std::nullopt)->pr_variation == "absent");
  CHECK(ecg_features(ecgs({180}, 95), std::nullopt)->pwave_duration == "short");
  CHECK(ecg_features(ecgs({}), std::nullopt) == std::nullopt);
  CHECK(ecg_features(ecgs({180, 300}), day(1))->prolonged_pr == "absent");

  CHECK(classify_pwave(89) == "very_short");
  CHECK(classify_pwave(90) == "short");
  CHECK(classify_pwave(99) == "short");
  CHECK(classify_pwave(100) == "normal");
  CHECK(classify_pwave(105) == "normal");
  CHECK(classify_pwave(106) == "intermediate_1");
  CHECK(classify_pwave(112) == "intermediate_2");
  CHECK(classify_pwave(120) == "long");
  CHECK(classify_pwave(129) == "long");
  CHECK(classify_pwave(130) == "very_long");
}

TEST_CASE("comorbidity_flags") {
  const auto& cfg = shipped_mapping();
  const std::vector<VisitRecord> visits{visit("p", 0, {"I10"}), visit("p", 5, {"F17210"}),
                                        visit("p", 9, {"N184", "F1020"})};
  auto flags = comorbidity_flags(visits, day(9), cfg);
  CHECK(flags["hypertension"] == "present");
  CHECK(flags["smoking_status"] == "smoker");
  CHECK(flags["kidney_disease"] == "absent");
  CHECK(flags["alcohol_misuse"] == "absent");
  CHECK(comorbidity_flags(visits, std::nullopt, cfg)["kidney_disease"] == "present");

  flags = comorbidity_flags(std::vector<VisitRecord>{visit("p", 0, {"Z0000"})}, std::nullopt, cfg);
  CHECK(flags.size() == 8);
  for (const auto& name : kComorbidityFactors) CHECK(flags[name] == "absent");
  CHECK(flags["smoking_status"] == "nonsmoker");

  auto doc = feature_config_to_json(cfg);
  doc["comorbidities"].erase("copd");
  CHECK_THROWS_AS(feature_config_from_json(doc), ConfigurationError);
}

TEST_CASE("select_cohort rules") {
  const std::vector<std::string> af{"I48"};
  std::vector<VisitRecord> v{
      // Positive: target only at the third visit.
      visit("a", 0), visit("a", 10), visit("a", 20, {"I489"}),
      // Excluded: target at the first visit.
      visit("b", 0, {"I480"}), visit("b", 10), visit("b", 20),
      // Negative candidate: five visits, never target coded.
      visit("c", 0), visit("c", 1), visit("c", 2), visit("c", 3), visit("c", 4),
      // Excluded: pre-diagnosis visits share a date.
      visit("d", 0), visit("d", 0), visit("d", 20, {"I48"}), visit("d", 30),
      // Excluded: only two distinct dates.
      visit("e", 0), visit("e", 5), visit("e", 5)};
  const auto sel = select_cohort(v, af, 1);
  CHECK(sel.positives == std::vector<std::string>{"a"});
  CHECK(sel.cutoffs.at("a") == day(20));
  CHECK(sel.negatives == std::vector<std::string>{"c"});

  CHECK_THROWS_AS(select_cohort(std::vector<VisitRecord>{visit("c", 0), visit("c", 1), visit("c", 2)}, af, 1),
                  DataError);
}

namespace {

// Ten patients: p01-p03 eligible positives, p04-p08 eligible negatives,
// p09 target at first visit, p10 only two visits.
RawTables ten_patient_fixture() {
  RawTables raw;
  auto add_patient = [&](const std::string& id, int age, const std::string& race, const std::string& sex) {
    raw.patients.push_back({id, age, race, sex});
  };
  for (int i = 1; i <= 10; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "p%02d", i);
    add_patient(id, 50 + 3 * i, i % 2 ? "WHITE" : "ASIAN", i % 3 ? "F" : "M");
  }
  for (const char* id : {"p01", "p02", "p03"}) {
    raw.visits.push_back(visit(id, 0, {"I10"}));
    raw.visits.push_back(visit(id, 30));
    raw.visits.push_back(visit(id, 60, {"I4891"}));
    // Poison: after the cutoff.
    raw.visits.push_back(visit(id, 90, {"N183", "F17200"}));
    raw.measurements.push_back({id, day(5), MeasurementKind::bmi, 23.0});
    raw.measurements.push_back({id, day(70), MeasurementKind::bmi, 48.0});
    raw.ecg.push_back({id, day(60), 260.0, 140.0});
  }
  for (const char* id : {"p04", "p05", "p06", "p07", "p08"}) {
    raw.visits.push_back(visit(id, 0));
    raw.visits.push_back(visit(id, 40, {"E119"}));
    raw.visits.push_back(visit(id, 80));
    raw.measurements.push_back({id, day(10), MeasurementKind::height_cm, 165.0});
    raw.ecg.push_back({id, day(10), 180.0, 101.0});
  }
  raw.visits.push_back(visit("p09", 0, {"I48"}));
  raw.visits.push_back(visit("p09", 10));
  raw.visits.push_back(visit("p09", 20));
  raw.visits.push_back(visit("p10", 0));
  raw.visits.push_back(visit("p10", 10));
  return raw;
}

}  // namespace

TEST_CASE("build_cohort on a hand-traced fixture") {
  const auto raw = ten_patient_fixture();
  const auto cohort = build_cohort(raw, shipped_model(), shipped_mapping(), 42);
  REQUIRE(cohort.rows.size() == 6);
  CHECK(cohort.positives() == 3);
  for (const auto& row : cohort.rows) {
    if (row.label == 1) {
      const auto ev = cohort.evidence(row);
      CHECK(ev.at("bmi_class") == "normal");
      CHECK(ev.at("hypertension") == "present");
      CHECK(ev.at("kidney_disease") == "absent");
      CHECK(ev.at("smoking_status") == "nonsmoker");
      // The only ECG is on the cutoff date, so it is excluded.
      CHECK(ev.count("prolonged_pr") == 0);
    } else {
      CHECK(row.patient_id >= "p04");
      CHECK(row.patient_id <= "p08");
      CHECK(cohort.evidence(row).at("diabetes_mellitus") == "present");
    }
  }
  // Same inputs and seed: byte-identical output.
  CHECK(write_cohort_csv(build_cohort(raw, shipped_model(), shipped_mapping(), 42)) == write_cohort_csv(cohort));
}

TEST_CASE("build_cohort without positives fails") {
  auto raw = ten_patient_fixture();
  std::erase_if(raw.visits, [](const VisitRecord& v) { return v.patient_id <= "p03" || v.patient_id == "p09"; });
  CHECK_THROWS_AS(build_cohort(raw, shipped_model(), shipped_mapping(), 1), DataError);
}

TEST_CASE("post-cutoff poison records do not change features") {
  auto raw = ten_patient_fixture();
  const auto clean = write_cohort_csv(build_cohort(raw, shipped_model(), shipped_mapping(), 3));
  for (const char* id : {"p01", "p02", "p03"}) {
    raw.visits.push_back(visit(id, 60, {"J449", "G4733", "I509"}));
    raw.visits.push_back(visit(id, 61, {"E119"}));
    raw.measurements.push_back({id, day(60), MeasurementKind::height_cm, 190.0});
    raw.ecg.push_back({id, day(200), 300.0, 150.0});
  }
  CHECK(write_cohort_csv(build_cohort(raw, shipped_model(), shipped_mapping(), 3)) == clean);
}

TEST_CASE("cohort csv round-trips and enforces the schema both ways") {
  const auto cohort = build_cohort(ten_patient_fixture(), shipped_model(), shipped_mapping(), 42);
  const auto text = write_cohort_csv(cohort);
  CHECK(read_cohort_csv(text, shipped_model()) == cohort);

  auto table = parse_csv(text);
  // Drop a model column.
  std::vector<std::string> header = table.header;
  header.erase(header.begin() + 1);
  std::vector<std::vector<std::string>> rows;
  for (auto r : table.rows) {
    r.erase(r.begin() + 1);
    rows.push_back(r);
  }
  CHECK_THROWS_AS(read_cohort_csv(write_csv(header, rows), shipped_model()), ValidationError);
  // Extra column.
  header = table.header;
  header.push_back("extra");
  rows.clear();
  for (auto r : table.rows) {
    r.push_back("x");
    rows.push_back(r);
  }
  CHECK_THROWS_AS(read_cohort_csv(write_csv(header, rows), shipped_model()), ValidationError);
  // Invalid state.
  rows = table.rows;
  rows[0][1] = "giant";
  CHECK_THROWS_AS(read_cohort_csv(write_csv(table.header, rows), shipped_model()), ValidationError);
}

TEST_CASE("pipeline states and model states agree in both directions") {
  const auto& model = shipped_model();
  std::map<std::string, std::vector<std::string>> pipeline{
      {"bmi_class", kBmiClasses}, {"height_group", kHeightGroups}, {"age_group", kAgeGroups},
      {"race", kRaces},           {"sex", kSexes},                 {"pwave_duration", kPwaveClasses},
      {"prolonged_pr", {"absent", "present"}}, {"pr_variation", {"absent", "present"}},
      {"smoking_status", {"nonsmoker", "smoker"}}, {"alcohol_misuse", {"absent", "present"}}};
  for (const auto& c : kComorbidityFactors) pipeline[c] = {"absent", "present"};
  CHECK(pipeline.size() == factors_of(model).size());
  for (const RiskFactor* f : factors_of(model)) {
    REQUIRE(pipeline.count(f->name));
    CHECK(pipeline[f->name] == f->states);
  }
}
