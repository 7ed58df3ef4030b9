#include <doctest.h>

#include <random>
#include <set>

#include "riskbn/error.hpp"
#include "riskbn/knowledge/model.hpp"
#include "support/fixtures.hpp"

using namespace riskbn;
using riskbn::testing::minimal_model_json;
using riskbn::testing::shipped_model;

namespace {

RiskFactor factor_with(std::vector<double> scaling) {
  RiskFactor f;
  f.name = "f";
  f.weight = 1.0;
  for (std::size_t i = 0; i < scaling.size(); ++i) {
    f.states.push_back("s" + std::to_string(i));
    f.relationships.push_back({f.states.back(), scaling[i], {}, false});
  }
  return f;
}

}  // namespace

TEST_CASE("minimal model loads") {
  const auto m = load_model(minimal_model_json());
  CHECK(m.categories.size() == 1);
  CHECK(m.target_scores == TargetScores{0.1, 0.5, 0.9});
  CHECK(m.categories[0].thresholds == SynthesisThresholds{0.45, 0.55});
  CHECK(model_summary(m).size() == 1);
}

TEST_CASE("category weights must sum to one") {
  auto doc = Json::parse(minimal_model_json(0.5));
  auto second = doc["categories"][0];
  second["name"] = "comorbidity";
  second["weight"] = 0.6;
  second["factors"][0]["name"] = "hypertension";
  doc["categories"].push_back(second);
  try {
    load_model(doc.dump());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0] == "categories: category weights sum 1.1");
  }
}

TEST_CASE("validation errors carry field paths") {
  auto doc = Json::parse(minimal_model_json());
  doc["categories"][0]["factors"][0]["relationships"][1]["scaling_factor"] = -1.0;
  doc["categories"][0]["thresholds"] = {{"t1", 0.6}, {"t2", 0.4}};
  try {
    load_model(doc.dump());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    std::set<std::string> paths;
    for (const auto& v : e.violations()) paths.insert(v.substr(0, v.find(':')));
    CHECK(paths.count("categories[0].factors[0].relationships[1].scaling_factor"));
    CHECK(paths.count("categories[0].thresholds"));
  }
}

TEST_CASE("malformed documents are parse errors") {
  CHECK_THROWS_AS(load_model("{not json"), ParseError);
  CHECK_THROWS_AS(load_model(R"({"target": {"name": "af"}, "categories": []})"), ParseError);
  auto doc = Json::parse(minimal_model_json());
  doc["categories"][0]["factors"][0].erase("weight");
  CHECK_THROWS_AS(load_model(doc.dump()), ParseError);
}

TEST_CASE("unknown publication identifiers are rejected") {
  auto doc = Json::parse(minimal_model_json());
  doc["categories"][0]["factors"][0]["relationships"][1]["evidence"][0]["publication"] = "ref:missing";
  CHECK_THROWS_AS(load_model(doc.dump()), ValidationError);
}

TEST_CASE("shipped lifestyle weights load as 0.8:0.2") {
  const auto& m = shipped_model();
  const auto& lifestyle = category_of(m, "smoking_status");
  CHECK(lifestyle.name == "lifestyle");
  CHECK(find_factor(m, "smoking_status")->weight == 0.8);
  CHECK(find_factor(m, "alcohol_misuse")->weight == 0.2);
}

TEST_CASE("normalized_risks") {
  const auto sex = normalized_risks(*find_factor(shipped_model(), "sex"));
  CHECK(sex(0) == doctest::Approx(1.0 / 2.84).epsilon(1e-12));
  CHECK(sex(1) == doctest::Approx(1.84 / 2.84).epsilon(1e-12));
  CHECK(sex(0) == doctest::Approx(0.3521).epsilon(1e-4));
  CHECK(sex(1) == doctest::Approx(0.6479).epsilon(1e-4));

  const auto equal = normalized_risks(factor_with({2.0, 2.0}));
  CHECK(equal(0) == 0.5);
  CHECK(equal(1) == 0.5);
  const auto four = normalized_risks(factor_with({1, 1, 1, 1}));
  for (Index i = 0; i < 4; ++i) CHECK(four(i) == 0.25);
}

TEST_CASE("normalized_risks sums to one and preserves the argmax") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  std::uniform_int_distribution<int> k(2, 8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> sf(static_cast<std::size_t>(k(rng)));
    for (auto& x : sf) x = u(rng);
    const auto r = normalized_risks(factor_with(sf));
    CHECK(std::abs(r.sum() - 1.0) <= 1e-9);
    Index arg_r, arg_sf;
    r.maxCoeff(&arg_r);
    Eigen::Map<const Vector>(sf.data(), static_cast<Index>(sf.size())).maxCoeff(&arg_sf);
    CHECK(arg_r == arg_sf);
  }
}

TEST_CASE("evidence_for") {
  const auto& m = shipped_model();
  const auto smoker = evidence_for(m, "smoking_status", "smoker");
  REQUIRE(!smoker.empty());
  CHECK(!smoker[0].publication.title.empty());
  CHECK(evidence_for(m, "smoking_status", "nonsmoker").empty());
  CHECK_THROWS_AS(evidence_for(m, "xyz", "a"), LookupError);
  CHECK_THROWS_AS(evidence_for(m, "smoking_status", "sometimes"), LookupError);
}

TEST_CASE("shipped model summary lists 16 factors across 5 categories") {
  const auto rows = model_summary(shipped_model());
  CHECK(rows.size() == 16);
  std::set<std::string> categories;
  for (const auto& r : rows) categories.insert(r.category);
  CHECK(categories.size() == 5);
  CHECK(rows.front().category == "anthropometric");
  CHECK(rows.front().factor == "bmi_class");

  const auto again = load_model_file(testing::data_path("af_knowledge.json"));
  CHECK(format_summary_csv(model_summary(again)) == format_summary_csv(rows));
}

TEST_CASE("knowledge model save/load round-trips") {
  const auto& m = shipped_model();
  const auto back = load_model(save_model(m));
  CHECK(back == m);
  CHECK(save_model(back) == save_model(m));
  const auto minimal = load_model(minimal_model_json());
  CHECK(load_model(save_model(minimal)) == minimal);
}

TEST_CASE("sex-conditioned tables must cover the cross product") {
  auto doc = model_to_json(shipped_model());
  doc["sex_conditioned"][0]["scaling_factors"]["male"].erase("obese_3");
  CHECK_THROWS_AS(load_model(doc.dump()), ValidationError);
}
