#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "riskbn/bn/inference.hpp"
#include "riskbn/builder/build.hpp"
#include "riskbn/error.hpp"
#include "riskbn/stats/association.hpp"
#include "support/fixtures.hpp"

using namespace riskbn;
using riskbn::testing::shipped_model;
using riskbn::testing::toy_cohort;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

SynthesisSpec lifestyle_spec(Vector smoking, Vector alcohol) {
  return {"lifestyle", {"smoking_status", "alcohol_misuse"}, vec({0.8, 0.2}), {smoking, alcohol}, {0.45, 0.55}};
}

Index state_of_row(const Cpt& cpt, Index row) {
  Index s;
  cpt.table.row(row).maxCoeff(&s);
  return s;
}

}  // namespace

TEST_CASE("synthesis hand examples") {
  const auto spec = lifestyle_spec(vec({0.431, 0.569}), vec({0.333, 0.667}));
  // Rows: (nonsmoker, absent), (nonsmoker, present), (smoker, absent), (smoker, present).
  CHECK(total_risk(spec, {1, 1}) == doctest::Approx(0.8 * 0.569 + 0.2 * 0.667).epsilon(1e-15));
  CHECK(total_risk(spec, {1, 1}) == doctest::Approx(0.5886));
  CHECK(total_risk(spec, {0, 0}) == doctest::Approx(0.4114));
  const Cpt cpt = synthesize_cpt(spec);
  REQUIRE(cpt.table.rows() == 4);
  CHECK(state_of_row(cpt, 3) == 2);
  CHECK(state_of_row(cpt, 0) == 0);
  for (Index r = 0; r < 4; ++r) {
    CHECK(cpt.table.row(r).sum() == 1.0);
    CHECK(cpt.table.row(r).maxCoeff() == 1.0);
  }

  const SynthesisSpec flat{"x", {"a"}, vec({1.0}), {vec({0.5, 0.5})}, {0.45, 0.55}};
  const Cpt f = synthesize_cpt(flat);
  CHECK(state_of_row(f, 0) == 1);
  CHECK(state_of_row(f, 1) == 1);
}

TEST_CASE("threshold boundaries") {
  const SynthesisThresholds t{0.45, 0.55};
  CHECK(synthesis_state(0.4499, t) == 0);
  CHECK(synthesis_state(0.45, t) == 1);
  CHECK(synthesis_state(0.55, t) == 1);
  CHECK(synthesis_state(0.5501, t) == 2);
  CHECK(neutral_risk(vec({0.8, 0.2}), {2, 2}) == doctest::Approx(0.5));
  CHECK(centered_thresholds(0.5).t1 == doctest::Approx(0.45));
  CHECK(centered_thresholds(0.5).t2 == doctest::Approx(0.55));
}

TEST_CASE("invalid synthesis specs are rejected") {
  auto spec = lifestyle_spec(vec({0.431, 0.569}), vec({0.333, 0.667}));
  spec.weights = vec({0.7, 0.2});
  CHECK_THROWS_AS(synthesize_cpt(spec), ValidationError);
  spec = lifestyle_spec(vec({0.4, 0.5}), vec({0.5, 0.5}));
  CHECK_THROWS_AS(synthesize_cpt(spec), ValidationError);
}

TEST_CASE("synthesis state is monotone in parent risk") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> parents(1, 4), states(2, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    SynthesisSpec spec;
    spec.node = "n";
    const int k = parents(rng);
    spec.weights.resize(k);
    std::vector<Index> cards;
    for (int i = 0; i < k; ++i) {
      spec.parents.push_back("p" + std::to_string(i));
      spec.weights(i) = u(rng);
      Vector r(states(rng));
      for (Index s = 0; s < r.size(); ++s) r(s) = u(rng);
      spec.risks.push_back(r / r.sum());
      cards.push_back(r.size());
    }
    spec.weights /= spec.weights.sum();
    spec.thresholds = centered_thresholds(neutral_risk(spec.weights, cards));
    const Cpt cpt = synthesize_cpt(spec);
    for (Index row = 0; row < cpt.table.rows(); ++row) {
      // Decode and try raising each parent to every higher-risk state.
      std::vector<Index> st(cards.size());
      Index rest = row;
      for (std::size_t i = cards.size(); i-- > 0;) st[i] = rest % cards[i], rest /= cards[i];
      for (std::size_t i = 0; i < st.size(); ++i) {
        for (Index s = 0; s < cards[i]; ++s) {
          if (spec.risks[i](s) < spec.risks[i](st[i])) continue;
          auto up = st;
          up[i] = s;
          Index r2 = 0;
          for (std::size_t j = 0; j < up.size(); ++j) r2 = r2 * cards[j] + up[j];
          CHECK(state_of_row(cpt, r2) >= state_of_row(cpt, row));
        }
      }
    }
  }
}

TEST_CASE("scaling one factor's scaling factors leaves the synthesis CPT unchanged") {
  KnowledgeModel model = shipped_model();
  const Cpt before = synthesize_cpt(knowledge_parameters(model).categories[2]);
  for (auto& f : model.categories[2].factors) {
    if (f.name == "age_group") {
      for (auto& r : f.relationships) r.scaling_factor *= 3.7;
    }
  }
  const Cpt after = synthesize_cpt(knowledge_parameters(model).categories[2]);
  CHECK(before == after);
}

TEST_CASE("target cpt") {
  TargetCptSpec t{"af", {"a", "b", "c", "d", "e"}, Vector::Constant(5, 0.2), {}};
  const Cpt cpt = target_cpt(t);
  REQUIRE(cpt.table.rows() == 243);
  CHECK(cpt.table(242, 1) == doctest::Approx(0.9));
  CHECK(cpt.table(0, 1) == doctest::Approx(0.1));
  // (high, low, low, low, low): first parent slowest.
  CHECK(cpt.table(2 * 81, 1) == doctest::Approx(0.26));
  // Raising any one category strictly increases P(present).
  for (Index row = 0; row < 243; ++row) {
    for (Index stride : {81, 27, 9, 3, 1}) {
      if ((row / stride) % 3 == 2) continue;
      CHECK(cpt.table(row + stride, 1) > cpt.table(row, 1));
    }
  }
  TargetCptSpec clamp{"af", {"a"}, vec({1.0}), {0.0, 0.5, 1.0}};
  const Cpt c = target_cpt(clamp);
  CHECK(c.table(0, 1) == 0.01);
  CHECK(c.table(2, 1) == 0.99);
  TargetCptSpec bad{"af", {"a"}, vec({1.0}), {0.5, 0.5, 0.9}};
  CHECK_THROWS_AS(target_cpt(bad), ValidationError);
}

TEST_CASE("knowledge_structure topology") {
  const auto net = knowledge_structure(shipped_model());
  CHECK(net.size() == 24);
  Index roots = 0;
  for (const auto& v : net.variables()) roots += net.parents(v.name).empty();
  CHECK(roots == 16);
  CHECK(net.parents("bmi_risk") == std::vector<std::string>{"sex", "bmi_class"});
  CHECK(net.parents("height_risk") == std::vector<std::string>{"sex", "height_group"});
  CHECK(net.parents("anthropometric") == std::vector<std::string>{"bmi_risk", "height_risk"});
  CHECK(net.parents("af") == kCategoryNames);
  for (const auto& c : kCategoryNames) CHECK(net.variable(c).states == kSynthesisStates);
  CHECK(net.children("bmi_class") == std::vector<std::string>{"bmi_risk"});
  CHECK(topological_order(net).has_value());

  const auto minimal = knowledge_structure(load_model(riskbn::testing::minimal_model_json(1.0)));
  CHECK(minimal.size() == 3);
  CHECK(minimal.edges() == std::vector<Edge>{{"smoking_status", "lifestyle"}, {"lifestyle", "af"}});
}

TEST_CASE("knowledge parameters for the shipped model") {
  const auto params = knowledge_parameters(shipped_model());
  const auto& lifestyle = params.categories[4];
  CHECK(lifestyle.node == "lifestyle");
  CHECK(lifestyle.weights(0) == doctest::Approx(0.8));
  CHECK(lifestyle.risks[0](1) == doctest::Approx(1.32 / 2.32));
  CHECK(lifestyle.risks[1](1) == doctest::Approx(2.0 / 3.0));
  const Cpt cpt = synthesize_cpt(lifestyle);
  CHECK(state_of_row(cpt, 0) == 0);  // R = 0.4115
  CHECK(state_of_row(cpt, 1) == 1);  // R = 0.4782
  CHECK(state_of_row(cpt, 2) == 1);  // R = 0.5218
  CHECK(state_of_row(cpt, 3) == 2);  // R = 0.5885

  const auto& anthro = params.categories[0];
  CHECK(anthro.parents == std::vector<std::string>{"bmi_risk", "height_risk"});
  CHECK(anthro.risks[0](2) == doctest::Approx(0.6));
  REQUIRE(params.conditioned.size() == 2);
  CHECK(params.conditioned[0].risks.row(0).sum() == doctest::Approx(1.0));
  CHECK(params.target.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("learn_priors") {
  CohortTable c;
  c.columns = {{"smoking_status", {"nonsmoker", "smoker"}}, {"empty", {"a", "b", "c"}}};
  for (int i = 0; i < 10; ++i) c.rows.push_back({std::to_string(i), {0, kMissing}, 0});
  DiscreteBayesNet skel;
  skel.add_variable(c.columns[0]);
  skel.add_variable(c.columns[1]);
  auto result = learn_priors(c, skel, 1.0);
  REQUIRE(result.priors.size() == 2);
  CHECK(result.priors[0].table(0, 1) == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(result.priors[1].table(0, 2) == doctest::Approx(1.0 / 3.0));
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("empty") == 0);

  c.rows.clear();
  for (int i = 0; i < 100; ++i) c.rows.push_back({std::to_string(i), {i % 2, 0}, 0});
  result = learn_priors(c, skel, 0.0);
  CHECK(result.priors[0].table(0, 0) == 0.5);
  CHECK(result.priors[0].table(0, 1) == 0.5);
}

TEST_CASE("data parameters follow prevalence and Cramer's V") {
  const auto& model = shipped_model();
  const auto cohort = toy_cohort(model, 3000, 17);
  const auto params = data_parameters(cohort, model, 0.0);
  // Independent recomputation for age_group.
  const Index age = cohort.column_index("age_group");
  Vector pos = Vector::Zero(4), n = Vector::Zero(4);
  for (const auto& r : cohort.rows) {
    n(r.values[static_cast<std::size_t>(age)]) += 1;
    pos(r.values[static_cast<std::size_t>(age)]) += r.label;
  }
  const Vector prev = pos.cwiseQuotient(n);
  const auto& demo = params.categories[2];
  REQUIRE(demo.parents[0] == "age_group");
  for (Index s = 0; s < 4; ++s) CHECK(demo.risks[0](s) == doctest::Approx(prev(s) / prev.sum()).epsilon(1e-12));
  for (Index s = 1; s < 4; ++s) CHECK(demo.risks[0](s) > demo.risks[0](s - 1));

  double vsum = 0.0;
  std::vector<double> vs;
  for (const auto& p : demo.parents) {
    vs.push_back(cramers_v(contingency_table(cohort, cohort.column_index(p))).cramers_v);
    vsum += vs.back();
  }
  for (std::size_t i = 0; i < vs.size(); ++i) CHECK(demo.weights(static_cast<Index>(i)) == doctest::Approx(vs[i] / vsum));
  CHECK(demo.weights(0) > 0.8);

  // Thresholds are nearest-rank tertiles of R over the training rows.
  std::vector<double> rs;
  for (const auto& r : cohort.rows) {
    std::vector<Index> st;
    for (const auto& p : demo.parents) st.push_back(r.values[static_cast<std::size_t>(cohort.column_index(p))]);
    double R = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) R += demo.weights(static_cast<Index>(i)) * demo.risks[i](st[i]);
    rs.push_back(R);
  }
  std::sort(rs.begin(), rs.end());
  CHECK(demo.thresholds.t1 == doctest::Approx(rs[999]).epsilon(1e-14));
  CHECK(demo.thresholds.t2 == doctest::Approx(rs[1999]).epsilon(1e-14));

  // Planted monotone age risk: demographic state never falls as age rises.
  const Cpt cpt = synthesize_cpt(demo);
  const Index per_age = cpt.table.rows() / 4;
  for (Index rest = 0; rest < per_age; ++rest) {
    for (Index a = 1; a < 4; ++a) CHECK(state_of_row(cpt, a * per_age + rest) >= state_of_row(cpt, (a - 1) * per_age + rest));
  }
}

TEST_CASE("two-state prevalence example") {
  CohortTable c;
  c.columns = {{"f", {"a", "b"}}};
  // Prevalence 0.2 in state a and 0.4 in state b.
  for (int i = 0; i < 10; ++i) c.rows.push_back({"a" + std::to_string(i), {0}, i < 2 ? 1 : 0});
  for (int i = 0; i < 10; ++i) c.rows.push_back({"b" + std::to_string(i), {1}, i < 4 ? 1 : 0});
  KnowledgeModel m = load_model(riskbn::testing::minimal_model_json(1.0));
  m.categories[0].factors[0].name = "f";
  m.categories[0].factors[0].states = {"a", "b"};
  const auto params = data_parameters(c, m, 0.0);
  CHECK(params.categories[0].risks[0](0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(params.categories[0].risks[0](1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  for (auto& r : c.rows) r.label = 0;
  CHECK_THROWS_AS(data_parameters(c, m, 1.0), DataError);
}

namespace {

Dataset coin_data(int n, std::uint64_t seed, double copy_noise) {
  Dataset d;
  d.variables = {{"A", {"0", "1"}}, {"B", {"0", "1"}}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const Index a = u(rng) < 0.5;
    Index b = u(rng) < 0.5;
    if (copy_noise >= 0.0) b = u(rng) < copy_noise ? 1 - a : a;
    d.rows.push_back({a, b});
  }
  return d;
}

// BIC computed from sparse counts, independent of family_bic. Structure
// 0: no edge, 1: A->B, 2: B->A.
double bic_oracle(const Dataset& d, int structure) {
  const double n = static_cast<double>(d.rows.size());
  const std::size_t root = structure == 2 ? 1 : 0;
  const std::size_t other = 1 - root;
  std::map<Index, double> cr, co;
  std::map<std::pair<Index, Index>, double> joint;
  for (const auto& r : d.rows) cr[r[root]] += 1, co[r[other]] += 1, joint[{r[root], r[other]}] += 1;
  double ll = 0.0;
  for (auto [a, c] : cr) ll += c * std::log((c + 1) / (n + 2));
  if (structure != 0) {
    for (auto [ab, c] : joint) ll += c * std::log((c + 1) / (cr[ab.first] + 2));
  } else {
    for (auto [b, c] : co) ll += c * std::log((c + 1) / (n + 2));
  }
  return ll - 0.5 * std::log(n) * (structure != 0 ? 3.0 : 2.0);
}

}  // namespace

TEST_CASE("hill climbing on two variables") {
  HillClimbConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto indep = coin_data(2000, seed, -1.0);
    const auto r = hill_climb(indep, cfg);
    CHECK(bic_oracle(indep, 0) > std::max(bic_oracle(indep, 1), bic_oracle(indep, 2)));
    CHECK(r.net.edges().empty());
    CHECK(r.final_score == doctest::Approx(bic_oracle(indep, 0)).epsilon(1e-12));

    const auto copy = coin_data(2000, seed, 0.05);
    const auto c = hill_climb(copy, cfg);
    REQUIRE(c.net.edges().size() == 1);
    const double ab = bic_oracle(copy, 1), ba = bic_oracle(copy, 2);
    CHECK(std::min(ab, ba) > bic_oracle(copy, 0));
    CHECK(c.final_score == doctest::Approx(std::max(ab, ba)).epsilon(1e-12));
    CHECK(c.net.edges()[0] == (ab >= ba ? Edge{"A", "B"} : Edge{"B", "A"}));
  }
  CHECK_THROWS_AS(hill_climb(coin_data(49, 1, 0.05), cfg), DataError);

  // Symmetric counts make A->B and B->A score equally; the tie goes to A->B.
  Dataset sym;
  sym.variables = {{"A", {"0", "1"}}, {"B", {"0", "1"}}};
  for (int i = 0; i < 400; ++i) sym.rows.push_back({i % 10 == 0 ? 1 - (i / 10) % 2 : (i / 10) % 2, (i / 10) % 2});
  for (int i = 0; i < 400; ++i) sym.rows.push_back({(i / 10) % 2, i % 10 == 0 ? 1 - (i / 10) % 2 : (i / 10) % 2});
  CHECK(bic_oracle(sym, 1) == doctest::Approx(bic_oracle(sym, 2)).epsilon(1e-14));
  const auto t = hill_climb(sym, cfg);
  REQUIRE(t.net.edges().size() == 1);
  CHECK(t.net.edges()[0] == Edge{"A", "B"});
}

TEST_CASE("hill climbing properties on cohort data") {
  const auto& model = shipped_model();
  const auto data = complete_cases(toy_cohort(model, 1500, 23), model.target);
  HillClimbConfig cfg;
  cfg.restarts = 2;
  cfg.seed = 9;
  const auto r = hill_climb(data, cfg);
  CHECK(r.final_score >= r.initial_score);
  double prev = r.initial_score;
  for (double s : r.trace) {
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(topological_order(r.net).has_value());
  CHECK(validate_network(r.net).ok());
  std::vector<std::vector<Index>> parents(static_cast<std::size_t>(r.net.size()));
  for (const auto& [p, c] : r.net.edges()) parents[static_cast<std::size_t>(r.net.index_of(c))].push_back(r.net.index_of(p));
  for (auto& ps : parents) std::sort(ps.begin(), ps.end());
  CHECK(network_bic(data, parents, 1.0) == doctest::Approx(r.final_score).epsilon(1e-12));
  for (const auto& ps : parents) CHECK(ps.size() <= 4);
  CHECK(hill_climb(data, cfg).net == r.net);
}

TEST_CASE("knowledge and hybrid builds share structure and priors") {
  const auto& model = shipped_model();
  const auto cohort = toy_cohort(model, 800, 31);
  BuildConfig cfg;
  cfg.mode = BuildMode::knowledge;
  const auto k = build(model, cohort, cfg);
  cfg.mode = BuildMode::hybrid;
  const auto h = build(model, cohort, cfg);
  CHECK(validate_network(k.net).ok());
  CHECK(validate_network(h.net).ok());
  CHECK(k.net.variables() == h.net.variables());
  CHECK(k.net.edges() == h.net.edges());
  for (const auto& v : k.net.variables()) {
    if (!k.net.parents(v.name).empty()) continue;
    CHECK(*k.net.cpt(v.name) == *h.net.cpt(v.name));
    CHECK(k.provenance.nodes.at(v.name).origin == "learned");
  }
  CHECK(k.provenance.nodes.size() == 24);
  CHECK(h.provenance.nodes.at("demographic").synthesis.has_value());
  CHECK(h.provenance.nodes.at("bmi_risk").conditioned.has_value());
  CHECK(h.provenance.nodes.at("af").target.has_value());
  CHECK(h.provenance.training.n_train == 800);

  cfg.mode = BuildMode::data;
  const auto d = build(model, cohort, cfg);
  CHECK(validate_network(d.net).ok());
  CHECK(d.net.size() == 17);
  CHECK(d.provenance.nodes.size() == 17);
  CHECK(!d.provenance.score_trace.empty());
}

TEST_CASE("built models round-trip through files") {
  const auto& model = shipped_model();
  const auto cohort = toy_cohort(model, 300, 3);
  BuildConfig cfg;
  cfg.mode = BuildMode::hybrid;
  cfg.training.split_seed = 77;
  const auto built = build(model, cohort, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "riskbn_test_builder";
  std::filesystem::remove_all(dir);
  const auto path = dir / "hybrid.json";
  save_built_model(built, path);
  CHECK(std::filesystem::exists(dir / "hybrid.provenance.json"));
  const auto loaded = load_built_model(path);
  CHECK(loaded.net == built.net);
  CHECK(provenance_to_json(loaded.provenance) == provenance_to_json(built.provenance));
  CHECK(loaded.provenance.training.split_seed == 77);
  std::filesystem::remove_all(dir);
}

TEST_CASE("threshold overrides") {
  const auto& model = shipped_model();
  const auto cohort = toy_cohort(model, 200, 4);
  BuildConfig cfg;
  cfg.threshold_overrides["lifestyle"] = {0.0, 0.0};
  const auto built = build(model, cohort, cfg);
  const Cpt* cpt = built.net.cpt("lifestyle");
  for (Index r = 0; r < cpt->table.rows(); ++r) CHECK(cpt->table(r, 2) == 1.0);
  cfg.threshold_overrides = {{"nope", {0.1, 0.2}}};
  CHECK_THROWS_AS(build(model, cohort, cfg), ValidationError);
}
