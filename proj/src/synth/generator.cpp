#include "riskbn/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "riskbn/error.hpp"
#include "riskbn/synth/random.hpp"

namespace riskbn {

namespace {

const std::vector<std::string> kEcgFactors{"prolonged_pr", "pr_variation", "pwave_duration"};
constexpr std::uint64_t kRawStream = 0x9E3779B97F4A7C15ULL;

std::string patient_id(const char* prefix, Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06lld", prefix, static_cast<long long>(i + 1));
  return buf;
}

}  // namespace

GeneratorSpec generator_spec_from_json(const Json& doc) {
  try {
    GeneratorSpec s;
    s.n_patients = doc.at("n_patients").get<Index>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.intercept = doc.value("intercept", 0.0);
    s.balanced = doc.value("balanced", true);
    for (const auto& f : doc.at("factors")) {
      s.factors.push_back({f.at("name").get<std::string>(), f.at("distribution").get<std::vector<double>>(),
                           f.at("effects").get<std::vector<double>>()});
    }
    s.missingness = doc.value("missingness", std::map<std::string, double>{});
    if (doc.contains("visits")) {
      s.min_visits = doc["visits"].at("min").get<int>();
      s.max_visits = doc["visits"].at("max").get<int>();
    }
    s.distractor_rate = doc.value("distractor_rate", s.distractor_rate);
    s.single_ecg_rate = doc.value("single_ecg_rate", s.single_ecg_rate);
    s.height_conflict_share = doc.value("height_conflict_share", s.height_conflict_share);
    return s;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("generator spec: ") + e.what());
  }
}

Json generator_spec_to_json(const GeneratorSpec& s) {
  Json factors = Json::array();
  for (const auto& f : s.factors) {
    factors.push_back({{"name", f.name}, {"distribution", f.distribution}, {"effects", f.effects}});
  }
  return {{"n_patients", s.n_patients},
          {"seed", s.seed},
          {"intercept", s.intercept},
          {"balanced", s.balanced},
          {"factors", factors},
          {"missingness", s.missingness},
          {"visits", {{"min", s.min_visits}, {"max", s.max_visits}}},
          {"distractor_rate", s.distractor_rate},
          {"single_ecg_rate", s.single_ecg_rate},
          {"height_conflict_share", s.height_conflict_share}};
}

void validate_generator_spec(const GeneratorSpec& spec, const KnowledgeModel& model) {
  std::vector<std::string> v;
  if (spec.n_patients < 1) v.push_back("n_patients: must be >= 1");
  if (spec.balanced && spec.n_patients % 2 != 0) v.push_back("n_patients: balanced cohorts need an even count");
  const auto factors = factors_of(model);
  if (spec.factors.size() != factors.size()) {
    v.push_back("factors: expected " + std::to_string(factors.size()) + " entries");
  }
  for (std::size_t i = 0; i < std::min(spec.factors.size(), factors.size()); ++i) {
    const auto& g = spec.factors[i];
    const std::string where = "factors[" + std::to_string(i) + "]";
    if (g.name != factors[i]->name) {
      v.push_back(where + ".name: expected " + factors[i]->name);
      continue;
    }
    const auto k = factors[i]->states.size();
    if (g.distribution.size() != k) v.push_back(where + ".distribution: expected " + std::to_string(k) + " entries");
    if (g.effects.size() != k) v.push_back(where + ".effects: expected " + std::to_string(k) + " entries");
    if (std::any_of(g.distribution.begin(), g.distribution.end(), [](double p) { return !(p >= 0.0); })) {
      v.push_back(where + ".distribution: negative probability");
    }
    if (std::abs(std::accumulate(g.distribution.begin(), g.distribution.end(), 0.0) - 1.0) > 1e-9) {
      v.push_back(where + ".distribution: does not sum to 1");
    }
    if (std::any_of(g.effects.begin(), g.effects.end(), [](double e) { return !std::isfinite(e); })) {
      v.push_back(where + ".effects: not finite");
    }
  }
  for (const auto& [key, rate] : spec.missingness) {
    if (key != "ecg" && !find_factor(model, key)) v.push_back("missingness." + key + ": unknown factor");
    if (!(rate >= 0.0 && rate < 1.0)) v.push_back("missingness." + key + ": rate must lie in [0, 1)");
  }
  if (spec.min_visits < 3 || spec.max_visits < spec.min_visits) {
    v.push_back("visits: need 3 <= min <= max");
  }
  for (auto [name, x] : {std::pair{"distractor_rate", spec.distractor_rate},
                         std::pair{"single_ecg_rate", spec.single_ecg_rate},
                         std::pair{"height_conflict_share", spec.height_conflict_share}}) {
    if (!(x >= 0.0 && x <= 1.0)) v.push_back(std::string(name) + ": must lie in [0, 1]");
  }
  if (!v.empty()) throw ValidationError(std::move(v));
}

CohortTable generate_cohort(const GeneratorSpec& spec, const KnowledgeModel& model) {
  validate_generator_spec(spec, model);
  CohortTable out = empty_cohort(model);
  std::vector<std::vector<Index>> missing_groups;
  std::vector<double> missing_rates;
  for (const auto& [key, rate] : spec.missingness) {
    std::vector<Index> cols;
    for (const auto& name : key == "ecg" ? kEcgFactors : std::vector<std::string>{key}) {
      cols.push_back(out.column_index(name));
    }
    missing_groups.push_back(std::move(cols));
    missing_rates.push_back(rate);
  }

  Rng rng(spec.seed);
  const Index want_pos = spec.balanced ? spec.n_patients / 2 : -1;
  const Index want_neg = spec.balanced ? spec.n_patients - want_pos : -1;
  Index pos = 0, neg = 0;
  const Index max_draws = 1000 * spec.n_patients + 1000;
  for (Index draws = 0; static_cast<Index>(out.rows.size()) < spec.n_patients; ++draws) {
    if (draws == max_draws) {
      throw DataError("generator_stalled", "could not fill the label quota; check the intercept and effects");
    }
    PatientFeatures row;
    double z = spec.intercept;
    for (const auto& g : spec.factors) {
      const auto s = rng.categorical(g.distribution);
      row.values.push_back(static_cast<Index>(s));
      z += g.effects[s];
    }
    row.label = rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1 : 0;
    for (std::size_t m = 0; m < missing_groups.size(); ++m) {
      if (!rng.bernoulli(missing_rates[m])) continue;
      for (Index c : missing_groups[m]) row.values[static_cast<std::size_t>(c)] = kMissing;
    }
    if (spec.balanced) {
      if (row.label == 1 && pos == want_pos) continue;
      if (row.label == 0 && neg == want_neg) continue;
    }
    (row.label == 1 ? pos : neg) += 1;
    row.patient_id = patient_id("P", static_cast<Index>(out.rows.size()));
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

// Midpoint of each class interval; open ends extend by `edge`.
std::vector<double> class_centers(const std::vector<double>& bounds, double edge) {
  std::vector<double> c{bounds.front() - edge};
  for (std::size_t i = 1; i < bounds.size(); ++i) c.push_back((bounds[i - 1] + bounds[i]) / 2.0);
  c.push_back(bounds.back() + edge);
  return c;
}

const std::vector<double> kPwaveCenters{85.0, 95.0, 103.0, 109.0, 116.0, 125.0, 136.0};

std::string raw_race(const std::string& race) {
  if (race == "asian") return "ASIAN - CHINESE";
  if (race == "black") return "BLACK/AFRICAN AMERICAN";
  if (race == "hispanic") return "HISPANIC/LATINO - PUERTO RICAN";
  if (race == "white") return "WHITE";
  return "UNKNOWN";
}

int raw_age(Rng& rng, const std::string& group) {
  if (group == "<60") return rng.between(35, 59);
  if (group == "60-64") return rng.between(60, 64);
  if (group == "65-74") return rng.between(65, 74);
  return rng.between(75, 92);
}

class RawWriter {
 public:
  RawWriter(const GeneratorSpec& spec, const FeatureConfig& config, RawFixture& out)
      : spec_(spec), config_(config), out_(out), rng_(spec.seed ^ kRawStream) {}

  std::string code(const std::vector<std::string>& prefixes) {
    return prefixes[static_cast<std::size_t>(rng_.below(prefixes.size()))] + "0";
  }

  std::vector<Date> visit_dates(int n) {
    std::vector<Date> dates;
    Date d = Date::parse("2012-01-01").plus_days(rng_.between(0, 1500));
    for (int i = 0; i < n; ++i) {
      dates.push_back(d);
      d = d.plus_days(rng_.between(14, 150));
    }
    return dates;
  }

  void patient(const CohortTable& cohort, const PatientFeatures& row) {
    const auto state = [&](const std::string& factor) -> std::optional<std::string> {
      const Index s = row.values[static_cast<std::size_t>(cohort.column_index(factor))];
      if (s == kMissing) return std::nullopt;
      return cohort.columns[static_cast<std::size_t>(cohort.column_index(factor))].states[static_cast<std::size_t>(s)];
    };
    const std::string& id = row.patient_id;
    const std::string sex = *state("sex");
    out_.raw.patients.push_back({id, raw_age(rng_, *state("age_group")), raw_race(*state("race")),
                                 sex == "female" ? "F" : "M"});

    const int n = rng_.between(spec_.min_visits, spec_.max_visits);
    const auto dates = visit_dates(n);
    // Positives: first target code at visit t >= 2, so two earlier dates exist.
    const int t = row.label == 1 ? rng_.between(2, n - 1) : n;
    std::vector<std::vector<std::string>> codes(static_cast<std::size_t>(n));
    const auto pre = [&]() { return static_cast<std::size_t>(rng_.below(static_cast<std::uint64_t>(t))); };
    for (int i = 0; i < n; ++i) {
      if (rng_.bernoulli(0.5)) codes[static_cast<std::size_t>(i)].push_back("Z0000");
    }
    std::vector<std::string> absent;
    for (const auto& [factor, prefixes] : config_.comorbidity_prefixes) {
      if (state(factor) == "present") {
        codes[pre()].push_back(code(prefixes));
      } else {
        absent.push_back(factor);
      }
    }
    if (state("smoking_status") == "smoker") codes[pre()].push_back(code(config_.smoking_prefixes));
    if (state("alcohol_misuse") == "present") codes[pre()].push_back(code(config_.alcohol_prefixes));

    const bool poison = row.label == 1;
    if (row.label == 1) {
      codes[static_cast<std::size_t>(t)].push_back(code(config_.target_prefixes));
      // Post-cutoff poison: codes for absent conditions and lifestyle flags.
      for (const auto& factor : absent) codes[static_cast<std::size_t>(t)].push_back(code(config_.comorbidity_prefixes.at(factor)));
      codes[static_cast<std::size_t>(t)].push_back(code(config_.smoking_prefixes));
      codes[static_cast<std::size_t>(n - 1)].push_back(code(config_.alcohol_prefixes));
      out_.poisoned.push_back(id);
    }
    for (int i = 0; i < n; ++i) out_.raw.visits.push_back({id, dates[static_cast<std::size_t>(i)], codes[static_cast<std::size_t>(i)]});

    const auto pre_date = [&]() { return dates[pre()]; };
    if (const auto bmi = state("bmi_class")) {
      const auto centers = class_centers(config_.bmi_cutoffs, 1.5);
      const double c = centers[static_cast<std::size_t>(std::find(kBmiClasses.begin(), kBmiClasses.end(), *bmi) - kBmiClasses.begin())];
      const int k = rng_.between(1, 3);
      for (int i = 0; i < k; ++i) {
        out_.raw.measurements.push_back({id, pre_date(), MeasurementKind::bmi, c + 0.6 * (rng_.uniform() - 0.5)});
      }
    }
    const auto& cuts = sex == "female" ? config_.height_cutpoints_female : config_.height_cutpoints_male;
    if (const auto band = state("height_group")) {
      const auto centers = class_centers(cuts, 3.0);
      const double c = centers[static_cast<std::size_t>(std::find(kHeightGroups.begin(), kHeightGroups.end(), *band) - kHeightGroups.begin())];
      const int k = rng_.between(1, 2);
      for (int i = 0; i < k; ++i) {
        out_.raw.measurements.push_back({id, pre_date(), MeasurementKind::height_cm, c + 0.8 * (rng_.uniform() - 0.5)});
      }
    } else if (rng_.bernoulli(spec_.height_conflict_share)) {
      const double h = cuts[1];
      out_.raw.measurements.push_back({id, dates[0], MeasurementKind::height_cm, h});
      out_.raw.measurements.push_back({id, dates[1], MeasurementKind::height_cm, h + 3.0});
      out_.height_conflicts.push_back(id);
    }
    if (state("prolonged_pr")) {
      const double base = *state("prolonged_pr") == "present" ? 215.0 : 170.0;
      const auto pclass = *state("pwave_duration");
      const double pw = kPwaveCenters[static_cast<std::size_t>(std::find(kPwaveClasses.begin(), kPwaveClasses.end(), pclass) - kPwaveClasses.begin())];
      std::vector<double> pr;
      if (*state("pr_variation") == "present") {
        pr = {base - 16.0, base, base + 16.0};
      } else if (rng_.bernoulli(spec_.single_ecg_rate)) {
        pr = {base};
        out_.single_ecg.push_back(id);
      } else {
        pr = {base - 2.0, base + 2.0};
      }
      for (double v : pr) out_.raw.ecg.push_back({id, pre_date(), v, pw + 2.0 * (rng_.uniform() - 0.5)});
    }
    if (poison) {
      const Date cutoff = dates[static_cast<std::size_t>(t)];
      out_.raw.measurements.push_back({id, cutoff, MeasurementKind::bmi, 52.0});
      out_.raw.measurements.push_back({id, cutoff.plus_days(3), MeasurementKind::height_cm, 199.0});
      out_.raw.ecg.push_back({id, cutoff, 290.0, 150.0});
    }
  }

  void distractor(Index i) {
    const std::string id = patient_id("D", i);
    out_.raw.patients.push_back({id, rng_.between(40, 90), "WHITE", rng_.bernoulli(0.5) ? "F" : "M"});
    if (rng_.bernoulli(0.5)) {
      // Target coded at the first visit: no pre-diagnosis history.
      const auto dates = visit_dates(4);
      out_.raw.visits.push_back({id, dates[0], {code(config_.target_prefixes)}});
      for (std::size_t k = 1; k < dates.size(); ++k) out_.raw.visits.push_back({id, dates[k], {}});
    } else {
      // Two visits only.
      for (const auto& d : visit_dates(2)) out_.raw.visits.push_back({id, d, {code(config_.comorbidity_prefixes.begin()->second)}});
    }
    out_.distractors.push_back(id);
  }

 private:
  const GeneratorSpec& spec_;
  const FeatureConfig& config_;
  RawFixture& out_;
  Rng rng_;
};

}  // namespace

RawFixture generate_raw(const GeneratorSpec& spec, const KnowledgeModel& model, const FeatureConfig& config) {
  for (const auto& [key, rate] : spec.missingness) {
    if (key != "ecg" && key != "bmi_class" && key != "height_group") {
      throw ConfigurationError("missingness for " + key + " has no raw-record representation");
    }
  }
  RawFixture out;
  out.cohort = generate_cohort(spec, model);
  RawWriter writer(spec, config, out);
  for (const auto& row : out.cohort.rows) writer.patient(out.cohort, row);
  const auto distractors = static_cast<Index>(std::llround(spec.distractor_rate * static_cast<double>(spec.n_patients)));
  for (Index i = 0; i < distractors; ++i) writer.distractor(i);
  return out;
}

}  // namespace riskbn
