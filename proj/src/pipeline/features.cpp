#include "riskbn/pipeline/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "riskbn/error.hpp"

namespace riskbn {
namespace {

std::vector<std::string> prefixes_from(const Json& j) {
  std::vector<std::string> out;
  for (const auto& p : j) out.push_back(normalize_icd(p.get<std::string>()));
  return out;
}

std::string upper(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

template <typename Record>
std::vector<Record> chronological(std::span<const Record> records, std::optional<Date> cutoff) {
  std::vector<Record> kept;
  for (const auto& r : records) {
    if (before_cutoff(r.date, cutoff)) kept.push_back(r);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Record& a, const Record& b) { return a.date < b.date; });
  return kept;
}

}  // namespace

FeatureConfig feature_config_from_json(const Json& doc) {
  FeatureConfig cfg;
  try {
    if (!doc.contains("target")) throw ConfigurationError("mapping: missing 'target' prefixes");
    cfg.target_prefixes = prefixes_from(doc.at("target"));
    const auto comorbidities = doc.value("comorbidities", Json::object());
    for (const auto& name : kComorbidityFactors) {
      if (!comorbidities.contains(name)) {
        throw ConfigurationError("mapping: missing comorbidity category '" + name + "'");
      }
      cfg.comorbidity_prefixes[name] = prefixes_from(comorbidities.at(name));
    }
    const auto lifestyle = doc.value("lifestyle", Json::object());
    for (const char* name : {"smoking_status", "alcohol_misuse"}) {
      if (!lifestyle.contains(name)) {
        throw ConfigurationError(std::string("mapping: missing lifestyle category '") + name + "'");
      }
    }
    cfg.smoking_prefixes = prefixes_from(lifestyle.at("smoking_status"));
    cfg.alcohol_prefixes = prefixes_from(lifestyle.at("alcohol_misuse"));
    if (doc.contains("bmi_cutoffs")) cfg.bmi_cutoffs = doc.at("bmi_cutoffs").get<std::vector<double>>();
    if (doc.contains("height_cutpoints")) {
      cfg.height_cutpoints_female = doc.at("height_cutpoints").at("female").get<std::vector<double>>();
      cfg.height_cutpoints_male = doc.at("height_cutpoints").at("male").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw ConfigurationError(std::string("mapping: ") + e.what());
  }
  auto increasing = [](const std::vector<double>& v, std::size_t n) {
    return v.size() == n && std::is_sorted(v.begin(), v.end()) &&
           std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!increasing(cfg.bmi_cutoffs, kBmiClasses.size() - 1)) {
    throw ConfigurationError("mapping: bmi_cutoffs must be 5 increasing values");
  }
  if (!increasing(cfg.height_cutpoints_female, kHeightGroups.size() - 1) ||
      !increasing(cfg.height_cutpoints_male, kHeightGroups.size() - 1)) {
    throw ConfigurationError("mapping: height cutpoints must be 4 increasing values per sex");
  }
  return cfg;
}

Json feature_config_to_json(const FeatureConfig& cfg) {
  Json comorbidities = Json::object();
  for (const auto& [name, prefixes] : cfg.comorbidity_prefixes) comorbidities[name] = prefixes;
  return {{"target", cfg.target_prefixes},
          {"comorbidities", comorbidities},
          {"lifestyle", {{"smoking_status", cfg.smoking_prefixes}, {"alcohol_misuse", cfg.alcohol_prefixes}}},
          {"bmi_cutoffs", cfg.bmi_cutoffs},
          {"height_cutpoints", {{"female", cfg.height_cutpoints_female}, {"male", cfg.height_cutpoints_male}}}};
}

bool matches_prefix(const std::string& code, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return code.rfind(p, 0) == 0; });
}

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string classify_bmi(double bmi, const FeatureConfig& config) {
  std::size_t k = 0;
  while (k < config.bmi_cutoffs.size() && bmi >= config.bmi_cutoffs[k]) ++k;
  return kBmiClasses[k];
}

std::optional<std::string> bmi_class(std::span<const MeasurementRecord> measurements,
                                     std::optional<Date> cutoff, const FeatureConfig& config) {
  std::vector<double> values;
  for (const auto& m : chronological(measurements, cutoff)) {
    if (m.kind == MeasurementKind::bmi) values.push_back(m.value);
  }
  if (values.empty()) return std::nullopt;
  double aggregate;
  if (population_std(values) <= 1.0) {
    aggregate = mean(values);
  } else {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      num += static_cast<double>(i + 1) * values[i];
      den += static_cast<double>(i + 1);
    }
    aggregate = num / den;
  }
  return classify_bmi(aggregate, config);
}

std::optional<std::string> height_group(std::span<const MeasurementRecord> measurements,
                                        const std::string& sex, std::optional<Date> cutoff,
                                        const FeatureConfig& config) {
  const std::vector<double>* cutpoints = nullptr;
  if (sex == "female") {
    cutpoints = &config.height_cutpoints_female;
  } else if (sex == "male") {
    cutpoints = &config.height_cutpoints_male;
  } else {
    throw ClassificationError("height_group: unknown sex state '" + sex + "'");
  }
  std::vector<double> values;
  for (const auto& m : measurements) {
    if (m.kind == MeasurementKind::height_cm && before_cutoff(m.date, cutoff)) values.push_back(m.value);
  }
  if (values.empty()) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi - *lo > 2.0) return std::nullopt;
  const double h = median(values);
  std::size_t band = 0;
  while (band < cutpoints->size() && h > (*cutpoints)[band]) ++band;
  return kHeightGroups[band];
}

std::string age_group(int age_years) {
  if (age_years < 18) throw ClassificationError("age must be >= 18, got " + std::to_string(age_years));
  if (age_years < 60) return kAgeGroups[0];
  if (age_years <= 64) return kAgeGroups[1];
  if (age_years <= 74) return kAgeGroups[2];
  return kAgeGroups[3];
}

std::string race_category(std::string_view raw) {
  const std::string text = upper(raw);
  std::vector<std::string> hits;
  if (text.find("ASIAN") != std::string::npos) hits.push_back("asian");
  if (text.find("BLACK") != std::string::npos) hits.push_back("black");
  if (text.find("HISPANIC") != std::string::npos || text.find("LATINO") != std::string::npos) {
    hits.push_back("hispanic");
  }
  if (text.find("WHITE") != std::string::npos) hits.push_back("white");
  return hits.size() == 1 ? hits.front() : "other";
}

std::string sex_category(std::string_view raw) {
  const std::string text = upper(trim(raw));
  if (text == "F" || text == "FEMALE") return "female";
  if (text == "M" || text == "MALE") return "male";
  throw ClassificationError("unmappable sex '" + std::string(raw) + "'");
}

Demographics demographic_features(int age_years, std::string_view race_raw, std::string_view sex_raw) {
  return {age_group(age_years), race_category(race_raw), sex_category(sex_raw)};
}

std::string classify_pwave(double median_ms) {
  static constexpr double kUpper[] = {90.0, 100.0, 106.0, 112.0, 120.0, 130.0};
  std::size_t k = 0;
  while (k < std::size(kUpper) && median_ms >= kUpper[k]) ++k;
  return kPwaveClasses[k];
}

std::optional<EcgFeatures> ecg_features(std::span<const EcgRecord> records, std::optional<Date> cutoff) {
  std::vector<double> pr, pwave;
  for (const auto& r : records) {
    if (!before_cutoff(r.date, cutoff)) continue;
    pr.push_back(r.pr_ms);
    pwave.push_back(r.pwave_ms);
  }
  if (pr.empty()) return std::nullopt;
  EcgFeatures f;
  f.prolonged_pr = median(pr) > 200.0 ? "present" : "absent";
  f.pr_variation = pr.size() >= 2 && population_std(pr) > 12.0 ? "present" : "absent";
  f.pwave_duration = classify_pwave(median(pwave));
  return f;
}

std::map<std::string, std::string> comorbidity_flags(std::span<const VisitRecord> visits,
                                                     std::optional<Date> cutoff,
                                                     const FeatureConfig& config) {
  for (const auto& name : kComorbidityFactors) {
    if (!config.comorbidity_prefixes.count(name)) {
      throw ConfigurationError("mapping: missing comorbidity category '" + name + "'");
    }
  }
  std::map<std::string, std::string> flags;
  for (const auto& name : kComorbidityFactors) flags[name] = "absent";
  flags["smoking_status"] = "nonsmoker";
  flags["alcohol_misuse"] = "absent";
  for (const auto& v : visits) {
    if (!before_cutoff(v.date, cutoff)) continue;
    for (const auto& code : v.icd_codes) {
      for (const auto& [name, prefixes] : config.comorbidity_prefixes) {
        if (matches_prefix(code, prefixes)) flags[name] = "present";
      }
      if (matches_prefix(code, config.smoking_prefixes)) flags["smoking_status"] = "smoker";
      if (matches_prefix(code, config.alcohol_prefixes)) flags["alcohol_misuse"] = "present";
    }
  }
  return flags;
}

}  // namespace riskbn
