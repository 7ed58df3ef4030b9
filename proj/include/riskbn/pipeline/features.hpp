#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/pipeline/records.hpp"

namespace riskbn {

// ICD prefix table plus the configurable class boundaries. Loaded from the
// mapping JSON document.
struct FeatureConfig {
  std::vector<std::string> target_prefixes;
  // Factor name -> ICD prefixes. Must cover the six comorbidity categories.
  std::map<std::string, std::vector<std::string>> comorbidity_prefixes;
  std::vector<std::string> smoking_prefixes;
  std::vector<std::string> alcohol_prefixes;
  // Lower bounds of normal, overweight, obese_1, obese_2, obese_3 (WHO adult).
  std::vector<double> bmi_cutoffs{18.5, 25.0, 30.0, 35.0, 40.0};
  // Upper bounds of bands 1-4 (inclusive); band 5 is everything above.
  std::vector<double> height_cutpoints_female{155.0, 158.0, 160.0, 163.0};
  std::vector<double> height_cutpoints_male{168.0, 172.0, 175.0, 178.0};
};

inline const std::vector<std::string> kComorbidityFactors{
    "cardiovascular_disease", "diabetes_mellitus", "hypertension",
    "kidney_disease",         "copd",              "sleep_apnoea"};
inline const std::vector<std::string> kBmiClasses{"underweight", "normal",  "overweight",
                                                  "obese_1",     "obese_2", "obese_3"};
inline const std::vector<std::string> kHeightGroups{"band_1", "band_2", "band_3", "band_4", "band_5"};
inline const std::vector<std::string> kAgeGroups{"<60", "60-64", "65-74", ">74"};
inline const std::vector<std::string> kRaces{"asian", "black", "hispanic", "white", "other"};
inline const std::vector<std::string> kSexes{"female", "male"};
inline const std::vector<std::string> kPwaveClasses{"very_short",     "short", "normal",   "intermediate_1",
                                                    "intermediate_2", "long",  "very_long"};

// Throws ConfigurationError when a category is missing.
FeatureConfig feature_config_from_json(const Json& doc);
Json feature_config_to_json(const FeatureConfig& config);

bool matches_prefix(const std::string& code, const std::vector<std::string>& prefixes);

// Records strictly before the cutoff are kept; no cutoff keeps everything.
inline bool before_cutoff(const Date& d, const std::optional<Date>& cutoff) {
  return !cutoff || d < *cutoff;
}

double mean(std::span<const double> xs);
// Population standard deviation (divisor n).
double population_std(std::span<const double> xs);
double median(std::vector<double> xs);

std::string classify_bmi(double bmi, const FeatureConfig& config = {});

// BMI class from one patient's measurements (other kinds are ignored). Mean
// when the population std is <= 1, otherwise a mean weighted by
// chronological rank 1..n. nullopt when no BMI record precedes the cutoff.
std::optional<std::string> bmi_class(std::span<const MeasurementRecord> measurements,
                                     std::optional<Date> cutoff, const FeatureConfig& config = {});

// Median height mapped to a sex-specific band. nullopt when there are no
// height records or they span more than 2 cm. Throws ClassificationError
// for an unknown sex state.
std::optional<std::string> height_group(std::span<const MeasurementRecord> measurements,
                                        const std::string& sex, std::optional<Date> cutoff,
                                        const FeatureConfig& config = {});

struct Demographics {
  std::string age_group;
  std::string race;
  std::string sex;
};

std::string age_group(int age_years);
// Unknown, missing or ambiguous race text maps to "other".
std::string race_category(std::string_view raw);
// Throws ClassificationError when the text is not a recognizable sex.
std::string sex_category(std::string_view raw);
Demographics demographic_features(int age_years, std::string_view race_raw, std::string_view sex_raw);

struct EcgFeatures {
  std::string prolonged_pr;
  std::string pr_variation;
  std::string pwave_duration;
};

std::string classify_pwave(double median_ms);
// nullopt when no ECG precedes the cutoff. A single record yields
// pr_variation = absent.
std::optional<EcgFeatures> ecg_features(std::span<const EcgRecord> records, std::optional<Date> cutoff);

// Six comorbidity flags plus smoking_status and alcohol_misuse, keyed by
// factor name, from visits before the cutoff.
std::map<std::string, std::string> comorbidity_flags(std::span<const VisitRecord> visits,
                                                     std::optional<Date> cutoff,
                                                     const FeatureConfig& config);

}  // namespace riskbn
