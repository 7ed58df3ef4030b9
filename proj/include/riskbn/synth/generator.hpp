#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/knowledge/model.hpp"
#include "riskbn/pipeline/cohort.hpp"
#include "riskbn/pipeline/features.hpp"

namespace riskbn {

struct FactorGenerator {
  std::string name;
  std::vector<double> distribution;  // over the factor's states
  std::vector<double> effects;       // log-odds contribution per state
};

// Synthetic cohort recipe. Factors are independent; the label is logistic
// in the summed effects. With `balanced`, candidates are drawn until each
// label fills half of n_patients.
struct GeneratorSpec {
  Index n_patients = 100;
  std::uint64_t seed = 0;
  double intercept = 0.0;
  bool balanced = true;
  std::vector<FactorGenerator> factors;  // knowledge-model factor order
  // Factor name, or "ecg" for the three ECG factors jointly, to missing rate.
  std::map<std::string, double> missingness;
  int min_visits = 3;
  int max_visits = 8;
  // Ineligible extra patients in raw output, as a fraction of n_patients.
  double distractor_rate = 0.1;
  // Share of observed-ECG patients without PR variation given one ECG only.
  double single_ecg_rate = 0.2;
  // Share of missing heights produced by conflicting measurements.
  double height_conflict_share = 0.5;
};

GeneratorSpec generator_spec_from_json(const Json& doc);
Json generator_spec_to_json(const GeneratorSpec& spec);

// Throws ValidationError listing every violated invariant, including a
// mismatch with the model's factors and states.
void validate_generator_spec(const GeneratorSpec& spec, const KnowledgeModel& model);

// Patient ids P000001.. in generation order.
CohortTable generate_cohort(const GeneratorSpec& spec, const KnowledgeModel& model);

struct RawFixture {
  RawTables raw;
  CohortTable cohort;  // equals generate_cohort(spec, model)
  std::vector<std::string> height_conflicts;  // planted >2 cm spreads
  std::vector<std::string> single_ecg;
  std::vector<std::string> poisoned;  // positives with post-cutoff records
  std::vector<std::string> distractors;
};

// Raw tables whose pipeline output reproduces the generated cohort. Throws
// ConfigurationError when a missingness key has no raw representation
// (only bmi_class, height_group and ecg do).
RawFixture generate_raw(const GeneratorSpec& spec, const KnowledgeModel& model, const FeatureConfig& config);

}  // namespace riskbn
