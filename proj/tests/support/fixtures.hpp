#pragma once

#include <string>

#include "riskbn/knowledge/model.hpp"

namespace riskbn::testing {

inline std::string data_path(const std::string& name) { return std::string(RISKBN_DATA_DIR) + "/" + name; }

inline const KnowledgeModel& shipped_model() {
  static const KnowledgeModel model = load_model_file(data_path("af_knowledge.json"));
  return model;
}

// One category, one binary factor.
inline std::string minimal_model_json(double category_weight = 1.0) {
  return R"({
    "version": 1,
    "target": {"name": "af", "condition": "Atrial fibrillation", "states": ["absent", "present"]},
    "publications": [{"identifier": "ref:x", "title": "A study", "year": 2020, "authors": ["A"]}],
    "categories": [{
      "name": "lifestyle", "weight": )" +
         std::to_string(category_weight) + R"(,
      "factors": [{
        "name": "smoking_status", "weight": 1.0, "states": ["nonsmoker", "smoker"],
        "relationships": [
          {"state": "nonsmoker", "scaling_factor": 1.0},
          {"state": "smoker", "scaling_factor": 1.32,
           "evidence": [{"summary": "Smoking raises risk.", "publication": "ref:x"}]}
        ]
      }]
    }]
  })";
}

}  // namespace riskbn::testing

#include "riskbn/pipeline/features.hpp"

namespace riskbn::testing {

inline const FeatureConfig& shipped_mapping() {
  static const FeatureConfig config = feature_config_from_json(read_json_file(data_path("icd_mapping.json")));
  return config;
}

}  // namespace riskbn::testing

#include <cmath>
#include <random>

#include "riskbn/pipeline/cohort.hpp"

namespace riskbn::testing {

// Uniform factor states with ~10% missing ECG values; the label follows a
// logistic model whose log-odds rise by `age_effect` per age group and by
// 0.8 for hypertension.
inline CohortTable toy_cohort(const KnowledgeModel& model, int n, std::uint64_t seed, double age_effect = 0.9) {
  CohortTable c = empty_cohort(model);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index age = c.column_index("age_group");
  const Index htn = c.column_index("hypertension");
  for (int i = 0; i < n; ++i) {
    PatientFeatures p;
    char id[16];
    std::snprintf(id, sizeof id, "t%05d", i);
    p.patient_id = id;
    for (const auto& col : c.columns) {
      p.values.push_back(static_cast<Index>(u(rng) * static_cast<double>(col.cardinality())));
    }
    for (const char* ecg : {"prolonged_pr", "pr_variation", "pwave_duration"}) {
      if (u(rng) < 0.1) p.values[static_cast<std::size_t>(c.column_index(ecg))] = kMissing;
    }
    const double z = -1.6 + age_effect * static_cast<double>(p.values[static_cast<std::size_t>(age)]) +
                     0.8 * static_cast<double>(p.values[static_cast<std::size_t>(htn)]);
    p.label = u(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    c.rows.push_back(std::move(p));
  }
  return c;
}

}  // namespace riskbn::testing

#include "riskbn/synth/generator.hpp"

namespace riskbn::testing {

inline const GeneratorSpec& shipped_generator() {
  static const GeneratorSpec spec = generator_spec_from_json(read_json_file(data_path("generator_af.json")));
  return spec;
}

// All effects zero; uniform states.
inline GeneratorSpec null_generator(const KnowledgeModel& model, Index n, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.n_patients = n;
  spec.seed = seed;
  spec.balanced = false;
  for (const RiskFactor* f : factors_of(model)) {
    const auto k = f->states.size();
    spec.factors.push_back({f->name, std::vector<double>(k, 1.0 / static_cast<double>(k)), std::vector<double>(k, 0.0)});
  }
  return spec;
}

}  // namespace riskbn::testing
