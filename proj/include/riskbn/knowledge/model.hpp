#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/types.hpp"

namespace riskbn {

struct Publication {
  std::string title;
  std::string identifier;  // DOI or similar; also the key evidence items cite
  int year = 0;
  std::vector<std::string> authors;

  friend bool operator==(const Publication&, const Publication&) = default;
};

struct EvidenceItem {
  std::string summary;
  Publication publication;

  friend bool operator==(const EvidenceItem&, const EvidenceItem&) = default;
};

// Relative risk of one factor state (hazard or risk ratio against the
// reference state), with its supporting evidence.
struct RiskRelationship {
  std::string state;
  double scaling_factor = 1.0;
  std::vector<EvidenceItem> evidence;
  // Value chosen without a citable source.
  bool provisional = false;

  friend bool operator==(const RiskRelationship&, const RiskRelationship&) = default;
};

struct RiskFactor {
  std::string name;
  std::vector<std::string> states;
  double weight = 0.0;  // share within its category
  std::vector<RiskRelationship> relationships;  // aligned with states

  friend bool operator==(const RiskFactor&, const RiskFactor&) = default;
};

struct SynthesisThresholds {
  double t1 = 0.45;
  double t2 = 0.55;

  friend bool operator==(const SynthesisThresholds&, const SynthesisThresholds&) = default;
};

struct FactorCategory {
  std::string name;
  double weight = 0.0;  // share in the target risk
  SynthesisThresholds thresholds;
  std::vector<RiskFactor> factors;

  friend bool operator==(const FactorCategory&, const FactorCategory&) = default;
};

// Synthesis node whose risk depends jointly on a conditioning factor (sex)
// and a base factor (BMI class, height group). It replaces the base factor
// as a parent of the base factor's category node.
struct SexConditionedNode {
  std::string name;
  std::string conditioning_factor;
  std::string base_factor;
  Matrix scaling_factors;  // conditioning states x base states
  SynthesisThresholds thresholds;

  friend bool operator==(const SexConditionedNode& a, const SexConditionedNode& b) {
    return a.name == b.name && a.conditioning_factor == b.conditioning_factor &&
           a.base_factor == b.base_factor && a.thresholds == b.thresholds &&
           a.scaling_factors.rows() == b.scaling_factors.rows() &&
           a.scaling_factors.cols() == b.scaling_factors.cols() &&
           a.scaling_factors == b.scaling_factors;
  }
};

struct TargetSpec {
  std::string name;
  std::string condition;
  std::vector<std::string> states{"absent", "present"};

  const std::string& positive_state() const { return states.at(1); }
  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

// Probability contribution of a category in each synthesis state.
struct TargetScores {
  double low = 0.1;
  double medium = 0.5;
  double high = 0.9;

  friend bool operator==(const TargetScores&, const TargetScores&) = default;
};

inline const std::vector<std::string> kSynthesisStates{"low", "medium", "high"};
inline const std::vector<std::string> kCategoryNames{"anthropometric", "comorbidity", "demographic",
                                                     "ecg", "lifestyle"};
inline constexpr int kKnowledgeFormatVersion = 1;

struct KnowledgeModel {
  int version = kKnowledgeFormatVersion;
  TargetSpec target;
  TargetScores target_scores;
  std::vector<Publication> publications;
  std::vector<FactorCategory> categories;
  std::vector<SexConditionedNode> sex_conditioned;

  friend bool operator==(const KnowledgeModel&, const KnowledgeModel&) = default;
};

// Parses and validates. Throws ParseError for malformed JSON or missing
// fields and ValidationError (one entry per violation, each with a field
// path) for violated invariants.
KnowledgeModel load_model(std::string_view document);
KnowledgeModel load_model_file(const std::filesystem::path& path);

Json model_to_json(const KnowledgeModel& model);
std::string save_model(const KnowledgeModel& model);

// Empty when the model satisfies every invariant.
std::vector<std::string> model_violations(const KnowledgeModel& model);

// Scaling factors rescaled to sum to one.
Vector normalized_risks(const RiskFactor& factor);

// Throws LookupError for an unknown factor or state.
std::vector<EvidenceItem> evidence_for(const KnowledgeModel& model, std::string_view factor,
                                       std::string_view state);

// Factors in document order (category order, then factor order).
std::vector<const RiskFactor*> factors_of(const KnowledgeModel& model);
// nullptr when absent.
const RiskFactor* find_factor(const KnowledgeModel& model, std::string_view name);
const FactorCategory& category_of(const KnowledgeModel& model, std::string_view factor);
const SexConditionedNode* conditioned_node_for(const KnowledgeModel& model, std::string_view base_factor);

struct SummaryRow {
  std::string category;
  std::string factor;
  double weight;
  int state_count;
  int evidence_count;
};

// One row per factor, ordered by category then factor name.
std::vector<SummaryRow> model_summary(const KnowledgeModel& model);
std::string format_summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace riskbn
