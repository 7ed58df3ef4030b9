#pragma once

#include <string>
#include <vector>

#include "riskbn/bn/network.hpp"
#include "riskbn/bn/serialize.hpp"
#include "riskbn/knowledge/model.hpp"

namespace riskbn {

// Deterministic CPT for a three-state (low, medium, high) node whose risk is
// a weighted sum of normalized per-state parent risks.
struct SynthesisSpec {
  std::string node;
  std::vector<std::string> parents;
  Vector weights;
  std::vector<Vector> risks;  // one per parent, over that parent's states
  SynthesisThresholds thresholds;
};

// Synthesis node keyed jointly on a conditioning factor and a base factor.
// Risks are normalized within each conditioning row.
struct ConditionedSpec {
  std::string node;
  std::string conditioning;
  std::string base;
  Matrix risks;  // conditioning states x base states
  SynthesisThresholds thresholds;
};

// Category-to-target mapping: P(present) = sum_c w_c * score(state_c).
struct TargetCptSpec {
  std::string node;
  std::vector<std::string> parents;  // category nodes
  Vector weights;
  TargetScores scores;
};

inline constexpr double kWeightTolerance = 1e-6;
inline constexpr double kRiskTolerance = 1e-9;
inline constexpr double kTargetFloor = 0.01;
inline constexpr double kTargetCeiling = 0.99;

// low = 0 when R < t1, medium = 1 when t1 <= R <= t2, high = 2 when R > t2.
Index synthesis_state(double risk, const SynthesisThresholds& t);

// Midpoint of the risk range under uninformative parents: sum_i w_i / k_i.
double neutral_risk(const Vector& weights, const std::vector<Index>& cardinalities);
// Thresholds at 0.9 and 1.1 times the neutral risk.
SynthesisThresholds centered_thresholds(double neutral);

std::vector<std::string> spec_violations(const SynthesisSpec& spec);

// R for one joint parent configuration (state indices, first parent first).
double total_risk(const SynthesisSpec& spec, const std::vector<Index>& states);

// Throws ValidationError when spec invariants fail.
Cpt synthesize_cpt(const SynthesisSpec& spec);
Cpt synthesize_cpt(const ConditionedSpec& spec);
Cpt target_cpt(const TargetCptSpec& spec);

// Scaling factors of each conditioning row rescaled to sum to one.
Matrix normalized_risks(const SexConditionedNode& node);
// Normalized target scores; the risk vector of a synthesis-node parent.
Vector synthesis_parent_risks(const TargetScores& scores);

Json to_json(const SynthesisSpec& spec);
Json to_json(const ConditionedSpec& spec);
Json to_json(const TargetCptSpec& spec);
SynthesisSpec synthesis_spec_from_json(const Json& doc);
ConditionedSpec conditioned_spec_from_json(const Json& doc);
TargetCptSpec target_spec_from_json(const Json& doc);

}  // namespace riskbn
