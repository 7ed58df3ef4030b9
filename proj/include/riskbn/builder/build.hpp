#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskbn/builder/hill_climb.hpp"
#include "riskbn/builder/learning.hpp"

namespace riskbn {

enum class BuildMode { knowledge, data, hybrid };

std::string to_string(BuildMode mode);
// Throws ValidationError for unknown names.
BuildMode build_mode_from_string(std::string_view name);

struct TrainingInfo {
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  bool stratified = true;
  Index n_train = 0;
};

struct BuildConfig {
  BuildMode mode = BuildMode::knowledge;
  double laplace_alpha = 1.0;
  std::uint64_t seed = 0;
  HillClimbConfig hill_climb;
  std::map<std::string, SynthesisThresholds> threshold_overrides;
  TrainingInfo training;
};

struct NodeProvenance {
  std::string origin;  // "learned" or "synthesized"
  std::optional<SynthesisSpec> synthesis;
  std::optional<ConditionedSpec> conditioned;
  std::optional<TargetCptSpec> target;
};

struct Provenance {
  BuildMode mode = BuildMode::knowledge;
  int knowledge_model_version = kKnowledgeFormatVersion;
  std::string target;
  std::string positive_state;
  double laplace_alpha = 1.0;
  TrainingInfo training;
  std::map<std::string, NodeProvenance> nodes;
  std::map<std::string, double> cramers_v;
  std::vector<double> score_trace;
  std::vector<std::string> warnings;
};

struct BuiltModel {
  DiscreteBayesNet net;
  Provenance provenance;
};

// Root per factor, conditioned nodes in place of their base factor as
// category parents, one synthesis node per category, and the target.
DiscreteBayesNet knowledge_structure(const KnowledgeModel& model);

BuiltModel build(const KnowledgeModel& model, const CohortTable& train, const BuildConfig& config);

Json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const Json& doc);

// <stem>.provenance.json next to the network file.
std::filesystem::path provenance_path(const std::filesystem::path& model_path);
void save_built_model(const BuiltModel& built, const std::filesystem::path& model_path);
BuiltModel load_built_model(const std::filesystem::path& model_path);

}  // namespace riskbn
