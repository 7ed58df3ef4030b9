#pragma once

#include <string>
#include <vector>

#include "riskbn/builder/build.hpp"
#include "riskbn/knowledge/model.hpp"

namespace riskbn {

struct Citation {
  std::string summary;
  std::string title;
  std::string identifier;
  int year = 0;

  friend bool operator==(const Citation&, const Citation&) = default;
};

struct Contribution {
  std::string factor;
  std::string state;
  // P(positive | E) - P(positive | E without this item).
  double delta = 0.0;
  std::vector<Citation> citations;  // empty means no recorded evidence

  friend bool operator==(const Contribution&, const Contribution&) = default;
};

struct ModelReference {
  int version = 0;
  std::string mode;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelReference&, const ModelReference&) = default;
};

struct RiskReport {
  std::string patient;
  double p_present = 0.0;
  std::string classification;
  std::vector<Contribution> contributions;  // |delta| descending, then factor
  ModelReference model;

  friend bool operator==(const RiskReport&, const RiskReport&) = default;
};

inline constexpr const char* kNoRecordedEvidence = "no recorded evidence";

// Leave-one-out attribution over every evidence item. Citations come from
// the knowledge model; evidence on nodes it does not describe gets none.
std::vector<Contribution> contributions(const BuiltModel& built, const KnowledgeModel& model,
                                        const Evidence& evidence);

RiskReport risk_report(const BuiltModel& built, const KnowledgeModel& model, const Evidence& evidence,
                       const std::string& patient = "");

Json report_to_json(const RiskReport& report);
RiskReport report_from_json(const Json& doc);

}  // namespace riskbn
