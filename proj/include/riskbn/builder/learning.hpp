#pragma once

#include <map>
#include <string>
#include <vector>

#include "riskbn/builder/synthesis.hpp"
#include "riskbn/pipeline/cohort.hpp"

namespace riskbn {

// Fully observed rows over a fixed variable list.
struct Dataset {
  std::vector<Variable> variables;
  std::vector<std::vector<Index>> rows;
};

// Complete-case rows of the cohort with the label appended as a final
// variable named after the target.
Dataset complete_cases(const CohortTable& cohort, const TargetSpec& target);

// Laplace-smoothed CPTs for every variable of net given its current edges;
// rows with an unseen parent configuration and alpha = 0 are uniform.
void fit_parameters(DiscreteBayesNet& net, const Dataset& data, double alpha);

struct PriorsResult {
  std::vector<Cpt> priors;
  std::vector<std::string> warnings;
};

// (count + alpha) / (n_observed + alpha * k) for each parentless cohort
// column of the skeleton; missing values excluded. A column never observed
// gets a uniform prior and a warning.
PriorsResult learn_priors(const CohortTable& cohort, const DiscreteBayesNet& skeleton, double alpha);

// Everything needed to fill the synthesis CPTs of the knowledge structure.
struct SynthesisParameters {
  std::vector<ConditionedSpec> conditioned;
  std::vector<SynthesisSpec> categories;  // model category order
  TargetCptSpec target;
  std::map<std::string, double> cramers_v;  // data-derived only
  std::vector<std::string> warnings;
};

// Synthesis-node parents of each category, with conditioned nodes standing
// in for their base factors.
std::vector<std::string> category_parents(const KnowledgeModel& model, const FactorCategory& category);

// Risks from scaling factors, weights and thresholds from the model.
SynthesisParameters knowledge_parameters(const KnowledgeModel& model);

// Risks from label prevalence per state (Laplace alpha on counts, then
// normalized); weights from Cramer's V within each category and from the
// mean V per category for the target. Thresholds are the tertiles of the
// node's risk over training rows with every parent observed. Throws
// DataError ("single_class") unless both labels occur.
SynthesisParameters data_parameters(const CohortTable& cohort, const KnowledgeModel& model, double alpha);

}  // namespace riskbn
