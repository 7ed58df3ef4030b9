#pragma once

#include <string>
#include <vector>

#include "riskbn/bn/network.hpp"

namespace riskbn {

// Exact P(query | evidence) by variable elimination. Variables that are not
// ancestors of the query or the evidence are pruned before elimination; the
// remaining ones are eliminated in min-degree order. Intermediate factors are
// renormalized after each step.
//
// Throws ZeroProbabilityEvidence when the evidence has probability zero and
// LookupError for unknown variables or states. The network is assumed valid.
Posterior posterior(const DiscreteBayesNet& net, const Evidence& evidence,
                    const std::string& query);

// Same contract, but eliminates exactly the given order, which must be a
// permutation of every variable outside {query} and the evidence. No pruning.
Posterior posterior_with_order(const DiscreteBayesNet& net, const Evidence& evidence,
                               const std::string& query, const std::vector<std::string>& order);

// Min-degree order on the moral graph over all non-query, non-evidence
// variables. Ties go to the variable declared first.
std::vector<std::string> elimination_order(const DiscreteBayesNet& net, const std::string& query,
                                           const Evidence& evidence);

inline constexpr Index kDefaultEnumerationCap = Index{1} << 20;

// Brute-force reference: sums the factorized joint over every configuration
// consistent with the evidence. Throws OracleTooLarge when the number of
// such configurations exceeds the cap.
Posterior joint_enumerate(const DiscreteBayesNet& net, const Evidence& evidence,
                          const std::string& query, Index cap = kDefaultEnumerationCap);

}  // namespace riskbn
