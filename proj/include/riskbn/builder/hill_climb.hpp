#pragma once

#include <cstdint>
#include <vector>

#include "riskbn/builder/learning.hpp"

namespace riskbn {

struct HillClimbConfig {
  int max_iterations = 1000;
  int restarts = 0;
  int perturbation_moves = 3;  // random moves applied before each restart
  int max_parents = 4;
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

inline constexpr Index kMinStructureRows = 50;

struct HillClimbResult {
  DiscreteBayesNet net;  // edges ordered by child, then parent; CPTs fitted
  double initial_score = 0.0;  // empty graph
  double final_score = 0.0;
  std::vector<double> trace;  // score after each accepted move of the first climb
  std::vector<double> restart_scores;
  int iterations = 0;
};

// BIC of one family: sum N_jk log theta_jk - (log N / 2)(k - 1) q with
// Laplace-smoothed theta.
double family_bic(const Dataset& data, Index child, const std::vector<Index>& parents, double alpha);
double network_bic(const Dataset& data, const std::vector<std::vector<Index>>& parents, double alpha);

// Greedy add/remove/reverse search. Equal-score moves break ties by
// (operation, parent name, child name). Throws DataError
// ("insufficient_data") below kMinStructureRows rows.
HillClimbResult hill_climb(const Dataset& data, const HillClimbConfig& config);

}  // namespace riskbn
