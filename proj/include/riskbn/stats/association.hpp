#pragma once

#include <string>
#include <vector>

#include "riskbn/bn/serialize.hpp"
#include "riskbn/pipeline/cohort.hpp"
#include "riskbn/types.hpp"

namespace riskbn {

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix counts;

  double total() const { return counts.sum(); }
};

enum class Strength { weak, moderate, strong, very_strong };

std::string to_string(Strength s);
// Bands are half-open on the right: [0, .1), [.1, .15), [.15, .25), [.25, 1].
Strength strength_of(double v);

struct ChiSquare {
  double chi2 = 0.0;
  Index dof = 0;
  double p_value = 1.0;
};

struct AssociationResult {
  double chi2 = 0.0;
  Index dof = 0;
  double p_value = 1.0;
  double cramers_v = 0.0;
  Strength strength = Strength::weak;
};

// Upper tail of the chi-square distribution.
double chi_square_sf(double chi2, Index dof);

// Pearson statistic without continuity correction. Throws DataError
// ("degenerate_table") for fewer than two rows or columns, a zero marginal,
// or a negative count.
ChiSquare chi_square(const ContingencyTable& table);
AssociationResult cramers_v(const ContingencyTable& table);

// Factor states by label; rows for states never observed are dropped and
// missing values are excluded.
ContingencyTable contingency_table(const CohortTable& cohort, Index column);

inline constexpr double kSignificanceLevel = 0.05;

struct FactorAssociation {
  std::string factor;
  AssociationResult result;
  bool significant = false;
};

struct AssociationWarning {
  std::string factor;
  std::string message;
};

struct AssociationReport {
  std::vector<FactorAssociation> results;  // cohort column order
  std::vector<AssociationWarning> warnings;
};

AssociationReport association_report(const CohortTable& cohort);

std::string report_to_csv(const AssociationReport& report);
Json report_to_json(const AssociationReport& report);

}  // namespace riskbn
