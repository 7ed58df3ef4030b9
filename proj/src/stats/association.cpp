#include "riskbn/stats/association.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "riskbn/error.hpp"
#include "riskbn/pipeline/csv.hpp"
#include "riskbn/pipeline/records.hpp"

namespace riskbn {

std::string to_string(Strength s) {
  switch (s) {
    case Strength::weak: return "weak";
    case Strength::moderate: return "moderate";
    case Strength::strong: return "strong";
    case Strength::very_strong: return "very_strong";
  }
  return "weak";
}

Strength strength_of(double v) {
  if (v < 0.10) return Strength::weak;
  if (v < 0.15) return Strength::moderate;
  if (v < 0.25) return Strength::strong;
  return Strength::very_strong;
}

double chi_square_sf(double chi2, Index dof) {
  if (dof <= 0) throw DataError("degenerate_table", "chi-square needs positive degrees of freedom");
  if (chi2 <= 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(dof) / 2.0, chi2 / 2.0);
}

ChiSquare chi_square(const ContingencyTable& table) {
  const Matrix& o = table.counts;
  if (o.rows() < 2 || o.cols() < 2) {
    throw DataError("degenerate_table", "contingency table needs at least 2 rows and 2 columns");
  }
  if ((o.array() < 0.0).any()) throw DataError("degenerate_table", "negative count");
  const Vector rows = o.rowwise().sum();
  const Eigen::RowVectorXd cols = o.colwise().sum();
  if ((rows.array() <= 0.0).any() || (cols.array() <= 0.0).any()) {
    throw DataError("degenerate_table", "zero marginal in contingency table");
  }
  const double n = rows.sum();
  ChiSquare out;
  for (Index i = 0; i < o.rows(); ++i) {
    for (Index j = 0; j < o.cols(); ++j) {
      const double e = rows(i) * cols(j) / n;
      const double d = o(i, j) - e;
      out.chi2 += d * d / e;
    }
  }
  out.dof = (o.rows() - 1) * (o.cols() - 1);
  out.p_value = chi_square_sf(out.chi2, out.dof);
  return out;
}

AssociationResult cramers_v(const ContingencyTable& table) {
  const ChiSquare c = chi_square(table);
  const double n = table.total();
  const double k = static_cast<double>(std::min(table.counts.rows(), table.counts.cols()) - 1);
  AssociationResult out{c.chi2, c.dof, c.p_value, 0.0, Strength::weak};
  // Rounding can push the ratio a hair past 1 for perfectly associated tables.
  out.cramers_v = std::min(1.0, std::sqrt(c.chi2 / (n * k)));
  out.strength = strength_of(out.cramers_v);
  return out;
}

ContingencyTable contingency_table(const CohortTable& cohort, Index column) {
  const Variable& var = cohort.columns.at(static_cast<std::size_t>(column));
  Matrix full = Matrix::Zero(var.cardinality(), 2);
  for (const auto& row : cohort.rows) {
    const Index s = row.values[static_cast<std::size_t>(column)];
    if (s == kMissing) continue;
    full(s, row.label) += 1.0;
  }
  ContingencyTable out;
  out.col_labels = {"0", "1"};
  std::vector<Index> kept;
  for (Index s = 0; s < full.rows(); ++s) {
    if (full.row(s).sum() > 0.0) kept.push_back(s);
  }
  out.counts.resize(static_cast<Index>(kept.size()), 2);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.row_labels.push_back(var.states[static_cast<std::size_t>(kept[i])]);
    out.counts.row(static_cast<Index>(i)) = full.row(kept[i]);
  }
  return out;
}

AssociationReport association_report(const CohortTable& cohort) {
  if (cohort.rows.empty()) throw DataError("empty_cohort", "association report needs a nonempty cohort");
  AssociationReport report;
  for (Index c = 0; c < static_cast<Index>(cohort.columns.size()); ++c) {
    const std::string& name = cohort.columns[static_cast<std::size_t>(c)].name;
    const ContingencyTable t = contingency_table(cohort, c);
    if (t.counts.rows() == 0) {
      report.warnings.push_back({name, "no observed values"});
      continue;
    }
    if (t.counts.rows() < 2) {
      report.warnings.push_back({name, "single observed state " + t.row_labels[0]});
      continue;
    }
    const Eigen::RowVectorXd cols = t.counts.colwise().sum();
    if ((cols.array() <= 0.0).any()) {
      report.warnings.push_back({name, "single observed label"});
      continue;
    }
    const AssociationResult r = cramers_v(t);
    report.results.push_back({name, r, r.p_value < kSignificanceLevel});
  }
  return report;
}

std::string report_to_csv(const AssociationReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& a : report.results) {
    rows.push_back({a.factor, format_number(a.result.chi2), std::to_string(a.result.dof),
                    format_number(a.result.p_value), format_number(a.result.cramers_v),
                    to_string(a.result.strength), a.significant ? "true" : "false"});
  }
  return write_csv({"factor", "chi2", "dof", "p_value", "cramers_v", "strength", "significant"}, rows);
}

Json report_to_json(const AssociationReport& report) {
  Json results = Json::array();
  for (const auto& a : report.results) {
    results.push_back({{"factor", a.factor},
                       {"chi2", a.result.chi2},
                       {"dof", a.result.dof},
                       {"p_value", a.result.p_value},
                       {"cramers_v", a.result.cramers_v},
                       {"strength", to_string(a.result.strength)},
                       {"significant", a.significant}});
  }
  Json warnings = Json::array();
  for (const auto& w : report.warnings) warnings.push_back({{"factor", w.factor}, {"message", w.message}});
  return {{"results", results}, {"warnings", warnings}};
}

}  // namespace riskbn
