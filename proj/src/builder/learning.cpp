#include "riskbn/builder/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskbn/error.hpp"
#include "riskbn/stats/association.hpp"

namespace riskbn {

Dataset complete_cases(const CohortTable& cohort, const TargetSpec& target) {
  Dataset data;
  data.variables = cohort.columns;
  data.variables.push_back({target.name, target.states});
  for (const auto& row : cohort.rows) {
    if (std::find(row.values.begin(), row.values.end(), kMissing) != row.values.end()) continue;
    auto values = row.values;
    values.push_back(row.label);
    data.rows.push_back(std::move(values));
  }
  return data;
}

void fit_parameters(DiscreteBayesNet& net, const Dataset& data, double alpha) {
  std::vector<Index> column(static_cast<std::size_t>(net.size()));
  for (Index v = 0; v < net.size(); ++v) {
    const auto& name = net.variables()[static_cast<std::size_t>(v)].name;
    const auto it = std::find_if(data.variables.begin(), data.variables.end(),
                                 [&](const Variable& x) { return x.name == name; });
    if (it == data.variables.end()) throw LookupError("no data column for " + name);
    column[static_cast<std::size_t>(v)] = it - data.variables.begin();
  }
  for (const auto& var : net.variables()) {
    Cpt cpt{var.name, net.parents(var.name), {}};
    cpt.table = Matrix::Zero(configuration_count(net, cpt.parents), var.cardinality());
    std::vector<Index> pcols, pcards;
    for (const auto& p : cpt.parents) {
      pcols.push_back(column[static_cast<std::size_t>(net.index_of(p))]);
      pcards.push_back(net.variable(p).cardinality());
    }
    const Index ccol = column[static_cast<std::size_t>(net.index_of(var.name))];
    for (const auto& row : data.rows) {
      Index r = 0;
      for (std::size_t i = 0; i < pcols.size(); ++i) r = r * pcards[i] + row[static_cast<std::size_t>(pcols[i])];
      cpt.table(r, row[static_cast<std::size_t>(ccol)]) += 1.0;
    }
    for (Index r = 0; r < cpt.table.rows(); ++r) {
      cpt.table.row(r).array() += alpha;
      const double total = cpt.table.row(r).sum();
      if (total > 0.0) {
        cpt.table.row(r) /= total;
      } else {
        cpt.table.row(r).setConstant(1.0 / static_cast<double>(var.cardinality()));
      }
    }
    net.set_cpt(std::move(cpt));
  }
}

PriorsResult learn_priors(const CohortTable& cohort, const DiscreteBayesNet& skeleton, double alpha) {
  if (cohort.rows.empty()) throw DataError("empty_cohort", "cannot learn priors from an empty cohort");
  PriorsResult out;
  for (const auto& var : skeleton.variables()) {
    if (!skeleton.parents(var.name).empty()) continue;
    const Index c = cohort.column_index(var.name);
    if (c < 0) continue;
    Vector counts = Vector::Zero(var.cardinality());
    for (const auto& row : cohort.rows) {
      const Index s = row.values[static_cast<std::size_t>(c)];
      if (s != kMissing) counts(s) += 1.0;
    }
    Cpt cpt{var.name, {}, Matrix(1, var.cardinality())};
    const double total = counts.sum() + alpha * static_cast<double>(var.cardinality());
    if (counts.sum() == 0.0 || total <= 0.0) {
      out.warnings.push_back(var.name + ": never observed, uniform prior");
      cpt.table.setConstant(1.0 / static_cast<double>(var.cardinality()));
    } else {
      cpt.table.row(0) = ((counts.array() + alpha) / total).matrix().transpose();
    }
    out.priors.push_back(std::move(cpt));
  }
  return out;
}

std::vector<std::string> category_parents(const KnowledgeModel& model, const FactorCategory& category) {
  std::vector<std::string> parents;
  for (const auto& f : category.factors) {
    const SexConditionedNode* node = conditioned_node_for(model, f.name);
    parents.push_back(node ? node->name : f.name);
  }
  return parents;
}

namespace {

std::vector<double> category_weights_of(const FactorCategory& category) {
  std::vector<double> w;
  for (const auto& f : category.factors) w.push_back(f.weight);
  return w;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

TargetCptSpec target_spec(const KnowledgeModel& model, Vector weights) {
  TargetCptSpec t;
  t.node = model.target.name;
  for (const auto& c : model.categories) t.parents.push_back(c.name);
  t.weights = std::move(weights);
  t.scores = model.target_scores;
  return t;
}

// Observed (state, label) pairs for one derived or raw column.
struct Column {
  std::vector<Index> states;  // kMissing when unobserved
  Index cardinality = 0;
};

Column cohort_column(const CohortTable& cohort, const std::string& name) {
  const Index c = cohort.column_index(name);
  if (c < 0) throw LookupError("cohort has no column " + name);
  Column col{{}, cohort.columns[static_cast<std::size_t>(c)].cardinality()};
  for (const auto& row : cohort.rows) col.states.push_back(row.values[static_cast<std::size_t>(c)]);
  return col;
}

struct Association {
  Vector risks;
  double v = 0.0;
};

Association associate(const std::string& name, const Column& col, const std::vector<int>& labels, double alpha,
                      double prevalence, std::vector<std::string>& warnings) {
  Vector pos = Vector::Zero(col.cardinality), n = Vector::Zero(col.cardinality);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (col.states[i] == kMissing) continue;
    n(col.states[i]) += 1.0;
    pos(col.states[i]) += labels[i];
  }
  const Index observed = (n.array() > 0.0).count();
  Association out;
  out.risks = Vector::Constant(col.cardinality, 1.0 / static_cast<double>(col.cardinality));
  if (observed < 2) {
    warnings.push_back(name + ": fewer than two observed states, uniform risk and zero association");
    return out;
  }
  Vector prev(col.cardinality);
  for (Index s = 0; s < col.cardinality; ++s) {
    const double denom = n(s) + 2.0 * alpha;
    prev(s) = denom > 0.0 ? (pos(s) + alpha) / denom : prevalence;
  }
  if (prev.sum() > 0.0) out.risks = prev / prev.sum();

  ContingencyTable t;
  t.counts.resize(observed, 2);
  Index r = 0;
  for (Index s = 0; s < col.cardinality; ++s) {
    if (n(s) == 0.0) continue;
    t.counts(r, 0) = n(s) - pos(s);
    t.counts(r, 1) = pos(s);
    ++r;
  }
  t.row_labels.resize(static_cast<std::size_t>(observed));
  t.col_labels = {"0", "1"};
  const Eigen::RowVectorXd margins = t.counts.colwise().sum();
  if ((margins.array() > 0.0).all()) {
    out.v = cramers_v(t).cramers_v;
  } else {
    warnings.push_back(name + ": single observed label, zero association");
  }
  return out;
}

// Nearest-rank tertiles; falls back to `fallback` without observations.
SynthesisThresholds tertiles(std::vector<double> values, const SynthesisThresholds& fallback) {
  if (values.empty()) return fallback;
  std::sort(values.begin(), values.end());
  const auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(k, 1) - 1];
  };
  return {rank(1.0 / 3.0), rank(2.0 / 3.0)};
}

Vector weights_from_v(const std::vector<double>& v) {
  Vector w = to_vector(v);
  if (w.sum() > 0.0) return w / w.sum();
  return Vector::Constant(w.size(), 1.0 / static_cast<double>(w.size()));
}

}  // namespace

SynthesisParameters knowledge_parameters(const KnowledgeModel& model) {
  SynthesisParameters out;
  for (const auto& node : model.sex_conditioned) {
    out.conditioned.push_back(
        {node.name, node.conditioning_factor, node.base_factor, normalized_risks(node), node.thresholds});
  }
  std::vector<double> category_weights;
  for (const auto& category : model.categories) {
    SynthesisSpec spec{category.name, category_parents(model, category), to_vector(category_weights_of(category)),
                       {}, category.thresholds};
    for (const auto& f : category.factors) {
      spec.risks.push_back(conditioned_node_for(model, f.name) ? synthesis_parent_risks(model.target_scores)
                                                                : normalized_risks(f));
    }
    out.categories.push_back(std::move(spec));
    category_weights.push_back(category.weight);
  }
  out.target = target_spec(model, to_vector(category_weights));
  return out;
}

SynthesisParameters data_parameters(const CohortTable& cohort, const KnowledgeModel& model, double alpha) {
  if (alpha < 0.0) throw ValidationError({"laplace_alpha must be nonnegative"});
  std::vector<int> labels;
  for (const auto& row : cohort.rows) labels.push_back(row.label);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw DataError("single_class", "hybrid parameters need both labels in the training cohort");
  }
  const double prevalence = static_cast<double>(positives) / static_cast<double>(labels.size());

  SynthesisParameters out;
  std::map<std::string, Column> derived;
  for (const auto& node : model.sex_conditioned) {
    const Column cond = cohort_column(cohort, node.conditioning_factor);
    const Column base = cohort_column(cohort, node.base_factor);
    ConditionedSpec spec{node.name, node.conditioning_factor, node.base_factor,
                         Matrix::Zero(cond.cardinality, base.cardinality),
                         centered_thresholds(1.0 / static_cast<double>(base.cardinality))};
    for (Index s = 0; s < cond.cardinality; ++s) {
      Column within{{}, base.cardinality};
      std::vector<int> within_labels;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (cond.states[i] != s) continue;
        within.states.push_back(base.states[i]);
        within_labels.push_back(labels[i]);
      }
      const auto& label = cohort.columns[static_cast<std::size_t>(cohort.column_index(node.conditioning_factor))]
                              .states[static_cast<std::size_t>(s)];
      const auto a = associate(node.name + "[" + label + "]", within, within_labels, alpha, prevalence, out.warnings);
      spec.risks.row(s) = a.risks.transpose();
    }
    std::vector<double> observed;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (cond.states[i] != kMissing && base.states[i] != kMissing) {
        observed.push_back(spec.risks(cond.states[i], base.states[i]));
      }
    }
    spec.thresholds = tertiles(std::move(observed), spec.thresholds);
    Column d{{}, 3};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      d.states.push_back(cond.states[i] == kMissing || base.states[i] == kMissing
                             ? kMissing
                             : synthesis_state(spec.risks(cond.states[i], base.states[i]), spec.thresholds));
    }
    derived.emplace(node.name, std::move(d));
    out.conditioned.push_back(std::move(spec));
  }

  std::vector<double> category_v;
  for (const auto& category : model.categories) {
    SynthesisSpec spec{category.name, category_parents(model, category), {}, {}, {}};
    std::vector<double> vs;
    std::vector<Index> cards;
    std::vector<Column> cols;
    for (const auto& parent : spec.parents) {
      const auto it = derived.find(parent);
      cols.push_back(it != derived.end() ? it->second : cohort_column(cohort, parent));
      const auto a = associate(parent, cols.back(), labels, alpha, prevalence, out.warnings);
      spec.risks.push_back(a.risks);
      vs.push_back(a.v);
      cards.push_back(cols.back().cardinality);
      out.cramers_v[parent] = a.v;
    }
    spec.weights = weights_from_v(vs);
    std::vector<double> observed;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::vector<Index> states;
      for (const auto& col : cols) states.push_back(col.states[i]);
      if (std::find(states.begin(), states.end(), kMissing) == states.end()) {
        observed.push_back(total_risk(spec, states));
      }
    }
    spec.thresholds = tertiles(std::move(observed), centered_thresholds(neutral_risk(spec.weights, cards)));
    category_v.push_back(std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size()));
    out.categories.push_back(std::move(spec));
  }
  out.target = target_spec(model, weights_from_v(category_v));
  return out;
}

}  // namespace riskbn
