#include "riskbn/bn/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "riskbn/error.hpp"

namespace riskbn {

Index Variable::state_index(std::string_view label) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == label) return static_cast<Index>(i);
  }
  return -1;
}

double Posterior::probability(std::string_view state) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == state) return distribution(static_cast<Index>(i));
  }
  throw LookupError("unknown state '" + std::string(state) + "' of '" + variable + "'");
}

void DiscreteBayesNet::add_variable(Variable variable) {
  if (variable.name.empty()) throw ValidationError({"variable: empty name"});
  if (index_.count(variable.name)) {
    throw ValidationError({"variable '" + variable.name + "': duplicate name"});
  }
  if (variable.states.size() < 2) {
    throw ValidationError({"variable '" + variable.name + "': fewer than 2 states"});
  }
  std::set<std::string> seen(variable.states.begin(), variable.states.end());
  if (seen.size() != variable.states.size()) {
    throw ValidationError({"variable '" + variable.name + "': duplicate state labels"});
  }
  index_.emplace(variable.name, size());
  variables_.push_back(std::move(variable));
  cpts_.emplace_back();
}

void DiscreteBayesNet::add_edge(const std::string& parent, const std::string& child) {
  if (!contains(parent)) throw LookupError("unknown variable '" + parent + "'");
  if (!contains(child)) throw LookupError("unknown variable '" + child + "'");
  edges_.emplace_back(parent, child);
}

void DiscreteBayesNet::set_cpt(Cpt cpt) {
  const Index i = index_of(cpt.child);
  if (i < 0) throw LookupError("unknown variable '" + cpt.child + "'");
  cpts_[static_cast<std::size_t>(i)] = std::move(cpt);
}

bool DiscreteBayesNet::contains(std::string_view name) const { return index_of(name) >= 0; }

Index DiscreteBayesNet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? -1 : it->second;
}

const Variable& DiscreteBayesNet::variable(std::string_view name) const {
  const Index i = index_of(name);
  if (i < 0) throw LookupError("unknown variable '" + std::string(name) + "'");
  return variables_[static_cast<std::size_t>(i)];
}

std::vector<std::string> DiscreteBayesNet::parents(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges_) {
    if (c == name && std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

std::vector<std::string> DiscreteBayesNet::children(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges_) {
    if (p == name && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

const Cpt* DiscreteBayesNet::cpt(std::string_view name) const {
  const Index i = index_of(name);
  if (i < 0) return nullptr;
  const auto& slot = cpts_[static_cast<std::size_t>(i)];
  return slot ? &*slot : nullptr;
}

bool ValidationResult::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

Index configuration_count(const DiscreteBayesNet& net, const std::vector<std::string>& names) {
  Index n = 1;
  for (const auto& name : names) n *= net.variable(name).cardinality();
  return n;
}

Index cpt_row_index(const DiscreteBayesNet& net, const Cpt& cpt,
                    const std::vector<Index>& parent_states) {
  Index row = 0;
  for (std::size_t i = 0; i < cpt.parents.size(); ++i) {
    row = row * net.variable(cpt.parents[i]).cardinality() + parent_states[i];
  }
  return row;
}

std::optional<std::vector<Index>> topological_order(const DiscreteBayesNet& net) {
  const auto n = static_cast<std::size_t>(net.size());
  std::vector<std::vector<Index>> out(n);
  std::vector<int> indegree(n, 0);
  for (const auto& [p, c] : net.edges()) {
    out[static_cast<std::size_t>(net.index_of(p))].push_back(net.index_of(c));
    ++indegree[static_cast<std::size_t>(net.index_of(c))];
  }
  std::vector<Index> order;
  std::vector<Index> ready;
  for (std::size_t i = n; i-- > 0;) {
    if (indegree[i] == 0) ready.push_back(static_cast<Index>(i));
  }
  while (!ready.empty()) {
    const Index v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (Index c : out[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

namespace {

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

ValidationResult validate_network(const DiscreteBayesNet& net) {
  ValidationResult result;
  auto add = [&](ViolationKind kind, std::string message) {
    result.violations.push_back({kind, std::move(message)});
  };

  std::set<Edge> seen;
  for (const auto& edge : net.edges()) {
    if (edge.first == edge.second) add(ViolationKind::self_loop, "self loop on '" + edge.first + "'");
    if (!seen.insert(edge).second) {
      add(ViolationKind::duplicate_edge, "duplicate edge " + edge.first + " -> " + edge.second);
    }
  }
  if (!topological_order(net)) add(ViolationKind::cycle, "cycle");

  for (const auto& var : net.variables()) {
    const Cpt* cpt = net.cpt(var.name);
    if (!cpt) {
      add(ViolationKind::missing_cpt, "'" + var.name + "': missing CPT");
      continue;
    }
    auto graph_parents = net.parents(var.name);
    auto cpt_parents = cpt->parents;
    std::sort(graph_parents.begin(), graph_parents.end());
    std::sort(cpt_parents.begin(), cpt_parents.end());
    if (graph_parents != cpt_parents ||
        std::adjacent_find(cpt_parents.begin(), cpt_parents.end()) != cpt_parents.end()) {
      add(ViolationKind::parent_mismatch, "'" + var.name + "': CPT parents differ from graph parents");
      continue;
    }
    const Index rows = configuration_count(net, cpt->parents);
    if (cpt->table.rows() != rows || cpt->table.cols() != var.cardinality()) {
      add(ViolationKind::shape_mismatch,
          "'" + var.name + "': CPT shape " + std::to_string(cpt->table.rows()) + "x" +
              std::to_string(cpt->table.cols()) + ", expected " + std::to_string(rows) + "x" +
              std::to_string(var.cardinality()));
      continue;
    }
    for (Index r = 0; r < rows; ++r) {
      const auto row = cpt->table.row(r);
      if ((row.array() < 0.0).any() || !row.allFinite()) {
        add(ViolationKind::negative_probability,
            "'" + var.name + "' row " + std::to_string(r) + ": negative or non-finite entry");
      }
      const double sum = row.sum();
      if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
        add(ViolationKind::row_sum, "'" + var.name + "' row " + std::to_string(r) + ": row sum " +
                                        format_number(sum) + " != 1");
      }
    }
  }
  return result;
}

void validate_evidence(const DiscreteBayesNet& net, const Evidence& evidence) {
  for (const auto& [name, state] : evidence) {
    const auto& var = net.variable(name);
    if (var.state_index(state) < 0) {
      throw LookupError("invalid state '" + state + "' for variable '" + name + "'");
    }
  }
}

}  // namespace riskbn
