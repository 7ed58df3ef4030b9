#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "riskbn/types.hpp"

namespace riskbn {

// A finite-state random variable. States are ordered; the order fixes the
// column layout of every CPT that has this variable as its child.
struct Variable {
  std::string name;
  std::vector<std::string> states;

  Index cardinality() const { return static_cast<Index>(states.size()); }
  // -1 when the label is not a state of this variable.
  Index state_index(std::string_view label) const;

  friend bool operator==(const Variable&, const Variable&) = default;
};

// Conditional probability table. One row per joint parent configuration,
// enumerated with the first parent varying slowest; one column per child
// state.
struct Cpt {
  std::string child;
  std::vector<std::string> parents;
  Matrix table;

  friend bool operator==(const Cpt& a, const Cpt& b) {
    return a.child == b.child && a.parents == b.parents &&
           a.table.rows() == b.table.rows() && a.table.cols() == b.table.cols() &&
           a.table == b.table;
  }
};

using Edge = std::pair<std::string, std::string>;

// Hard evidence: variable name -> observed state label.
using Evidence = std::map<std::string, std::string>;

struct Posterior {
  std::string variable;
  std::vector<std::string> states;
  Vector distribution;

  // Probability of a named state; throws LookupError for unknown labels.
  double probability(std::string_view state) const;
};

// Directed graph plus CPTs. Mutation does not enforce acyclicity or CPT
// consistency; validate_network() reports those. Variable-level invariants
// (unique names, >= 2 unique states) are enforced on insertion.
class DiscreteBayesNet {
 public:
  void add_variable(Variable variable);
  void add_edge(const std::string& parent, const std::string& child);
  void set_cpt(Cpt cpt);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Edge>& edges() const { return edges_; }
  Index size() const { return static_cast<Index>(variables_.size()); }

  bool contains(std::string_view name) const;
  // -1 when absent.
  Index index_of(std::string_view name) const;
  const Variable& variable(std::string_view name) const;
  // Parents in edge insertion order.
  std::vector<std::string> parents(std::string_view name) const;
  std::vector<std::string> children(std::string_view name) const;
  // nullptr when no CPT has been set.
  const Cpt* cpt(std::string_view name) const;

  friend bool operator==(const DiscreteBayesNet& a, const DiscreteBayesNet& b) {
    return a.variables_ == b.variables_ && a.edges_ == b.edges_ && a.cpts_ == b.cpts_;
  }

 private:
  std::vector<Variable> variables_;
  std::unordered_map<std::string, Index> index_;
  std::vector<Edge> edges_;
  std::vector<std::optional<Cpt>> cpts_;
};

enum class ViolationKind {
  cycle,
  duplicate_edge,
  self_loop,
  missing_cpt,
  parent_mismatch,
  shape_mismatch,
  negative_probability,
  row_sum,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

inline constexpr double kRowSumTolerance = 1e-9;

ValidationResult validate_network(const DiscreteBayesNet& net);

// Throws LookupError when a variable or state is unknown.
void validate_evidence(const DiscreteBayesNet& net, const Evidence& evidence);

// Number of joint configurations of the named variables (product of
// cardinalities); 1 for an empty list.
Index configuration_count(const DiscreteBayesNet& net, const std::vector<std::string>& names);

// Row of a CPT matching the given parent state indices (first parent slowest).
Index cpt_row_index(const DiscreteBayesNet& net, const Cpt& cpt, const std::vector<Index>& parent_states);

// Topological order of variable indices; empty optional when the graph is cyclic.
std::optional<std::vector<Index>> topological_order(const DiscreteBayesNet& net);

}  // namespace riskbn
