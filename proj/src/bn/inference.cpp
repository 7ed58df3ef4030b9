#include "riskbn/bn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "riskbn/error.hpp"

namespace riskbn {
namespace {

// Table over a sorted set of variable indices; the last variable varies fastest.
struct Factor {
  std::vector<Index> vars;
  std::vector<Index> cards;
  Vector values;

  std::vector<Index> strides() const {
    std::vector<Index> s(vars.size(), 1);
    for (std::size_t i = vars.size(); i-- > 1;) s[i - 1] = s[i] * cards[i];
    return s;
  }
  bool contains(Index v) const { return std::binary_search(vars.begin(), vars.end(), v); }
};

// Advances a mixed-radix counter; returns false after the last configuration.
bool next_assignment(std::vector<Index>& assign, const std::vector<Index>& cards) {
  for (std::size_t i = assign.size(); i-- > 0;) {
    if (++assign[i] < cards[i]) return true;
    assign[i] = 0;
  }
  return false;
}

Index product(const std::vector<Index>& cards) {
  Index n = 1;
  for (Index c : cards) n *= c;
  return n;
}

struct Compiled {
  std::vector<Index> cards;
  std::vector<std::vector<Index>> parents;  // CPT parent order
  std::vector<Index> observed;              // -1 when unobserved
};

Compiled compile(const DiscreteBayesNet& net, const Evidence& evidence) {
  validate_evidence(net, evidence);
  Compiled c;
  const auto n = static_cast<std::size_t>(net.size());
  c.cards.resize(n);
  c.parents.resize(n);
  c.observed.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& var = net.variables()[i];
    c.cards[i] = var.cardinality();
    const Cpt* cpt = net.cpt(var.name);
    if (!cpt) throw ValidationError({"'" + var.name + "': missing CPT"});
    for (const auto& p : cpt->parents) c.parents[i].push_back(net.index_of(p));
  }
  for (const auto& [name, state] : evidence) {
    const Index v = net.index_of(name);
    c.observed[static_cast<std::size_t>(v)] = net.variables()[static_cast<std::size_t>(v)].state_index(state);
  }
  return c;
}

// CPT of variable v as a factor, restricted to the observed states.
Factor cpt_factor(const DiscreteBayesNet& net, const Compiled& c, Index v) {
  const auto& var = net.variables()[static_cast<std::size_t>(v)];
  const Cpt& cpt = *net.cpt(var.name);
  const auto& parents = c.parents[static_cast<std::size_t>(v)];

  std::vector<Index> family = parents;
  family.push_back(v);
  Factor f;
  for (Index u : family) {
    if (c.observed[static_cast<std::size_t>(u)] < 0) f.vars.push_back(u);
  }
  std::sort(f.vars.begin(), f.vars.end());
  for (Index u : f.vars) f.cards.push_back(c.cards[static_cast<std::size_t>(u)]);
  f.values.resize(product(f.cards));

  std::vector<Index> assign(f.vars.size(), 0);
  std::vector<Index> parent_states(parents.size());
  auto state_of = [&](Index u) {
    const Index obs = c.observed[static_cast<std::size_t>(u)];
    if (obs >= 0) return obs;
    const auto pos = std::lower_bound(f.vars.begin(), f.vars.end(), u) - f.vars.begin();
    return assign[static_cast<std::size_t>(pos)];
  };
  Index k = 0;
  do {
    for (std::size_t i = 0; i < parents.size(); ++i) parent_states[i] = state_of(parents[i]);
    f.values(k++) = cpt.table(cpt_row_index(net, cpt, parent_states), state_of(v));
  } while (next_assignment(assign, f.cards));
  return f;
}

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  std::vector<Index> a_stride(out.vars.size(), 0), b_stride(out.vars.size(), 0);
  const auto sa = a.strides();
  const auto sb = b.strides();
  for (std::size_t i = 0; i < out.vars.size(); ++i) {
    const Index v = out.vars[i];
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
    if (ia != a.vars.end() && *ia == v) {
      const auto pos = static_cast<std::size_t>(ia - a.vars.begin());
      out.cards.push_back(a.cards[pos]);
      a_stride[i] = sa[pos];
    }
    if (ib != b.vars.end() && *ib == v) {
      const auto pos = static_cast<std::size_t>(ib - b.vars.begin());
      if (out.cards.size() == i) out.cards.push_back(b.cards[pos]);
      b_stride[i] = sb[pos];
    }
  }
  out.values.resize(product(out.cards));
  std::vector<Index> assign(out.vars.size(), 0);
  Index k = 0;
  do {
    Index ia = 0, ib = 0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      ia += assign[i] * a_stride[i];
      ib += assign[i] * b_stride[i];
    }
    out.values(k++) = a.values(ia) * b.values(ib);
  } while (next_assignment(assign, out.cards));
  return out;
}

Factor sum_out(const Factor& f, Index v) {
  const auto pos = static_cast<std::size_t>(
      std::lower_bound(f.vars.begin(), f.vars.end(), v) - f.vars.begin());
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  out.values = Vector::Zero(product(out.cards));
  const auto out_strides = out.strides();
  std::vector<Index> assign(f.vars.size(), 0);
  Index k = 0;
  do {
    Index target = 0;
    for (std::size_t i = 0, j = 0; i < assign.size(); ++i) {
      if (i == pos) continue;
      target += assign[i] * out_strides[j++];
    }
    out.values(target) += f.values(k++);
  } while (next_assignment(assign, f.cards));
  return out;
}

void renormalize(Factor& f) {
  const double total = f.values.sum();
  if (total > 0.0 && std::isfinite(total)) f.values /= total;
}

// Min-degree elimination over the interaction graph of the given scopes.
std::vector<Index> min_degree_order(const std::vector<std::vector<Index>>& scopes,
                                    const std::vector<Index>& candidates, std::size_t n) {
  std::vector<std::set<Index>> adj(n);
  for (const auto& scope : scopes) {
    for (Index a : scope) {
      for (Index b : scope) {
        if (a != b) adj[static_cast<std::size_t>(a)].insert(b);
      }
    }
  }
  std::set<Index> remaining(candidates.begin(), candidates.end());
  std::vector<Index> order;
  while (!remaining.empty()) {
    Index best = -1;
    std::size_t best_degree = 0;
    for (Index v : remaining) {
      const std::size_t d = adj[static_cast<std::size_t>(v)].size();
      if (best < 0 || d < best_degree) {
        best = v;
        best_degree = d;
      }
    }
    const auto& nbrs = adj[static_cast<std::size_t>(best)];
    for (Index a : nbrs) {
      for (Index b : nbrs) {
        if (a != b) adj[static_cast<std::size_t>(a)].insert(b);
      }
      adj[static_cast<std::size_t>(a)].erase(best);
    }
    adj[static_cast<std::size_t>(best)].clear();
    remaining.erase(best);
    order.push_back(best);
  }
  return order;
}

Posterior make_posterior(const DiscreteBayesNet& net, Index query, Vector dist) {
  const auto& var = net.variables()[static_cast<std::size_t>(query)];
  return Posterior{var.name, var.states, std::move(dist)};
}

Posterior eliminate(const DiscreteBayesNet& net, const Compiled& c, Index query,
                    const std::vector<Index>& relevant, const std::vector<Index>& order) {
  std::vector<Factor> pool;
  pool.reserve(relevant.size());
  for (Index v : relevant) pool.push_back(cpt_factor(net, c, v));

  for (Index v : order) {
    Factor merged;
    merged.values = Vector::Ones(1);
    std::vector<Factor> rest;
    bool touched = false;
    for (auto& f : pool) {
      if (f.contains(v)) {
        merged = touched ? multiply(merged, f) : std::move(f);
        touched = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    pool = std::move(rest);
    if (!touched) continue;
    Factor reduced = sum_out(merged, v);
    renormalize(reduced);
    pool.push_back(std::move(reduced));
  }

  Factor result;
  result.values = Vector::Ones(1);
  for (const auto& f : pool) result = multiply(result, f);
  if (result.vars != std::vector<Index>{query}) {
    throw Error("internal_error", "elimination left unexpected variables");
  }
  const double total = result.values.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw ZeroProbabilityEvidence();
  return make_posterior(net, query, result.values / total);
}

std::vector<Index> relevant_ancestors(const Compiled& c, Index query) {
  const std::size_t n = c.cards.size();
  std::vector<bool> keep(n, false);
  std::vector<Index> stack{query};
  for (std::size_t i = 0; i < n; ++i) {
    if (c.observed[i] >= 0) stack.push_back(static_cast<Index>(i));
  }
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    if (keep[static_cast<std::size_t>(v)]) continue;
    keep[static_cast<std::size_t>(v)] = true;
    for (Index p : c.parents[static_cast<std::size_t>(v)]) stack.push_back(p);
  }
  std::vector<Index> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<std::vector<Index>> unobserved_scopes(const Compiled& c, const std::vector<Index>& vars) {
  std::vector<std::vector<Index>> scopes;
  for (Index v : vars) {
    std::vector<Index> scope;
    for (Index p : c.parents[static_cast<std::size_t>(v)]) {
      if (c.observed[static_cast<std::size_t>(p)] < 0) scope.push_back(p);
    }
    if (c.observed[static_cast<std::size_t>(v)] < 0) scope.push_back(v);
    scopes.push_back(std::move(scope));
  }
  return scopes;
}

std::vector<Index> free_variables(const Compiled& c, const std::vector<Index>& vars, Index query) {
  std::vector<Index> out;
  for (Index v : vars) {
    if (v != query && c.observed[static_cast<std::size_t>(v)] < 0) out.push_back(v);
  }
  return out;
}

std::vector<Index> all_indices(const DiscreteBayesNet& net) {
  std::vector<Index> all(static_cast<std::size_t>(net.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  return all;
}

// When the query itself is observed: check the evidence is possible and
// return the point mass on the observed state.
template <typename Solver>
Posterior solve_with_observed_query(const DiscreteBayesNet& net, const Evidence& evidence,
                                    const std::string& query, Solver&& solve) {
  auto it = evidence.find(query);
  if (it == evidence.end()) return solve(evidence);
  Evidence rest = evidence;
  rest.erase(query);
  Posterior p = solve(rest);
  const Index observed = net.variable(query).state_index(it->second);
  if (observed < 0) throw LookupError("invalid state '" + it->second + "' for variable '" + query + "'");
  if (!(p.distribution(observed) > 0.0)) throw ZeroProbabilityEvidence();
  p.distribution.setZero();
  p.distribution(observed) = 1.0;
  return p;
}

}  // namespace

Posterior posterior(const DiscreteBayesNet& net, const Evidence& evidence, const std::string& query) {
  const Index q = net.index_of(query);
  if (q < 0) throw LookupError("unknown variable '" + query + "'");
  return solve_with_observed_query(net, evidence, query, [&](const Evidence& ev) {
    const Compiled c = compile(net, ev);
    const auto relevant = relevant_ancestors(c, q);
    const auto order = min_degree_order(unobserved_scopes(c, relevant),
                                        free_variables(c, relevant, q),
                                        static_cast<std::size_t>(net.size()));
    return eliminate(net, c, q, relevant, order);
  });
}

Posterior posterior_with_order(const DiscreteBayesNet& net, const Evidence& evidence,
                               const std::string& query, const std::vector<std::string>& order) {
  const Index q = net.index_of(query);
  if (q < 0) throw LookupError("unknown variable '" + query + "'");
  return solve_with_observed_query(net, evidence, query, [&](const Evidence& ev) {
    const Compiled c = compile(net, ev);
    const auto all = all_indices(net);
    std::vector<Index> idx;
    for (const auto& name : order) {
      const Index v = net.index_of(name);
      if (v < 0) throw LookupError("unknown variable '" + name + "'");
      idx.push_back(v);
    }
    auto expected = free_variables(c, all, q);
    auto given = idx;
    std::sort(given.begin(), given.end());
    if (given != expected) {
      throw ValidationError({"elimination order must cover exactly the non-query, non-evidence variables"});
    }
    return eliminate(net, c, q, all, idx);
  });
}

std::vector<std::string> elimination_order(const DiscreteBayesNet& net, const std::string& query,
                                           const Evidence& evidence) {
  const Index q = net.index_of(query);
  if (q < 0) throw LookupError("unknown variable '" + query + "'");
  Evidence ev = evidence;
  ev.erase(query);
  const Compiled c = compile(net, ev);
  const auto all = all_indices(net);
  std::vector<std::string> out;
  for (Index v : min_degree_order(unobserved_scopes(c, all), free_variables(c, all, q),
                                  static_cast<std::size_t>(net.size()))) {
    out.push_back(net.variables()[static_cast<std::size_t>(v)].name);
  }
  return out;
}

Posterior joint_enumerate(const DiscreteBayesNet& net, const Evidence& evidence,
                          const std::string& query, Index cap) {
  const Index q = net.index_of(query);
  if (q < 0) throw LookupError("unknown variable '" + query + "'");
  const Compiled c = compile(net, evidence);
  const auto n = c.cards.size();
  double space = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.observed[i] < 0) space *= static_cast<double>(c.cards[i]);
  }
  if (space > static_cast<double>(cap)) {
    throw OracleTooLarge("joint state space " + std::to_string(static_cast<long long>(space)) +
                         " exceeds cap " + std::to_string(cap));
  }

  std::vector<Index> free;
  std::vector<Index> free_cards;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.observed[i] < 0) {
      free.push_back(static_cast<Index>(i));
      free_cards.push_back(c.cards[i]);
    }
  }
  std::vector<Index> state(c.observed.begin(), c.observed.end());
  std::vector<Index> assign(free.size(), 0);
  std::vector<const Cpt*> cpts(n);
  for (std::size_t i = 0; i < n; ++i) cpts[i] = net.cpt(net.variables()[i].name);

  Vector acc = Vector::Zero(c.cards[static_cast<std::size_t>(q)]);
  std::vector<Index> parent_states;
  do {
    for (std::size_t i = 0; i < free.size(); ++i) state[static_cast<std::size_t>(free[i])] = assign[i];
    double joint = 1.0;
    for (std::size_t v = 0; v < n && joint > 0.0; ++v) {
      parent_states.clear();
      for (Index p : c.parents[v]) parent_states.push_back(state[static_cast<std::size_t>(p)]);
      joint *= cpts[v]->table(cpt_row_index(net, *cpts[v], parent_states), state[v]);
    }
    acc(state[static_cast<std::size_t>(q)]) += joint;
  } while (next_assignment(assign, free_cards));

  const double total = acc.sum();
  if (!(total > 0.0)) throw ZeroProbabilityEvidence();
  return make_posterior(net, q, acc / total);
}

}  // namespace riskbn
