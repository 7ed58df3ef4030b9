#include "riskbn/builder/hill_climb.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include "riskbn/error.hpp"
#include "riskbn/synth/random.hpp"

namespace riskbn {

double family_bic(const Dataset& data, Index child, const std::vector<Index>& parents, double alpha) {
  const auto card = [&](Index v) { return data.variables[static_cast<std::size_t>(v)].cardinality(); };
  Index q = 1;
  for (Index p : parents) q *= card(p);
  const Index k = card(child);
  Matrix counts = Matrix::Zero(q, k);
  for (const auto& row : data.rows) {
    Index r = 0;
    for (Index p : parents) r = r * card(p) + row[static_cast<std::size_t>(p)];
    counts(r, row[static_cast<std::size_t>(child)]) += 1.0;
  }
  double ll = 0.0;
  for (Index r = 0; r < q; ++r) {
    const double n = counts.row(r).sum();
    if (n == 0.0) continue;
    const double denom = n + alpha * static_cast<double>(k);
    for (Index s = 0; s < k; ++s) {
      const double c = counts(r, s);
      if (c > 0.0) ll += c * std::log((c + alpha) / denom);
    }
  }
  const double n = static_cast<double>(data.rows.size());
  return ll - 0.5 * std::log(n) * static_cast<double>((k - 1) * q);
}

double network_bic(const Dataset& data, const std::vector<std::vector<Index>>& parents, double alpha) {
  double s = 0.0;
  for (std::size_t v = 0; v < parents.size(); ++v) s += family_bic(data, static_cast<Index>(v), parents[v], alpha);
  return s;
}

namespace {

enum class Op { add, remove, reverse };  // declaration order is the tie-break order

struct Move {
  Op op;
  Index from;
  Index to;
};

class Search {
 public:
  Search(const Dataset& data, const HillClimbConfig& config)
      : data_(data), config_(config), n_(static_cast<Index>(data.variables.size())) {}

  double family(Index child, const std::vector<Index>& parents) {
    std::uint64_t mask = 0;
    for (Index p : parents) mask |= std::uint64_t{1} << p;
    const auto key = std::make_pair(child, mask);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    return cache_[key] = family_bic(data_, child, parents, config_.alpha);
  }

  double score(const std::vector<std::vector<Index>>& g) {
    double s = 0.0;
    for (Index v = 0; v < n_; ++v) s += family(v, g[static_cast<std::size_t>(v)]);
    return s;
  }

  static bool has_edge(const std::vector<std::vector<Index>>& g, Index from, Index to) {
    const auto& ps = g[static_cast<std::size_t>(to)];
    return std::find(ps.begin(), ps.end(), from) != ps.end();
  }

  // Whether target is reachable from source along directed edges.
  bool reaches(const std::vector<std::vector<Index>>& g, Index source, Index target) const {
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::vector<Index> stack{source};
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      if (v == target) return true;
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      for (Index c = 0; c < n_; ++c) {
        if (has_edge(g, v, c)) stack.push_back(c);
      }
    }
    return false;
  }

  static void insert(std::vector<Index>& ps, Index p) { ps.insert(std::upper_bound(ps.begin(), ps.end(), p), p); }
  static void erase(std::vector<Index>& ps, Index p) { ps.erase(std::find(ps.begin(), ps.end(), p)); }

  bool legal(const std::vector<std::vector<Index>>& g, const Move& m) const {
    const auto& to_parents = g[static_cast<std::size_t>(m.to)];
    switch (m.op) {
      case Op::add:
        return m.from != m.to && !has_edge(g, m.from, m.to) && !has_edge(g, m.to, m.from) &&
               static_cast<int>(to_parents.size()) < config_.max_parents && !reaches(g, m.to, m.from);
      case Op::remove:
        return has_edge(g, m.from, m.to);
      case Op::reverse: {
        if (!has_edge(g, m.from, m.to)) return false;
        if (static_cast<int>(g[static_cast<std::size_t>(m.from)].size()) >= config_.max_parents) return false;
        auto h = g;
        erase(h[static_cast<std::size_t>(m.to)], m.from);
        return !reaches(h, m.from, m.to);
      }
    }
    return false;
  }

  void apply(std::vector<std::vector<Index>>& g, const Move& m) const {
    if (m.op == Op::add) insert(g[static_cast<std::size_t>(m.to)], m.from);
    if (m.op == Op::remove) erase(g[static_cast<std::size_t>(m.to)], m.from);
    if (m.op == Op::reverse) {
      erase(g[static_cast<std::size_t>(m.to)], m.from);
      insert(g[static_cast<std::size_t>(m.from)], m.to);
    }
  }

  double delta(const std::vector<std::vector<Index>>& g, const Move& m) {
    auto h = g;
    apply(h, m);
    double d = family(m.to, h[static_cast<std::size_t>(m.to)]) - family(m.to, g[static_cast<std::size_t>(m.to)]);
    if (m.op == Op::reverse) {
      d += family(m.from, h[static_cast<std::size_t>(m.from)]) - family(m.from, g[static_cast<std::size_t>(m.from)]);
    }
    return d;
  }

  std::vector<Move> moves(const std::vector<std::vector<Index>>& g) const {
    std::vector<Move> out;
    for (Op op : {Op::add, Op::remove, Op::reverse}) {
      for (Index from = 0; from < n_; ++from) {
        for (Index to = 0; to < n_; ++to) {
          const Move m{op, from, to};
          if (legal(g, m)) out.push_back(m);
        }
      }
    }
    return out;
  }

  bool tie_less(const Move& a, const Move& b) const {
    const auto key = [&](const Move& m) {
      return std::make_tuple(static_cast<int>(m.op), std::cref(data_.variables[static_cast<std::size_t>(m.from)].name),
                             std::cref(data_.variables[static_cast<std::size_t>(m.to)].name));
    };
    return key(a) < key(b);
  }

  // Climbs from g to a local optimum; returns the number of accepted moves.
  int climb(std::vector<std::vector<Index>>& g, double& current, std::vector<double>* trace, int budget) {
    int accepted = 0;
    while (accepted < budget) {
      std::optional<Move> best;
      double best_delta = 0.0;
      for (const Move& m : moves(g)) {
        const double d = delta(g, m);
        if (d <= kMinGain) continue;
        if (!best || d > best_delta + kTie || (std::abs(d - best_delta) <= kTie && tie_less(m, *best))) {
          best = m;
          best_delta = std::max(d, best_delta);
        }
      }
      if (!best) break;
      apply(g, *best);
      current = score(g);
      if (trace) trace->push_back(current);
      ++accepted;
    }
    return accepted;
  }

  static constexpr double kMinGain = 1e-9;
  static constexpr double kTie = 1e-12;

 private:
  const Dataset& data_;
  const HillClimbConfig& config_;
  Index n_;
  std::map<std::pair<Index, std::uint64_t>, double> cache_;
};

}  // namespace

HillClimbResult hill_climb(const Dataset& data, const HillClimbConfig& config) {
  const Index rows = static_cast<Index>(data.rows.size());
  if (rows < kMinStructureRows) {
    throw DataError("insufficient_data", "insufficient data: " + std::to_string(rows) + " complete rows, need " +
                                             std::to_string(kMinStructureRows));
  }
  if (data.variables.size() > 64) throw ValidationError({"structure search supports at most 64 variables"});
  if (config.alpha < 0.0) throw ValidationError({"alpha must be nonnegative"});
  if (config.max_parents < 0) throw ValidationError({"max_parents must be nonnegative"});

  Search search(data, config);
  const std::size_t n = data.variables.size();
  std::vector<std::vector<Index>> graph(n);
  HillClimbResult out;
  out.initial_score = search.score(graph);
  double current = out.initial_score;
  out.iterations = search.climb(graph, current, &out.trace, config.max_iterations);

  Rng rng(config.seed);
  for (int r = 0; r < config.restarts; ++r) {
    auto g = graph;
    for (int i = 0; i < config.perturbation_moves; ++i) {
      const auto options = search.moves(g);
      if (options.empty()) break;
      search.apply(g, options[static_cast<std::size_t>(rng.below(options.size()))]);
    }
    double s = search.score(g);
    out.iterations += search.climb(g, s, nullptr, config.max_iterations);
    out.restart_scores.push_back(s);
    if (s > current + Search::kMinGain) {
      graph = std::move(g);
      current = s;
    }
  }
  out.final_score = current;

  for (const auto& v : data.variables) out.net.add_variable(v);
  for (std::size_t child = 0; child < n; ++child) {
    for (Index p : graph[child]) {
      out.net.add_edge(data.variables[static_cast<std::size_t>(p)].name, data.variables[child].name);
    }
  }
  fit_parameters(out.net, data, config.alpha);
  return out;
}

}  // namespace riskbn
