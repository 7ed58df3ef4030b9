#include "riskbn/builder/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "riskbn/error.hpp"

namespace riskbn {

namespace {

Index row_count(const std::vector<Vector>& risks) {
  Index rows = 1;
  for (const auto& r : risks) rows *= r.size();
  return rows;
}

// Decodes a CPT row index into parent state indices, first parent slowest.
std::vector<Index> decode(Index row, const std::vector<Index>& cards) {
  std::vector<Index> states(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    states[i] = row % cards[i];
    row /= cards[i];
  }
  return states;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Json thresholds_json(const SynthesisThresholds& t) { return {{"t1", t.t1}, {"t2", t.t2}}; }
SynthesisThresholds thresholds_from(const Json& j) { return {j.at("t1").get<double>(), j.at("t2").get<double>()}; }

}  // namespace

Index synthesis_state(double risk, const SynthesisThresholds& t) {
  if (risk < t.t1) return 0;
  if (risk <= t.t2) return 1;
  return 2;
}

double neutral_risk(const Vector& weights, const std::vector<Index>& cardinalities) {
  double m = 0.0;
  for (Index i = 0; i < weights.size(); ++i) m += weights(i) / static_cast<double>(cardinalities[static_cast<std::size_t>(i)]);
  return m;
}

SynthesisThresholds centered_thresholds(double neutral) { return {0.9 * neutral, 1.1 * neutral}; }

std::vector<std::string> spec_violations(const SynthesisSpec& spec) {
  std::vector<std::string> out;
  const std::string where = spec.node + ": ";
  if (spec.parents.empty()) out.push_back(where + "no parents");
  if (static_cast<std::size_t>(spec.weights.size()) != spec.parents.size() || spec.risks.size() != spec.parents.size()) {
    out.push_back(where + "weights and risks must align with parents");
    return out;
  }
  if ((spec.weights.array() < 0.0).any()) out.push_back(where + "negative weight");
  if (std::abs(spec.weights.sum() - 1.0) > kWeightTolerance) {
    out.push_back(where + "weights sum " + std::to_string(spec.weights.sum()));
  }
  for (std::size_t i = 0; i < spec.risks.size(); ++i) {
    const Vector& r = spec.risks[i];
    if (r.size() < 2) out.push_back(where + spec.parents[i] + " risk vector has fewer than 2 states");
    if ((r.array() < 0.0).any()) out.push_back(where + spec.parents[i] + " negative risk");
    if (std::abs(r.sum() - 1.0) > kRiskTolerance) out.push_back(where + spec.parents[i] + " risks do not sum to 1");
  }
  if (!(spec.thresholds.t1 <= spec.thresholds.t2)) out.push_back(where + "t1 > t2");
  return out;
}

double total_risk(const SynthesisSpec& spec, const std::vector<Index>& states) {
  double r = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) r += spec.weights(static_cast<Index>(i)) * spec.risks[i](states[i]);
  return r;
}

Cpt synthesize_cpt(const SynthesisSpec& spec) {
  if (auto v = spec_violations(spec); !v.empty()) throw ValidationError(std::move(v));
  std::vector<Index> cards;
  for (const auto& r : spec.risks) cards.push_back(r.size());
  Cpt cpt{spec.node, spec.parents, Matrix::Zero(row_count(spec.risks), 3)};
  for (Index row = 0; row < cpt.table.rows(); ++row) {
    cpt.table(row, synthesis_state(total_risk(spec, decode(row, cards)), spec.thresholds)) = 1.0;
  }
  return cpt;
}

Cpt synthesize_cpt(const ConditionedSpec& spec) {
  Cpt cpt{spec.node, {spec.conditioning, spec.base}, Matrix::Zero(spec.risks.size(), 3)};
  for (Index s = 0; s < spec.risks.rows(); ++s) {
    for (Index b = 0; b < spec.risks.cols(); ++b) {
      cpt.table(s * spec.risks.cols() + b, synthesis_state(spec.risks(s, b), spec.thresholds)) = 1.0;
    }
  }
  return cpt;
}

Cpt target_cpt(const TargetCptSpec& spec) {
  if (static_cast<std::size_t>(spec.weights.size()) != spec.parents.size() ||
      std::abs(spec.weights.sum() - 1.0) > kWeightTolerance) {
    throw ValidationError({spec.node + ": category weights must align with parents and sum to 1"});
  }
  if (!(spec.scores.low < spec.scores.medium && spec.scores.medium < spec.scores.high)) {
    throw ValidationError({spec.node + ": target scores must be strictly increasing"});
  }
  const double score[3] = {spec.scores.low, spec.scores.medium, spec.scores.high};
  const std::vector<Index> cards(spec.parents.size(), 3);
  Index rows = 1;
  for (std::size_t i = 0; i < cards.size(); ++i) rows *= 3;
  Cpt cpt{spec.node, spec.parents, Matrix(rows, 2)};
  for (Index row = 0; row < rows; ++row) {
    const auto states = decode(row, cards);
    double p = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) p += spec.weights(static_cast<Index>(i)) * score[states[i]];
    p = std::clamp(p, kTargetFloor, kTargetCeiling);
    cpt.table(row, 0) = 1.0 - p;
    cpt.table(row, 1) = p;
  }
  return cpt;
}

Matrix normalized_risks(const SexConditionedNode& node) {
  Matrix out = node.scaling_factors;
  for (Index s = 0; s < out.rows(); ++s) out.row(s) /= out.row(s).sum();
  return out;
}

Vector synthesis_parent_risks(const TargetScores& scores) {
  Vector v(3);
  v << scores.low, scores.medium, scores.high;
  return v / v.sum();
}

Json to_json(const SynthesisSpec& spec) {
  Json risks = Json::object();
  for (std::size_t i = 0; i < spec.parents.size(); ++i) risks[spec.parents[i]] = vector_json(spec.risks[i]);
  return {{"node", spec.node},
          {"parents", spec.parents},
          {"weights", vector_json(spec.weights)},
          {"risks", risks},
          {"thresholds", thresholds_json(spec.thresholds)}};
}

Json to_json(const ConditionedSpec& spec) {
  Json rows = Json::array();
  for (Index s = 0; s < spec.risks.rows(); ++s) rows.push_back(vector_json(spec.risks.row(s).transpose()));
  return {{"node", spec.node},
          {"conditioning", spec.conditioning},
          {"base", spec.base},
          {"risks", rows},
          {"thresholds", thresholds_json(spec.thresholds)}};
}

Json to_json(const TargetCptSpec& spec) {
  return {{"node", spec.node},
          {"parents", spec.parents},
          {"weights", vector_json(spec.weights)},
          {"scores", {{"low", spec.scores.low}, {"medium", spec.scores.medium}, {"high", spec.scores.high}}}};
}

SynthesisSpec synthesis_spec_from_json(const Json& doc) {
  SynthesisSpec spec;
  spec.node = doc.at("node").get<std::string>();
  spec.parents = doc.at("parents").get<std::vector<std::string>>();
  spec.weights = vector_from(doc.at("weights"));
  for (const auto& p : spec.parents) spec.risks.push_back(vector_from(doc.at("risks").at(p)));
  spec.thresholds = thresholds_from(doc.at("thresholds"));
  return spec;
}

ConditionedSpec conditioned_spec_from_json(const Json& doc) {
  ConditionedSpec spec;
  spec.node = doc.at("node").get<std::string>();
  spec.conditioning = doc.at("conditioning").get<std::string>();
  spec.base = doc.at("base").get<std::string>();
  const auto& rows = doc.at("risks");
  const Index cols = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
  spec.risks.resize(static_cast<Index>(rows.size()), cols);
  for (Index s = 0; s < spec.risks.rows(); ++s) {
    const Vector r = vector_from(rows[static_cast<std::size_t>(s)]);
    if (r.size() != cols) throw ParseError(spec.node + ": ragged risk table");
    spec.risks.row(s) = r.transpose();
  }
  spec.thresholds = thresholds_from(doc.at("thresholds"));
  return spec;
}

TargetCptSpec target_spec_from_json(const Json& doc) {
  TargetCptSpec spec;
  spec.node = doc.at("node").get<std::string>();
  spec.parents = doc.at("parents").get<std::vector<std::string>>();
  spec.weights = vector_from(doc.at("weights"));
  const auto& s = doc.at("scores");
  spec.scores = {s.at("low").get<double>(), s.at("medium").get<double>(), s.at("high").get<double>()};
  return spec;
}

}  // namespace riskbn
