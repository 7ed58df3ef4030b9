#include "riskbn/explain/explain.hpp"

#include <algorithm>
#include <cmath>

#include "riskbn/error.hpp"
#include "riskbn/eval/evaluation.hpp"

namespace riskbn {

std::vector<Contribution> contributions(const BuiltModel& built, const KnowledgeModel& model,
                                        const Evidence& evidence) {
  validate_evidence(built.net, evidence);
  std::vector<Contribution> out;
  if (evidence.empty()) return out;
  const double full = predict(built, evidence);
  for (const auto& [factor, state] : evidence) {
    Evidence rest = evidence;
    rest.erase(factor);
    Contribution c{factor, state, full - predict(built, rest), {}};
    if (find_factor(model, factor)) {
      for (const auto& item : evidence_for(model, factor, state)) {
        c.citations.push_back({item.summary, item.publication.title, item.publication.identifier, item.publication.year});
      }
    }
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const Contribution& a, const Contribution& b) {
    const double da = std::abs(a.delta), db = std::abs(b.delta);
    if (da != db) return da > db;
    return a.factor < b.factor;
  });
  return out;
}

RiskReport risk_report(const BuiltModel& built, const KnowledgeModel& model, const Evidence& evidence,
                       const std::string& patient) {
  RiskReport r;
  r.patient = patient;
  r.p_present = predict(built, evidence);
  const auto& states = built.net.variable(built.provenance.target).states;
  r.classification = classify(r.p_present) ? built.provenance.positive_state
                                           : (states[0] == built.provenance.positive_state ? states[1] : states[0]);
  r.contributions = contributions(built, model, evidence);
  r.model = {built.provenance.knowledge_model_version, to_string(built.provenance.mode),
             built.provenance.training.split_seed};
  return r;
}

Json report_to_json(const RiskReport& report) {
  Json contributions = Json::array();
  for (const auto& c : report.contributions) {
    Json j{{"factor", c.factor}, {"state", c.state}, {"delta", c.delta}};
    Json cites = Json::array();
    for (const auto& x : c.citations) {
      cites.push_back({{"summary", x.summary}, {"title", x.title}, {"identifier", x.identifier}, {"year", x.year}});
    }
    j["citations"] = cites;
    if (c.citations.empty()) j["note"] = kNoRecordedEvidence;
    contributions.push_back(std::move(j));
  }
  return {{"patient", report.patient},
          {"p_present", report.p_present},
          {"classification", report.classification},
          {"contributions", contributions},
          {"model", {{"version", report.model.version}, {"mode", report.model.mode}, {"seed", report.model.seed}}}};
}

RiskReport report_from_json(const Json& doc) {
  try {
    RiskReport r;
    r.patient = doc.at("patient").get<std::string>();
    r.p_present = doc.at("p_present").get<double>();
    r.classification = doc.at("classification").get<std::string>();
    for (const auto& j : doc.at("contributions")) {
      Contribution c{j.at("factor").get<std::string>(), j.at("state").get<std::string>(),
                     j.at("delta").get<double>(), {}};
      for (const auto& x : j.at("citations")) {
        c.citations.push_back({x.at("summary").get<std::string>(), x.at("title").get<std::string>(),
                               x.at("identifier").get<std::string>(), x.at("year").get<int>()});
      }
      r.contributions.push_back(std::move(c));
    }
    const auto& m = doc.at("model");
    r.model = {m.at("version").get<int>(), m.at("mode").get<std::string>(), m.at("seed").get<std::uint64_t>()};
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("risk report: ") + e.what());
  }
}

}  // namespace riskbn
