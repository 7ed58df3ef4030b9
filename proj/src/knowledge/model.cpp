#include "riskbn/knowledge/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "riskbn/error.hpp"

namespace riskbn {
namespace {

constexpr double kWeightTolerance = 1e-6;

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

SynthesisThresholds thresholds_from(const Json& j) {
  SynthesisThresholds t;
  if (j.contains("thresholds")) {
    t.t1 = j.at("thresholds").at("t1").get<double>();
    t.t2 = j.at("thresholds").at("t2").get<double>();
  }
  return t;
}

Json thresholds_to(const SynthesisThresholds& t) { return {{"t1", t.t1}, {"t2", t.t2}}; }

void check_thresholds(const SynthesisThresholds& t, const std::string& path,
                      std::vector<std::string>& out) {
  if (!(0.0 < t.t1 && t.t1 < t.t2 && t.t2 < 1.0)) {
    out.push_back(path + ": thresholds must satisfy 0 < t1 < t2 < 1 (got " + num(t.t1) + ", " +
                  num(t.t2) + ")");
  }
}

KnowledgeModel parse(const Json& doc) {
  KnowledgeModel m;
  if (!doc.is_object()) throw ParseError("knowledge model: document must be an object");
  if (!doc.contains("version")) throw ParseError("knowledge model: missing mandatory field 'version'");
  m.version = doc.at("version").get<int>();
  if (m.version != kKnowledgeFormatVersion) {
    throw ParseError("knowledge model: unsupported version " + std::to_string(m.version));
  }
  const auto& target = doc.at("target");
  m.target.name = target.at("name").get<std::string>();
  m.target.condition = target.value("condition", std::string{});
  if (target.contains("states")) m.target.states = target.at("states").get<std::vector<std::string>>();
  if (doc.contains("target_scores")) {
    const auto& s = doc.at("target_scores");
    m.target_scores = {s.at("low").get<double>(), s.at("medium").get<double>(), s.at("high").get<double>()};
  }

  std::map<std::string, Publication> registry;
  for (const auto& p : doc.value("publications", Json::array())) {
    Publication pub;
    pub.identifier = p.at("identifier").get<std::string>();
    pub.title = p.at("title").get<std::string>();
    pub.year = p.value("year", 0);
    pub.authors = p.value("authors", std::vector<std::string>{});
    registry[pub.identifier] = pub;
    m.publications.push_back(std::move(pub));
  }

  for (const auto& c : doc.at("categories")) {
    FactorCategory cat;
    cat.name = c.at("name").get<std::string>();
    cat.weight = c.at("weight").get<double>();
    cat.thresholds = thresholds_from(c);
    for (const auto& f : c.at("factors")) {
      RiskFactor factor;
      factor.name = f.at("name").get<std::string>();
      factor.states = f.at("states").get<std::vector<std::string>>();
      factor.weight = f.at("weight").get<double>();
      for (const auto& r : f.at("relationships")) {
        RiskRelationship rel;
        rel.state = r.at("state").get<std::string>();
        rel.scaling_factor = r.at("scaling_factor").get<double>();
        rel.provisional = r.value("provisional", false);
        for (const auto& e : r.value("evidence", Json::array())) {
          EvidenceItem item;
          item.summary = e.at("summary").get<std::string>();
          const auto id = e.at("publication").get<std::string>();
          auto it = registry.find(id);
          // Unresolved identifiers are reported by validation.
          item.publication = it != registry.end() ? it->second : Publication{"", id, 0, {}};
          rel.evidence.push_back(std::move(item));
        }
        factor.relationships.push_back(std::move(rel));
      }
      cat.factors.push_back(std::move(factor));
    }
    m.categories.push_back(std::move(cat));
  }

  for (const auto& s : doc.value("sex_conditioned", Json::array())) {
    SexConditionedNode node;
    node.name = s.at("name").get<std::string>();
    node.conditioning_factor = s.at("conditioning_factor").get<std::string>();
    node.base_factor = s.at("base_factor").get<std::string>();
    node.thresholds = thresholds_from(s);
    const RiskFactor* cond = nullptr;
    const RiskFactor* base = nullptr;
    for (const auto& cat : m.categories) {
      for (const auto& f : cat.factors) {
        if (f.name == node.conditioning_factor) cond = &f;
        if (f.name == node.base_factor) base = &f;
      }
    }
    if (!cond || !base) {
      throw ValidationError({"sex_conditioned '" + node.name + "': unknown conditioning or base factor"});
    }
    const auto& table = s.at("scaling_factors");
    node.scaling_factors = Matrix::Constant(static_cast<Index>(cond->states.size()),
                                            static_cast<Index>(base->states.size()),
                                            std::nan(""));
    for (std::size_t i = 0; i < cond->states.size(); ++i) {
      if (!table.contains(cond->states[i])) continue;
      const auto& row = table.at(cond->states[i]);
      for (std::size_t k = 0; k < base->states.size(); ++k) {
        if (row.contains(base->states[k])) {
          node.scaling_factors(static_cast<Index>(i), static_cast<Index>(k)) =
              row.at(base->states[k]).get<double>();
        }
      }
    }
    m.sex_conditioned.push_back(std::move(node));
  }
  return m;
}

}  // namespace

std::vector<std::string> model_violations(const KnowledgeModel& m) {
  std::vector<std::string> out;
  if (m.target.name.empty()) out.push_back("target.name: empty");
  if (m.target.states.size() != 2) out.push_back("target.states: must list exactly [absent, present]");
  const auto& s = m.target_scores;
  if (!(0.0 < s.low && s.low < s.medium && s.medium < s.high && s.high < 1.0)) {
    out.push_back("target_scores: must be strictly increasing within (0,1)");
  }

  std::set<std::string> pub_ids;
  for (std::size_t i = 0; i < m.publications.size(); ++i) {
    const auto& p = m.publications[i];
    const std::string path = "publications[" + std::to_string(i) + "]";
    if (p.title.empty()) out.push_back(path + ".title: empty");
    if (p.identifier.empty()) out.push_back(path + ".identifier: empty");
    if (!pub_ids.insert(p.identifier).second) out.push_back(path + ".identifier: duplicate");
  }

  if (m.categories.empty()) out.push_back("categories: empty");
  std::set<std::string> cat_names;
  std::set<std::string> factor_names;
  double cat_sum = 0.0;
  for (std::size_t ci = 0; ci < m.categories.size(); ++ci) {
    const auto& cat = m.categories[ci];
    const std::string cpath = "categories[" + std::to_string(ci) + "]";
    if (std::find(kCategoryNames.begin(), kCategoryNames.end(), cat.name) == kCategoryNames.end()) {
      out.push_back(cpath + ".name: '" + cat.name + "' is not a known category");
    }
    if (!cat_names.insert(cat.name).second) out.push_back(cpath + ".name: duplicate '" + cat.name + "'");
    if (!(cat.weight >= 0.0 && cat.weight <= 1.0)) out.push_back(cpath + ".weight: outside [0,1]");
    cat_sum += cat.weight;
    check_thresholds(cat.thresholds, cpath + ".thresholds", out);
    if (cat.factors.empty()) out.push_back(cpath + ".factors: empty");

    double factor_sum = 0.0;
    for (std::size_t fi = 0; fi < cat.factors.size(); ++fi) {
      const auto& f = cat.factors[fi];
      const std::string fpath = cpath + ".factors[" + std::to_string(fi) + "]";
      if (f.name.empty()) out.push_back(fpath + ".name: empty");
      if (f.name == m.target.name || !factor_names.insert(f.name).second) {
        out.push_back(fpath + ".name: duplicate '" + f.name + "'");
      }
      if (f.states.size() < 2) out.push_back(fpath + ".states: fewer than 2 states");
      if (std::set<std::string>(f.states.begin(), f.states.end()).size() != f.states.size()) {
        out.push_back(fpath + ".states: duplicate labels");
      }
      if (!(f.weight >= 0.0 && f.weight <= 1.0)) out.push_back(fpath + ".weight: outside [0,1]");
      factor_sum += f.weight;
      if (f.relationships.size() != f.states.size()) {
        out.push_back(fpath + ".relationships: expected one per state");
      }
      for (std::size_t ri = 0; ri < f.relationships.size(); ++ri) {
        const auto& r = f.relationships[ri];
        const std::string rpath = fpath + ".relationships[" + std::to_string(ri) + "]";
        if (ri < f.states.size() && r.state != f.states[ri]) {
          out.push_back(rpath + ".state: '" + r.state + "' does not match state order");
        }
        if (!(r.scaling_factor > 0.0) || !std::isfinite(r.scaling_factor)) {
          out.push_back(rpath + ".scaling_factor: must be > 0");
        }
        for (std::size_t ei = 0; ei < r.evidence.size(); ++ei) {
          const auto& e = r.evidence[ei];
          const std::string epath = rpath + ".evidence[" + std::to_string(ei) + "]";
          if (e.summary.empty()) out.push_back(epath + ".summary: empty");
          if (!pub_ids.count(e.publication.identifier)) {
            out.push_back(epath + ".publication: unknown identifier '" + e.publication.identifier + "'");
          }
        }
      }
    }
    if (std::abs(factor_sum - 1.0) > kWeightTolerance) {
      out.push_back(cpath + ".factors: factor weights sum " + num(factor_sum));
    }
  }
  if (!m.categories.empty() && std::abs(cat_sum - 1.0) > kWeightTolerance) {
    out.push_back("categories: category weights sum " + num(cat_sum));
  }

  std::set<std::string> node_names;
  for (std::size_t si = 0; si < m.sex_conditioned.size(); ++si) {
    const auto& n = m.sex_conditioned[si];
    const std::string spath = "sex_conditioned[" + std::to_string(si) + "]";
    if (n.name.empty() || factor_names.count(n.name) || cat_names.count(n.name) ||
        !node_names.insert(n.name).second || n.name == m.target.name) {
      out.push_back(spath + ".name: empty or clashes with another node");
    }
    const RiskFactor* cond = find_factor(m, n.conditioning_factor);
    const RiskFactor* base = find_factor(m, n.base_factor);
    if (!cond) out.push_back(spath + ".conditioning_factor: unknown '" + n.conditioning_factor + "'");
    if (!base) out.push_back(spath + ".base_factor: unknown '" + n.base_factor + "'");
    check_thresholds(n.thresholds, spath + ".thresholds", out);
    if (cond && base) {
      if (n.scaling_factors.rows() != static_cast<Index>(cond->states.size()) ||
          n.scaling_factors.cols() != static_cast<Index>(base->states.size()) ||
          !n.scaling_factors.allFinite()) {
        out.push_back(spath + ".scaling_factors: must cover every (conditioning, base) state pair");
      } else if ((n.scaling_factors.array() <= 0.0).any()) {
        out.push_back(spath + ".scaling_factors: entries must be > 0");
      }
    }
  }
  return out;
}

KnowledgeModel load_model(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("knowledge model: ") + e.what());
  }
  KnowledgeModel m;
  try {
    m = parse(doc);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("knowledge model: ") + e.what());
  }
  auto violations = model_violations(m);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return m;
}

KnowledgeModel load_model_file(const std::filesystem::path& path) {
  return load_model(read_text_file(path));
}

Json model_to_json(const KnowledgeModel& m) {
  Json doc;
  doc["version"] = m.version;
  doc["target"] = {{"name", m.target.name}, {"condition", m.target.condition}, {"states", m.target.states}};
  doc["target_scores"] = {{"low", m.target_scores.low},
                          {"medium", m.target_scores.medium},
                          {"high", m.target_scores.high}};
  doc["publications"] = Json::array();
  for (const auto& p : m.publications) {
    doc["publications"].push_back(
        {{"identifier", p.identifier}, {"title", p.title}, {"year", p.year}, {"authors", p.authors}});
  }
  doc["categories"] = Json::array();
  for (const auto& c : m.categories) {
    Json factors = Json::array();
    for (const auto& f : c.factors) {
      Json rels = Json::array();
      for (const auto& r : f.relationships) {
        Json ev = Json::array();
        for (const auto& e : r.evidence) {
          ev.push_back({{"summary", e.summary}, {"publication", e.publication.identifier}});
        }
        Json rel = {{"state", r.state}, {"scaling_factor", r.scaling_factor}, {"evidence", ev}};
        if (r.provisional) rel["provisional"] = true;
        rels.push_back(std::move(rel));
      }
      factors.push_back({{"name", f.name}, {"weight", f.weight}, {"states", f.states}, {"relationships", rels}});
    }
    doc["categories"].push_back({{"name", c.name},
                                 {"weight", c.weight},
                                 {"thresholds", thresholds_to(c.thresholds)},
                                 {"factors", factors}});
  }
  doc["sex_conditioned"] = Json::array();
  for (const auto& n : m.sex_conditioned) {
    const RiskFactor* cond = find_factor(m, n.conditioning_factor);
    const RiskFactor* base = find_factor(m, n.base_factor);
    Json table = Json::object();
    for (std::size_t i = 0; cond && i < cond->states.size(); ++i) {
      Json row = Json::object();
      for (std::size_t k = 0; base && k < base->states.size(); ++k) {
        row[base->states[k]] = n.scaling_factors(static_cast<Index>(i), static_cast<Index>(k));
      }
      table[cond->states[i]] = std::move(row);
    }
    doc["sex_conditioned"].push_back({{"name", n.name},
                                      {"conditioning_factor", n.conditioning_factor},
                                      {"base_factor", n.base_factor},
                                      {"thresholds", thresholds_to(n.thresholds)},
                                      {"scaling_factors", table}});
  }
  return doc;
}

std::string save_model(const KnowledgeModel& model) { return dump_json(model_to_json(model)); }

Vector normalized_risks(const RiskFactor& factor) {
  Vector v(static_cast<Index>(factor.relationships.size()));
  for (std::size_t i = 0; i < factor.relationships.size(); ++i) {
    v(static_cast<Index>(i)) = factor.relationships[i].scaling_factor;
  }
  return v / v.sum();
}

std::vector<const RiskFactor*> factors_of(const KnowledgeModel& model) {
  std::vector<const RiskFactor*> out;
  for (const auto& c : model.categories) {
    for (const auto& f : c.factors) out.push_back(&f);
  }
  return out;
}

const RiskFactor* find_factor(const KnowledgeModel& model, std::string_view name) {
  for (const auto& c : model.categories) {
    for (const auto& f : c.factors) {
      if (f.name == name) return &f;
    }
  }
  return nullptr;
}

const FactorCategory& category_of(const KnowledgeModel& model, std::string_view factor) {
  for (const auto& c : model.categories) {
    for (const auto& f : c.factors) {
      if (f.name == factor) return c;
    }
  }
  throw LookupError("unknown factor '" + std::string(factor) + "'");
}

const SexConditionedNode* conditioned_node_for(const KnowledgeModel& model, std::string_view base_factor) {
  for (const auto& n : model.sex_conditioned) {
    if (n.base_factor == base_factor) return &n;
  }
  return nullptr;
}

std::vector<EvidenceItem> evidence_for(const KnowledgeModel& model, std::string_view factor,
                                       std::string_view state) {
  const RiskFactor* f = find_factor(model, factor);
  if (!f) throw LookupError("unknown factor '" + std::string(factor) + "'");
  for (const auto& r : f->relationships) {
    if (r.state == state) return r.evidence;
  }
  throw LookupError("unknown state '" + std::string(state) + "' of factor '" + std::string(factor) + "'");
}

std::vector<SummaryRow> model_summary(const KnowledgeModel& model) {
  std::vector<SummaryRow> rows;
  for (const auto& c : model.categories) {
    for (const auto& f : c.factors) {
      int evidence = 0;
      for (const auto& r : f.relationships) evidence += static_cast<int>(r.evidence.size());
      rows.push_back({c.name, f.name, f.weight, static_cast<int>(f.states.size()), evidence});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.category, a.factor) < std::tie(b.category, b.factor);
  });
  return rows;
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "category,factor,weight,state_count,evidence_count\n";
  for (const auto& r : rows) {
    os << r.category << ',' << r.factor << ',' << num(r.weight) << ',' << r.state_count << ','
       << r.evidence_count << '\n';
  }
  return os.str();
}

}  // namespace riskbn
