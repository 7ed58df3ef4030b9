#include "riskbn/builder/build.hpp"

#include "riskbn/error.hpp"

namespace riskbn {

std::string to_string(BuildMode mode) {
  switch (mode) {
    case BuildMode::knowledge: return "knowledge";
    case BuildMode::data: return "data";
    case BuildMode::hybrid: return "hybrid";
  }
  return "knowledge";
}

BuildMode build_mode_from_string(std::string_view name) {
  if (name == "knowledge") return BuildMode::knowledge;
  if (name == "data") return BuildMode::data;
  if (name == "hybrid") return BuildMode::hybrid;
  throw ValidationError({"unknown build mode " + std::string(name)});
}

DiscreteBayesNet knowledge_structure(const KnowledgeModel& model) {
  DiscreteBayesNet net;
  for (const RiskFactor* f : factors_of(model)) net.add_variable({f->name, f->states});
  for (const auto& node : model.sex_conditioned) {
    net.add_variable({node.name, kSynthesisStates});
    net.add_edge(node.conditioning_factor, node.name);
    net.add_edge(node.base_factor, node.name);
  }
  for (const auto& category : model.categories) {
    net.add_variable({category.name, kSynthesisStates});
    for (const auto& parent : category_parents(model, category)) net.add_edge(parent, category.name);
  }
  net.add_variable({model.target.name, model.target.states});
  for (const auto& category : model.categories) net.add_edge(category.name, model.target.name);
  return net;
}

namespace {

void apply_overrides(SynthesisParameters& params, const std::map<std::string, SynthesisThresholds>& overrides) {
  for (const auto& [node, t] : overrides) {
    bool found = false;
    for (auto& c : params.conditioned) {
      if (c.node == node) c.thresholds = t, found = true;
    }
    for (auto& c : params.categories) {
      if (c.node == node) c.thresholds = t, found = true;
    }
    if (!found) throw ValidationError({"threshold override for unknown synthesis node " + node});
  }
}

BuiltModel build_structured(const KnowledgeModel& model, const CohortTable& train, const BuildConfig& config,
                            Provenance provenance) {
  BuiltModel out{knowledge_structure(model), std::move(provenance)};
  auto priors = learn_priors(train, out.net, config.laplace_alpha);
  for (auto& cpt : priors.priors) {
    out.provenance.nodes[cpt.child] = {"learned", {}, {}, {}};
    out.net.set_cpt(std::move(cpt));
  }
  out.provenance.warnings = std::move(priors.warnings);

  SynthesisParameters params = config.mode == BuildMode::hybrid
                                   ? data_parameters(train, model, config.laplace_alpha)
                                   : knowledge_parameters(model);
  apply_overrides(params, config.threshold_overrides);
  for (const auto& spec : params.conditioned) {
    out.net.set_cpt(synthesize_cpt(spec));
    out.provenance.nodes[spec.node] = {"synthesized", {}, spec, {}};
  }
  for (const auto& spec : params.categories) {
    out.net.set_cpt(synthesize_cpt(spec));
    out.provenance.nodes[spec.node] = {"synthesized", spec, {}, {}};
  }
  out.net.set_cpt(target_cpt(params.target));
  out.provenance.nodes[params.target.node] = {"synthesized", {}, {}, params.target};
  out.provenance.cramers_v = std::move(params.cramers_v);
  out.provenance.warnings.insert(out.provenance.warnings.end(), params.warnings.begin(), params.warnings.end());
  return out;
}

}  // namespace

BuiltModel build(const KnowledgeModel& model, const CohortTable& train, const BuildConfig& config) {
  if (config.laplace_alpha < 0.0) throw ValidationError({"laplace_alpha must be nonnegative"});
  Provenance provenance;
  provenance.mode = config.mode;
  provenance.knowledge_model_version = model.version;
  provenance.target = model.target.name;
  provenance.positive_state = model.target.positive_state();
  provenance.laplace_alpha = config.laplace_alpha;
  provenance.training = config.training;
  provenance.training.n_train = static_cast<Index>(train.rows.size());

  BuiltModel out;
  if (config.mode == BuildMode::data) {
    HillClimbConfig hc = config.hill_climb;
    hc.alpha = config.laplace_alpha;
    hc.seed = config.seed;
    auto result = hill_climb(complete_cases(train, model.target), hc);
    out.net = std::move(result.net);
    out.provenance = std::move(provenance);
    out.provenance.score_trace = std::move(result.trace);
    for (const auto& v : out.net.variables()) out.provenance.nodes[v.name] = {"learned", {}, {}, {}};
  } else {
    out = build_structured(model, train, config, std::move(provenance));
  }
  if (const auto v = validate_network(out.net); !v.ok()) {
    std::vector<std::string> messages;
    for (const auto& x : v.violations) messages.push_back(x.message);
    throw ValidationError(std::move(messages));
  }
  return out;
}

Json provenance_to_json(const Provenance& p) {
  Json nodes = Json::object();
  for (const auto& [name, node] : p.nodes) {
    Json j{{"origin", node.origin}};
    if (node.synthesis) j["synthesis"] = to_json(*node.synthesis);
    if (node.conditioned) j["conditioned"] = to_json(*node.conditioned);
    if (node.target) j["target_cpt"] = to_json(*node.target);
    nodes[name] = std::move(j);
  }
  return {{"version", 1},
          {"mode", to_string(p.mode)},
          {"knowledge_model_version", p.knowledge_model_version},
          {"target", p.target},
          {"positive_state", p.positive_state},
          {"laplace_alpha", p.laplace_alpha},
          {"training",
           {{"split_seed", p.training.split_seed},
            {"train_fraction", p.training.train_fraction},
            {"stratified", p.training.stratified},
            {"n_train", p.training.n_train}}},
          {"nodes", nodes},
          {"cramers_v", p.cramers_v},
          {"score_trace", p.score_trace},
          {"warnings", p.warnings}};
}

Provenance provenance_from_json(const Json& doc) {
  try {
    Provenance p;
    p.mode = build_mode_from_string(doc.at("mode").get<std::string>());
    p.knowledge_model_version = doc.at("knowledge_model_version").get<int>();
    p.target = doc.at("target").get<std::string>();
    p.positive_state = doc.at("positive_state").get<std::string>();
    p.laplace_alpha = doc.at("laplace_alpha").get<double>();
    const auto& t = doc.at("training");
    p.training = {t.at("split_seed").get<std::uint64_t>(), t.at("train_fraction").get<double>(),
                  t.at("stratified").get<bool>(), t.at("n_train").get<Index>()};
    for (const auto& [name, j] : doc.at("nodes").items()) {
      NodeProvenance node{j.at("origin").get<std::string>(), {}, {}, {}};
      if (j.contains("synthesis")) node.synthesis = synthesis_spec_from_json(j["synthesis"]);
      if (j.contains("conditioned")) node.conditioned = conditioned_spec_from_json(j["conditioned"]);
      if (j.contains("target_cpt")) node.target = target_spec_from_json(j["target_cpt"]);
      p.nodes.emplace(name, std::move(node));
    }
    p.cramers_v = doc.at("cramers_v").get<std::map<std::string, double>>();
    p.score_trace = doc.at("score_trace").get<std::vector<double>>();
    p.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return p;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("provenance: ") + e.what());
  }
}

std::filesystem::path provenance_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension();
  p += ".provenance.json";
  return p;
}

void save_built_model(const BuiltModel& built, const std::filesystem::path& model_path) {
  write_text_file(model_path, dump_json(network_to_json(built.net)));
  write_text_file(provenance_path(model_path), dump_json(provenance_to_json(built.provenance)));
}

BuiltModel load_built_model(const std::filesystem::path& model_path) {
  BuiltModel out{network_from_json(read_json_file(model_path)),
                 provenance_from_json(read_json_file(provenance_path(model_path)))};
  for (const auto& v : out.net.variables()) {
    if (!out.provenance.nodes.count(v.name)) throw ValidationError({"provenance has no entry for " + v.name});
  }
  if (out.provenance.nodes.size() != static_cast<std::size_t>(out.net.size())) {
    throw ValidationError({"provenance lists nodes absent from the network"});
  }
  if (!out.net.contains(out.provenance.target)) throw ValidationError({"target " + out.provenance.target + " not in network"});
  return out;
}

}  // namespace riskbn
