#include "riskbn/service/service.hpp"

#include <httplib.h>

#include "riskbn/bn/inference.hpp"
#include "riskbn/eval/evaluation.hpp"
#include "riskbn/explain/explain.hpp"

namespace riskbn {

namespace {

std::string negative_state(const BuiltModel& built) {
  const auto& states = built.net.variable(built.provenance.target).states;
  return states[0] == built.provenance.positive_state ? states[1] : states[0];
}

Json distribution_json(const Posterior& p) {
  Json out = Json::object();
  for (std::size_t s = 0; s < p.states.size(); ++s) {
    out[p.states[s]] = p.distribution(static_cast<Index>(s));
  }
  return out;
}

// Unknown names and labels become 400s that list what is accepted.
void check_evidence(const BuiltModel& built, const Evidence& evidence) {
  for (const auto& [name, state] : evidence) {
    if (!built.net.contains(name) || name == built.provenance.target) {
      Json valid = Json::array();
      for (const auto& v : built.net.variables()) {
        if (v.name != built.provenance.target) valid.push_back(v.name);
      }
      throw ServiceError(400, "unknown_factor", "unknown factor '" + name + "'",
                         {{"factor", name}, {"valid_factors", valid}});
    }
    const auto& var = built.net.variable(name);
    if (var.state_index(state) < 0) {
      throw ServiceError(400, "invalid_state", "'" + state + "' is not a state of " + name,
                         {{"factor", name}, {"state", state}, {"valid_states", var.states}});
    }
  }
}

Json error_body(const std::string& code, const std::string& message, const Json& details) {
  return {{"code", code}, {"message", message}, {"details", details}};
}

Json model_json(const Service::Snapshot& snap) {
  const auto& net = snap.built.net;
  const auto& prov = snap.built.provenance;
  Json nodes = Json::array();
  for (const auto& v : net.variables()) {
    std::string kind = "factor";
    if (v.name == prov.target) {
      kind = "target";
    } else if (auto it = prov.nodes.find(v.name); it != prov.nodes.end()) {
      if (it->second.conditioned) kind = "conditioned";
      if (it->second.synthesis) kind = "synthesis";
    }
    Json node = {{"name", v.name}, {"states", v.states}, {"parents", net.parents(v.name)}, {"kind", kind}};
    if (kind == "factor") {
      if (find_factor(snap.knowledge, v.name)) node["category"] = category_of(snap.knowledge, v.name).name;
    }
    if (auto it = prov.nodes.find(v.name); it != prov.nodes.end()) node["origin"] = it->second.origin;
    nodes.push_back(std::move(node));
  }
  Json edges = Json::array();
  for (const auto& [p, c] : net.edges()) edges.push_back({p, c});
  Json summary = {{"mode", to_string(prov.mode)},
                  {"knowledge_model_version", prov.knowledge_model_version},
                  {"laplace_alpha", prov.laplace_alpha},
                  {"split_seed", prov.training.split_seed},
                  {"train_fraction", prov.training.train_fraction},
                  {"n_train", prov.training.n_train},
                  {"warnings", prov.warnings}};
  return {{"target", prov.target},
          {"positive_state", prov.positive_state},
          {"nodes", nodes},
          {"edges", edges},
          {"provenance", summary}};
}

Json factors_json(const Service::Snapshot& snap) {
  Json factors = Json::array();
  for (const auto& category : snap.knowledge.categories) {
    for (const auto& f : category.factors) {
      if (!snap.built.net.contains(f.name)) continue;
      Json counts = Json::object();
      std::size_t total = 0;
      for (const auto& r : f.relationships) {
        counts[r.state] = r.evidence.size();
        total += r.evidence.size();
      }
      factors.push_back({{"name", f.name},
                         {"category", category.name},
                         {"states", snap.built.net.variable(f.name).states},
                         {"evidence_count", total},
                         {"evidence_counts", counts}});
    }
  }
  return {{"factors", factors}};
}

Json request_json(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    Json doc = Json::parse(body);
    if (!doc.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    return doc;
  } catch (const Json::parse_error& e) {
    throw ServiceError(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

Evidence evidence_from_json(const Json& doc) {
  if (doc.is_null()) return {};
  if (!doc.is_object()) throw ServiceError(400, "bad_request", "evidence must be an object");
  Evidence ev;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_string()) {
      throw ServiceError(400, "bad_request", "evidence for '" + k + "' must be a state label", {{"factor", k}});
    }
    ev[k] = v.get<std::string>();
  }
  return ev;
}

Json prediction_json(const BuiltModel& built, const Evidence& evidence) {
  check_evidence(built, evidence);
  const double p = predict(built, evidence);
  Json posteriors = Json::object();
  for (const auto& v : built.net.variables()) {
    auto it = built.provenance.nodes.find(v.name);
    if (v.name == built.provenance.target || it == built.provenance.nodes.end() || !it->second.synthesis) continue;
    posteriors[v.name] = distribution_json(posterior(built.net, evidence, v.name));
  }
  return {{"target", built.provenance.target},
          {"evidence", evidence},
          {"p_present", p},
          {"classification", classify(p) ? built.provenance.positive_state : negative_state(built)},
          {"posteriors", posteriors}};
}

void Service::load(BuiltModel built, KnowledgeModel knowledge) {
  auto next = std::make_shared<const Snapshot>(Snapshot{std::move(built), std::move(knowledge)});
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(next);
}

std::shared_ptr<const Service::Snapshot> Service::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

ServiceResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
  try {
    if (method == "GET" && path == "/healthz") {
      return {200, {{"status", "ok"}, {"model_loaded", snapshot() != nullptr}}};
    }
    const bool known = (method == "GET" && (path == "/api/model" || path == "/api/factors")) ||
                       (method == "POST" && (path == "/api/predict" || path == "/api/explain"));
    if (!known) throw ServiceError(404, "not_found", method + " " + path + " is not an endpoint");

    const auto snap = snapshot();
    if (!snap) throw ServiceError(503, "no_model", "no model is loaded");
    if (path == "/api/model") return {200, model_json(*snap)};
    if (path == "/api/factors") return {200, factors_json(*snap)};

    const Json req = request_json(body);
    const Evidence ev = evidence_from_json(req.value("evidence", Json::object()));
    if (path == "/api/predict") return {200, prediction_json(snap->built, ev)};
    check_evidence(snap->built, ev);
    return {200, report_to_json(risk_report(snap->built, snap->knowledge, ev, req.value("patient", "")))};
  } catch (const ServiceError& e) {
    return {e.status(), error_body(e.code(), e.what(), e.details())};
  } catch (const ZeroProbabilityEvidence& e) {
    return {422, error_body(e.code(), "the evidence has probability zero under the model", Json::object())};
  } catch (const Error& e) {
    return {400, error_body(e.code(), e.what(), Json::object())};
  } catch (const std::exception& e) {
    return {500, error_body("internal_error", e.what(), Json::object())};
  }
}

struct HttpServer::Impl {
  Impl(const Service& s, ServeOptions o) : service(s), options(std::move(o)) {}
  const Service& service;
  ServeOptions options;
  httplib::Server server;
  int port = -1;
};

HttpServer::HttpServer(const Service& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = impl_->service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.Get("/healthz", route);
  s.Get("/api/.*", route);
  s.Post("/api/.*", route);
  if (impl_->options.ui_dir) {
    if (!s.set_mount_point("/", impl_->options.ui_dir->string())) {
      throw ConfigurationError("UI directory not found: " + impl_->options.ui_dir->string());
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& s = impl_->server;
  impl_->port = impl_->options.port == 0 ? s.bind_to_any_port(impl_->options.host)
                                         : (s.bind_to_port(impl_->options.host, impl_->options.port)
                                                ? impl_->options.port
                                                : -1);
  if (impl_->port < 0) {
    throw ConfigurationError("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::listen() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace riskbn
