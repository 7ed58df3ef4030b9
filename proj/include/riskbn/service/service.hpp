#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "riskbn/builder/build.hpp"
#include "riskbn/error.hpp"
#include "riskbn/knowledge/model.hpp"

namespace riskbn {

// Posterior of the target plus every synthesis node. Shared by the CLI and
// the HTTP API so both print the same numbers.
Json prediction_json(const BuiltModel& built, const Evidence& evidence);

// Evidence from a JSON object of strings. Throws ServiceError.
Evidence evidence_from_json(const Json& doc);

struct ServiceResponse {
  int status = 200;
  Json body;
};

class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message, Json details = Json::object())
      : Error(std::move(code), message), status_(status), details_(std::move(details)) {}
  int status() const noexcept { return status_; }
  const Json& details() const noexcept { return details_; }

 private:
  int status_;
  Json details_;
};

// Request handling over an immutable model snapshot. Replacing the snapshot
// is atomic with respect to in-flight requests.
class Service {
 public:
  struct Snapshot {
    BuiltModel built;
    KnowledgeModel knowledge;
  };

  void load(BuiltModel built, KnowledgeModel knowledge);
  std::shared_ptr<const Snapshot> snapshot() const;

  // Routes GET /healthz, /api/model, /api/factors and POST /api/predict,
  // /api/explain. Errors use {code, message, details}.
  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;
};

// HTTP/1.1 front end for a Service.
class HttpServer {
 public:
  HttpServer(const Service& service, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port. Throws Error on failure.
  int bind();
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace riskbn
