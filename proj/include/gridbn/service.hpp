#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "gridbn/inference.hpp"
#include "gridbn/optimizer.hpp"
#include "gridbn/scenario.hpp"

namespace gridbn {

/// {"code": "...", "message": "..."}
nlohmann::json error_json(const Error& error);

/// Evidence from {"Node": "state", ...}; Error(kSchema) on non-string values.
Evidence evidence_from_json(const nlohmann::json& doc);
nlohmann::json evidence_to_json(const Evidence& evidence);

/// Layer-grouped listing of the user-visible nodes. Parents hidden behind
/// auxiliary nodes are reported as the original parents.
nlohmann::json network_listing(const Network& network);

/// Posteriors of every visible node, GW values, and the grid summary.
nlohmann::json posteriors_json(const InferenceEngine& engine, const Evidence& evidence);

struct OptimizeRequest {
  Target target;
  Weights weights;
  CostTable costs;
  std::vector<std::string> candidates;
};

nlohmann::json optimize_json(const InferenceEngine& engine, const OptimizeRequest& request);

struct ReportOptions {
  std::optional<ClassificationRules> rules;
  std::optional<AvailabilityProfile> profile;
  bool include_import = false;
};

/// Capacity table, bucket sums and availability under `evidence`.
nlohmann::json report_json(const InferenceEngine& engine, const Evidence& evidence,
                           const ReportOptions& options);
nlohmann::json availability_json(const AvailabilityReport& report);

/// Import capacity recorded in the network metadata, if any.
std::optional<double> import_gw(const Network& network);

struct ServiceConfig {
  std::optional<CostTable> default_costs;
  std::optional<std::filesystem::path> availability_file;
  std::optional<std::filesystem::path> rules_file;
};

/// Request handling shared by the HTTP server and tests. Holds only
/// immutable state, so concurrent calls are safe.
class Service {
 public:
  Service(Network network, ServiceConfig config);

  const InferenceEngine& engine() const { return engine_; }

  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  Response network() const;
  Response posteriors(const std::string& body) const;
  Response optimize(const std::string& body) const;
  Response availability(const std::string& profile, bool include_import) const;

 private:
  template <typename F>
  Response guarded(F&& f) const;

  InferenceEngine engine_;
  ServiceConfig config_;
};

int http_status(ErrorCode code);

class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host:port (port 0 picks a free port). Returns the bound port
  /// or throws Error(kIo).
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gridbn
