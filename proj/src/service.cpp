#include "gridbn/service.hpp"

#include <cstdlib>

#include "httplib.h"
#include "gridbn/network_json.hpp"

namespace gridbn {

using nlohmann::json;

json error_json(const Error& error) {
  return {{"code", std::string(to_string(error.code()))}, {"message", error.what()}};
}

Evidence evidence_from_json(const json& doc) {
  Evidence ev;
  if (doc.is_null()) return ev;
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "evidence: expected an object");
  for (const auto& [node, state] : doc.items()) {
    if (!state.is_string()) {
      throw Error(ErrorCode::kSchema, "evidence." + node + ": expected a state label");
    }
    ev.assignments[node] = state.get<std::string>();
  }
  return ev;
}

json evidence_to_json(const Evidence& evidence) {
  json out = json::object();
  for (const auto& [node, state] : evidence.assignments) out[node] = state;
  return out;
}

namespace {

void visible_parents(const Network& network, const Node& node, std::vector<std::string>& out) {
  for (const auto& p : node.parents) {
    const Node& parent = network.node(p);
    if (parent.auxiliary) {
      visible_parents(network, parent, out);
    } else {
      out.push_back(p);
    }
  }
}

json value_map_json(const Node& node) {
  if (!node.value_map) return nullptr;
  return {{"threshold", node.value_map->threshold},
          {"low_submean", node.value_map->low_submean},
          {"high_submean", node.value_map->high_submean}};
}

}  // namespace

json network_listing(const Network& network) {
  json nodes = json::array();
  json layers = {{"L1", json::array()}, {"L2", json::array()}, {"L3", json::array()},
                 {"L4", json::array()}};
  for (const auto& node : network.nodes()) {
    if (node.auxiliary) continue;
    std::vector<std::string> parents;
    visible_parents(network, node, parents);
    const std::string layer(to_string(node.layer));
    nodes.push_back({{"id", node.id},
                     {"layer", layer},
                     {"states", node.states},
                     {"parents", parents},
                     {"model", node.is_noisy_or() ? "noisy_or" : "cpt"},
                     {"value_map", value_map_json(node)}});
    layers[layer].push_back(node.id);
  }
  json metadata = json::object();
  for (const auto& [k, v] : network.metadata()) metadata[k] = v;
  return {{"metadata", metadata}, {"layers", layers}, {"nodes", nodes}};
}

json posteriors_json(const InferenceEngine& engine, const Evidence& evidence) {
  const Network& network = engine.network();
  check_evidence(network, evidence);
  std::vector<std::string> ids;
  std::string grid;
  for (const auto& node : network.nodes()) {
    if (node.auxiliary) continue;
    ids.push_back(node.id);
    if (node.layer == Layer::kL4 && grid.empty()) grid = node.id;
  }
  const PosteriorSet post = engine.posterior(evidence, ids);
  json nodes = json::object();
  for (const auto& id : ids) {
    const Node& node = network.node(id);
    const auto& p = post.at(id);
    nodes[id] = {{"states", node.states},
                 {"probabilities", p},
                 {"gw", node.value_map ? json(state_value(node, p)) : json(nullptr)}};
  }
  json scenario = nullptr;
  if (!grid.empty()) {
    scenario = {{"node", grid},
                {"states", network.node(grid).states},
                {"probabilities", post.at(grid)}};
  }
  return {{"evidence", evidence_to_json(evidence)},
          {"joint", post.evidence_probability()},
          {"log_evidence", post.log_evidence},
          {"nodes", nodes},
          {"scenario", scenario}};
}

json optimize_json(const InferenceEngine& engine, const OptimizeRequest& request) {
  const auto plan =
      optimize(engine, request.target, request.costs, request.weights, request.candidates);
  return plan_to_json(plan, plan_report(engine, plan));
}

std::optional<double> import_gw(const Network& network) {
  auto it = network.metadata().find("import_gw");
  if (it == network.metadata().end()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str()) return std::nullopt;
  return v;
}

json availability_json(const AvailabilityReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"component", r.component},
                    {"gw", r.gw},
                    {"peak_hour", r.peak_hour},
                    {"peak_season", r.peak_season}});
  }
  json out = {{"rows", rows},
              {"total_gw", report.total_gw},
              {"peak_hour", report.peak_hour},
              {"peak_season", report.peak_season},
              {"import_gw", report.import_gw ? json(*report.import_gw) : json(nullptr)}};
  if (report.import_gw) {
    out["peak_hour_with_import"] = report.peak_hour_with_import();
    out["peak_season_with_import"] = report.peak_season_with_import();
  }
  return out;
}

json report_json(const InferenceEngine& engine, const Evidence& evidence,
                 const ReportOptions& options) {
  check_evidence(engine.network(), evidence);
  const ScenarioSummary summary = scenario_summary(engine, evidence);
  json capacities = json::array();
  for (const auto& row : summary.capacities) {
    capacities.push_back(
        {{"component", row.component}, {"posterior", row.posterior}, {"gw", row.gw}});
  }
  json totals = json::object();
  for (const auto& [id, p] : summary.totals) {
    totals[id] = {{"states", engine.network().node(id).states}, {"probabilities", p}};
  }
  json out = {{"evidence", evidence_to_json(evidence)},
              {"scenario",
               {{"node", summary.grid},
                {"states", summary.states},
                {"probabilities", summary.probabilities}}},
              {"totals", totals},
              {"capacities", capacities}};
  const auto entries = gw_entries(summary.capacities);
  const auto imports = import_gw(engine.network());
  if (options.rules) {
    auto sums = bucket_sums(entries, *options.rules);
    if (options.include_import && imports) sums[Bucket::kImport] += *imports;
    json buckets = json::object();
    for (const auto& [b, gw] : sums) buckets[std::string(to_string(b))] = gw;
    out["buckets"] = buckets;
  }
  if (options.profile) {
    const auto report = availability(
        entries, *options.profile,
        options.include_import ? imports : std::optional<double>{});
    out["availability"] = availability_json(report);
  }
  return out;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kParameter:
    case ErrorCode::kSchema: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kImpossibleEvidence: return 422;
    default: return 500;
  }
}

Service::Service(Network network, ServiceConfig config)
    : engine_(std::move(network)), config_(std::move(config)) {}

template <typename F>
Service::Response Service::guarded(F&& f) const {
  try {
    return {200, f()};
  } catch (const Error& e) {
    return {http_status(e.code()), error_json(e)};
  } catch (const json::exception& e) {
    return {400, {{"code", "schema_error"}, {"message", std::string("malformed JSON: ") + e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"code", "internal"}, {"message", e.what()}}};
  }
}

namespace {

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json doc = json::parse(body);
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "request body must be a JSON object");
  return doc;
}

Target target_from_json(const json& doc) {
  if (doc.is_string()) return parse_target(doc.get<std::string>());
  if (doc.is_object() && doc.contains("node") && doc.contains("state") &&
      doc["node"].is_string() && doc["state"].is_string()) {
    return {doc["node"].get<std::string>(), doc["state"].get<std::string>()};
  }
  throw Error(ErrorCode::kSchema, "target: expected \"Node=state\" or {node, state}");
}

Weights weights_from_json(const json& doc) {
  Weights w;
  if (doc.is_null()) return w;
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "weights: expected an object");
  for (auto [key, field] : {std::pair{"w1", &w.w1}, std::pair{"w2", &w.w2},
                            std::pair{"w3", &w.w3}}) {
    if (!doc.contains(key)) continue;
    if (!doc[key].is_number()) {
      throw Error(ErrorCode::kSchema, std::string("weights.") + key + ": expected a number");
    }
    *field = doc[key].get<double>();
  }
  return w;
}

}  // namespace

Service::Response Service::network() const {
  return guarded([&] { return network_listing(engine_.network()); });
}

Service::Response Service::posteriors(const std::string& body) const {
  return guarded([&] {
    const json doc = parse_body(body);
    return posteriors_json(engine_, evidence_from_json(doc.value("evidence", json(nullptr))));
  });
}

Service::Response Service::optimize(const std::string& body) const {
  return guarded([&] {
    const json doc = parse_body(body);
    OptimizeRequest request;
    if (!doc.contains("target")) throw Error(ErrorCode::kSchema, "missing field \"target\"");
    request.target = target_from_json(doc["target"]);
    request.weights = weights_from_json(doc.value("weights", json(nullptr)));
    if (doc.contains("costs")) {
      request.costs = costs_from_json(doc["costs"]);
    } else if (doc.contains("costs_ref")) {
      const json& ref = doc["costs_ref"];
      if (!ref.is_string() || ref.get<std::string>() != "default") {
        throw Error(ErrorCode::kNotFound, "unknown costs_ref (only \"default\" is served)");
      }
      if (!config_.default_costs) {
        throw Error(ErrorCode::kNotFound, "the service was started without a cost table");
      }
      request.costs = *config_.default_costs;
    } else {
      throw Error(ErrorCode::kSchema, "request needs \"costs\" or \"costs_ref\"");
    }
    if (doc.contains("candidates")) {
      if (!doc["candidates"].is_array()) {
        throw Error(ErrorCode::kSchema, "candidates: expected an array of node ids");
      }
      for (const auto& c : doc["candidates"]) {
        if (!c.is_string()) throw Error(ErrorCode::kSchema, "candidates: expected strings");
        request.candidates.push_back(c.get<std::string>());
      }
    }
    return optimize_json(engine_, request);
  });
}

Service::Response Service::availability(const std::string& profile, bool include_import) const {
  return guarded([&] {
    if (!config_.availability_file) {
      throw Error(ErrorCode::kNotFound, "the service was started without availability profiles");
    }
    const auto p = load_profile(*config_.availability_file, profile == "default" ? "" : profile);
    const auto rows = gw_entries(capacity_table(engine_, {}));
    const auto report = gridbn::availability(
        rows, p, include_import ? import_gw(engine_.network()) : std::optional<double>{});
    json out = availability_json(report);
    out["profile"] = profile;
    return out;
  });
}

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(new Impl{service, {}}) {
  auto& server = impl_->server;
  const Service* svc = &service;
  auto reply = [](httplib::Response& res, const Service::Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/network", [svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc->network());
  });
  server.Post("/api/posteriors", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->posteriors(req.body));
  });
  server.Post("/api/optimize", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->optimize(req.body));
  });
  server.Get("/api/report/availability",
             [svc, reply](const httplib::Request& req, httplib::Response& res) {
               const std::string profile =
                   req.has_param("profile") ? req.get_param_value("profile") : "default";
               const bool with_import = req.has_param("include_import") &&
                                        req.get_param_value("include_import") == "true";
               reply(res, svc->availability(profile, with_import));
             });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "not_found" : "http_error";
    res.set_content(json{{"code", code}, {"message", "HTTP " + std::to_string(res.status)}}.dump(),
                    "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace gridbn
