// gridbn: compile, query and optimize grid-planning Bayesian networks.
#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gridbn/elicitation.hpp"
#include "gridbn/network_json.hpp"
#include "gridbn/service.hpp"

namespace {

using gridbn::Error;
using gridbn::ErrorCode;
using nlohmann::json;

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

gridbn::Evidence parse_sets(const std::vector<std::string>& sets) {
  gridbn::Evidence ev;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw UsageError("--set expects Node=state, got '" + s + "'");
    }
    ev.assignments[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return ev;
}

void check_user_evidence(const gridbn::Network& network, const gridbn::Evidence& ev) {
  try {
    gridbn::check_evidence(network, ev);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string fixed1(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << v;
  return s.str();
}

std::string percent(double p) { return fixed1(100.0 * p) + " %"; }

gridbn::Network load_valid_network(const std::string& path) {
  gridbn::Network net = gridbn::load_network(path);
  const auto report = gridbn::validate(net);
  if (!report.ok()) throw Error(ErrorCode::kValidation, path + ": " + report.summary());
  return net;
}

int cmd_compile(const std::string& survey, const std::string& layout_path, const std::string& out,
                const std::string& weighting) {
  const auto responses = gridbn::load_survey(survey);
  const auto layout = gridbn::load_layout(layout_path);
  gridbn::AggregationPolicy policy = layout.policy;
  if (!weighting.empty()) policy.weighting = gridbn::parse_weighting(weighting);
  const auto result = gridbn::assemble_network(responses, layout, policy);
  gridbn::save_network(result.network, out);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::size_t visible = 0, aux = 0;
  for (const auto& n : result.network.nodes()) (n.auxiliary ? aux : visible)++;
  std::cout << "validation: ok (" << visible << " nodes, " << aux << " auxiliary, "
            << responses.size() << " experts, " << gridbn::to_string(policy.weighting)
            << " weighting)\n"
            << "wrote " << out << "\n";
  return 0;
}

void print_posteriors(const json& doc) {
  std::cout << "Evidence: " << (doc["evidence"].empty() ? "none" : doc["evidence"].dump()) << "\n";
  std::cout << "P(evidence) = " << doc["joint"].get<double>() << "\n\n";
  for (const auto& [id, node] : doc["nodes"].items()) {
    std::cout << std::left << std::setw(22) << id;
    const auto& states = node["states"];
    const auto& probs = node["probabilities"];
    for (std::size_t s = 0; s < states.size(); ++s) {
      std::cout << " " << states[s].get<std::string>() << "=" << percent(probs[s].get<double>());
    }
    if (!node["gw"].is_null()) std::cout << "  -> " << fixed1(node["gw"].get<double>()) << " GW";
    std::cout << "\n";
  }
  if (!doc["scenario"].is_null()) {
    const auto& sc = doc["scenario"];
    std::cout << "\nScenario " << sc["node"].get<std::string>() << ":";
    for (std::size_t s = 0; s < sc["states"].size(); ++s) {
      std::cout << " " << sc["states"][s].get<std::string>() << " "
                << percent(sc["probabilities"][s].get<double>());
    }
    std::cout << "\n";
  }
}

int cmd_infer(const std::string& path, const std::vector<std::string>& sets,
              const std::vector<std::string>& query, bool as_json) {
  const gridbn::InferenceEngine engine(load_valid_network(path));
  const auto ev = parse_sets(sets);
  check_user_evidence(engine.network(), ev);
  for (const auto& q : query) {
    if (!engine.network().contains(q) || engine.network().node(q).auxiliary) {
      throw UsageError("unknown query node " + q);
    }
  }
  json doc = gridbn::posteriors_json(engine, ev);
  if (!query.empty()) {
    json kept = json::object();
    for (const auto& q : query) kept[q] = doc["nodes"][q];
    doc["nodes"] = kept;
  }
  if (as_json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    print_posteriors(doc);
  }
  return 0;
}

int cmd_optimize(const std::string& path, const std::string& costs_path,
                 const std::string& target_text, double w1, double w2, double w3,
                 const std::vector<std::string>& candidates, bool as_json) {
  const gridbn::InferenceEngine engine(load_valid_network(path));
  gridbn::OptimizeRequest request;
  try {
    request.target = gridbn::parse_target(target_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto& net = engine.network();
  if (!net.contains(request.target.node) || net.node(request.target.node).auxiliary) {
    throw UsageError("unknown target node " + request.target.node);
  }
  const auto& tnode = net.node(request.target.node);
  if (!tnode.state_index(request.target.state)) {
    std::string valid;
    for (const auto& s : tnode.states) valid += (valid.empty() ? "" : ", ") + s;
    throw UsageError("unknown state '" + request.target.state + "' for " + tnode.id +
                     " (valid: " + valid + ")");
  }
  for (double w : {w1, w2, w3}) {
    if (!(w > 0.0)) throw UsageError("weights must be > 0");
  }
  request.weights = {w1, w2, w3};
  request.costs = gridbn::load_costs(costs_path);
  request.candidates = candidates;
  const json doc = gridbn::optimize_json(engine, request);
  if (as_json) {
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  const auto plan = gridbn::optimize(engine, request.target, request.costs, request.weights,
                                     request.candidates);
  std::cout << gridbn::render_plan(plan, gridbn::plan_report(engine, plan));
  return 0;
}

int cmd_report(const std::string& path, const std::vector<std::string>& sets,
               const std::string& rules_path, const std::string& preset,
               const std::string& profile_path, const std::string& profile,
               bool include_import, bool as_json) {
  const gridbn::InferenceEngine engine(load_valid_network(path));
  const auto ev = parse_sets(sets);
  check_user_evidence(engine.network(), ev);
  gridbn::ReportOptions options;
  options.include_import = include_import;
  if (!rules_path.empty()) options.rules = gridbn::load_rules(rules_path, preset);
  if (!profile_path.empty()) options.profile = gridbn::load_profile(profile_path, profile);
  const json doc = gridbn::report_json(engine, ev, options);
  if (as_json) {
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  const auto& sc = doc["scenario"];
  std::cout << "Grid scenarios (" << sc["node"].get<std::string>() << "):";
  for (std::size_t s = 0; s < sc["states"].size(); ++s) {
    std::cout << " " << sc["states"][s].get<std::string>() << " "
              << percent(sc["probabilities"][s].get<double>());
  }
  std::cout << "\n\n" << std::left << std::setw(22) << "Component" << std::right << std::setw(10)
            << "P(high)" << std::setw(10) << "GW" << "\n";
  for (const auto& row : doc["capacities"]) {
    std::cout << std::left << std::setw(22) << row["component"].get<std::string>() << std::right
              << std::setw(10) << percent(row["posterior"][1].get<double>()) << std::setw(10)
              << fixed1(row["gw"].get<double>()) << "\n";
  }
  if (doc.contains("buckets")) {
    std::cout << "\nBuckets:";
    const char* sep = " ";
    for (const auto& [b, gw] : doc["buckets"].items()) {
      std::cout << sep << b << " " << fixed1(gw.get<double>()) << " GW";
      sep = ", ";
    }
    std::cout << "\n";
  }
  if (doc.contains("availability")) {
    const auto& a = doc["availability"];
    std::cout << "\n" << std::left << std::setw(22) << "Availability" << std::right
              << std::setw(10) << "GW" << std::setw(11) << "Peak hour" << std::setw(13)
              << "Peak season" << "\n";
    for (const auto& row : a["rows"]) {
      std::cout << std::left << std::setw(22) << row["component"].get<std::string>() << std::right
                << std::setw(10) << fixed1(row["gw"].get<double>()) << std::setw(11)
                << fixed1(row["peak_hour"].get<double>()) << std::setw(13)
                << fixed1(row["peak_season"].get<double>()) << "\n";
    }
    std::cout << std::left << std::setw(22) << "Total" << std::right << std::setw(10)
              << fixed1(a["total_gw"].get<double>()) << std::setw(11)
              << fixed1(a["peak_hour"].get<double>()) << std::setw(13)
              << fixed1(a["peak_season"].get<double>()) << "\n";
    if (!a["import_gw"].is_null()) {
      std::cout << std::left << std::setw(22) << "With import" << std::right << std::setw(10)
                << fixed1(a["import_gw"].get<double>()) << std::setw(11)
                << fixed1(a["peak_hour_with_import"].get<double>()) << std::setw(13)
                << fixed1(a["peak_season_with_import"].get<double>()) << "\n";
    }
  }
  return 0;
}

gridbn::HttpServer* active_server = nullptr;

void on_signal(int) {
  if (active_server) active_server->stop();
}

int cmd_serve(const std::string& path, const std::string& host, int port,
              const std::string& costs_path, const std::string& availability_path) {
  gridbn::ServiceConfig config;
  if (!costs_path.empty()) config.default_costs = gridbn::load_costs(costs_path);
  if (!availability_path.empty()) config.availability_file = availability_path;
  const gridbn::Service service(load_valid_network(path), config);
  gridbn::HttpServer server(service);
  const int bound = server.bind(host, port);
  active_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving " << path << " on http://" << host << ":" << bound << std::endl;
  server.listen();
  active_server = nullptr;
  return 0;
}

int default_port() {
  if (const char* env = std::getenv("GRIDBN_PORT")) {
    try {
      return std::stoi(env);
    } catch (...) {
      throw UsageError(std::string("GRIDBN_PORT is not a port number: ") + env);
    }
  }
  return 8080;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-planning Bayesian network toolkit"};
  app.require_subcommand(1);
  bool as_json = false;

  std::string survey, layout, out = "network.json", weighting;
  auto* compile = app.add_subcommand("compile", "Compile a survey and layout into a network");
  compile->add_option("--survey", survey, "Expert survey JSON")->required()->check(CLI::ExistingFile);
  compile->add_option("--layout", layout, "Network layout JSON")->required()->check(CLI::ExistingFile);
  compile->add_option("--out,-o", out, "Output network path");
  compile->add_option("--weighting", weighting, "uniform or confidence_linear (overrides layout)")
      ->check(CLI::IsMember({"uniform", "confidence_linear"}));

  std::string network;
  std::vector<std::string> sets, query;
  auto* infer = app.add_subcommand("infer", "Posteriors under evidence");
  infer->add_option("--network,-n", network)->required()->check(CLI::ExistingFile);
  infer->add_option("--set", sets, "Evidence Node=state (repeatable)");
  infer->add_option("--query,-q", query, "Nodes to report (default: all)");
  infer->add_flag("--json", as_json, "Machine-readable output");

  std::string costs, target = "GridManagement=B1";
  double w1 = 1.0, w2 = 1.0, w3 = 1.0;
  std::vector<std::string> candidates;
  auto* opt = app.add_subcommand("optimize", "Greedy target optimization");
  opt->add_option("--network,-n", network)->required()->check(CLI::ExistingFile);
  opt->add_option("--costs", costs, "Cost table JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--target", target, "Target Node=state");
  opt->add_option("--w1", w1, "Impact weight");
  opt->add_option("--w2", w2, "Evidence-probability weight");
  opt->add_option("--w3", w3, "Cost weight");
  opt->add_option("--candidates", candidates, "Components to optimize (default: all)");
  opt->add_flag("--json", as_json, "Machine-readable output");

  std::string rules, preset, profile_path, profile;
  bool include_import = false;
  auto* report = app.add_subcommand("report", "Capacity, bucket and availability report");
  report->add_option("--network,-n", network)->required()->check(CLI::ExistingFile);
  report->add_option("--set", sets, "Evidence Node=state (repeatable)");
  report->add_option("--rules", rules, "Classification rules JSON")->check(CLI::ExistingFile);
  report->add_option("--preset", preset, "Rules preset (default: file default)");
  report->add_option("--availability", profile_path, "Availability profiles JSON")
      ->check(CLI::ExistingFile);
  report->add_option("--profile", profile, "Availability profile (default: file default)");
  report->add_flag("--include-import", include_import, "Add import capacity to totals");
  report->add_flag("--json", as_json, "Machine-readable output");

  std::string host = "127.0.0.1";
  int port = -1;
  auto* serve = app.add_subcommand("serve", "HTTP API");
  serve->add_option("--network,-n", network)->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host);
  serve->add_option("--port,-p", port, "Port (default: $GRIDBN_PORT or 8080)");
  serve->add_option("--costs", costs, "Cost table for costs_ref \"default\"")
      ->check(CLI::ExistingFile);
  serve->add_option("--availability", profile_path, "Availability profiles JSON")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*compile) return cmd_compile(survey, layout, out, weighting);
    if (*infer) return cmd_infer(network, sets, query, as_json);
    if (*opt) return cmd_optimize(network, costs, target, w1, w2, w3, candidates, as_json);
    if (*report) {
      return cmd_report(network, sets, rules, preset, profile_path, profile, include_import,
                        as_json);
    }
    if (*serve) {
      return cmd_serve(network, host, port >= 0 ? port : default_port(), costs, profile_path);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    if (as_json) {
      std::cerr << gridbn::error_json(e).dump() << "\n";
    } else {
      std::cerr << "error [" << gridbn::to_string(e.code()) << "]: " << e.what() << "\n";
    }
    return kExitDomain;
  }
  return kExitUsage;
}
