#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>
#include <thread>

#include "httplib.h"
#include "gridbn/elicitation.hpp"
#include "gridbn/network_json.hpp"
#include "gridbn/service.hpp"

namespace gridbn {
namespace {

using nlohmann::json;

const std::filesystem::path kFixtures = GRIDBN_FIXTURE_DIR;

const Network& fixture_network() {
  static const Network net = [] {
    const auto responses = load_survey(kFixtures / "survey.json");
    const auto layout = load_layout(kFixtures / "layout.json");
    return assemble_network(responses, layout, layout.policy).network;
  }();
  return net;
}

std::filesystem::path fixture_network_file() {
  static const std::filesystem::path path = [] {
    auto p = std::filesystem::temp_directory_path() / "gridbn_service_test_network.json";
    save_network(fixture_network(), p);
    return p;
  }();
  return path;
}

ServiceConfig fixture_config() {
  ServiceConfig config;
  config.default_costs = load_costs(kFixtures / "costs.json");
  config.availability_file = kFixtures / "availability.json";
  return config;
}

const Service& fixture_service() {
  static const Service service(fixture_network(), fixture_config());
  return service;
}

TEST(Service, NetworkListingHidesAuxiliaryNodes) {
  const auto r = fixture_service().network();
  ASSERT_EQ(r.status, 200);
  for (const auto& node : r.body["nodes"]) {
    EXPECT_EQ(node["id"].get<std::string>().find("__ici_"), std::string::npos);
    for (const auto& p : node["parents"]) {
      EXPECT_EQ(p.get<std::string>().find("__ici_"), std::string::npos);
    }
  }
  EXPECT_EQ(r.body["layers"]["L4"], json::array({"GridManagement"}));
  EXPECT_EQ(r.body["layers"]["L3"].size(), 2u);
  // Bulk keeps all six original members even though it was divorced.
  for (const auto& node : r.body["nodes"]) {
    if (node["id"] == "Bulk") EXPECT_EQ(node["parents"].size(), 6u);
  }
}

TEST(Service, PosteriorsUnderFullEvidence) {
  const auto r =
      fixture_service().posteriors(R"({"evidence": {"Bulk": "ge13", "Balance": "ge5"}})");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const std::vector<double> expected{0.532, 0.119, 0.267, 0.082};
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_NEAR(r.body["scenario"]["probabilities"][s].get<double>(), expected[s], 1e-6);
  }
  const auto base = fixture_service().posteriors("{}");
  EXPECT_NEAR(base.body["scenario"]["probabilities"][0].get<double>(), 0.409, 0.0015);
}

TEST(Service, ErrorsCarryCodeAndMessage) {
  const auto& svc = fixture_service();
  auto check = [](const Service::Response& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.body.dump();
    EXPECT_EQ(r.body["code"], code);
    EXPECT_FALSE(r.body["message"].get<std::string>().empty());
  };
  check(svc.posteriors(R"({"evidence": {"Bogus": "x"}})"), 400, "validation_error");
  check(svc.posteriors(R"({"evidence": {"Bulk": 1}})"), 400, "schema_error");
  check(svc.posteriors("{not json"), 400, "schema_error");
  check(svc.posteriors(R"({"evidence": {"Bulk__ici_1": "true"}})"), 400, "validation_error");
  check(svc.optimize(R"({"target": "GridManagement=B1"})"), 400, "schema_error");
  check(svc.optimize(R"({"target": "GridManagement=B9", "costs_ref": "default"})"), 400,
        "validation_error");
  check(svc.optimize(R"({"target": "GridManagement=B1", "costs_ref": "cheap"})"), 404,
        "not_found");
  check(svc.optimize(R"({"target": "GridManagement=B1", "costs_ref": "default",
                         "weights": {"w1": 0}})"),
        400, "parameter_error");
  check(svc.optimize(R"({"target": "GridManagement=B1", "costs": {"DSR": 800}})"), 404,
        "not_found");
  check(svc.availability("winter", false), 404, "not_found");
}

TEST(Service, ImpossibleEvidenceIsReported) {
  Node a;
  a.id = "A";
  a.states = {"F", "T"};
  a.distribution = ExplicitCpt{{{1.0, 0.0}}};
  const Service svc(Network({a}), {});
  const auto r = svc.posteriors(R"({"evidence": {"A": "T"}})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["code"], "impossible_evidence");
  EXPECT_NE(r.body["message"].get<std::string>().find("A=T"), std::string::npos);
}

TEST(Service, AvailabilityReport) {
  const auto r = fixture_service().availability("default", true);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_NEAR(r.body["peak_hour"].get<double>(), 17.2, 0.05);
  EXPECT_NEAR(r.body["peak_season"].get<double>(), 15.2, 0.05);
  EXPECT_NEAR(r.body["import_gw"].get<double>(), 5.8, 0.05);
  EXPECT_TRUE(fixture_service().availability("published", false).body["import_gw"].is_null());
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<HttpServer>(fixture_service());
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/api/network"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  json post(const std::string& path, const std::string& body, int expected_status = 200) {
    auto res = client_->Post(path.c_str(), body, "application/json");
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  std::unique_ptr<HttpServer> server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpFixture, EndpointsRespond) {
  auto res = client_->Get("/api/network");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(json::parse(res->body), fixture_service().network().body);

  const json post_body = post("/api/posteriors", R"({"evidence": {"Bulk": "ge13", "Balance": "ge5"}})");
  EXPECT_NEAR(post_body["scenario"]["probabilities"][0].get<double>(), 0.532, 1e-6);

  auto avail = client_->Get("/api/report/availability?profile=default");
  ASSERT_TRUE(avail);
  EXPECT_NEAR(json::parse(avail->body)["peak_hour"].get<double>(), 17.2, 0.05);

  auto missing = client_->Get("/api/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["code"], "not_found");

  const json bad = post("/api/posteriors", R"({"evidence": {"Bogus": "x"}})", 400);
  EXPECT_EQ(bad["code"], "validation_error");
}

TEST_F(HttpFixture, OptimizeInlineCostsMatchReference) {
  json costs = read_json_file(kFixtures / "costs.json");
  const json inline_plan = post("/api/optimize", json{{"target", "GridManagement=B1"},
                                                      {"weights", {{"w1", 1}, {"w2", 1}, {"w3", 1}}},
                                                      {"costs", costs}}
                                                     .dump());
  const json ref_plan =
      post("/api/optimize", R"({"target": {"node": "GridManagement", "state": "B1"},
                                "costs_ref": "default"})");
  EXPECT_EQ(inline_plan, ref_plan);
  EXPECT_EQ(inline_plan["steps"].size(), 12u);
}

TEST_F(HttpFixture, StatelessUnderInterleavedRequests) {
  const std::string a = R"({"evidence": {"Bulk": "ge13"}})";
  const std::string b = R"({"evidence": {"Balance": "lt5", "DSR": "ge4.7"}})";
  const json first_a = post("/api/posteriors", a);
  const json first_b = post("/api/posteriors", b);
  std::vector<std::thread> workers;
  std::vector<json> results(16);
  for (std::size_t i = 0; i < results.size(); ++i) {
    workers.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      auto res = c.Post("/api/posteriors", i % 2 ? b : a, "application/json");
      if (res) results[i] = json::parse(res->body);
    });
  }
  for (auto& w : workers) w.join();
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i], i % 2 ? first_b : first_a);
  }
  EXPECT_EQ(post("/api/posteriors", a), first_a);
}

// CLI, run as a subprocess.

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(GRIDBN_CLI) + " " + args + " 2>/dev/null";
  CliRun run;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return run;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) run.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return run;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, CompileIsDeterministic) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "gridbn_cli_a.json", b = dir / "gridbn_cli_b.json";
  const std::string common = "compile --survey " + (kFixtures / "survey.json").string() +
                             " --layout " + (kFixtures / "layout.json").string();
  const CliRun first = run_cli(common + " --out " + a.string());
  EXPECT_EQ(first.status, 0);
  EXPECT_NE(first.out.find("validation: ok"), std::string::npos);
  EXPECT_EQ(run_cli(common + " --out " + b.string()).status, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_TRUE(validate(load_network(a)).ok());
}

TEST(Cli, CompileReportsMissingQuestionSet) {
  json survey = read_json_file(kFixtures / "survey.json");
  survey["experts"][3].erase("qs4");
  const auto path = std::filesystem::temp_directory_path() / "gridbn_cli_no_qs4.json";
  std::ofstream(path) << survey.dump();
  const std::string cmd = std::string(GRIDBN_CLI) + " compile --survey " + path.string() +
                          " --layout " + (kFixtures / "layout.json").string() +
                          " --out /dev/null 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  std::string out;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(raw), 1);
  EXPECT_NE(out.find("qs4"), std::string::npos) << out;
}

TEST(Cli, InferWithEvidence) {
  const std::string net = fixture_network_file().string();
  const CliRun run = run_cli("infer -n " + net + " --set Bulk=ge13 --set Balance=ge5 --json");
  ASSERT_EQ(run.status, 0);
  const json doc = json::parse(run.out);
  EXPECT_NEAR(doc["scenario"]["probabilities"][0].get<double>(), 0.532, 1e-6);
  EXPECT_EQ(doc, fixture_service().posteriors(
                     R"({"evidence": {"Bulk": "ge13", "Balance": "ge5"}})").body);
  EXPECT_EQ(run_cli("infer -n " + net).status, 0);
  EXPECT_EQ(run_cli("infer -n " + net + " --set Bogus=x").status, 2);
  EXPECT_EQ(run_cli("infer -n " + net + " --set Bulk").status, 2);
  EXPECT_EQ(run_cli("infer -n " + net + " --frobnicate").status, 2);
}

TEST(Cli, ImpossibleEvidenceIsADomainError) {
  Node a;
  a.id = "A";
  a.states = {"F", "T"};
  a.distribution = ExplicitCpt{{{1.0, 0.0}}};
  const auto path = std::filesystem::temp_directory_path() / "gridbn_cli_impossible.json";
  save_network(Network({a}), path);
  EXPECT_EQ(run_cli("infer -n " + path.string() + " --set A=T").status, 1);
}

TEST(Cli, OptimizeMatchesHttp) {
  const std::string net = fixture_network_file().string();
  const std::string costs = (kFixtures / "costs.json").string();
  const CliRun run = run_cli("optimize -n " + net + " --costs " + costs +
                          " --target GridManagement=B1 --json");
  ASSERT_EQ(run.status, 0);
  const json cli = json::parse(run.out);
  const auto http = fixture_service().optimize(
      R"({"target": "GridManagement=B1", "costs_ref": "default"})");
  EXPECT_EQ(cli, http.body);
  EXPECT_EQ(run_cli("optimize -n " + net + " --costs " + costs + " --w1 0").status, 2);
  EXPECT_EQ(run_cli("optimize -n " + net + " --costs " + costs + " --target GridManagement=B7")
                .status,
            2);
  const CliRun text = run_cli("optimize -n " + net + " --costs " + costs);
  EXPECT_EQ(text.status, 0);
  EXPECT_NE(text.out.find("Starting point"), std::string::npos);
}

TEST(Cli, ReportIncludesBucketsAndAvailability) {
  const std::string net = fixture_network_file().string();
  const CliRun run = run_cli("report -n " + net + " --rules " + (kFixtures / "rules.json").string() +
                          " --availability " + (kFixtures / "availability.json").string() +
                          " --include-import --json");
  ASSERT_EQ(run.status, 0);
  const json doc = json::parse(run.out);
  EXPECT_NEAR(doc["availability"]["peak_hour"].get<double>(), 17.2, 0.05);
  EXPECT_NEAR(doc["availability"]["peak_hour_with_import"].get<double>(), 23.0, 0.05);
  EXPECT_TRUE(doc["buckets"].contains("bulk"));
}

}  // namespace
}  // namespace gridbn
