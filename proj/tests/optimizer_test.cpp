#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridbn/optimizer.hpp"
#include "oracles.hpp"
#include "test_networks.hpp"

namespace gridbn {
namespace {

using testing::binary_root;
using testing::explicit_node;
using testing::oracle_plan;

CostTable random_costs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> cost(500.0, 9000.0);
  CostTable costs;
  for (std::size_t c = 0; c < n; ++c) costs["C" + std::to_string(c)] = cost(rng);
  return costs;
}

std::vector<std::string> candidate_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < n; ++c) ids.push_back("C" + std::to_string(c));
  return ids;
}

TEST(Score, DirectArithmetic) {
  const Weights unit;
  EXPECT_NEAR(score(0.02, 0.3, 1.0, unit), 0.006, 1e-15);
  EXPECT_NEAR(score(0.01, 0.9, 1.0, unit), 0.009, 1e-15);
  EXPECT_DOUBLE_EQ(score(0.02, 0.5, 800.0, unit), 0.02 * 0.5 / 800.0);
  EXPECT_DOUBLE_EQ(score(0.02, 0.5, 800.0, {2.0, 3.0, 0.5}), 2.0 * 0.02 * 3.0 * 0.5 * 0.5 / 800.0);
}

TEST(Optimize, HigherScorePickedFirst) {
  // A: impact 0.02 at joint 0.3; B: impact 0.01 at joint 0.9.
  Node a = binary_root("A", 0.3, {"low", "high"});
  Node b = binary_root("B", 0.9, {"low", "high"});
  a.value_map = b.value_map = ValueMap{1.0, 0.0, 2.0};
  // T = t1 with probability 0.5 + 0.02/0.7... built so the deltas are exact.
  const double pa = 0.3, pb = 0.9;
  const double base = 0.5;
  const double ha = base + 0.02, hb = base + 0.01;
  const double la = base - 0.02 * pa / (1 - pa), lb = base - 0.01 * pb / (1 - pb);
  // Additive effects on an independent-cause table keep each marginal delta.
  auto row = [&](double p) { return std::vector<double>{1.0 - p, p}; };
  Node t = explicit_node("T", {"A", "B"},
                         {row(la + lb - base), row(la + hb - base), row(ha + lb - base),
                          row(ha + hb - base)},
                         {"t0", "t1"});
  const InferenceEngine engine(Network({a, b, t}));
  const Target target{"T", "t1"};
  const auto ia = impact(engine, {}, "A", "high", target);
  const auto ib = impact(engine, {}, "B", "high", target);
  EXPECT_NEAR(ia.impact, 0.02, 1e-12);
  EXPECT_NEAR(ia.joint, 0.3, 1e-12);
  EXPECT_NEAR(ib.impact, 0.01, 1e-12);
  EXPECT_NEAR(ib.joint, 0.9, 1e-12);
  const auto plan = optimize(engine, target, {{"A", 1.0}, {"B", 1.0}}, {});
  ASSERT_EQ(plan.steps.size(), 2u);
  EXPECT_EQ(plan.steps[0].component, "B");
  EXPECT_EQ(plan.steps[0].state, "high");
  EXPECT_NEAR(plan.steps[0].score, 0.009, 1e-12);
}

TEST(Impact, IndependentCandidateHasNoEffect) {
  Node a = binary_root("A", 0.4), c = binary_root("C", 0.7);
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, c, t}));
  for (const char* s : {"F", "T"}) {
    EXPECT_NEAR(impact(engine, {}, "C", s, {"T", "T"}).impact, 0.0, 1e-9);
  }
}

TEST(Impact, ParentAtItsBestRowRaisesTarget) {
  Node a = binary_root("A", 0.4);
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, t}));
  const auto r = impact(engine, {}, "A", "T", {"T", "T"});
  // Prior 0.6*0.1 + 0.4*0.8 = 0.38; with A=T, 0.8.
  EXPECT_NEAR(r.impact, 0.8 - 0.38, 1e-12);
  EXPECT_GT(r.impact, 0.0);
  EXPECT_NEAR(r.joint, 0.4, 1e-12);
}

TEST(Impact, ImpossibleCandidateIsDisqualified) {
  Node a = binary_root("A", 1.0);
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, t}));
  const auto r = impact(engine, {}, "A", "F", {"T", "T"});
  EXPECT_TRUE(r.disqualified);
  EXPECT_EQ(r.joint, 0.0);
  EXPECT_EQ(r.impact, 0.0);
  EXPECT_THROW(impact(engine, Evidence{{{"A", "T"}}}, "A", "F", {"T", "T"}), Error);
}

TEST(Optimize, SingleCandidate) {
  Node a = binary_root("A", 0.4, {"low", "high"});
  a.value_map = ValueMap{5.0, 2.5, 7.5};
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, t}));
  const auto plan = optimize(engine, {"T", "T"}, {{"A", 100.0}}, {});
  ASSERT_EQ(plan.steps.size(), 1u);
  EXPECT_EQ(plan.steps[0].state, "high");
  EXPECT_NEAR(plan.steps[0].cumulative, 0.8, 1e-12);
  EXPECT_NEAR(plan.initial_probability, 0.38, 1e-12);
  EXPECT_NEAR(plan.steps[0].prior_gw, 0.6 * 2.5 + 0.4 * 7.5, 1e-12);
  EXPECT_NEAR(plan.steps[0].proposed_gw, 7.5, 1e-12);
  EXPECT_DOUBLE_EQ(plan.final_probability, plan.steps[0].cumulative);
}

TEST(Optimize, RejectsBadRequests) {
  Node a = binary_root("A", 0.4, {"low", "high"});
  a.value_map = ValueMap{5.0, 2.5, 7.5};
  Node b = binary_root("B", 0.4, {"low", "high"});
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, b, t}));
  auto code_of = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return std::optional<ErrorCode>(e.code());
    }
    return std::optional<ErrorCode>();
  };
  EXPECT_EQ(code_of([&] { optimize(engine, {"T", "T"}, {}, {}); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { optimize(engine, {"T", "T"}, {{"A", 1.0}}, {0.0, 1.0, 1.0}); }),
            ErrorCode::kParameter);
  EXPECT_EQ(code_of([&] { optimize(engine, {"T", "maybe"}, {{"A", 1.0}}, {}); }),
            ErrorCode::kValidation);
  EXPECT_EQ(code_of([&] { optimize(engine, {"Nope", "T"}, {{"A", 1.0}}, {}); }),
            ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { optimize(engine, {"T", "T"}, {{"A", 1.0}, {"B", 1.0}}, {}, {"B"}); }),
            ErrorCode::kValidation);
  try {
    optimize(engine, {"T", "T"}, {{"B", 1.0}}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("A"), std::string::npos);
  }
  EXPECT_THROW(parse_target("GridManagement"), Error);
  EXPECT_EQ(parse_target("GridManagement=B1").state, "B1");
}

TEST(OptimizeProperty, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const Network net = testing::random_optimizer_network(rng, n);
    const CostTable costs = random_costs(rng, n);
    const Target target{"T", "t" + std::to_string(trial % 3)};
    const InferenceEngine engine(net);
    const auto plan = optimize(engine, target, costs, {});
    const auto oracle = oracle_plan(net, target, costs, {}, candidate_ids(n));
    ASSERT_EQ(plan.steps.size(), oracle.size()) << "trial " << trial;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      EXPECT_EQ(plan.steps[k].component, oracle[k].component) << "trial " << trial;
      EXPECT_EQ(plan.steps[k].state, oracle[k].state) << "trial " << trial;
      EXPECT_NEAR(plan.steps[k].cumulative, oracle[k].cumulative, 1e-9);
      EXPECT_NEAR(plan.steps[k].joint, oracle[k].joint, 1e-9);
      EXPECT_GT(plan.steps[k].joint, 0.0);
    }
  }
}

TEST(OptimizeProperty, CumulativeMatchesIndependentRecomputation) {
  std::mt19937_64 rng(405);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = testing::random_optimizer_network(rng, 5);
    const InferenceEngine engine(net);
    const Target target{"T", "t1"};
    const auto plan = optimize(engine, target, random_costs(rng, 5), {});
    for (std::size_t k = 1; k <= plan.steps.size(); ++k) {
      const auto post = enumerate_joint(net, plan.evidence(k), {"T"});
      EXPECT_NEAR(plan.steps[k - 1].cumulative, post.at("T")[1], 1e-9);
      EXPECT_NEAR(plan.steps[k - 1].joint, post.evidence_probability(), 1e-9);
    }
  }
}

TEST(OptimizeProperty, CostScalingKeepsTheOrder) {
  std::mt19937_64 rng(406);
  for (int trial = 0; trial < 80; ++trial) {
    const Network net = testing::random_optimizer_network(rng, 5);
    const InferenceEngine engine(net);
    const CostTable costs = random_costs(rng, 5);
    const double k = std::pow(10.0, std::uniform_real_distribution<double>(-6.0, 6.0)(rng));
    CostTable scaled = costs;
    for (auto& [c, v] : scaled) v *= k;
    const auto a = optimize(engine, {"T", "t0"}, costs, {});
    const auto b = optimize(engine, {"T", "t0"}, scaled, {});
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      EXPECT_EQ(a.steps[i].component, b.steps[i].component);
      EXPECT_EQ(a.steps[i].state, b.steps[i].state);
      EXPECT_NEAR(b.steps[i].score, a.steps[i].score / k, 1e-9 * std::abs(a.steps[i].score / k));
    }
  }
}

TEST(OptimizeProperty, UnitWeightsGiveImpactTimesJointOverCost) {
  std::mt19937_64 rng(407);
  const Network net = testing::random_optimizer_network(rng, 4);
  const InferenceEngine engine(net);
  const auto plan = optimize(engine, {"T", "t2"}, random_costs(rng, 4), {1.0, 1.0, 1.0});
  for (const auto& s : plan.steps) EXPECT_EQ(s.score, s.impact * s.joint / s.cost);
}

TEST(PlanReport, ReplaysCapacityValues) {
  std::mt19937_64 rng(408);
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = testing::random_optimizer_network(rng, 4);
    const InferenceEngine engine(net);
    const auto plan = optimize(engine, {"T", "t0"}, random_costs(rng, 4), {});
    const auto rows = plan_report(engine, plan);
    ASSERT_EQ(rows.size(), plan.steps.size() + 1);
    EXPECT_TRUE(rows[0].component.empty());
    EXPECT_EQ(rows[0].joint, 1.0);
    EXPECT_DOUBLE_EQ(rows[0].cumulative, plan.initial_probability);
    for (std::size_t k = 0; k < plan.steps.size(); ++k) {
      const auto& row = rows[k + 1];
      const auto post = enumerate_joint(net, plan.evidence(k), {row.component});
      const Node& node = net.node(row.component);
      EXPECT_NEAR(*row.prior_gw, state_value(node, post.at(row.component)), 1e-9);
      EXPECT_NEAR(*row.prior_gw, plan.steps[k].prior_gw, 1e-9);
      const double expected = *row.state == "high" ? node.value_map->high_submean
                                                   : node.value_map->low_submean;
      EXPECT_DOUBLE_EQ(*row.proposed_gw, expected);
      EXPECT_DOUBLE_EQ(*row.delta_gw, *row.proposed_gw - *row.prior_gw);
    }
  }
}

TEST(PlanReport, EmptyPlanHasOnlyTheStartingRow) {
  Node a = binary_root("A", 0.4);
  Node t = explicit_node("T", {"A"}, {{0.9, 0.1}, {0.2, 0.8}});
  const InferenceEngine engine(Network({a, t}));
  const auto plan = optimize(engine, {"T", "T"}, {}, {});
  EXPECT_TRUE(plan.steps.empty());
  const auto rows = plan_report(engine, plan);
  ASSERT_EQ(rows.size(), 1u);
  const std::string text = render_plan(plan, rows);
  EXPECT_NE(text.find("Starting point"), std::string::npos);
  EXPECT_NE(text.find("38.0 %"), std::string::npos);
  const auto doc = plan_to_json(plan, rows);
  EXPECT_EQ(doc["steps"].size(), 0u);
  EXPECT_EQ(doc["rows"].size(), 1u);
}

TEST(Costs, ParseAndValidate) {
  const auto costs = costs_from_json(nlohmann::json{{"DSR", 800}, {"Gas", 867.5}});
  EXPECT_EQ(costs.at("Gas"), 867.5);
  EXPECT_THROW(costs_from_json(nlohmann::json{{"DSR", 0}}), Error);
  EXPECT_THROW(costs_from_json(nlohmann::json{{"DSR", "cheap"}}), Error);
  EXPECT_THROW(costs_from_json(nlohmann::json::array()), Error);
}

}  // namespace
}  // namespace gridbn
