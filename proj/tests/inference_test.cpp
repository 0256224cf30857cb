#include <gtest/gtest.h>

#include <random>

#include "gridbn/inference.hpp"
#include "gridbn/noisy_or.hpp"
#include "test_networks.hpp"

namespace gridbn {
namespace {

using testing::binary_root;
using testing::explicit_node;
using testing::grid_network;
using testing::noisy_node;

TEST(Posterior, GridRowEchoedUnderFullEvidence) {
  const auto net = grid_network(0.5, 0.5);
  Evidence ev{{{"Bulk", "ge13"}, {"Balance", "ge5"}}};
  const auto post = posterior(net, ev, {"GridManagement"}).at("GridManagement");
  const std::vector<double> expected{0.532, 0.119, 0.267, 0.082};
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(post[s], expected[s], 1e-12);
}

TEST(Posterior, GridMarginalUnderUniformParents) {
  const auto post = posterior(grid_network(0.5, 0.5), {}, {"GridManagement"}).at("GridManagement");
  const std::vector<double> expected{0.330, 0.189, 0.315, 0.167};
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(post[s], expected[s], 0.0005);
}

TEST(Posterior, GridMarginalUnderElicitedParentMarginals) {
  const auto post =
      posterior(grid_network(0.748, 0.699), {}, {"GridManagement"}).at("GridManagement");
  const std::vector<double> expected{0.409, 0.170, 0.300, 0.121};
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(post[s], expected[s], 0.0015);
}

TEST(JointProbability, EmptyEvidenceIsOne) {
  EXPECT_EQ(joint_probability(grid_network(0.3, 0.6), {}), 1.0);
}

TEST(JointProbability, RootMarginal) {
  Network net({binary_root("A", 0.7, {"s1", "s2"})});
  EXPECT_NEAR(joint_probability(net, Evidence{{{"A", "s2"}}}), 0.7, 1e-15);
}

TEST(JointProbability, ChainProduct) {
  Network net({binary_root("A", 0.4), explicit_node("B", {"A"}, {{0.8, 0.2}, {0.1, 0.9}})});
  EXPECT_NEAR(joint_probability(net, Evidence{{{"A", "T"}, {"B", "T"}}}), 0.36, 1e-15);
}

TEST(JointProbability, ImpossibleEvidenceIsZero) {
  Network net({binary_root("A", 1.0), explicit_node("B", {"A"}, {{1.0, 0.0}, {1.0, 0.0}})});
  EXPECT_EQ(joint_probability(net, Evidence{{{"B", "T"}}}), 0.0);
}

TEST(Posterior, ImpossibleEvidenceNamesTheEvidence) {
  Network net({binary_root("A", 1.0), explicit_node("B", {"A"}, {{1.0, 0.0}, {1.0, 0.0}})});
  for (auto engine : {0, 1}) {
    try {
      if (engine == 0) {
        posterior(net, Evidence{{{"B", "T"}}}, {"A"});
      } else {
        enumerate_joint(net, Evidence{{{"B", "T"}}}, {"A"});
      }
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kImpossibleEvidence);
      EXPECT_NE(std::string(e.what()).find("B=T"), std::string::npos);
    }
  }
}

TEST(Posterior, InvalidEvidenceIsAValidationError) {
  const auto net = grid_network(0.5, 0.5);
  for (const Evidence& ev : {Evidence{{{"Bogus", "x"}}}, Evidence{{{"Bulk", "huge"}}}}) {
    try {
      posterior(net, ev, {"GridManagement"});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kValidation);
    }
  }
}

TEST(Posterior, RejectsEvidenceOnAuxiliaryNodes) {
  Node y = noisy_node("Y", {"A", "B", "C"}, {0.2, 0.3, 0.4}, 0.1);
  auto [net, plan] = divorce(Network({binary_root("A", 0.5), binary_root("B", 0.5),
                                      binary_root("C", 0.5), y}),
                             2);
  EXPECT_THROW(posterior(net, Evidence{{{"Y__ici_1", "true"}}}, {"Y"}), Error);
}

TEST(Posterior, EvidenceNodeIsPointMass) {
  const auto net = grid_network(0.5, 0.5);
  const auto post = posterior(net, Evidence{{{"Bulk", "ge13"}}}, {"Bulk"}).at("Bulk");
  EXPECT_EQ(post, (std::vector<double>{0.0, 1.0}));
}

TEST(Posterior, ZeroStrengthChildIsLeakOnly) {
  Node y = noisy_node("Y", {"A", "B"}, {0.0, 0.0}, 0.27);
  Network net({binary_root("A", 0.3), binary_root("B", 0.8), y});
  for (const Evidence& ev : {Evidence{}, Evidence{{{"A", "T"}}}, Evidence{{{"A", "F"}, {"B", "T"}}}}) {
    const auto post = posterior(net, ev, {"Y"}).at("Y");
    EXPECT_NEAR(post[0], 0.73, 1e-12);
    EXPECT_NEAR(post[1], 0.27, 1e-12);
  }
}

TEST(EnumerateJoint, RefusesHugeStateSpaces) {
  std::vector<Node> nodes;
  for (int i = 0; i < 25; ++i) nodes.push_back(binary_root("R" + std::to_string(i), 0.5));
  try {
    enumerate_joint(Network(nodes), {}, {"R0"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRefused);
  }
}

Evidence random_evidence(std::mt19937_64& rng, const Network& net) {
  Evidence ev;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& node : net.nodes()) {
    if (unit(rng) < 0.25) ev.assignments[node.id] = node.states[unit(rng) < 0.5 ? 0 : 1];
  }
  return ev;
}

TEST(PosteriorProperty, MatchesEnumerationOnSmallNetworks) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    Network net = testing::random_network(rng, 3 + trial % 8);
    Evidence ev = random_evidence(rng, net);
    std::vector<std::string> query;
    for (const auto& node : net.nodes()) query.push_back(node.id);
    const auto fast = posterior(net, ev, query);
    const auto slow = enumerate_joint(net, ev, query);
    EXPECT_NEAR(fast.log_evidence, slow.log_evidence, 1e-9);
    for (const auto& id : query) {
      for (std::size_t s = 0; s < 2; ++s) {
        EXPECT_NEAR(fast.at(id)[s], slow.at(id)[s], 1e-9) << "node " << id;
      }
    }
  }
}

TEST(PosteriorProperty, JointProbabilityIsMonotoneInEvidence) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    Network net = testing::random_network(rng, 8);
    InferenceEngine engine(net);
    Evidence e1 = random_evidence(rng, net), e2 = random_evidence(rng, net);
    Evidence both = e1;
    bool conflict = false;
    for (const auto& [k, v] : e2.assignments) {
      auto it = both.assignments.find(k);
      if (it != both.assignments.end() && it->second != v) conflict = true;
      both.assignments[k] = v;
    }
    if (conflict) continue;
    EXPECT_LE(engine.joint_probability(both),
              std::min(engine.joint_probability(e1), engine.joint_probability(e2)) + 1e-12);
  }
}

TEST(PosteriorProperty, DivorceLeavesOtherPosteriorsUnchanged) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Node> nodes;
    std::vector<std::string> causes;
    for (int i = 0; i < 5; ++i) {
      causes.push_back("C" + std::to_string(i));
      nodes.push_back(binary_root(causes.back(), unit(rng)));
    }
    nodes.push_back(noisy_node("Y", causes, {unit(rng), unit(rng), unit(rng), unit(rng), unit(rng)},
                               0.2 * unit(rng)));
    nodes.push_back(explicit_node("Z", {"Y"}, {{0.9, 0.1}, {0.3, 0.7}}));
    Network net(nodes);
    auto [divorced, plan] = divorce(net, 2 + trial % 3);
    Evidence ev{{{"Z", "T"}, {"C1", trial % 2 ? "T" : "F"}}};
    std::vector<std::string> query{"C0", "C2", "C3", "C4", "Y", "Z"};
    const auto a = posterior(net, ev, query);
    const auto b = posterior(divorced, ev, query);
    const auto c = enumerate_joint(divorced, ev, query);
    for (const auto& id : query) {
      EXPECT_NEAR(a.at(id)[1], b.at(id)[1], 1e-9);
      EXPECT_NEAR(b.at(id)[1], c.at(id)[1], 1e-9);
    }
  }
}

TEST(InferenceEngine, RejectsInvalidNetworks) {
  Network net({explicit_node("B", {"X"}, {{0.5, 0.5}, {0.5, 0.5}})});
  EXPECT_THROW(InferenceEngine{net}, Error);
}

TEST(InferenceEngine, SmallProbabilitiesDoNotUnderflow) {
  // 400 independent roots each observed in a 1e-3 state: P(e) = 1e-1200.
  std::vector<Node> nodes;
  Evidence ev;
  for (int i = 0; i < 400; ++i) {
    nodes.push_back(binary_root("R" + std::to_string(i), 1e-3));
    ev.assignments["R" + std::to_string(i)] = "T";
  }
  nodes.push_back(explicit_node("Q", {"R0"}, {{0.5, 0.5}, {0.25, 0.75}}));
  const auto post = posterior(Network(nodes), ev, {"Q"});
  EXPECT_NEAR(post.log_evidence, 400 * std::log(1e-3), 1e-6);
  EXPECT_NEAR(post.at("Q")[1], 0.75, 1e-12);
}

}  // namespace
}  // namespace gridbn
