#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridbn/error.hpp"

namespace gridbn {

/// Normalization tolerance applied to every probability vector.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Hierarchy level of a node: external factors (L1), capacity mix
/// components (L2), bulk/balancing totals (L3) and grid scenarios (L4).
enum class Layer { kL1, kL2, kL3, kL4 };

std::string_view to_string(Layer layer);
Layer parse_layer(std::string_view text);

/// Explicit conditional probability table. Rows enumerate parent state
/// combinations in row-major order with the first parent varying slowest.
struct ExplicitCpt {
  std::vector<std::vector<double>> rows;
};

/// Noisy-OR parameterization of a binary child.
///
/// P(child = true_state | parents) = 1 - (1 - leak) * prod_i (1 - thetas[i])
/// over the parents sitting in their triggering state.
struct NoisyOrParams {
  std::vector<double> thetas;            // one per parent, declared order
  double leak = 0.0;
  std::size_t true_state = 1;            // child state index meaning "effect"
  std::vector<std::size_t> triggering;   // per parent: "cause present" index

  /// Free parameters an expert has to supply: one strength per parent plus
  /// the leak.
  std::size_t free_parameter_count() const { return thetas.size() + 1; }
};

/// Maps a binary node's posterior to a physical capacity in GW.
struct ValueMap {
  double threshold = 0.0;
  double low_submean = 0.0;
  double high_submean = 0.0;

  bool degenerate() const {
    return low_submean == threshold && high_submean == threshold;
  }
};

using Distribution = std::variant<ExplicitCpt, NoisyOrParams>;

struct Node {
  std::string id;
  Layer layer = Layer::kL1;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  Distribution distribution;
  std::optional<ValueMap> value_map;
  bool auxiliary = false;  // introduced by divorcing, hidden from users

  bool is_noisy_or() const {
    return std::holds_alternative<NoisyOrParams>(distribution);
  }
  const NoisyOrParams& noisy_or() const {
    return std::get<NoisyOrParams>(distribution);
  }
  const ExplicitCpt* explicit_cpt() const {
    return std::get_if<ExplicitCpt>(&distribution);
  }

  /// Index of `label` in states, if present.
  std::optional<std::size_t> state_index(std::string_view label) const;
};

/// Auxiliary aggregator inserted when a Noisy-OR child has too many parents.
struct IntroducedNode {
  std::string id;
  std::string child;
  std::vector<std::string> grouped_parents;
};

struct DivorcePlan {
  std::size_t max_parents_per_child = 0;
  std::vector<IntroducedNode> introduced_nodes;
};

/// Directed acyclic graph of discrete nodes. Immutable after construction;
/// construction never throws for structural defects so that `validate` can
/// report them.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Node> nodes,
                   std::map<std::string, std::string> metadata = {},
                   std::optional<DivorcePlan> divorce_plan = std::nullopt);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::map<std::string, std::string>& metadata() const {
    return metadata_;
  }
  const std::optional<DivorcePlan>& divorce_plan() const {
    return divorce_plan_;
  }

  bool contains(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Throws Error(kNotFound) for unknown ids.
  const Node& node(std::string_view id) const;

 private:
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, std::string> metadata_;
  std::optional<DivorcePlan> divorce_plan_;
};

struct Violation {
  std::string node_id;
  std::string reason;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks every structural and numerical invariant. Never throws.
ValidationReport validate(const Network& network);

/// Parents-before-children order; ties broken by lexicographic id.
/// Throws Error(kCycle) naming a node on a cycle.
std::vector<std::string> topological_order(const Network& network);

/// P(low) * low_submean + P(high) * high_submean.
double state_value(const Node& node, std::span<const double> posterior);
double state_value(const ValueMap& map, std::span<const double> posterior);

/// Number of rows an explicit CPT for `node` must have.
std::size_t parent_configurations(const Network& network, const Node& node);

}  // namespace gridbn
