#include "gridbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace gridbn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kParameter: return "parameter_error";
    case ErrorCode::kUnsupportedStructure: return "unsupported_structure";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kImpossibleEvidence: return "impossible_evidence";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kRefused: return "refused";
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "error";
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::kL1: return "L1";
    case Layer::kL2: return "L2";
    case Layer::kL3: return "L3";
    case Layer::kL4: return "L4";
  }
  return "L1";
}

Layer parse_layer(std::string_view text) {
  if (text == "L1") return Layer::kL1;
  if (text == "L2") return Layer::kL2;
  if (text == "L3") return Layer::kL3;
  if (text == "L4") return Layer::kL4;
  throw Error(ErrorCode::kSchema,
              "unknown layer '" + std::string(text) + "' (expected L1..L4)");
}

std::optional<std::size_t> Node::state_index(std::string_view label) const {
  auto it = std::find(states.begin(), states.end(), label);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

Network::Network(std::vector<Node> nodes,
                 std::map<std::string, std::string> metadata,
                 std::optional<DivorcePlan> divorce_plan)
    : nodes_(std::move(nodes)),
      metadata_(std::move(metadata)),
      divorce_plan_(std::move(divorce_plan)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    index_.emplace(nodes_[i].id, i);  // duplicates keep the first; validate
                                      // reports them
  }
}

bool Network::contains(std::string_view id) const {
  return index_.find(id) != index_.end();
}

std::optional<std::size_t> Network::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Node& Network::node(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown node '" + std::string(id) + "'");
  }
  return nodes_[it->second];
}

std::string ValidationReport::summary() const {
  if (ok()) return "network valid";
  std::ostringstream out;
  out << violations.size() << " violation(s):";
  for (const auto& v : violations) out << "\n  " << v.node_id << ": " << v.reason;
  return out.str();
}

namespace {

bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

void check_cpt(const Network& network, const Node& node, const ExplicitCpt& cpt,
               std::vector<Violation>& out) {
  const std::size_t expected = parent_configurations(network, node);
  if (cpt.rows.size() != expected) {
    out.push_back({node.id, "cpt has " + std::to_string(cpt.rows.size()) +
                                " rows, expected " + std::to_string(expected)});
  }
  for (std::size_t r = 0; r < cpt.rows.size(); ++r) {
    const auto& row = cpt.rows[r];
    if (row.size() != node.states.size()) {
      out.push_back({node.id, "row " + std::to_string(r) + " has " +
                                  std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(node.states.size())});
      continue;
    }
    double sum = 0.0;
    bool range_ok = true;
    for (double p : row) {
      if (!in_unit_interval(p)) range_ok = false;
      sum += p;
    }
    if (!range_ok) {
      out.push_back({node.id, "row " + std::to_string(r) + " entry outside [0, 1]"});
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg << "row " << r << " not normalized (sum " << sum << ")";
      out.push_back({node.id, msg.str()});
    }
  }
}

void check_noisy_or(const Network& network, const Node& node,
                    const NoisyOrParams& params, std::vector<Violation>& out) {
  if (node.states.size() != 2) {
    out.push_back({node.id, "noisy-or child must be binary"});
  }
  if (params.true_state >= node.states.size()) {
    out.push_back({node.id, "noisy-or true_state out of range"});
  }
  if (params.thetas.size() != node.parents.size()) {
    out.push_back({node.id, "noisy-or has " + std::to_string(params.thetas.size()) +
                                " thetas for " + std::to_string(node.parents.size()) +
                                " parents"});
  }
  if (params.triggering.size() != node.parents.size()) {
    out.push_back({node.id, "noisy-or triggering states do not match parents"});
  }
  for (double theta : params.thetas) {
    if (!in_unit_interval(theta)) {
      out.push_back({node.id, "noisy-or theta outside [0, 1]"});
      break;
    }
  }
  if (!in_unit_interval(params.leak)) {
    out.push_back({node.id, "noisy-or leak outside [0, 1]"});
  }
  for (std::size_t i = 0; i < node.parents.size(); ++i) {
    auto idx = network.index_of(node.parents[i]);
    if (!idx) continue;
    const Node& parent = network.nodes()[*idx];
    if (parent.states.size() != 2) {
      out.push_back({node.id, "noisy-or parent " + parent.id + " is not binary"});
    }
    if (i < params.triggering.size() &&
        params.triggering[i] >= parent.states.size()) {
      out.push_back({node.id, "triggering state out of range for parent " + parent.id});
    }
  }
}

void check_value_map(const Node& node, std::vector<Violation>& out) {
  if (!node.value_map) return;
  const ValueMap& vm = *node.value_map;
  if (node.states.size() != 2) {
    out.push_back({node.id, "value map requires a binary node"});
  }
  if (vm.degenerate()) return;
  if (!(vm.low_submean < vm.threshold && vm.threshold <= vm.high_submean)) {
    out.push_back({node.id, "value map requires low_submean < threshold <= high_submean"});
  }
}

// Returns the id of a node on a directed cycle, if any.
std::optional<std::string> find_cycle(const Network& network) {
  const auto& nodes = network.nodes();
  enum class Mark { kNone, kActive, kDone };
  std::vector<Mark> mark(nodes.size(), Mark::kNone);
  std::optional<std::string> found;

  // Iterative DFS along parent edges.
  for (std::size_t start = 0; start < nodes.size() && !found; ++start) {
    if (mark[start] != Mark::kNone) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    mark[start] = Mark::kActive;
    while (!stack.empty() && !found) {
      auto& [current, next_parent] = stack.back();
      const auto& parents = nodes[current].parents;
      if (next_parent == parents.size()) {
        mark[current] = Mark::kDone;
        stack.pop_back();
        continue;
      }
      auto idx = network.index_of(parents[next_parent++]);
      if (!idx) continue;
      if (mark[*idx] == Mark::kActive) {
        found = nodes[*idx].id;
      } else if (mark[*idx] == Mark::kNone) {
        mark[*idx] = Mark::kActive;
        stack.emplace_back(*idx, 0);
      }
    }
  }
  return found;
}

}  // namespace

std::size_t parent_configurations(const Network& network, const Node& node) {
  std::size_t rows = 1;
  for (const auto& parent : node.parents) {
    auto idx = network.index_of(parent);
    if (idx) rows *= network.nodes()[*idx].states.size();
  }
  return rows;
}

ValidationReport validate(const Network& network) {
  ValidationReport report;
  auto& out = report.violations;
  std::set<std::string> seen;

  for (const Node& node : network.nodes()) {
    if (node.id.empty()) out.push_back({node.id, "empty node id"});
    if (!seen.insert(node.id).second) out.push_back({node.id, "duplicate node id"});
    if (node.states.size() < 2) {
      out.push_back({node.id, "node needs at least 2 states"});
    }
    std::set<std::string> labels(node.states.begin(), node.states.end());
    if (labels.size() != node.states.size()) {
      out.push_back({node.id, "duplicate state label"});
    }

    bool parents_ok = true;
    std::set<std::string> parent_set;
    for (const auto& parent : node.parents) {
      if (!network.contains(parent)) {
        out.push_back({node.id, "missing parent " + parent});
        parents_ok = false;
      }
      if (parent == node.id) out.push_back({node.id, "node is its own parent"});
      if (!parent_set.insert(parent).second) {
        out.push_back({node.id, "duplicate parent " + parent});
      }
    }

    if (const auto* cpt = node.explicit_cpt()) {
      if (parents_ok) check_cpt(network, node, *cpt, out);
    } else {
      check_noisy_or(network, node, node.noisy_or(), out);
    }
    check_value_map(node, out);
  }

  if (auto on_cycle = find_cycle(network)) {
    out.push_back({*on_cycle, "directed cycle through node"});
  }
  return report;
}

std::vector<std::string> topological_order(const Network& network) {
  const auto& nodes = network.nodes();
  std::vector<std::size_t> pending(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> children(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& parent : nodes[i].parents) {
      auto idx = network.index_of(parent);
      if (!idx) {
        throw Error(ErrorCode::kValidation,
                    "node " + nodes[i].id + " has missing parent " + parent);
      }
      ++pending[i];
      children[*idx].push_back(i);
    }
  }

  auto by_id = [&](std::size_t a, std::size_t b) { return nodes[a].id > nodes[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_id)> ready(by_id);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }

  std::vector<std::string> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    std::size_t next = ready.top();
    ready.pop();
    order.push_back(nodes[next].id);
    for (std::size_t child : children[next]) {
      if (--pending[child] == 0) ready.push(child);
    }
  }

  if (order.size() != nodes.size()) {
    auto on_cycle = find_cycle(network);
    throw Error(ErrorCode::kCycle,
                "cycle detected through node " + on_cycle.value_or("<unknown>"));
  }
  return order;
}

double state_value(const ValueMap& map, std::span<const double> posterior) {
  if (posterior.size() != 2) {
    throw Error(ErrorCode::kParameter, "state_value needs a binary posterior");
  }
  if (std::abs(posterior[0] + posterior[1] - 1.0) > kProbabilityTolerance) {
    throw Error(ErrorCode::kParameter, "state_value posterior does not sum to 1");
  }
  return posterior[0] * map.low_submean + posterior[1] * map.high_submean;
}

double state_value(const Node& node, std::span<const double> posterior) {
  if (!node.value_map) {
    throw Error(ErrorCode::kNotFound, "no value map on node " + node.id);
  }
  return state_value(*node.value_map, posterior);
}

}  // namespace gridbn
