#include "gridbn/noisy_or.hpp"

#include <set>
#include <string>
#include <vector>

namespace gridbn {

double noisy_or_probability(const NoisyOrParams& params,
                            std::span<const double> present) {
  if (present.size() != params.thetas.size()) {
    throw Error(ErrorCode::kParameter,
                "noisy-or expects " + std::to_string(params.thetas.size()) +
                    " presence flags, got " + std::to_string(present.size()));
  }
  double none_fire = 1.0 - params.leak;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i] != 0.0 && present[i] != 1.0) {
      throw Error(ErrorCode::kParameter, "cause presence must be 0 or 1");
    }
    if (present[i] == 1.0) none_fire *= 1.0 - params.thetas[i];
  }
  return 1.0 - none_fire;
}

ExplicitCpt compile_noisy_or(const Network& network, const Node& node) {
  if (!node.is_noisy_or()) {
    throw Error(ErrorCode::kParameter, "node " + node.id + " has no noisy-or parameters");
  }
  const NoisyOrParams& params = node.noisy_or();
  if (node.states.size() != 2) {
    throw Error(ErrorCode::kUnsupportedStructure,
                "noisy-or child " + node.id + " must be binary");
  }
  const std::size_t n = node.parents.size();
  if (params.thetas.size() != n || params.triggering.size() != n) {
    throw Error(ErrorCode::kParameter,
                "noisy-or parameters of " + node.id + " do not match its parents");
  }
  for (const auto& parent_id : node.parents) {
    if (network.node(parent_id).states.size() != 2) {
      throw Error(ErrorCode::kUnsupportedStructure,
                  "noisy-or parent " + parent_id + " of " + node.id + " is not binary");
    }
  }

  ExplicitCpt cpt;
  const std::size_t row_count = std::size_t{1} << n;
  cpt.rows.reserve(row_count);
  std::vector<double> present(n);
  for (std::size_t row = 0; row < row_count; ++row) {
    // First parent varies slowest: its state is the most significant bit.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t state = (row >> (n - 1 - i)) & 1U;
      present[i] = state == params.triggering[i] ? 1.0 : 0.0;
    }
    const double p_true = noisy_or_probability(params, present);
    std::vector<double> dist(2);
    dist[params.true_state] = p_true;
    dist[1 - params.true_state] = 1.0 - p_true;
    cpt.rows.push_back(std::move(dist));
  }
  return cpt;
}

ExplicitCpt effective_cpt(const Network& network, const Node& node) {
  if (const auto* cpt = node.explicit_cpt()) return *cpt;
  return compile_noisy_or(network, node);
}

namespace {

struct Cause {
  std::string parent;
  double theta;
  std::size_t triggering;
};

std::string fresh_id(const std::string& child, std::size_t& counter,
                     std::set<std::string>& taken) {
  for (;;) {
    std::string id = child + "__ici_" + std::to_string(++counter);
    if (taken.insert(id).second) return id;
  }
}

}  // namespace

std::pair<Network, DivorcePlan> divorce(const Network& network,
                                        std::size_t max_parents_per_child) {
  if (max_parents_per_child < 2) {
    throw Error(ErrorCode::kParameter, "max_parents_per_child must be at least 2");
  }

  DivorcePlan plan;
  plan.max_parents_per_child = max_parents_per_child;

  std::set<std::string> taken;
  for (const auto& node : network.nodes()) taken.insert(node.id);

  std::vector<Node> out;
  out.reserve(network.nodes().size());
  for (const Node& node : network.nodes()) {
    if (!node.is_noisy_or() || node.parents.size() <= max_parents_per_child) {
      out.push_back(node);
      continue;
    }

    const NoisyOrParams& params = node.noisy_or();
    std::vector<Cause> causes;
    for (std::size_t i = 0; i < node.parents.size(); ++i) {
      causes.push_back({node.parents[i], params.thetas[i], params.triggering[i]});
    }

    std::size_t counter = 0;
    while (causes.size() > max_parents_per_child) {
      std::vector<Cause> next;
      for (std::size_t start = 0; start < causes.size(); start += max_parents_per_child) {
        const std::size_t end = std::min(causes.size(), start + max_parents_per_child);
        if (end - start == 1) {
          next.push_back(causes[start]);
          continue;
        }
        Node aux;
        aux.id = fresh_id(node.id, counter, taken);
        aux.layer = node.layer;
        aux.states = {"false", "true"};
        aux.auxiliary = true;
        NoisyOrParams group;
        group.true_state = 1;
        IntroducedNode record{aux.id, node.id, {}};
        for (std::size_t k = start; k < end; ++k) {
          aux.parents.push_back(causes[k].parent);
          group.thetas.push_back(causes[k].theta);
          group.triggering.push_back(causes[k].triggering);
          record.grouped_parents.push_back(causes[k].parent);
        }
        aux.distribution = std::move(group);
        out.push_back(std::move(aux));
        plan.introduced_nodes.push_back(std::move(record));
        // The aggregator already carries the strengths; it passes through.
        next.push_back({out.back().id, 1.0, 1});
      }
      causes = std::move(next);
    }

    Node child = node;
    NoisyOrParams reduced;
    reduced.leak = params.leak;
    reduced.true_state = params.true_state;
    child.parents.clear();
    for (const auto& cause : causes) {
      child.parents.push_back(cause.parent);
      reduced.thetas.push_back(cause.theta);
      reduced.triggering.push_back(cause.triggering);
    }
    child.distribution = std::move(reduced);
    out.push_back(std::move(child));
  }

  if (plan.introduced_nodes.empty()) return {network, plan};

  DivorcePlan recorded = plan;
  if (const auto& previous = network.divorce_plan()) {
    recorded.introduced_nodes.insert(recorded.introduced_nodes.begin(),
                                     previous->introduced_nodes.begin(),
                                     previous->introduced_nodes.end());
  }
  return {Network(std::move(out), network.metadata(), std::move(recorded)), plan};
}

}  // namespace gridbn
