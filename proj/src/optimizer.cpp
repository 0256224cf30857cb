#include "gridbn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "gridbn/network_json.hpp"

namespace gridbn {

using nlohmann::json;

CostTable costs_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "costs: expected an object");
  CostTable costs;
  for (const auto& [component, value] : doc.items()) {
    if (!value.is_number()) {
      throw Error(ErrorCode::kSchema, "costs." + component + ": expected a number");
    }
    const double cost = value.get<double>();
    if (!(cost > 0.0) || !std::isfinite(cost)) {
      throw Error(ErrorCode::kSchema, "costs." + component + ": cost must be > 0");
    }
    costs[component] = cost;
  }
  return costs;
}

CostTable load_costs(const std::filesystem::path& path) {
  return costs_from_json(read_json_file(path));
}

Target parse_target(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(ErrorCode::kValidation, "target must look like Node=state, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

double score(double impact, double joint, double cost, const Weights& weights) {
  return weights.w1 * impact * weights.w2 * joint * weights.w3 / cost;
}

namespace {

double snap_zero(double impact) {
  return std::abs(impact) <= kScoreTieTolerance ? 0.0 : impact;
}

double target_probability(const InferenceEngine& engine, const Evidence& evidence,
                          const Target& target) {
  const Node& node = engine.network().node(target.node);
  return engine.posterior(evidence, {target.node}).at(target.node)[*node.state_index(target.state)];
}

void check_target(const Network& network, const Target& target) {
  if (!network.contains(target.node)) {
    throw Error(ErrorCode::kNotFound, "unknown target node " + target.node);
  }
  const Node& node = network.node(target.node);
  if (std::find(node.states.begin(), node.states.end(), target.state) == node.states.end()) {
    std::string valid;
    for (const auto& s : node.states) valid += (valid.empty() ? "" : ", ") + s;
    throw Error(ErrorCode::kValidation, "unknown state '" + target.state + "' for target " +
                                            target.node + " (valid: " + valid + ")");
  }
}

// Probability and joint for `evidence`; disqualified when impossible.
ImpactResult evaluate(const InferenceEngine& engine, const Evidence& evidence,
                      const Target& target) {
  ImpactResult out;
  try {
    const Node& node = engine.network().node(target.node);
    const auto post = engine.posterior(evidence, {target.node});
    out.probability = post.at(target.node)[*node.state_index(target.state)];
    out.joint = post.evidence_probability();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kImpossibleEvidence) throw;
    out.disqualified = true;
  }
  return out;
}

}  // namespace

ImpactResult impact(const InferenceEngine& engine, const Evidence& fixed,
                    const std::string& component, const std::string& state,
                    const Target& target) {
  check_target(engine.network(), target);
  if (fixed.contains(component)) {
    throw Error(ErrorCode::kValidation, "candidate " + component + " is already fixed");
  }
  const double before = target_probability(engine, fixed, target);
  ImpactResult out = evaluate(engine, fixed.with(component, state), target);
  out.impact = out.disqualified ? 0.0 : snap_zero(out.probability - before);
  if (out.disqualified) out.probability = before;
  return out;
}

Evidence OptimizationPlan::evidence(std::size_t step_count) const {
  Evidence ev;
  for (std::size_t i = 0; i < std::min(step_count, steps.size()); ++i) {
    ev.assignments[steps[i].component] = steps[i].state;
  }
  return ev;
}

OptimizationPlan optimize(const InferenceEngine& engine, const Target& target,
                          const CostTable& costs, const Weights& weights,
                          std::vector<std::string> candidates) {
  const Network& network = engine.network();
  check_target(network, target);
  for (double w : {weights.w1, weights.w2, weights.w3}) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kParameter, "weights must be > 0");
    }
  }
  if (candidates.empty()) {
    for (const auto& node : network.nodes()) {
      if (!node.auxiliary && node.value_map && node.id != target.node) {
        candidates.push_back(node.id);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end()) {
    throw Error(ErrorCode::kValidation, "duplicate candidate component");
  }
  for (const auto& c : candidates) {
    const Node& node = network.node(c);
    if (node.auxiliary) throw Error(ErrorCode::kValidation, "candidate " + c + " is auxiliary");
    if (c == target.node) throw Error(ErrorCode::kValidation, "target cannot be a candidate");
    if (!node.value_map) throw Error(ErrorCode::kValidation, "candidate " + c + " has no value map");
    auto cost = costs.find(c);
    if (cost == costs.end()) throw Error(ErrorCode::kNotFound, "no cost for component " + c);
    if (!(cost->second > 0.0)) throw Error(ErrorCode::kParameter, "cost for " + c + " must be > 0");
  }

  OptimizationPlan plan;
  plan.target = target;
  plan.weights = weights;
  plan.initial_probability = target_probability(engine, {}, target);
  plan.final_probability = plan.initial_probability;

  Evidence fixed;
  std::vector<std::string> remaining = candidates;
  while (!remaining.empty()) {
    std::vector<std::string> query = remaining;
    query.push_back(target.node);
    const PosteriorSet current = engine.posterior(fixed, query);
    const double base =
        current.at(target.node)[*network.node(target.node).state_index(target.state)];

    std::optional<OptimizationStep> best;
    for (const auto& c : remaining) {
      const Node& node = network.node(c);
      for (const auto& state : node.states) {
        const ImpactResult r = evaluate(engine, fixed.with(c, state), target);
        if (r.disqualified) continue;
        OptimizationStep step;
        step.component = c;
        step.state = state;
        step.impact = snap_zero(r.probability - base);
        step.joint = r.joint;
        step.cost = costs.at(c);
        step.score = score(step.impact, step.joint, step.cost, weights);
        step.cumulative = r.probability;
        step.prior_gw = state_value(node, current.at(c));
        std::vector<double> point(node.states.size(), 0.0);
        point[*node.state_index(state)] = 1.0;
        step.proposed_gw = state_value(node, point);
        // Candidates are visited in id then state order, so only a strictly
        // better score or impact replaces the incumbent.
        const double tie =
            kScoreTieTolerance * std::max(std::abs(step.score), std::abs(best ? best->score : 0.0));
        if (!best || step.score > best->score + tie ||
            (std::abs(step.score - best->score) <= tie &&
             step.impact > best->impact + kScoreTieTolerance)) {
          best = step;
        }
      }
    }
    if (!best) {
      plan.terminated = "every remaining candidate contradicts the fixed evidence (" +
                        (fixed.empty() ? std::string("none") : fixed.describe()) + ")";
      break;
    }
    fixed = fixed.with(best->component, best->state);
    plan.final_probability = best->cumulative;
    remaining.erase(std::find(remaining.begin(), remaining.end(), best->component));
    plan.steps.push_back(std::move(*best));
  }
  return plan;
}

std::vector<PlanRow> plan_report(const InferenceEngine& engine, const OptimizationPlan& plan) {
  std::vector<PlanRow> rows;
  PlanRow start;
  start.joint = 1.0;
  start.cumulative = plan.initial_probability;
  rows.push_back(start);
  for (std::size_t k = 0; k < plan.steps.size(); ++k) {
    const auto& step = plan.steps[k];
    const Node& node = engine.network().node(step.component);
    const auto before = engine.posterior(plan.evidence(k), {step.component});
    std::vector<double> point(node.states.size(), 0.0);
    point[*node.state_index(step.state)] = 1.0;
    PlanRow row;
    row.component = step.component;
    row.state = step.state;
    row.prior_gw = state_value(node, before.at(step.component));
    row.proposed_gw = state_value(node, point);
    row.delta_gw = *row.proposed_gw - *row.prior_gw;
    row.cost = step.cost;
    row.joint = step.joint;
    row.effect = step.impact;
    row.cumulative = step.cumulative;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json plan_to_json(const OptimizationPlan& plan, const std::vector<PlanRow>& rows) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"component", s.component},
                     {"state", s.state},
                     {"prior_gw", s.prior_gw},
                     {"proposed_gw", s.proposed_gw},
                     {"impact", s.impact},
                     {"joint", s.joint},
                     {"cost", s.cost},
                     {"score", s.score},
                     {"cumulative", s.cumulative}});
  }
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"component", r.component.empty() ? json(nullptr) : json(r.component)},
                     {"state", r.state ? json(*r.state) : json(nullptr)},
                     {"prior_gw", optional_number(r.prior_gw)},
                     {"proposed_gw", optional_number(r.proposed_gw)},
                     {"delta_gw", optional_number(r.delta_gw)},
                     {"cost", optional_number(r.cost)},
                     {"joint", r.joint},
                     {"effect", optional_number(r.effect)},
                     {"cumulative", r.cumulative}});
  }
  json out = {{"target", {{"node", plan.target.node}, {"state", plan.target.state}}},
              {"weights", {{"w1", plan.weights.w1}, {"w2", plan.weights.w2}, {"w3", plan.weights.w3}}},
              {"initial_probability", plan.initial_probability},
              {"final_probability", plan.final_probability},
              {"steps", steps},
              {"rows", table},
              {"terminated", plan.terminated ? json(*plan.terminated) : json(nullptr)}};
  return out;
}

std::string render_plan(const OptimizationPlan& plan, const std::vector<PlanRow>& rows) {
  std::ostringstream out;
  out << "Target " << plan.target.node << "=" << plan.target.state << "  (w1=" << plan.weights.w1
      << ", w2=" << plan.weights.w2 << ", w3=" << plan.weights.w3 << ")\n";
  out << std::left << std::setw(20) << "Component" << std::setw(10) << "State" << std::right
      << std::setw(10) << "Prior GW" << std::setw(10) << "Proposed" << std::setw(9) << "Delta"
      << std::setw(9) << "Cost" << std::setw(9) << "Joint" << std::setw(9) << "Effect"
      << std::setw(12) << "Cumulative" << "\n";
  out << std::fixed;
  auto pct = [](double p) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * p << " %";
    return s.str();
  };
  auto gw = [](const std::optional<double>& v) {
    if (!v) return std::string();
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << *v;
    return s.str();
  };
  for (const auto& r : rows) {
    out << std::left << std::setw(20) << (r.component.empty() ? "Starting point" : r.component)
        << std::setw(10) << r.state.value_or("") << std::right << std::setw(10) << gw(r.prior_gw)
        << std::setw(10) << gw(r.proposed_gw) << std::setw(9) << gw(r.delta_gw) << std::setw(9)
        << (r.cost ? std::to_string(static_cast<long long>(std::llround(*r.cost))) : "")
        << std::setw(9) << pct(r.joint) << std::setw(9) << (r.effect ? pct(*r.effect) : "")
        << std::setw(12) << pct(r.cumulative) << "\n";
  }
  if (plan.terminated) out << "Stopped early: " << *plan.terminated << "\n";
  return out.str();
}

}  // namespace gridbn
