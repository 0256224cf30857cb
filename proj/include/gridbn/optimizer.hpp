#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "gridbn/inference.hpp"

namespace gridbn {

/// Construction cost per GW (millions) keyed by component id.
using CostTable = std::map<std::string, double>;

CostTable costs_from_json(const nlohmann::json& doc);
CostTable load_costs(const std::filesystem::path& path);

struct Target {
  std::string node;
  std::string state;
};

/// Parses "Node=state".
Target parse_target(const std::string& text);

struct Weights {
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 1.0;
};

/// w1*I * w2*E * w3/C.
double score(double impact, double joint, double cost, const Weights& weights);

struct ImpactResult {
  double probability = 0.0;  // P(target | fixed, candidate)
  double impact = 0.0;       // probability - P(target | fixed)
  double joint = 0.0;        // P(fixed, candidate)
  bool disqualified = false; // joint == 0
};

/// Effect of adding `component = state` to `fixed` on the target probability.
/// Impossible combined evidence is reported through `disqualified`.
ImpactResult impact(const InferenceEngine& engine, const Evidence& fixed,
                    const std::string& component, const std::string& state,
                    const Target& target);

struct OptimizationStep {
  std::string component;
  std::string state;
  double prior_gw = 0.0;     // state_value before the component is fixed
  double proposed_gw = 0.0;  // state_value with the component fixed
  double impact = 0.0;
  double joint = 0.0;
  double cost = 0.0;
  double score = 0.0;
  double cumulative = 0.0;   // P(target | evidence of steps 1..k)
};

struct OptimizationPlan {
  Target target;
  Weights weights;
  double initial_probability = 0.0;
  double final_probability = 0.0;
  std::vector<OptimizationStep> steps;
  std::optional<std::string> terminated;  // reason when stopped before exhaustion

  Evidence evidence(std::size_t step_count) const;
};

/// Scores within this relative distance, and impacts within this absolute
/// distance, are treated as equal. Smaller impacts count as zero.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Greedy target optimization. Each round scores every (component, state)
/// pair against the evidence fixed so far and fixes the best one (ties: higher
/// impact, then component id, then state order). Candidates default to every
/// non-auxiliary node with a value map.
OptimizationPlan optimize(const InferenceEngine& engine, const Target& target,
                          const CostTable& costs, const Weights& weights,
                          std::vector<std::string> candidates = {});

struct PlanRow {
  std::string component;  // empty for the starting point
  std::optional<std::string> state;
  std::optional<double> prior_gw;
  std::optional<double> proposed_gw;
  std::optional<double> delta_gw;
  std::optional<double> cost;
  double joint = 1.0;
  std::optional<double> effect;
  double cumulative = 0.0;
};

/// Table rows for a plan: a starting-point row followed by one row per step.
/// GW values are recomputed from the network under the evidence of earlier
/// steps.
std::vector<PlanRow> plan_report(const InferenceEngine& engine, const OptimizationPlan& plan);

nlohmann::json plan_to_json(const OptimizationPlan& plan, const std::vector<PlanRow>& rows);
std::string render_plan(const OptimizationPlan& plan, const std::vector<PlanRow>& rows);

}  // namespace gridbn
