#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "gridbn/model.hpp"

namespace gridbn {

/// One elicited number (GW or percent) with the expert's confidence in %.
struct Answer {
  double value = 0.0;
  double confidence = 0.0;
};

/// Four-row conditional table answer (Question Sets 2 and 4), percentages.
/// A missing row is stored as std::nullopt so it can be reported.
struct TableAnswer {
  std::vector<std::optional<std::vector<double>>> rows;
  double confidence = 0.0;
};

inline constexpr std::string_view kLeak = "Leak";

struct ExpertResponse {
  std::string expert_id;
  double confidence_default = 50.0;
  std::map<std::string, Answer> qs1a;                           // component -> GW
  std::map<std::string, std::vector<std::string>> qs1b;         // component -> factors
  std::map<std::string, std::map<std::string, Answer>> qs1c;    // component -> factor -> %
  std::optional<TableAnswer> qs2;                               // storage use split
  std::map<std::string, Answer> qs3a;                           // balancing solution -> %
  std::map<std::string, Answer> qs3b;                           // bulk source -> %
  std::optional<TableAnswer> qs4;                               // grid scenarios
};

enum class IciQuestion { kQs1c, kQs3a, kQs3b };
enum class CptQuestion { kQs2, kQs4 };

std::string_view to_string(IciQuestion q);
std::string_view to_string(CptQuestion q);

enum class Weighting { kUniform, kConfidenceLinear };

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view text);

/// Confidence-linear pooling normalizes weights per question:
/// w_e = confidence_e / sum of confidences of the experts who answered.
struct AggregationPolicy {
  Weighting weighting = Weighting::kConfidenceLinear;
};

/// Normalized pooling weights for a set of confidences. Throws
/// Error(kParameter) if confidence weighting is requested and every
/// confidence is zero.
std::vector<double> pooling_weights(std::span<const double> confidences,
                                    const AggregationPolicy& policy);

/// Five causal bands for Question Sets 1c/3 and the nine likelihood bands for
/// Question Sets 2/4. Bands are contiguous and cover [0, 100].
struct ImpactBand {
  std::string label;
  double lower;  // inclusive for the first band, exclusive otherwise
  double upper;  // inclusive
};

struct ImpactScale {
  std::vector<ImpactBand> causal;
  std::vector<ImpactBand> likelihood;

  static const ImpactScale& standard();
  std::string_view causal_band(double percent) const;
  std::string_view likelihood_band(double percent) const;
};

struct CapacityAggregate {
  double mean = 0.0;
  std::optional<double> low_submean;   // absent when no estimate is below the mean
  std::optional<double> high_submean;  // absent when no estimate reaches the mean
  double mean_confidence = 0.0;
  std::size_t responses = 0;

  bool degenerate() const { return !low_submean || !high_submean; }
  /// Threshold at the mean; a degenerate panel collapses to (mean, mean, mean).
  ValueMap value_map() const;
};

/// Pools the capacity estimates for one component and splits them around the
/// pooled mean. Throws Error(kNotFound) if nobody answered.
CapacityAggregate aggregate_capacity(std::span<const ExpertResponse> responses,
                                     const std::string& component,
                                     const AggregationPolicy& policy);

/// theta_i = pooled effect / 100 per factor; leak = pooled Leak effect / 100.
/// Experts without an entry are skipped for that entry. Triggering states
/// default to index 1.
NoisyOrParams build_ici_params(std::span<const ExpertResponse> responses,
                               const std::string& child,
                               const std::vector<std::string>& factors,
                               IciQuestion question, const AggregationPolicy& policy);

/// Pools four-row table answers row by row and renormalizes each row.
ExplicitCpt build_cpt(std::span<const ExpertResponse> responses, CptQuestion question,
                      const AggregationPolicy& policy);

struct FactorMention {
  std::string factor;
  std::size_t count = 0;
};

/// Factors named for `component` in Question Set 1b, by mention count
/// (descending) then name. At most k entries.
std::vector<FactorMention> top_factors(std::span<const ExpertResponse> responses,
                                       const std::string& component, std::size_t k);

// ---------------------------------------------------------------------------
// Network layout

struct FactorSpec {
  std::string id;
  std::string label;
  std::vector<std::string> states{"false", "true"};
  std::string present_state = "true";  // state that counts as "cause present"
};

struct ComponentSpec {
  std::string id;
  std::string label;
};

struct TotalSpec {
  std::string id;
  std::string label;
  double threshold = 0.0;
  std::vector<std::string> members;
  IciQuestion question = IciQuestion::kQs3b;
};

struct GridSpec {
  std::string id = "GridManagement";
  std::vector<std::string> states{"B1", "B2", "B3", "B4"};
};

struct StorageSpec {
  std::string id;
  std::vector<std::string> parents;  // two L2 components
  std::vector<std::string> states;   // four usage outcomes
};

struct Layout {
  std::string name;
  std::string version;
  std::vector<FactorSpec> factors;
  std::vector<ComponentSpec> components;
  std::vector<std::string> survey_only;  // aggregated for reports, not in the network
  std::optional<std::string> import_component;
  std::size_t parents_per_component = 3;
  TotalSpec bulk;
  TotalSpec balance;
  GridSpec grid;
  std::optional<StorageSpec> storage;
  std::optional<std::size_t> max_parents;  // divorce bound, if any
  AggregationPolicy policy;
};

Layout layout_from_json(const nlohmann::json& doc);
Layout load_layout(const std::filesystem::path& path);

std::vector<ExpertResponse> survey_from_json(const nlohmann::json& doc);
std::vector<ExpertResponse> load_survey(const std::filesystem::path& path);

/// "lt13" / "ge13" style state labels for a threshold.
std::vector<std::string> threshold_states(double threshold);

struct AssemblyResult {
  Network network;
  std::vector<std::string> warnings;
};

/// Builds the four-layer network: uniform L1 roots, Noisy-OR L2 components of
/// their top factors, Noisy-OR L3 totals, the explicit grid CPT and the
/// optional storage-use node. Applies divorcing when the layout asks for it.
AssemblyResult assemble_network(std::span<const ExpertResponse> responses,
                                const Layout& layout, const AggregationPolicy& policy);

}  // namespace gridbn
