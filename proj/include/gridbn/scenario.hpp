#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "gridbn/elicitation.hpp"
#include "gridbn/inference.hpp"

namespace gridbn {

/// A component's capacity: the posterior over its states and the GW value
/// that posterior maps to.
struct CapacityRow {
  std::string component;
  std::vector<double> posterior;
  double gw = 0.0;
};

/// Every non-auxiliary node with a value map, in network order.
std::vector<CapacityRow> capacity_table(const InferenceEngine& engine, const Evidence& evidence);

/// Survey-level capacity statistics (plain and weighted means).
struct SurveyRow {
  std::string component;
  double unweighted = 0.0;
  double weighted = 0.0;
  double mean_confidence = 0.0;
};

std::vector<SurveyRow> survey_table(std::span<const ExpertResponse> responses,
                                    const std::vector<std::string>& components);

enum class Bucket { kBulk, kBalancing, kVariable, kImport, kOther };

std::string_view to_string(Bucket b);
Bucket parse_bucket(std::string_view text);

struct ClassificationRules {
  std::map<std::string, Bucket> buckets;
};

/// Reads {"default": name, "presets": {name: {component: bucket}}} or a bare
/// {component: bucket} map. An empty preset selects the file's default.
ClassificationRules rules_from_json(const nlohmann::json& doc, const std::string& preset = "");
ClassificationRules load_rules(const std::filesystem::path& path, const std::string& preset = "");

struct GwEntry {
  std::string component;
  double gw = 0.0;
};

/// GW totals per bucket; every bucket appears, empty ones as 0. Throws
/// Error(kNotFound) naming the first unclassified component.
std::map<Bucket, double> bucket_sums(std::span<const GwEntry> rows,
                                     const ClassificationRules& rules);

struct Availability {
  double peak_hour = 0.0;
  double peak_season = 0.0;
};

struct AvailabilityProfile {
  std::map<std::string, Availability> factors;
};

/// Reads {"default": name, "profiles": {name: {component: {peak_hour,
/// peak_season}}}} or a bare component map.
AvailabilityProfile profile_from_json(const nlohmann::json& doc, const std::string& name = "");
AvailabilityProfile load_profile(const std::filesystem::path& path, const std::string& name = "");

struct AvailabilityRow {
  std::string component;
  double gw = 0.0;
  double peak_hour = 0.0;
  double peak_season = 0.0;
};

struct AvailabilityReport {
  std::vector<AvailabilityRow> rows;
  double total_gw = 0.0;
  double peak_hour = 0.0;
  double peak_season = 0.0;
  std::optional<double> import_gw;  // set only when imports are added

  double peak_hour_with_import() const { return peak_hour + import_gw.value_or(0.0); }
  double peak_season_with_import() const { return peak_season + import_gw.value_or(0.0); }
};

/// available = GW * factor per component. Throws Error(kNotFound) for a row
/// the profile does not cover.
AvailabilityReport availability(std::span<const GwEntry> rows, const AvailabilityProfile& profile,
                                std::optional<double> import_gw = std::nullopt);

struct ScenarioSummary {
  std::string grid;
  std::vector<std::string> states;
  std::vector<double> probabilities;
  std::map<std::string, std::vector<double>> totals;  // layer-3 marginals
  std::vector<CapacityRow> capacities;
};

/// Grid-scenario posterior (the layer-4 node) with layer-3 marginals and the
/// capacity table under the same evidence.
ScenarioSummary scenario_summary(const InferenceEngine& engine, const Evidence& evidence);

std::vector<GwEntry> gw_entries(std::span<const CapacityRow> rows);

}  // namespace gridbn
