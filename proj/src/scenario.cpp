#include "gridbn/scenario.hpp"

#include <algorithm>

#include "gridbn/network_json.hpp"

namespace gridbn {

using nlohmann::json;

std::vector<CapacityRow> capacity_table(const InferenceEngine& engine, const Evidence& evidence) {
  std::vector<std::string> ids;
  for (const auto& node : engine.network().nodes()) {
    if (!node.auxiliary && node.value_map) ids.push_back(node.id);
  }
  const PosteriorSet post = engine.posterior(evidence, ids);
  std::vector<CapacityRow> rows;
  for (const auto& id : ids) {
    CapacityRow row;
    row.component = id;
    row.posterior = post.at(id);
    row.gw = state_value(engine.network().node(id), row.posterior);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SurveyRow> survey_table(std::span<const ExpertResponse> responses,
                                    const std::vector<std::string>& components) {
  std::vector<SurveyRow> rows;
  for (const auto& c : components) {
    const auto plain = aggregate_capacity(responses, c, {Weighting::kUniform});
    const auto weighted = aggregate_capacity(responses, c, {Weighting::kConfidenceLinear});
    rows.push_back({c, plain.mean, weighted.mean, plain.mean_confidence});
  }
  return rows;
}

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::kBulk: return "bulk";
    case Bucket::kBalancing: return "balancing";
    case Bucket::kVariable: return "variable";
    case Bucket::kImport: return "import";
    case Bucket::kOther: return "other";
  }
  return "other";
}

Bucket parse_bucket(std::string_view text) {
  for (Bucket b : {Bucket::kBulk, Bucket::kBalancing, Bucket::kVariable, Bucket::kImport,
                   Bucket::kOther}) {
    if (to_string(b) == text) return b;
  }
  throw Error(ErrorCode::kSchema, "unknown bucket '" + std::string(text) + "'");
}

namespace {

// Picks a named entry out of {"default": ..., "<group>": {...}} documents.
const json& select_preset(const json& doc, const char* group, const std::string& name,
                          std::string& where) {
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "expected an object");
  if (!doc.contains(group)) {
    where = "";
    return doc;
  }
  const json& presets = doc[group];
  std::string chosen = name;
  if (chosen.empty()) {
    if (!doc.contains("default") || !doc["default"].is_string()) {
      throw Error(ErrorCode::kSchema, "no preset named and no \"default\" given");
    }
    chosen = doc["default"].get<std::string>();
  }
  if (!presets.is_object() || !presets.contains(chosen)) {
    std::string known;
    if (presets.is_object()) {
      for (const auto& [k, v] : presets.items()) known += (known.empty() ? "" : ", ") + k;
    }
    throw Error(ErrorCode::kNotFound, "unknown preset '" + chosen + "' (known: " + known + ")");
  }
  where = std::string(group) + "." + chosen + ".";
  return presets[chosen];
}

}  // namespace

ClassificationRules rules_from_json(const json& doc, const std::string& preset) {
  std::string where;
  const json& map = select_preset(doc, "presets", preset, where);
  if (!map.is_object()) throw Error(ErrorCode::kSchema, where + ": expected an object");
  ClassificationRules rules;
  for (const auto& [component, bucket] : map.items()) {
    if (!bucket.is_string()) {
      throw Error(ErrorCode::kSchema, where + component + ": expected a bucket name");
    }
    rules.buckets[component] = parse_bucket(bucket.get<std::string>());
  }
  return rules;
}

ClassificationRules load_rules(const std::filesystem::path& path, const std::string& preset) {
  return rules_from_json(read_json_file(path), preset);
}

std::map<Bucket, double> bucket_sums(std::span<const GwEntry> rows,
                                     const ClassificationRules& rules) {
  std::map<Bucket, double> sums{{Bucket::kBulk, 0.0},
                                {Bucket::kBalancing, 0.0},
                                {Bucket::kVariable, 0.0},
                                {Bucket::kImport, 0.0},
                                {Bucket::kOther, 0.0}};
  for (const auto& row : rows) {
    auto it = rules.buckets.find(row.component);
    if (it == rules.buckets.end()) {
      throw Error(ErrorCode::kNotFound, "component " + row.component + " is not classified");
    }
    sums[it->second] += row.gw;
  }
  return sums;
}

AvailabilityProfile profile_from_json(const json& doc, const std::string& name) {
  std::string where;
  const json& map = select_preset(doc, "profiles", name, where);
  if (!map.is_object()) throw Error(ErrorCode::kSchema, where + ": expected an object");
  AvailabilityProfile profile;
  for (const auto& [component, entry] : map.items()) {
    Availability a;
    for (const char* key : {"peak_hour", "peak_season"}) {
      const std::string at = where + component + "." + key;
      if (!entry.is_object() || !entry.contains(key) || !entry[key].is_number()) {
        throw Error(ErrorCode::kSchema, at + ": expected a number");
      }
      const double f = entry[key].get<double>();
      if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::kSchema, at + ": factor outside [0, 1]");
      (std::string_view(key) == "peak_hour" ? a.peak_hour : a.peak_season) = f;
    }
    profile.factors[component] = a;
  }
  return profile;
}

AvailabilityProfile load_profile(const std::filesystem::path& path, const std::string& name) {
  return profile_from_json(read_json_file(path), name);
}

AvailabilityReport availability(std::span<const GwEntry> rows, const AvailabilityProfile& profile,
                                std::optional<double> import_gw) {
  AvailabilityReport report;
  for (const auto& row : rows) {
    auto it = profile.factors.find(row.component);
    if (it == profile.factors.end()) {
      throw Error(ErrorCode::kNotFound, "no availability factor for " + row.component);
    }
    AvailabilityRow out{row.component, row.gw, row.gw * it->second.peak_hour,
                        row.gw * it->second.peak_season};
    report.total_gw += out.gw;
    report.peak_hour += out.peak_hour;
    report.peak_season += out.peak_season;
    report.rows.push_back(std::move(out));
  }
  report.import_gw = import_gw;
  return report;
}

ScenarioSummary scenario_summary(const InferenceEngine& engine, const Evidence& evidence) {
  const Network& network = engine.network();
  ScenarioSummary summary;
  std::vector<std::string> query;
  for (const auto& node : network.nodes()) {
    if (node.auxiliary) continue;
    if (node.layer == Layer::kL4 && summary.grid.empty()) summary.grid = node.id;
    if (node.layer == Layer::kL3) query.push_back(node.id);
  }
  if (summary.grid.empty()) throw Error(ErrorCode::kNotFound, "network has no layer-4 node");
  query.push_back(summary.grid);
  const PosteriorSet post = engine.posterior(evidence, query);
  summary.states = network.node(summary.grid).states;
  summary.probabilities = post.at(summary.grid);
  for (const auto& id : query) {
    if (id != summary.grid) summary.totals[id] = post.at(id);
  }
  summary.capacities = capacity_table(engine, evidence);
  return summary;
}

std::vector<GwEntry> gw_entries(std::span<const CapacityRow> rows) {
  std::vector<GwEntry> out;
  for (const auto& row : rows) out.push_back({row.component, row.gw});
  return out;
}

}  // namespace gridbn
