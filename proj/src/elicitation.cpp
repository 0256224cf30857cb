#include "gridbn/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gridbn/network_json.hpp"
#include "gridbn/noisy_or.hpp"

namespace gridbn {

std::string_view to_string(IciQuestion q) {
  switch (q) {
    case IciQuestion::kQs1c: return "qs1c";
    case IciQuestion::kQs3a: return "qs3a";
    case IciQuestion::kQs3b: return "qs3b";
  }
  return "qs1c";
}

std::string_view to_string(CptQuestion q) {
  return q == CptQuestion::kQs2 ? "qs2" : "qs4";
}

std::string_view to_string(Weighting w) {
  return w == Weighting::kUniform ? "uniform" : "confidence_linear";
}

Weighting parse_weighting(std::string_view text) {
  if (text == "uniform") return Weighting::kUniform;
  if (text == "confidence_linear") return Weighting::kConfidenceLinear;
  throw Error(ErrorCode::kSchema, "unknown weighting '" + std::string(text) +
                                      "' (expected uniform or confidence_linear)");
}

std::vector<double> pooling_weights(std::span<const double> confidences,
                                    const AggregationPolicy& policy) {
  std::vector<double> weights(confidences.size(), 0.0);
  if (confidences.empty()) return weights;
  if (policy.weighting == Weighting::kUniform) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(confidences.size()));
    return weights;
  }
  double total = 0.0;
  for (double c : confidences) {
    if (c < 0.0) throw Error(ErrorCode::kParameter, "negative confidence");
    total += c;
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kParameter, "confidence weighting needs a positive confidence");
  }
  for (std::size_t i = 0; i < confidences.size(); ++i) weights[i] = confidences[i] / total;
  return weights;
}

const ImpactScale& ImpactScale::standard() {
  static const ImpactScale scale{
      {{"non-existent or very weak", 0, 20},
       {"weak", 20, 40},
       {"moderate", 40, 60},
       {"strong", 60, 80},
       {"very strong", 80, 100}},
      {{"impossible", 0, 0},
       {"almost no chance", 0, 5},
       {"very unlikely", 5, 20},
       {"unlikely", 20, 45},
       {"roughly even chance", 45, 55},
       {"likely", 55, 80},
       {"very likely", 80, 95},
       {"almost certain", 95, 99},
       {"certain", 99, 100}}};
  return scale;
}

namespace {

std::string_view classify(const std::vector<ImpactBand>& bands, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorCode::kParameter, "percentage outside [0, 100]");
  }
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& band = bands[i];
    const bool above = i == 0 ? percent >= band.lower : percent > band.lower;
    if (above && percent <= band.upper) return band.label;
  }
  return bands.back().label;
}

}  // namespace

std::string_view ImpactScale::causal_band(double percent) const {
  return classify(causal, percent);
}

std::string_view ImpactScale::likelihood_band(double percent) const {
  return classify(likelihood, percent);
}

ValueMap CapacityAggregate::value_map() const {
  if (degenerate()) return {mean, mean, mean};
  return {mean, *low_submean, *high_submean};
}

namespace {

double pooled(std::span<const double> values, std::span<const double> weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += weights[i] * values[i];
  return sum;
}

// Weighted mean of the subset selected by `mask`, weights renormalized.
std::optional<double> pooled_subset(std::span<const double> values,
                                    std::span<const double> weights,
                                    const std::vector<bool>& mask) {
  double sum = 0.0, mass = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    sum += weights[i] * values[i];
    mass += weights[i];
    ++count;
  }
  if (count == 0) return std::nullopt;
  if (mass <= 0.0) {
    // Only zero-confidence experts in this bucket: plain mean.
    double plain = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (mask[i]) plain += values[i];
    }
    return plain / static_cast<double>(count);
  }
  return sum / mass;
}

const std::map<std::string, Answer>* ici_answers(const ExpertResponse& r,
                                                 const std::string& child,
                                                 IciQuestion question) {
  switch (question) {
    case IciQuestion::kQs1c: {
      auto it = r.qs1c.find(child);
      return it == r.qs1c.end() ? nullptr : &it->second;
    }
    case IciQuestion::kQs3a: return &r.qs3a;
    case IciQuestion::kQs3b: return &r.qs3b;
  }
  return nullptr;
}

double pooled_effect(std::span<const ExpertResponse> responses, const std::string& child,
                     const std::string& factor, IciQuestion question,
                     const AggregationPolicy& policy) {
  std::vector<double> values, confidences;
  for (const auto& r : responses) {
    const auto* answers = ici_answers(r, child, question);
    if (!answers) continue;
    auto it = answers->find(factor);
    if (it == answers->end()) continue;
    values.push_back(it->second.value);
    confidences.push_back(it->second.confidence);
  }
  if (values.empty()) {
    throw Error(ErrorCode::kNotFound, std::string(to_string(question)) + ": no responses for " +
                                          factor + " on " + child);
  }
  const auto weights = pooling_weights(confidences, policy);
  return std::clamp(pooled(values, weights) / 100.0, 0.0, 1.0);
}

}  // namespace

CapacityAggregate aggregate_capacity(std::span<const ExpertResponse> responses,
                                     const std::string& component,
                                     const AggregationPolicy& policy) {
  std::vector<double> values, confidences;
  for (const auto& r : responses) {
    auto it = r.qs1a.find(component);
    if (it == r.qs1a.end()) continue;
    values.push_back(it->second.value);
    confidences.push_back(it->second.confidence);
  }
  if (values.empty()) {
    throw Error(ErrorCode::kNotFound, "qs1a: no capacity estimates for " + component);
  }

  const auto weights = pooling_weights(confidences, policy);
  CapacityAggregate out;
  out.responses = values.size();
  out.mean = pooled(values, weights);
  out.mean_confidence =
      std::accumulate(confidences.begin(), confidences.end(), 0.0) /
      static_cast<double>(confidences.size());

  // An estimate equal to the mean belongs to the high bucket; the slack keeps
  // a unanimous panel from splitting on rounding noise.
  const double slack = 1e-12 * std::max(1.0, std::abs(out.mean));
  std::vector<bool> high(values.size()), low(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    high[i] = values[i] >= out.mean - slack;
    low[i] = !high[i];
  }
  out.low_submean = pooled_subset(values, weights, low);
  out.high_submean = pooled_subset(values, weights, high);
  return out;
}

NoisyOrParams build_ici_params(std::span<const ExpertResponse> responses,
                               const std::string& child,
                               const std::vector<std::string>& factors,
                               IciQuestion question, const AggregationPolicy& policy) {
  NoisyOrParams params;
  for (const auto& factor : factors) {
    params.thetas.push_back(pooled_effect(responses, child, factor, question, policy));
  }
  params.leak = pooled_effect(responses, child, std::string(kLeak), question, policy);
  params.true_state = 1;
  params.triggering.assign(factors.size(), 1);
  return params;
}

ExplicitCpt build_cpt(std::span<const ExpertResponse> responses, CptQuestion question,
                      const AggregationPolicy& policy) {
  if (responses.empty()) {
    throw Error(ErrorCode::kNotFound, std::string(to_string(question)) + ": no responses");
  }
  std::vector<const TableAnswer*> answers;
  std::vector<double> confidences;
  std::size_t width = 0;
  for (const auto& r : responses) {
    const auto& answer = question == CptQuestion::kQs2 ? r.qs2 : r.qs4;
    if (!answer) {
      throw Error(ErrorCode::kNotFound, "expert " + r.expert_id + ": " +
                                            std::string(to_string(question)) + " missing");
    }
    if (answer->rows.size() < 4) {
      throw Error(ErrorCode::kNotFound, "expert " + r.expert_id + ": " +
                                            std::string(to_string(question)) + " row " +
                                            std::to_string(answer->rows.size() + 1) +
                                            " missing");
    }
    for (std::size_t row = 0; row < answer->rows.size(); ++row) {
      if (!answer->rows[row]) {
        throw Error(ErrorCode::kNotFound, "expert " + r.expert_id + ": " +
                                              std::string(to_string(question)) + " row " +
                                              std::to_string(row + 1) + " missing");
      }
      if (width == 0) width = answer->rows[row]->size();
      if (answer->rows[row]->size() != width) {
        throw Error(ErrorCode::kSchema, "expert " + r.expert_id + ": " +
                                            std::string(to_string(question)) + " row " +
                                            std::to_string(row + 1) + " has the wrong width");
      }
    }
    answers.push_back(&*answer);
    confidences.push_back(answer->confidence);
  }

  const auto weights = pooling_weights(confidences, policy);
  const std::size_t row_count = answers.front()->rows.size();
  ExplicitCpt cpt;
  for (std::size_t row = 0; row < row_count; ++row) {
    if (answers.size() > 1 &&
        std::any_of(answers.begin(), answers.end(),
                    [&](const TableAnswer* a) { return a->rows.size() != row_count; })) {
      throw Error(ErrorCode::kSchema, std::string(to_string(question)) +
                                          ": experts disagree on the number of rows");
    }
    std::vector<double> mixed(width, 0.0);
    for (std::size_t e = 0; e < answers.size(); ++e) {
      for (std::size_t s = 0; s < width; ++s) mixed[s] += weights[e] * (*answers[e]->rows[row])[s];
    }
    const double total = std::accumulate(mixed.begin(), mixed.end(), 0.0);
    if (total <= 0.0) {
      throw Error(ErrorCode::kParameter, std::string(to_string(question)) + " row " +
                                             std::to_string(row + 1) + " pools to zero");
    }
    for (double& v : mixed) v /= total;
    cpt.rows.push_back(std::move(mixed));
  }
  return cpt;
}

std::vector<FactorMention> top_factors(std::span<const ExpertResponse> responses,
                                       const std::string& component, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kParameter, "top_factors needs k >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : responses) {
    auto it = r.qs1b.find(component);
    if (it == r.qs1b.end()) continue;
    std::set<std::string> named(it->second.begin(), it->second.end());
    for (const auto& factor : named) ++counts[factor];
  }
  std::vector<FactorMention> ranked;
  for (const auto& [factor, count] : counts) ranked.push_back({factor, count});
  // counts is name-ordered, so a stable sort on count keeps the name tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const FactorMention& a, const FactorMention& b) { return a.count > b.count; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::vector<std::string> threshold_states(double threshold) {
  const double rounded = std::round(threshold * 100.0) / 100.0;
  const std::string text = format_number(rounded);
  return {"lt" + text, "ge" + text};
}

AssemblyResult assemble_network(std::span<const ExpertResponse> responses,
                                const Layout& layout, const AggregationPolicy& policy) {
  if (responses.empty()) throw Error(ErrorCode::kNotFound, "survey has no experts");
  AssemblyResult result;
  std::vector<Node> nodes;

  std::map<std::string, const FactorSpec*> factor_by_id;
  for (const auto& factor : layout.factors) {
    factor_by_id[factor.id] = &factor;
    Node node;
    node.id = factor.id;
    node.layer = Layer::kL1;
    node.states = factor.states;
    node.distribution = ExplicitCpt{{std::vector<double>(factor.states.size(),
                                                         1.0 / static_cast<double>(factor.states.size()))}};
    nodes.push_back(std::move(node));
  }

  for (const auto& component : layout.components) {
    const CapacityAggregate capacity = aggregate_capacity(responses, component.id, policy);
    if (capacity.degenerate()) {
      result.warnings.push_back("component " + component.id +
                                ": capacity estimates do not split around the mean; value map "
                                "collapsed to the mean");
    }

    // Rank every mentioned factor, keep the ones the layout models.
    std::vector<std::string> parents;
    for (const auto& mention : top_factors(responses, component.id, SIZE_MAX)) {
      if (!factor_by_id.count(mention.factor)) continue;
      if (parents.size() == layout.parents_per_component) break;
      parents.push_back(mention.factor);
    }

    NoisyOrParams params =
        build_ici_params(responses, component.id, parents, IciQuestion::kQs1c, policy);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const FactorSpec& spec = *factor_by_id.at(parents[i]);
      auto present = std::find(spec.states.begin(), spec.states.end(), spec.present_state);
      params.triggering[i] = static_cast<std::size_t>(present - spec.states.begin());
    }

    Node node;
    node.id = component.id;
    node.layer = Layer::kL2;
    node.states = threshold_states(capacity.mean);
    node.parents = std::move(parents);
    node.distribution = std::move(params);
    node.value_map = capacity.value_map();
    nodes.push_back(std::move(node));
  }

  if (layout.storage) {
    Node node;
    node.id = layout.storage->id;
    node.layer = Layer::kL2;
    node.states = layout.storage->states;
    node.parents = layout.storage->parents;
    node.distribution = build_cpt(responses, CptQuestion::kQs2, policy);
    nodes.push_back(std::move(node));
  }

  for (const TotalSpec* total : {&layout.bulk, &layout.balance}) {
    Node node;
    node.id = total->id;
    node.layer = Layer::kL3;
    node.states = threshold_states(total->threshold);
    node.parents = total->members;
    node.distribution =
        build_ici_params(responses, total->id, total->members, total->question, policy);
    nodes.push_back(std::move(node));
  }

  {
    Node node;
    node.id = layout.grid.id;
    node.layer = Layer::kL4;
    node.states = layout.grid.states;
    node.parents = {layout.bulk.id, layout.balance.id};
    node.distribution = build_cpt(responses, CptQuestion::kQs4, policy);
    nodes.push_back(std::move(node));
  }

  std::map<std::string, std::string> metadata;
  metadata["name"] = layout.name;
  if (!layout.version.empty()) metadata["version"] = layout.version;
  metadata["weighting"] = std::string(to_string(policy.weighting));
  metadata["experts"] = std::to_string(responses.size());
  if (layout.import_component) {
    const auto imports = aggregate_capacity(responses, *layout.import_component, policy);
    metadata["import_component"] = *layout.import_component;
    metadata["import_gw"] = format_number(imports.mean);
  }

  Network network(std::move(nodes), std::move(metadata));
  if (layout.max_parents) network = divorce(network, *layout.max_parents).first;

  auto report = validate(network);
  if (!report.ok()) throw Error(ErrorCode::kValidation, report.summary());
  result.network = std::move(network);
  return result;
}

}  // namespace gridbn
