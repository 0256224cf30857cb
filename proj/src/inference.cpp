#include "gridbn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "factor.hpp"
#include "gridbn/noisy_or.hpp"

namespace gridbn {

using detail::Factor;

Evidence Evidence::with(const std::string& node, const std::string& state) const {
  Evidence out = *this;
  out.assignments[node] = state;
  return out;
}

std::string Evidence::describe() const {
  std::string out;
  for (const auto& [node, state] : assignments) {
    if (!out.empty()) out += ", ";
    out += node + "=" + state;
  }
  return out;
}

const std::vector<double>& PosteriorSet::at(const std::string& node) const {
  auto it = marginals.find(node);
  if (it == marginals.end()) {
    throw Error(ErrorCode::kNotFound, "node " + node + " was not queried");
  }
  return it->second;
}

double PosteriorSet::evidence_probability() const { return std::exp(log_evidence); }

void check_evidence(const Network& network, const Evidence& evidence) {
  for (const auto& [id, state] : evidence.assignments) {
    auto idx = network.index_of(id);
    if (!idx) throw Error(ErrorCode::kValidation, "unknown evidence node " + id);
    const Node& node = network.nodes()[*idx];
    if (node.auxiliary) {
      throw Error(ErrorCode::kValidation, "evidence on auxiliary node " + id + " is not allowed");
    }
    if (!node.state_index(state)) {
      std::string valid;
      for (const auto& s : node.states) valid += (valid.empty() ? "" : ", ") + s;
      throw Error(ErrorCode::kValidation,
                  "node " + id + " has no state " + state + " (valid: " + valid + ")");
    }
  }
}

namespace {

[[noreturn]] void impossible(const Evidence& evidence) {
  throw Error(ErrorCode::kImpossibleEvidence,
              "impossible evidence: " + evidence.describe());
}

}  // namespace

InferenceEngine::InferenceEngine(Network network) : network_(std::move(network)) {
  auto report = validate(network_);
  if (!report.ok()) throw Error(ErrorCode::kValidation, report.summary());

  const auto& nodes = network_.nodes();
  std::vector<std::size_t> by_id(nodes.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return nodes[a].id < nodes[b].id; });
  id_rank_.resize(nodes.size());
  for (std::size_t r = 0; r < by_id.size(); ++r) id_rank_[by_id[r]] = r;

  tables_.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    const ExplicitCpt cpt = effective_cpt(network_, node);

    std::vector<std::size_t> parents;
    for (const auto& p : node.parents) parents.push_back(*network_.index_of(p));

    Table table;
    table.vars = parents;
    table.vars.push_back(i);
    std::sort(table.vars.begin(), table.vars.end());
    std::size_t total = 1;
    for (std::size_t v : table.vars) {
      table.cards.push_back(nodes[v].states.size());
      total *= table.cards.back();
    }
    table.values.resize(total);

    // Walk the sorted scope and look up the declared-order CPT row.
    std::vector<std::size_t> assignment(table.vars.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t row = 0, child_state = 0;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        auto pos = std::lower_bound(table.vars.begin(), table.vars.end(), parents[k]) -
                   table.vars.begin();
        row = row * nodes[parents[k]].states.size() + assignment[static_cast<std::size_t>(pos)];
      }
      auto self = std::lower_bound(table.vars.begin(), table.vars.end(), i) - table.vars.begin();
      child_state = assignment[static_cast<std::size_t>(self)];
      table.values[flat] = cpt.rows[row][child_state];

      for (std::size_t k = assignment.size(); k-- > 0;) {
        if (++assignment[k] < table.cards[k]) break;
        assignment[k] = 0;
      }
    }
    tables_.push_back(std::move(table));
  }
}

std::map<std::size_t, std::size_t> InferenceEngine::resolve(const Evidence& evidence) const {
  check_evidence(network_, evidence);
  std::map<std::size_t, std::size_t> observed;
  for (const auto& [id, state] : evidence.assignments) {
    const std::size_t idx = *network_.index_of(id);
    observed[idx] = *network_.nodes()[idx].state_index(state);
  }
  return observed;
}

InferenceEngine::Result InferenceEngine::eliminate(
    const std::map<std::size_t, std::size_t>& observed,
    std::optional<std::size_t> keep) const {
  const auto& nodes = network_.nodes();

  // Only ancestors of the evidence and the kept variable matter; every other
  // node sums to one.
  std::vector<bool> relevant(nodes.size(), false);
  std::vector<std::size_t> frontier;
  for (const auto& [idx, state] : observed) frontier.push_back(idx);
  if (keep) frontier.push_back(*keep);
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (const auto& p : nodes[v].parents) frontier.push_back(*network_.index_of(p));
  }

  std::vector<Factor> factors;
  std::set<std::size_t> hidden;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!relevant[i]) continue;
    const Table& table = tables_[i];
    Factor f{table.vars, table.cards, table.values, 0.0};
    for (const auto& [idx, state] : observed) {
      if (f.mentions(idx)) f = detail::restrict_to(f, idx, state);
    }
    factors.push_back(std::move(f));
    if (!observed.count(i) && (!keep || *keep != i)) hidden.insert(i);
  }

  Result result;
  while (!hidden.empty()) {
    // Min-fill choice; ties go to the lexicographically smallest id.
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& f : factors) {
      for (std::size_t a = 0; a < f.vars.size(); ++a) {
        for (std::size_t b = a + 1; b < f.vars.size(); ++b) edges.insert({f.vars[a], f.vars[b]});
      }
    }
    std::size_t best = *hidden.begin();
    std::size_t best_fill = SIZE_MAX;
    for (std::size_t v : hidden) {
      std::set<std::size_t> neighbours;
      for (const auto& f : factors) {
        if (!f.mentions(v)) continue;
        for (std::size_t u : f.vars) {
          if (u != v) neighbours.insert(u);
        }
      }
      std::size_t fill = 0;
      for (auto a = neighbours.begin(); a != neighbours.end(); ++a) {
        for (auto b = std::next(a); b != neighbours.end(); ++b) {
          if (!edges.count({*a, *b})) ++fill;
        }
      }
      if (fill < best_fill || (fill == best_fill && id_rank_[v] < id_rank_[best])) {
        best = v;
        best_fill = fill;
      }
    }
    hidden.erase(best);

    std::vector<Factor> rest;
    std::optional<Factor> bucket;
    for (auto& f : factors) {
      if (!f.mentions(best)) {
        rest.push_back(std::move(f));
      } else {
        bucket = bucket ? detail::multiply(*bucket, f) : std::move(f);
        detail::rescale(*bucket);
      }
    }
    if (bucket) {
      Factor reduced = detail::sum_out(*bucket, best);
      if (!detail::rescale(reduced)) {
        result.impossible = true;
        return result;
      }
      rest.push_back(std::move(reduced));
    }
    factors = std::move(rest);
  }

  Factor joint{{}, {}, {1.0}, 0.0};
  for (const auto& f : factors) {
    joint = detail::multiply(joint, f);
    if (!detail::rescale(joint)) {
      result.impossible = true;
      return result;
    }
  }
  result.unnormalized = std::move(joint.values);
  result.log_scale = joint.log_scale;
  return result;
}

PosteriorSet InferenceEngine::posterior(const Evidence& evidence,
                                        const std::vector<std::string>& query) const {
  const auto observed = resolve(evidence);
  for (const auto& id : query) {
    if (!network_.contains(id)) throw Error(ErrorCode::kValidation, "unknown query node " + id);
  }

  PosteriorSet out;
  bool have_evidence_probability = false;
  for (const auto& id : query) {
    const std::size_t idx = *network_.index_of(id);
    const Node& node = network_.nodes()[idx];
    if (auto it = observed.find(idx); it != observed.end()) {
      std::vector<double> point(node.states.size(), 0.0);
      point[it->second] = 1.0;
      out.marginals[id] = std::move(point);
      continue;
    }
    Result r = eliminate(observed, idx);
    if (r.impossible) impossible(evidence);
    const double total = std::accumulate(r.unnormalized.begin(), r.unnormalized.end(), 0.0);
    std::vector<double> marginal = r.unnormalized;
    for (double& p : marginal) p /= total;
    out.marginals[id] = std::move(marginal);
    if (!have_evidence_probability) {
      out.log_evidence = observed.empty() ? 0.0 : r.log_scale + std::log(total);
      have_evidence_probability = true;
    }
  }

  if (!have_evidence_probability && !observed.empty()) {
    Result r = eliminate(observed, std::nullopt);
    if (r.impossible) impossible(evidence);
    out.log_evidence = r.log_scale + std::log(r.unnormalized.at(0));
  }
  return out;
}

double InferenceEngine::joint_probability(const Evidence& evidence) const {
  const auto observed = resolve(evidence);
  if (observed.empty()) return 1.0;
  Result r = eliminate(observed, std::nullopt);
  if (r.impossible) return 0.0;
  return std::exp(r.log_scale) * r.unnormalized.at(0);
}

PosteriorSet posterior(const Network& network, const Evidence& evidence,
                       const std::vector<std::string>& query) {
  return InferenceEngine(network).posterior(evidence, query);
}

double joint_probability(const Network& network, const Evidence& evidence) {
  return InferenceEngine(network).joint_probability(evidence);
}

PosteriorSet enumerate_joint(const Network& network, const Evidence& evidence,
                             const std::vector<std::string>& query) {
  auto report = validate(network);
  if (!report.ok()) throw Error(ErrorCode::kValidation, report.summary());
  check_evidence(network, evidence);

  const auto& nodes = network.nodes();
  std::uint64_t space = 1;
  for (const auto& node : nodes) {
    space *= node.states.size();
    if (space > kEnumerationLimit) {
      throw Error(ErrorCode::kRefused, "state space exceeds the enumeration limit of 2^24");
    }
  }

  std::vector<ExplicitCpt> cpts;
  std::vector<std::vector<std::size_t>> parent_idx(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    cpts.push_back(effective_cpt(network, nodes[i]));
    for (const auto& p : nodes[i].parents) parent_idx[i].push_back(*network.index_of(p));
  }

  std::vector<std::optional<std::size_t>> fixed(nodes.size());
  for (const auto& [id, state] : evidence.assignments) {
    const std::size_t idx = *network.index_of(id);
    fixed[idx] = *nodes[idx].state_index(state);
  }
  std::vector<std::size_t> query_idx;
  std::vector<std::vector<double>> sums;
  for (const auto& id : query) {
    auto idx = network.index_of(id);
    if (!idx) throw Error(ErrorCode::kValidation, "unknown query node " + id);
    query_idx.push_back(*idx);
    sums.emplace_back(nodes[*idx].states.size(), 0.0);
  }

  std::vector<std::size_t> state(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (fixed[i]) state[i] = *fixed[i];
  }
  double total = 0.0;
  for (;;) {
    double p = 1.0;
    for (std::size_t i = 0; i < nodes.size() && p > 0.0; ++i) {
      std::size_t row = 0;
      for (std::size_t parent : parent_idx[i]) row = row * nodes[parent].states.size() + state[parent];
      p *= cpts[i].rows[row][state[i]];
    }
    total += p;
    for (std::size_t q = 0; q < query_idx.size(); ++q) sums[q][state[query_idx[q]]] += p;

    std::size_t k = nodes.size();
    while (k-- > 0) {
      if (fixed[k]) continue;
      if (++state[k] < nodes[k].states.size()) break;
      state[k] = 0;
    }
    if (k == SIZE_MAX) break;
  }

  if (!(total > 0.0)) impossible(evidence);
  PosteriorSet out;
  out.log_evidence = evidence.empty() ? 0.0 : std::log(total);
  for (std::size_t q = 0; q < query_idx.size(); ++q) {
    for (double& v : sums[q]) v /= total;
    out.marginals[query[q]] = std::move(sums[q]);
  }
  return out;
}

}  // namespace gridbn
