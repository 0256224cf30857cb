#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridbn/model.hpp"

namespace gridbn {

/// Observed states keyed by node id.
struct Evidence {
  std::map<std::string, std::string> assignments;

  bool empty() const { return assignments.empty(); }
  bool contains(const std::string& node) const { return assignments.count(node) > 0; }
  Evidence with(const std::string& node, const std::string& state) const;
  /// "A=x, B=y" in key order.
  std::string describe() const;
};

struct PosteriorSet {
  std::map<std::string, std::vector<double>> marginals;
  double log_evidence = 0.0;  // log P(evidence)

  const std::vector<double>& at(const std::string& node) const;
  double evidence_probability() const;
};

/// Throws Error(kValidation) if evidence names unknown or auxiliary nodes or
/// unknown states.
void check_evidence(const Network& network, const Evidence& evidence);

/// Exact inference by variable elimination over a validated network. The
/// engine owns a compiled copy of the network and is safe to share between
/// threads.
class InferenceEngine {
 public:
  /// Validates `network` (Error(kValidation) on failure) and compiles every
  /// node to a table factor.
  explicit InferenceEngine(Network network);

  const Network& network() const { return network_; }

  /// P(node | evidence) for each queried node. Evidence nodes come back as
  /// point masses. Throws Error(kImpossibleEvidence) when P(evidence) = 0.
  PosteriorSet posterior(const Evidence& evidence,
                         const std::vector<std::string>& query) const;

  /// P(evidence); 1 for empty evidence, 0 for impossible evidence.
  double joint_probability(const Evidence& evidence) const;

 private:
  struct Table {
    std::vector<std::size_t> vars;  // sorted node indices
    std::vector<std::size_t> cards;
    std::vector<double> values;
  };
  struct Result {
    std::vector<double> unnormalized;
    double log_scale = 0.0;
    bool impossible = false;
  };
  Result eliminate(const std::map<std::size_t, std::size_t>& observed,
                   std::optional<std::size_t> keep) const;
  std::map<std::size_t, std::size_t> resolve(const Evidence& evidence) const;

  Network network_;
  std::vector<Table> tables_;
  std::vector<std::size_t> id_rank_;
};

PosteriorSet posterior(const Network& network, const Evidence& evidence,
                       const std::vector<std::string>& query);
double joint_probability(const Network& network, const Evidence& evidence);

/// Largest total state space enumerate_joint accepts.
inline constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 24;

/// Brute-force oracle: sums the full joint distribution. Same contract as
/// posterior; refuses (Error(kRefused)) above kEnumerationLimit states.
PosteriorSet enumerate_joint(const Network& network, const Evidence& evidence,
                             const std::vector<std::string>& query);

}  // namespace gridbn
