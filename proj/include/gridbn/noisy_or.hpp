#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "gridbn/model.hpp"

namespace gridbn {

/// P(Y = 1) for the given cause presence flags. Each flag must be exactly
/// 0 or 1; fractional presence is rejected with Error(kParameter).
double noisy_or_probability(const NoisyOrParams& params,
                            std::span<const double> present);

/// Expands a Noisy-OR node into its explicit table (2^n rows). Requires every
/// parent to be binary; throws Error(kUnsupportedStructure) otherwise.
ExplicitCpt compile_noisy_or(const Network& network, const Node& node);

/// Explicit table of any node: stored rows, or the compiled Noisy-OR.
ExplicitCpt effective_cpt(const Network& network, const Node& node);

/// Inserts auxiliary aggregators so that no Noisy-OR child keeps more than
/// `max_parents_per_child` parents. Parents are grouped left to right in
/// declared order; the leak stays on the original child. Children with
/// explicit CPTs are left alone.
std::pair<Network, DivorcePlan> divorce(const Network& network,
                                        std::size_t max_parents_per_child);

}  // namespace gridbn
