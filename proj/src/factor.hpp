#pragma once

#include <cstddef>
#include <vector>

namespace gridbn::detail {

/// Table factor over discrete variables. `vars` is sorted ascending; the last
/// variable varies fastest. Values are stored relative to exp(log_scale) so
/// long products do not underflow.
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;
  double log_scale = 0.0;

  std::size_t size() const { return values.size(); }
  bool mentions(std::size_t var) const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, std::size_t var);
/// Fixes `var` to `state`, dropping it from the scope.
Factor restrict_to(const Factor& f, std::size_t var, std::size_t state);
/// Divides by the largest entry and folds it into log_scale. Returns false if
/// every entry is zero.
bool rescale(Factor& f);

}  // namespace gridbn::detail
