#include "factor.hpp"

#include <algorithm>
#include <cmath>

namespace gridbn::detail {

bool Factor::mentions(std::size_t var) const {
  return std::binary_search(vars.begin(), vars.end(), var);
}

namespace {

// Stride of each variable of `f` inside an assignment counter over `scope`.
std::vector<std::size_t> strides_in(const Factor& f, const std::vector<std::size_t>& scope) {
  std::vector<std::size_t> own(f.vars.size());
  std::size_t stride = 1;
  for (std::size_t k = f.vars.size(); k-- > 0;) {
    own[k] = stride;
    stride *= f.cards[k];
  }
  std::vector<std::size_t> out(scope.size(), 0);
  for (std::size_t k = 0; k < f.vars.size(); ++k) {
    auto pos = std::lower_bound(scope.begin(), scope.end(), f.vars[k]) - scope.begin();
    out[static_cast<std::size_t>(pos)] = own[k];
  }
  return out;
}

}  // namespace

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  std::size_t total = 1;
  for (std::size_t v : out.vars) {
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    std::size_t card = (ia != a.vars.end() && *ia == v)
                           ? a.cards[static_cast<std::size_t>(ia - a.vars.begin())]
                           : b.cards[static_cast<std::size_t>(
                                 std::lower_bound(b.vars.begin(), b.vars.end(), v) -
                                 b.vars.begin())];
    out.cards.push_back(card);
    total *= card;
  }
  out.values.resize(total);
  out.log_scale = a.log_scale + b.log_scale;

  const auto sa = strides_in(a, out.vars);
  const auto sb = strides_in(b, out.vars);
  std::vector<std::size_t> counter(out.vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    out.values[i] = a.values[ia] * b.values[ib];
    // Odometer increment, last variable fastest.
    for (std::size_t k = out.vars.size(); k-- > 0;) {
      if (++counter[k] < out.cards[k]) {
        ia += sa[k];
        ib += sb[k];
        break;
      }
      ia -= sa[k] * (out.cards[k] - 1);
      ib -= sb[k] * (out.cards[k] - 1);
      counter[k] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end() || *it != var) return f;
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());

  Factor out;
  out.log_scale = f.log_scale;
  out.vars = f.vars;
  out.cards = f.cards;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));

  std::size_t inner = 1;
  for (std::size_t k = pos + 1; k < f.cards.size(); ++k) inner *= f.cards[k];
  const std::size_t card = f.cards[pos];
  const std::size_t outer = f.values.size() / (inner * card);
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < card; ++s) {
      const double* src = &f.values[(o * card + s) * inner];
      double* dst = &out.values[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return out;
}

Factor restrict_to(const Factor& f, std::size_t var, std::size_t state) {
  auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end() || *it != var) return f;
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());

  Factor out;
  out.log_scale = f.log_scale;
  out.vars = f.vars;
  out.cards = f.cards;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));

  std::size_t inner = 1;
  for (std::size_t k = pos + 1; k < f.cards.size(); ++k) inner *= f.cards[k];
  const std::size_t card = f.cards[pos];
  const std::size_t outer = f.values.size() / (inner * card);
  out.values.resize(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = &f.values[(o * card + state) * inner];
    std::copy(src, src + inner, &out.values[o * inner]);
  }
  return out;
}

bool rescale(Factor& f) {
  double peak = 0.0;
  for (double v : f.values) peak = std::max(peak, v);
  if (peak <= 0.0) return false;
  for (double& v : f.values) v /= peak;
  f.log_scale += std::log(peak);
  return true;
}

}  // namespace gridbn::detail
