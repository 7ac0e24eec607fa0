#include "entropywalks/combinatorics.hpp"

#include <algorithm>
#include <cmath>

#include "entropywalks/error.hpp"

namespace ew {

Mask mask_from_elements(std::span<const int> elements) {
  Mask m = 0;
  for (int e : elements) {
    if (e < 0 || e >= kMaxGround) fail(ErrorCode::InvalidArgument, "element index out of range");
    m |= Mask{1} << e;
  }
  return m;
}

std::vector<int> elements_of(Mask m) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(popcount(m)));
  for (; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

std::vector<Mask> all_combinations(int n, int k) {
  std::vector<Mask> out;
  for_each_combination(n, k, [&](Mask m) { out.push_back(m); });
  return out;
}

}  // namespace ew
