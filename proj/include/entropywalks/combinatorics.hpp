#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace ew {

/// A subset of a ground set of at most 64 elements, bit i set iff i is a member.
using Mask = std::uint64_t;

inline constexpr int kMaxGround = 64;

inline int popcount(Mask m) { return std::popcount(m); }

inline Mask low_bits(int n) { return n >= 64 ? ~Mask{0} : ((Mask{1} << n) - 1); }

Mask mask_from_elements(std::span<const int> elements);
std::vector<int> elements_of(Mask m);

/// C(n, k) as a double; 0 when k is outside [0, n].
double binomial(int n, int k);

/// Next mask with the same popcount (Gosper's hack). Returns 0 past the last.
inline Mask next_combination(Mask m) {
  const Mask c = m & (~m + 1);
  const Mask r = m + c;
  if (r == 0) return 0;
  return (((r ^ m) >> 2) / c) | r;
}

/// Calls fn(mask) for every k-subset of {0..n-1}, in increasing mask order.
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  if (k == 0) {
    fn(Mask{0});
    return;
  }
  const Mask limit = low_bits(n);
  for (Mask m = low_bits(k); m != 0 && (m & ~limit) == 0; m = next_combination(m)) fn(m);
}

/// Calls fn(sub) for every size-k submask of `set`.
template <typename Fn>
void for_each_submask_of_size(Mask set, int k, Fn&& fn) {
  const std::vector<int> elems = elements_of(set);
  const int m = static_cast<int>(elems.size());
  for_each_combination(m, k, [&](Mask local) {
    Mask sub = 0;
    for (Mask b = local; b != 0; b &= b - 1) sub |= Mask{1} << elems[std::countr_zero(b)];
    fn(sub);
  });
}

std::vector<Mask> all_combinations(int n, int k);

}  // namespace ew
