#pragma once

// Block balancing of a nonincreasing sequence: N = l m values are dealt to l
// blocks of m in m rounds; round k hands indices (k-1)l+1..kl to the blocks in
// ascending order of their partial sums, so the largest remaining value goes
// to the lightest block. The spread of the block sums never exceeds d_1.

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rilab {

template <class T>
struct BalanceResult {
  std::vector<std::size_t> sigma;  // 1-based, slot (j-1)m + k holds the index dealt to block j in round k
  std::vector<T> blocks;           // b_j
  T spread{};                      // max b_i - min b_j
  std::vector<T> round_spreads;    // spread of the partial sums after each round
  bool bound_ok = false;           // spread <= d_1
};

template <class T>
void check_balance_instance(std::span<const T> d, std::size_t l, std::size_t m) {
  if (l == 0 || m == 0) throw std::invalid_argument("balance: l and m must be positive");
  if (d.size() != l * m) {
    throw std::invalid_argument("balance: length " + std::to_string(d.size()) + " is not l*m = " +
                                std::to_string(l * m));
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < T{}) throw std::invalid_argument("balance: negative entry");
    if (i > 0 && d[i] > d[i - 1]) throw std::invalid_argument("balance: d must be nonincreasing");
  }
}

template <class T>
BalanceResult<T> balance_permutation(std::span<const T> d, std::size_t l, std::size_t m) {
  check_balance_instance(d, l, m);
  BalanceResult<T> out;
  out.sigma.assign(l * m, 0);
  std::vector<T> partial(l, T{});
  std::vector<std::size_t> order(l);
  for (std::size_t k = 0; k < m; ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // ties keep ascending block index
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return partial[a] < partial[b]; });
    for (std::size_t r = 0; r < l; ++r) {
      const std::size_t index = k * l + r;  // 0-based
      const std::size_t block = order[r];
      out.sigma[block * m + k] = index + 1;
      partial[block] += d[index];
    }
    const auto [lo, hi] = std::minmax_element(partial.begin(), partial.end());
    const T spread = *hi - *lo;
    if (spread > d[0]) throw std::logic_error("balance: partial-sum spread exceeds d_1 after a round");
    out.round_spreads.push_back(spread);
  }
  out.blocks = partial;
  out.spread = out.round_spreads.back();
  out.bound_ok = out.spread <= d[0];
  return out;
}

template <class T>
BalanceResult<T> balance_permutation(const std::vector<T>& d, std::size_t l, std::size_t m) {
  return balance_permutation(std::span<const T>(d), l, m);
}

/// Recomputes the block sums of sigma from scratch; false if sigma is not a
/// permutation or does not respect the round structure.
template <class T>
bool verify_balance(std::span<const T> d, std::size_t l, std::size_t m, const BalanceResult<T>& r) {
  if (r.sigma.size() != l * m) return false;
  std::vector<bool> seen(l * m, false);
  for (std::size_t j = 0; j < l; ++j) {
    T b{};
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t s = r.sigma[j * m + k];
      if (s < k * l + 1 || s > (k + 1) * l || seen[s - 1]) return false;
      seen[s - 1] = true;
      b += d[s - 1];
    }
    if (b != r.blocks[j]) return false;
  }
  const auto [lo, hi] = std::minmax_element(r.blocks.begin(), r.blocks.end());
  return *hi - *lo == r.spread && r.spread <= d[0];
}

}  // namespace rilab
