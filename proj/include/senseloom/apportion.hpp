#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "senseloom/error.hpp"

namespace senseloom {

// Largest-remainder (Hamilton) apportionment of `total` units in proportion
// to `weights`. Ties on the remainder go to the lower index. Exact integer
// arithmetic throughout.
inline std::vector<std::uint64_t> apportion(std::uint64_t total,
                                            std::span<const std::uint64_t> weights) {
  using u128 = unsigned __int128;
  const u128 sum = std::accumulate(weights.begin(), weights.end(), u128{0});
  std::vector<std::uint64_t> out(weights.size(), 0);
  if (weights.empty()) return out;
  if (sum == 0) {
    if (total != 0) fail(ErrorKind::parameter, "apportion: all weights are zero");
    return out;
  }
  std::vector<u128> rem(weights.size());
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const u128 q = static_cast<u128>(total) * weights[i];
    out[i] = static_cast<std::uint64_t>(q / sum);
    rem[i] = q % sum;
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
  return out;
}

inline std::vector<std::uint64_t> apportion(std::uint64_t total,
                                            std::initializer_list<std::uint64_t> weights) {
  const std::vector<std::uint64_t> w(weights);
  return apportion(total, std::span<const std::uint64_t>(w));
}

// round(numer/denom * x) with halves rounded up.
inline std::uint64_t round_share(std::uint64_t x, std::uint64_t numer, std::uint64_t denom) {
  return (2 * x * numer + denom) / (2 * denom);
}

}  // namespace senseloom
