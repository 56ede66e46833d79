#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace factedit {

/// Index pairs (i in a, j in b), strictly increasing in both coordinates.
using Alignment = std::vector<std::pair<std::size_t, std::size_t>>;

/// One longest common subsequence of two sequences of lengths `n` and `m`
/// under the match predicate `eq(i, j)`, 0-based.
///
/// Among all maximum-length alignments the lexicographically smallest pair
/// sequence is returned: the earliest index in `a` wins, then the earliest
/// in `b`. Quadratic time and memory.
template <class Eq>
Alignment lcs_by(std::size_t n, std::size_t m, Eq&& eq) {
  // suffix[i][j] = LCS length of a[i:], b[j:]
  std::vector<std::uint32_t> suffix((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return suffix[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      at(i, j) = eq(i, j) ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));

  Alignment out;
  out.reserve(at(0, 0));
  std::size_t i0 = 0, j0 = 0;
  while (at(i0, j0) > 0) {
    const std::uint32_t need = at(i0, j0);
    // For a fixed i only the first matching j can start an optimal tail:
    // suffix lengths are non-increasing in j.
    bool found = false;
    for (std::size_t i = i0; i < n && !found; ++i) {
      if (at(i, j0) < need) break;
      for (std::size_t j = j0; j < m; ++j) {
        if (eq(i, j)) {
          if (at(i + 1, j + 1) + 1 == need) {
            out.emplace_back(i, j);
            i0 = i + 1;
            j0 = j + 1;
            found = true;
          }
          break;
        }
      }
    }
    if (!found) break;  // unreachable for a consistent table
  }
  return out;
}

template <class SeqA, class SeqB>
Alignment lcs(const SeqA& a, const SeqB& b) {
  return lcs_by(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return a[i] == b[j]; });
}

/// Length-only LCS, linear memory.
template <class SeqA, class SeqB>
std::size_t lcs_length(const SeqA& a, const SeqB& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace factedit
