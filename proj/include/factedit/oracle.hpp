#pragma once

// Supervision actions from a (draft, revised) pair via their LCS.

#include <string>

#include "factedit/core.hpp"
#include "factedit/engine.hpp"
#include "factedit/lcs.hpp"

namespace factedit {

/// Keep for draft tokens on the LCS, Gen(w) for revised tokens off it, Drop
/// for draft tokens off it. Within each gap Gens come before Drops.
///
/// Gen needs a non-empty buffer, so the last draft token may only be kept
/// when it aligns with the last revised token; otherwise revised tokens after
/// it could never be generated. `oracle_alignment` is the LCS under that
/// restriction, and equals `lcs(x, y)` whenever that one already satisfies it.
inline Alignment oracle_alignment(const TokenSeq& x, const TokenSeq& y) {
  const std::size_t n = x.size(), m = y.size();
  return lcs_by(n, m, [&](std::size_t i, std::size_t j) { return x[i] == y[j] && (i + 1 < n || j + 1 == m); });
}

inline ActionSequence derive_actions(const TokenSeq& x, const TokenSeq& y) {
  const Alignment align = oracle_alignment(x, y);
  ActionSequence out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  auto close_gap = [&](std::size_t ai, std::size_t aj) {
    for (; j < aj; ++j) out.push_back(Action::gen(y[j]));
    for (; i < ai; ++i) out.push_back(Action::drop());
  };
  for (const auto& [ai, aj] : align) {
    close_gap(ai, aj);
    out.push_back(Action::keep());
    ++i;
    ++j;
  }
  close_gap(x.size(), y.size());
  return out;
}

/// True iff replaying `actions` on `x` consumes it exactly and yields `y`.
inline bool validate(const ActionSequence& actions, const TokenSeq& x, const TokenSeq& y) {
  try {
    return execute(x, actions) == y;
  } catch (const EngineError&) {
    return false;
  }
}

}  // namespace factedit
