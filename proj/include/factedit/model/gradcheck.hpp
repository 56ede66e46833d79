#pragma once

// Finite-difference checks of both models on randomly generated tiny
// configurations (dims <= 8, vocabulary <= 20, N <= 6, M <= 3).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/neural/gradcheck.hpp"
#include "factedit/oracle.hpp"

namespace factedit {

struct TinyCase {
  ModelDims dims;
  Instance instance;
  ActionSequence gold;
};

/// `gen_free` makes revised == draft, so the gold sequence is all Keep.
inline TinyCase random_tiny_case(std::uint64_t seed, bool gen_free = false) {
  nn::Rng rng(seed);
  auto dim = [&] { return 2 + static_cast<int>(rng.below(5)); };
  TinyCase tc;
  tc.dims = {dim(), dim(), dim(), dim(), dim(), dim(), dim(), dim(), dim()};

  const std::vector<std::string> words{"the", "is", "of", "by", "a", "."};
  const std::vector<std::string> entities{"Ann", "Bob", "Cy", "Dee"};
  const std::vector<std::string> preds{"born_in", "likes"};
  const std::size_t m = 1 + rng.below(3);
  while (tc.instance.triples.size() < m) {
    Triple t{entities[rng.below(entities.size())], preds[rng.below(preds.size())], entities[rng.below(entities.size())]};
    if (!tc.instance.triples.contains(t)) tc.instance.triples.push_back(t);
  }
  auto token = [&] {
    if (rng.below(3) == 0) return tc.instance.triples[rng.below(m)].obj;
    return words[rng.below(words.size())];
  };
  const std::size_t n = 2 + rng.below(5);
  for (std::size_t i = 0; i < n; ++i) tc.instance.draft.push_back(token());
  if (gen_free) {
    tc.instance.revised = tc.instance.draft;
  } else {
    const std::size_t len = 1 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) tc.instance.revised.push_back(token());
  }
  tc.gold = derive_actions(tc.instance.draft, tc.instance.revised);
  return tc;
}

struct GradCheckRun {
  std::string model;
  std::uint64_t seed = 0;
  nn::GradCheckReport report;
};

/// `corrupt` names a tensor whose analytic gradient is perturbed before
/// comparison (fault injection).
inline GradCheckRun check_fact_editor(const TinyCase& tc, std::uint64_t seed, const nn::GradCheckOptions& opt = {},
                                      const std::optional<std::string>& corrupt = std::nullopt) {
  FactEditor<double> model(tc.dims, build_vocabulary({tc.instance}), seed);
  auto grads = model.zero_grads();
  model.loss(tc.instance.draft, tc.instance.triples, tc.gold, &grads);
  if (corrupt)
    grads.visit([&](const std::string& name, nn::Mat<double>& g) {
      if (name == *corrupt) g.array() += 0.5;
    });
  auto loss = [&](const FactEditorParams<double>&) {
    return model.loss(tc.instance.draft, tc.instance.triples, tc.gold);
  };
  return {"facteditor", seed, nn::grad_check<double>(model.params, grads, loss, opt)};
}

inline GradCheckRun check_encdec(const TinyCase& tc, std::uint64_t seed, const nn::GradCheckOptions& opt = {},
                                 const std::optional<std::string>& corrupt = std::nullopt) {
  EncDec<double> model(tc.dims, build_vocabulary({tc.instance}, 1, true), seed);
  auto grads = model.zero_grads();
  model.loss(tc.instance.draft, tc.instance.triples, tc.instance.revised, &grads);
  if (corrupt)
    grads.visit([&](const std::string& name, nn::Mat<double>& g) {
      if (name == *corrupt) g.array() += 0.5;
    });
  auto loss = [&](const EncDecParams<double>&) {
    return model.loss(tc.instance.draft, tc.instance.triples, tc.instance.revised);
  };
  return {"encdec", seed, nn::grad_check<double>(model.params, grads, loss, opt)};
}

/// Runs both models on `configs` random tiny cases derived from `seed`.
inline std::vector<GradCheckRun> grad_check_suite(std::uint64_t seed, int configs, const nn::GradCheckOptions& opt = {}) {
  std::vector<GradCheckRun> out;
  nn::Rng rng(seed);
  for (int k = 0; k < configs; ++k) {
    const auto case_seed = rng.next();
    const auto init_seed = rng.next();
    const auto tc = random_tiny_case(case_seed);
    out.push_back(check_fact_editor(tc, init_seed, opt));
    out.push_back(check_encdec(tc, init_seed, opt));
  }
  return out;
}

}  // namespace factedit
