#pragma once

// Fluency (BLEU, SARI, exact match) and fidelity (entity P/R/F1) scores.
// All scores are percentages in [0, 100].

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "factedit/core.hpp"

namespace factedit::metrics {

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(a) + " predictions vs " +
                                std::to_string(b) + " references");
}

using Ngram = std::vector<std::string>;

inline std::map<Ngram, std::size_t> ngram_counts(const TokenSeq& s, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Ngram(s.begin() + i, s.begin() + i + n)];
  return out;
}

inline std::set<Ngram> ngram_set(const TokenSeq& s, std::size_t n) {
  std::set<Ngram> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace(s.begin() + i, s.begin() + i + n);
  return out;
}

inline std::set<Ngram> intersect(const std::set<Ngram>& a, const std::set<Ngram>& b) {
  std::set<Ngram> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline std::set<Ngram> difference(const std::set<Ngram>& a, const std::set<Ngram>& b) {
  std::set<Ngram> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

/// F1 with the empty-set convention: an empty selection has precision 1, an
/// empty relevant set has recall 1; a zero precision or recall scores 0.
inline double f1(std::size_t tp, std::size_t selected, std::size_t relevant) {
  double p = selected ? static_cast<double>(tp) / static_cast<double>(selected) : 1.0;
  double r = relevant ? static_cast<double>(tp) / static_cast<double>(relevant) : 1.0;
  if (p <= 0.0 || r <= 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

}  // namespace detail

/// Corpus BLEU-4: clipped n-gram precisions, uniform weights, brevity penalty.
///
/// Orders for which the predictions contain no n-grams at all are left out of
/// the geometric mean, so a corpus of short sentences still scores itself 100.
inline double bleu(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& refs, std::size_t max_n = 4) {
  detail::require_same_length(preds.size(), refs.size(), "bleu");
  if (preds.empty()) throw std::invalid_argument("bleu: empty corpus");
  std::vector<std::size_t> matched(max_n + 1, 0), total(max_n + 1, 0);
  std::size_t pred_len = 0, ref_len = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    pred_len += preds[k].size();
    ref_len += refs[k].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto pc = detail::ngram_counts(preds[k], n);
      auto rc = detail::ngram_counts(refs[k], n);
      for (const auto& [g, c] : pc) {
        total[n] += c;
        auto it = rc.find(g);
        if (it != rc.end()) matched[n] += std::min(c, it->second);
      }
    }
  }
  if (pred_len == 0) return ref_len == 0 ? 100.0 : 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (total[n] == 0) continue;
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
    ++orders;
  }
  double bp = pred_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(pred_len));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(orders));
}

struct SariScore {
  double overall = 0.0;
  double keep = 0.0;
  double add = 0.0;
  double del = 0.0;
};

/// Sentence-level SARI with deduplicated n-gram sets, a single reference and
/// balanced F1 for all three operations (deletion included).
inline SariScore sari_sentence(const TokenSeq& source, const TokenSeq& pred, const TokenSeq& ref, std::size_t max_n = 4) {
  using detail::difference;
  using detail::intersect;
  SariScore s;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto src = detail::ngram_set(source, n);
    auto prd = detail::ngram_set(pred, n);
    auto tgt = detail::ngram_set(ref, n);

    auto keep_p = intersect(src, prd);
    auto keep_r = intersect(src, tgt);
    s.keep += detail::f1(intersect(keep_p, keep_r).size(), keep_p.size(), keep_r.size());

    auto add_p = difference(prd, src);
    auto add_r = difference(tgt, src);
    s.add += detail::f1(intersect(add_p, add_r).size(), add_p.size(), add_r.size());

    auto del_p = difference(src, prd);
    auto del_r = difference(src, tgt);
    s.del += detail::f1(intersect(del_p, del_r).size(), del_p.size(), del_r.size());
  }
  const double scale = 100.0 / static_cast<double>(max_n);
  s.keep *= scale;
  s.add *= scale;
  s.del *= scale;
  s.overall = (s.keep + s.add + s.del) / 3.0;
  return s;
}

/// Corpus SARI: the mean of sentence scores.
inline SariScore sari(const std::vector<TokenSeq>& sources, const std::vector<TokenSeq>& preds,
                      const std::vector<TokenSeq>& refs) {
  detail::require_same_length(preds.size(), refs.size(), "sari");
  detail::require_same_length(sources.size(), refs.size(), "sari (sources)");
  SariScore total;
  if (preds.empty()) return total;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    auto s = sari_sentence(sources[k], preds[k], refs[k]);
    total.keep += s.keep;
    total.add += s.add;
    total.del += s.del;
  }
  const double n = static_cast<double>(preds.size());
  total.keep /= n;
  total.add /= n;
  total.del /= n;
  total.overall = (total.keep + total.add + total.del) / 3.0;
  return total;
}

inline double exact_match(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& refs) {
  detail::require_same_length(preds.size(), refs.size(), "exact_match");
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) hits += preds[k] == refs[k];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct Fidelity {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Distinct tokens of `text` that belong to the entity inventory.
inline std::set<std::string> extract_entities(const TokenSeq& text, const std::set<std::string>& inventory) {
  std::set<std::string> out;
  for (const auto& tok : text)
    if (inventory.count(tok)) out.insert(tok);
  return out;
}

/// Micro-averaged entity precision/recall/F1. A corpus with no predicted and
/// no reference entities scores 100; otherwise an empty side scores 0.
inline Fidelity fidelity(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& refs,
                         const std::set<std::string>& inventory) {
  detail::require_same_length(preds.size(), refs.size(), "fidelity");
  std::size_t tp = 0, n_pred = 0, n_ref = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    auto p = extract_entities(preds[k], inventory);
    auto r = extract_entities(refs[k], inventory);
    n_pred += p.size();
    n_ref += r.size();
    for (const auto& e : p) tp += r.count(e);
  }
  Fidelity f;
  if (n_pred == 0 && n_ref == 0) return {100.0, 100.0, 100.0};
  f.precision = n_pred ? 100.0 * static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  f.recall = n_ref ? 100.0 * static_cast<double>(tp) / static_cast<double>(n_ref) : 0.0;
  f.f1 = f.precision + f.recall > 0.0 ? 2.0 * f.precision * f.recall / (f.precision + f.recall) : 0.0;
  return f;
}

/// Subjects, objects and mapped entity strings of every instance.
inline std::set<std::string> entity_inventory(const std::vector<Instance>& corpus) {
  std::set<std::string> out;
  for (const auto& inst : corpus) {
    auto e = entity_strings(inst.triples);
    out.insert(e.begin(), e.end());
    for (const auto& [p, s] : inst.entities.entries()) out.insert(s);
  }
  return out;
}

struct EvalReport {
  double bleu = 0.0;
  SariScore sari;
  double em = 0.0;
  Fidelity fidelity;
  std::size_t instances = 0;
  std::size_t words = 0;  // predicted tokens
};

inline EvalReport evaluate(const std::vector<TokenSeq>& preds, const std::vector<Instance>& refs,
                           const std::set<std::string>& inventory) {
  detail::require_same_length(preds.size(), refs.size(), "evaluate");
  std::vector<TokenSeq> sources, targets;
  sources.reserve(refs.size());
  targets.reserve(refs.size());
  for (const auto& r : refs) {
    sources.push_back(r.draft);
    targets.push_back(r.revised);
  }
  EvalReport rep;
  rep.bleu = bleu(preds, targets);
  rep.sari = sari(sources, preds, targets);
  rep.em = exact_match(preds, targets);
  rep.fidelity = fidelity(preds, targets, inventory);
  rep.instances = preds.size();
  for (const auto& p : preds) rep.words += p.size();
  return rep;
}

inline EvalReport evaluate(const std::vector<TokenSeq>& preds, const std::vector<Instance>& refs) {
  return evaluate(preds, refs, entity_inventory(refs));
}

}  // namespace factedit::metrics
