#pragma once

// Automatic construction of editing instances from a (triples, text) corpus:
// delexicalize every pair, index revised templates in a store, retrieve for
// each pair a reference whose triple templates are a strict subset or
// superset, rewrite the revised template into a draft template by deletion
// or splicing, and lexicalize the result.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/lcs.hpp"

namespace factedit {

/// Dummy subject introduced by augment_root; never delexicalized.
inline constexpr std::string_view kRootEntity = "ROOT";
inline constexpr std::string_view kRootPredicate = "IsOf";

struct Delexicalized {
  TripleSet triples;  // subj/obj are placeholder renderings
  TokenSeq text;
  EntityMap entities;
};

/// Replaces every triple entity, in the triples and in the text, by a role
/// placeholder. Entities that only occur as subject become AGENT-k, only as
/// object PATIENT-k, both BRIDGE-k; k follows first occurrence in triple order.
inline Delexicalized delexicalize(const TripleSet& triples, const TokenSeq& text) {
  std::set<std::string> as_subj, as_obj;
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& t : triples) {
    as_subj.insert(t.subj);
    as_obj.insert(t.obj);
    for (const auto* e : {&t.subj, &t.obj})
      if (*e != kRootEntity && seen.insert(*e).second) order.push_back(*e);
  }

  Delexicalized out;
  std::map<Role, int> next{{Role::Agent, 1}, {Role::Patient, 1}, {Role::Bridge, 1}};
  std::map<std::string, std::string> rename;
  for (const auto& e : order) {
    bool s = as_subj.count(e) > 0, o = as_obj.count(e) > 0;
    Role role = s && o ? Role::Bridge : (s ? Role::Agent : Role::Patient);
    Placeholder p{role, next[role]++};
    out.entities.insert(p, e);
    rename[e] = p.render();
  }
  auto sub = [&](const std::string& tok) {
    auto it = rename.find(tok);
    return it == rename.end() ? tok : it->second;
  };
  for (const auto& t : triples) out.triples.push_back({sub(t.subj), t.pred, sub(t.obj)});
  out.text.reserve(text.size());
  for (const auto& tok : text) out.text.push_back(sub(tok));
  return out;
}

/// Appends (ROOT, IsOf, e) for every entity e that occurs only as a subject.
inline TripleSet augment_root(const TripleSet& triples) {
  std::set<std::string> as_obj;
  for (const auto& t : triples) as_obj.insert(t.obj);
  TripleSet out = triples;
  std::set<std::string> added;
  for (const auto& t : triples) {
    if (t.subj == kRootEntity || as_obj.count(t.subj) || !added.insert(t.subj).second) continue;
    out.push_back({std::string(kRootEntity), std::string(kRootPredicate), t.subj});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct StoreEntry {
  TokenSeq key;        // revised template
  TripleSet triples;   // triple templates
  EntityMap entities;  // lexicon of the source pair
};

/// Revised template -> (triple templates, entity map); first insertion wins.
class TemplateStore {
 public:
  bool insert(StoreEntry entry) {
    if (index_.count(entry.key)) return false;
    index_.emplace(entry.key, entries_.size());
    entries_.push_back(std::move(entry));
    return true;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<StoreEntry>& entries() const { return entries_; }
  const StoreEntry* find(const TokenSeq& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

 private:
  std::vector<StoreEntry> entries_;
  std::map<TokenSeq, std::size_t> index_;
};

inline TemplateStore build_store(const std::vector<Delexicalized>& delexed) {
  TemplateStore store;
  for (const auto& d : delexed) store.insert({d.text, d.triples, d.entities});
  return store;
}

inline TemplateStore build_store(const std::vector<CorpusRecord>& corpus) {
  std::vector<Delexicalized> delexed;
  delexed.reserve(corpus.size());
  for (const auto& r : corpus) delexed.push_back(delexicalize(r.triples, r.text));
  return build_store(delexed);
}

// ---------------------------------------------------------------------------

enum class EditMode { Insertion, Deletion };

struct ReferenceMatch {
  TokenSeq ref_template;
  TripleSet ref_triples;
  EntityMap ref_entities;
  std::size_t lcs_length = 0;
  EditMode mode = EditMode::Insertion;
  std::size_t store_index = 0;
};

/// Best strict-subset or strict-superset entry by LCS length with `y`; ties go
/// to the smaller symmetric difference, then to the earlier store entry.
inline std::optional<ReferenceMatch> retrieve_reference(const TripleSet& t, const TokenSeq& y,
                                                        const TemplateStore& store) {
  std::optional<ReferenceMatch> best;
  std::size_t best_diff = 0;
  const auto& entries = store.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    EditMode mode;
    if (e.triples.is_strict_subset_of(t)) mode = EditMode::Insertion;
    else if (t.is_strict_subset_of(e.triples)) mode = EditMode::Deletion;
    else continue;
    std::size_t len = lcs_length(y, e.key);
    std::size_t diff = t.size() > e.triples.size() ? t.size() - e.triples.size() : e.triples.size() - t.size();
    if (!best || len > best->lcs_length || (len == best->lcs_length && diff < best_diff)) {
      best = ReferenceMatch{e.key, e.triples, e.entities, len, mode, k};
      best_diff = diff;
    }
  }
  return best;
}

namespace detail {

inline std::set<std::string> placeholders_of(const TripleSet& triples) {
  std::set<std::string> out;
  for (const auto& tr : triples)
    for (const auto* e : {&tr.subj, &tr.obj})
      if (is_placeholder(*e)) out.insert(*e);
  return out;
}

/// Placeholders in `extra` that the `shared` side never mentions.
inline std::set<std::string> exclusive_placeholders(const TripleSet& extra, const TripleSet& shared) {
  auto out = placeholders_of(extra);
  for (const auto& p : placeholders_of(shared)) out.erase(p);
  return out;
}

struct Segment {
  std::size_t begin, end;  // [begin, end)
};

inline std::vector<Segment> off_alignment_segments(std::size_t n, const std::vector<bool>& aligned) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < n;) {
    if (aligned[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !aligned[j]) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

}  // namespace detail

/// Rewrites revised template `y` into a draft template.
///
/// Insertion: non-LCS segments of `y` that mention a placeholder exclusive to
/// the extra triples are removed. Deletion: non-LCS segments of the reference
/// that mention a placeholder exclusive to the reference's extra triples are
/// spliced into `y` right after the aligned token preceding them.
inline TokenSeq synthesize_draft_template(const TokenSeq& y, const ReferenceMatch& match, const TripleSet& t) {
  const auto& ref = match.ref_template;
  const bool insertion = match.mode == EditMode::Insertion;
  if (insertion ? !match.ref_triples.is_strict_subset_of(t) : !t.is_strict_subset_of(match.ref_triples))
    throw std::invalid_argument("reference triples are inconsistent with the match mode");

  const auto exclusive = insertion ? detail::exclusive_placeholders(t.minus(match.ref_triples), match.ref_triples)
                                   : detail::exclusive_placeholders(match.ref_triples.minus(t), t);
  const Alignment align = lcs(y, ref);

  auto check_lcs = [&](const TokenSeq& seq, bool use_first) {
    for (const auto& [i, j] : align) {
      const auto& tok = seq[use_first ? i : j];
      if (exclusive.count(tok)) throw std::invalid_argument("ill-formed match: " + tok + " lies on the shared subsequence");
    }
  };
  auto mentions_exclusive = [&](const TokenSeq& seq, detail::Segment s) {
    for (std::size_t k = s.begin; k < s.end; ++k)
      if (exclusive.count(seq[k])) return true;
    return false;
  };

  TokenSeq out;
  if (insertion) {
    check_lcs(y, true);
    std::vector<bool> aligned(y.size(), false);
    for (const auto& [i, j] : align) aligned[i] = true;
    std::vector<bool> removed(y.size(), false);
    for (const auto& seg : detail::off_alignment_segments(y.size(), aligned))
      if (mentions_exclusive(y, seg))
        for (std::size_t k = seg.begin; k < seg.end; ++k) removed[k] = true;
    for (std::size_t k = 0; k < y.size(); ++k)
      if (!removed[k]) out.push_back(y[k]);
    return out;
  }

  check_lcs(ref, false);
  std::vector<bool> aligned(ref.size(), false);
  for (const auto& [i, j] : align) aligned[j] = true;
  // Splice point keyed by y index of the preceding aligned token; -1 = front.
  std::map<long, std::vector<detail::Segment>> splices;
  for (const auto& seg : detail::off_alignment_segments(ref.size(), aligned)) {
    if (!mentions_exclusive(ref, seg)) continue;
    long anchor = -1;
    for (const auto& [i, j] : align)
      if (j < seg.begin) anchor = static_cast<long>(i);
    splices[anchor].push_back(seg);
  }
  auto emit = [&](long anchor) {
    auto it = splices.find(anchor);
    if (it == splices.end()) return;
    for (const auto& seg : it->second) out.insert(out.end(), ref.begin() + seg.begin, ref.begin() + seg.end);
  };
  emit(-1);
  for (std::size_t k = 0; k < y.size(); ++k) {
    out.push_back(y[k]);
    emit(static_cast<long>(k));
  }
  return out;
}

/// Substitutes entities for placeholders, preferring the instance's own map.
inline TokenSeq lexicalize(const TokenSeq& tmpl, const EntityMap& own, const EntityMap& ref) {
  TokenSeq out;
  out.reserve(tmpl.size());
  for (const auto& tok : tmpl) {
    auto p = Placeholder::parse(tok);
    if (!p) {
      out.push_back(tok);
      continue;
    }
    auto e = own.entity(*p);
    if (!e) e = ref.entity(*p);
    if (!e) throw std::invalid_argument("unresolved placeholder " + tok);
    out.push_back(*e);
  }
  return out;
}

inline TokenSeq lexicalize(const TokenSeq& tmpl, const EntityMap& own) { return lexicalize(tmpl, own, EntityMap{}); }

/// Inverse of lexicalize for a given map.
inline TokenSeq delexicalize_with(const TokenSeq& text, const EntityMap& map) {
  TokenSeq out;
  out.reserve(text.size());
  for (const auto& tok : text) {
    auto p = map.placeholder(tok);
    out.push_back(p ? p->render() : tok);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct MakeDataOptions {
  bool augment_root = false;
};

struct MakeDataReport {
  std::size_t inputs = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t no_reference = 0;
  std::size_t unchanged = 0;         // draft template came out equal to y'
  std::size_t entity_conflicts = 0;  // reference lexicon clashes with own map
};

struct Dataset {
  std::vector<Instance> instances;
  std::vector<EditMode> modes;  // parallel to instances
  MakeDataReport report;
};

inline Dataset make_dataset(const std::vector<CorpusRecord>& corpus, const MakeDataOptions& opts = {}) {
  Dataset ds;
  ds.report.inputs = corpus.size();
  std::vector<TripleSet> triples;
  std::vector<Delexicalized> delexed;
  triples.reserve(corpus.size());
  delexed.reserve(corpus.size());
  for (const auto& r : corpus) {
    triples.push_back(opts.augment_root ? augment_root(r.triples) : r.triples);
    delexed.push_back(delexicalize(triples.back(), r.text));
  }
  const TemplateStore store = build_store(delexed);

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& d = delexed[i];
    auto match = retrieve_reference(d.triples, d.text, store);
    if (!match) {
      ++ds.report.no_reference;
      continue;
    }
    TokenSeq draft_tmpl = synthesize_draft_template(d.text, *match, d.triples);
    if (draft_tmpl == d.text) {
      ++ds.report.unchanged;
      continue;
    }
    // Reference-only placeholders join the instance's map so the draft stays
    // re-delexicalizable.
    EntityMap entities = d.entities;
    bool conflict = false;
    for (const auto& tok : draft_tmpl) {
      auto p = Placeholder::parse(tok);
      if (!p || entities.entity(*p)) continue;
      auto e = match->ref_entities.entity(*p);
      if (!e) throw std::invalid_argument("unresolved placeholder " + tok);
      if (!entities.can_insert(*p, *e)) {
        conflict = true;
        break;
      }
      entities.insert(*p, *e);
    }
    if (conflict) {
      ++ds.report.entity_conflicts;
      continue;
    }
    Instance inst{triples[i], lexicalize(draft_tmpl, entities), corpus[i].text, std::move(entities)};
    if (inst.draft == inst.revised) {
      ++ds.report.unchanged;
      continue;
    }
    (match->mode == EditMode::Insertion ? ds.report.insertions : ds.report.deletions)++;
    ds.modes.push_back(match->mode);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

}  // namespace factedit
