#pragma once

// Small table-to-text corpus in the style of the character-description data:
// one subject per record, a few facts about it, and a sentence stating them
// with varied phrasing. Records share fact templates, so makeDataset finds
// strict subset/superset references for most of them.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/datagen.hpp"
#include "factedit/neural/tensor.hpp"

namespace factedit {

struct SyntheticOptions {
  std::size_t records = 96;
  std::size_t max_facts = 3;
  std::uint64_t seed = 1;
};

namespace detail {

struct FactKind {
  const char* predicate;
  std::array<const char*, 2> phrasings;  // the object follows the phrase
  std::vector<std::string> objects;
};

inline const std::vector<FactKind>& fact_kinds() {
  static const std::vector<FactKind> kinds{
      {"creator", {"was created by", "is a creation of"},
       {"Duncan_Rouleau", "Steven_T._Seagle", "Stan_Lee", "Jack_Kirby", "Bob_Kane", "Bill_Finger"}},
      {"series", {"appears in", "is featured in"},
       {"Big_Hero_6", "Fantastic_Four", "Detective_Comics", "Sin_City", "Daredevil", "Hellboy"}},
      {"voicedBy", {"is voiced by", "has the voice of"},
       {"Scott_Adsit", "Ryan_Potter", "Kevin_Conroy", "Mark_Hamill", "Tara_Strong", "Jamie_Chung"}},
      {"nationality", {"comes from", "is a native of"},
       {"United_States", "Japan", "France", "Canada", "Italy", "Norway"}},
      {"award", {"won the", "received the"},
       {"Eagle_Award", "Eisner_Award", "Harvey_Award", "Kirby_Award", "Inkpot_Award", "Shazam_Award"}},
  };
  return kinds;
}

inline const std::vector<std::string>& subjects() {
  static const std::vector<std::string> s{
      "Baymax",     "Hiro_Hamada", "Go_Go_Tomago", "Wasabi",   "Honey_Lemon", "Fred",        "Aunt_Cass",
      "Batman",     "Robin",       "Alfred",       "Catwoman", "Joker",       "Thing",       "Human_Torch",
      "Invisible",  "Mr_Fantastic", "Galactus",    "Silver_Surfer", "Elektra", "Bullseye",   "Marv",
      "Hartigan",   "Abe_Sapien",  "Liz_Sherman"};
  return s;
}

}  // namespace detail

/// Deterministic in `opts`. Facts appear in a fixed predicate order; the
/// number of facts per record is 1..max_facts. The phrasing of a fact
/// depends on its object, so the text is a function of the triples.
inline std::vector<CorpusRecord> synthetic_corpus(const SyntheticOptions& opts = {}) {
  const auto& kinds = detail::fact_kinds();
  const auto& subs = detail::subjects();
  const std::size_t max_facts = std::min(std::max<std::size_t>(opts.max_facts, 1), kinds.size());
  nn::Rng rng(opts.seed);
  std::vector<CorpusRecord> out;
  out.reserve(opts.records);
  for (std::size_t r = 0; r < opts.records; ++r) {
    const std::string& subj = subs[rng.below(subs.size())];
    const std::size_t k = 1 + rng.below(max_facts);
    // k consecutive kinds from a random start, in canonical order.
    std::vector<std::size_t> chosen;
    const std::size_t start = rng.below(kinds.size() - k + 1);
    for (std::size_t f = start; f < start + k; ++f) chosen.push_back(f);

    CorpusRecord rec;
    rec.text.push_back(subj);
    for (std::size_t c = 0; c < chosen.size(); ++c) {
      const auto& kind = kinds[chosen[c]];
      const std::size_t o = rng.below(kind.objects.size());
      const std::string& obj = kind.objects[o];
      rec.triples.push_back({subj, kind.predicate, obj});
      if (c > 0) rec.text.push_back(c + 1 == chosen.size() ? "and" : ",");
      for (const auto& w : tokenize(kind.phrasings[o % 2])) rec.text.push_back(w);
      rec.text.push_back(obj);
    }
    rec.text.push_back(".");
    out.push_back(std::move(rec));
  }
  return out;
}

/// The first `count` instances makeDataset produces from a synthetic corpus,
/// growing the corpus until there are enough.
inline Dataset synthetic_dataset(std::size_t count, std::uint64_t seed = 1, std::size_t max_facts = 3) {
  SyntheticOptions opts;
  opts.seed = seed;
  opts.max_facts = max_facts;
  opts.records = std::max<std::size_t>(count + count / 2, 8);
  for (;;) {
    Dataset ds = make_dataset(synthetic_corpus(opts));
    if (ds.instances.size() >= count || opts.records > 64 * (count + 8)) {
      if (ds.instances.size() > count) {
        ds.instances.resize(count);
        ds.modes.resize(count);
      }
      return ds;
    }
    opts.records *= 2;
  }
}

}  // namespace factedit
