#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "factedit/core.hpp"

namespace factedit {

/// Token <-> id table. Id 0 is always the unknown token.
class Vocab {
 public:
  static constexpr int kUnk = 0;

  Vocab() : Vocab(std::vector<std::string>{"<unk>"}) {}
  explicit Vocab(std::vector<std::string> words) {
    if (words.empty() || words.front() != "<unk>") throw std::invalid_argument("vocabulary must start with <unk>");
    for (auto& w : words) add(std::move(w));
  }

  int add(std::string w) {
    auto it = index_.find(w);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(words_.size());
    index_.emplace(w, id);
    words_.push_back(std::move(w));
    return id;
  }

  /// Id of `w`, or kUnk when absent.
  int id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& w) const { return index_.count(w) > 0; }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocab& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Reserved word ids.
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kSep = 3;
inline constexpr int kText = 4;
inline constexpr int kNumSpecialWords = 5;

inline const std::vector<std::string>& special_words() {
  static const std::vector<std::string> w{"<unk>", "<s>", "</s>", "<sep>", "<text>"};
  return w;
}

struct Vocabulary {
  Vocab words{special_words()};
  Vocab entities;
  Vocab predicates;

  bool operator==(const Vocabulary&) const = default;
};

namespace detail {

/// Adds tokens seen at least `min_freq` times, in order of first occurrence.
class Counter {
 public:
  void see(const std::string& w) {
    if (counts_[w]++ == 0) order_.push_back(w);
  }
  void flush(Vocab& v, int min_freq) const {
    for (const auto& w : order_)
      if (counts_.at(w) >= min_freq) v.add(w);
  }

 private:
  std::map<std::string, int> counts_;
  std::vector<std::string> order_;
};

}  // namespace detail

/// Words come from drafts and revised texts; with `triple_tokens` the
/// subject/predicate/object strings are added too (the encoder-decoder reads
/// them as ordinary source words).
inline Vocabulary build_vocabulary(const std::vector<Instance>& data, int min_freq = 1, bool triple_tokens = false) {
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  detail::Counter words, ents, preds;
  for (const auto& inst : data) {
    for (const auto& t : inst.triples) {
      ents.see(t.subj);
      ents.see(t.obj);
      preds.see(t.pred);
      if (triple_tokens) {
        words.see(t.subj);
        words.see(t.pred);
        words.see(t.obj);
      }
    }
    for (const auto& w : inst.draft) words.see(w);
    for (const auto& w : inst.revised) words.see(w);
  }
  Vocabulary v;
  words.flush(v.words, min_freq);
  ents.flush(v.entities, min_freq);
  preds.flush(v.predicates, min_freq);
  return v;
}

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  return {{"words", v.words.words()}, {"entities", v.entities.words()}, {"predicates", v.predicates.words()}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.words = Vocab(j.at("words").get<std::vector<std::string>>());
  v.entities = Vocab(j.at("entities").get<std::vector<std::string>>());
  v.predicates = Vocab(j.at("predicates").get<std::vector<std::string>>());
  const auto& sw = special_words();
  for (int i = 0; i < kNumSpecialWords; ++i)
    if (i >= v.words.size() || v.words.word(i) != sw[static_cast<std::size_t>(i)])
      throw std::invalid_argument("word vocabulary lacks reserved token " + sw[static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace factedit
