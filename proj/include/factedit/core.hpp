#pragma once

// Domain types shared by every stage of the editing pipeline: facts, token
// sequences, role placeholders, entity maps, instances and edit actions.

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace factedit {

using TokenSeq = std::vector<std::string>;

/// Splits on runs of whitespace. Corpora are expected to be pre-tokenized.
inline TokenSeq tokenize(std::string_view raw) {
  TokenSeq out;
  std::size_t i = 0;
  auto is_space = [](char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
  };
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t start = i;
    while (i < raw.size() && !is_space(raw[i])) ++i;
    if (i > start) out.emplace_back(raw.substr(start, i - start));
  }
  return out;
}

inline std::string join(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline bool is_valid_token(std::string_view tok) {
  if (tok.empty()) return false;
  return std::none_of(tok.begin(), tok.end(), [](char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
  });
}

inline void validate_tokens(const TokenSeq& tokens, std::string_view what) {
  for (const auto& t : tokens)
    if (!is_valid_token(t))
      throw std::invalid_argument(std::string(what) + ": empty or whitespace-bearing token '" + t + "'");
}

// ---------------------------------------------------------------------------
// Facts

struct Triple {
  std::string subj;
  std::string pred;
  std::string obj;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

inline void validate_triple(const Triple& t) {
  if (t.subj.empty() || t.pred.empty() || t.obj.empty())
    throw std::invalid_argument("triple has an empty field");
  if (!is_valid_token(t.subj) || !is_valid_token(t.obj))
    throw std::invalid_argument("triple entity contains whitespace: (" + t.subj + ", " + t.pred + ", " +
                                t.obj + ")");
}

/// Ordered, duplicate-free collection of triples. Position j is the memory slot.
class TripleSet {
 public:
  TripleSet() = default;
  TripleSet(std::initializer_list<Triple> triples) {
    for (const auto& t : triples) push_back(t);
  }
  explicit TripleSet(std::vector<Triple> triples) {
    for (auto& t : triples) push_back(std::move(t));
  }

  void push_back(Triple t) {
    validate_triple(t);
    if (contains(t))
      throw std::invalid_argument("duplicate triple (" + t.subj + ", " + t.pred + ", " + t.obj + ")");
    triples_.push_back(std::move(t));
  }

  bool contains(const Triple& t) const { return std::find(triples_.begin(), triples_.end(), t) != triples_.end(); }

  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const Triple& operator[](std::size_t i) const { return triples_[i]; }
  auto begin() const { return triples_.begin(); }
  auto end() const { return triples_.end(); }
  const std::vector<Triple>& items() const { return triples_; }

  /// Set inclusion, ignoring order.
  bool is_subset_of(const TripleSet& other) const {
    return std::all_of(triples_.begin(), triples_.end(), [&](const Triple& t) { return other.contains(t); });
  }
  bool is_strict_subset_of(const TripleSet& other) const { return size() < other.size() && is_subset_of(other); }
  bool same_set(const TripleSet& other) const { return size() == other.size() && is_subset_of(other); }

  /// Triples of *this that are absent from `other`, in this set's order.
  TripleSet minus(const TripleSet& other) const {
    TripleSet out;
    for (const auto& t : triples_)
      if (!other.contains(t)) out.triples_.push_back(t);
    return out;
  }

  bool operator==(const TripleSet&) const = default;

 private:
  std::vector<Triple> triples_;
};

// ---------------------------------------------------------------------------
// Placeholders

enum class Role { Agent, Patient, Bridge };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::Agent: return "AGENT";
    case Role::Patient: return "PATIENT";
    case Role::Bridge: return "BRIDGE";
  }
  return "?";
}

struct Placeholder {
  Role role = Role::Agent;
  int index = 1;

  std::string render() const { return std::string(role_name(role)) + "-" + std::to_string(index); }

  static std::optional<Placeholder> parse(std::string_view s) {
    auto dash = s.rfind('-');
    if (dash == std::string_view::npos) return std::nullopt;
    auto head = s.substr(0, dash);
    auto digits = s.substr(dash + 1);
    Placeholder p;
    if (head == "AGENT") p.role = Role::Agent;
    else if (head == "PATIENT") p.role = Role::Patient;
    else if (head == "BRIDGE") p.role = Role::Bridge;
    else return std::nullopt;
    if (digits.empty() || digits.front() == '0') return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || value <= 0) return std::nullopt;
    p.index = value;
    return p;
  }

  auto operator<=>(const Placeholder&) const = default;
  bool operator==(const Placeholder&) const = default;
};

inline bool is_placeholder(std::string_view tok) { return Placeholder::parse(tok).has_value(); }

/// Bijection between placeholders and entity surface strings within one instance.
class EntityMap {
 public:
  void insert(const Placeholder& p, const std::string& entity) {
    if (entity.empty()) throw std::invalid_argument("empty entity for " + p.render());
    auto a = by_placeholder_.find(p);
    auto b = by_entity_.find(entity);
    if (a != by_placeholder_.end() && a->second == entity) return;
    if (a != by_placeholder_.end())
      throw std::invalid_argument(p.render() + " already bound to '" + a->second + "'");
    if (b != by_entity_.end())
      throw std::invalid_argument("'" + entity + "' already bound to " + b->second.render());
    by_placeholder_.emplace(p, entity);
    by_entity_.emplace(entity, p);
  }

  /// True when `insert(p, entity)` would succeed.
  bool can_insert(const Placeholder& p, const std::string& entity) const {
    auto a = by_placeholder_.find(p);
    auto b = by_entity_.find(entity);
    if (a != by_placeholder_.end()) return a->second == entity;
    return b == by_entity_.end();
  }

  std::optional<std::string> entity(const Placeholder& p) const {
    auto it = by_placeholder_.find(p);
    if (it == by_placeholder_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<Placeholder> placeholder(const std::string& entity) const {
    auto it = by_entity_.find(entity);
    if (it == by_entity_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return by_placeholder_.size(); }
  bool empty() const { return by_placeholder_.empty(); }
  const std::map<Placeholder, std::string>& entries() const { return by_placeholder_; }

  bool operator==(const EntityMap& o) const { return by_placeholder_ == o.by_placeholder_; }

 private:
  std::map<Placeholder, std::string> by_placeholder_;
  std::map<std::string, Placeholder> by_entity_;
};

// ---------------------------------------------------------------------------
// Instances and actions

struct Instance {
  TripleSet triples;
  TokenSeq draft;
  TokenSeq revised;
  EntityMap entities;

  bool operator==(const Instance&) const = default;
};

/// A raw (triples, text) pair from a table-to-text corpus.
struct CorpusRecord {
  TripleSet triples;
  TokenSeq text;
};

enum class ActionKind { Keep = 0, Drop = 1, Gen = 2 };
inline constexpr std::size_t kNumActions = 3;

inline std::string_view action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::Keep: return "keep";
    case ActionKind::Drop: return "drop";
    case ActionKind::Gen: return "gen";
  }
  return "?";
}

struct Action {
  ActionKind kind = ActionKind::Keep;
  std::string word;  // only for Gen

  static Action keep() { return {ActionKind::Keep, {}}; }
  static Action drop() { return {ActionKind::Drop, {}}; }
  static Action gen(std::string w) {
    if (!is_valid_token(w)) throw std::invalid_argument("Gen requires a non-empty, whitespace-free word");
    return {ActionKind::Gen, std::move(w)};
  }

  std::string to_string() const {
    if (kind == ActionKind::Gen) return "Gen(" + word + ")";
    return kind == ActionKind::Keep ? "Keep" : "Drop";
  }

  bool operator==(const Action&) const = default;
};

using ActionSequence = std::vector<Action>;

inline std::size_t count_kind(const ActionSequence& actions, ActionKind k) {
  return static_cast<std::size_t>(
      std::count_if(actions.begin(), actions.end(), [k](const Action& a) { return a.kind == k; }));
}

inline std::string to_string(const ActionSequence& actions) {
  std::ostringstream os;
  for (std::size_t i = 0; i < actions.size(); ++i) os << (i ? " " : "") << actions[i].to_string();
  return os.str();
}

/// Surface strings of every subject and object.
inline std::set<std::string> entity_strings(const TripleSet& triples) {
  std::set<std::string> out;
  for (const auto& t : triples) {
    out.insert(t.subj);
    out.insert(t.obj);
  }
  return out;
}

}  // namespace factedit
