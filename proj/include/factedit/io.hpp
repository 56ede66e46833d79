#pragma once

// Line-delimited JSON readers and writers for corpora, instances, action
// sequences and predictions. Every writer emits one compact record per line
// with keys in a fixed order, so output files are byte-reproducible.

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "factedit/core.hpp"

namespace factedit {

/// Malformed input; the message carries the 1-based line number.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

using json = nlohmann::json;

inline const json& require_field(const json& rec, const char* key) {
  if (!rec.is_object()) throw std::invalid_argument("record is not an object");
  auto it = rec.find(key);
  if (it == rec.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

inline TokenSeq tokens_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be a token list");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string()) throw std::invalid_argument(std::string(what) + " holds a non-string token");
    out.push_back(t.get<std::string>());
  }
  validate_tokens(out, what);
  return out;
}

inline TripleSet triples_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("triples must be a list");
  TripleSet out;
  for (const auto& t : j) {
    Triple tr{require_field(t, "subj").get<std::string>(), require_field(t, "pred").get<std::string>(),
              require_field(t, "obj").get<std::string>()};
    out.push_back(std::move(tr));
  }
  return out;
}

inline json triples_to_json(const TripleSet& triples) {
  json arr = json::array();
  for (const auto& t : triples) {
    json o = json::object();
    o["subj"] = t.subj;
    o["pred"] = t.pred;
    o["obj"] = t.obj;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline EntityMap entities_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("entities must be an object");
  EntityMap out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto p = Placeholder::parse(it.key());
    if (!p) throw std::invalid_argument("bad placeholder '" + it.key() + "'");
    out.insert(*p, it.value().get<std::string>());
  }
  return out;
}

inline json entities_to_json(const EntityMap& m) {
  json o = json::object();
  for (const auto& [p, e] : m.entries()) o[p.render()] = e;
  return o;
}

/// Runs `fn(record, line_no)` over every non-blank line; wraps failures in FormatError.
template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), line_no);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(line_no, e.what());
    }
  }
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// --- instances -------------------------------------------------------------

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json o = nlohmann::json::object();
  o["triples"] = detail::triples_to_json(inst.triples);
  o["draft"] = inst.draft;
  o["revised"] = inst.revised;
  o["entities"] = detail::entities_to_json(inst.entities);
  return o;
}

inline Instance instance_from_json(const nlohmann::json& rec) {
  Instance inst;
  inst.triples = detail::triples_from_json(detail::require_field(rec, "triples"));
  inst.draft = detail::tokens_from_json(detail::require_field(rec, "draft"), "draft");
  inst.revised = detail::tokens_from_json(detail::require_field(rec, "revised"), "revised");
  auto it = rec.find("entities");
  if (it != rec.end()) inst.entities = detail::entities_from_json(*it);
  return inst;
}

inline std::vector<Instance> read_instances(std::istream& in) {
  std::vector<Instance> out;
  detail::for_each_record(in, [&](const nlohmann::json& rec, std::size_t) { out.push_back(instance_from_json(rec)); });
  return out;
}

inline void write_instances(std::ostream& out, const std::vector<Instance>& instances) {
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

inline std::vector<Instance> read_instances(const std::string& path) {
  auto in = detail::open_in(path);
  return read_instances(in);
}

inline void write_instances(const std::string& path, const std::vector<Instance>& instances) {
  auto out = detail::open_out(path);
  write_instances(out, instances);
}

// --- raw corpus ------------------------------------------------------------
// {"triples": [...], "text": "raw whitespace-tokenized text"}; a token list is
// accepted for "text" as well.

inline std::vector<CorpusRecord> read_corpus(std::istream& in) {
  std::vector<CorpusRecord> out;
  detail::for_each_record(in, [&](const nlohmann::json& rec, std::size_t) {
    CorpusRecord r;
    r.triples = detail::triples_from_json(detail::require_field(rec, "triples"));
    const auto& text = detail::require_field(rec, "text");
    r.text = text.is_string() ? tokenize(text.get<std::string>()) : detail::tokens_from_json(text, "text");
    out.push_back(std::move(r));
  });
  return out;
}

inline void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& corpus) {
  for (const auto& r : corpus) {
    nlohmann::json o = nlohmann::json::object();
    o["triples"] = detail::triples_to_json(r.triples);
    o["text"] = join(r.text);
    out << o.dump() << '\n';
  }
}

inline std::vector<CorpusRecord> read_corpus(const std::string& path) {
  auto in = detail::open_in(path);
  return read_corpus(in);
}

inline void write_corpus(const std::string& path, const std::vector<CorpusRecord>& corpus) {
  auto out = detail::open_out(path);
  write_corpus(out, corpus);
}

// --- actions ---------------------------------------------------------------

inline nlohmann::json actions_to_json(const ActionSequence& actions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : actions) {
    nlohmann::json o = nlohmann::json::object();
    o["kind"] = std::string(action_kind_name(a.kind));
    if (a.kind == ActionKind::Gen) o["word"] = a.word;
    arr.push_back(std::move(o));
  }
  nlohmann::json rec = nlohmann::json::object();
  rec["actions"] = std::move(arr);
  return rec;
}

inline ActionSequence actions_from_json(const nlohmann::json& rec) {
  const auto& arr = detail::require_field(rec, "actions");
  if (!arr.is_array()) throw std::invalid_argument("actions must be a list");
  ActionSequence out;
  for (const auto& a : arr) {
    auto kind = detail::require_field(a, "kind").get<std::string>();
    auto word = a.find("word");
    if (kind == "keep" || kind == "drop") {
      if (word != a.end()) throw std::invalid_argument(kind + " action must not carry a word");
      out.push_back(kind == "keep" ? Action::keep() : Action::drop());
    } else if (kind == "gen") {
      if (word == a.end()) throw std::invalid_argument("gen action without word");
      out.push_back(Action::gen(word->get<std::string>()));
    } else {
      throw std::invalid_argument("unknown action kind '" + kind + "'");
    }
  }
  return out;
}

inline std::vector<ActionSequence> read_actions(std::istream& in) {
  std::vector<ActionSequence> out;
  detail::for_each_record(in, [&](const nlohmann::json& rec, std::size_t) { out.push_back(actions_from_json(rec)); });
  return out;
}

inline void write_actions(std::ostream& out, const std::vector<ActionSequence>& seqs) {
  for (const auto& s : seqs) out << actions_to_json(s).dump() << '\n';
}

inline std::vector<ActionSequence> read_actions(const std::string& path) {
  auto in = detail::open_in(path);
  return read_actions(in);
}

inline void write_actions(const std::string& path, const std::vector<ActionSequence>& seqs) {
  auto out = detail::open_out(path);
  write_actions(out, seqs);
}

// --- predictions: {"revised": [tokens]} -----------------------------------

inline std::vector<TokenSeq> read_predictions(std::istream& in) {
  std::vector<TokenSeq> out;
  detail::for_each_record(in, [&](const nlohmann::json& rec, std::size_t) {
    out.push_back(detail::tokens_from_json(detail::require_field(rec, "revised"), "revised"));
  });
  return out;
}

inline void write_predictions(std::ostream& out, const std::vector<TokenSeq>& preds) {
  for (const auto& p : preds) {
    nlohmann::json o = nlohmann::json::object();
    o["revised"] = p;
    out << o.dump() << '\n';
  }
}

inline std::vector<TokenSeq> read_predictions(const std::string& path) {
  auto in = detail::open_in(path);
  return read_predictions(in);
}

inline void write_predictions(const std::string& path, const std::vector<TokenSeq>& preds) {
  auto out = detail::open_out(path);
  write_predictions(out, preds);
}

}  // namespace factedit
