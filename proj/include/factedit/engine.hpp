#pragma once

// Symbolic transition system over a buffer (the draft), a stream (the text
// produced so far) and a memory (the triples). Keep copies the buffer top to
// the stream and advances, Drop advances, Gen appends a word without
// advancing. Execution ends when the buffer is exhausted.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "factedit/core.hpp"

namespace factedit {

class EngineError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct EditorState {
  std::shared_ptr<const TokenSeq> buffer;
  std::shared_ptr<const TripleSet> memory;
  std::size_t buffer_index = 0;  // tokens consumed so far
  TokenSeq stream;
  std::size_t step = 1;

  std::size_t buffer_size() const { return buffer ? buffer->size() : 0; }
  bool terminal() const { return buffer_index >= buffer_size(); }
  const std::string& top() const {
    if (terminal()) throw EngineError("buffer is empty");
    return (*buffer)[buffer_index];
  }
  std::size_t remaining() const { return buffer_size() - buffer_index; }
};

inline EditorState init_state(TokenSeq draft, TripleSet triples) {
  EditorState s;
  s.buffer = std::make_shared<const TokenSeq>(std::move(draft));
  s.memory = std::make_shared<const TripleSet>(std::move(triples));
  return s;
}

/// One transition. Takes the state by value so callers can move it in.
inline EditorState apply_action(EditorState s, const Action& a) {
  if (s.terminal()) throw EngineError("action " + a.to_string() + " on a terminal state");
  switch (a.kind) {
    case ActionKind::Keep:
      s.stream.push_back((*s.buffer)[s.buffer_index]);
      ++s.buffer_index;
      break;
    case ActionKind::Drop:
      ++s.buffer_index;
      break;
    case ActionKind::Gen:
      if (a.word.empty()) throw EngineError("Gen with an empty word");
      s.stream.push_back(a.word);
      break;
  }
  ++s.step;
  return s;
}

/// Replays `actions` over `draft`; the actions must consume the buffer exactly.
inline TokenSeq execute(const TokenSeq& draft, const ActionSequence& actions, const TripleSet& triples = {}) {
  EditorState s = init_state(draft, triples);
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (s.terminal())
      throw EngineError("premature termination: " + std::to_string(actions.size() - k) +
                        " action(s) left after the buffer emptied");
    s = apply_action(std::move(s), actions[k]);
  }
  if (!s.terminal())
    throw EngineError("under-consumption: " + std::to_string(s.remaining()) + " buffer token(s) left");
  return std::move(s.stream);
}

/// Drives the engine with a controller `choose(const EditorState&) -> Action`
/// until the buffer is empty. `max_steps` guards against a controller that
/// never consumes.
template <class Controller>
EditorState run(const TokenSeq& draft, const TripleSet& triples, Controller&& choose, std::size_t max_steps) {
  EditorState s = init_state(draft, triples);
  while (!s.terminal()) {
    if (s.step > max_steps) throw EngineError("controller exceeded " + std::to_string(max_steps) + " steps");
    Action a = choose(static_cast<const EditorState&>(s));
    s = apply_action(std::move(s), a);
  }
  return s;
}

}  // namespace factedit
