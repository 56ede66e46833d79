#pragma once

// The neural controller of the transition system. At step t it reads the
// buffer top b_t, the stream state s_t and attends over the triple memory,
// predicts Keep/Drop/Gen, and for Gen picks a word by mixing vocabulary
// generation with copying a triple object.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/engine.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/stats.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/neural/blocks.hpp"
#include "factedit/neural/lstm.hpp"

namespace factedit {

template <class S>
struct FactEditorParams {
  using M = nn::Mat<S>;

  M word_emb, entity_emb, pred_emb;  // one column per vocabulary entry
  M triple_w, triple_b;
  nn::LstmParams<S> buffer_fwd, buffer_bwd;
  M init_w, init_b;
  nn::LstmParams<S> stream;  // input [context; b_t or W_p y]
  M attn_w, attn_v;
  M hidden_w, hidden_b;
  M action_w;
  M word_w;
  M copy_w, copy_v;
  M gate_w, gate_b;
  M proj_w;

  static FactEditorParams zeros(const ModelDims& d, const Vocabulary& v) {
    FactEditorParams p;
    const int db = d.buffer(), dt = d.triple, ds = d.stream_hidden, dz = d.action_hidden;
    p.word_emb = M::Zero(d.word, v.words.size());
    p.entity_emb = M::Zero(d.entity, v.entities.size());
    p.pred_emb = M::Zero(d.predicate, v.predicates.size());
    p.triple_w = M::Zero(dt, 2 * d.entity + d.predicate);
    p.triple_b = M::Zero(dt, 1);
    p.buffer_fwd = nn::LstmParams<S>::zeros(d.word, d.buffer_hidden);
    p.buffer_bwd = nn::LstmParams<S>::zeros(d.word, d.buffer_hidden);
    p.init_w = M::Zero(ds, db + dt);
    p.init_b = M::Zero(ds, 1);
    p.stream = nn::LstmParams<S>::zeros(dt + db, ds);
    p.attn_w = M::Zero(d.attention, ds + db + dt);
    p.attn_v = M::Zero(d.attention, 1);
    p.hidden_w = M::Zero(dz, ds + db + dt);
    p.hidden_b = M::Zero(dz, 1);
    p.action_w = M::Zero(static_cast<int>(kNumActions), dz);
    p.word_w = M::Zero(v.words.size(), dz);
    p.copy_w = M::Zero(d.copy, dz + dt);
    p.copy_v = M::Zero(d.copy, 1);
    p.gate_w = M::Zero(dz, 1);
    p.gate_b = M::Zero(1, 1);
    p.proj_w = M::Zero(db, d.word);
    return p;
  }

  void init(nn::Rng& rng) {
    auto glorot = [&](M& m) { nn::fill_uniform(m, nn::glorot_bound(m.rows(), m.cols()), rng); };
    auto glorot_t = [&](M& m) { nn::fill_uniform(m, nn::glorot_bound(1, m.rows()), rng); };
    nn::fill_uniform(word_emb, 0.1, rng);
    nn::fill_uniform(entity_emb, 0.1, rng);
    nn::fill_uniform(pred_emb, 0.1, rng);
    glorot(triple_w);
    buffer_fwd.init(rng);
    buffer_bwd.init(rng);
    glorot(init_w);
    stream.init(rng);
    glorot(attn_w);
    glorot_t(attn_v);
    glorot(hidden_w);
    glorot(action_w);
    glorot(word_w);
    glorot(copy_w);
    glorot_t(copy_v);
    glorot_t(gate_w);
    glorot(proj_w);
  }

  template <class F>
  void visit(F&& f) {
    f("word_emb", word_emb);
    f("entity_emb", entity_emb);
    f("pred_emb", pred_emb);
    f("triple_w", triple_w);
    f("triple_b", triple_b);
    buffer_fwd.visit("buffer_fwd", f);
    buffer_bwd.visit("buffer_bwd", f);
    f("init_w", init_w);
    f("init_b", init_b);
    stream.visit("stream", f);
    f("attn_w", attn_w);
    f("attn_v", attn_v);
    f("hidden_w", hidden_w);
    f("hidden_b", hidden_b);
    f("action_w", action_w);
    f("word_w", word_w);
    f("copy_w", copy_w);
    f("copy_v", copy_v);
    f("gate_w", gate_w);
    f("gate_b", gate_b);
    f("proj_w", proj_w);
  }
};

/// Vocabulary ids of one (draft, triples) pair. Objects missing from the
/// word vocabulary get extended ids |V| + k so they can still be copied.
struct EditorInput {
  std::vector<int> words;
  std::vector<int> subj, pred, obj;
  std::vector<int> copy_ids;
  std::vector<std::string> extra_words;
};

inline EditorInput prepare_editor_input(const Vocabulary& v, const TokenSeq& x, const TripleSet& triples) {
  EditorInput in;
  for (const auto& w : x) in.words.push_back(v.words.id(w));
  for (const auto& t : triples) {
    in.subj.push_back(v.entities.id(t.subj));
    in.pred.push_back(v.predicates.id(t.pred));
    in.obj.push_back(v.entities.id(t.obj));
    if (v.words.contains(t.obj)) {
      in.copy_ids.push_back(v.words.id(t.obj));
    } else {
      std::size_t k = 0;
      while (k < in.extra_words.size() && in.extra_words[k] != t.obj) ++k;
      if (k == in.extra_words.size()) in.extra_words.push_back(t.obj);
      in.copy_ids.push_back(v.words.size() + static_cast<int>(k));
    }
  }
  return in;
}

/// Extended id of a gold word: vocabulary id, else copy-candidate id, else UNK.
inline int extended_word_id(const Vocabulary& v, const EditorInput& in, const std::string& w) {
  if (v.words.contains(w)) return v.words.id(w);
  for (std::size_t k = 0; k < in.extra_words.size(); ++k)
    if (in.extra_words[k] == w) return v.words.size() + static_cast<int>(k);
  return Vocab::kUnk;
}

template <class S>
struct EditorEncoding {
  nn::Mat<S> parts;    // [e_subj; e_pred; e_obj] per triple
  nn::Mat<S> triples;  // d_t x M
  nn::BiLstmTrace<S> buffer;
  nn::StreamInitTrace<S> init;
  nn::Mat<S> attn_keys, copy_keys;

  const nn::Mat<S>& buffer_reprs() const { return buffer.outputs; }
  const nn::Vec<S>& s1() const { return init.out; }
};

/// Per-step distributions recorded during greedy decoding.
struct DecodeStep {
  std::vector<double> attention;
  std::vector<double> action_probs;
  double word_mass = std::numeric_limits<double>::quiet_NaN();  // total word probability at Gen steps
};

struct DecodeResult {
  ActionSequence actions;
  TokenSeq text;
};

template <class S>
class FactEditor {
 public:
  using Params = FactEditorParams<S>;
  using Vec = nn::Vec<S>;
  using Mat = nn::Mat<S>;

  FactEditor(ModelDims dims, Vocabulary vocab) : dims_(dims), vocab_(std::move(vocab)) {
    dims_.validate();
    params = Params::zeros(dims_, vocab_);
  }
  FactEditor(ModelDims dims, Vocabulary vocab, std::uint64_t seed) : FactEditor(dims, std::move(vocab)) {
    nn::Rng rng(seed);
    params.init(rng);
  }

  Params params;

  const ModelDims& dims() const { return dims_; }
  const Vocabulary& vocab() const { return vocab_; }
  Params zero_grads() const { return Params::zeros(dims_, vocab_); }

  EditorEncoding<S> encode(const EditorInput& in) const {
    if (in.words.empty()) throw std::invalid_argument("encode: empty draft");
    if (in.subj.empty()) throw std::invalid_argument("encode: empty triple set");
    const auto m = static_cast<Eigen::Index>(in.subj.size());
    const auto n = static_cast<Eigen::Index>(in.words.size());
    const auto& p = params;
    EditorEncoding<S> enc;
    const auto de = p.entity_emb.rows(), dp = p.pred_emb.rows();
    enc.parts.resize(2 * de + dp, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      enc.parts.col(j).segment(0, de) = p.entity_emb.col(in.subj[j]);
      enc.parts.col(j).segment(de, dp) = p.pred_emb.col(in.pred[j]);
      enc.parts.col(j).segment(de + dp, de) = p.entity_emb.col(in.obj[j]);
    }
    enc.triples = nn::triple_encode(p.triple_w, p.triple_b, enc.parts);
    Mat xs(p.word_emb.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) xs.col(i) = p.word_emb.col(in.words[i]);
    enc.buffer = nn::bilstm_forward(p.buffer_fwd, p.buffer_bwd, xs);
    enc.init = nn::stream_init(p.init_w, p.init_b, enc.buffer.outputs, enc.triples);
    enc.attn_keys = nn::attention_keys(p.attn_w, dims_.stream_hidden + dims_.buffer(), enc.triples);
    enc.copy_keys = nn::attention_keys(p.copy_w, dims_.action_hidden, enc.triples);
    return enc;
  }

  EditorEncoding<S> encode_instance(const TokenSeq& x, const TripleSet& triples) const {
    return encode(prepare_editor_input(vocab_, x, triples));
  }

  /// Teacher-forced negative log-likelihood of `gold`; adds dL/dtheta into
  /// `grads` when given.
  S loss(const TokenSeq& x, const TripleSet& triples, const ActionSequence& gold, Params* grads = nullptr,
         TeacherStats* stats = nullptr) const {
    return loss(prepare_editor_input(vocab_, x, triples), gold, grads, stats);
  }

  S loss(const EditorInput& in, const ActionSequence& gold, Params* grads = nullptr,
         TeacherStats* stats = nullptr) const;

  DecodeResult decode(const TokenSeq& x, const TripleSet& triples, const DecodeLimits& limits = {},
                      std::vector<DecodeStep>* trace = nullptr) const;

 private:
  struct Step {
    ActionKind kind = ActionKind::Keep;
    Eigen::Index pos = 0;
    nn::AttentionTrace<S> attn;
    nn::ActionTrace<S> act;
    // Gen only
    nn::AttentionTrace<S> copy;
    nn::MixtureTrace<S> mix;
    int target = 0;
    int emb_id = 0;
    // Keep and Gen advance the stream LSTM
    Vec lstm_input;
    nn::LstmStep<S> lstm;
  };

  /// Input id of a word in the extended vocabulary (copied OOV objects read as UNK).
  int embedding_id(int extended) const { return extended < vocab_.words.size() ? extended : Vocab::kUnk; }

  ModelDims dims_;
  Vocabulary vocab_;
};

// ---------------------------------------------------------------------------

template <class S>
S FactEditor<S>::loss(const EditorInput& in, const ActionSequence& gold, Params* grads, TeacherStats* stats) const {
  const auto& p = params;
  const auto enc = encode(in);
  const auto n = static_cast<Eigen::Index>(in.words.size());
  const auto& B = enc.buffer.outputs;
  const auto& T = enc.triples;
  const int ds = dims_.stream_hidden, db = dims_.buffer(), dt = dims_.triple;

  std::vector<Step> steps;
  steps.reserve(gold.size());
  Vec h = enc.init.out, c = Vec::Zero(ds);
  Eigen::Index k = 0;
  S total = S(0);
  TeacherStats st;
  for (const auto& a : gold) {
    if (k >= n) throw std::invalid_argument("gold actions continue after the buffer is empty");
    Step sp;
    sp.kind = a.kind;
    sp.pos = k;
    const Vec bt = B.col(k);
    sp.attn = nn::attend_with_keys(p.attn_w, p.attn_v, nn::concat<S>({&h, &bt}), T, enc.attn_keys);
    sp.act = nn::action_distribution(p.hidden_w, p.hidden_b, p.action_w, h, bt, sp.attn.context);
    const int gold_kind = static_cast<int>(a.kind);
    total += nn::categorical_nll<S>(sp.act.probs, gold_kind, nullptr);
    Eigen::Index best = 0;
    sp.act.probs.maxCoeff(&best);
    ++st.actions;
    if (best == gold_kind) ++st.correct;

    if (a.kind == ActionKind::Gen) {
      if (a.word.empty()) throw std::invalid_argument("gold Gen without a word");
      sp.copy = nn::attend_with_keys(p.copy_w, p.copy_v, sp.act.z(), T, enc.copy_keys);
      sp.mix = nn::word_mixture(p.word_w, p.gate_w, p.gate_b, sp.act.z(), sp.copy.weights);
      sp.target = extended_word_id(vocab_, in, a.word);
      total -= std::log(std::max(nn::mixture_probability(sp.mix, in.copy_ids, sp.target), std::numeric_limits<S>::min()));
      sp.emb_id = embedding_id(sp.target);
      const Vec proj = p.proj_w * p.word_emb.col(sp.emb_id);
      sp.lstm_input = nn::concat<S>({&sp.attn.context, &proj});
    } else if (a.kind == ActionKind::Keep) {
      sp.lstm_input = nn::concat<S>({&sp.attn.context, &bt});
      ++k;
    } else {
      ++k;
    }
    if (a.kind != ActionKind::Drop) {
      sp.lstm = nn::lstm_step(p.stream, sp.lstm_input, h, c);
      h = sp.lstm.h;
      c = sp.lstm.c;
    }
    steps.push_back(std::move(sp));
  }
  if (k != n) throw std::invalid_argument("gold actions leave " + std::to_string(n - k) + " buffer token(s) unread");
  st.loss = static_cast<double>(total);
  if (stats) *stats += st;
  if (!grads) return total;

  // --- backward -------------------------------------------------------------
  auto& g = *grads;
  const auto m = T.cols();
  Mat dB = Mat::Zero(db, n), dT = Mat::Zero(dt, m);
  nn::AttentionGrad<S> attn_acc, copy_acc;
  attn_acc.reset(dims_.attention, dt, m);
  copy_acc.reset(dims_.copy, dt, m);
  nn::OuterProducts<S> stream_in_outer, stream_h_outer, hidden_outer;
  Vec dh = Vec::Zero(ds), dc = Vec::Zero(ds);

  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const Step& sp = *it;
    Vec d_ctx = Vec::Zero(dt);
    Vec d_bt = Vec::Zero(db);
    if (sp.kind != ActionKind::Drop) {
      auto sg = nn::lstm_step_backward(p.stream, sp.lstm, dh, dc);
      stream_in_outer.add(sg.d_pre, sp.lstm_input);
      stream_h_outer.add(sg.d_pre, sp.lstm.h_prev);
      g.stream.bias.col(0) += sg.d_pre;
      const Vec d_in = p.stream.w_input.transpose() * sg.d_pre;
      d_ctx += d_in.head(dt);
      if (sp.kind == ActionKind::Keep) {
        d_bt += d_in.tail(db);
      } else {
        const Vec d_proj = d_in.tail(db);
        g.proj_w.noalias() += d_proj * p.word_emb.col(sp.emb_id).transpose();
        g.word_emb.col(sp.emb_id).noalias() += p.proj_w.transpose() * d_proj;
      }
      dh = sg.d_h_prev;
      dc = sg.d_c_prev;
    }

    Vec d_logits;
    nn::categorical_nll<S>(sp.act.probs, static_cast<int>(sp.kind), &d_logits);
    g.action_w.noalias() += d_logits * sp.act.z().transpose();
    Vec dz = p.action_w.transpose() * d_logits;
    if (sp.kind == ActionKind::Gen) {
      auto mg = nn::mixture_nll_backward(sp.mix, in.copy_ids, sp.target);
      if (mg.d_gen_logits.size()) {
        g.word_w.noalias() += mg.d_gen_logits * sp.act.z().transpose();
        dz.noalias() += p.word_w.transpose() * mg.d_gen_logits;
      }
      g.gate_w.col(0) += mg.d_gate_pre * sp.act.z();
      g.gate_b(0, 0) += mg.d_gate_pre;
      dz += mg.d_gate_pre * p.gate_w.col(0);
      dz += nn::attend_backward(p.copy_w, p.copy_v, T, sp.copy, nullptr, &mg.d_copy, g.copy_v, copy_acc);
    }
    const Vec d_hidden_in = nn::dense_tanh_backward(p.hidden_w, sp.act.hidden, dz, hidden_outer, g.hidden_b);
    dh += d_hidden_in.head(ds);
    d_bt += d_hidden_in.segment(ds, db);
    d_ctx += d_hidden_in.tail(dt);
    const Vec dq = nn::attend_backward(p.attn_w, p.attn_v, T, sp.attn, &d_ctx, nullptr, g.attn_v, attn_acc);
    dh += dq.head(ds);
    d_bt += dq.tail(db);
    dB.col(sp.pos) += d_bt;
  }

  stream_in_outer.flush_into(g.stream.w_input);
  stream_h_outer.flush_into(g.stream.w_hidden);
  hidden_outer.flush_into(g.hidden_w);
  nn::stream_init_backward(p.init_w, enc.init, dh, g.init_w, g.init_b, dB, dT);
  attn_acc.finish(p.attn_w, T, g.attn_w);
  copy_acc.finish(p.copy_w, T, g.copy_w);
  dT += attn_acc.d_memory + copy_acc.d_memory;

  const Mat dX = nn::bilstm_backward(p.buffer_fwd, p.buffer_bwd, enc.buffer, dB, g.buffer_fwd, g.buffer_bwd);
  for (Eigen::Index i = 0; i < n; ++i) g.word_emb.col(in.words[i]) += dX.col(i);

  const Mat d_parts = nn::triple_encode_backward(p.triple_w, enc.parts, T, dT, g.triple_w, g.triple_b);
  const auto de = p.entity_emb.rows(), dp = p.pred_emb.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    g.entity_emb.col(in.subj[j]) += d_parts.col(j).segment(0, de);
    g.pred_emb.col(in.pred[j]) += d_parts.col(j).segment(de, dp);
    g.entity_emb.col(in.obj[j]) += d_parts.col(j).segment(de + dp, de);
  }
  return total;
}

template <class S>
DecodeResult FactEditor<S>::decode(const TokenSeq& x, const TripleSet& triples, const DecodeLimits& limits,
                                   std::vector<DecodeStep>* trace) const {
  limits.validate();
  DecodeResult out;
  if (x.empty()) return out;
  const auto& p = params;
  const auto in = prepare_editor_input(vocab_, x, triples);
  const auto enc = encode(in);
  const auto& B = enc.buffer.outputs;
  const auto& T = enc.triples;
  const int vsize = vocab_.words.size();
  const auto extended = static_cast<Eigen::Index>(vsize + in.extra_words.size());

  Vec h = enc.init.out, c = Vec::Zero(dims_.stream_hidden);
  int run_of_gen = 0;
  auto choose = [&](const EditorState& state) -> Action {
    const Vec bt = B.col(static_cast<Eigen::Index>(state.buffer_index));
    const auto attn = nn::attend_with_keys(p.attn_w, p.attn_v, nn::concat<S>({&h, &bt}), T, enc.attn_keys);
    const auto act = nn::action_distribution(p.hidden_w, p.hidden_b, p.action_w, h, bt, attn.context);
    DecodeStep rec;
    if (trace) {
      rec.attention.assign(attn.weights.data(), attn.weights.data() + attn.weights.size());
      rec.action_probs.assign(act.probs.data(), act.probs.data() + act.probs.size());
    }
    Vec scores = act.probs;
    if (run_of_gen >= limits.max_consecutive_gen) scores(static_cast<int>(ActionKind::Gen)) = S(-1);
    int best = 0;
    for (int a = 1; a < static_cast<int>(kNumActions); ++a)
      if (scores(a) > scores(best)) best = a;
    const auto kind = static_cast<ActionKind>(best);

    Action action;
    if (kind == ActionKind::Gen) {
      const auto copy = nn::attend_with_keys(p.copy_w, p.copy_v, act.z(), T, enc.copy_keys);
      const auto mix = nn::word_mixture(p.word_w, p.gate_w, p.gate_b, act.z(), copy.weights);
      Vec dist = nn::mixture_distribution(mix, in.copy_ids, extended);
      if (trace) rec.word_mass = static_cast<double>(dist.sum());
      dist.head(kNumSpecialWords).setConstant(S(-1));
      Eigen::Index wid = 0;
      for (Eigen::Index w = 1; w < dist.size(); ++w)
        if (dist(w) > dist(wid)) wid = w;
      const int id = static_cast<int>(wid);
      action = Action::gen(id < vsize ? vocab_.words.word(id) : in.extra_words[static_cast<std::size_t>(id - vsize)]);
      const Vec proj = p.proj_w * p.word_emb.col(embedding_id(id));
      const auto ls = nn::lstm_step(p.stream, nn::concat<S>({&attn.context, &proj}), h, c);
      h = ls.h;
      c = ls.c;
      ++run_of_gen;
    } else {
      if (kind == ActionKind::Keep) {
        const auto ls = nn::lstm_step(p.stream, nn::concat<S>({&attn.context, &bt}), h, c);
        h = ls.h;
        c = ls.c;
        action = Action::keep();
      } else {
        action = Action::drop();
      }
      run_of_gen = 0;
    }
    if (trace) trace->push_back(std::move(rec));
    out.actions.push_back(action);
    return action;
  };
  const std::size_t n = x.size();
  const std::size_t bound = n + static_cast<std::size_t>(limits.max_consecutive_gen) * (n + 1);
  auto final_state = run(x, triples, choose, bound);
  out.text = std::move(final_state.stream);
  return out;
}

}  // namespace factedit
