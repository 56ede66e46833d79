#pragma once

// The computational blocks of the editor, each with a forward pass that keeps
// a trace and a hand-derived backward pass:
//
//   triple encoder     t_j   = tanh(W [e_subj; e_pred; e_obj] + b)
//   stream init        s_1   = tanh(W [mean(b); mean(t)] + b)
//   additive attention a_j  ∝ exp(v . tanh(W [query; m_j])),  ctx = sum a_j m_j
//   action head        z     = tanh(W [s; b; ctx] + b),  P(a) = softmax(W_a z)
//   word mixture       P(w)  = g P_gen(w) + (1 - g) sum_{j: o_j = w} P_copy(j)
//
// Weight gradients are accumulated into caller-provided matrices.

#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include "factedit/neural/lstm.hpp"
#include "factedit/neural/tensor.hpp"

namespace factedit::nn {

// --- triple encoder ----------------------------------------------------------

/// Columns of `parts` are [e_subj; e_pred; e_obj] per triple; returns t (d_t x M).
template <class S>
Mat<S> triple_encode(const Mat<S>& w, const Mat<S>& b, const Mat<S>& parts) {
  require_cols(w, parts.rows(), "triple encoder");
  require(b.rows() == w.rows(), "triple encoder bias size");
  Mat<S> pre = w * parts;
  pre.colwise() += b.col(0);
  return pre.array().tanh().matrix();
}

template <class S>
Vec<S> triple_embed(const Mat<S>& w, const Mat<S>& b, const Vec<S>& e_subj, const Vec<S>& e_pred, const Vec<S>& e_obj) {
  Mat<S> parts = concat<S>({&e_subj, &e_pred, &e_obj});
  return triple_encode(w, b, parts).col(0);
}

/// Returns d_parts; adds into dw/db.
template <class S>
Mat<S> triple_encode_backward(const Mat<S>& w, const Mat<S>& parts, const Mat<S>& out, const Mat<S>& d_out, Mat<S>& dw,
                              Mat<S>& db) {
  Mat<S> d_pre = (d_out.array() * (S(1) - out.array().square())).matrix();
  dw.noalias() += d_pre * parts.transpose();
  db.col(0) += d_pre.rowwise().sum();
  return w.transpose() * d_pre;
}

// --- stream initialisation ---------------------------------------------------

template <class S>
struct StreamInitTrace {
  Vec<S> input;  // [mean(b); mean(t)]
  Vec<S> out;
};

template <class S>
StreamInitTrace<S> stream_init(const Mat<S>& w, const Mat<S>& b, const Mat<S>& buffer, const Mat<S>& triples) {
  require(buffer.cols() > 0, "stream init: empty buffer");
  require(triples.cols() > 0, "stream init: empty memory");
  StreamInitTrace<S> tr;
  tr.input.resize(buffer.rows() + triples.rows());
  tr.input.head(buffer.rows()) = buffer.rowwise().mean();
  tr.input.tail(triples.rows()) = triples.rowwise().mean();
  require_cols(w, tr.input.size(), "stream init");
  Vec<S> pre = w * tr.input + b.col(0);
  tr.out = pre.array().tanh().matrix();
  return tr;
}

/// Adds the gradient of the mean inputs into every column of d_buffer / d_triples.
template <class S>
void stream_init_backward(const Mat<S>& w, const StreamInitTrace<S>& tr, const Vec<S>& d_out, Mat<S>& dw, Mat<S>& db,
                          Mat<S>& d_buffer, Mat<S>& d_triples) {
  Vec<S> d_pre = (d_out.array() * (S(1) - tr.out.array().square())).matrix();
  dw.noalias() += d_pre * tr.input.transpose();
  db.col(0) += d_pre;
  Vec<S> d_in = w.transpose() * d_pre;
  const auto nb = d_buffer.cols(), nt = d_triples.cols();
  d_buffer.colwise() += d_in.head(d_buffer.rows()) / static_cast<S>(nb);
  d_triples.colwise() += d_in.tail(d_triples.rows()) / static_cast<S>(nt);
}

// --- additive attention --------------------------------------------------------
// W = [W_query | W_memory]; the memory-side projection does not depend on the
// query, so it can be computed once per memory and reused across steps.

template <class S>
Mat<S> attention_keys(const Mat<S>& w, Eigen::Index query_dim, const Mat<S>& memory) {
  require(w.cols() == query_dim + memory.rows(), "attention: weight/input size mismatch");
  return w.rightCols(memory.rows()) * memory;
}

template <class S>
struct AttentionTrace {
  Vec<S> query;
  Mat<S> act;  // tanh activations, d_a x L
  Vec<S> weights;
  Vec<S> context;
};

template <class S>
AttentionTrace<S> attend_with_keys(const Mat<S>& w, const Mat<S>& v, const Vec<S>& query, const Mat<S>& memory,
                                   const Mat<S>& keys) {
  require(memory.cols() > 0, "attention over an empty memory");
  require(w.cols() == query.size() + memory.rows(), "attention: weight/input size mismatch");
  require(v.rows() == w.rows(), "attention: score vector size mismatch");
  AttentionTrace<S> tr;
  tr.query = query;
  Vec<S> q = w.leftCols(query.size()) * query;
  tr.act = (keys.colwise() + q).array().tanh().matrix();
  Vec<S> scores = tr.act.transpose() * v.col(0);
  tr.weights = softmax<S>(scores);
  tr.context = memory * tr.weights;
  return tr;
}

template <class S>
AttentionTrace<S> attend(const Mat<S>& w, const Mat<S>& v, const Vec<S>& query, const Mat<S>& memory) {
  return attend_with_keys(w, v, query, memory, attention_keys(w, query.size(), memory));
}

/// Accumulators for gradients that are shared across the steps of one sequence.
template <class S>
struct AttentionGrad {
  OuterProducts<S> query_outer;  // -> left block of dW
  Mat<S> d_keys;                 // summed over steps, d_a x L
  Mat<S> d_memory;               // d_m x L

  void reset(Eigen::Index attn_dim, Eigen::Index mem_dim, Eigen::Index len) {
    d_keys = Mat<S>::Zero(attn_dim, len);
    d_memory = Mat<S>::Zero(mem_dim, len);
  }

  /// Folds the per-step accumulators into dW and d_memory.
  void finish(const Mat<S>& w, const Mat<S>& memory, Mat<S>& dw) {
    const auto qd = w.cols() - memory.rows();
    if (!query_outer.empty()) {
      Mat<S> dq = Mat<S>::Zero(w.rows(), qd);
      query_outer.flush_into(dq);
      dw.leftCols(qd) += dq;
    }
    dw.rightCols(memory.rows()).noalias() += d_keys * memory.transpose();
    d_memory.noalias() += w.rightCols(memory.rows()).transpose() * d_keys;
  }
};

/// Backward through one attention step given dL/dcontext and an optional
/// direct gradient on the weights. Returns dL/dquery.
template <class S>
Vec<S> attend_backward(const Mat<S>& w, const Mat<S>& v, const Mat<S>& memory, const AttentionTrace<S>& tr,
                       const std::type_identity_t<Vec<S>>* d_context, const std::type_identity_t<Vec<S>>* d_weights,
                       Mat<S>& dv, AttentionGrad<S>& acc) {
  const auto len = memory.cols();
  Vec<S> dw_att = Vec<S>::Zero(len);
  if (d_context) {
    dw_att.noalias() += memory.transpose() * (*d_context);
    acc.d_memory.noalias() += (*d_context) * tr.weights.transpose();
  }
  if (d_weights) dw_att += *d_weights;
  const S dot = tr.weights.dot(dw_att);
  Vec<S> d_scores = (tr.weights.array() * (dw_att.array() - dot)).matrix();
  dv.col(0).noalias() += tr.act * d_scores;
  Mat<S> d_pre = (v.col(0) * d_scores.transpose()).cwiseProduct((S(1) - tr.act.array().square()).matrix());
  acc.d_keys += d_pre;
  Vec<S> dq = d_pre.rowwise().sum();
  acc.query_outer.add(dq, tr.query);
  return w.leftCols(tr.query.size()).transpose() * dq;
}

// --- dense tanh layer and action head ------------------------------------------

template <class S>
struct DenseTanhTrace {
  Vec<S> input;
  Vec<S> out;
};

template <class S>
DenseTanhTrace<S> dense_tanh(const Mat<S>& w, const Mat<S>& b, Vec<S> input) {
  require_cols(w, input.size(), "dense layer");
  require(b.rows() == w.rows(), "dense layer bias size");
  DenseTanhTrace<S> tr;
  tr.input = std::move(input);
  Vec<S> pre = w * tr.input + b.col(0);
  tr.out = pre.array().tanh().matrix();
  return tr;
}

/// Returns dL/dinput; the weight gradient is deferred to `dw_outer`.
template <class S>
Vec<S> dense_tanh_backward(const Mat<S>& w, const DenseTanhTrace<S>& tr, const Vec<S>& d_out, OuterProducts<S>& dw_outer,
                           Mat<S>& db) {
  Vec<S> d_pre = (d_out.array() * (S(1) - tr.out.array().square())).matrix();
  dw_outer.add(d_pre, tr.input);
  db.col(0) += d_pre;
  return w.transpose() * d_pre;
}

template <class S>
struct ActionTrace {
  DenseTanhTrace<S> hidden;  // z over [s; b; ctx]
  Vec<S> probs;              // over {Keep, Drop, Gen}

  const Vec<S>& z() const { return hidden.out; }
};

template <class S>
ActionTrace<S> action_distribution(const Mat<S>& w_hidden, const Mat<S>& b_hidden, const Mat<S>& w_action,
                                   const Vec<S>& s, const Vec<S>& b, const Vec<S>& ctx) {
  ActionTrace<S> tr;
  tr.hidden = dense_tanh(w_hidden, b_hidden, concat<S>({&s, &b, &ctx}));
  require_cols(w_action, tr.hidden.out.size(), "action output layer");
  Vec<S> logits = w_action * tr.hidden.out;
  tr.probs = softmax<S>(logits);
  return tr;
}

// --- word mixture ------------------------------------------------------------

template <class S>
struct MixtureTrace {
  Vec<S> p_gen;   // over the word vocabulary
  Vec<S> p_copy;  // over copy positions
  S gate = S(1);  // weight of the generation path
};

template <class S>
MixtureTrace<S> word_mixture(const Mat<S>& w_word, const Mat<S>& w_gate, const Mat<S>& b_gate, const Vec<S>& z,
                             Vec<S> p_copy) {
  require(w_word.rows() > 0, "word distribution over an empty vocabulary");
  require_cols(w_word, z.size(), "word output layer");
  require(w_gate.rows() == z.size(), "gate weight size mismatch");
  MixtureTrace<S> tr;
  Vec<S> logits = w_word * z;
  tr.p_gen = softmax<S>(logits);
  tr.p_copy = std::move(p_copy);
  tr.gate = sigmoid<S>(w_gate.col(0).dot(z) + b_gate(0, 0));
  return tr;
}

/// Full distribution over the extended vocabulary: ids >= |V| name
/// out-of-vocabulary copy candidates. copy_ids[j] is the id of position j.
template <class S>
Vec<S> mixture_distribution(const MixtureTrace<S>& tr, const std::vector<int>& copy_ids, Eigen::Index extended_size) {
  Vec<S> out = Vec<S>::Zero(extended_size);
  out.head(tr.p_gen.size()) = tr.gate * tr.p_gen;
  for (std::size_t j = 0; j < copy_ids.size(); ++j) out(copy_ids[j]) += (S(1) - tr.gate) * tr.p_copy(j);
  return out;
}

template <class S>
S mixture_probability(const MixtureTrace<S>& tr, const std::vector<int>& copy_ids, int target) {
  S p = target < tr.p_gen.size() ? tr.gate * tr.p_gen(target) : S(0);
  for (std::size_t j = 0; j < copy_ids.size(); ++j)
    if (copy_ids[j] == target) p += (S(1) - tr.gate) * tr.p_copy(j);
  return p;
}

template <class S>
struct MixtureGrad {
  S nll = S(0);
  Vec<S> d_gen_logits;  // empty when the target is not in the vocabulary
  Vec<S> d_copy;        // dL/dp_copy
  S d_gate_pre = S(0);
};

/// Gradient of -log P(target) w.r.t. the generation logits, the copy
/// probabilities and the gate pre-activation.
template <class S>
MixtureGrad<S> mixture_nll_backward(const MixtureTrace<S>& tr, const std::vector<int>& copy_ids, int target) {
  MixtureGrad<S> g;
  const bool in_vocab = target < tr.p_gen.size();
  const S gen_p = in_vocab ? tr.p_gen(target) : S(0);
  S copy_mass = S(0);
  for (std::size_t j = 0; j < copy_ids.size(); ++j)
    if (copy_ids[j] == target) copy_mass += tr.p_copy(j);
  S p = tr.gate * gen_p + (S(1) - tr.gate) * copy_mass;
  p = std::max(p, std::numeric_limits<S>::min());
  g.nll = -std::log(p);
  const S dp = S(-1) / p;
  if (in_vocab) {
    g.d_gen_logits = -tr.p_gen * (dp * tr.gate * gen_p);
    g.d_gen_logits(target) += dp * tr.gate * gen_p;
  }
  g.d_copy = Vec<S>::Zero(tr.p_copy.size());
  for (std::size_t j = 0; j < copy_ids.size(); ++j)
    if (copy_ids[j] == target) g.d_copy(j) = dp * (S(1) - tr.gate);
  g.d_gate_pre = dp * (gen_p - copy_mass) * tr.gate * (S(1) - tr.gate);
  return g;
}

/// Negative log-likelihood of a categorical target and dL/dlogits.
template <class S>
S categorical_nll(const Vec<S>& probs, int target, Vec<S>* d_logits) {
  const S p = std::max(probs(target), std::numeric_limits<S>::min());
  if (d_logits) {
    *d_logits = probs;
    (*d_logits)(target) -= S(1);
  }
  return -std::log(p);
}

}  // namespace factedit::nn
