#pragma once

// Attention/copy encoder-decoder baseline. The source is the linearized
// triples followed by the draft; the decoder regenerates the whole revised
// text, copying from any source position through a pointer distribution.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/stats.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/neural/blocks.hpp"
#include "factedit/neural/lstm.hpp"

namespace factedit {

/// "subj pred obj <sep>" per triple, then "<text>", then the draft.
inline TokenSeq linearize_source(const TokenSeq& x, const TripleSet& triples) {
  TokenSeq src;
  src.reserve(4 * triples.size() + 1 + x.size());
  for (const auto& t : triples) {
    src.push_back(t.subj);
    src.push_back(t.pred);
    src.push_back(t.obj);
    src.push_back(special_words()[kSep]);
  }
  src.push_back(special_words()[kText]);
  src.insert(src.end(), x.begin(), x.end());
  return src;
}

template <class S>
struct EncDecParams {
  using M = nn::Mat<S>;

  M word_emb;
  nn::LstmParams<S> enc_fwd, enc_bwd;
  M init_w, init_b;
  nn::LstmParams<S> dec;
  M attn_w, attn_v;
  M hidden_w, hidden_b;
  M word_w;
  M gate_w, gate_b;

  static EncDecParams zeros(const ModelDims& d, const Vocabulary& v) {
    EncDecParams p;
    const int db = d.buffer(), ds = d.stream_hidden, dz = d.action_hidden;
    p.word_emb = M::Zero(d.word, v.words.size());
    p.enc_fwd = nn::LstmParams<S>::zeros(d.word, d.buffer_hidden);
    p.enc_bwd = nn::LstmParams<S>::zeros(d.word, d.buffer_hidden);
    p.init_w = M::Zero(ds, db);
    p.init_b = M::Zero(ds, 1);
    p.dec = nn::LstmParams<S>::zeros(d.word, ds);
    p.attn_w = M::Zero(d.attention, ds + db);
    p.attn_v = M::Zero(d.attention, 1);
    p.hidden_w = M::Zero(dz, ds + db);
    p.hidden_b = M::Zero(dz, 1);
    p.word_w = M::Zero(v.words.size(), dz);
    p.gate_w = M::Zero(dz, 1);
    p.gate_b = M::Zero(1, 1);
    return p;
  }

  void init(nn::Rng& rng) {
    auto glorot = [&](M& m) { nn::fill_uniform(m, nn::glorot_bound(m.rows(), m.cols()), rng); };
    auto glorot_t = [&](M& m) { nn::fill_uniform(m, nn::glorot_bound(1, m.rows()), rng); };
    nn::fill_uniform(word_emb, 0.1, rng);
    enc_fwd.init(rng);
    enc_bwd.init(rng);
    glorot(init_w);
    dec.init(rng);
    glorot(attn_w);
    glorot_t(attn_v);
    glorot(hidden_w);
    glorot(word_w);
    glorot_t(gate_w);
  }

  template <class F>
  void visit(F&& f) {
    f("word_emb", word_emb);
    enc_fwd.visit("enc_fwd", f);
    enc_bwd.visit("enc_bwd", f);
    f("init_w", init_w);
    f("init_b", init_b);
    dec.visit("dec", f);
    f("attn_w", attn_w);
    f("attn_v", attn_v);
    f("hidden_w", hidden_w);
    f("hidden_b", hidden_b);
    f("word_w", word_w);
    f("gate_w", gate_w);
    f("gate_b", gate_b);
  }
};

struct EncDecInput {
  TokenSeq source;
  std::vector<int> words;     // embedding ids (OOV -> UNK)
  std::vector<int> copy_ids;  // extended ids per source position
  std::vector<std::string> extra_words;

  int extended_id(const Vocabulary& v, const std::string& w) const {
    if (v.words.contains(w)) return v.words.id(w);
    for (std::size_t k = 0; k < extra_words.size(); ++k)
      if (extra_words[k] == w) return v.words.size() + static_cast<int>(k);
    return Vocab::kUnk;
  }
};

inline EncDecInput prepare_encdec_input(const Vocabulary& v, const TokenSeq& x, const TripleSet& triples) {
  EncDecInput in;
  in.source = linearize_source(x, triples);
  for (const auto& w : in.source) {
    in.words.push_back(v.words.id(w));
    if (v.words.contains(w)) {
      in.copy_ids.push_back(v.words.id(w));
      continue;
    }
    std::size_t k = 0;
    while (k < in.extra_words.size() && in.extra_words[k] != w) ++k;
    if (k == in.extra_words.size()) in.extra_words.push_back(w);
    in.copy_ids.push_back(v.words.size() + static_cast<int>(k));
  }
  return in;
}

template <class S>
class EncDec {
 public:
  using Params = EncDecParams<S>;
  using Vec = nn::Vec<S>;
  using Mat = nn::Mat<S>;

  EncDec(ModelDims dims, Vocabulary vocab) : dims_(dims), vocab_(std::move(vocab)) {
    dims_.validate();
    params = Params::zeros(dims_, vocab_);
  }
  EncDec(ModelDims dims, Vocabulary vocab, std::uint64_t seed) : EncDec(dims, std::move(vocab)) {
    nn::Rng rng(seed);
    params.init(rng);
  }

  Params params;

  const ModelDims& dims() const { return dims_; }
  const Vocabulary& vocab() const { return vocab_; }
  Params zero_grads() const { return Params::zeros(dims_, vocab_); }

  /// Teacher-forced NLL of `y` followed by the end symbol. `stats` counts
  /// argmax-correct target tokens.
  S loss(const TokenSeq& x, const TripleSet& triples, const TokenSeq& y, Params* grads = nullptr,
         TeacherStats* stats = nullptr) const;

  /// Greedy decoding; `attention_sums` receives the total attention weight
  /// of every step.
  TokenSeq decode(const TokenSeq& x, const TripleSet& triples, const DecodeLimits& limits = {},
                  std::vector<double>* attention_sums = nullptr) const;

 private:
  struct Encoded {
    nn::BiLstmTrace<S> enc;
    Vec mean;
    Vec s0;
    Mat keys;
  };

  Encoded encode(const EncDecInput& in) const {
    const auto& p = params;
    const auto len = static_cast<Eigen::Index>(in.words.size());
    Mat xs(p.word_emb.rows(), len);
    for (Eigen::Index i = 0; i < len; ++i) xs.col(i) = p.word_emb.col(in.words[i]);
    Encoded e;
    e.enc = nn::bilstm_forward(p.enc_fwd, p.enc_bwd, xs);
    e.mean = e.enc.outputs.rowwise().mean();
    e.s0 = (p.init_w * e.mean + p.init_b.col(0)).array().tanh().matrix();
    e.keys = nn::attention_keys(p.attn_w, dims_.stream_hidden, e.enc.outputs);
    return e;
  }

  struct Step {
    int input_id = 0;
    nn::LstmStep<S> lstm;
    nn::AttentionTrace<S> attn;
    nn::DenseTanhTrace<S> hidden;
    nn::MixtureTrace<S> mix;
    int target = 0;
  };

  ModelDims dims_;
  Vocabulary vocab_;
};

template <class S>
S EncDec<S>::loss(const TokenSeq& x, const TripleSet& triples, const TokenSeq& y, Params* grads,
                  TeacherStats* stats) const {
  const auto& p = params;
  const auto in = prepare_encdec_input(vocab_, x, triples);
  const auto e = encode(in);
  const auto& H = e.enc.outputs;
  const int ds = dims_.stream_hidden, db = dims_.buffer();
  const auto extended = static_cast<Eigen::Index>(vocab_.words.size() + in.extra_words.size());

  std::vector<Step> steps;
  steps.reserve(y.size() + 1);
  Vec h = e.s0, c = Vec::Zero(ds);
  int prev = kBos;
  S total = S(0);
  TeacherStats st;
  for (std::size_t t = 0; t <= y.size(); ++t) {
    Step sp;
    sp.input_id = prev;
    sp.lstm = nn::lstm_step(p.dec, Vec(p.word_emb.col(prev)), h, c);
    h = sp.lstm.h;
    c = sp.lstm.c;
    sp.attn = nn::attend_with_keys(p.attn_w, p.attn_v, h, H, e.keys);
    sp.hidden = nn::dense_tanh(p.hidden_w, p.hidden_b, nn::concat<S>({&h, &sp.attn.context}));
    sp.mix = nn::word_mixture(p.word_w, p.gate_w, p.gate_b, sp.hidden.out, sp.attn.weights);
    sp.target = t < y.size() ? in.extended_id(vocab_, y[t]) : kEos;
    total -= std::log(std::max(nn::mixture_probability(sp.mix, in.copy_ids, sp.target), std::numeric_limits<S>::min()));
    if (stats) {
      const Vec dist = nn::mixture_distribution(sp.mix, in.copy_ids, extended);
      Eigen::Index best = 0;
      dist.maxCoeff(&best);
      ++st.actions;
      if (best == sp.target) ++st.correct;
    }
    prev = t < y.size() ? vocab_.words.id(y[t]) : kEos;
    steps.push_back(std::move(sp));
  }
  st.loss = static_cast<double>(total);
  if (stats) *stats += st;
  if (!grads) return total;

  auto& g = *grads;
  const auto len = H.cols();
  nn::AttentionGrad<S> attn_acc;
  attn_acc.reset(dims_.attention, db, len);
  nn::OuterProducts<S> dec_in_outer, dec_h_outer, hidden_outer;
  Vec dh = Vec::Zero(ds), dc = Vec::Zero(ds);
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const Step& sp = *it;
    auto mg = nn::mixture_nll_backward(sp.mix, in.copy_ids, sp.target);
    Vec dz = mg.d_gate_pre * p.gate_w.col(0);
    if (mg.d_gen_logits.size()) {
      g.word_w.noalias() += mg.d_gen_logits * sp.hidden.out.transpose();
      dz.noalias() += p.word_w.transpose() * mg.d_gen_logits;
    }
    g.gate_w.col(0) += mg.d_gate_pre * sp.hidden.out;
    g.gate_b(0, 0) += mg.d_gate_pre;
    const Vec d_hid_in = nn::dense_tanh_backward(p.hidden_w, sp.hidden, dz, hidden_outer, g.hidden_b);
    const Vec d_ctx = d_hid_in.tail(db);
    dh += d_hid_in.head(ds);
    dh += nn::attend_backward(p.attn_w, p.attn_v, H, sp.attn, &d_ctx, &mg.d_copy, g.attn_v, attn_acc);
    auto sg = nn::lstm_step_backward(p.dec, sp.lstm, dh, dc);
    dec_in_outer.add(sg.d_pre, Vec(p.word_emb.col(sp.input_id)));
    dec_h_outer.add(sg.d_pre, sp.lstm.h_prev);
    g.dec.bias.col(0) += sg.d_pre;
    g.word_emb.col(sp.input_id).noalias() += p.dec.w_input.transpose() * sg.d_pre;
    dh = sg.d_h_prev;
    dc = sg.d_c_prev;
  }
  dec_in_outer.flush_into(g.dec.w_input);
  dec_h_outer.flush_into(g.dec.w_hidden);
  hidden_outer.flush_into(g.hidden_w);

  const Vec d_pre0 = (dh.array() * (S(1) - e.s0.array().square())).matrix();
  g.init_w.noalias() += d_pre0 * e.mean.transpose();
  g.init_b.col(0) += d_pre0;
  Mat dH = Mat::Zero(db, len);
  dH.colwise() += (p.init_w.transpose() * d_pre0) / static_cast<S>(len);
  attn_acc.finish(p.attn_w, H, g.attn_w);
  dH += attn_acc.d_memory;
  const Mat dX = nn::bilstm_backward(p.enc_fwd, p.enc_bwd, e.enc, dH, g.enc_fwd, g.enc_bwd);
  for (Eigen::Index i = 0; i < len; ++i) g.word_emb.col(in.words[i]) += dX.col(i);
  return total;
}

template <class S>
TokenSeq EncDec<S>::decode(const TokenSeq& x, const TripleSet& triples, const DecodeLimits& limits,
                           std::vector<double>* attention_sums) const {
  limits.validate();
  const auto& p = params;
  const auto in = prepare_encdec_input(vocab_, x, triples);
  const auto e = encode(in);
  const auto& H = e.enc.outputs;
  const int vsize = vocab_.words.size();
  const auto extended = static_cast<Eigen::Index>(vsize + in.extra_words.size());
  TokenSeq out;
  Vec h = e.s0, c = Vec::Zero(dims_.stream_hidden);
  int prev = kBos;
  while (static_cast<int>(out.size()) < limits.max_length) {
    const auto ls = nn::lstm_step(p.dec, Vec(p.word_emb.col(prev)), h, c);
    h = ls.h;
    c = ls.c;
    const auto attn = nn::attend_with_keys(p.attn_w, p.attn_v, h, H, e.keys);
    if (attention_sums) attention_sums->push_back(static_cast<double>(attn.weights.sum()));
    const auto hid = nn::dense_tanh(p.hidden_w, p.hidden_b, nn::concat<S>({&h, &attn.context}));
    const auto mix = nn::word_mixture(p.word_w, p.gate_w, p.gate_b, hid.out, attn.weights);
    Vec dist = nn::mixture_distribution(mix, in.copy_ids, extended);
    for (int id = 0; id < kNumSpecialWords; ++id)
      if (id != kEos) dist(id) = S(-1);
    if (static_cast<int>(out.size()) < limits.min_length) dist(kEos) = S(-1);
    Eigen::Index best = 0;
    for (Eigen::Index w = 1; w < dist.size(); ++w)
      if (dist(w) > dist(best)) best = w;
    const int id = static_cast<int>(best);
    if (id == kEos) break;
    out.push_back(id < vsize ? vocab_.words.word(id) : in.extra_words[static_cast<std::size_t>(id - vsize)]);
    prev = id < vsize ? id : Vocab::kUnk;
  }
  return out;
}

}  // namespace factedit
