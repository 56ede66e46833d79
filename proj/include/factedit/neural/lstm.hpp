#pragma once

// Standard LSTM cell (input/forget/candidate/output gates, no peepholes, one
// bias vector) and a bidirectional encoder built from two cells. Forward
// passes record what the hand-written backward passes need.

#include <string>
#include <vector>

#include "factedit/neural/tensor.hpp"

namespace factedit::nn {

/// Gate rows are stacked as [input; forget; candidate; output].
template <class S>
struct LstmParams {
  Mat<S> w_input;   // 4h x in
  Mat<S> w_hidden;  // 4h x h
  Mat<S> bias;      // 4h x 1

  static LstmParams zeros(Eigen::Index in, Eigen::Index hidden) {
    return {Mat<S>::Zero(4 * hidden, in), Mat<S>::Zero(4 * hidden, hidden), Mat<S>::Zero(4 * hidden, 1)};
  }

  Eigen::Index input_size() const { return w_input.cols(); }
  Eigen::Index hidden_size() const { return w_hidden.cols(); }

  /// Glorot-uniform weights, zero bias except +1 on the forget gate.
  void init(Rng& rng) {
    const auto h = hidden_size();
    fill_uniform(w_input, glorot_bound(4 * h, input_size()), rng);
    fill_uniform(w_hidden, glorot_bound(4 * h, h), rng);
    bias.setZero();
    bias.block(h, 0, h, 1).setOnes();
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".w_input", w_input);
    f(prefix + ".w_hidden", w_hidden);
    f(prefix + ".bias", bias);
  }
};

template <class S>
struct LstmStep {
  Vec<S> h_prev, c_prev;
  Vec<S> gates;  // activated gate values, 4h
  Vec<S> c, tanh_c, h;
};

/// One step given the precomputed input projection W_in * x (without bias).
template <class S>
LstmStep<S> lstm_step_projected(const LstmParams<S>& p, const Vec<S>& input_proj, const Vec<S>& h_prev,
                                const Vec<S>& c_prev) {
  const auto hs = p.hidden_size();
  require(input_proj.size() == 4 * hs && h_prev.size() == hs && c_prev.size() == hs, "lstm: state size mismatch");
  LstmStep<S> st;
  st.h_prev = h_prev;
  st.c_prev = c_prev;
  Vec<S> pre = input_proj + p.bias.col(0);
  pre.noalias() += p.w_hidden * h_prev;
  st.gates.resize(4 * hs);
  for (Eigen::Index k = 0; k < hs; ++k) {
    st.gates(k) = sigmoid(pre(k));
    st.gates(hs + k) = sigmoid(pre(hs + k));
    st.gates(2 * hs + k) = std::tanh(pre(2 * hs + k));
    st.gates(3 * hs + k) = sigmoid(pre(3 * hs + k));
  }
  auto i = st.gates.segment(0, hs).array();
  auto f = st.gates.segment(hs, hs).array();
  auto g = st.gates.segment(2 * hs, hs).array();
  auto o = st.gates.segment(3 * hs, hs).array();
  st.c = (f * c_prev.array() + i * g).matrix();
  st.tanh_c = st.c.array().tanh().matrix();
  st.h = (o * st.tanh_c.array()).matrix();
  return st;
}

template <class S>
LstmStep<S> lstm_step(const LstmParams<S>& p, const Vec<S>& x, const Vec<S>& h_prev, const Vec<S>& c_prev) {
  require_cols(p.w_input, x.size(), "lstm input");
  Vec<S> proj = p.w_input * x;
  return lstm_step_projected(p, proj, h_prev, c_prev);
}

template <class S>
struct LstmStepGrad {
  Vec<S> d_pre;  // gradient w.r.t. gate pre-activations, 4h
  Vec<S> d_h_prev, d_c_prev;
};

/// Backward through one step. Weight gradients are left to the caller, which
/// can batch them: dW_in += d_pre x^T, dW_h += d_pre h_prev^T, db += d_pre.
template <class S>
LstmStepGrad<S> lstm_step_backward(const LstmParams<S>& p, const LstmStep<S>& st, const Vec<S>& dh, const Vec<S>& dc) {
  const auto hs = p.hidden_size();
  auto i = st.gates.segment(0, hs).array();
  auto f = st.gates.segment(hs, hs).array();
  auto g = st.gates.segment(2 * hs, hs).array();
  auto o = st.gates.segment(3 * hs, hs).array();
  auto tc = st.tanh_c.array();

  Eigen::Array<S, Eigen::Dynamic, 1> dct = dc.array() + dh.array() * o * (S(1) - tc * tc);
  LstmStepGrad<S> out;
  out.d_pre.resize(4 * hs);
  out.d_pre.segment(0, hs) = (dct * g * i * (S(1) - i)).matrix();
  out.d_pre.segment(hs, hs) = (dct * st.c_prev.array() * f * (S(1) - f)).matrix();
  out.d_pre.segment(2 * hs, hs) = (dct * i * (S(1) - g * g)).matrix();
  out.d_pre.segment(3 * hs, hs) = (dh.array() * tc * o * (S(1) - o)).matrix();
  out.d_c_prev = (dct * f).matrix();
  out.d_h_prev.noalias() = p.w_hidden.transpose() * out.d_pre;
  return out;
}

/// Collects (delta, input) column pairs and adds sum_k delta_k input_k^T to a
/// weight gradient in one matrix product.
template <class S>
class OuterProducts {
 public:
  void add(const Vec<S>& delta, const Vec<S>& input) {
    deltas_.push_back(delta);
    inputs_.push_back(input);
  }
  bool empty() const { return deltas_.empty(); }

  void flush_into(Mat<S>& grad) {
    if (deltas_.empty()) return;
    const auto k = static_cast<Eigen::Index>(deltas_.size());
    Mat<S> d(grad.rows(), k), x(grad.cols(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
      d.col(c) = deltas_[c];
      x.col(c) = inputs_[c];
    }
    grad.noalias() += d * x.transpose();
    deltas_.clear();
    inputs_.clear();
  }

 private:
  std::vector<Vec<S>> deltas_, inputs_;
};

// ---------------------------------------------------------------------------

template <class S>
struct BiLstmTrace {
  Mat<S> inputs;   // in x N
  Mat<S> outputs;  // 2h x N, column i = [forward_i; backward_i]
  std::vector<LstmStep<S>> fwd, bwd;
};

/// Runs a forward and a backward cell over the columns of `xs`.
template <class S>
BiLstmTrace<S> bilstm_forward(const LstmParams<S>& fwd, const LstmParams<S>& bwd, const Mat<S>& xs) {
  require(xs.cols() > 0, "bilstm: empty input");
  require_cols(fwd.w_input, xs.rows(), "bilstm forward input");
  require_cols(bwd.w_input, xs.rows(), "bilstm backward input");
  const auto n = xs.cols();
  const auto hf = fwd.hidden_size(), hb = bwd.hidden_size();
  BiLstmTrace<S> tr;
  tr.inputs = xs;
  tr.outputs.resize(hf + hb, n);
  Mat<S> proj_f = fwd.w_input * xs;
  Mat<S> proj_b = bwd.w_input * xs;
  tr.fwd.reserve(n);
  tr.bwd.resize(n);
  Vec<S> h = Vec<S>::Zero(hf), c = Vec<S>::Zero(hf);
  for (Eigen::Index t = 0; t < n; ++t) {
    tr.fwd.push_back(lstm_step_projected<S>(fwd, proj_f.col(t), h, c));
    h = tr.fwd.back().h;
    c = tr.fwd.back().c;
    tr.outputs.col(t).head(hf) = h;
  }
  h = Vec<S>::Zero(hb);
  c = Vec<S>::Zero(hb);
  for (Eigen::Index t = n; t-- > 0;) {
    tr.bwd[t] = lstm_step_projected<S>(bwd, proj_b.col(t), h, c);
    h = tr.bwd[t].h;
    c = tr.bwd[t].c;
    tr.outputs.col(t).tail(hb) = h;
  }
  return tr;
}

namespace detail {

template <class S>
void finish_direction(const LstmParams<S>& p, LstmParams<S>& g, const Mat<S>& d_pre, const Mat<S>& h_prev,
                      const Mat<S>& inputs, Mat<S>& d_inputs) {
  g.w_input.noalias() += d_pre * inputs.transpose();
  g.w_hidden.noalias() += d_pre * h_prev.transpose();
  g.bias.col(0) += d_pre.rowwise().sum();
  d_inputs.noalias() += p.w_input.transpose() * d_pre;
}

}  // namespace detail

/// Backpropagates `d_outputs` (2h x N); returns d_inputs (in x N) and adds
/// weight gradients into `g_fwd` / `g_bwd`.
template <class S>
Mat<S> bilstm_backward(const LstmParams<S>& fwd, const LstmParams<S>& bwd, const BiLstmTrace<S>& tr,
                       const Mat<S>& d_outputs, LstmParams<S>& g_fwd, LstmParams<S>& g_bwd) {
  const auto n = tr.inputs.cols();
  const auto hf = fwd.hidden_size(), hb = bwd.hidden_size();
  require(d_outputs.rows() == hf + hb && d_outputs.cols() == n, "bilstm backward: gradient shape mismatch");
  Mat<S> d_inputs = Mat<S>::Zero(tr.inputs.rows(), n);

  Mat<S> d_pre(4 * hf, n), h_prev(hf, n);
  Vec<S> dh = Vec<S>::Zero(hf), dc = Vec<S>::Zero(hf);
  for (Eigen::Index t = n; t-- > 0;) {
    Vec<S> dh_t = dh + d_outputs.col(t).head(hf);
    auto sg = lstm_step_backward(fwd, tr.fwd[t], dh_t, dc);
    d_pre.col(t) = sg.d_pre;
    h_prev.col(t) = tr.fwd[t].h_prev;
    dh = sg.d_h_prev;
    dc = sg.d_c_prev;
  }
  detail::finish_direction(fwd, g_fwd, d_pre, h_prev, tr.inputs, d_inputs);

  Mat<S> d_pre_b(4 * hb, n), h_prev_b(hb, n);
  dh = Vec<S>::Zero(hb);
  dc = Vec<S>::Zero(hb);
  for (Eigen::Index t = 0; t < n; ++t) {
    Vec<S> dh_t = dh + d_outputs.col(t).tail(hb);
    auto sg = lstm_step_backward(bwd, tr.bwd[t], dh_t, dc);
    d_pre_b.col(t) = sg.d_pre;
    h_prev_b.col(t) = tr.bwd[t].h_prev;
    dh = sg.d_h_prev;
    dc = sg.d_c_prev;
  }
  detail::finish_direction(bwd, g_bwd, d_pre_b, h_prev_b, tr.inputs, d_inputs);
  return d_inputs;
}

}  // namespace factedit::nn
