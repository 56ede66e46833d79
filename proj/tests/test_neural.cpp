#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "factedit/neural/amsgrad.hpp"
#include "factedit/neural/blocks.hpp"
#include "factedit/neural/gradcheck.hpp"
#include "factedit/neural/lstm.hpp"
#include "factedit/neural/tensor.hpp"

using namespace factedit::nn;
using M = Mat<double>;
using V = Vec<double>;

namespace {

M random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 0.8) {
  M m(r, c);
  fill_uniform(m, scale, rng);
  return m;
}

V random_vec(Rng& rng, Eigen::Index n) { return random_mat(rng, n, 1).col(0); }

LstmParams<double> random_lstm(Rng& rng, Eigen::Index in, Eigen::Index h) {
  return {random_mat(rng, 4 * h, in), random_mat(rng, 4 * h, h), random_mat(rng, 4 * h, 1)};
}

// --- scalar-loop oracles, written independently of the Eigen blocks ---

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> matvec(const M& w, const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(w.rows()), 0.0);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out[i] += w(i, j) * x[static_cast<std::size_t>(j)];
  return out;
}

std::vector<double> to_std(const V& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct ScalarLstmState {
  std::vector<double> h, c;
};

ScalarLstmState scalar_lstm_step(const LstmParams<double>& p, const std::vector<double>& x, const ScalarLstmState& s) {
  const auto hs = static_cast<std::size_t>(p.hidden_size());
  auto a = matvec(p.w_input, x);
  auto b = matvec(p.w_hidden, s.h);
  ScalarLstmState out{std::vector<double>(hs), std::vector<double>(hs)};
  for (std::size_t k = 0; k < hs; ++k) {
    auto pre = [&](std::size_t gate) { return a[gate * hs + k] + b[gate * hs + k] + p.bias(static_cast<Eigen::Index>(gate * hs + k), 0); };
    const double i = sig(pre(0)), f = sig(pre(1)), g = std::tanh(pre(2)), o = sig(pre(3));
    out.c[k] = f * s.c[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

std::vector<double> scalar_softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> out(x.size());
  double z = 0;
  for (std::size_t k = 0; k < x.size(); ++k) z += out[k] = std::exp(x[k] - mx);
  for (auto& v : out) v /= z;
  return out;
}

std::vector<double> cat(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

// --- elementary ops -----------------------------------------------------------------

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    V x = random_vec(rng, 7) * 10.0;
    V p = softmax<double>(x);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    V shifted = (x.array() + 123.456).matrix();
    EXPECT_LT((softmax<double>(shifted) - p).cwiseAbs().maxCoeff(), 1e-9);
  }
  V big(2);
  big << 1000.0, 0.0;
  EXPECT_NEAR(softmax<double>(big)(0), 1.0, 1e-12);
  EXPECT_NEAR(log_sum_exp<double>(big), 1000.0, 1e-9);
}

TEST(DenseTanh, RejectsMismatchedWeights) {
  M w = M::Zero(2, 3);
  V x = V::Zero(4);
  EXPECT_THROW(dense_tanh<double>(w, M::Zero(2, 1), x), DimensionError);
}

// --- triple encoder --------------------------------------------------------------------

TEST(TripleEmbed, ZeroAndSaturated) {
  V e = V::Ones(3);
  EXPECT_TRUE(triple_embed<double>(M::Zero(4, 9), M::Zero(4, 1), e, e, e).isZero());
  V sat = triple_embed<double>(M::Zero(4, 9), M::Constant(4, 1, 50.0), e, e, e);
  EXPECT_NEAR(sat.minCoeff(), 1.0, 1e-12);
}

TEST(TripleEmbed, MatchesScalarLoop) {
  Rng rng(2);
  M w = random_mat(rng, 5, 3 + 2 + 4), b = random_mat(rng, 5, 1);
  V s = random_vec(rng, 3), p = random_vec(rng, 2), o = random_vec(rng, 4);
  V got = triple_embed<double>(w, b, s, p, o);
  auto pre = matvec(w, cat({to_std(s), to_std(p), to_std(o)}));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(got(k), std::tanh(pre[k] + b(k, 0)), 1e-12);
  EXPECT_THROW(triple_embed<double>(w, b, s, s, o), DimensionError);
}

// --- LSTM -------------------------------------------------------------------------------

TEST(Lstm, ZeroWeightsGiveZeroState) {
  auto p = LstmParams<double>::zeros(3, 4);
  auto st = lstm_step<double>(p, V::Ones(3), V::Zero(4), V::Zero(4));
  EXPECT_TRUE(st.h.isZero());
  EXPECT_TRUE(st.c.isZero());
}

TEST(Lstm, SaturatedForgetCarriesCell) {
  auto p = LstmParams<double>::zeros(2, 3);
  p.bias.block(0, 0, 3, 1).setConstant(-60.0);  // input gate closed
  p.bias.block(3, 0, 3, 1).setConstant(60.0);   // forget gate open
  V c(3);
  c << 0.3, -0.7, 1.2;
  auto st = lstm_step<double>(p, V::Ones(2), V::Zero(3), c);
  EXPECT_LT((st.c - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lstm, StepMatchesScalarLoop) {
  Rng rng(3);
  auto p = random_lstm(rng, 3, 4);
  V x = random_vec(rng, 3), h = random_vec(rng, 4), c = random_vec(rng, 4);
  auto st = lstm_step<double>(p, x, h, c);
  auto ref = scalar_lstm_step(p, to_std(x), {to_std(h), to_std(c)});
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(st.h(k), ref.h[k], 1e-12);
    EXPECT_NEAR(st.c(k), ref.c[k], 1e-12);
  }
}

TEST(BiLstm, ShapeAndEmptyInput) {
  Rng rng(4);
  auto f = random_lstm(rng, 3, 2), b = random_lstm(rng, 3, 2);
  auto tr = bilstm_forward<double>(f, b, random_mat(rng, 3, 1));
  EXPECT_EQ(tr.outputs.rows(), 4);
  EXPECT_EQ(tr.outputs.cols(), 1);
  EXPECT_THROW(bilstm_forward<double>(f, b, M(3, 0)), DimensionError);
}

TEST(BiLstm, MatchesScalarLoop) {
  Rng rng(5);
  auto f = random_lstm(rng, 3, 2), b = random_lstm(rng, 3, 3);
  M xs = random_mat(rng, 3, 5);
  auto tr = bilstm_forward<double>(f, b, xs);
  ScalarLstmState s{{0, 0}, {0, 0}};
  for (int t = 0; t < 5; ++t) {
    s = scalar_lstm_step(f, to_std(xs.col(t)), s);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(tr.outputs(k, t), s.h[k], 1e-12);
  }
  s = {{0, 0, 0}, {0, 0, 0}};
  for (int t = 4; t >= 0; --t) {
    s = scalar_lstm_step(b, to_std(xs.col(t)), s);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(tr.outputs(2 + k, t), s.h[k], 1e-12);
  }
}

TEST(BiLstm, MirroredWeightsReverseTheOutput) {
  Rng rng(6);
  auto p = random_lstm(rng, 3, 2), q = random_lstm(rng, 3, 2);
  M xs = random_mat(rng, 3, 6);
  M rev = xs.rowwise().reverse();
  auto a = bilstm_forward<double>(p, q, xs);
  auto b = bilstm_forward<double>(q, p, rev);
  for (int t = 0; t < 6; ++t) {
    EXPECT_LT((a.outputs.col(t).head(2) - b.outputs.col(5 - t).tail(2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a.outputs.col(t).tail(2) - b.outputs.col(5 - t).head(2)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

namespace {

struct BiLstmParams {
  LstmParams<double> f, b;
  M x;
  template <class F>
  void visit(F&& fn) {
    f.visit("fwd", fn);
    b.visit("bwd", fn);
    fn("inputs", x);
  }
};

}  // namespace

TEST(BiLstm, BackwardMatchesFiniteDifferences) {
  Rng rng(7);
  BiLstmParams p{random_lstm(rng, 3, 2), random_lstm(rng, 3, 3), random_mat(rng, 3, 4)};
  const M target = random_mat(rng, 5, 4);
  auto loss = [&](const BiLstmParams& q) {
    return 0.5 * (bilstm_forward<double>(q.f, q.b, q.x).outputs - target).squaredNorm();
  };
  auto tr = bilstm_forward<double>(p.f, p.b, p.x);
  BiLstmParams g{LstmParams<double>::zeros(3, 2), LstmParams<double>::zeros(3, 3), M::Zero(3, 4)};
  g.x = bilstm_backward<double>(p.f, p.b, tr, tr.outputs - target, g.f, g.b);
  const auto rep = grad_check<double>(p, g, loss);
  EXPECT_TRUE(rep.pass()) << rep.worst()->name << " " << rep.worst()->max_rel_error;
}

// --- stream init -----------------------------------------------------------------------

TEST(StreamInit, ZeroAndSingleton) {
  auto z = stream_init<double>(M::Zero(3, 5), M::Zero(3, 1), M::Zero(2, 4), M::Zero(3, 2));
  EXPECT_TRUE(z.out.isZero());
  Rng rng(8);
  M w = random_mat(rng, 3, 5), b = random_mat(rng, 3, 1), buf = random_mat(rng, 2, 1), tri = random_mat(rng, 3, 1);
  auto one = stream_init<double>(w, b, buf, tri);
  V expected = (w * (V(5) << buf.col(0), tri.col(0)).finished() + b.col(0)).array().tanh().matrix();
  EXPECT_LT((one.out - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(stream_init<double>(w, b, M(2, 0), tri), DimensionError);
}

TEST(StreamInit, MatchesScalarLoop) {
  Rng rng(9);
  M w = random_mat(rng, 4, 5), b = random_mat(rng, 4, 1), buf = random_mat(rng, 2, 6), tri = random_mat(rng, 3, 3);
  std::vector<double> mean(5, 0.0);
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t < 6; ++t) mean[i] += buf(i, t);
    mean[i] /= 6;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) mean[2 + i] += tri(i, j);
    mean[2 + i] /= 3;
  }
  auto pre = matvec(w, mean);
  auto got = stream_init<double>(w, b, buf, tri);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(got.out(k), std::tanh(pre[k] + b(k, 0)), 1e-12);
}

// --- attention ----------------------------------------------------------------------------

TEST(Attention, SingletonAndSymmetry) {
  Rng rng(10);
  M w = random_mat(rng, 4, 3 + 2), v = random_mat(rng, 4, 1);
  V q = random_vec(rng, 3);
  M one = random_mat(rng, 2, 1);
  auto a = attend<double>(w, v, q, one);
  EXPECT_DOUBLE_EQ(a.weights(0), 1.0);
  EXPECT_LT((a.context - one.col(0)).cwiseAbs().maxCoeff(), 1e-15);
  M twin(2, 2);
  twin << one.col(0), one.col(0);
  auto b = attend<double>(w, v, q, twin);
  EXPECT_NEAR(b.weights(0), 0.5, 1e-15);
  EXPECT_NEAR(b.weights(1), 0.5, 1e-15);
  EXPECT_THROW(attend<double>(w, v, q, M(2, 0)), DimensionError);
}

TEST(Attention, MatchesScalarLoop) {
  Rng rng(11);
  M w = random_mat(rng, 4, 5 + 3), v = random_mat(rng, 4, 1), mem = random_mat(rng, 3, 3);
  V q = random_vec(rng, 5);
  std::vector<double> scores;
  for (int j = 0; j < 3; ++j) {
    auto pre = matvec(w, cat({to_std(q), to_std(mem.col(j))}));
    double s = 0;
    for (int k = 0; k < 4; ++k) s += v(k, 0) * std::tanh(pre[k]);
    scores.push_back(s);
  }
  auto alpha = scalar_softmax(scores);
  auto got = attend<double>(w, v, q, mem);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(got.weights(j), alpha[j], 1e-12);
  for (int i = 0; i < 3; ++i) {
    double c = 0;
    for (int j = 0; j < 3; ++j) c += alpha[j] * mem(i, j);
    EXPECT_NEAR(got.context(i), c, 1e-12);
  }
  EXPECT_NEAR(got.weights.sum(), 1.0, 1e-12);
}

// --- action head -----------------------------------------------------------------------

TEST(ActionDistribution, UniformSaturatedAndScalarLoop) {
  Rng rng(12);
  V s = random_vec(rng, 3), b = random_vec(rng, 2), c = random_vec(rng, 2);
  M wz = random_mat(rng, 4, 7), bz = random_mat(rng, 4, 1);
  auto u = action_distribution<double>(wz, bz, M::Zero(3, 4), s, b, c);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(u.probs(k), 1.0 / 3.0, 1e-15);

  M wa = M::Zero(3, 4);
  wa.row(2).setConstant(1e4);
  auto sat = action_distribution<double>(M::Zero(4, 7), M::Constant(4, 1, 1.0), wa, s, b, c);
  EXPECT_NEAR(sat.probs(2), 1.0, 1e-12);

  wa = random_mat(rng, 3, 4);
  auto got = action_distribution<double>(wz, bz, wa, s, b, c);
  auto pre = matvec(wz, cat({to_std(s), to_std(b), to_std(c)}));
  std::vector<double> z(4);
  for (int k = 0; k < 4; ++k) z[k] = std::tanh(pre[k] + bz(k, 0));
  auto probs = scalar_softmax(matvec(wa, z));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(got.probs(k), probs[k], 1e-12);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(got.z()(k), z[k], 1e-12);
}

// --- word mixture ---------------------------------------------------------------------------

TEST(WordMixture, GateExtremes) {
  Rng rng(13);
  M wy = random_mat(rng, 6, 4);
  V z = random_vec(rng, 4);
  V copy(1);
  copy << 1.0;
  auto open = word_mixture<double>(wy, M::Zero(4, 1), M::Constant(1, 1, 60.0), z, copy);
  V dist = mixture_distribution(open, {3}, 6);
  EXPECT_LT((dist - softmax<double>(V(wy * z))).cwiseAbs().maxCoeff(), 1e-12);

  auto closed = word_mixture<double>(wy, M::Zero(4, 1), M::Constant(1, 1, -60.0), z, copy);
  dist = mixture_distribution(closed, {7}, 8);  // an out-of-vocabulary object
  EXPECT_NEAR(dist(7), 1.0, 1e-12);
  EXPECT_NEAR(dist.sum(), 1.0, 1e-12);
}

TEST(WordMixture, SharedObjectsAddTheirCopyMass) {
  Rng rng(14);
  M wy = random_mat(rng, 5, 3), wg = random_mat(rng, 3, 1), bg = random_mat(rng, 1, 1);
  V z = random_vec(rng, 3);
  V copy(3);
  copy << 0.2, 0.5, 0.3;
  auto mix = word_mixture<double>(wy, wg, bg, z, copy);
  const std::vector<int> ids{4, 6, 4};
  V dist = mixture_distribution(mix, ids, 7);
  const double g = sig(wg.col(0).dot(z) + bg(0, 0));
  const auto pg = scalar_softmax(matvec(wy, to_std(z)));
  EXPECT_NEAR(dist(4), g * pg[4] + (1 - g) * 0.5, 1e-12);
  EXPECT_NEAR(dist(6), (1 - g) * 0.5, 1e-12);
  EXPECT_NEAR(dist(0), g * pg[0], 1e-12);
  EXPECT_NEAR(dist.sum(), 1.0, 1e-12);
  EXPECT_NEAR(mixture_probability(mix, ids, 4), dist(4), 1e-15);
}

// --- losses --------------------------------------------------------------------------------

TEST(Loss, CategoricalClosedForms) {
  V uniform = V::Constant(3, 1.0 / 3.0);
  EXPECT_NEAR(categorical_nll<double>(uniform, 0, nullptr) + categorical_nll<double>(uniform, 1, nullptr),
              2.0 * std::log(3.0), 1e-12);
  V certain = V::Zero(3);
  certain(1) = 1.0;
  V d;
  EXPECT_NEAR(categorical_nll<double>(certain, 1, &d), 0.0, 1e-15);
  EXPECT_TRUE(d.isZero());
}

TEST(Loss, MixtureNllMatchesFiniteDifferences) {
  Rng rng(15);
  V logits = random_vec(rng, 5), copy_logits = random_vec(rng, 3);
  double gate_pre = 0.3;
  const std::vector<int> ids{2, 6, 2};
  auto make = [&](const V& l, const V& cl, double gp) {
    MixtureTrace<double> tr;
    tr.p_gen = softmax<double>(l);
    tr.p_copy = softmax<double>(cl);
    tr.gate = sig(gp);
    return tr;
  };
  for (int target : {2, 6, 0}) {
    auto g = mixture_nll_backward(make(logits, copy_logits, gate_pre), ids, target);
    const double h = 1e-6;
    auto f = [&](const V& l, const V& cl, double gp) { return mixture_nll_backward(make(l, cl, gp), ids, target).nll; };
    if (target < 5)
      for (int k = 0; k < 5; ++k) {
        V up = logits, dn = logits;
        up(k) += h;
        dn(k) -= h;
        EXPECT_NEAR(g.d_gen_logits(k), (f(up, copy_logits, gate_pre) - f(dn, copy_logits, gate_pre)) / (2 * h), 1e-6);
      }
    EXPECT_NEAR(g.d_gate_pre, (f(logits, copy_logits, gate_pre + h) - f(logits, copy_logits, gate_pre - h)) / (2 * h), 1e-6);
  }
}

// --- AMSGrad --------------------------------------------------------------------------------

TEST(AmsGrad, ZeroGradientLeavesParametersButCountsTheStep) {
  AmsGrad<double> opt;
  M p = M::Constant(2, 2, 0.7), g = M::Zero(2, 2);
  opt.step({&p}, {&g});
  EXPECT_TRUE(p.isApproxToConstant(0.7));
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(AmsGrad, FirstStepByHand) {
  AmsGradConfig cfg;
  AmsGrad<double> opt(cfg);
  M p(1, 2), g(1, 2);
  p << 1.0, -2.0;
  g << 0.5, -3.0;
  opt.step({&p}, {&g});
  // m = 0.1 g, v = 0.001 g^2; bias correction gives m_hat = g, v_hat = g^2
  for (int k = 0; k < 2; ++k) {
    const double gk = k == 0 ? 0.5 : -3.0, p0 = k == 0 ? 1.0 : -2.0;
    const double m = 0.1 * gk, v = 0.001 * gk * gk;
    const double expected = p0 - cfg.lr / 0.1 * m / (std::sqrt(v / 0.001) + cfg.eps);
    EXPECT_NEAR(p(0, k), expected, 1e-15);
  }
}

TEST(AmsGrad, ConstantGradientStepApproachesLearningRate) {
  AmsGradConfig cfg;
  cfg.lr = 1e-3;
  AmsGrad<double> opt(cfg);
  M p = M::Zero(1, 1), g = M::Constant(1, 1, 0.25);
  double last = 0;
  for (int t = 0; t < 5000; ++t) {
    const double before = p(0, 0);
    opt.step({&p}, {&g});
    last = before - p(0, 0);
  }
  EXPECT_NEAR(last, cfg.lr, 1e-6);
}

TEST(AmsGrad, MaxAccumulatorNeverDecreases) {
  Rng rng(16);
  AmsGrad<double> opt;
  M p = random_mat(rng, 3, 3);
  M prev = M::Zero(3, 3);
  for (int t = 0; t < 200; ++t) {
    M g = random_mat(rng, 3, 3) * (t % 20 < 10 ? 5.0 : 0.01);
    opt.step({&p}, {&g});
    const M& vmax = opt.max_second_moment()[0];
    EXPECT_TRUE((vmax.array() >= prev.array()).all());
    prev = vmax;
  }
}

TEST(AmsGrad, ShapeMismatchAndReproducibility) {
  AmsGrad<double> opt;
  M p = M::Zero(2, 2), g = M::Zero(3, 2);
  EXPECT_THROW(opt.step({&p}, {&g}), DimensionError);

  auto run = [] {
    Rng rng(17);
    AmsGrad<double> o;
    M q = random_mat(rng, 4, 4);
    for (int t = 0; t < 30; ++t) {
      M g2 = random_mat(rng, 4, 4);
      o.step({&q}, {&g2});
    }
    return q;
  };
  EXPECT_EQ(run(), run());
}

// --- gradient checker ------------------------------------------------------------------

namespace {

struct Quadratic {
  M a, b;
  template <class F>
  void visit(F&& fn) {
    fn("a", a);
    fn("b", b);
  }
};

}  // namespace

TEST(GradCheck, FlagsACorruptedTensorAndUnusedOnes) {
  Rng rng(18);
  Quadratic p{random_mat(rng, 2, 2), random_mat(rng, 1, 3)};
  auto loss = [](const Quadratic& q) { return (q.a.array().cube()).sum(); };  // b is unused
  Quadratic g{(3.0 * p.a.array().square()).matrix(), M::Zero(1, 3)};
  auto ok = grad_check<double>(p, g, loss);
  EXPECT_TRUE(ok.pass());
  EXPECT_FALSE(ok.params[0].unused);
  EXPECT_TRUE(ok.params[1].unused);
  g.a(1, 0) += 0.1;
  auto bad = grad_check<double>(p, g, loss);
  EXPECT_FALSE(bad.pass());
  EXPECT_EQ(bad.failures(), std::vector<std::string>{"a"});
}
