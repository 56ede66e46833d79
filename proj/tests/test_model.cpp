#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <type_traits>

#include "factedit/model/checkpoint.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/gradcheck.hpp"
#include "factedit/model/trainer.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/synthetic.hpp"
#include "fixtures.hpp"

using namespace factedit;

namespace {

template <class Params>
bool same_params(Params a, Params b) {
  bool same = true;
  auto ta = nn::named_tensors<typename decltype(a.word_emb)::Scalar>(a);
  auto tb = nn::named_tensors<typename decltype(b.word_emb)::Scalar>(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) same = same && ta[k].first == tb[k].first && *ta[k].second == *tb[k].second;
  return same;
}

std::vector<Instance> small_set() { return synthetic_dataset(24, 5).instances; }

ModelDims mini() { return {8, 6, 6, 6, 8, 10, 8, 8, 6}; }

/// Makes Gen the argmax action at every step unless it is masked.
template <class S>
void force_gen(FactEditor<S>& m) {
  m.params.hidden_w.setZero();
  m.params.hidden_b.setConstant(S(3));
  m.params.action_w.setZero();
  m.params.action_w.row(static_cast<int>(ActionKind::Gen)).setConstant(S(5));
}

}  // namespace

// --- vocabulary and configuration ---------------------------------------------------

TEST(Vocabulary, ReservedIdsAndFirstOccurrenceOrder) {
  Instance a;
  a.triples = TripleSet{{"Ann", "likes", "Bob"}};
  a.draft = tokenize("x y x");
  a.revised = tokenize("y z");
  const auto v = build_vocabulary({a});
  EXPECT_EQ(v.words.word(kBos), "<s>");
  EXPECT_EQ(v.words.word(kEos), "</s>");
  EXPECT_EQ(v.words.size(), kNumSpecialWords + 3);
  EXPECT_EQ(v.words.id("x"), kNumSpecialWords);
  EXPECT_EQ(v.words.id("z"), kNumSpecialWords + 2);
  EXPECT_EQ(v.words.id("never"), Vocab::kUnk);
  EXPECT_FALSE(v.words.contains("Ann"));
  EXPECT_TRUE(build_vocabulary({a}, 1, true).words.contains("Ann"));
  EXPECT_EQ(v.entities.id("Bob"), 2);
  EXPECT_EQ(v.predicates.size(), 2);

  const auto pruned = build_vocabulary({a}, 2);
  EXPECT_TRUE(pruned.words.contains("x"));
  EXPECT_TRUE(pruned.words.contains("y"));
  EXPECT_FALSE(pruned.words.contains("z"));
  EXPECT_THROW(build_vocabulary({a}, 0), std::invalid_argument);
}

TEST(Vocabulary, JsonRoundTripAndReservedCheck) {
  const auto v = build_vocabulary(small_set());
  EXPECT_EQ(vocabulary_from_json(vocabulary_to_json(v)), v);
  auto j = vocabulary_to_json(v);
  j["words"] = std::vector<std::string>{"<unk>", "a"};
  EXPECT_THROW(vocabulary_from_json(j), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndValidation) {
  TrainConfig c;
  c.model = ModelKind::EncDec;
  c.dims = ModelDims::large();
  c.optimizer.lr = 0.01;
  c.batch_size = 7;
  c.double_precision = true;
  c.limits.max_consecutive_gen = 4;
  c.augment_root = true;
  EXPECT_EQ(config_from_json(to_json(c)), c);

  EXPECT_EQ(dims_from_json({{"preset", "tiny"}}), ModelDims::tiny());
  EXPECT_EQ(dims_from_json({{"preset", "small"}, {"word", 7}}).word, 7);
  EXPECT_THROW(config_from_json({{"epoch", 3}}), ConfigError);
  EXPECT_THROW(config_from_json({{"optimizer", {{"lr", 0.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"batch_size", "big"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"model", "rnn"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"precision", "half"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"dims", {{"preset", "huge"}}}}), ConfigError);
}

TEST(Config, Presets) {
  const auto s = ModelDims::small(), l = ModelDims::large();
  EXPECT_EQ(s.word, 100);
  EXPECT_EQ(s.buffer(), 200);
  EXPECT_EQ(s.triple, 200);
  EXPECT_EQ(s.stream_hidden, 200);
  EXPECT_EQ(l.word, 300);
  EXPECT_EQ(l.buffer(), 300);
  EXPECT_EQ(l.triple, 300);
  EXPECT_EQ(l.stream_hidden, 600);
}

// --- encoder ----------------------------------------------------------------------------

TEST(FactEditor, EncodeShapes) {
  Instance inst;
  inst.triples = TripleSet{{"Ann", "likes", "Bob"}};
  inst.draft = tokenize("Ann likes");
  inst.revised = inst.draft;
  const auto d = mini();
  FactEditor<double> m(d, build_vocabulary({inst}), 3);
  const auto enc = m.encode_instance(inst.draft, inst.triples);
  EXPECT_EQ(enc.buffer_reprs().rows(), d.buffer());
  EXPECT_EQ(enc.buffer_reprs().cols(), 2);
  EXPECT_EQ(enc.triples.rows(), d.triple);
  EXPECT_EQ(enc.triples.cols(), 1);
  EXPECT_EQ(enc.s1().size(), d.stream_hidden);
  EXPECT_THROW(m.encode_instance({}, inst.triples), std::invalid_argument);
  EXPECT_THROW(m.encode_instance(inst.draft, {}), std::invalid_argument);
}

TEST(FactEditor, SameSeedSameModel) {
  const auto v = build_vocabulary(small_set());
  FactEditor<double> a(mini(), v, 9), b(mini(), v, 9), c(mini(), v, 10);
  EXPECT_TRUE(same_params(a.params, b.params));
  EXPECT_FALSE(same_params(a.params, c.params));
}

TEST(FactEditor, TriplePermutationPermutesTripleReprs) {
  const auto inst = fixtures::baymax();
  FactEditor<double> m(mini(), build_vocabulary({inst}), 4);
  TripleSet rev;
  for (std::size_t j = inst.triples.size(); j-- > 0;) rev.push_back(inst.triples[j]);
  const auto a = m.encode_instance(inst.draft, inst.triples);
  const auto b = m.encode_instance(inst.draft, rev);
  const auto cols = a.triples.cols();
  for (Eigen::Index j = 0; j < cols; ++j)
    EXPECT_LT((a.triples.col(j) - b.triples.col(cols - 1 - j)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(a.buffer_reprs(), b.buffer_reprs());
  EXPECT_LT((a.s1() - b.s1()).cwiseAbs().maxCoeff(), 1e-14);
}

// --- decoding -----------------------------------------------------------------------

TEST(FactEditor, ConsecutiveGenMask) {
  const auto data = small_set();
  FactEditor<double> m(mini(), build_vocabulary(data), 5);
  force_gen(m);
  DecodeLimits lim;
  lim.max_consecutive_gen = 3;
  for (const auto& inst : data) {
    const auto r = m.decode(inst.draft, inst.triples, lim);
    int run = 0, longest = 0;
    for (const auto& a : r.actions) {
      run = a.kind == ActionKind::Gen ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    EXPECT_EQ(longest, 3);
    EXPECT_EQ(execute(inst.draft, r.actions, inst.triples), r.text);
    EXPECT_LE(r.actions.size(), inst.draft.size() + 3 * (inst.draft.size() + 1));
  }
}

TEST(FactEditor, GeneratedWordsComeFromVocabularyOrTripleObjects) {
  const auto data = small_set();
  auto vocab = build_vocabulary({data.begin(), data.begin() + 4});
  FactEditor<double> m(mini(), vocab, 6);
  force_gen(m);
  m.params.gate_b.setConstant(-2.0);  // favour copying
  for (const auto& inst : data) {
    std::set<std::string> objects;
    for (const auto& t : inst.triples) objects.insert(t.obj);
    for (const auto& a : m.decode(inst.draft, inst.triples).actions) {
      if (a.kind != ActionKind::Gen) continue;
      const bool known = vocab.words.contains(a.word) && vocab.words.id(a.word) >= kNumSpecialWords;
      EXPECT_TRUE(known || objects.count(a.word)) << a.word;
    }
  }
}

TEST(FactEditor, DecodeTraceIsNormalised) {
  const auto data = small_set();
  FactEditor<double> m(mini(), build_vocabulary(data), 7);
  force_gen(m);
  std::vector<DecodeStep> trace;
  const auto r = m.decode(data[0].draft, data[0].triples, {}, &trace);
  ASSERT_EQ(trace.size(), r.actions.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    double a = 0, p = 0;
    for (double w : trace[k].attention) a += w;
    for (double w : trace[k].action_probs) p += w;
    EXPECT_NEAR(a, 1.0, 1e-12);
    EXPECT_NEAR(p, 1.0, 1e-12);
    if (r.actions[k].kind == ActionKind::Gen) {
      EXPECT_NEAR(trace[k].word_mass, 1.0, 1e-12);
    }
  }
}

TEST(EncDec, LengthCapAndAttentionSums) {
  const auto data = small_set();
  EncDec<double> m(mini(), build_vocabulary(data, 1, true), 8);
  m.params.word_w.row(kEos).setConstant(-50.0);  // discourage stopping
  DecodeLimits lim;
  lim.max_length = 5;
  for (const auto& inst : data) {
    std::vector<double> sums;
    const auto y = m.decode(inst.draft, inst.triples, lim, &sums);
    EXPECT_LE(y.size(), 5u);
    EXPECT_GE(sums.size(), y.size());
    for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-12);
  }
  lim.max_length = 0;
  EXPECT_TRUE(m.decode(data[0].draft, data[0].triples, lim).empty());
}

// --- losses and training --------------------------------------------------------------

TEST(FactEditor, LossRejectsIncompleteGold) {
  const auto inst = fixtures::baymax();
  FactEditor<double> m(mini(), build_vocabulary({inst}), 1);
  EXPECT_THROW(m.loss(inst.draft, inst.triples, {Action::keep()}), std::invalid_argument);
  EXPECT_GT(m.loss(inst.draft, inst.triples, derive_actions(inst.draft, inst.revised)), 0.0);
}

TEST(Trainer, PrepareExamplesChecksInstances) {
  Instance bad = fixtures::baymax();
  bad.draft.clear();
  EXPECT_THROW(prepare_examples({bad}), std::invalid_argument);
  bad = fixtures::baymax();
  bad.triples = {};
  EXPECT_THROW(prepare_examples({bad}), std::invalid_argument);
  EXPECT_EQ(prepare_examples(small_set()).size(), 24u);
}

namespace {

TrainConfig quick_config(int epochs) {
  TrainConfig c;
  c.dims = mini();
  c.optimizer.lr = 1e-2;
  c.batch_size = 8;
  c.epochs = epochs;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Trainer, LossDecreases) {
  const auto data = small_set();
  const auto ex = prepare_examples(data);
  FactEditor<double> fe(mini(), build_vocabulary(data), 2);
  const auto r = train(fe, ex, {}, quick_config(50));
  ASSERT_EQ(r.log.size(), 50u);
  EXPECT_LT(r.log.back().loss, 0.5 * r.log.front().loss);

  EncDec<double> ed(mini(), build_vocabulary(data, 1, true), 2);
  const auto r2 = train(ed, ex, {}, quick_config(50));
  EXPECT_LT(r2.log.back().loss, 0.5 * r2.log.front().loss);
}

TEST(Trainer, FixedSeedIsReproducible) {
  const auto data = small_set();
  const auto ex = prepare_examples(data);
  auto run = [&] {
    FactEditor<float> m(mini(), build_vocabulary(data), 2);
    std::vector<double> curve;
    for (const auto& rec : train(m, ex, data, quick_config(5)).log) curve.push_back(rec.loss);
    return curve;
  };
  EXPECT_EQ(run(), run());
}

TEST(Trainer, ZeroLearningRateLeavesParameters) {
  const auto data = small_set();
  FactEditor<double> m(mini(), build_vocabulary(data), 2);
  const auto before = m.params;
  auto cfg = quick_config(2);
  cfg.optimizer.lr = 0.0;
  train(m, prepare_examples(data), {}, cfg);
  EXPECT_TRUE(same_params(before, m.params));
}

TEST(Trainer, EarlyStopAndBestRestore) {
  const auto data = small_set();
  FactEditor<double> m(mini(), build_vocabulary(data), 2);
  const auto r = train(m, prepare_examples(data), data, quick_config(10), [](const EpochRecord& rec) { return rec.epoch == 3; });
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_GE(r.best_epoch, 1);
  for (const auto& rec : r.log) ASSERT_TRUE(rec.dev_bleu.has_value());
  const auto j = to_json(r.log[0]);
  EXPECT_EQ(j.at("event"), "epoch");
  EXPECT_TRUE(j.contains("dev_em"));
}

// --- checkpoints -------------------------------------------------------------------

TEST(Checkpoint, RoundTripKeepsParametersAndPredictions) {
  const auto data = small_set();
  FactEditor<float> m(mini(), build_vocabulary(data), 11);
  TrainConfig cfg = quick_config(1);
  std::stringstream ss;
  save_checkpoint(ss, m, cfg);
  TrainConfig back;
  auto loaded = load_checkpoint<FactEditor<float>>(ss, &back);
  EXPECT_EQ(back.dims, m.dims());
  EXPECT_FALSE(back.double_precision);
  EXPECT_EQ(loaded.vocab(), m.vocab());
  EXPECT_TRUE(same_params(loaded.params, m.params));
  EXPECT_EQ(predict_all(loaded, data, {}), predict_all(m, data, {}));

  EncDec<double> ed(mini(), build_vocabulary(data, 1, true), 12);
  std::stringstream s2;
  cfg.model = ModelKind::EncDec;
  save_checkpoint(s2, ed, cfg);
  auto ed2 = load_checkpoint<EncDec<double>>(s2);
  EXPECT_TRUE(same_params(ed2.params, ed.params));
}

TEST(Checkpoint, RejectsMismatchesAndCorruption) {
  const auto data = small_set();
  FactEditor<float> m(mini(), build_vocabulary(data), 11);
  std::stringstream ss;
  save_checkpoint(ss, m, quick_config(1));
  const std::string bytes = ss.str();
  auto load = [](const std::string& b, auto tag) {
    std::istringstream is(b);
    return load_checkpoint<typename decltype(tag)::type>(is);
  };
  const std::type_identity<FactEditor<float>> fe;
  EXPECT_THROW(load(bytes, std::type_identity<EncDec<float>>{}), CheckpointError);
  EXPECT_THROW(load(bytes, std::type_identity<FactEditor<double>>{}), CheckpointError);
  EXPECT_THROW(load("NOTACKPT" + bytes.substr(8), fe), CheckpointError);
  EXPECT_THROW(load(bytes.substr(0, bytes.size() - 5), fe), CheckpointError);
  EXPECT_THROW(load(bytes.substr(0, 30), fe), CheckpointError);
  EXPECT_NO_THROW(load(bytes, fe));
  EXPECT_THROW(load_checkpoint<FactEditor<float>>(std::string("/nonexistent/ckpt.bin")), CheckpointError);
}

// --- gradient checks ---------------------------------------------------------------

TEST(GradCheck, SuitePasses) {
  for (const auto& run : grad_check_suite(21, 2)) {
    EXPECT_TRUE(run.report.pass()) << run.model << " " << run.report.worst()->name << " "
                                   << run.report.worst()->max_rel_error;
  }
}

TEST(GradCheck, FaultInjectionNamesTheTensor) {
  const auto tc = random_tiny_case(5);
  for (const char* name : {"attn_w", "stream.w_hidden"}) {
    const auto fe = check_fact_editor(tc, 1, {}, std::string(name));
    EXPECT_EQ(fe.report.failures(), std::vector<std::string>{name});
  }
  const auto ed = check_encdec(tc, 1, {}, std::string("init_w"));
  EXPECT_EQ(ed.report.failures(), std::vector<std::string>{"init_w"});
}

TEST(GradCheck, GenFreeCaseLeavesWordHeadsUnused) {
  const auto tc = random_tiny_case(6, true);
  const auto run = check_fact_editor(tc, 2);
  EXPECT_TRUE(run.report.pass());
  for (const auto& p : run.report.params) {
    const bool head = p.name == "word_w" || p.name == "copy_w" || p.name == "copy_v" || p.name == "gate_w" ||
                      p.name == "gate_b" || p.name == "proj_w";
    if (head) {
      EXPECT_TRUE(p.unused) << p.name;
    }
  }
}

// --- small overfits ---------------------------------------------------------------

TEST(Trainer, IdentityOverfitKeepsEverything) {
  auto data = synthetic_dataset(8, 4).instances;
  for (auto& inst : data) inst.revised = inst.draft;
  FactEditor<double> m(mini(), build_vocabulary(data), 3);
  auto cfg = quick_config(60);
  train(m, prepare_examples(data), {}, cfg);
  for (const auto& inst : data) {
    const auto r = m.decode(inst.draft, inst.triples);
    EXPECT_EQ(r.actions, ActionSequence(inst.draft.size(), Action::keep()));
    EXPECT_EQ(r.text, inst.draft);
  }
}

TEST(Trainer, ToySetIsReproducedByBothModels) {
  const auto data = synthetic_dataset(5, 6).instances;
  ASSERT_EQ(data.size(), 5u);
  const auto ex = prepare_examples(data);
  std::vector<TokenSeq> refs;
  for (const auto& inst : data) refs.push_back(inst.revised);
  auto cfg = quick_config(400);
  cfg.dims = {16, 12, 12, 16, 16, 32, 16, 32, 16};
  cfg.batch_size = 5;
  cfg.eval_every = 10;
  auto done = [](const EpochRecord& r) { return r.dev_em && *r.dev_em == 100.0; };

  FactEditor<float> fe(cfg.dims, build_vocabulary(data), 1);
  train(fe, ex, data, cfg, done);
  EXPECT_EQ(predict_all(fe, data, cfg.limits), refs);

  EncDec<float> ed(cfg.dims, build_vocabulary(data, 1, true), 1);
  train(ed, ex, data, cfg, done);
  EXPECT_EQ(predict_all(ed, data, cfg.limits), refs);
}
