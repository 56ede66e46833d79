#include <gtest/gtest.h>

#include "factedit/engine.hpp"
#include "factedit/neural/tensor.hpp"
#include "factedit/oracle.hpp"
#include "fixtures.hpp"

using namespace factedit;

TEST(Engine, InitState) {
  const auto s = init_state({"a", "b"}, TripleSet{{"A", "p", "B"}});
  EXPECT_EQ(s.remaining(), 2u);
  EXPECT_TRUE(s.stream.empty());
  EXPECT_EQ(s.step, 1u);
  EXPECT_EQ(s.top(), "a");
  EXPECT_EQ(s.memory->size(), 1u);
  EXPECT_TRUE(init_state({}, {}).terminal());
  EXPECT_EQ(init_state(fixtures::pudding_draft(), fixtures::pudding_triples()).buffer_size(), 11u);
}

TEST(Engine, KeepCopiesTop) {
  auto s = apply_action(init_state({"a"}, {}), Action::keep());
  EXPECT_EQ(s.stream, (TokenSeq{"a"}));
  EXPECT_TRUE(s.terminal());
  EXPECT_EQ(s.step, 2u);
}

TEST(Engine, DropDiscardsTop) {
  auto s = apply_action(init_state({"a"}, {}), Action::drop());
  EXPECT_TRUE(s.stream.empty());
  EXPECT_TRUE(s.terminal());
}

TEST(Engine, GenDoesNotConsume) {
  auto s = init_state({"a"}, {});
  s.stream = {"x"};
  s = apply_action(std::move(s), Action::gen("y"));
  EXPECT_EQ(s.stream, (TokenSeq{"x", "y"}));
  EXPECT_EQ(s.remaining(), 1u);
  EXPECT_EQ(s.top(), "a");
}

TEST(Engine, ErrorsOnTerminalStateAndEmptyGen) {
  auto done = apply_action(init_state({"a"}, {}), Action::keep());
  EXPECT_THROW(apply_action(done, Action::keep()), EngineError);
  EXPECT_THROW(apply_action(init_state({"a"}, {}), Action{ActionKind::Gen, ""}), EngineError);
  EXPECT_THROW(done.top(), EngineError);
}

TEST(Engine, ExecuteChecksConsumption) {
  EXPECT_THROW(execute({"a", "b"}, {Action::keep()}), EngineError);
  EXPECT_THROW(execute({"a"}, {Action::keep(), Action::gen("z")}), EngineError);
  EXPECT_THROW(execute({}, {Action::gen("z")}), EngineError);
  EXPECT_TRUE(execute({}, {}).empty());
}

TEST(Engine, IdentityAndDeleteAll) {
  nn::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq x;
    for (auto n = rng.below(20); n > 0; --n) x.push_back("t" + std::to_string(rng.below(6)));
    EXPECT_EQ(execute(x, ActionSequence(x.size(), Action::keep())), x);
    EXPECT_TRUE(execute(x, ActionSequence(x.size(), Action::drop())).empty());
  }
}

TEST(Engine, PuddingReplay) {
  ActionSequence a(4, Action::keep());
  for (const char* w : {"originates", "from", "Derbyshire_Dales"}) a.push_back(Action::gen(w));
  for (int k = 0; k < 6; ++k) a.push_back(Action::drop());
  a.push_back(Action::keep());
  EXPECT_EQ(join(execute(fixtures::pudding_draft(), a, fixtures::pudding_triples())),
            "Bakewell_pudding is Dessert that originates from Derbyshire_Dales .");
}

TEST(Engine, StepCountMatchesActions) {
  const auto x = fixtures::pudding_draft();
  const auto a = derive_actions(x, fixtures::pudding_revised());
  std::size_t k = 0, consumed = 0;
  const auto s = run(x, {}, [&](const EditorState& st) {
    consumed = st.buffer_index;
    return a[k++];
  }, 100);
  EXPECT_EQ(k, a.size());
  EXPECT_EQ(s.step, a.size() + 1);
  EXPECT_EQ(s.buffer_index, x.size());
  EXPECT_LE(consumed, x.size());
  EXPECT_EQ(s.stream, fixtures::pudding_revised());
}

TEST(Engine, RunGuardsAgainstRunawayControllers) {
  EXPECT_THROW(run({"a"}, {}, [](const EditorState&) { return Action::gen("x"); }, 10), EngineError);
}
