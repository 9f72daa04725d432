#include <gtest/gtest.h>

#include "eift/injector.hpp"
#include "eift/tasks.hpp"

using namespace eift;

namespace {

CotTrace random_trace(Task task, std::uint64_t seed, std::uint64_t i) {
  Rng rng = make_rng(seed, {i});
  const Problem p = gen_problem(task, rng);
  MixConfig mix;
  mix.clean_fraction = 0.5;
  return inject(golden_cot(p), mix, rng).trace;
}

}  // namespace

TEST(Render, MultLines) {
  EXPECT_EQ(render_step(Step::add(9872, 86380, 96252), Task::mult), "9872 + 86380 = 96252");
  EXPECT_EQ(render_step(Step::partial(1234, 8, 9872), Task::mult), "1234 * 8 = 9872");
  EXPECT_EQ(render_step(Step::answer("7006652"), Task::mult), "Answer: 7006652");
  EXPECT_EQ(render_step(Step::recognition(), Task::mult), "Ah! I made a mistake.");
  EXPECT_EQ(render_step(Step::correction(Step::add(1, 2, 3)), Task::mult), "1 + 2 = 3");
}

TEST(Render, SudokuLines) {
  EXPECT_EQ(render_step(Step::move({1, 4, 4}), Task::sudoku), "Cell (1, 4) has only candidate 4. Place 4 at (1, 4).");
  EXPECT_EQ(render_step(Step::answer("1234341221434321"), Task::sudoku), "Answer:\n1234\n3412\n2143\n4321");
}

TEST(Render, RejectsBrokenTriples) {
  CotTrace t;
  t.push(Step::partial(1234, 8, 9873), Provenance::injected_error);
  t.push(Step::partial(1234, 8, 9872));
  EXPECT_THROW(render(t), InvalidTrace);

  CotTrace lone;
  lone.push(Step::recognition(), Provenance::recognition);
  EXPECT_THROW(render(lone), InvalidTrace);

  CotTrace early;
  early.push(Step::answer("1"));
  early.push(Step::partial(1, 1, 1));
  EXPECT_THROW(render(early), InvalidTrace);

  EXPECT_THROW(Step::correction(Step::recognition()), InvalidTrace);
}

TEST(Parse, MultExamples) {
  const auto t = parse("1234 * 8 = 9872\nAh! I made a mistake.\nlet me think...\n", Task::mult);
  ASSERT_EQ(t.steps.size(), 3u);
  EXPECT_EQ(t.steps[0], Step::partial(1234, 8, 9872));
  EXPECT_EQ(t.annotations[0], Provenance::injected_error);
  EXPECT_EQ(t.steps[1].kind, StepKind::Recognition);
  EXPECT_EQ(t.steps[2].kind, StepKind::Unparseable);
  EXPECT_EQ(t.steps[2].text(), "let me think...");
}

TEST(Parse, CorrectionFollowsRecognition) {
  const auto t = parse("1 + 2 = 4\nAh! I made a mistake.\n1 + 2 = 3\nAnswer: 3\n", Task::mult);
  ASSERT_EQ(t.steps.size(), 4u);
  EXPECT_EQ(t.steps[2].kind, StepKind::Correction);
  EXPECT_EQ(t.steps[2].unwrapped(), Step::add(1, 2, 3));
  EXPECT_EQ(t.annotations[2], Provenance::correction);
}

TEST(Parse, NonCanonicalNumbersAreUnparseable) {
  for (const char* line : {"01 + 2 = 3", "1 + 2 = 3x", "1+2=3", "1234567890123456789 + 1 = 2", "-1 + 2 = 1"}) {
    const auto t = parse(line, Task::mult);
    ASSERT_EQ(t.steps.size(), 1u) << line;
    EXPECT_EQ(t.steps[0].kind, StepKind::Unparseable) << line;
  }
}

TEST(Parse, SudokuLinesAndAnswerBlock) {
  const auto t = parse("Cell (1, 4) has only candidate 4. Place 4 at (1, 4).\nCell (5, 1) has only candidate 2. Place 2 at (5, 1).\n"
                       "Cell (1, 4) has only candidate 4. Place 3 at (1, 4).\nAnswer:\n1234\n3412\n2143\n4321\n",
                       Task::sudoku);
  ASSERT_EQ(t.steps.size(), 4u);
  EXPECT_EQ(t.steps[0], Step::move({1, 4, 4}));
  EXPECT_EQ(t.steps[1], Step::move({5, 1, 2}));
  EXPECT_EQ(t.steps[2].kind, StepKind::Unparseable);
  EXPECT_EQ(t.steps[3], Step::answer("1234341221434321"));
}

TEST(Parse, TrailingWhitespaceAndBlankLines) {
  const auto t = parse("1 + 2 = 3 \r\n\n\nAh! I made a mistake.  \n", Task::mult);
  ASSERT_EQ(t.steps.size(), 2u);
  EXPECT_EQ(t.steps[0], Step::add(1, 2, 3));
  EXPECT_EQ(t.steps[1].kind, StepKind::Recognition);
}

TEST(Parse, EmptyText) { EXPECT_TRUE(parse("", Task::mult).steps.empty()); }

TEST(RoundTrip, RandomTracesBothTasks) {
  for (Task task : {Task::mult, Task::sudoku}) {
    for (std::uint64_t i = 0; i < 2000; ++i) {
      const CotTrace t = random_trace(task, 99, i);
      const std::string text = render(t);
      ASSERT_TRUE(is_ascii(text));
      const CotTrace back = parse(text, t.problem.value());
      ASSERT_EQ(back, t) << text;
    }
  }
}

TEST(Triples, AnnotationPattern) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    const CotTrace t = random_trace(Task::mult, 5, i);
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      if (t.annotations[k] != Provenance::injected_error) continue;
      ASSERT_LT(k + 2, t.steps.size());
      EXPECT_EQ(t.annotations[k + 1], Provenance::recognition);
      EXPECT_EQ(t.annotations[k + 2], Provenance::correction);
    }
    EXPECT_EQ(strip_injections(t).steps, golden_cot(t.problem.value()).steps);
  }
}
