#include <gtest/gtest.h>

#include <map>

#include "eift/injector.hpp"
#include "eift/tasks.hpp"
#include "oracles.hpp"

using namespace eift;

namespace {

// Reference error-type probabilities by step kind.
const std::vector<double> kAdditionTable = {0.5, 0.025, 0.025, 0.125, 0.125, 0.20};
const std::vector<double> kNonAdditionTable = {0.0, 0.05, 0.05, 0.25, 0.25, 0.40};

std::size_t type_index(ErrorType t) {
  for (std::size_t k = 0; k < kMultErrorTypes.size(); ++k)
    if (kMultErrorTypes[k] == t) return k;
  return 99;
}

}  // namespace

TEST(Weights, DefaultsMatchTable) {
  const TypeWeights w;
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_DOUBLE_EQ(w.addition[k], kAdditionTable[k]);
    EXPECT_DOUBLE_EQ(w.non_addition[k], kNonAdditionTable[k]);
  }
  EXPECT_NO_THROW(w.validate());
  TypeWeights bad = w;
  bad.non_addition[0] = 0.1;
  bad.non_addition[5] = 0.3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = w;
  bad.addition[1] = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Carry, Examples) {
  EXPECT_EQ(carry_columns(9872, 86380), std::vector<int>{4});
  EXPECT_EQ(carry_swapped_sum(9872, 86380, 4), 106252u);
  EXPECT_EQ(carry_columns(15, 25), std::vector<int>{0});
  EXPECT_EQ(carry_swapped_sum(15, 25, 0), 39u);
  EXPECT_TRUE(carry_columns(11, 22).empty());
  Rng rng(1);
  EXPECT_FALSE(carry_error(Step::add(11, 22, 33), rng));
  const auto r = carry_error(Step::add(9872, 86380, 96252), rng);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->step, Step::add(9872, 86380, 106252));
  EXPECT_EQ(r->column, 4);
}

TEST(Carry, ColumnsMatchColumnOracleAndLawHolds) {
  Rng rng(2);
  for (int i = 0; i < 20000; ++i) {
    const auto a = static_cast<std::uint64_t>(uniform_int(rng, 1, 99999999));
    const auto b = static_cast<std::uint64_t>(uniform_int(rng, 1, 99999999));
    const auto sums = oracle::column_sums(std::to_string(a), std::to_string(b));
    std::vector<int> want;
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (sums[c] == 9 || sums[c] == 10) want.push_back(static_cast<int>(c));
    ASSERT_EQ(carry_columns(a, b), want);
    for (int c : want) {
      const auto v = carry_swapped_sum(a, b, c);
      const std::uint64_t delta = oracle::pow10(c);
      ASSERT_EQ(v, sums[static_cast<std::size_t>(c)] == 9 ? a + b + delta : a + b - delta);
    }
  }
}

TEST(IntError, ReplayExamples) {
  ErrorSpec s;
  s.type = ErrorType::IntError10;
  s.offset = -3;
  EXPECT_EQ(replay_int_error(9872, s), 9869u);
  s = {};
  s.type = ErrorType::IntErrorSingleDigit;
  s.position = 2;
  s.replacement = "4";
  EXPECT_EQ(replay_int_error(7006652, s), 7046652u);
  s = {};
  s.type = ErrorType::IntErrorTwoDigits;
  s.position = 1;
  s.replacement = "31";
  EXPECT_EQ(replay_int_error(9872, s), 9312u);
}

TEST(IntError, Inapplicable) {
  Rng rng(1);
  EXPECT_THROW(int_error(7, ErrorType::IntErrorTwoDigits, rng), VariantInapplicable);
  EXPECT_THROW(int_error(0, ErrorType::IntError10, rng), VariantInapplicable);
  EXPECT_THROW(int_error(10, ErrorType::CarryError, rng), VariantInapplicable);
}

TEST(IntError, CorruptionValidity) {
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const auto v = static_cast<std::uint64_t>(uniform_int(rng, 1, 99999999));
    const std::string vs = std::to_string(v);
    for (std::size_t k = 1; k < 6; ++k) {
      const ErrorType t = kMultErrorTypes[k];
      if (!int_error_applicable(v, t)) continue;
      const auto r = int_error(v, t, rng);
      const std::string rs = std::to_string(r.value);
      ASSERT_NE(r.value, v);
      ASSERT_GT(r.value, 0u);
      const auto delta = static_cast<std::int64_t>(r.value) - static_cast<std::int64_t>(v);
      switch (t) {
        case ErrorType::IntError10: ASSERT_LE(std::abs(delta), 10); break;
        case ErrorType::IntError100: ASSERT_LE(std::abs(delta), 100); break;
        case ErrorType::IntErrorSingleDigit:
        case ErrorType::IntErrorSingleDigitClose: {
          ASSERT_EQ(rs.size(), vs.size());
          int diffs = 0;
          for (std::size_t j = 0; j < vs.size(); ++j)
            if (vs[j] != rs[j]) {
              ++diffs;
              if (t == ErrorType::IntErrorSingleDigitClose) {
                ASSERT_LE(std::abs(vs[j] - rs[j]), 2);
              }
            }
          ASSERT_EQ(diffs, 1);
          break;
        }
        case ErrorType::IntErrorTwoDigits: {
          ASSERT_EQ(rs.size(), vs.size());
          std::size_t first = vs.size(), last = 0;
          for (std::size_t j = 0; j < vs.size(); ++j)
            if (vs[j] != rs[j]) first = std::min(first, j), last = j;
          ASSERT_LE(last - first, 1u);
          break;
        }
        default: break;
      }
      ErrorSpec spec;
      spec.type = t;
      spec.offset = r.offset;
      spec.position = r.position;
      spec.replacement = r.replacement;
      ASSERT_EQ(replay_int_error(v, spec), r.value);
    }
  }
}

TEST(SampleError, AdditionFrequenciesMatchTable) {
  // Steps with at least one carry-eligible column, so the reference table applies unchanged.
  Rng rng(4);
  const int n = 100000;
  std::vector<double> counts(6, 0.0);
  const Step step = Step::add(9872, 86380, 96252);
  for (int i = 0; i < n; ++i) counts[type_index(sample_error(step, {}, {}, rng).spec.type)] += 1;
  std::vector<double> expected;
  for (double p : kAdditionTable) expected.push_back(p * n);
  const auto chi = oracle::chi_square(counts, expected);
  EXPECT_TRUE(chi.pass()) << chi.statistic << " > " << chi.critical;
}

TEST(SampleError, NonAdditionFrequenciesMatchTable) {
  Rng rng(5);
  const int n = 100000;
  std::vector<double> counts(6, 0.0);
  const Step step = Step::partial(1234, 5000, 6170000);
  for (int i = 0; i < n; ++i) counts[type_index(sample_error(step, {}, {}, rng).spec.type)] += 1;
  std::vector<double> expected;
  for (double p : kNonAdditionTable) expected.push_back(p * n);
  const auto chi = oracle::chi_square(counts, expected);
  EXPECT_TRUE(chi.pass()) << chi.statistic << " > " << chi.critical;
  EXPECT_NEAR(counts[5] / n, 0.40, 0.01);
}

TEST(SampleError, CarryFallbackUsesIntegerDistribution) {
  Rng rng(6);
  const Step step = Step::add(11, 22, 33);
  int fallback = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto e = sample_error(step, {}, {}, rng);
    EXPECT_NE(e.spec.type, ErrorType::CarryError);
    fallback += e.spec.carry_fallback;
    EXPECT_NE(e.step, step);
  }
  EXPECT_NEAR(fallback / 10000.0, 0.5, 0.03);
}

TEST(SampleError, ReplayReproducesStep) {
  for (std::uint64_t i = 0; i < 3000; ++i) {
    Rng rng = make_rng(7, {i});
    const Problem p = gen_problem(i % 2 ? Task::mult : Task::sudoku, rng);
    const auto golden = golden_cot(p);
    for (std::size_t k : injectable_indices(golden)) {
      const auto e = sample_error(golden.steps[k], context_at(golden, k), {}, rng);
      ASSERT_EQ(apply_error(golden.steps[k], e.spec), e.step);
      ASSERT_NE(e.step, golden.steps[k]);
    }
  }
}

TEST(SampleError, SudokuSupportIsInvalidOrNotSingle) {
  std::map<ErrorType, int> by_type;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    Rng rng = make_rng(8, {i});
    const auto p = sudoku::gen_puzzle(rng);
    const auto golden = sudoku::golden_cot(p);
    for (std::size_t k : injectable_indices(golden)) {
      const auto ctx = context_at(golden, k);
      const auto e = sample_error(golden.steps[k], ctx, {}, rng);
      const auto verdict = sudoku::verify_move(*ctx.board, e.step.move());
      ASSERT_NE(verdict, sudoku::MoveVerdict::ValidNakedSingle);
      ASSERT_EQ(verdict == sudoku::MoveVerdict::Invalid, e.spec.type == ErrorType::SudokuInvalidMove);
      ++by_type[e.spec.type];
    }
  }
  EXPECT_GT(by_type[ErrorType::SudokuInvalidMove], 0);
  EXPECT_GT(by_type[ErrorType::SudokuNotSingle], 0);
}

TEST(SampleError, SudokuFallsBackToInvalidWithoutNonSinglePlacements) {
  const Board solution = Board::from_flat("1234341221434321").value();
  Board b = solution;
  b.set(0, 3, 0);
  ASSERT_TRUE(detail::non_single_placements(b).empty());
  Rng rng(9);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(sample_error(Step::move({1, 4, 4}), {b}, {}, rng).spec.type, ErrorType::SudokuInvalidMove);
}

TEST(SampleError, UninjectableKinds) {
  Rng rng(1);
  EXPECT_THROW(sample_error(Step::answer("5"), {}, {}, rng), StepUninjectable);
  EXPECT_THROW(sample_error(Step::recognition(), {}, {}, rng), StepUninjectable);
}

TEST(ErrorProbability, SumsToOneOverExhaustiveSupport) {
  const TypeWeights w;
  for (const Step& step : {Step::add(9872, 86380, 96252), Step::partial(1234, 70, 86380), Step::add(11, 22, 33)}) {
    double total = 0.0;
    for (std::uint64_t v = 1; v <= 200000; ++v) {
      if (v == step.equation().result) continue;
      total += error_probability(step, {}, w, Step{step.kind, step.kind, Equation{step.equation().lhs, step.equation().rhs, v}});
    }
    EXPECT_NEAR(total, 1.0, 1e-9) << render_step(step, Task::mult);
  }
}

TEST(ErrorProbability, MatchesMonteCarlo) {
  const Step step = Step::add(96252, 740400, 836652);
  Rng rng(10);
  const int n = 400000;
  std::map<std::uint64_t, int> freq;
  for (int i = 0; i < n; ++i) ++freq[sample_error(step, {}, {}, rng).step.equation().result];
  int outside = 0;
  for (const auto& [v, c] : freq) {
    const double p = error_probability(step, {}, {}, Step::add(96252, 740400, v));
    ASSERT_GT(p, 0.0) << v;
    const double sd = std::sqrt(p * (1 - p) / n);
    outside += std::abs(c / double(n) - p) > 4 * sd + 1e-12;
  }
  EXPECT_LE(outside, 1);
}

TEST(ErrorProbability, SudokuSumsToOne) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = make_rng(13, {i});
    const auto golden = sudoku::golden_cot(sudoku::gen_puzzle(rng));
    for (std::size_t k : injectable_indices(golden)) {
      const auto ctx = context_at(golden, k);
      double total = 0.0;
      for (int r = 0; r <= 5; ++r)
        for (int c = 0; c <= 5; ++c)
          for (int v = 0; v <= 5; ++v) total += error_probability(golden.steps[k], ctx, {}, Step::move({r, c, v}));
      ASSERT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Classify, LabelsMostLikelyType) {
  const Step golden = Step::add(9872, 86380, 96252);
  EXPECT_EQ(classify_error(golden, {}, {}, Step::add(9872, 86380, 106252)), "carry_error");
  EXPECT_EQ(classify_error(golden, {}, {}, Step::add(9872, 86380, 96254)), "int_error_single_digit_close");
  // A units change of 3 is outside the close variant's +-2 window.
  EXPECT_EQ(classify_error(golden, {}, {}, Step::add(9872, 86380, 96255)), "int_error_single_digit");
  EXPECT_EQ(classify_error(golden, {}, {}, Step::add(9872, 86380, 962520)), "unmodeled");
  EXPECT_EQ(classify_error(golden, {}, {}, Step::add(9873, 86380, 96253)), "unmodeled");
}

TEST(Inject, CleanMixIsIdentity) {
  MixConfig mix;
  mix.clean_fraction = 1.0;
  Rng rng(1);
  const auto golden = mult::golden_cot({1234, 5678});
  const auto r = inject(golden, mix, rng);
  EXPECT_EQ(r.trace, golden);
  EXPECT_TRUE(r.errors.empty());
}

TEST(Inject, StructureAndSpecs) {
  MixConfig mix;
  mix.clean_fraction = 0.0;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    Rng rng = make_rng(14, {i});
    const Problem p = gen_problem(i % 2 ? Task::mult : Task::sudoku, rng);
    const auto golden = golden_cot(p);
    const auto r = inject(golden, mix, rng);
    ASSERT_NO_THROW(validate(r.trace, false));
    ASSERT_EQ(strip_injections(r.trace), golden);
    const std::size_t sites = injectable_indices(golden).size();
    ASSERT_EQ(r.errors.size(), std::min<std::size_t>(sites, r.errors.size()));
    ASSERT_GE(r.errors.size(), 1u);
    ASSERT_LE(r.errors.size(), 4u);
    for (const auto& spec : r.errors) {
      ASSERT_EQ(r.trace.annotations[spec.step_index], Provenance::injected_error);
      ASSERT_EQ(apply_error(golden.steps[spec.golden_index], spec), r.trace.steps[spec.step_index]);
    }
  }
}

TEST(Inject, ErrorCountUniform) {
  MixConfig mix;
  mix.clean_fraction = 0.0;
  std::vector<double> counts(4, 0.0);
  int used = 0;
  for (std::uint64_t i = 0; i < 40000; ++i) {
    Rng rng = make_rng(15, {i});
    const auto golden = mult::golden_cot(mult::gen_problem(rng));
    if (injectable_indices(golden).size() < 4) continue;
    counts[inject(golden, mix, rng).errors.size() - 1] += 1;
    ++used;
  }
  const std::vector<double> expected(4, used / 4.0);
  EXPECT_TRUE(oracle::chi_square(counts, expected).pass());
}

TEST(Inject, UninjectableTraceReturnedCleanWithFlag) {
  Rng rng(1);
  const auto full = sudoku::gen_puzzle(rng, {16});
  MixConfig mix;
  mix.clean_fraction = 0.0;
  const auto r = inject(sudoku::golden_cot(full), mix, rng);
  EXPECT_TRUE(r.uninjectable);
  EXPECT_TRUE(r.errors.empty());
}
