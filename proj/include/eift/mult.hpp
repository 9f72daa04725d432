#pragma once
// 4-digit multiplication: problems, golden long-multiplication traces and
// step verification.
//
// Golden layout: one partial product "a * (d*10^i) = p" per nonzero digit d
// of the multiplier, least significant first, then a running sum that adds
// the partials left to right, then the answer.

#include <optional>
#include <string>
#include <string_view>

#include "cot.hpp"
#include "rng.hpp"

namespace eift::mult {

enum class StepVerdict { Correct, ModeledError, Unmodeled };

inline std::string_view to_string(StepVerdict v) {
  switch (v) {
    case StepVerdict::Correct: return "correct";
    case StepVerdict::ModeledError: return "modeled_error";
    case StepVerdict::Unmodeled: return "unmodeled";
  }
  return "?";
}

inline constexpr std::int64_t kMinOperand = 1000;
inline constexpr std::int64_t kMaxOperand = 9999;

inline MultProblem gen_problem(Rng& rng) {
  const auto a = uniform_int(rng, kMinOperand, kMaxOperand);
  const auto b = uniform_int(rng, kMinOperand, kMaxOperand);
  return {a, b};
}

inline std::string prompt(const MultProblem& p) {
  return "Compute " + std::to_string(p.a) + " * " + std::to_string(p.b) + ".";
}

/// Reads "Compute <a> * <b>." with both operands 4-digit.
inline std::optional<MultProblem> parse_prompt(std::string_view line) {
  line = detail::rtrim(line);
  if (!detail::consume(line, "Compute ")) return std::nullopt;
  auto a = detail::consume_number(line);
  if (!a || !detail::consume(line, " * ")) return std::nullopt;
  auto b = detail::consume_number(line);
  if (!b || line != ".") return std::nullopt;
  const auto in_range = [](std::uint64_t v) {
    return v >= static_cast<std::uint64_t>(kMinOperand) && v <= static_cast<std::uint64_t>(kMaxOperand);
  };
  if (!in_range(*a) || !in_range(*b)) return std::nullopt;
  return MultProblem{static_cast<std::int64_t>(*a), static_cast<std::int64_t>(*b)};
}

inline CotTrace golden_cot(const MultProblem& p) {
  CotTrace t;
  t.task = Task::mult;
  t.problem = p;
  const auto a = static_cast<std::uint64_t>(p.a);
  std::vector<std::uint64_t> partials;
  std::uint64_t place = 1;
  for (auto rest = static_cast<std::uint64_t>(p.b); rest > 0; rest /= 10, place *= 10) {
    const std::uint64_t digit = rest % 10;
    if (digit == 0) continue;
    const std::uint64_t multiplier = digit * place;
    partials.push_back(a * multiplier);
    t.push(Step::partial(a, multiplier, a * multiplier));
  }
  std::uint64_t sum = partials.front();
  for (std::size_t k = 1; k < partials.size(); ++k) {
    t.push(Step::add(sum, partials[k], sum + partials[k]));
    sum += partials[k];
  }
  t.push(Step::answer(std::to_string(sum)));
  return t;
}

/// Pure function of the step: arithmetic is self-contained.
inline StepVerdict verify_step(const Step& step) {
  const Step s = step.unwrapped();
  if (s.kind == StepKind::MultAdd) {
    const auto& e = s.equation();
    return e.lhs + e.rhs == e.result ? StepVerdict::Correct : StepVerdict::ModeledError;
  }
  if (s.kind == StepKind::MultPartial) {
    const auto& e = s.equation();
    const unsigned __int128 product = static_cast<unsigned __int128>(e.lhs) * e.rhs;
    return product == e.result ? StepVerdict::Correct : StepVerdict::ModeledError;
  }
  return StepVerdict::Unmodeled;
}

/// The golden step following `prefix`, which must carry its problem and
/// agree with the golden layout once injections are stripped.
inline Step next_golden_step(const CotTrace& prefix) {
  if (!prefix.problem || !std::holds_alternative<MultProblem>(*prefix.problem))
    throw NoCanonicalContinuation("prefix carries no multiplication problem");
  const CotTrace golden = golden_cot(std::get<MultProblem>(*prefix.problem));
  const CotTrace clean = strip_injections(prefix);
  if (clean.steps.size() >= golden.steps.size())
    throw NoCanonicalContinuation("prefix already covers the whole golden trace");
  for (std::size_t i = 0; i < clean.steps.size(); ++i)
    if (!(clean.steps[i] == golden.steps[i]))
      throw NoCanonicalContinuation("prefix diverges from the golden layout at step " + std::to_string(i));
  return golden.steps[clean.steps.size()];
}

}  // namespace eift::mult
