#pragma once
// Task-generic entry points over the multiplication and Sudoku modules.

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cot.hpp"
#include "mult.hpp"
#include "sudoku.hpp"

namespace eift {

inline Problem gen_problem(Task task, Rng& rng, const sudoku::GenConfig& gen = {}) {
  if (task == Task::mult) return mult::gen_problem(rng);
  return sudoku::gen_puzzle(rng, gen);
}

inline CotTrace golden_cot(const Problem& p) {
  if (const auto* m = std::get_if<MultProblem>(&p)) return mult::golden_cot(*m);
  return sudoku::golden_cot(std::get<SudokuPuzzle>(p));
}

/// Prompt text without a trailing newline.
inline std::string task_prompt(const Problem& p) {
  if (const auto* m = std::get_if<MultProblem>(&p)) return mult::prompt(*m);
  return sudoku::prompt(std::get<SudokuPuzzle>(p).initial);
}

/// The text a policy is asked to continue: prompt line(s), then any step prefix.
inline std::string policy_prompt(const Problem& p, std::string_view prefix_steps = {}) {
  return task_prompt(p) + "\n" + std::string(prefix_steps);
}

inline std::string expected_answer(const Problem& p) {
  if (const auto* m = std::get_if<MultProblem>(&p)) return std::to_string(m->a * m->b);
  return std::get<SudokuPuzzle>(p).solution.flat();
}

struct ParsedPrompt {
  Problem problem;
  /// Steps already present after the task prompt, parsed against the problem.
  CotTrace prefix;
};

/// Splits a policy prompt into its problem and step prefix. nullopt when the
/// task prompt is missing or malformed (or a Sudoku board has no
/// naked-single solution).
inline std::optional<ParsedPrompt> parse_policy_prompt(std::string_view text, Task task) {
  std::vector<std::string_view> lines;
  std::string_view rest = text;
  while (!rest.empty()) {
    auto nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  std::size_t header_lines = 0;
  std::optional<Problem> problem;
  if (task == Task::mult) {
    if (lines.empty()) return std::nullopt;
    if (auto m = mult::parse_prompt(lines[0])) problem = *m, header_lines = 1;
  } else if (auto b = sudoku::parse_prompt(lines)) {
    auto path = sudoku::solve_naked_singles(*b);
    if (!path) return std::nullopt;
    SudokuPuzzle p{*b, *b};
    for (const auto& m : *path) sudoku::apply(p.solution, m);
    problem = p, header_lines = 5;
  }
  if (!problem) return std::nullopt;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < header_lines; ++i) offset += lines[i].size() + 1;
  offset = std::min(offset, text.size());
  return ParsedPrompt{*problem, parse(text.substr(offset), *problem)};
}

/// Policy request id, e.g. "acc-mult-0000042".
inline std::string request_id(std::string_view kind, Task task, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s-%s-%07zu", static_cast<int>(kind.size()), kind.data(),
                std::string(to_string(task)).c_str(), index);
  return buf;
}

inline Step next_golden_step(const CotTrace& prefix) {
  if (prefix.task == Task::mult) return mult::next_golden_step(prefix);
  return sudoku::next_golden_step(prefix);
}

/// Index of the first step that is a modeled error: a false arithmetic
/// claim (mult) or a move that is not a valid naked single when replayed
/// (Sudoku). Unparseable lines are never errors.
inline std::optional<std::size_t> find_first_error(const CotTrace& t) {
  if (t.task == Task::mult) {
    for (std::size_t i = 0; i < t.steps.size(); ++i)
      if (mult::verify_step(t.steps[i]) == mult::StepVerdict::ModeledError) return i;
    return std::nullopt;
  }
  if (!t.problem) throw std::invalid_argument("Sudoku error scan needs the puzzle");
  Board b = std::get<SudokuPuzzle>(*t.problem).initial;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Step s = t.steps[i].unwrapped();
    if (s.kind != StepKind::SudokuMove) continue;
    if (sudoku::verify_move(b, s.move()) != sudoku::MoveVerdict::ValidNakedSingle) return i;
    sudoku::apply(b, s.move());
  }
  return std::nullopt;
}

}  // namespace eift
