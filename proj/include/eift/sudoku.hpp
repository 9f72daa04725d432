#pragma once
// 4x4 Sudoku restricted to naked-single solution paths.
//
// Public functions take 1-based (row, col) like the rendered text; Board
// accessors are 0-based.

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cot.hpp"
#include "rng.hpp"

namespace eift::sudoku {

class CellOccupied : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Subset of {1,2,3,4} as a bitmask (bit v set = v allowed).
struct CandidateSet {
  std::uint8_t mask = 0;

  bool contains(int v) const { return v >= 1 && v <= 4 && (mask >> v) & 1U; }
  int size() const { return std::popcount(static_cast<unsigned>(mask)); }
  std::vector<int> values() const {
    std::vector<int> out;
    for (int v = 1; v <= 4; ++v)
      if (contains(v)) out.push_back(v);
    return out;
  }
  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

inline int box_of(int r0, int c0) { return (r0 / 2) * 2 + c0 / 2; }

/// Values not yet used in the row, column or 2x2 box of an empty cell.
inline CandidateSet candidates(const Board& b, int row, int col) {
  const int r0 = row - 1, c0 = col - 1;
  if (!b.empty_at(r0, c0)) throw CellOccupied("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") is filled");
  std::uint8_t used = 0;
  for (int k = 0; k < 4; ++k) {
    used |= static_cast<std::uint8_t>(1U << b.at(r0, k));
    used |= static_cast<std::uint8_t>(1U << b.at(k, c0));
  }
  const int br = (r0 / 2) * 2, bc = (c0 / 2) * 2;
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) used |= static_cast<std::uint8_t>(1U << b.at(br + dr, bc + dc));
  return {static_cast<std::uint8_t>(0b11110 & ~used)};
}

/// True if placing `value` at the 0-based cell repeats a value in its
/// row, column or box (the cell itself is ignored).
inline bool conflicts(const Board& b, int r0, int c0, int value) {
  for (int k = 0; k < 4; ++k) {
    if (k != c0 && b.at(r0, k) == value) return true;
    if (k != r0 && b.at(k, c0) == value) return true;
  }
  const int br = (r0 / 2) * 2, bc = (c0 / 2) * 2;
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) {
      const int r = br + dr, c = bc + dc;
      if ((r != r0 || c != c0) && b.at(r, c) == value) return true;
    }
  return false;
}

/// No duplicates in any row, column or box (empty cells allowed).
inline bool is_consistent(const Board& b) {
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (b.at(r, c) && conflicts(b, r, c, b.at(r, c))) return false;
  return true;
}

inline bool is_valid_solution(const Board& b) { return b.complete() && is_consistent(b); }

/// Row-major-first empty cell with exactly one candidate.
inline std::optional<Move> first_naked_single(const Board& b) {
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c) {
      if (!b.empty_at(r - 1, c - 1)) continue;
      const auto cand = candidates(b, r, c);
      if (cand.size() == 1) return Move{r, c, cand.values().front()};
    }
  return std::nullopt;
}

/// Greedy naked-single solve. Returns the move list iff it completes the board.
inline std::optional<std::vector<Move>> solve_naked_singles(Board b) {
  std::vector<Move> path;
  while (!b.complete()) {
    auto m = first_naked_single(b);
    if (!m) return std::nullopt;
    b.set(m->row - 1, m->col - 1, m->value);
    path.push_back(*m);
  }
  return path;
}

enum class MoveVerdict { ValidNakedSingle, ValidNotSingle, Invalid };

inline std::string_view to_string(MoveVerdict v) {
  switch (v) {
    case MoveVerdict::ValidNakedSingle: return "valid_naked_single";
    case MoveVerdict::ValidNotSingle: return "valid_not_single";
    case MoveVerdict::Invalid: return "invalid";
  }
  return "?";
}

inline MoveVerdict verify_move(const Board& b, const Move& m) {
  if (!m.in_range()) return MoveVerdict::Invalid;
  if (!b.empty_at(m.row - 1, m.col - 1)) return MoveVerdict::Invalid;
  const auto cand = candidates(b, m.row, m.col);
  if (!cand.contains(m.value)) return MoveVerdict::Invalid;
  return cand.size() == 1 ? MoveVerdict::ValidNakedSingle : MoveVerdict::ValidNotSingle;
}

inline void apply(Board& b, const Move& m) { b.set(m.row - 1, m.col - 1, m.value); }

namespace detail {

inline bool fill_random(Board& b, int cell, Rng& rng) {
  if (cell == 16) return true;
  const int r0 = cell / 4, c0 = cell % 4;
  std::array<int, 4> order{1, 2, 3, 4};
  std::shuffle(order.begin(), order.end(), rng);
  for (int v : order) {
    if (conflicts(b, r0, c0, v)) continue;
    b.set(r0, c0, v);
    if (fill_random(b, cell + 1, rng)) return true;
    b.set(r0, c0, 0);
  }
  return false;
}

}  // namespace detail

/// Random complete board from a backtracking solver with shuffled value order.
inline Board random_solution(Rng& rng) {
  Board b;
  detail::fill_random(b, 0, rng);
  return b;
}

struct GenConfig {
  /// Removal stops once this many clues remain.
  int clue_floor = 0;
};

/// Removes random clues one at a time, rejecting any removal that breaks
/// naked-single solvability, until no clue can be removed or the floor is hit.
inline SudokuPuzzle gen_puzzle(Rng& rng, const GenConfig& cfg = {}) {
  SudokuPuzzle p;
  p.solution = random_solution(rng);
  p.initial = p.solution;
  for (;;) {
    if (p.initial.filled_count() <= cfg.clue_floor) break;
    std::vector<int> filled;
    for (int i = 0; i < 16; ++i)
      if (p.initial.cells[static_cast<std::size_t>(i)]) filled.push_back(i);
    std::shuffle(filled.begin(), filled.end(), rng);
    bool removed = false;
    for (int i : filled) {
      Board trial = p.initial;
      trial.cells[static_cast<std::size_t>(i)] = 0;
      if (solve_naked_singles(trial)) {
        p.initial = trial;
        removed = true;
        break;
      }
    }
    if (!removed) break;
  }
  return p;
}

inline constexpr std::string_view kPromptHeader = "Solve this 4x4 Sudoku:";

inline std::string prompt(const Board& initial) {
  std::string out(kPromptHeader);
  for (int r = 0; r < 4; ++r) out += '\n' + initial.row_string(r);
  return out;
}

/// Reads the header line plus four board rows.
inline std::optional<Board> parse_prompt(const std::vector<std::string_view>& lines) {
  if (lines.size() < 5 || eift::detail::rtrim(lines[0]) != kPromptHeader) return std::nullopt;
  std::string flat;
  for (std::size_t k = 1; k <= 4; ++k) flat += eift::detail::rtrim(lines[k]);
  auto b = Board::from_flat(flat);
  if (!b || !is_consistent(*b)) return std::nullopt;
  return b;
}

inline CotTrace golden_cot(const SudokuPuzzle& p) {
  CotTrace t;
  t.task = Task::sudoku;
  t.problem = p;
  const auto path = solve_naked_singles(p.initial);
  if (!path) throw std::invalid_argument("puzzle is not naked-single solvable");
  for (const auto& m : *path) t.push(Step::move(m));
  t.push(Step::answer(p.solution.flat()));
  return t;
}

/// Board after replaying the first `count` steps of `t` on the initial board.
/// Injected errors and recognitions are skipped; corrections are applied.
inline Board board_after(const CotTrace& t, std::size_t count) {
  Board b = std::get<SudokuPuzzle>(t.problem.value()).initial;
  for (std::size_t i = 0; i < count && i < t.steps.size(); ++i) {
    if (t.annotations[i] == Provenance::injected_error) continue;
    const Step s = t.steps[i].unwrapped();
    if (s.kind == StepKind::SudokuMove && verify_move(b, s.move()) != MoveVerdict::Invalid) apply(b, s.move());
  }
  return b;
}

/// Row-major-first naked single after replaying the prefix. Every replayed
/// move must itself be a valid naked single.
inline Step next_golden_step(const CotTrace& prefix) {
  if (!prefix.problem || !std::holds_alternative<SudokuPuzzle>(*prefix.problem))
    throw NoCanonicalContinuation("prefix carries no Sudoku puzzle");
  const CotTrace clean = strip_injections(prefix);
  Board b = std::get<SudokuPuzzle>(*prefix.problem).initial;
  for (std::size_t i = 0; i < clean.steps.size(); ++i) {
    const Step& s = clean.steps[i];
    if (s.kind != StepKind::SudokuMove || verify_move(b, s.move()) != MoveVerdict::ValidNakedSingle)
      throw NoCanonicalContinuation("prefix leaves the naked-single path at step " + std::to_string(i));
    apply(b, s.move());
  }
  if (b.complete()) return Step::answer(b.flat());
  auto m = first_naked_single(b);
  if (!m) throw NoCanonicalContinuation("no naked single available");
  return Step::move(*m);
}

}  // namespace eift::sudoku
