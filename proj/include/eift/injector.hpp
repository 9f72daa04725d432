#pragma once
// Synthetic error models and the injection procedure.
//
// Injecting an error at golden step s replaces it with three steps: the
// corrupted step s', the recognition marker, and s again as a correction.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cot.hpp"
#include "mult.hpp"
#include "rng.hpp"
#include "sudoku.hpp"

namespace eift {

enum class ErrorType {
  CarryError,
  IntError10,
  IntError100,
  IntErrorSingleDigit,
  IntErrorSingleDigitClose,
  IntErrorTwoDigits,
  SudokuInvalidMove,
  SudokuNotSingle,
};

inline constexpr std::array<ErrorType, 6> kMultErrorTypes = {
    ErrorType::CarryError,          ErrorType::IntError10,
    ErrorType::IntError100,         ErrorType::IntErrorSingleDigit,
    ErrorType::IntErrorSingleDigitClose, ErrorType::IntErrorTwoDigits};

inline std::string_view to_string(ErrorType t) {
  switch (t) {
    case ErrorType::CarryError: return "carry_error";
    case ErrorType::IntError10: return "int_error_10";
    case ErrorType::IntError100: return "int_error_100";
    case ErrorType::IntErrorSingleDigit: return "int_error_single_digit";
    case ErrorType::IntErrorSingleDigitClose: return "int_error_single_digit_close";
    case ErrorType::IntErrorTwoDigits: return "int_error_two_digits";
    case ErrorType::SudokuInvalidMove: return "sudoku_invalid_move";
    case ErrorType::SudokuNotSingle: return "sudoku_not_single";
  }
  return "?";
}

inline ErrorType parse_error_type(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorType::SudokuNotSingle); ++i)
    if (to_string(static_cast<ErrorType>(i)) == s) return static_cast<ErrorType>(i);
  throw std::invalid_argument("unknown error type: " + std::string(s));
}

enum class InvalidMoveKind { OutOfRange, OccupiedCell, ConstraintViolation };

inline std::string_view to_string(InvalidMoveKind k) {
  switch (k) {
    case InvalidMoveKind::OutOfRange: return "out_of_range";
    case InvalidMoveKind::OccupiedCell: return "occupied_cell";
    case InvalidMoveKind::ConstraintViolation: return "constraint_violation";
  }
  return "?";
}

inline InvalidMoveKind parse_invalid_move_kind(std::string_view s) {
  for (auto k : {InvalidMoveKind::OutOfRange, InvalidMoveKind::OccupiedCell, InvalidMoveKind::ConstraintViolation})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown invalid-move kind: " + std::string(s));
}

/// Everything needed to replay one corruption of a golden step.
struct ErrorSpec {
  ErrorType type = ErrorType::IntError10;
  /// Index of the erroneous step in the injected trace.
  std::size_t step_index = 0;
  /// Index of the replaced step in the golden trace.
  std::size_t golden_index = 0;
  /// IntError10 / IntError100.
  std::int64_t offset = 0;
  /// Digit index from the left (single-digit variants), window start from
  /// the left (two-digit variant), or column from the right (carry).
  int position = 0;
  /// Replacement digit(s) for the digit variants.
  std::string replacement;
  /// Carry error drawn but no eligible column; an integer error was used.
  bool carry_fallback = false;
  /// The bogus Sudoku move.
  std::optional<Move> move;
  std::optional<InvalidMoveKind> invalid_kind;

  friend bool operator==(const ErrorSpec&, const ErrorSpec&) = default;
};

/// Per-step-kind error-type probabilities. Arrays are indexed by the six
/// multiplication ErrorType values in declaration order.
struct TypeWeights {
  std::array<double, 6> addition{0.5, 0.025, 0.025, 0.125, 0.125, 0.20};
  std::array<double, 6> non_addition{0.0, 0.05, 0.05, 0.25, 0.25, 0.40};
  double sudoku_invalid = 0.5;
  double sudoku_not_single = 0.5;

  void validate() const {
    const auto check = [](std::string_view name, auto begin, auto end) {
      double sum = 0.0;
      for (auto it = begin; it != end; ++it) {
        if (!(*it >= 0.0)) throw std::invalid_argument(std::string(name) + " weights must be non-negative");
        sum += *it;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(std::string(name) + " weights must sum to 1");
    };
    check("addition", addition.begin(), addition.end());
    check("non_addition", non_addition.begin(), non_addition.end());
    if (non_addition[0] != 0.0) throw std::invalid_argument("carry_error applies only to addition steps");
    const std::array<double, 2> sud{sudoku_invalid, sudoku_not_single};
    check("sudoku", sud.begin(), sud.end());
  }
};

struct MixConfig {
  double clean_fraction = 0.8;
  int min_errors = 1;
  int max_errors = 4;
  TypeWeights weights;

  void validate() const {
    if (!(clean_fraction >= 0.0 && clean_fraction <= 1.0)) throw std::invalid_argument("clean_fraction must lie in [0, 1]");
    if (min_errors < 1 || max_errors < min_errors) throw std::invalid_argument("error count range must satisfy 1 <= min <= max");
    weights.validate();
  }
};

class VariantInapplicable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StepUninjectable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Carry errors

/// Columns (0 = units) where digit(lhs) + digit(rhs) + incoming carry is 9 or 10.
inline std::vector<int> carry_columns(std::uint64_t lhs, std::uint64_t rhs) {
  std::vector<int> out;
  int carry = 0;
  for (int c = 0; lhs > 0 || rhs > 0; ++c, lhs /= 10, rhs /= 10) {
    const int sum = static_cast<int>(lhs % 10 + rhs % 10) + carry;
    if (sum == 9 || sum == 10) out.push_back(c);
    carry = sum >= 10;
  }
  return out;
}

/// Result of adding with column c's sum flipped 9<->10: a spurious carry
/// adds 10^c, a dropped carry subtracts it.
inline std::uint64_t carry_swapped_sum(std::uint64_t lhs, std::uint64_t rhs, int column) {
  int carry = 0;
  std::uint64_t l = lhs, r = rhs, place = 1;
  for (int c = 0; c < column; ++c, l /= 10, r /= 10, place *= 10) carry = static_cast<int>(l % 10 + r % 10) + carry >= 10;
  const int sum = static_cast<int>(l % 10 + r % 10) + carry;
  if (sum == 9) return lhs + rhs + place;
  if (sum == 10) return lhs + rhs - place;
  throw std::invalid_argument("column " + std::to_string(column) + " does not sum to 9 or 10");
}

struct CarryResult {
  Step step;
  int column = 0;
};

/// nullopt when no column sums to 9 or 10.
inline std::optional<CarryResult> carry_error(const Step& add_step, Rng& rng) {
  const Step s = add_step.unwrapped();
  if (s.kind != StepKind::MultAdd) throw std::invalid_argument("carry_error needs an addition step");
  const auto& e = s.equation();
  const auto cols = carry_columns(e.lhs, e.rhs);
  if (cols.empty()) return std::nullopt;
  const int col = cols[uniform_index(rng, cols.size())];
  return CarryResult{Step::add(e.lhs, e.rhs, carry_swapped_sum(e.lhs, e.rhs, col)), col};
}

// ---------------------------------------------------------------------------
// Integer errors

inline bool int_error_applicable(std::uint64_t value, ErrorType variant) {
  if (value == 0) return false;
  if (variant == ErrorType::IntErrorTwoDigits) return value >= 10;
  return variant == ErrorType::IntError10 || variant == ErrorType::IntError100 ||
         variant == ErrorType::IntErrorSingleDigit || variant == ErrorType::IntErrorSingleDigitClose;
}

namespace detail {

/// Replacement digits allowed at `pos` of `digits`; the leading digit never becomes 0.
inline std::vector<char> single_digit_choices(const std::string& digits, std::size_t pos, bool close) {
  std::vector<char> out;
  const int d = digits[pos] - '0';
  const int lo = close ? std::max(0, d - 2) : 0;
  const int hi = close ? std::min(9, d + 2) : 9;
  for (int v = lo; v <= hi; ++v)
    if (v != d && !(pos == 0 && v == 0)) out.push_back(static_cast<char>('0' + v));
  return out;
}

inline std::uint64_t to_u64(const std::string& s) { return std::stoull(s); }

}  // namespace detail

struct IntErrorResult {
  std::uint64_t value = 0;
  std::int64_t offset = 0;
  int position = 0;
  std::string replacement;
};

inline IntErrorResult int_error(std::uint64_t value, ErrorType variant, Rng& rng) {
  if (!int_error_applicable(value, variant))
    throw VariantInapplicable(std::string(to_string(variant)) + " cannot corrupt " + std::to_string(value));
  IntErrorResult out;
  const std::string digits = std::to_string(value);
  switch (variant) {
    case ErrorType::IntError10:
    case ErrorType::IntError100: {
      const std::int64_t bound = variant == ErrorType::IntError10 ? 10 : 100;
      std::int64_t off = 0;
      do off = uniform_int(rng, -bound, bound);
      while (off == 0 || static_cast<std::int64_t>(value) + off <= 0);
      out.offset = off;
      out.value = static_cast<std::uint64_t>(static_cast<std::int64_t>(value) + off);
      return out;
    }
    case ErrorType::IntErrorSingleDigit:
    case ErrorType::IntErrorSingleDigitClose: {
      const std::size_t pos = uniform_index(rng, digits.size());
      const auto choices = detail::single_digit_choices(digits, pos, variant == ErrorType::IntErrorSingleDigitClose);
      std::string changed = digits;
      changed[pos] = choices[uniform_index(rng, choices.size())];
      out.position = static_cast<int>(pos);
      out.replacement = std::string(1, changed[pos]);
      out.value = detail::to_u64(changed);
      return out;
    }
    case ErrorType::IntErrorTwoDigits: {
      const std::size_t pos = uniform_index(rng, digits.size() - 1);
      std::string pair;
      do {
        pair = {static_cast<char>('0' + uniform_int(rng, 0, 9)), static_cast<char>('0' + uniform_int(rng, 0, 9))};
      } while (pair == digits.substr(pos, 2) || (pos == 0 && pair[0] == '0'));
      std::string changed = digits;
      changed.replace(pos, 2, pair);
      out.position = static_cast<int>(pos);
      out.replacement = pair;
      out.value = detail::to_u64(changed);
      return out;
    }
    default: break;
  }
  throw VariantInapplicable("not an integer error variant");
}

/// Applies recorded integer-error parameters to a value.
inline std::uint64_t replay_int_error(std::uint64_t value, const ErrorSpec& spec) {
  if (spec.type == ErrorType::IntError10 || spec.type == ErrorType::IntError100)
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(value) + spec.offset);
  std::string digits = std::to_string(value);
  digits.replace(static_cast<std::size_t>(spec.position), spec.replacement.size(), spec.replacement);
  return detail::to_u64(digits);
}

// ---------------------------------------------------------------------------
// Sudoku errors

namespace detail {

inline std::vector<Move> constraint_violations(const Board& b) {
  std::vector<Move> out;
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c) {
      if (!b.empty_at(r - 1, c - 1)) continue;
      for (int v = 1; v <= 4; ++v)
        if (sudoku::conflicts(b, r - 1, c - 1, v)) out.push_back({r, c, v});
    }
  return out;
}

inline std::vector<Move> occupied_cells(const Board& b) {
  std::vector<Move> out;
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c)
      if (!b.empty_at(r - 1, c - 1)) out.push_back({r, c, 0});
  return out;
}

/// Legal placements in cells with two or more candidates.
inline std::vector<Move> non_single_placements(const Board& b) {
  std::vector<Move> out;
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c) {
      if (!b.empty_at(r - 1, c - 1)) continue;
      const auto cand = sudoku::candidates(b, r, c);
      if (cand.size() < 2) continue;
      for (int v : cand.values()) out.push_back({r, c, v});
    }
  return out;
}

/// Out-of-range variants of the golden move: row or column set to 0 or 5.
inline std::vector<Move> out_of_range_moves(const Move& golden) {
  return {{0, golden.col, golden.value}, {5, golden.col, golden.value},
          {golden.row, 0, golden.value}, {golden.row, 5, golden.value}};
}

inline std::vector<InvalidMoveKind> applicable_invalid_kinds(const Board& b) {
  std::vector<InvalidMoveKind> kinds{InvalidMoveKind::OutOfRange};
  if (!occupied_cells(b).empty()) kinds.push_back(InvalidMoveKind::OccupiedCell);
  if (!constraint_violations(b).empty()) kinds.push_back(InvalidMoveKind::ConstraintViolation);
  return kinds;
}

}  // namespace detail

struct ErroneousStep {
  Step step;
  ErrorSpec spec;
};

/// What the sampler may look at besides the step. Sudoku needs the board
/// as it stood before the step.
struct StepContext {
  std::optional<Board> board;
};

namespace detail {

inline ErroneousStep sample_int_error(const Step& golden, const std::array<double, 6>& column, Rng& rng) {
  const auto& e = golden.equation();
  std::array<double, 6> w{};
  for (std::size_t k = 1; k < 6; ++k) w[k] = int_error_applicable(e.result, kMultErrorTypes[k]) ? column[k] : 0.0;
  if (w[1] + w[2] + w[3] + w[4] + w[5] <= 0.0) throw StepUninjectable("no integer error applies to " + std::to_string(e.result));
  const ErrorType type = kMultErrorTypes[weighted_index(rng, w)];
  const auto r = int_error(e.result, type, rng);
  ErrorSpec spec;
  spec.type = type;
  spec.offset = r.offset;
  spec.position = r.position;
  spec.replacement = r.replacement;
  return {Step{golden.kind, golden.kind, Equation{e.lhs, e.rhs, r.value}}, spec};
}

/// Integer-error weights for a step kind: the non-carry part of the column.
inline std::array<double, 6> int_column(const TypeWeights& w, StepKind kind) {
  std::array<double, 6> col = kind == StepKind::MultAdd ? w.addition : w.non_addition;
  col[0] = 0.0;
  return col;
}

}  // namespace detail

/// Draws one corruption of an injectable golden step. The returned step
/// always differs from the golden step.
inline ErroneousStep sample_error(const Step& golden_step, const StepContext& ctx, const TypeWeights& weights, Rng& rng) {
  const Step golden = golden_step.unwrapped();
  switch (golden.kind) {
    case StepKind::MultAdd: {
      if (bernoulli(rng, weights.addition[0])) {
        if (auto carry = carry_error(golden, rng)) {
          ErrorSpec spec;
          spec.type = ErrorType::CarryError;
          spec.position = carry->column;
          return {carry->step, spec};
        }
        auto out = detail::sample_int_error(golden, detail::int_column(weights, golden.kind), rng);
        out.spec.carry_fallback = true;
        return out;
      }
      return detail::sample_int_error(golden, detail::int_column(weights, golden.kind), rng);
    }
    case StepKind::MultPartial:
      return detail::sample_int_error(golden, detail::int_column(weights, golden.kind), rng);
    case StepKind::SudokuMove: {
      if (!ctx.board) throw std::invalid_argument("Sudoku error sampling needs the board state");
      const Board& b = *ctx.board;
      const Move gm = golden.move();
      const auto not_single = detail::non_single_placements(b);
      bool invalid = bernoulli(rng, weights.sudoku_invalid / (weights.sudoku_invalid + weights.sudoku_not_single));
      if (!invalid && not_single.empty()) invalid = true;
      ErrorSpec spec;
      Move bogus;
      if (invalid) {
        const auto kinds = detail::applicable_invalid_kinds(b);
        const InvalidMoveKind kind = kinds[uniform_index(rng, kinds.size())];
        switch (kind) {
          case InvalidMoveKind::OutOfRange: {
            const auto opts = detail::out_of_range_moves(gm);
            bogus = opts[uniform_index(rng, opts.size())];
            break;
          }
          case InvalidMoveKind::OccupiedCell: {
            const auto cells = detail::occupied_cells(b);
            bogus = cells[uniform_index(rng, cells.size())];
            bogus.value = static_cast<int>(uniform_int(rng, 1, 4));
            break;
          }
          case InvalidMoveKind::ConstraintViolation: {
            const auto opts = detail::constraint_violations(b);
            bogus = opts[uniform_index(rng, opts.size())];
            break;
          }
        }
        spec.type = ErrorType::SudokuInvalidMove;
        spec.invalid_kind = kind;
      } else {
        bogus = not_single[uniform_index(rng, not_single.size())];
        spec.type = ErrorType::SudokuNotSingle;
      }
      spec.move = bogus;
      return {Step::move(bogus), spec};
    }
    default: break;
  }
  throw StepUninjectable("step kind " + std::string(to_string(golden.kind)) + " is not injectable");
}

/// Rebuilds the erroneous step from its golden step and recorded spec.
inline Step apply_error(const Step& golden_step, const ErrorSpec& spec) {
  const Step golden = golden_step.unwrapped();
  if (spec.type == ErrorType::SudokuInvalidMove || spec.type == ErrorType::SudokuNotSingle) return Step::move(spec.move.value());
  const auto& e = golden.equation();
  const std::uint64_t v =
      spec.type == ErrorType::CarryError ? carry_swapped_sum(e.lhs, e.rhs, spec.position) : replay_int_error(e.result, spec);
  return Step{golden.kind, golden.kind, Equation{e.lhs, e.rhs, v}};
}

// ---------------------------------------------------------------------------
// Exact probabilities

namespace detail {

/// Probability that `variant` turns `value` into `target`.
inline double int_error_probability(std::uint64_t value, ErrorType variant, std::uint64_t target) {
  if (!int_error_applicable(value, variant) || target == value) return 0.0;
  switch (variant) {
    case ErrorType::IntError10:
    case ErrorType::IntError100: {
      const std::int64_t bound = variant == ErrorType::IntError10 ? 10 : 100;
      const auto v = static_cast<std::int64_t>(value);
      const std::int64_t delta = static_cast<std::int64_t>(target) - v;
      if (std::abs(delta) > bound) return 0.0;
      std::int64_t valid = 0;
      for (std::int64_t off = -bound; off <= bound; ++off) valid += off != 0 && v + off > 0;
      return 1.0 / static_cast<double>(valid);
    }
    case ErrorType::IntErrorSingleDigit:
    case ErrorType::IntErrorSingleDigitClose: {
      const std::string a = std::to_string(value), b = std::to_string(target);
      if (a.size() != b.size()) return 0.0;
      std::size_t diffs = 0, pos = 0;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++diffs, pos = i;
      if (diffs != 1) return 0.0;
      const auto choices = single_digit_choices(a, pos, variant == ErrorType::IntErrorSingleDigitClose);
      if (std::find(choices.begin(), choices.end(), b[pos]) == choices.end()) return 0.0;
      return 1.0 / static_cast<double>(a.size()) / static_cast<double>(choices.size());
    }
    case ErrorType::IntErrorTwoDigits: {
      const std::string a = std::to_string(value), b = std::to_string(target);
      if (a.size() != b.size()) return 0.0;
      double p = 0.0;
      const double windows = static_cast<double>(a.size() - 1);
      for (std::size_t w = 0; w + 1 < a.size(); ++w) {
        bool inside = true;
        for (std::size_t i = 0; i < a.size() && inside; ++i)
          if ((i < w || i > w + 1) && a[i] != b[i]) inside = false;
        if (!inside) continue;
        // Pairs accepted by the resampling loop: changed, no leading zero.
        const double accepted = w == 0 ? 89.0 : 99.0;
        p += 1.0 / windows / accepted;
      }
      return p;
    }
    default: return 0.0;
  }
}

inline double int_distribution_probability(std::uint64_t value, const std::array<double, 6>& column, std::uint64_t target) {
  double total = 0.0, p = 0.0;
  for (std::size_t k = 1; k < 6; ++k) {
    if (!int_error_applicable(value, kMultErrorTypes[k])) continue;
    total += column[k];
    p += column[k] * int_error_probability(value, kMultErrorTypes[k], target);
  }
  return total > 0.0 ? p / total : 0.0;
}

}  // namespace detail

/// Probability that sample_error produces exactly `candidate` from `golden_step`.
inline double error_probability(const Step& golden_step, const StepContext& ctx, const TypeWeights& weights,
                                const Step& candidate_step) {
  const Step golden = golden_step.unwrapped();
  const Step candidate = candidate_step.unwrapped();
  if (candidate.kind != golden.kind) return 0.0;
  switch (golden.kind) {
    case StepKind::MultAdd:
    case StepKind::MultPartial: {
      const auto& g = golden.equation();
      const auto& c = candidate.equation();
      if (c.lhs != g.lhs || c.rhs != g.rhs) return 0.0;
      const auto col = detail::int_column(weights, golden.kind);
      const double p_int = detail::int_distribution_probability(g.result, col, c.result);
      if (golden.kind == StepKind::MultPartial) return p_int;
      const auto cols = carry_columns(g.lhs, g.rhs);
      if (cols.empty()) return p_int;
      double p_carry = 0.0;
      for (int k : cols)
        if (carry_swapped_sum(g.lhs, g.rhs, k) == c.result) p_carry += 1.0 / static_cast<double>(cols.size());
      return weights.addition[0] * p_carry + (1.0 - weights.addition[0]) * p_int;
    }
    case StepKind::SudokuMove: {
      if (!ctx.board) throw std::invalid_argument("Sudoku error probability needs the board state");
      const Board& b = *ctx.board;
      const Move m = candidate.move();
      const auto not_single = detail::non_single_placements(b);
      double p_invalid = weights.sudoku_invalid / (weights.sudoku_invalid + weights.sudoku_not_single);
      if (not_single.empty()) p_invalid = 1.0;
      double p_inv = 0.0;
      const auto kinds = detail::applicable_invalid_kinds(b);
      const double per_kind = 1.0 / static_cast<double>(kinds.size());
      for (auto kind : kinds) {
        switch (kind) {
          case InvalidMoveKind::OutOfRange: {
            const auto opts = detail::out_of_range_moves(golden.move());
            p_inv += per_kind * static_cast<double>(std::count(opts.begin(), opts.end(), m)) / static_cast<double>(opts.size());
            break;
          }
          case InvalidMoveKind::OccupiedCell: {
            const auto cells = detail::occupied_cells(b);
            if (m.in_range() && !b.empty_at(m.row - 1, m.col - 1))
              p_inv += per_kind / static_cast<double>(cells.size()) / 4.0;
            break;
          }
          case InvalidMoveKind::ConstraintViolation: {
            const auto opts = detail::constraint_violations(b);
            p_inv += per_kind * static_cast<double>(std::count(opts.begin(), opts.end(), m)) / static_cast<double>(opts.size());
            break;
          }
        }
      }
      double p_ns = 0.0;
      if (!not_single.empty())
        p_ns = static_cast<double>(std::count(not_single.begin(), not_single.end(), m)) / static_cast<double>(not_single.size());
      return p_invalid * p_inv + (1.0 - p_invalid) * p_ns;
    }
    default: return 0.0;
  }
}

/// The modeled error type most likely to turn `golden` into `erroneous`
/// under `weights`, or "unmodeled" when the injector cannot produce it.
inline std::string classify_error(const Step& golden_step, const StepContext& ctx, const TypeWeights& weights,
                                  const Step& erroneous_step) {
  const Step golden = golden_step.unwrapped();
  const Step bad = erroneous_step.unwrapped();
  if (bad.kind == StepKind::SudokuMove && ctx.board) {
    switch (sudoku::verify_move(*ctx.board, bad.move())) {
      case sudoku::MoveVerdict::Invalid: return std::string(to_string(ErrorType::SudokuInvalidMove));
      case sudoku::MoveVerdict::ValidNotSingle: return std::string(to_string(ErrorType::SudokuNotSingle));
      case sudoku::MoveVerdict::ValidNakedSingle: return "unmodeled";
    }
  }
  if (bad.kind != golden.kind || (bad.kind != StepKind::MultAdd && bad.kind != StepKind::MultPartial)) return "unmodeled";
  const auto& g = golden.equation();
  const auto& b = bad.equation();
  if (g.lhs != b.lhs || g.rhs != b.rhs) return "unmodeled";
  const auto& column = golden.kind == StepKind::MultAdd ? weights.addition : weights.non_addition;
  double best = 0.0;
  std::string name = "unmodeled";
  if (golden.kind == StepKind::MultAdd) {
    const auto cols = carry_columns(g.lhs, g.rhs);
    double p = 0.0;
    for (int c : cols)
      if (carry_swapped_sum(g.lhs, g.rhs, c) == b.result) p += 1.0 / static_cast<double>(cols.size());
    if (column[0] * p > best) best = column[0] * p, name = to_string(ErrorType::CarryError);
  }
  for (std::size_t k = 1; k < 6; ++k) {
    const double p = column[k] * detail::int_error_probability(g.result, kMultErrorTypes[k], b.result);
    if (p > best) best = p, name = to_string(kMultErrorTypes[k]);
  }
  return name;
}

// ---------------------------------------------------------------------------
// Trace injection

struct InjectResult {
  CotTrace trace;
  std::vector<ErrorSpec> errors;
  /// The golden trace had no injectable step and was returned clean.
  bool uninjectable = false;
};

inline std::vector<std::size_t> injectable_indices(const CotTrace& golden) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < golden.steps.size(); ++i)
    if (is_compute_kind(golden.steps[i].kind)) out.push_back(i);
  return out;
}

inline StepContext context_at(const CotTrace& golden, std::size_t index) {
  StepContext ctx;
  if (golden.task == Task::sudoku) ctx.board = sudoku::board_after(golden, index);
  return ctx;
}

/// With probability clean_fraction returns the golden trace; otherwise
/// replaces k uniformly chosen compute steps (k uniform in the configured
/// range, clamped to the number of sites) by error triples.
inline InjectResult inject(const CotTrace& golden, const MixConfig& mix, Rng& rng) {
  InjectResult out{golden, {}, false};
  if (bernoulli(rng, mix.clean_fraction)) return out;
  const auto sites = injectable_indices(golden);
  if (sites.empty()) {
    out.uninjectable = true;
    return out;
  }
  const auto drawn = static_cast<std::size_t>(uniform_int(rng, mix.min_errors, mix.max_errors));
  const std::size_t k = std::min(drawn, sites.size());
  std::vector<std::size_t> chosen = sites;
  std::shuffle(chosen.begin(), chosen.end(), rng);
  chosen.resize(k);
  std::sort(chosen.begin(), chosen.end());

  CotTrace t;
  t.task = golden.task;
  t.problem = golden.problem;
  std::size_t next = 0;
  for (std::size_t i = 0; i < golden.steps.size(); ++i) {
    const Step& s = golden.steps[i];
    if (next < chosen.size() && chosen[next] == i) {
      ++next;
      auto err = sample_error(s, context_at(golden, i), mix.weights, rng);
      err.spec.golden_index = i;
      err.spec.step_index = t.steps.size();
      t.push(std::move(err.step), Provenance::injected_error);
      t.push(Step::recognition(), Provenance::recognition);
      t.push(Step::correction(s), Provenance::correction);
      out.errors.push_back(std::move(err.spec));
    } else {
      t.push(s, golden.annotations[i]);
    }
  }
  out.trace = std::move(t);
  return out;
}

}  // namespace eift
