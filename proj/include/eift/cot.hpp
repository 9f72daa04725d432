#pragma once
// Chain-of-thought data model and its line grammar.
//
// A completion is a sequence of steps, one per line, each terminated by
// '\n'. The only multi-line step is the Sudoku answer, which is the line
// "Answer:" followed by the four board rows. See docs/FORMATS.md for the
// formal grammar.

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eift {

inline constexpr std::string_view kRecognitionMarker = "Ah! I made a mistake.";
inline constexpr std::string_view kAnswerPrefix = "Answer: ";
inline constexpr char kStepSeparator = '\n';

enum class Task { mult, sudoku };

inline std::string_view to_string(Task t) { return t == Task::mult ? "mult" : "sudoku"; }

inline Task parse_task(std::string_view s) {
  if (s == "mult") return Task::mult;
  if (s == "sudoku") return Task::sudoku;
  throw std::invalid_argument("unknown task: " + std::string(s));
}

struct MultProblem {
  std::int64_t a = 0;
  std::int64_t b = 0;
  friend bool operator==(const MultProblem&, const MultProblem&) = default;
};

/// 4x4 grid, 0 = empty. Indices here are 0-based; rendered text is 1-based.
struct Board {
  std::array<std::uint8_t, 16> cells{};

  std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r * 4 + c)]; }
  void set(int r, int c, int v) { cells[static_cast<std::size_t>(r * 4 + c)] = static_cast<std::uint8_t>(v); }
  bool empty_at(int r, int c) const { return at(r, c) == 0; }

  int filled_count() const {
    int n = 0;
    for (auto v : cells) n += v != 0;
    return n;
  }
  bool complete() const { return filled_count() == 16; }

  std::string row_string(int r) const {
    std::string s(4, '.');
    for (int c = 0; c < 4; ++c)
      if (at(r, c)) s[static_cast<std::size_t>(c)] = static_cast<char>('0' + at(r, c));
    return s;
  }
  /// 16 characters, row-major, '.' for empty.
  std::string flat() const {
    std::string s;
    for (int r = 0; r < 4; ++r) s += row_string(r);
    return s;
  }
  /// Inverse of flat(); nullopt unless exactly 16 chars from "1234.".
  static std::optional<Board> from_flat(std::string_view s) {
    if (s.size() != 16) return std::nullopt;
    Board b;
    for (std::size_t i = 0; i < 16; ++i) {
      char ch = s[i];
      if (ch == '.') continue;
      if (ch < '1' || ch > '4') return std::nullopt;
      b.cells[i] = static_cast<std::uint8_t>(ch - '0');
    }
    return b;
  }

  friend bool operator==(const Board&, const Board&) = default;
};

struct SudokuPuzzle {
  Board initial;
  Board solution;
  friend bool operator==(const SudokuPuzzle&, const SudokuPuzzle&) = default;
};

using Problem = std::variant<MultProblem, SudokuPuzzle>;

inline Task task_of(const Problem& p) { return std::holds_alternative<MultProblem>(p) ? Task::mult : Task::sudoku; }

/// "lhs op rhs = result".
struct Equation {
  std::uint64_t lhs = 0;
  std::uint64_t rhs = 0;
  std::uint64_t result = 0;
  friend bool operator==(const Equation&, const Equation&) = default;
};

/// 1-based as rendered. Parsed output may hold any single digit 0..9.
struct Move {
  int row = 0;
  int col = 0;
  int value = 0;
  friend bool operator==(const Move&, const Move&) = default;
  bool in_range() const { return row >= 1 && row <= 4 && col >= 1 && col <= 4 && value >= 1 && value <= 4; }
};

enum class StepKind { MultPartial, MultAdd, SudokuMove, Recognition, Correction, Answer, Unparseable };

enum class Provenance { golden, injected_error, recognition, correction };

inline std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::MultPartial: return "mult_partial";
    case StepKind::MultAdd: return "mult_add";
    case StepKind::SudokuMove: return "sudoku_move";
    case StepKind::Recognition: return "recognition";
    case StepKind::Correction: return "correction";
    case StepKind::Answer: return "answer";
    case StepKind::Unparseable: return "unparseable";
  }
  return "?";
}

inline bool is_compute_kind(StepKind k) {
  return k == StepKind::MultPartial || k == StepKind::MultAdd || k == StepKind::SudokuMove;
}

class InvalidTrace : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Step {
  StepKind kind = StepKind::Unparseable;
  /// Same as kind, except for a Correction, where it names the wrapped compute kind.
  StepKind base = StepKind::Unparseable;
  /// Equation for mult compute steps, Move for Sudoku moves, the answer
  /// payload for Answer, the raw line for Unparseable.
  std::variant<std::monostate, Equation, Move, std::string> payload;

  static Step partial(std::uint64_t lhs, std::uint64_t rhs, std::uint64_t result) {
    return {StepKind::MultPartial, StepKind::MultPartial, Equation{lhs, rhs, result}};
  }
  static Step add(std::uint64_t lhs, std::uint64_t rhs, std::uint64_t result) {
    return {StepKind::MultAdd, StepKind::MultAdd, Equation{lhs, rhs, result}};
  }
  static Step move(Move m) { return {StepKind::SudokuMove, StepKind::SudokuMove, m}; }
  static Step recognition() { return {StepKind::Recognition, StepKind::Recognition, std::monostate{}}; }
  static Step answer(std::string payload) { return {StepKind::Answer, StepKind::Answer, std::move(payload)}; }
  static Step unparseable(std::string line) {
    return {StepKind::Unparseable, StepKind::Unparseable, std::move(line)};
  }
  static Step correction(const Step& s) {
    Step inner = s.unwrapped();
    if (!is_compute_kind(inner.kind)) throw InvalidTrace("a correction must wrap a compute step");
    inner.kind = StepKind::Correction;
    return inner;
  }

  bool is_compute() const { return is_compute_kind(base); }
  Step unwrapped() const { return {base, base, payload}; }

  const Equation& equation() const { return std::get<Equation>(payload); }
  const Move& move() const { return std::get<Move>(payload); }
  const std::string& text() const { return std::get<std::string>(payload); }

  friend bool operator==(const Step&, const Step&) = default;
};

struct CotTrace {
  Task task = Task::mult;
  std::optional<Problem> problem;
  std::vector<Step> steps;
  std::vector<Provenance> annotations;

  void push(Step s, Provenance p = Provenance::golden) {
    steps.push_back(std::move(s));
    annotations.push_back(p);
  }

  friend bool operator==(const CotTrace&, const CotTrace&) = default;
};

/// Structural checks. A prefix may end in an injected error whose
/// recognition/correction has been cut off; pass allow_truncated for those.
inline void validate(const CotTrace& t, bool allow_truncated = true) {
  if (t.steps.size() != t.annotations.size()) throw InvalidTrace("annotation count differs from step count");
  const std::size_t n = t.steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Step& s = t.steps[i];
    const Provenance a = t.annotations[i];
    if ((s.kind == StepKind::Recognition) != (a == Provenance::recognition))
      throw InvalidTrace("recognition annotation mismatch at step " + std::to_string(i));
    if ((s.kind == StepKind::Correction) != (a == Provenance::correction))
      throw InvalidTrace("correction annotation mismatch at step " + std::to_string(i));
    if (s.kind == StepKind::Correction && !is_compute_kind(s.base))
      throw InvalidTrace("correction wraps a non-compute step at " + std::to_string(i));
    if (s.kind != StepKind::Correction && s.base != s.kind)
      throw InvalidTrace("base kind mismatch at step " + std::to_string(i));
    if (s.kind == StepKind::Answer && i + 1 != n) throw InvalidTrace("answer step is not last");
    if (a == Provenance::injected_error) {
      if (!is_compute_kind(s.kind)) throw InvalidTrace("injected error on a non-compute step");
      const bool has_rec = i + 1 < n && t.steps[i + 1].kind == StepKind::Recognition;
      const bool has_cor = i + 2 < n && t.steps[i + 2].kind == StepKind::Correction;
      const bool cut = allow_truncated && (i + 1 == n || (has_rec && i + 2 == n));
      if (!(has_rec && has_cor) && !cut)
        throw InvalidTrace("injected error at " + std::to_string(i) + " lacks recognition/correction");
    }
    if (s.kind == StepKind::Recognition && (i == 0 || t.annotations[i - 1] != Provenance::injected_error))
      throw InvalidTrace("recognition at " + std::to_string(i) + " does not follow an injected error");
    if (s.kind == StepKind::Correction && (i == 0 || t.steps[i - 1].kind != StepKind::Recognition))
      throw InvalidTrace("correction at " + std::to_string(i) + " does not follow a recognition");
  }
}

/// Rendering of a single step, without the trailing separator.
inline std::string render_step(const Step& s, Task task) {
  switch (s.kind == StepKind::Correction ? s.base : s.kind) {
    case StepKind::MultPartial: {
      const auto& e = s.equation();
      return std::to_string(e.lhs) + " * " + std::to_string(e.rhs) + " = " + std::to_string(e.result);
    }
    case StepKind::MultAdd: {
      const auto& e = s.equation();
      return std::to_string(e.lhs) + " + " + std::to_string(e.rhs) + " = " + std::to_string(e.result);
    }
    case StepKind::SudokuMove: {
      const auto& m = s.move();
      const std::string at = "(" + std::to_string(m.row) + ", " + std::to_string(m.col) + ")";
      const std::string v = std::to_string(m.value);
      return "Cell " + at + " has only candidate " + v + ". Place " + v + " at " + at + ".";
    }
    case StepKind::Recognition: return std::string(kRecognitionMarker);
    case StepKind::Answer: {
      if (task == Task::sudoku && s.text().size() == 16) {
        std::string out = "Answer:";
        for (std::size_t r = 0; r < 4; ++r) out += '\n' + s.text().substr(r * 4, 4);
        return out;
      }
      return std::string(kAnswerPrefix) + s.text();
    }
    case StepKind::Unparseable: return s.text();
    case StepKind::Correction: break;
  }
  throw InvalidTrace("unrenderable step");
}

inline std::string render_steps(const std::vector<Step>& steps, Task task) {
  std::string out;
  for (const auto& s : steps) {
    out += render_step(s, task);
    out += kStepSeparator;
  }
  return out;
}

/// Completion text of a trace. Rejects structurally invalid traces.
inline std::string render(const CotTrace& t) {
  validate(t);
  return render_steps(t.steps, t.task);
}

namespace detail {

inline std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool consume(std::string_view& s, std::string_view lit) {
  if (s.substr(0, lit.size()) != lit) return false;
  s.remove_prefix(lit.size());
  return true;
}

/// Canonical unsigned decimal: "0" or no leading zero, at most 18 digits.
inline std::optional<std::uint64_t> consume_number(std::string_view& s) {
  std::size_t n = 0;
  while (n < s.size() && s[n] >= '0' && s[n] <= '9') ++n;
  if (n == 0 || n > 18 || (n > 1 && s[0] == '0')) return std::nullopt;
  std::uint64_t v = 0;
  std::from_chars(s.data(), s.data() + n, v);
  s.remove_prefix(n);
  return v;
}

inline std::optional<int> consume_digit(std::string_view& s) {
  if (s.empty() || s[0] < '0' || s[0] > '9') return std::nullopt;
  int d = s[0] - '0';
  s.remove_prefix(1);
  return d;
}

inline std::optional<Step> parse_mult_line(std::string_view s) {
  auto lhs = consume_number(s);
  if (!lhs) return std::nullopt;
  StepKind kind;
  if (consume(s, " * ")) kind = StepKind::MultPartial;
  else if (consume(s, " + ")) kind = StepKind::MultAdd;
  else return std::nullopt;
  auto rhs = consume_number(s);
  if (!rhs || !consume(s, " = ")) return std::nullopt;
  auto res = consume_number(s);
  if (!res || !s.empty()) return std::nullopt;
  return Step{kind, kind, Equation{*lhs, *rhs, *res}};
}

inline std::optional<Step> parse_sudoku_line(std::string_view s) {
  std::optional<int> r, c, v, v2, r2, c2;
  if (!consume(s, "Cell (") || !(r = consume_digit(s)) || !consume(s, ", ") || !(c = consume_digit(s)) ||
      !consume(s, ") has only candidate ") || !(v = consume_digit(s)) || !consume(s, ". Place ") ||
      !(v2 = consume_digit(s)) || !consume(s, " at (") || !(r2 = consume_digit(s)) || !consume(s, ", ") ||
      !(c2 = consume_digit(s)) || !consume(s, ").") || !s.empty())
    return std::nullopt;
  if (*v != *v2 || *r != *r2 || *c != *c2) return std::nullopt;
  return Step::move(Move{*r, *c, *v});
}

inline bool is_board_row(std::string_view s) {
  if (s.size() != 4) return false;
  for (char ch : s)
    if (ch != '.' && (ch < '0' || ch > '9')) return false;
  return true;
}

}  // namespace detail

/// Parses untrusted text into steps. Never fails: lines outside the grammar
/// become Unparseable steps so that step indices stay aligned with the text.
/// Blank lines are skipped. A compute line directly after a recognition
/// marker is read as a Correction; a compute line directly before one is
/// annotated as an injected error.
inline CotTrace parse(std::string_view text, Task task) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find(kStepSeparator);
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }

  CotTrace t;
  t.task = task;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = detail::rtrim(lines[i]);
    if (line.empty()) continue;
    if (line == kRecognitionMarker) {
      t.push(Step::recognition(), Provenance::recognition);
      continue;
    }
    if (task == Task::sudoku && line == "Answer:") {
      std::string flat;
      bool ok = i + 4 < lines.size();
      for (std::size_t k = 1; ok && k <= 4; ++k) {
        auto row = detail::rtrim(lines[i + k]);
        ok = detail::is_board_row(row);
        flat += row;
      }
      if (ok) {
        t.push(Step::answer(std::move(flat)));
        i += 4;
        continue;
      }
    }
    if (task == Task::mult && line.size() > kAnswerPrefix.size() && line.substr(0, kAnswerPrefix.size()) == kAnswerPrefix) {
      t.push(Step::answer(std::string(line.substr(kAnswerPrefix.size()))));
      continue;
    }
    auto step = task == Task::mult ? detail::parse_mult_line(line) : detail::parse_sudoku_line(line);
    if (step) t.push(*step);
    else t.push(Step::unparseable(std::string(line)));
  }

  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].kind != StepKind::Recognition) continue;
    if (i > 0 && t.steps[i - 1].is_compute() && t.steps[i - 1].kind != StepKind::Correction)
      t.annotations[i - 1] = Provenance::injected_error;
    if (i + 1 < t.steps.size() && is_compute_kind(t.steps[i + 1].kind)) {
      t.steps[i + 1] = Step::correction(t.steps[i + 1]);
      t.annotations[i + 1] = Provenance::correction;
    }
  }
  return t;
}

inline CotTrace parse(std::string_view text, const Problem& problem) {
  CotTrace t = parse(text, task_of(problem));
  t.problem = problem;
  return t;
}

/// Signals that a prefix has left the canonical golden layout.
class NoCanonicalContinuation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drops every (injected error, recognition) pair and unwraps corrections.
/// Applied to an injected trace this yields its golden trace.
inline CotTrace strip_injections(const CotTrace& t) {
  CotTrace out;
  out.task = t.task;
  out.problem = t.problem;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Provenance a = i < t.annotations.size() ? t.annotations[i] : Provenance::golden;
    if (a == Provenance::injected_error || a == Provenance::recognition) continue;
    out.push(t.steps[i].unwrapped());
  }
  return out;
}

inline bool is_ascii(std::string_view s) {
  for (unsigned char c : s)
    if (c > 0x7f) return false;
  return true;
}

}  // namespace eift
