#pragma once
// Scriptable stand-ins for fine-tuned models.
//
//   Golden     continues with the canonical golden steps.
//   Noisy      like Golden, but corrupts each emitted compute step with
//              probability per_step_error_rate; never self-corrects.
//   Parrot     after an erroneous final prompt step: marker, then the same
//              erroneous step again.
//   Corrector  after an erroneous final prompt step: marker with
//              recognition_prob; then the golden step (correction_prob), a
//              repeat of the error (parrot_prob) or a fresh wrong step.
//
// Every random branch goes through tempered_choice, so temperature 0 takes
// the modal branch and consumes no randomness.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cot.hpp"
#include "injector.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace eift::sim {

enum class ProfileKind { Golden, Noisy, Parrot, Corrector };

inline std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::Golden: return "golden";
    case ProfileKind::Noisy: return "noisy";
    case ProfileKind::Parrot: return "parrot";
    case ProfileKind::Corrector: return "corrector";
  }
  return "?";
}

inline ProfileKind parse_profile_kind(std::string_view s) {
  for (auto k : {ProfileKind::Golden, ProfileKind::Noisy, ProfileKind::Parrot, ProfileKind::Corrector})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown profile: " + std::string(s));
}

struct SimProfile {
  ProfileKind kind = ProfileKind::Golden;
  double per_step_error_rate = 0.0;
  /// Share of Noisy errors drawn from the injector; the rest are unmodeled.
  double modeled_fraction = 1.0;
  /// Noisy only: chance of silently dropping each partial product (mult).
  double skip_rate = 0.0;
  double recognition_prob = 1.0;
  double correction_prob = 1.0;
  double parrot_prob = 0.0;
  TypeWeights weights;

  void validate() const {
    for (double p : {per_step_error_rate, modeled_fraction, skip_rate, recognition_prob, correction_prob, parrot_prob})
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("profile probabilities must lie in [0, 1]");
    if (parrot_prob > 1.0 - correction_prob + 1e-12) throw std::invalid_argument("parrot_prob must not exceed 1 - correction_prob");
    weights.validate();
  }

  static SimProfile golden() { return {}; }
  static SimProfile noisy(double rate, double modeled) {
    SimProfile p;
    p.kind = ProfileKind::Noisy;
    p.per_step_error_rate = rate;
    p.modeled_fraction = modeled;
    return p;
  }
  static SimProfile parrot() {
    SimProfile p;
    p.kind = ProfileKind::Parrot;
    p.correction_prob = 0.0;
    p.parrot_prob = 1.0;
    return p;
  }
  static SimProfile corrector(double recognition, double correction, double parrot = 0.0) {
    SimProfile p;
    p.kind = ProfileKind::Corrector;
    p.recognition_prob = recognition;
    p.correction_prob = correction;
    p.parrot_prob = parrot;
    return p;
  }
};

inline std::optional<Task> detect_task(std::string_view prompt) {
  if (prompt.substr(0, 8) == "Compute ") return Task::mult;
  if (prompt.substr(0, sudoku::kPromptHeader.size()) == sudoku::kPromptHeader) return Task::sudoku;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Unmodeled corruptions. None of these can be produced by the injector.

/// Swaps two unequal digits at least two places apart, one of them in the
/// thousands place or higher: the change is neither inside a two-digit
/// window, nor within +-100, nor a power of ten.
inline std::optional<std::uint64_t> distant_transposition(std::uint64_t value, Rng& rng) {
  const std::string d = std::to_string(value);
  const std::size_t n = d.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      const std::size_t high_place = n - 1 - i;  // place value of the left digit
      if (d[i] == d[j] || high_place < 3) continue;
      if (i == 0 && d[j] == '0') continue;
      pairs.emplace_back(i, j);
    }
  if (pairs.empty()) return std::nullopt;
  auto [i, j] = pairs[uniform_index(rng, pairs.size())];
  std::string s = d;
  std::swap(s[i], s[j]);
  return std::stoull(s);
}

/// Drops a place value: value * 10. The change is a multiple of 9 and at
/// least 9 * value, so no injector variant reaches it.
inline std::uint64_t place_shift(std::uint64_t value) { return value * 10; }

inline Step unmodeled_mult_error(const Step& golden, Rng& rng) {
  const auto& e = golden.equation();
  std::uint64_t v = place_shift(e.result);
  if (bernoulli(rng, 0.5))
    if (auto t = distant_transposition(e.result, rng)) v = *t;
  return Step{golden.kind, golden.kind, Equation{e.lhs, e.rhs, v}};
}

/// Writes a digit from 5 to 9 into an empty cell. The injector's
/// out-of-range moves keep the golden value, so it never emits these.
inline std::optional<Step> unmodeled_sudoku_error(const Board& b, Rng& rng) {
  std::vector<Move> empty;
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c)
      if (b.empty_at(r - 1, c - 1)) empty.push_back({r, c, 0});
  if (empty.empty()) return std::nullopt;
  Move m = empty[uniform_index(rng, empty.size())];
  m.value = static_cast<int>(uniform_int(rng, 5, 9));
  return Step::move(m);
}

// ---------------------------------------------------------------------------

namespace detail {

/// Where generation resumes: a position in the golden trace (mult) or a
/// board (Sudoku).
struct State {
  std::size_t position = 0;
  Board board;
};

/// Greedy continuation from a Sudoku board. If the board is stuck, remaining
/// cells are filled row-major from the stored solution.
inline std::vector<Step> sudoku_continuation(Board b, const SudokuPuzzle& p) {
  std::vector<Step> out;
  while (!b.complete()) {
    auto m = sudoku::first_naked_single(b);
    if (!m) {
      for (int i = 0; i < 16 && !m; ++i)
        if (!b.cells[static_cast<std::size_t>(i)]) m = Move{i / 4 + 1, i % 4 + 1, p.solution.cells[static_cast<std::size_t>(i)]};
    }
    sudoku::apply(b, *m);
    out.push_back(Step::move(*m));
  }
  out.push_back(Step::answer(b.flat()));
  return out;
}

inline std::vector<Step> continuation(const Problem& problem, const CotTrace& golden, const State& s) {
  if (task_of(problem) == Task::mult) {
    const auto first = golden.steps.begin() + static_cast<std::ptrdiff_t>(std::min(s.position, golden.steps.size() - 1));
    return {first, golden.steps.end()};
  }
  return sudoku_continuation(s.board, std::get<SudokuPuzzle>(problem));
}

inline Step wrong_answer(const Problem& problem, Rng& rng) {
  if (const auto* m = std::get_if<MultProblem>(&problem)) {
    const auto r = int_error(static_cast<std::uint64_t>(m->a * m->b), ErrorType::IntErrorSingleDigit, rng);
    return Step::answer(std::to_string(r.value));
  }
  Board b = std::get<SudokuPuzzle>(problem).solution;
  b.cells[0] = static_cast<std::uint8_t>(b.cells[0] % 4 + 1);
  return Step::answer(b.flat());
}

}  // namespace detail

/// Continues `prompt` under `profile`. Returns an empty completion when the
/// prompt is not a task prompt.
inline std::string complete(const SimProfile& profile, std::string_view prompt, double temperature, Rng& rng,
                            int max_new_tokens = -1) {
  const auto task = detect_task(prompt);
  if (!task) return {};
  const auto parsed = parse_policy_prompt(prompt, *task);
  if (!parsed) return {};
  const Problem& problem = parsed->problem;
  const CotTrace& prefix = parsed->prefix;
  const CotTrace golden = golden_cot(problem);
  const std::size_t n = prefix.steps.size();

  // State after the whole prefix, and whether its last step is an error.
  detail::State after;
  after.position = strip_injections(prefix).steps.size();
  if (*task == Task::sudoku) after.board = sudoku::board_after(prefix, n);

  bool last_erroneous = false;
  Step fix;  // golden step at the erroneous position
  detail::State after_fix;
  if (n > 0 && prefix.steps.back().kind != StepKind::Correction && prefix.steps.back().is_compute()) {
    const Step& last = prefix.steps.back();
    if (*task == Task::mult) {
      last_erroneous = mult::verify_step(last) == mult::StepVerdict::ModeledError;
      if (last_erroneous) {
        after_fix.position = after.position;
        fix = golden.steps[std::min(after.position - 1, golden.steps.size() - 1)];
        CotTrace head = prefix;
        head.steps.pop_back();
        head.annotations.pop_back();
        try {
          fix = mult::next_golden_step(head);
        } catch (const NoCanonicalContinuation&) {
        }
      }
    } else {
      Board before = sudoku::board_after(prefix, n - 1);
      last_erroneous = sudoku::verify_move(before, last.move()) != sudoku::MoveVerdict::ValidNakedSingle;
      if (last_erroneous) {
        if (auto m = sudoku::first_naked_single(before)) {
          fix = Step::move(*m);
          after_fix.board = before;
          sudoku::apply(after_fix.board, *m);
        } else {
          last_erroneous = false;
        }
      }
    }
  }

  std::vector<Step> out;
  auto emit_rest = [&](const detail::State& s) {
    for (auto& st : detail::continuation(problem, golden, s)) out.push_back(std::move(st));
  };

  switch (profile.kind) {
    case ProfileKind::Golden: emit_rest(after); break;

    case ProfileKind::Parrot:
    case ProfileKind::Corrector: {
      if (!last_erroneous) {
        emit_rest(after);
        break;
      }
      const Step& error = prefix.steps.back();
      const bool recognize = profile.kind == ProfileKind::Parrot || tempered_bernoulli(rng, profile.recognition_prob, temperature);
      if (!recognize) {
        emit_rest(after);
        break;
      }
      out.push_back(Step::recognition());
      std::size_t branch = 1;  // parrot
      if (profile.kind == ProfileKind::Corrector) {
        const double fresh = std::max(0.0, 1.0 - profile.correction_prob - profile.parrot_prob);
        const double probs[3] = {profile.correction_prob, profile.parrot_prob, fresh};
        branch = tempered_choice(rng, probs, temperature);
      }
      if (branch == 0) {
        out.push_back(fix);
      } else if (branch == 1) {
        out.push_back(error.unwrapped());
      } else {
        StepContext ctx;
        if (*task == Task::sudoku) ctx.board = sudoku::board_after(prefix, n - 1);
        Step wrong = error.unwrapped();
        for (int tries = 0; tries < 32 && (wrong == error.unwrapped() || wrong == fix); ++tries)
          wrong = sample_error(fix, ctx, profile.weights, rng).step;
        out.push_back(wrong);
      }
      emit_rest(after_fix);
      break;
    }

    case ProfileKind::Noisy: {
      // Walks the golden continuation, corrupting emitted lines while the
      // underlying state stays golden.
      const detail::State start = last_erroneous ? after_fix : after;
      bool corrupted = false;
      std::vector<Step> rest = detail::continuation(problem, golden, start);
      Board board = start.board;
      for (const Step& s : rest) {
        if (s.kind == StepKind::Answer) {
          out.push_back(corrupted ? detail::wrong_answer(problem, rng) : s);
          break;
        }
        if (s.kind == StepKind::MultPartial && tempered_bernoulli(rng, profile.skip_rate, temperature)) continue;
        Step emitted = s;
        if (tempered_bernoulli(rng, profile.per_step_error_rate, temperature)) {
          if (tempered_bernoulli(rng, profile.modeled_fraction, temperature)) {
            StepContext ctx;
            if (*task == Task::sudoku) ctx.board = board;
            emitted = sample_error(s, ctx, profile.weights, rng).step;
          } else if (*task == Task::mult) {
            emitted = unmodeled_mult_error(s, rng);
          } else if (auto u = unmodeled_sudoku_error(board, rng)) {
            emitted = *u;
          }
          corrupted = corrupted || !(emitted == s);
        }
        out.push_back(emitted);
        if (*task == Task::sudoku) sudoku::apply(board, s.move());
      }
      break;
    }
  }

  std::string text = render_steps(out, *task);
  if (max_new_tokens >= 0 && text.size() > static_cast<std::size_t>(max_new_tokens)) text.resize(static_cast<std::size_t>(max_new_tokens));
  return text;
}

/// In-process policy. Per-request randomness is derived from (seed, request id),
/// so results do not depend on request order or worker count.
class SimPolicy final : public Policy {
 public:
  SimPolicy(SimProfile profile, std::uint64_t seed) : profile_(std::move(profile)), seed_(seed) { profile_.validate(); }

  std::string complete(const PolicyRequest& r) override {
    Rng rng = make_rng(seed_, {fnv1a(r.id)});
    return sim::complete(profile_, r.prompt, r.temperature, rng, r.max_new_tokens);
  }

 private:
  SimProfile profile_;
  std::uint64_t seed_;
};

inline PolicyFactory sim_factory(SimProfile profile, std::uint64_t seed) {
  return [profile = std::move(profile), seed] { return std::make_unique<SimPolicy>(profile, seed); };
}

}  // namespace eift::sim
