#pragma once
// Evaluation: final-answer accuracy, and error recognition / correction
// measured by truncating a trace right after its first error.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cot.hpp"
#include "injector.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace eift {

enum class ErrorSource { synthetic, policy };

inline std::string_view to_string(ErrorSource s) { return s == ErrorSource::synthetic ? "synthetic" : "policy"; }

inline ErrorSource parse_error_source(std::string_view s) {
  if (s == "synthetic") return ErrorSource::synthetic;
  if (s == "policy") return ErrorSource::policy;
  throw std::invalid_argument("unknown error source: " + std::string(s));
}

/// A trace without a modeled error; the caller draws another.
class DiscardSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvalAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalPrompt {
  Problem problem;
  /// Steps 0..error_index inclusive; the last one is the error.
  CotTrace prefix;
  std::size_t error_index = 0;
  std::string prompt;
};

/// Truncates `trace` just after its first modeled error.
inline EvalPrompt make_eval_prompt(const CotTrace& trace) {
  if (!trace.problem) throw std::invalid_argument("trace carries no problem");
  const auto first = find_first_error(trace);
  if (!first) throw DiscardSample("trace has no modeled error");
  EvalPrompt p{*trace.problem, {}, *first, {}};
  p.prefix.task = trace.task;
  p.prefix.problem = trace.problem;
  for (std::size_t i = 0; i <= *first; ++i) p.prefix.push(trace.steps[i], trace.annotations[i]);
  // The cut-off error has no recognition after it, so it reads as a plain step.
  p.prefix.annotations.back() = Provenance::golden;
  if (p.prefix.steps.back().kind == StepKind::Correction) p.prefix.steps.back() = p.prefix.steps.back().unwrapped();
  p.prompt = policy_prompt(p.problem, render_steps(p.prefix.steps, p.prefix.task));
  return p;
}

struct EvalOutcome {
  bool recognized = false;
  bool corrected = false;
  bool parroted = false;
  std::optional<bool> answer_correct;
  std::optional<std::string> first_error_type;
  /// Mult prefix off the golden layout: correction could not be graded.
  bool no_canonical = false;
};

/// Grades the two steps following the error: the recognition marker, then a
/// step that is correct for the task. Later steps are not graded.
inline EvalOutcome grade_completion(const EvalPrompt& p, std::string_view completion) {
  EvalOutcome o;
  const CotTrace c = parse(completion, p.problem);
  if (c.steps.empty() || c.steps[0].kind != StepKind::Recognition) return o;
  o.recognized = true;
  if (c.steps.size() < 2) return o;
  const Step next = c.steps[1].unwrapped();
  const Step& error = p.prefix.steps.back();

  CotTrace before = p.prefix;
  before.steps.pop_back();
  before.annotations.pop_back();
  if (p.prefix.task == Task::mult) {
    try {
      o.corrected = mult::verify_step(next) == mult::StepVerdict::Correct && next == mult::next_golden_step(before);
    } catch (const NoCanonicalContinuation&) {
      o.no_canonical = true;
    }
  } else if (next.kind == StepKind::SudokuMove) {
    const Board b = sudoku::board_after(before, before.steps.size());
    o.corrected = sudoku::verify_move(b, next.move()) == sudoku::MoveVerdict::ValidNakedSingle;
  }
  o.parroted = !o.corrected && render_step(next, p.prefix.task) == render_step(error.unwrapped(), p.prefix.task);
  return o;
}

/// Final answer of a completion, if it has one.
inline std::optional<std::string> final_answer(const CotTrace& t) {
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it)
    if (it->kind == StepKind::Answer) return it->text();
  return std::nullopt;
}

struct Metric {
  double mean = 0.0;
  std::size_t n = 0;
  double half_width = 0.0;

  static Metric of(std::size_t hits, std::size_t n) {
    Metric m;
    m.n = n;
    if (n == 0) return m;
    m.mean = static_cast<double>(hits) / static_cast<double>(n);
    m.half_width = 1.96 * std::sqrt(m.mean * (1.0 - m.mean) / static_cast<double>(n));
    return m;
  }
  bool contains(double x) const { return std::abs(x - mean) <= half_width; }
};

inline nlohmann::ordered_json to_json(const Metric& m) {
  nlohmann::ordered_json j;
  j["mean"] = m.mean;
  j["n"] = m.n;
  j["half_width"] = m.half_width;
  return j;
}

struct MetricsReport {
  std::string kind;  // "accuracy" or "correction"
  Task task = Task::mult;
  std::optional<ErrorSource> source;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::size_t transport_errors = 0;
  std::size_t discarded = 0;
  std::size_t no_canonical = 0;
  std::optional<Metric> accuracy, recognition, correction, parrot;
  std::map<std::string, std::size_t> first_error_types;
};

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["task"] = to_string(r.task);
  if (r.source) j["error_source"] = to_string(*r.source);
  j["temperature"] = r.temperature;
  j["seed"] = r.seed;
  j["requested"] = r.requested;
  j["transport_errors"] = r.transport_errors;
  if (r.kind == "correction") {
    j["discarded"] = r.discarded;
    j["no_canonical"] = r.no_canonical;
  }
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  if (r.accuracy) metrics["accuracy"] = to_json(*r.accuracy);
  if (r.recognition) metrics["recognition"] = to_json(*r.recognition);
  if (r.correction) metrics["correction"] = to_json(*r.correction);
  if (r.parrot) metrics["parrot"] = to_json(*r.parrot);
  j["metrics"] = metrics;
  if (!r.first_error_types.empty()) j["first_error_types"] = r.first_error_types;
  return j;
}

inline Metric metric_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("n").get<std::size_t>(), j.at("half_width").get<double>()};
}

struct EvalConfig {
  Task task = Task::mult;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  int max_new_tokens = 2048;
  int workers = 1;
  /// Synthetic source: always injects, 1..4 errors.
  MixConfig mix{0.0, 1, 4, {}};
  sudoku::GenConfig gen;
  /// Traces drawn per example before giving up.
  int attempt_budget = 100;
  /// Sampling temperature for the error-producing policy.
  double source_temperature = 1.0;
};

inline MetricsReport run_accuracy_eval(const PolicyFactory& policy, const EvalConfig& cfg) {
  struct Result {
    bool ok = false;
    bool correct = false;
  };
  std::vector<Result> results(cfg.n);
  parallel_for_with(cfg.n, cfg.workers, policy, [&](std::size_t i, std::unique_ptr<Policy>& pol) {
    Rng rng = make_rng(cfg.seed, {i, 0});
    const Problem problem = gen_problem(cfg.task, rng, cfg.gen);
    const PolicyRequest req{request_id("acc", cfg.task, i), policy_prompt(problem), cfg.temperature, cfg.max_new_tokens};
    try {
      const std::string completion = pol->complete(req);
      const auto answer = final_answer(parse(completion, problem));
      results[i] = {true, answer && *answer == expected_answer(problem)};
    } catch (const PolicyError&) {
      results[i] = {false, false};
    }
  });
  MetricsReport r;
  r.kind = "accuracy";
  r.task = cfg.task;
  r.temperature = cfg.temperature;
  r.seed = cfg.seed;
  r.requested = cfg.n;
  std::size_t ok = 0, hits = 0;
  for (const auto& x : results) {
    ok += x.ok;
    hits += x.correct;
  }
  r.transport_errors = cfg.n - ok;
  r.accuracy = Metric::of(hits, ok);
  return r;
}

/// Type label for the error at the end of `p.prefix`: the recorded injector
/// type for synthetic errors, the classifier's best guess otherwise.
inline std::string error_type_label(const EvalPrompt& p, const TypeWeights& weights) {
  CotTrace before = p.prefix;
  before.steps.pop_back();
  before.annotations.pop_back();
  try {
    const Step golden = next_golden_step(before);
    StepContext ctx;
    if (p.prefix.task == Task::sudoku) ctx.board = sudoku::board_after(before, before.steps.size());
    return classify_error(golden, ctx, weights, p.prefix.steps.back());
  } catch (const NoCanonicalContinuation&) {
    return "unmodeled";
  }
}

/// Recognition/correction eval. For a synthetic source, traces are injected
/// golden CoTs; for a policy source, `source` generates CoTs from scratch and
/// its first modeled error is used.
inline MetricsReport run_correction_eval(const PolicyFactory& policy, ErrorSource source_kind,
                                         const PolicyFactory& source, const EvalConfig& cfg) {
  if (source_kind == ErrorSource::policy && !source) throw std::invalid_argument("policy error source needs a source policy");
  cfg.mix.validate();
  struct Result {
    bool ok = false;
    EvalOutcome outcome;
    std::size_t discarded = 0;
  };
  struct Worker {
    std::unique_ptr<Policy> policy, source;
  };
  std::vector<Result> results(cfg.n);
  const auto make_worker = [&] { return Worker{policy(), source ? source() : nullptr}; };

  parallel_for_with(cfg.n, cfg.workers, make_worker, [&](std::size_t i, Worker& w) {
    Result& res = results[i];
    std::optional<EvalPrompt> ep;
    std::optional<std::string> spec_type;
    for (int attempt = 0; attempt < cfg.attempt_budget && !ep; ++attempt) {
      const auto a = static_cast<std::uint64_t>(attempt);
      Rng prng = make_rng(cfg.seed, {i, a, 0});
      const Problem problem = gen_problem(cfg.task, prng, cfg.gen);
      CotTrace trace;
      std::vector<ErrorSpec> specs;
      if (source_kind == ErrorSource::synthetic) {
        Rng irng = make_rng(cfg.seed, {i, a, 1});
        auto injected = inject(golden_cot(problem), cfg.mix, irng);
        trace = std::move(injected.trace);
        specs = std::move(injected.errors);
      } else {
        const PolicyRequest req{request_id("src", cfg.task, i) + "-" + std::to_string(attempt), policy_prompt(problem),
                                cfg.source_temperature, cfg.max_new_tokens};
        try {
          trace = parse(w.source->complete(req), problem);
        } catch (const PolicyError&) {
          ++res.discarded;
          continue;
        }
      }
      trace.problem = problem;
      try {
        ep = make_eval_prompt(trace);
      } catch (const DiscardSample&) {
        ++res.discarded;
        continue;
      }
      if (!specs.empty()) spec_type = std::string(to_string(specs.front().type));
    }
    if (!ep)
      throw EvalAborted("example " + std::to_string(i) + ": no modeled error within " + std::to_string(cfg.attempt_budget) +
                        " attempts");

    const PolicyRequest req{request_id("corr", cfg.task, i), ep->prompt, cfg.temperature, cfg.max_new_tokens};
    std::string completion;
    try {
      completion = w.policy->complete(req);
    } catch (const PolicyError&) {
      return;
    }
    res.ok = true;
    res.outcome = grade_completion(*ep, completion);
    res.outcome.first_error_type = spec_type ? *spec_type : error_type_label(*ep, cfg.mix.weights);
  });

  MetricsReport r;
  r.kind = "correction";
  r.task = cfg.task;
  r.source = source_kind;
  r.temperature = cfg.temperature;
  r.seed = cfg.seed;
  r.requested = cfg.n;
  std::size_t ok = 0, rec = 0, cor = 0, par = 0;
  for (const auto& x : results) {
    r.discarded += x.discarded;
    if (!x.ok) continue;
    ++ok;
    rec += x.outcome.recognized;
    cor += x.outcome.corrected;
    par += x.outcome.parroted;
    r.no_canonical += x.outcome.no_canonical;
    if (x.outcome.first_error_type) ++r.first_error_types[*x.outcome.first_error_type];
  }
  r.transport_errors = cfg.n - ok;
  r.recognition = Metric::of(rec, ok);
  r.correction = Metric::of(cor, ok);
  r.parrot = Metric::of(par, ok);
  return r;
}

}  // namespace eift
