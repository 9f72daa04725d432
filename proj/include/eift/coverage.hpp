#pragma once
// Alignment between the synthetic error distribution and a policy's own
// errors: coverage (exact error seen at least once among n injector
// samples) and the distribution of exact-match probabilities.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cot.hpp"
#include "injector.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace eift {

struct ErrorPair {
  /// Steps strictly before the first error.
  CotTrace prefix;
  Step erroneous;
};

class CoverageAborted : public std::runtime_error {
 public:
  CoverageAborted(const std::string& what, std::size_t achieved) : std::runtime_error(what), achieved(achieved) {}
  std::size_t achieved;
};

struct CollectConfig {
  Task task = Task::mult;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int max_new_tokens = 2048;
  int workers = 1;
  /// Policy generations tried before giving up.
  std::size_t attempt_budget = 100000;
  sudoku::GenConfig gen;
};

/// The (prefix, erroneous step) pair for a generated trace, or nullopt if it
/// has no modeled error or the prefix has no canonical next step.
inline std::optional<ErrorPair> error_pair_of(const CotTrace& trace) {
  const auto first = find_first_error(trace);
  if (!first) return std::nullopt;
  ErrorPair pair;
  pair.prefix.task = trace.task;
  pair.prefix.problem = trace.problem;
  for (std::size_t i = 0; i < *first; ++i) pair.prefix.push(trace.steps[i], trace.annotations[i]);
  pair.erroneous = trace.steps[*first].unwrapped();
  try {
    next_golden_step(pair.prefix);
  } catch (const NoCanonicalContinuation&) {
    return std::nullopt;
  }
  return pair;
}

/// Generates CoTs from scratch with `policy` until `count` usable error pairs
/// are found. Attempts are taken in index order, so the result does not
/// depend on the worker count.
inline std::vector<ErrorPair> collect_error_traces(const PolicyFactory& policy, const CollectConfig& cfg) {
  std::vector<ErrorPair> out;
  const std::size_t batch = std::max<std::size_t>(64, cfg.count);
  for (std::size_t base = 0; out.size() < cfg.count && base < cfg.attempt_budget; base += batch) {
    const std::size_t n = std::min(batch, cfg.attempt_budget - base);
    std::vector<std::optional<ErrorPair>> found(n);
    parallel_for_with(n, cfg.workers, policy, [&](std::size_t k, std::unique_ptr<Policy>& pol) {
      const std::size_t j = base + k;
      Rng rng = make_rng(cfg.seed, {j, 0});
      const Problem problem = gen_problem(cfg.task, rng, cfg.gen);
      const PolicyRequest req{request_id("cov", cfg.task, j), policy_prompt(problem), cfg.temperature, cfg.max_new_tokens};
      found[k] = error_pair_of(parse(pol->complete(req), problem));
    });
    for (auto& f : found) {
      if (out.size() == cfg.count) break;
      if (f) out.push_back(std::move(*f));
    }
  }
  if (out.size() < cfg.count)
    throw CoverageAborted("collected " + std::to_string(out.size()) + " of " + std::to_string(cfg.count) +
                              " error traces within " + std::to_string(cfg.attempt_budget) + " attempts",
                          out.size());
  return out;
}

struct TraceAlignment {
  std::size_t hits = 0;
  double empirical = 0.0;
  double analytic = 0.0;
  /// Index of the first matching sample; samples when there was none.
  std::size_t first_hit = 0;
  std::string erroneous;
};

struct AlignmentReport {
  std::size_t trace_count = 0;
  std::size_t samples = 0;
  std::size_t excluded = 0;
  double coverage = 0.0;
  std::vector<TraceAlignment> traces;
  /// (p, fraction of traces with match probability <= p), p ascending.
  std::vector<std::pair<double, double>> cdf;
  std::vector<std::pair<double, double>> analytic_cdf;

  /// Coverage had only the first m samples of each trace been drawn.
  double coverage_at(std::size_t m) const {
    if (traces.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& t : traces) covered += t.first_hit < m;
    return static_cast<double>(covered) / static_cast<double>(traces.size());
  }
};

/// Right-continuous empirical CDF of `values`: one point per distinct value.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

/// Draws `samples` injector candidates for the golden step at each pair's
/// position and counts exact (rendered byte) matches with the observed error.
inline AlignmentReport estimate_alignment(const std::vector<ErrorPair>& pairs, const TypeWeights& weights,
                                          std::size_t samples, std::uint64_t seed, int workers = 1) {
  weights.validate();
  std::vector<std::optional<TraceAlignment>> per(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t t) {
    const ErrorPair& pair = pairs[t];
    Step golden;
    try {
      golden = next_golden_step(pair.prefix);
    } catch (const NoCanonicalContinuation&) {
      return;
    }
    if (!golden.is_compute()) return;
    StepContext ctx;
    if (pair.prefix.task == Task::sudoku) ctx.board = sudoku::board_after(pair.prefix, pair.prefix.steps.size());
    TraceAlignment a;
    a.erroneous = render_step(pair.erroneous, pair.prefix.task);
    a.first_hit = samples;
    Rng rng = make_rng(seed, {t});
    for (std::size_t s = 0; s < samples; ++s) {
      const Step candidate = sample_error(golden, ctx, weights, rng).step;
      if (render_step(candidate, pair.prefix.task) != a.erroneous) continue;
      if (a.hits++ == 0) a.first_hit = s;
    }
    a.empirical = samples ? static_cast<double>(a.hits) / static_cast<double>(samples) : 0.0;
    a.analytic = error_probability(golden, ctx, weights, pair.erroneous);
    per[t] = std::move(a);
  });

  AlignmentReport r;
  r.samples = samples;
  std::vector<double> emp, ana;
  for (auto& p : per) {
    if (!p) {
      ++r.excluded;
      continue;
    }
    emp.push_back(p->empirical);
    ana.push_back(p->analytic);
    r.traces.push_back(std::move(*p));
  }
  r.trace_count = r.traces.size();
  r.coverage = r.coverage_at(samples);
  r.cdf = empirical_cdf(std::move(emp));
  r.analytic_cdf = empirical_cdf(std::move(ana));
  return r;
}

inline nlohmann::ordered_json to_json(const AlignmentReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = "coverage";
  j["trace_count"] = r.trace_count;
  j["samples_per_trace"] = r.samples;
  j["excluded"] = r.excluded;
  j["coverage"] = r.coverage;
  auto& traces = j["traces"] = nlohmann::ordered_json::array();
  for (const auto& t : r.traces) {
    nlohmann::ordered_json x;
    x["erroneous"] = t.erroneous;
    x["hits"] = t.hits;
    x["empirical"] = t.empirical;
    x["analytic"] = t.analytic;
    traces.push_back(std::move(x));
  }
  const auto points = [](const auto& cdf) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& [p, f] : cdf) a.push_back({p, f});
    return a;
  };
  j["cdf"] = points(r.cdf);
  j["analytic_cdf"] = points(r.analytic_cdf);
  return j;
}

}  // namespace eift
