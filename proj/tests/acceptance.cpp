// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "eift/eift.hpp"
#include "oracles.hpp"

using namespace eift;
namespace fs = std::filesystem;

namespace {

// Reference error-type probabilities by step kind, in ErrorType order:
// carry, +-10, +-100, single digit, single digit close, two digits.
const std::vector<double> kAdditionTable = {0.5, 0.025, 0.025, 0.125, 0.125, 0.20};
const std::vector<double> kNonAdditionTable = {0.0, 0.05, 0.05, 0.25, 0.25, 0.40};
const std::vector<double> kSudokuTable = {0.5, 0.5};

constexpr std::size_t kInjectorSamples = 100000;
constexpr double kInjectorSeconds = 60.0;
constexpr std::size_t kGoldenTraces = 10000;
constexpr double kGoldenSeconds = 120.0;
constexpr std::size_t kCarrySamples = 100000;
constexpr std::size_t kMixRecords = 100000;
constexpr double kMixTarget = 0.20, kMixTolerance = 0.01;
constexpr std::size_t kRoundTripTraces = 10000;
constexpr std::size_t kClosureN = 1000;
constexpr double kClosureRecognition = 0.9, kClosureCorrection = 0.7;
constexpr std::size_t kCoverageTraces = 100, kCoverageSamples = 10000;
constexpr double kCoverageHalf = 0.5, kCoverageHalfTolerance = 0.15;
constexpr double kCoverageMinP = 0.001, kCoverageFull = 0.99;
constexpr double kAlpha = 0.01;
constexpr std::uint64_t kSeed = 20240611;

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %-22s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !v.pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::size_t type_index(ErrorType t) {
  for (std::size_t k = 0; k < kMultErrorTypes.size(); ++k)
    if (kMultErrorTypes[k] == t) return k;
  return t == ErrorType::SudokuInvalidMove ? 0 : 1;
}

bool all_variants_apply(std::uint64_t value) {
  for (std::size_t k = 1; k < kMultErrorTypes.size(); ++k)
    if (!int_error_applicable(value, kMultErrorTypes[k])) return false;
  return true;
}

oracle::Grid grid(const Board& b) {
  oracle::Grid g{};
  for (std::size_t i = 0; i < 16; ++i) g[i] = b.cells[i];
  return g;
}

// Golden steps of random problems, filtered so that every error type in
// the table is available.
std::vector<std::pair<Step, StepContext>> sampling_sites(StepKind kind, std::size_t want, Rng& rng) {
  std::vector<std::pair<Step, StepContext>> out;
  while (out.size() < want) {
    const Problem p = gen_problem(kind == StepKind::SudokuMove ? Task::sudoku : Task::mult, rng);
    const auto golden = golden_cot(p);
    for (std::size_t i = 0; i < golden.steps.size() && out.size() < want; ++i) {
      const Step& s = golden.steps[i];
      if (s.kind != kind) continue;
      const auto ctx = context_at(golden, i);
      if (kind == StepKind::SudokuMove) {
        if (detail::non_single_placements(*ctx.board).empty()) continue;
      } else {
        if (!all_variants_apply(s.equation().result)) continue;
        if (kind == StepKind::MultAdd && carry_columns(s.equation().lhs, s.equation().rhs).empty()) continue;
      }
      out.emplace_back(s, ctx);
    }
  }
  return out;
}

Verdict injector_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(kSeed, {1});
  std::string detail;
  bool pass = true;
  const std::tuple<StepKind, const char*, const std::vector<double>*> kinds[] = {
      {StepKind::MultAdd, "add", &kAdditionTable},
      {StepKind::MultPartial, "partial", &kNonAdditionTable},
      {StepKind::SudokuMove, "sudoku", &kSudokuTable}};
  for (const auto& [kind, name, table] : kinds) {
    const auto sites = sampling_sites(kind, 5000, rng);
    std::vector<double> counts(table->size(), 0.0);
    for (std::size_t i = 0; i < kInjectorSamples; ++i) {
      const auto& [step, ctx] = sites[i % sites.size()];
      counts[type_index(sample_error(step, ctx, {}, rng).spec.type)] += 1;
    }
    std::vector<double> expected;
    for (double p : *table) expected.push_back(p * kInjectorSamples);
    const auto chi = oracle::chi_square(counts, expected, kAlpha);
    pass = pass && chi.pass();
    detail += std::string(name) + fmt(" chi2=%.2f/%.2f ", chi.statistic, chi.critical);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < kInjectorSeconds;
  return {pass, detail + fmt("n=%.0f per kind, limit %.0fs", kInjectorSamples, kInjectorSeconds)};
}

Verdict golden_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t bad_mult = 0, bad_sudoku = 0;
  for (std::size_t i = 0; i < kGoldenTraces; ++i) {
    Rng rng = make_rng(kSeed, {2, i});
    const auto p = mult::gen_problem(rng);
    const auto t = mult::golden_cot(p);
    bool ok = !t.steps.empty() && t.steps.back().kind == StepKind::Answer &&
              t.steps.back().text() == oracle::mul(std::to_string(p.a), std::to_string(p.b));
    for (const auto& s : t.steps) {
      if (!s.is_compute()) continue;
      const auto& e = s.equation();
      const std::string want = s.kind == StepKind::MultAdd ? oracle::add(std::to_string(e.lhs), std::to_string(e.rhs))
                                                           : oracle::mul(std::to_string(e.lhs), std::to_string(e.rhs));
      ok = ok && want == std::to_string(e.result);
    }
    bad_mult += !ok;
  }
  for (std::size_t i = 0; i < kGoldenTraces; ++i) {
    Rng rng = make_rng(kSeed, {3, i});
    const auto p = sudoku::gen_puzzle(rng);
    bool ok = oracle::count_solutions(grid(p.initial)) == 1;
    oracle::Grid g = grid(p.initial);
    const auto t = sudoku::golden_cot(p);
    for (const auto& s : t.steps) {
      if (s.kind == StepKind::Answer) {
        ok = ok && oracle::solved(g) && s.text() == p.solution.flat();
        continue;
      }
      const Move m = s.move();
      const int cell = (m.row - 1) * 4 + (m.col - 1);
      ok = ok && m.in_range() && g[static_cast<std::size_t>(cell)] == 0;
      if (!ok) break;
      const auto legal = oracle::legal_values(g, cell);
      ok = ok && legal == std::vector<int>{m.value};
      g[static_cast<std::size_t>(cell)] = m.value;
    }
    ok = ok && !t.steps.empty() && t.steps.back().kind == StepKind::Answer;
    bad_sudoku += !ok;
  }
  const double secs = seconds_since(t0);
  return {bad_mult == 0 && bad_sudoku == 0 && secs < kGoldenSeconds,
          fmt("mult failures %.0f/%.0f, sudoku failures %.0f/%.0f", bad_mult, kGoldenTraces, bad_sudoku, kGoldenTraces) +
              fmt(", limit %.0fs", kGoldenSeconds)};
}

Verdict carry_law() {
  std::size_t done = 0, violations = 0;
  Rng rng = make_rng(kSeed, {4});
  while (done < kCarrySamples) {
    const auto golden = mult::golden_cot(mult::gen_problem(rng));
    for (const auto& s : golden.steps) {
      if (s.kind != StepKind::MultAdd || done == kCarrySamples) continue;
      const auto r = carry_error(s, rng);
      if (!r) continue;
      ++done;
      const auto& e = s.equation();
      const std::string truth = oracle::add(std::to_string(e.lhs), std::to_string(e.rhs));
      const std::uint64_t injected = r->step.equation().result, delta = oracle::pow10(r->column);
      const bool ok = std::to_string(injected + delta) == truth || std::to_string(injected - delta) == truth;
      violations += !ok;
    }
  }
  return {violations == 0, fmt("%.0f violations in %.0f carry injections", violations, done)};
}

Verdict data_mix() {
  const auto problems = generate_problems(Task::mult, kMixRecords, kSeed);
  std::stringstream sink;
  emit_dataset(problems, MixConfig{}, WeightConfig{}, kSeed, 4, sink);
  DatasetReader reader(sink);
  std::size_t records = 0, with_errors = 0, rule_violations = 0, used = 0;
  std::vector<double> counts(4, 0.0);
  while (auto r = reader.next()) {
    const std::size_t i = records++;
    const auto k = r->meta.error_count;
    with_errors += k > 0;
    if (k > 0 && injectable_indices(golden_cot(problems[i])).size() >= 4) {
      counts[k - 1] += 1;
      ++used;
    }
    for (const auto& s : r->spans) {
      if (s.kind == SpanKind::error) rule_violations += s.loss != 0;
      if (s.kind == SpanKind::recognition || s.kind == SpanKind::correction) rule_violations += s.loss != 1;
    }
  }
  const double frac = static_cast<double>(with_errors) / static_cast<double>(records);
  const auto chi = oracle::chi_square(counts, std::vector<double>(4, used / 4.0), kAlpha);
  const bool pass = records == kMixRecords && std::abs(frac - kMixTarget) <= kMixTolerance && chi.pass() && rule_violations == 0;
  return {pass, fmt("error fraction %.4f, counts chi2=%.2f/%.2f, loss-rule violations %.0f", frac, chi.statistic, chi.critical,
                    rule_violations)};
}

Verdict grading_round_trip() {
  const MixConfig mix{0.0, 1, 4, {}};
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t i = 0; i < kRoundTripTraces; ++i) {
    Rng rng = make_rng(kSeed, {5, i});
    const Problem p = gen_problem(i % 2 ? Task::sudoku : Task::mult, rng);
    const auto inj = inject(golden_cot(p), mix, rng);
    if (inj.errors.empty()) continue;
    ++checked;
    CotTrace back = parse(render(inj.trace), p);
    back.problem = p;
    const auto ep = make_eval_prompt(back);
    mismatches += ep.error_index != inj.errors.front().step_index;
  }
  return {mismatches == 0 && checked > kRoundTripTraces * 9 / 10,
          fmt("%.0f mismatches over %.0f injected traces", mismatches, checked)};
}

Verdict harness_closure() {
  EvalConfig cfg;
  cfg.task = Task::mult;
  cfg.n = kClosureN;
  cfg.seed = kSeed;
  cfg.temperature = 1.0;
  cfg.workers = 4;
  const auto r = run_correction_eval(sim::sim_factory(sim::SimProfile::corrector(kClosureRecognition, kClosureCorrection), kSeed),
                                     ErrorSource::synthetic, {}, cfg);
  const double target = kClosureRecognition * kClosureCorrection;
  bool ordered = r.recognition->mean >= r.correction->mean;
  for (const auto& prof : {sim::SimProfile::corrector(0.5, 0.5, 0.5), sim::SimProfile::corrector(0.3, 1.0),
                           sim::SimProfile::golden(), sim::SimProfile::parrot()}) {
    cfg.n = 300;
    for (Task task : {Task::mult, Task::sudoku}) {
      cfg.task = task;
      const auto x = run_correction_eval(sim::sim_factory(prof, kSeed), ErrorSource::synthetic, {}, cfg);
      ordered = ordered && x.recognition->mean >= x.correction->mean;
    }
  }
  cfg.task = Task::mult;
  const auto parrot = run_correction_eval(sim::sim_factory(sim::SimProfile::parrot(), kSeed), ErrorSource::synthetic, {}, cfg);
  const bool pass = r.recognition->contains(kClosureRecognition) && r.correction->contains(target) && ordered &&
                    parrot.parrot->mean == 1.0;
  return {pass, fmt("recognition %.4f+-%.4f, correction %.4f+-%.4f", r.recognition->mean, r.recognition->half_width,
                    r.correction->mean, r.correction->half_width) +
                    fmt(" (targets %.2f, %.2f), parrot rate %.3f", kClosureRecognition, target, parrot.parrot->mean) +
                    (ordered ? "" : ", recognition < correction on some report")};
}

Verdict coverage_closure() {
  const auto run = [](double modeled) {
    CollectConfig cfg;
    cfg.count = kCoverageTraces;
    cfg.seed = kSeed;
    cfg.workers = 4;
    const auto pairs = collect_error_traces(sim::sim_factory(sim::SimProfile::noisy(0.2, modeled), kSeed), cfg);
    return estimate_alignment(pairs, {}, kCoverageSamples, kSeed, 4);
  };
  const auto half = run(0.5);
  const auto full = run(1.0);
  std::size_t eligible = 0, covered = 0;
  for (const auto& t : full.traces) {
    if (t.analytic < kCoverageMinP) continue;
    ++eligible;
    covered += t.hits > 0;
  }
  const double full_cov = eligible ? static_cast<double>(covered) / static_cast<double>(eligible) : 0.0;
  const bool pass = std::abs(half.coverage - kCoverageHalf) <= kCoverageHalfTolerance && eligible > 0 && full_cov >= kCoverageFull;
  return {pass, fmt("f=0.5 coverage %.3f; f=1.0 coverage %.4f over %.0f traces with p>=%.3f", half.coverage, full_cov, eligible,
                    kCoverageMinP)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EIFT_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "eift_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool pass = true;
  std::string detail;
  for (const char* task : {"mult", "sudoku"}) {
    const std::string base = std::string("--task ") + task + " --seed 7 gen-dataset --n 5000";
    const auto a = dir / "a.jsonl", b = dir / "b.jsonl", c = dir / "c.jsonl";
    pass = pass && run_cli(base + " --workers 1 --out " + a.string()) == 0;
    pass = pass && run_cli(base + " --workers 1 --out " + b.string()) == 0;
    pass = pass && run_cli(base + " --workers 8 --out " + c.string()) == 0;
    const auto x = slurp(a);
    const bool same = !x.empty() && x == slurp(b) && x == slurp(c);
    pass = pass && same;
    detail += std::string(task) + (same ? " identical " : " differs ");
  }
  fs::remove_all(dir);
  return {pass, detail + "(2 runs at --workers 1, 1 run at --workers 8, n=5000)"};
}

Verdict grammar_round_trip() {
  const MixConfig mix;  // mixes clean and injected traces
  std::size_t failures_seen = 0;
  for (std::size_t i = 0; i < kRoundTripTraces; ++i) {
    Rng rng = make_rng(kSeed, {9, i});
    const Problem p = gen_problem(i % 2 ? Task::sudoku : Task::mult, rng);
    const auto t = inject(golden_cot(p), mix, rng).trace;
    CotTrace back = parse(render(t), p);
    failures_seen += !(back == t);
  }
  return {failures_seen == 0, fmt("%.0f of %.0f traces differ after parse(render(t))", failures_seen, kRoundTripTraces)};
}

}  // namespace

int main() {
  report("injector-fidelity", injector_fidelity);
  report("golden-correctness", golden_correctness);
  report("carry-law", carry_law);
  report("data-mix", data_mix);
  report("grading-round-trip", grading_round_trip);
  report("harness-closure", harness_closure);
  report("coverage-closure", coverage_closure);
  report("determinism", determinism);
  report("grammar-round-trip", grammar_round_trip);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
