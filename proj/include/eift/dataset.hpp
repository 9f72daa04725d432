#pragma once
// Loss-masked training records, one JSON object per line.
//
// Each completion is tiled by byte spans, one per step (its text plus the
// trailing newline). Injected errors stay in the text but carry loss 0.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cot.hpp"
#include "injector.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tasks.hpp"

namespace eift {

using ordered_json = nlohmann::ordered_json;

enum class SpanKind { golden, error, recognition, correction, answer };

inline std::string_view to_string(SpanKind k) {
  switch (k) {
    case SpanKind::golden: return "golden";
    case SpanKind::error: return "error";
    case SpanKind::recognition: return "recognition";
    case SpanKind::correction: return "correction";
    case SpanKind::answer: return "answer";
  }
  return "?";
}

inline SpanKind parse_span_kind(std::string_view s) {
  for (auto k : {SpanKind::golden, SpanKind::error, SpanKind::recognition, SpanKind::correction, SpanKind::answer})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown span kind: " + std::string(s));
}

struct SpanAnnotation {
  std::size_t start = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::golden;
  int loss = 1;
  double weight = 1.0;
  friend bool operator==(const SpanAnnotation&, const SpanAnnotation&) = default;
};

/// Token weights for the recognition (backtrack) and correction spans.
struct WeightConfig {
  double correction_weight = 1.0;
  double backtrack_weight = 1.0;

  void validate() const {
    if (!(correction_weight > 0.0) || !(backtrack_weight > 0.0))
      throw std::invalid_argument("span weights must be positive");
  }
};

struct RecordMeta {
  std::size_t error_count = 0;
  std::vector<ErrorSpec> error_specs;
  std::vector<std::uint64_t> seed_path;
  friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct DatasetRecord {
  std::string id;
  Task task = Task::mult;
  std::string prompt;
  std::string completion;
  std::vector<SpanAnnotation> spans;
  RecordMeta meta;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

class RecordInvalid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline DatasetRecord make_record(const CotTrace& trace, std::vector<ErrorSpec> errors, const WeightConfig& weights,
                                 std::string id, std::vector<std::uint64_t> seed_path) {
  DatasetRecord r;
  r.id = std::move(id);
  r.task = trace.task;
  r.prompt = task_prompt(trace.problem.value());
  validate(trace, false);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const std::string line = render_step(trace.steps[i], trace.task) + kStepSeparator;
    SpanAnnotation span{r.completion.size(), r.completion.size() + line.size(), SpanKind::golden, 1, 1.0};
    switch (trace.annotations[i]) {
      case Provenance::golden:
        span.kind = trace.steps[i].kind == StepKind::Answer ? SpanKind::answer : SpanKind::golden;
        break;
      case Provenance::injected_error:
        span.kind = SpanKind::error;
        span.loss = 0;
        break;
      case Provenance::recognition:
        span.kind = SpanKind::recognition;
        span.weight = weights.backtrack_weight;
        break;
      case Provenance::correction:
        span.kind = SpanKind::correction;
        span.weight = weights.correction_weight;
        break;
    }
    r.spans.push_back(span);
    r.completion += line;
  }
  r.meta.error_count = errors.size();
  r.meta.error_specs = std::move(errors);
  r.meta.seed_path = std::move(seed_path);
  return r;
}

// ---------------------------------------------------------------------------
// JSON

inline ordered_json to_json(const ErrorSpec& s) {
  ordered_json j;
  j["type"] = to_string(s.type);
  j["step_index"] = s.step_index;
  j["golden_index"] = s.golden_index;
  switch (s.type) {
    case ErrorType::IntError10:
    case ErrorType::IntError100: j["offset"] = s.offset; break;
    case ErrorType::CarryError: j["column"] = s.position; break;
    case ErrorType::IntErrorSingleDigit:
    case ErrorType::IntErrorSingleDigitClose:
    case ErrorType::IntErrorTwoDigits:
      j["position"] = s.position;
      j["replacement"] = s.replacement;
      break;
    case ErrorType::SudokuInvalidMove:
    case ErrorType::SudokuNotSingle: break;
  }
  if (s.carry_fallback) j["carry_fallback"] = true;
  if (s.move) j["move"] = {s.move->row, s.move->col, s.move->value};
  if (s.invalid_kind) j["invalid_kind"] = to_string(*s.invalid_kind);
  return j;
}

inline ErrorSpec error_spec_from_json(const nlohmann::json& j) {
  ErrorSpec s;
  s.type = parse_error_type(j.at("type").get<std::string>());
  s.step_index = j.at("step_index").get<std::size_t>();
  s.golden_index = j.at("golden_index").get<std::size_t>();
  s.offset = j.value("offset", std::int64_t{0});
  s.position = j.contains("column") ? j["column"].get<int>() : j.value("position", 0);
  s.replacement = j.value("replacement", std::string{});
  s.carry_fallback = j.value("carry_fallback", false);
  if (j.contains("move")) {
    const auto& m = j["move"];
    s.move = Move{m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<int>()};
  }
  if (j.contains("invalid_kind")) s.invalid_kind = parse_invalid_move_kind(j["invalid_kind"].get<std::string>());
  return s;
}

inline ordered_json to_json(const DatasetRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["task"] = to_string(r.task);
  j["prompt"] = r.prompt;
  j["completion"] = r.completion;
  ordered_json spans = ordered_json::array();
  for (const auto& s : r.spans) {
    ordered_json o;
    o["start"] = s.start;
    o["end"] = s.end;
    o["kind"] = to_string(s.kind);
    o["loss"] = s.loss;
    o["weight"] = s.weight;
    spans.push_back(std::move(o));
  }
  j["spans"] = std::move(spans);
  ordered_json meta;
  meta["error_count"] = r.meta.error_count;
  ordered_json specs = ordered_json::array();
  for (const auto& s : r.meta.error_specs) specs.push_back(to_json(s));
  meta["error_specs"] = std::move(specs);
  meta["seed_path"] = r.meta.seed_path;
  j["meta"] = std::move(meta);
  return j;
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  r.task = parse_task(j.at("task").get<std::string>());
  r.prompt = j.at("prompt").get<std::string>();
  r.completion = j.at("completion").get<std::string>();
  for (const auto& o : j.at("spans")) {
    SpanAnnotation s;
    s.start = o.at("start").get<std::size_t>();
    s.end = o.at("end").get<std::size_t>();
    s.kind = parse_span_kind(o.at("kind").get<std::string>());
    s.loss = o.at("loss").get<int>();
    s.weight = o.at("weight").get<double>();
    r.spans.push_back(s);
  }
  const auto& meta = j.at("meta");
  r.meta.error_count = meta.at("error_count").get<std::size_t>();
  for (const auto& s : meta.at("error_specs")) r.meta.error_specs.push_back(error_spec_from_json(s));
  r.meta.seed_path = meta.at("seed_path").get<std::vector<std::uint64_t>>();
  return r;
}

/// Checks every span and record invariant; throws RecordInvalid.
inline void validate_record(const DatasetRecord& r) {
  if (!is_ascii(r.prompt) || !is_ascii(r.completion)) throw RecordInvalid("non-ASCII text");
  std::size_t pos = 0, errors = 0;
  for (std::size_t i = 0; i < r.spans.size(); ++i) {
    const auto& s = r.spans[i];
    if (s.start != pos) throw RecordInvalid("span " + std::to_string(i) + (s.start < pos ? " overlaps its predecessor" : " leaves a gap"));
    if (s.end <= s.start) throw RecordInvalid("span " + std::to_string(i) + " is empty or reversed");
    if (s.loss != 0 && s.loss != 1) throw RecordInvalid("span " + std::to_string(i) + " has loss outside {0, 1}");
    if (!(s.weight > 0.0)) throw RecordInvalid("span " + std::to_string(i) + " has a non-positive weight");
    if (s.kind == SpanKind::error && s.loss != 0) throw RecordInvalid("error span " + std::to_string(i) + " is not loss-masked");
    if ((s.kind == SpanKind::recognition || s.kind == SpanKind::correction) && s.loss != 1)
      throw RecordInvalid("span " + std::to_string(i) + " must carry loss");
    errors += s.kind == SpanKind::error;
    pos = s.end;
  }
  if (pos != r.completion.size()) throw RecordInvalid("spans do not cover the completion");
  if (errors != r.meta.error_count) throw RecordInvalid("error_count disagrees with the error spans");
  if (r.meta.error_specs.size() != r.meta.error_count) throw RecordInvalid("error_specs length disagrees with error_count");
  std::string rerendered;
  try {
    rerendered = render(parse(r.completion, r.task));
  } catch (const InvalidTrace& e) {
    throw RecordInvalid(std::string("completion is not a valid trace: ") + e.what());
  }
  if (rerendered != r.completion) throw RecordInvalid("completion does not round-trip through the grammar");
}

// ---------------------------------------------------------------------------
// Emission

inline std::vector<Problem> generate_problems(Task task, std::size_t n, std::uint64_t seed, const sudoku::GenConfig& gen = {}) {
  std::vector<Problem> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, {i, 0});
    out[i] = gen_problem(task, rng, gen);
  }
  return out;
}

inline std::string record_id(Task task, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%07zu", std::string(to_string(task)).c_str(), index);
  return buf;
}

/// Record for problem `index`; its randomness comes only from (seed, index).
inline DatasetRecord build_record(const Problem& problem, std::size_t index, const MixConfig& mix,
                                  const WeightConfig& weights, std::uint64_t seed) {
  Rng rng = make_rng(seed, {index, 1});
  auto injected = inject(golden_cot(problem), mix, rng);
  return make_record(injected.trace, std::move(injected.errors), weights, record_id(task_of(problem), index),
                     {seed, index});
}

/// Writes one JSON line per problem. Records are built in parallel and
/// written in index order, so output does not depend on `workers`.
inline std::size_t emit_dataset(std::span<const Problem> problems, const MixConfig& mix, const WeightConfig& weights,
                                std::uint64_t seed, int workers, std::ostream& sink) {
  mix.validate();
  weights.validate();
  constexpr std::size_t kChunk = 4096;
  std::vector<std::string> lines;
  for (std::size_t base = 0; base < problems.size(); base += kChunk) {
    const std::size_t n = std::min(kChunk, problems.size() - base);
    lines.assign(n, {});
    parallel_for(n, workers, [&](std::size_t k) {
      lines[k] = to_json(build_record(problems[base + k], base + k, mix, weights, seed)).dump();
    });
    for (const auto& l : lines) sink << l << '\n';
    if (!sink) throw std::runtime_error("write to dataset sink failed");
  }
  return problems.size();
}

/// Same as emit_dataset but writes `path` atomically through a temporary
/// file; on failure the temporary is removed and nothing appears at `path`.
inline std::size_t emit_dataset_file(std::span<const Problem> problems, const MixConfig& mix, const WeightConfig& weights,
                                     std::uint64_t seed, int workers, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".partial";
  try {
    std::size_t n;
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      n = emit_dataset(problems, mix, weights, seed, workers, out);
      out.flush();
      if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
    return n;
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Reading

/// Streams validated records from a JSON-lines source, one at a time.
class DatasetReader {
 public:
  explicit DatasetReader(std::istream& in) : in_(in) {}

  /// nullopt at end of input. Throws DatasetError carrying the 1-based
  /// line number for malformed or invalid records.
  std::optional<DatasetRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.empty()) continue;
      DatasetRecord r;
      try {
        r = record_from_json(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        throw DatasetError(line_, std::string("malformed record: ") + e.what());
      }
      try {
        validate_record(r);
      } catch (const RecordInvalid& e) {
        throw DatasetError(line_, std::string("rejected record ") + r.id + ": " + e.what());
      }
      return r;
    }
    return std::nullopt;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace eift
