// eift: dataset generation, evaluation, coverage analysis and simulated
// policies for error-injection fine-tuning experiments.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eift/eift.hpp"

namespace {

using nlohmann::ordered_json;

struct Globals {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string task = "mult";
  std::string out;
};

struct PolicyArgs {
  std::string cmd;
  std::string completions;
  std::string dump_requests;

  void add_to(CLI::App* sub, const std::string& what = "policy") {
    auto* c = sub->add_option("--policy-cmd", cmd, "Shell command of a " + what + " server speaking the wire protocol");
    auto* f = sub->add_option("--completions-file", completions, "JSONL of pre-generated {id, completion} objects");
    auto* d = sub->add_option("--dump-requests", dump_requests, "Write the requests as JSONL instead of querying a policy");
    c->excludes(f);
    d->excludes(c);
    d->excludes(f);
  }
};

/// Records requests and answers each with an empty completion.
struct RequestLog {
  std::mutex mu;
  std::vector<eift::PolicyRequest> requests;

  eift::PolicyFactory factory() {
    return [this] {
      return std::make_unique<eift::FunctionPolicy>([this](const eift::PolicyRequest& r) {
        std::lock_guard lock(mu);
        requests.push_back(r);
        return std::string();
      });
    };
  }

  void write(const std::string& path) {
    std::sort(requests.begin(), requests.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& r : requests) out << eift::encode_request(r) << '\n';
  }
};

eift::PolicyFactory make_policy(const PolicyArgs& a, RequestLog* log) {
  if (!a.dump_requests.empty()) return log->factory();
  if (!a.cmd.empty()) return [cmd = a.cmd] { return std::make_unique<eift::SubprocessPolicy>(cmd); };
  if (!a.completions.empty()) {
    auto table = eift::CompletionFilePolicy::load(a.completions);
    return [table] { return std::make_unique<eift::CompletionFilePolicy>(table); };
  }
  throw CLI::RequiredError("--policy-cmd, --completions-file or --dump-requests");
}

eift::TypeWeights load_weights(const std::string& path) {
  eift::TypeWeights w;
  if (path.empty()) return w;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto j = nlohmann::json::parse(in);
  if (j.contains("addition")) w.addition = j["addition"].get<std::array<double, 6>>();
  if (j.contains("non_addition")) w.non_addition = j["non_addition"].get<std::array<double, 6>>();
  w.sudoku_invalid = j.value("sudoku_invalid", w.sudoku_invalid);
  w.sudoku_not_single = j.value("sudoku_not_single", w.sudoku_not_single);
  w.validate();
  return w;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string pretty(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string svg_for(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "coverage") {
    std::vector<eift::svg::Series> series;
    for (const char* key : {"cdf", "analytic_cdf"}) {
      eift::svg::Series s{key == std::string("cdf") ? "empirical" : "analytic", {}};
      for (const auto& p : j.at(key)) s.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      series.push_back(std::move(s));
    }
    char title[96];
    std::snprintf(title, sizeof title, "Exact-match probability CDF (coverage %.3f)", j.at("coverage").get<double>());
    return eift::svg::cdf_plot(title, series, "probability of the on-policy error under the injector");
  }
  std::vector<eift::svg::Bar> bars;
  for (const auto& [name, m] : j.at("metrics").items())
    bars.push_back({name, m.at("mean").get<double>(), m.at("half_width").get<double>()});
  std::string title = kind + " / " + j.value("task", "");
  if (j.contains("error_source")) title += " / " + j["error_source"].get<std::string>() + " errors";
  char t[32];
  std::snprintf(t, sizeof t, " / T=%.1f", j.value("temperature", 0.0));
  return eift::svg::bar_chart(title + t, bars);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-injection fine-tuning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");

  Globals g;
  app.add_option("--seed", g.seed, "Root seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  app.add_option("--task", g.task, "Task")->check(CLI::IsMember({"mult", "sudoku"}))->capture_default_str();
  app.add_option("--out", g.out, "Output path ('-' or empty for stdout where allowed)");

  std::size_t n = 1000;
  int clue_floor = 0;
  std::string weights_path;

  // gen-golden
  auto* golden = app.add_subcommand("gen-golden", "Emit a clean golden-CoT dataset");
  golden->add_option("--n", n, "Number of records")->capture_default_str();
  golden->add_option("--clue-floor", clue_floor, "Sudoku: stop removing clues at this count")->capture_default_str();

  // gen-dataset
  eift::MixConfig mix;
  eift::WeightConfig span_weights;
  auto* dataset = app.add_subcommand("gen-dataset", "Emit an error-injected dataset");
  dataset->add_option("--n", n, "Number of records")->capture_default_str();
  dataset->add_option("--clean-fraction", mix.clean_fraction, "Share of records left clean")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  dataset->add_option("--min-errors", mix.min_errors, "Fewest errors per injected record")->capture_default_str();
  dataset->add_option("--max-errors", mix.max_errors, "Most errors per injected record")->capture_default_str();
  dataset->add_option("--correction-weight", span_weights.correction_weight, "Loss weight of correction spans")
      ->capture_default_str();
  dataset->add_option("--backtrack-weight", span_weights.backtrack_weight, "Loss weight of recognition spans")
      ->capture_default_str();
  dataset->add_option("--weights", weights_path, "JSON file with error-type weights")->check(CLI::ExistingFile);
  dataset->add_option("--clue-floor", clue_floor, "Sudoku: stop removing clues at this count")->capture_default_str();

  // eval-accuracy
  eift::EvalConfig ecfg;
  PolicyArgs policy_args;
  auto* acc = app.add_subcommand("eval-accuracy", "Final-answer accuracy of a policy");
  acc->add_option("--n", ecfg.n, "Problems")->capture_default_str();
  acc->add_option("--temperature", ecfg.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber)->capture_default_str();
  acc->add_option("--max-new-tokens", ecfg.max_new_tokens, "Generation limit sent with each request")->capture_default_str();
  policy_args.add_to(acc);

  // eval-correction
  std::string source_name = "synthetic";
  PolicyArgs source_args;
  auto* corr = app.add_subcommand("eval-correction", "Error recognition and correction rates");
  corr->add_option("--n", ecfg.n, "Examples")->capture_default_str();
  corr->add_option("--temperature", ecfg.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber)->capture_default_str();
  corr->add_option("--max-new-tokens", ecfg.max_new_tokens, "Generation limit sent with each request")->capture_default_str();
  corr->add_option("--error-source", source_name, "Where erroneous traces come from")
      ->check(CLI::IsMember({"synthetic", "policy"}))
      ->capture_default_str();
  corr->add_option("--source-cmd", source_args.cmd, "Error-producing policy server (policy error source)");
  corr->add_option("--source-temperature", ecfg.source_temperature, "Sampling temperature of the error source")
      ->capture_default_str();
  corr->add_option("--attempt-budget", ecfg.attempt_budget, "Traces drawn per example before aborting")->capture_default_str();
  corr->add_option("--weights", weights_path, "JSON file with error-type weights")->check(CLI::ExistingFile);
  policy_args.add_to(corr);

  // coverage
  eift::CollectConfig ccfg;
  std::size_t samples = 10000;
  std::string svg_path;
  auto* cov = app.add_subcommand("coverage", "Alignment of injected errors with a policy's own errors");
  cov->add_option("--traces", ccfg.count, "Error traces to collect")->capture_default_str();
  cov->add_option("--samples", samples, "Injector samples per trace")->capture_default_str();
  cov->add_option("--temperature", ccfg.temperature, "Sampling temperature of the policy")->capture_default_str();
  cov->add_option("--max-new-tokens", ccfg.max_new_tokens, "Generation limit sent with each request")->capture_default_str();
  cov->add_option("--attempt-budget", ccfg.attempt_budget, "Generations tried before aborting")->capture_default_str();
  cov->add_option("--weights", weights_path, "JSON file with error-type weights")->check(CLI::ExistingFile);
  cov->add_option("--svg", svg_path, "Also write a CDF plot here");
  policy_args.add_to(cov);

  // sim-policy
  std::string profile_name = "golden";
  eift::sim::SimProfile profile;
  auto* sim = app.add_subcommand("sim-policy", "Serve a simulated policy over stdin/stdout");
  sim->add_option("--profile", profile_name, "Behavior")
      ->check(CLI::IsMember({"golden", "noisy", "parrot", "corrector"}))
      ->capture_default_str();
  sim->add_option("--error-rate", profile.per_step_error_rate, "Noisy: per-step corruption probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--modeled-fraction", profile.modeled_fraction, "Noisy: share of corruptions drawn from the injector")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim->add_option("--skip-rate", profile.skip_rate, "Noisy: probability of dropping a partial product")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--recognition", profile.recognition_prob, "Corrector: recognition probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--correction", profile.correction_prob, "Corrector: correction probability given recognition")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim->add_option("--parrot", profile.parrot_prob, "Corrector: parrot probability given recognition")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--weights", weights_path, "JSON file with error-type weights")->check(CLI::ExistingFile);

  // report
  std::string report_in;
  auto* report = app.add_subcommand("report", "Render a metrics or coverage JSON file as SVG");
  report->add_option("--in", report_in, "Report JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const eift::Task task = eift::parse_task(g.task);
    eift::sudoku::GenConfig gen{clue_floor};

    if (*golden || *dataset) {
      if (g.out.empty()) throw CLI::RequiredError("--out");
      if (*golden) mix = {1.0, 1, 4, {}};
      mix.weights = load_weights(weights_path);
      const auto problems = eift::generate_problems(task, n, g.seed, gen);
      eift::emit_dataset_file(problems, mix, span_weights, g.seed, g.workers, g.out);
      std::cerr << "wrote " << n << " records to " << g.out << "\n";
      return 0;
    }

    if (*acc || *corr) {
      ecfg.task = task;
      ecfg.seed = g.seed;
      ecfg.workers = g.workers;
      ecfg.gen = gen;
      ecfg.mix.weights = load_weights(weights_path);
      RequestLog log;
      const auto policy = make_policy(policy_args, &log);
      eift::MetricsReport r;
      if (*acc) {
        r = eift::run_accuracy_eval(policy, ecfg);
      } else {
        const auto source_kind = eift::parse_error_source(source_name);
        eift::PolicyFactory source;
        if (source_kind == eift::ErrorSource::policy) {
          if (source_args.cmd.empty()) throw CLI::RequiredError("--source-cmd");
          source = [cmd = source_args.cmd] { return std::make_unique<eift::SubprocessPolicy>(cmd); };
        } else if (!source_args.cmd.empty()) {
          throw CLI::ValidationError("--source-cmd", "only valid with --error-source policy");
        }
        r = eift::run_correction_eval(policy, source_kind, source, ecfg);
      }
      if (!policy_args.dump_requests.empty()) {
        log.write(policy_args.dump_requests);
        std::cerr << "wrote " << log.requests.size() << " requests to " << policy_args.dump_requests << "\n";
        return 0;
      }
      if (r.transport_errors) std::cerr << "warning: " << r.transport_errors << " requests failed and were excluded\n";
      write_text(g.out, pretty(eift::to_json(r)));
      return 0;
    }

    if (*cov) {
      if (!policy_args.dump_requests.empty()) throw CLI::ValidationError("--dump-requests", "not supported by coverage");
      ccfg.task = task;
      ccfg.seed = g.seed;
      ccfg.workers = g.workers;
      ccfg.gen = gen;
      const auto policy = make_policy(policy_args, nullptr);
      const auto pairs = eift::collect_error_traces(policy, ccfg);
      const auto r = eift::estimate_alignment(pairs, load_weights(weights_path), samples, g.seed, g.workers);
      const auto j = eift::to_json(r);
      write_text(g.out, pretty(j));
      if (!svg_path.empty()) write_text(svg_path, svg_for(nlohmann::json::parse(j.dump())));
      return 0;
    }

    if (*sim) {
      profile.kind = eift::sim::parse_profile_kind(profile_name);
      if (profile.kind == eift::sim::ProfileKind::Parrot) profile.correction_prob = 0.0, profile.parrot_prob = 1.0;
      profile.weights = load_weights(weights_path);
      profile.validate();
      eift::sim::SimPolicy policy(profile, g.seed);
      eift::serve_policy(std::cin, std::cout, [&](const eift::PolicyRequest& r) { return policy.complete(r); });
      return 0;
    }

    if (*report) {
      write_text(g.out, svg_for(nlohmann::json::parse(read_text(report_in))));
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const eift::CoverageAborted& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"achieved", e.achieved}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"error", e.what()}}.dump() << "\n";
    return 2;
  }
  return 0;
}
