// Command-line front end: flag parsing and precedence resolution only; the
// command logic lives in the core library so tests can drive it directly.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "symeval/commands.hpp"
#include "symeval/errors.hpp"

namespace {

struct EndpointFlags {
  std::optional<std::string> config_file;
  symeval::EndpointOverrides overrides;
};

void add_endpoint_flags(CLI::App* cmd, EndpointFlags& flags) {
  cmd->add_option("--config", flags.config_file,
                  "JSON config file with endpoint settings (lowest precedence)");
  cmd->add_option("--base-url", flags.overrides.base_url,
                  "Completion endpoint base URL, e.g. https://api.example.com");
  cmd->add_option("--endpoint-path", flags.overrides.path,
                  "POST path on the endpoint (default /v1/completions)");
  cmd->add_option("--model", flags.overrides.model, "Model name sent with each request");
  cmd->add_option("--api-key-env", flags.overrides.api_key_env,
                  "Environment variable holding the API key (default SYMEVAL_API_KEY)");
  cmd->add_option("--auth-header", flags.overrides.auth_header,
                  "Auth header name (default Authorization)");
  cmd->add_option("--auth-template", flags.overrides.auth_template,
                  "Auth header value template; {key} is replaced (default 'Bearer {key}')");
  cmd->add_option("--timeout-ms", flags.overrides.timeout_ms, "Request timeout");
  cmd->add_option("--max-retries", flags.overrides.max_retries,
                  "Retries after the first attempt (default 3)");
  cmd->add_option("--backoff-ms", flags.overrides.backoff_ms,
                  "Initial retry backoff; doubles per retry (default 1000)");
  cmd->add_option("--parallelism", flags.overrides.parallelism,
                  "Concurrent requests (default 4)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Math-word-problem evaluation harness: symbolize datasets, query a "
               "completion model under several prompting protocols, filter answers "
               "and score accuracy/alignment"};
  app.require_subcommand(1);

  // symbolize ---------------------------------------------------------------
  symeval::SymbolizeOptions sym_opts;
  CLI::App* sym = app.add_subcommand("symbolize", "Convert a numeric dataset to its symbolic form");
  sym->add_option("--in", sym_opts.input, "Input dataset (JSON array)")->required();
  sym->add_option("--varset", sym_opts.varset, "Variable set: wxyz | pqrs | ijkl")
      ->capture_default_str();
  sym->add_option("--out", sym_opts.output, "Output path")->required();

  // run ---------------------------------------------------------------------
  symeval::RunCommandOptions run_opts;
  EndpointFlags run_endpoint;
  bool lenient_replay = false;
  bool show_progress = false;
  CLI::App* run = app.add_subcommand("run", "Evaluate a dataset against a backend");
  run->add_option("--dataset", run_opts.dataset, "Dataset (JSON array)")->required();
  run->add_option("--mode", run_opts.mode,
                  "numeric | symbolic | sp | sp-ap | sp-ap-always")
      ->capture_default_str();
  run->add_option("--style", run_opts.style, "vanilla | cot")->capture_default_str();
  run->add_option("--varset", run_opts.varset, "Variable set: wxyz | pqrs | ijkl")
      ->capture_default_str();
  run->add_option("--runs", run_opts.runs, "Repetitions per problem")
      ->capture_default_str();
  run->add_option("--subset", run_opts.subset,
                  "Evaluate a seeded sample of this many problems");
  run->add_option("--seed", run_opts.seed, "Seed for subset choice and equivalence checks")
      ->capture_default_str();
  run->add_option("--backend", run_opts.backend, "live | record | replay")
      ->capture_default_str();
  run->add_option("--fixtures", run_opts.fixtures,
                  "Fixture JSONL (required for record/replay)");
  run->add_option("--out", run_opts.out_records, "Records JSONL output")->required();
  run->add_flag("--lenient-replay", lenient_replay,
                "Record fixture misses as failed runs instead of aborting");
  run->add_flag("--progress", show_progress, "Print progress to stderr");
  add_endpoint_flags(run, run_endpoint);

  // score -------------------------------------------------------------------
  symeval::ScoreOptions score_opts;
  CLI::App* score = app.add_subcommand("score", "Aggregate a records file into a summary");
  score->add_option("--records", score_opts.records, "Records JSONL")->required();
  score->add_option("--dataset", score_opts.dataset, "Dataset the records refer to")
      ->required();
  score->add_option("--out", score_opts.out_summary, "Summary JSON output")->required();
  score->add_option("--hist", score_opts.out_histogram,
                    "Also write similarity histograms (CSV)");

  // report ------------------------------------------------------------------
  symeval::ReportOptions report_opts;
  CLI::App* report = app.add_subcommand("report", "Merge summaries into one grid");
  report->add_option("--summary", report_opts.summaries, "Summary JSON (repeatable)")
      ->required()
      ->expected(-1);
  report->add_option("--out", report_opts.out_text, "Write the text grid here instead of stdout");
  report->add_option("--csv", report_opts.out_csv, "Also write the grid as CSV");

  // filter ------------------------------------------------------------------
  symeval::FilterCommandOptions filter_opts;
  CLI::App* filter = app.add_subcommand("filter", "Run the answer filter on raw text");
  filter->add_option("--kind", filter_opts.kind, "numeric | symbolic")
      ->capture_default_str();
  filter->add_option("--varset", filter_opts.varset, "Variable set: wxyz | pqrs | ijkl")
      ->capture_default_str();
  filter->add_option("--filter-mode", filter_opts.filter_mode, "baseline | extended")
      ->capture_default_str();
  filter->add_option("--text", filter_opts.text, "Filter this string");
  filter->add_option("--in", filter_opts.input, "Filter each line of this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? symeval::kExitOk : symeval::kExitUserError;
  }

  try {
    if (sym->parsed()) {
      return symeval::cmd_symbolize(sym_opts, std::cout, std::cerr);
    }
    if (run->parsed()) {
      run_opts.strict_replay = !lenient_replay;
      run_opts.show_progress = show_progress;
      std::optional<std::filesystem::path> config_path;
      if (run_endpoint.config_file) config_path = *run_endpoint.config_file;
      run_opts.endpoint =
          symeval::resolve_endpoint(config_path, {}, run_endpoint.overrides);
      return symeval::cmd_run(run_opts, std::cout, std::cerr);
    }
    if (score->parsed()) {
      return symeval::cmd_score(score_opts, std::cout, std::cerr);
    }
    if (report->parsed()) {
      return symeval::cmd_report(report_opts, std::cout, std::cerr);
    }
    if (filter->parsed()) {
      return symeval::cmd_filter(filter_opts, std::cout, std::cerr);
    }
  } catch (const symeval::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return symeval::kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return symeval::kExitRuntimeError;
  }
  return symeval::kExitUserError;
}
