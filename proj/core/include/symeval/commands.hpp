#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symeval/backend.hpp"

namespace symeval {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;     // bad flags, config, or inputs
inline constexpr int kExitRuntimeError = 2;  // failures while executing

struct SymbolizeOptions {
  std::filesystem::path input;
  std::string varset = "wxyz";
  std::filesystem::path output;
};

int cmd_symbolize(const SymbolizeOptions& opts, std::ostream& out, std::ostream& err);

// Endpoint settings may come from a config file, the environment, or flags;
// unset fields fall through to the next-lower-precedence source.
struct EndpointOverrides {
  std::optional<std::string> base_url;
  std::optional<std::string> path;
  std::optional<std::string> model;
  std::optional<std::string> api_key_env;
  std::optional<std::string> auth_header;
  std::optional<std::string> auth_template;
  std::optional<int> timeout_ms;
  std::optional<int> max_retries;
  std::optional<int> backoff_ms;
  std::optional<int> parallelism;
};

/// Reads overrides from a config-file JSON object. Unknown keys are a
/// ConfigError so typos fail loudly.
EndpointOverrides endpoint_overrides_from_json(const nlohmann::json& j);

using GetEnvFn = std::function<const char*(const char*)>;

/// Reads SYMEVAL_BASE_URL, SYMEVAL_ENDPOINT_PATH, SYMEVAL_MODEL,
/// SYMEVAL_API_KEY_ENV, SYMEVAL_AUTH_HEADER, SYMEVAL_AUTH_TEMPLATE,
/// SYMEVAL_TIMEOUT_MS, SYMEVAL_MAX_RETRIES, SYMEVAL_BACKOFF_MS and
/// SYMEVAL_PARALLELISM. The injectable getter keeps this testable.
EndpointOverrides endpoint_overrides_from_env(const GetEnvFn& getenv_fn = {});

struct ResolvedEndpoint {
  EndpointConfig endpoint;
  int parallelism = 4;
};

/// Defaults, then config file, then environment, then flags — the highest
/// source that sets a field wins.
ResolvedEndpoint resolve_endpoint(const std::optional<std::filesystem::path>& config_file,
                                  const GetEnvFn& getenv_fn,
                                  const EndpointOverrides& flags);

struct RunCommandOptions {
  std::filesystem::path dataset;
  std::string mode = "numeric";
  std::string style = "cot";
  std::string varset = "wxyz";
  int runs = 5;
  std::optional<std::size_t> subset;
  std::uint64_t seed = 0;
  std::string backend = "replay";  // live | record | replay
  std::filesystem::path fixtures;  // required for record/replay
  std::filesystem::path out_records;
  ResolvedEndpoint endpoint;  // used by live/record
  bool strict_replay = true;
  bool show_progress = false;
};

int cmd_run(const RunCommandOptions& opts, std::ostream& out, std::ostream& err);

struct ScoreOptions {
  std::filesystem::path records;
  std::filesystem::path dataset;
  std::filesystem::path out_summary;
  std::optional<std::filesystem::path> out_histogram;
};

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);

struct ReportOptions {
  std::vector<std::filesystem::path> summaries;
  std::optional<std::filesystem::path> out_text;  // unset: print to stdout
  std::optional<std::filesystem::path> out_csv;
};

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);

struct FilterCommandOptions {
  std::string kind = "symbolic";  // numeric | symbolic
  std::string varset = "wxyz";
  std::string filter_mode = "extended";  // baseline | extended
  std::optional<std::string> text;       // one-shot input
  std::optional<std::filesystem::path> input;  // one raw answer per line
};

/// Runs the answer filter over the given text/lines and prints one JSON
/// object per input: {"input", "cleaned", "parse_ok", "steps"}.
int cmd_filter(const FilterCommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace symeval
