#include "symeval/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "symeval/dataset.hpp"
#include "symeval/errors.hpp"
#include "symeval/filtering.hpp"
#include "symeval/pipeline.hpp"
#include "symeval/report.hpp"
#include "symeval/serialization.hpp"

namespace symeval {

namespace {

using nlohmann::json;

int parse_int_setting(const std::string& value, const std::string& name) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("setting " + name + " must be an integer, got \"" + value + "\"");
  }
}

void merge(EndpointOverrides& base, const EndpointOverrides& over) {
  if (over.base_url) base.base_url = over.base_url;
  if (over.path) base.path = over.path;
  if (over.model) base.model = over.model;
  if (over.api_key_env) base.api_key_env = over.api_key_env;
  if (over.auth_header) base.auth_header = over.auth_header;
  if (over.auth_template) base.auth_template = over.auth_template;
  if (over.timeout_ms) base.timeout_ms = over.timeout_ms;
  if (over.max_retries) base.max_retries = over.max_retries;
  if (over.backoff_ms) base.backoff_ms = over.backoff_ms;
  if (over.parallelism) base.parallelism = over.parallelism;
}

}  // namespace

EndpointOverrides endpoint_overrides_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  EndpointOverrides o;
  for (const auto& [key, value] : j.items()) {
    if (key == "base_url") {
      o.base_url = value.get<std::string>();
    } else if (key == "path") {
      o.path = value.get<std::string>();
    } else if (key == "model") {
      o.model = value.get<std::string>();
    } else if (key == "api_key_env") {
      o.api_key_env = value.get<std::string>();
    } else if (key == "auth_header") {
      o.auth_header = value.get<std::string>();
    } else if (key == "auth_template") {
      o.auth_template = value.get<std::string>();
    } else if (key == "timeout_ms") {
      o.timeout_ms = value.get<int>();
    } else if (key == "max_retries") {
      o.max_retries = value.get<int>();
    } else if (key == "backoff_ms") {
      o.backoff_ms = value.get<int>();
    } else if (key == "parallelism") {
      o.parallelism = value.get<int>();
    } else {
      throw ConfigError("unknown config file key: " + key);
    }
  }
  return o;
}

EndpointOverrides endpoint_overrides_from_env(const GetEnvFn& getenv_fn) {
  GetEnvFn get = getenv_fn;
  if (!get) get = [](const char* name) { return std::getenv(name); };
  EndpointOverrides o;
  auto str = [&](const char* name) -> std::optional<std::string> {
    const char* v = get(name);
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
  o.base_url = str("SYMEVAL_BASE_URL");
  o.path = str("SYMEVAL_ENDPOINT_PATH");
  o.model = str("SYMEVAL_MODEL");
  o.api_key_env = str("SYMEVAL_API_KEY_ENV");
  o.auth_header = str("SYMEVAL_AUTH_HEADER");
  o.auth_template = str("SYMEVAL_AUTH_TEMPLATE");
  if (auto v = str("SYMEVAL_TIMEOUT_MS")) o.timeout_ms = parse_int_setting(*v, "SYMEVAL_TIMEOUT_MS");
  if (auto v = str("SYMEVAL_MAX_RETRIES")) o.max_retries = parse_int_setting(*v, "SYMEVAL_MAX_RETRIES");
  if (auto v = str("SYMEVAL_BACKOFF_MS")) o.backoff_ms = parse_int_setting(*v, "SYMEVAL_BACKOFF_MS");
  if (auto v = str("SYMEVAL_PARALLELISM")) o.parallelism = parse_int_setting(*v, "SYMEVAL_PARALLELISM");
  return o;
}

ResolvedEndpoint resolve_endpoint(const std::optional<std::filesystem::path>& config_file,
                                  const GetEnvFn& getenv_fn,
                                  const EndpointOverrides& flags) {
  EndpointOverrides merged;
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw ConfigError("cannot open config file: " + config_file->string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      throw ConfigError("config file is not valid JSON: " + config_file->string());
    }
    merge(merged, endpoint_overrides_from_json(j));
  }
  merge(merged, endpoint_overrides_from_env(getenv_fn));
  merge(merged, flags);

  ResolvedEndpoint r;
  if (merged.base_url) r.endpoint.base_url = *merged.base_url;
  if (merged.path) r.endpoint.path = *merged.path;
  if (merged.model) r.endpoint.model = *merged.model;
  if (merged.api_key_env) r.endpoint.api_key_env = *merged.api_key_env;
  if (merged.auth_header) r.endpoint.auth_header = *merged.auth_header;
  if (merged.auth_template) r.endpoint.auth_template = *merged.auth_template;
  if (merged.timeout_ms) r.endpoint.timeout = std::chrono::milliseconds(*merged.timeout_ms);
  if (merged.max_retries) r.endpoint.retry.max_retries = *merged.max_retries;
  if (merged.backoff_ms) {
    r.endpoint.retry.initial_backoff = std::chrono::milliseconds(*merged.backoff_ms);
  }
  if (merged.parallelism) {
    if (*merged.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    r.parallelism = *merged.parallelism;
  }
  return r;
}

int cmd_symbolize(const SymbolizeOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const VariableSet vs = VariableSet::from_string(opts.varset);
    LoadedDataset loaded = load_dataset(opts.input);
    for (const auto& re : loaded.errors) {
      err << "warning: record " << re.id << ": " << re.message << '\n';
    }
    std::vector<NumericProblem> kept;
    std::vector<SymbolicProblem> symbolic;
    std::size_t ambiguous = 0;
    std::size_t sym_errors = 0;
    for (const auto& p : loaded.problems) {
      try {
        SymbolicProblem sp = symbolize(p, vs);
        if (sp.ambiguity_flag) ++ambiguous;
        kept.push_back(p);
        symbolic.push_back(std::move(sp));
      } catch (const Error& e) {
        ++sym_errors;
        err << "warning: record " << p.id << ": symbolization failed: " << e.what()
            << '\n';
      }
    }
    write_symbolic_dataset(opts.output, kept, symbolic);
    out << "symbolized " << kept.size() << " of "
        << (loaded.problems.size() + loaded.errors.size()) << " records (varset "
        << opts.varset << ", " << ambiguous << " ambiguous, "
        << (loaded.errors.size() + sym_errors) << " skipped) -> "
        << opts.output.string() << '\n';
    return (loaded.errors.empty() && sym_errors == 0) ? kExitOk : kExitUserError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const DatasetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

namespace {

std::unique_ptr<Backend> make_backend(const RunCommandOptions& opts) {
  if (opts.backend == "replay") {
    if (opts.fixtures.empty()) {
      throw ConfigError("replay backend requires --fixtures");
    }
    return std::make_unique<ReplayBackend>(FixtureStore::load(opts.fixtures));
  }
  if (opts.backend == "record") {
    if (opts.fixtures.empty()) {
      throw ConfigError("record backend requires --fixtures");
    }
    auto live = std::make_shared<LiveBackend>(opts.endpoint.endpoint);
    FixtureStore store =
        FixtureStore::open_append(opts.fixtures, opts.endpoint.endpoint.model);
    return std::make_unique<RecordBackend>(std::move(live), std::move(store));
  }
  if (opts.backend == "live") {
    return std::make_unique<LiveBackend>(opts.endpoint.endpoint);
  }
  throw ConfigError("unknown backend kind: " + opts.backend);
}

}  // namespace

int cmd_run(const RunCommandOptions& opts, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Backend> backend;
  LoadedDataset loaded;
  DatasetRunOptions ropts;
  try {
    ropts.mode = mode_from_name(opts.mode);
    ropts.style = style_from_name(opts.style);
    VariableSet::from_string(opts.varset);  // validate early
    ropts.varset = opts.varset;
    ropts.runs = opts.runs;
    ropts.subset = opts.subset;
    ropts.seed = opts.seed;
    ropts.parallelism = opts.endpoint.parallelism;
    ropts.strict_replay = opts.strict_replay;
    if (opts.out_records.empty()) throw ConfigError("run requires --out");

    loaded = load_dataset(opts.dataset);
    for (const auto& re : loaded.errors) {
      err << "warning: record " << re.id << ": " << re.message << '\n';
    }
    if (loaded.problems.empty()) throw ConfigError("dataset has no valid problems");
    backend = make_backend(opts);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }

  if (opts.show_progress) {
    const std::size_t total_tasks =
        (opts.subset ? std::min<std::size_t>(*opts.subset, loaded.problems.size())
                     : loaded.problems.size()) *
        static_cast<std::size_t>(std::max(1, opts.runs));
    const std::size_t step = std::max<std::size_t>(1, total_tasks / 10);
    ropts.progress = [&err, step](std::size_t done, std::size_t total) {
      if (done % step == 0 || done == total) {
        err << "progress: " << done << "/" << total << " records\n";
      }
    };
  }

  try {
    DatasetRunResult result = run_dataset(loaded.problems, ropts, *backend);

    RecordsFileMeta meta;
    meta.mode = opts.mode;
    meta.style = opts.style;
    meta.varset = opts.varset;
    meta.runs = opts.runs;
    meta.seed = opts.seed;
    meta.subset = opts.subset;
    meta.backend = opts.backend;
    if ((opts.backend == "live" || opts.backend == "record") &&
        !opts.endpoint.endpoint.model.empty()) {
      meta.backend += ":" + opts.endpoint.endpoint.model;
    }
    meta.dataset = opts.dataset.string();
    meta.problem_count = result.problem_ids.size();
    write_records(opts.out_records, meta, result.records);

    out << "wrote " << result.records.size() << " records ("
        << result.request_count << " requests, " << result.failure_count
        << " failures) -> " << opts.out_records.string() << '\n';
    if (result.failure_count > 0) {
      err << "error: " << result.failure_count << " record(s) failed\n";
      return kExitRuntimeError;
    }
    return loaded.errors.empty() ? kExitOk : kExitUserError;
  } catch (const FixtureMissError& e) {
    err << "error: " << e.what() << '\n';
    err << "hint: re-run with --backend record to fill the fixture store\n";
    return kExitRuntimeError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    RecordsFile rf = read_records(opts.records);
    LoadedDataset loaded = load_dataset(opts.dataset);
    for (const auto& re : loaded.errors) {
      err << "warning: record " << re.id << ": " << re.message << '\n';
    }
    MetricsSummary summary = aggregate(rf.records, loaded.problems);

    SummaryProvenance prov;
    prov.seed = rf.meta.seed;
    prov.records = opts.records.string();
    prov.dataset = rf.meta.dataset;
    prov.backend = rf.meta.backend;
    prov.runs = rf.meta.runs;
    prov.subset = rf.meta.subset;
    write_summary(opts.out_summary, summary, prov);
    if (opts.out_histogram) {
      write_histogram_csv(*opts.out_histogram, similarity_histograms(rf.records));
    }

    out << "scored " << summary.n_records << " records: accuracy "
        << summary.accuracy.numerator << "/" << summary.accuracy.denominator;
    if (summary.alignment.defined()) {
      out << ", alignment " << summary.alignment.numerator << "/"
          << summary.alignment.denominator;
    }
    out << " -> " << opts.out_summary.string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.summaries.empty()) throw ConfigError("report requires at least one summary");
    std::vector<SummaryFile> summaries;
    summaries.reserve(opts.summaries.size());
    for (const auto& path : opts.summaries) summaries.push_back(read_summary(path));
    ReportOutput report = build_report(summaries);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    if (opts.out_text) {
      std::ofstream f(*opts.out_text, std::ios::trunc);
      if (!f) throw Error("cannot write report: " + opts.out_text->string());
      f << report.text;
    } else {
      out << report.text;
    }
    if (opts.out_csv) {
      std::ofstream f(*opts.out_csv, std::ios::trunc);
      if (!f) throw Error("cannot write report CSV: " + opts.out_csv->string());
      f << report.csv;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }
}

int cmd_filter(const FilterCommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    FilterMode mode;
    if (opts.filter_mode == "baseline") {
      mode = FilterMode::Baseline;
    } else if (opts.filter_mode == "extended") {
      mode = FilterMode::Extended;
    } else {
      throw ConfigError("unknown filter mode: " + opts.filter_mode);
    }
    if (opts.kind != "numeric" && opts.kind != "symbolic") {
      throw ConfigError("unknown filter kind: " + opts.kind);
    }
    const VariableSet vs = VariableSet::from_string(opts.varset);

    std::vector<std::string> inputs;
    if (opts.text) {
      inputs.push_back(*opts.text);
    } else if (opts.input) {
      std::ifstream in(*opts.input);
      if (!in) throw ConfigError("cannot open input file: " + opts.input->string());
      std::string line;
      while (std::getline(in, line)) inputs.push_back(line);
    } else {
      throw ConfigError("filter requires --text or --in");
    }

    for (const auto& raw : inputs) {
      FilterOutcome fo = opts.kind == "numeric" ? filter_numeric(raw, mode)
                                                : filter_symbolic(raw, vs, mode);
      json j;
      j["input"] = raw;
      j["cleaned"] = fo.cleaned;
      j["parse_ok"] = fo.parse_ok;
      j["steps"] = fo.applied_steps;
      out << j.dump() << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }
}

}  // namespace symeval
