#include "symeval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "symeval/errors.hpp"
#include "symeval/filtering.hpp"
#include "symeval/metrics.hpp"

namespace symeval {

std::string_view style_name(PromptStyle s) {
  return s == PromptStyle::Vanilla ? "vanilla" : "cot";
}

PromptStyle style_from_name(std::string_view s) {
  if (s == "vanilla") return PromptStyle::Vanilla;
  if (s == "cot") return PromptStyle::CoT;
  throw ConfigError("unknown prompt style: " + std::string(s));
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Numeric: return "numeric";
    case Mode::SymbolicRaw: return "symbolic";
    case Mode::SelfPrompt: return "sp";
    case Mode::SelfPromptAlign: return "sp-ap";
    case Mode::SelfPromptAlignAlways: return "sp-ap-always";
  }
  throw ConfigError("invalid mode value");
}

Mode mode_from_name(std::string_view s) {
  if (s == "numeric") return Mode::Numeric;
  if (s == "symbolic") return Mode::SymbolicRaw;
  if (s == "sp") return Mode::SelfPrompt;
  if (s == "sp-ap") return Mode::SelfPromptAlign;
  if (s == "sp-ap-always") return Mode::SelfPromptAlignAlways;
  throw ConfigError("unknown mode: " + std::string(s));
}

std::string_view cot_prompt() { return "Let's think step by step."; }

std::string_view numeric_extract_prompt() {
  return "The final answer (only the number) is:";
}

std::string_view symbolic_extract_prompt() {
  return "The final answer (only the expression in terms of given variables) is:";
}

std::string_view align_prompt() {
  return "Copy the above numeric response word to word but replace numbers with the "
         "right symbolic expression.";
}

std::string build_initial_prompt(std::string_view body, std::string_view question,
                                 PromptStyle style) {
  std::string prompt;
  prompt.reserve(body.size() + question.size() + 40);
  prompt.append("Q: ").append(body).append(" ").append(question).append(" A:");
  if (style == PromptStyle::CoT) prompt.append(" ").append(cot_prompt());
  return prompt;
}

std::string build_extraction_prompt(std::string_view turn_text,
                                    std::string_view question, ExtractKind kind) {
  std::string_view extract =
      kind == ExtractKind::Numeric ? numeric_extract_prompt() : symbolic_extract_prompt();
  std::string prompt;
  prompt.reserve(turn_text.size() + question.size() + extract.size() + 2);
  prompt.append(turn_text).append("\n").append(question).append(" ").append(extract);
  return prompt;
}

std::string build_self_prompt(std::string_view numeric_turn_text,
                              std::string_view symbolic_body,
                              std::string_view symbolic_question, PromptStyle style,
                              bool include_align) {
  std::string prompt;
  prompt.append(numeric_turn_text).append("\n");
  if (include_align) prompt.append(align_prompt()).append("\n");
  prompt.append(build_initial_prompt(symbolic_body, symbolic_question, style));
  return prompt;
}

void Transcript::add(TranscriptRole role, TranscriptPhase phase, std::string text) {
  entries.push_back({role, phase, std::move(text)});
}

namespace {

std::string completion_for(const Transcript& t, TranscriptPhase phase) {
  for (const auto& e : t.entries) {
    if (e.role == TranscriptRole::Completion && e.phase == phase) return e.text;
  }
  return "";
}

}  // namespace

std::string Transcript::initial_completion() const {
  return completion_for(*this, TranscriptPhase::Initial);
}

std::string Transcript::extraction_completion() const {
  return completion_for(*this, TranscriptPhase::Extraction);
}

std::size_t Transcript::request_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.role == TranscriptRole::Completion) ++n;
  }
  return n;
}

std::size_t EvalRecord::request_count() const {
  std::size_t n = 0;
  for (const auto& t : transcripts) n += t.request_count();
  return n;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Phase {
  Transcript transcript;
  std::string initial_completion;
  std::string extraction_completion;
};

std::string ask(Backend& backend, const std::string& prompt) {
  CompletionRequest req;
  req.prompt = prompt;
  req.max_tokens = kMaxTokens;
  req.temperature = kTemperature;
  return backend.complete(req).text;
}

// One initial-then-extraction exchange; the extraction prompt restates the
// question with the kind's extract sentence.
Phase run_phase(Backend& backend, const std::string& initial_prompt,
                const std::string& question, ExtractKind kind,
                const std::string& label) {
  Phase ph;
  ph.transcript.label = label;
  ph.initial_completion = ask(backend, initial_prompt);
  ph.transcript.add(TranscriptRole::Prompt, TranscriptPhase::Initial, initial_prompt);
  ph.transcript.add(TranscriptRole::Completion, TranscriptPhase::Initial,
                    ph.initial_completion);
  const std::string turn_text = initial_prompt + ph.initial_completion;
  const std::string extract_prompt = build_extraction_prompt(turn_text, question, kind);
  ph.extraction_completion = ask(backend, extract_prompt);
  ph.transcript.add(TranscriptRole::Prompt, TranscriptPhase::Extraction, extract_prompt);
  ph.transcript.add(TranscriptRole::Completion, TranscriptPhase::Extraction,
                    ph.extraction_completion);
  return ph;
}

void execute_phases(const NumericProblem& p, const SymbolicProblem& sp,
                    const ProblemRunOptions& opts, Backend& backend, EvalRecord& rec) {
  const Mode mode = opts.mode;
  const PromptStyle style = opts.style;

  if (mode == Mode::SymbolicRaw) {
    const std::string sym_body = sp.symbolic_body();
    const std::string sym_question = sp.symbolic_question();
    Phase ph = run_phase(backend, build_initial_prompt(sym_body, sym_question, style),
                         sym_question, ExtractKind::Symbolic, "symbolic");
    rec.transcripts.push_back(std::move(ph.transcript));
    FilterOutcome fo = filter_symbolic(ph.extraction_completion, sp.varset);
    rec.symbolic_answer_filtered = fo.cleaned;
    rec.symbolic_correct = symbolic_correct(fo.cleaned, sp.symbolic_equation, opts.seed);
    return;
  }

  // Every other mode starts with the numeric phases.
  const std::string numeric_initial = build_initial_prompt(p.body, p.question, style);
  Phase nph = run_phase(backend, numeric_initial, p.question, ExtractKind::Numeric,
                        "numeric");
  rec.transcripts.push_back(nph.transcript);
  FilterOutcome nfo = filter_numeric(nph.extraction_completion);
  rec.numeric_answer_filtered = nfo.cleaned;
  rec.numeric_correct = numeric_correct(nfo.cleaned, p.answer);
  if (mode == Mode::Numeric) return;

  const std::string numeric_turn = numeric_initial + nph.initial_completion;
  const std::string sym_body = sp.symbolic_body();
  const std::string sym_question = sp.symbolic_question();
  const Bindings bindings = sp.binding_map();

  const bool align_from_start = mode == Mode::SelfPromptAlignAlways;
  Phase sph = run_phase(
      backend,
      build_self_prompt(numeric_turn, sym_body, sym_question, style, align_from_start),
      sym_question, ExtractKind::Symbolic, "symbolic");
  rec.transcripts.push_back(std::move(sph.transcript));
  rec.align_prompt_used = align_from_start;

  FilterOutcome sfo = filter_symbolic(sph.extraction_completion, sp.varset);
  rec.symbolic_answer_filtered = sfo.cleaned;
  rec.symbolic_correct = symbolic_correct(sfo.cleaned, sp.symbolic_equation, opts.seed);
  rec.aligned_defined = true;
  rec.aligned = alignment(sfo.cleaned, rec.numeric_answer_filtered, bindings);
  std::string symbolic_initial = sph.initial_completion;

  if (mode == Mode::SelfPromptAlign && !rec.aligned) {
    // Re-run the symbolic phases with the align sentence and keep the retry's
    // outputs whether or not they align.
    Phase rph = run_phase(
        backend, build_self_prompt(numeric_turn, sym_body, sym_question, style, true),
        sym_question, ExtractKind::Symbolic, "symbolic_retry");
    rec.transcripts.push_back(std::move(rph.transcript));
    rec.align_prompt_used = true;
    FilterOutcome rfo = filter_symbolic(rph.extraction_completion, sp.varset);
    rec.symbolic_answer_filtered = rfo.cleaned;
    rec.symbolic_correct =
        symbolic_correct(rfo.cleaned, sp.symbolic_equation, derive_seed(opts.seed, 1, 0));
    rec.aligned = alignment(rfo.cleaned, rec.numeric_answer_filtered, bindings);
    symbolic_initial = rph.initial_completion;
  }

  rec.bleu = bleu_avg(nph.initial_completion, symbolic_initial);
  rec.lev_sim = levenshtein_similarity(nph.initial_completion, symbolic_initial);
  rec.similarity_defined = true;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

EvalRecord run_problem(const NumericProblem& p, const SymbolicProblem& sp,
                       const ProblemRunOptions& opts, Backend& backend) {
  EvalRecord rec;
  rec.problem_id = p.id;
  rec.run_index = opts.run_index;
  rec.mode = opts.mode;
  rec.style = opts.style;
  rec.varset = sp.varset.letters();
  try {
    execute_phases(p, sp, opts, backend, rec);
  } catch (const FixtureMissError& e) {
    if (opts.propagate_fixture_miss || !opts.capture_errors) throw;
    rec.error = e.what();
  } catch (const BackendError& e) {
    if (!opts.capture_errors) throw;
    rec.error = e.what();
  }
  return rec;
}

EvalRecord run_problem(const NumericProblem& p, const SymbolicProblem& sp, Mode mode,
                       PromptStyle style, Backend& backend, int run_index,
                       std::uint64_t seed) {
  ProblemRunOptions opts;
  opts.mode = mode;
  opts.style = style;
  opts.run_index = run_index;
  opts.seed = seed;
  return run_problem(p, sp, opts, backend);
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k >= n) return all;
  // Explicit Fisher-Yates: std::shuffle's draw sequence is
  // implementation-defined, and subset choice must be platform-stable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

DatasetRunResult run_dataset(const std::vector<NumericProblem>& problems,
                             const DatasetRunOptions& opts, Backend& backend) {
  if (opts.runs < 1) throw ConfigError("runs must be >= 1");
  const VariableSet vs = VariableSet::from_string(opts.varset);

  std::vector<std::size_t> selected =
      opts.subset ? sample_indices(problems.size(), *opts.subset, opts.seed)
                  : sample_indices(problems.size(), problems.size(), opts.seed);

  DatasetRunResult result;
  result.problem_ids.reserve(selected.size());

  // Symbolize once per problem. Numeric mode does not need the symbolic form,
  // so a symbolization failure only fails symbolic-mode records.
  struct Prepared {
    const NumericProblem* problem;
    SymbolicProblem sym;
    std::string sym_error;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(selected.size());
  for (std::size_t idx : selected) {
    const NumericProblem& p = problems[idx];
    result.problem_ids.push_back(p.id);
    Prepared prep{&p, SymbolicProblem{}, ""};
    prep.sym.source_id = p.id;
    prep.sym.varset = vs;
    if (opts.mode != Mode::Numeric) {
      try {
        prep.sym = symbolize(p, vs);
      } catch (const Error& e) {
        prep.sym_error = e.what();
      }
    }
    prepared.push_back(std::move(prep));
  }

  struct Task {
    std::size_t prep_index;
    std::size_t dataset_index;
    int run;
  };
  std::vector<Task> tasks;
  tasks.reserve(prepared.size() * static_cast<std::size_t>(opts.runs));
  for (std::size_t s = 0; s < prepared.size(); ++s) {
    for (int r = 0; r < opts.runs; ++r) {
      tasks.push_back({s, selected[s], r});
    }
  }

  result.records.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> cancelled{false};
  std::mutex report_mu;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (!cancelled.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const Prepared& prep = prepared[task.prep_index];
      ProblemRunOptions popts;
      popts.mode = opts.mode;
      popts.style = opts.style;
      popts.run_index = task.run;
      popts.seed = derive_seed(opts.seed, task.dataset_index,
                               static_cast<std::uint64_t>(task.run));
      popts.capture_errors = true;
      popts.propagate_fixture_miss = opts.strict_replay;
      try {
        if (!prep.sym_error.empty()) {
          EvalRecord rec;
          rec.problem_id = prep.problem->id;
          rec.run_index = task.run;
          rec.mode = opts.mode;
          rec.style = opts.style;
          rec.varset = opts.varset;
          rec.error = "symbolization failed: " + prep.sym_error;
          result.records[i] = std::move(rec);
        } else {
          result.records[i] = run_problem(*prep.problem, prep.sym, popts, backend);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(report_mu);
        if (!first_error) first_error = std::current_exception();
        cancelled.store(true, std::memory_order_relaxed);
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(report_mu);
        opts.progress(finished, tasks.size());
      }
    }
  };

  const std::size_t n_workers = std::max(
      std::size_t{1}, std::min<std::size_t>(static_cast<std::size_t>(
                                                std::max(1, opts.parallelism)),
                                            std::max<std::size_t>(1, tasks.size())));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& rec : result.records) {
    result.request_count += rec.request_count();
    if (!rec.error.empty()) ++result.failure_count;
  }
  return result;
}

}  // namespace symeval
