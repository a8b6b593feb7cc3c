#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symeval/backend.hpp"
#include "symeval/dataset.hpp"

namespace symeval {

enum class PromptStyle { Vanilla, CoT };
enum class Mode { Numeric, SymbolicRaw, SelfPrompt, SelfPromptAlign, SelfPromptAlignAlways };

std::string_view style_name(PromptStyle s);       // "vanilla" | "cot"
PromptStyle style_from_name(std::string_view s);  // throws ConfigError
std::string_view mode_name(Mode m);               // "numeric" | "symbolic" | "sp" | "sp-ap" | "sp-ap-always"
Mode mode_from_name(std::string_view s);          // throws ConfigError

// The frozen prompt sentences.
std::string_view cot_prompt();             // "Let's think step by step."
std::string_view numeric_extract_prompt();
std::string_view symbolic_extract_prompt();
std::string_view align_prompt();

enum class ExtractKind { Numeric, Symbolic };

/// "Q: {body} {question} A:" with the CoT sentence appended for CoT style.
std::string build_initial_prompt(std::string_view body, std::string_view question,
                                 PromptStyle style);

/// `turn_text` is the previous prompt with its completion appended verbatim.
/// The extraction turn restates the question and adds the extract sentence on
/// a new line: "{turn_text}\n{question} {extract prompt}".
std::string build_extraction_prompt(std::string_view turn_text,
                                    std::string_view question, ExtractKind kind);

/// Self-prompt: the numeric initial turn verbatim, then (optionally) the
/// align sentence on its own line, then the symbolic question as a fresh
/// "Q: ... A:" block.
std::string build_self_prompt(std::string_view numeric_turn_text,
                              std::string_view symbolic_body,
                              std::string_view symbolic_question, PromptStyle style,
                              bool include_align);

enum class TranscriptRole { Prompt, Completion };
enum class TranscriptPhase { Initial, Extraction };

struct TranscriptEntry {
  TranscriptRole role = TranscriptRole::Prompt;
  TranscriptPhase phase = TranscriptPhase::Initial;
  std::string text;
};

// One request/response exchange sequence, e.g. the numeric side of a run.
struct Transcript {
  std::string label;  // "numeric" | "symbolic" | "symbolic_retry"
  std::vector<TranscriptEntry> entries;

  void add(TranscriptRole role, TranscriptPhase phase, std::string text);
  // Empty string when the phase is absent.
  std::string initial_completion() const;
  std::string extraction_completion() const;
  std::size_t request_count() const;
};

struct EvalRecord {
  std::string problem_id;
  int run_index = 0;
  Mode mode = Mode::Numeric;
  PromptStyle style = PromptStyle::Vanilla;
  std::string varset;  // e.g. "wxyz"

  std::string numeric_answer_filtered;
  std::string symbolic_answer_filtered;
  bool numeric_correct = false;
  bool symbolic_correct = false;
  bool aligned = false;
  bool aligned_defined = false;  // only self-prompt modes produce both answers
  bool align_prompt_used = false;
  double bleu = 0.0;
  double lev_sim = 0.0;
  bool similarity_defined = false;

  std::vector<Transcript> transcripts;
  std::string error;  // backend failure message; empty on success

  std::size_t request_count() const;
};

inline constexpr int kMaxTokens = 256;
inline constexpr double kTemperature = 0.0;

struct ProblemRunOptions {
  Mode mode = Mode::Numeric;
  PromptStyle style = PromptStyle::CoT;
  int run_index = 0;
  std::uint64_t seed = 0;  // seeds the randomized equivalence check
  // When true, backend failures become record.error instead of propagating.
  bool capture_errors = true;
  // Fixture misses abort even when capture_errors is set (strict replay).
  bool propagate_fixture_miss = false;
};

/// Runs one problem through the mode's phases; see the mode table in the
/// README. `sp` must be derived from `p`.
EvalRecord run_problem(const NumericProblem& p, const SymbolicProblem& sp,
                       const ProblemRunOptions& opts, Backend& backend);

EvalRecord run_problem(const NumericProblem& p, const SymbolicProblem& sp, Mode mode,
                       PromptStyle style, Backend& backend, int run_index,
                       std::uint64_t seed);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct DatasetRunOptions {
  Mode mode = Mode::Numeric;
  PromptStyle style = PromptStyle::CoT;
  std::string varset = "wxyz";
  int runs = 5;
  std::optional<std::size_t> subset;  // seeded sample; unset = all problems
  std::uint64_t seed = 0;
  int parallelism = 4;
  bool strict_replay = true;  // abort the run on a fixture miss
  ProgressFn progress;
};

struct DatasetRunResult {
  std::vector<EvalRecord> records;       // canonical (problem, run) order
  std::vector<std::string> problem_ids;  // the selected subset, in order
  std::size_t request_count = 0;
  std::size_t failure_count = 0;
};

/// Symbolizes each selected problem and fans (problem x run) out to a bounded
/// worker pool. Deterministic for a fixed seed and deterministic backend:
/// subset choice, per-record seeds and output order do not depend on thread
/// scheduling.
DatasetRunResult run_dataset(const std::vector<NumericProblem>& problems,
                             const DatasetRunOptions& opts, Backend& backend);

/// Stable per-record seed derivation (splitmix64 over the operands).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// Seeded order-preserving sample of k indices out of n (Fisher-Yates with an
/// explicit generator so the choice is platform-stable).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace symeval
