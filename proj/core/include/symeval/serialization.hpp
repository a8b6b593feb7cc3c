#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symeval/metrics.hpp"
#include "symeval/pipeline.hpp"

namespace symeval {

inline constexpr int kSchemaVersion = 1;

// Provenance header written as the first line of a records JSONL file.
struct RecordsFileMeta {
  std::string mode;
  std::string style;
  std::string varset;
  int runs = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> subset;
  std::string backend;
  std::string dataset;  // path as given on the command line
  std::size_t problem_count = 0;
};

struct RecordsFile {
  RecordsFileMeta meta;
  std::vector<EvalRecord> records;
};

nlohmann::json record_to_json(const EvalRecord& rec);
EvalRecord record_from_json(const nlohmann::json& j);

nlohmann::json records_meta_to_json(const RecordsFileMeta& meta);
RecordsFileMeta records_meta_from_json(const nlohmann::json& j);

/// JSONL: meta header line, then one record per line. Deterministic bytes for
/// deterministic inputs (sorted keys, no timestamps).
void write_records(const std::filesystem::path& path, const RecordsFileMeta& meta,
                   const std::vector<EvalRecord>& records);
RecordsFile read_records(const std::filesystem::path& path);

// Where a summary came from, for provenance checks when merging reports.
struct SummaryProvenance {
  std::optional<std::uint64_t> seed;
  std::string records;  // records file path
  std::string dataset;
  std::string backend;
  int runs = 0;
  std::optional<std::size_t> subset;
};

struct SummaryFile {
  MetricsSummary summary;
  SummaryProvenance provenance;
};

nlohmann::json summary_to_json(const MetricsSummary& s, const SummaryProvenance& prov);
SummaryFile summary_from_json(const nlohmann::json& j);

void write_summary(const std::filesystem::path& path, const MetricsSummary& s,
                   const SummaryProvenance& prov);
SummaryFile read_summary(const std::filesystem::path& path);

/// CSV with header "metric,bin_lo,bin_hi,count".
void write_histogram_csv(const std::filesystem::path& path,
                         const std::vector<HistogramBin>& bins);

/// Writes the symbolized dataset as a JSON array; each element carries the
/// source record plus the symbolic body/question/equation, the variable
/// bindings and the ambiguity flag.
void write_symbolic_dataset(const std::filesystem::path& path,
                            const std::vector<NumericProblem>& problems,
                            const std::vector<SymbolicProblem>& symbolic);

}  // namespace symeval
