#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symeval/dataset.hpp"
#include "symeval/expr.hpp"

namespace symeval {

struct EvalRecord;  // pipeline.hpp

/// Numeric answer check: parse `filtered` as a decimal; exact match when the
/// gold answer is an integer, 1e-6 relative otherwise. Unparseable -> false.
bool numeric_correct(std::string_view filtered, const Rational& gold);

/// Symbolic answer check via randomized equivalence against the ground-truth
/// expression. Parse failure on either side -> false.
bool symbolic_correct(std::string_view filtered, std::string_view gold_expr,
                      std::uint64_t seed);

/// Whether the symbolic expression, evaluated at the problem's original
/// numbers, reproduces the model's own numeric answer (1e-6 relative).
bool alignment(std::string_view sym_filtered, std::string_view num_filtered,
               const Bindings& bindings);

/// Average of 1-3-gram BLEU: clipped precisions with uniform 1/3 weights,
/// brevity penalty, no smoothing. Zero overlap at any order gives 0.
double bleu_avg(std::string_view reference, std::string_view hypothesis);

/// (maxlen - edit_distance) / maxlen over characters; 1.0 when both empty.
double levenshtein_similarity(std::string_view a, std::string_view b);

std::size_t levenshtein_distance(std::string_view a, std::string_view b);

// A percentage with its counts, so every rate carries its denominator.
struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  double percent() const {
    return denominator == 0 ? 0.0 : 100.0 * static_cast<double>(numerator) /
                                        static_cast<double>(denominator);
  }
  bool defined() const { return denominator > 0; }
};

struct MeanStat {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
  bool defined() const { return count > 0; }
};

struct MetricsSummary {
  std::string mode;
  std::string style;
  std::string varset;
  std::size_t n_records = 0;
  Ratio accuracy;                 // mode-primary answer correct
  Ratio alignment;                // over records where alignment is defined
  MeanStat bleu_mean;             // percent scale
  MeanStat lev_sim_mean;          // percent scale
  std::map<std::string, Ratio> per_type;
  Ratio alignment_given_numeric_correct;
  Ratio alignment_given_numeric_wrong;
};

/// Aggregates a homogeneous record list (one mode/style/varset) into a
/// summary; `dataset` supplies the per-problem operation tags.
MetricsSummary aggregate(const std::vector<EvalRecord>& records,
                         const std::vector<NumericProblem>& dataset);

struct HistogramBin {
  std::string metric;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// 20-bin histograms over [0,1] for the per-record bleu and lev_sim values.
std::vector<HistogramBin> similarity_histograms(const std::vector<EvalRecord>& records);

}  // namespace symeval
