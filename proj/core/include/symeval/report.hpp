#pragma once

#include <string>
#include <vector>

#include "symeval/serialization.hpp"

namespace symeval {

struct ReportOutput {
  std::string text;  // aligned grid: metric/style rows, mode columns
  std::string csv;   // long form: metric,style,mode,varset,value,numerator,denominator
  std::vector<std::string> warnings;
};

/// Merges per-run summaries into one grid. Rows are accuracy / alignment /
/// bleu / levenshtein crossed with the styles present; columns are the
/// (mode, varset) combinations. Provenance mismatches (mixed seeds or
/// datasets, duplicate cells) become warnings, echoed at the top of `text`.
ReportOutput build_report(const std::vector<SummaryFile>& summaries);

}  // namespace symeval
