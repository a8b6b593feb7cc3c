#include "symeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "symeval/errors.hpp"
#include "symeval/pipeline.hpp"

namespace symeval {

bool numeric_correct(std::string_view filtered, const Rational& gold) {
  auto parsed = parse_decimal(filtered);
  if (!parsed) return false;
  return answers_match(*parsed, gold);
}

bool symbolic_correct(std::string_view filtered, std::string_view gold_expr,
                      std::uint64_t seed) {
  ExprPtr candidate = try_parse_expr(filtered);
  ExprPtr gold = try_parse_expr(gold_expr);
  if (!candidate || !gold) return false;
  EquivalenceOptions opts;
  opts.seed = seed;
  try {
    return equivalent(*candidate, *gold, opts);
  } catch (const IndeterminateEquivalenceError&) {
    return false;
  }
}

bool alignment(std::string_view sym_filtered, std::string_view num_filtered,
               const Bindings& bindings) {
  ExprPtr expr = try_parse_expr(sym_filtered);
  if (!expr) return false;
  auto numeric = parse_decimal(num_filtered);
  if (!numeric) return false;
  try {
    Rational value = evaluate(*expr, bindings);
    return within_relative(value, *numeric);
  } catch (const EvalError&) {
    return false;
  }
}

namespace {

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join_ngram(const std::vector<std::string>& toks, std::size_t start,
                       std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) key.push_back('\x1f');  // unit separator keeps tokens distinct
    key += toks[start + i];
  }
  return key;
}

}  // namespace

double bleu_avg(std::string_view reference, std::string_view hypothesis) {
  const auto ref = whitespace_tokens(reference);
  const auto hyp = whitespace_tokens(hypothesis);
  const std::size_t c = hyp.size();
  const std::size_t r = ref.size();
  if (c == 0) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    std::unordered_map<std::string, std::size_t> ref_counts;
    if (r >= n) {
      for (std::size_t i = 0; i + n <= r; ++i) ++ref_counts[join_ngram(ref, i, n)];
    }
    std::unordered_map<std::string, std::size_t> hyp_counts;
    std::size_t total = 0;
    if (c >= n) {
      for (std::size_t i = 0; i + n <= c; ++i) {
        ++hyp_counts[join_ngram(hyp, i, n)];
        ++total;
      }
    }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    // No smoothing: zero overlap at any order zeroes the score. The
    // denominator guard keeps too-short hypotheses (no n-grams) at 0 too.
    if (clipped == 0) return 0.0;
    const double p = static_cast<double>(clipped) /
                     static_cast<double>(std::max<std::size_t>(1, total));
    log_sum += std::log(p) / 3.0;
  }
  double bp = 1.0;
  if (c < r) {
    bp = std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  }
  return bp * std::exp(log_sum);
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0) return n;
  if (n == 0) return m;
  std::vector<std::size_t> prev(n + 1);
  std::vector<std::size_t> cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  const std::size_t maxlen = std::max(a.size(), b.size());
  if (maxlen == 0) return 1.0;
  const std::size_t dist = levenshtein_distance(a, b);
  return static_cast<double>(maxlen - dist) / static_cast<double>(maxlen);
}

namespace {

bool primary_correct(const EvalRecord& rec) {
  return rec.mode == Mode::Numeric ? rec.numeric_correct : rec.symbolic_correct;
}

}  // namespace

MetricsSummary aggregate(const std::vector<EvalRecord>& records,
                         const std::vector<NumericProblem>& dataset) {
  if (records.empty()) throw Error("aggregate requires at least one record");

  std::unordered_map<std::string, OperationType> type_of;
  type_of.reserve(dataset.size());
  for (const auto& p : dataset) type_of[p.id] = p.type_tag;

  MetricsSummary s;
  s.mode = std::string(mode_name(records.front().mode));
  s.style = std::string(style_name(records.front().style));
  s.varset = records.front().varset;
  s.n_records = records.size();

  for (const auto& rec : records) {
    if (std::string_view(mode_name(rec.mode)) != s.mode ||
        std::string_view(style_name(rec.style)) != s.style || rec.varset != s.varset) {
      throw Error("aggregate requires records from a single mode/style/varset");
    }
    auto it = type_of.find(rec.problem_id);
    if (it == type_of.end()) {
      throw Error("record references unknown problem id: " + rec.problem_id);
    }
    const bool correct = primary_correct(rec);

    ++s.accuracy.denominator;
    if (correct) ++s.accuracy.numerator;

    Ratio& per_type = s.per_type[std::string(operation_type_name(it->second))];
    ++per_type.denominator;
    if (correct) ++per_type.numerator;

    if (rec.aligned_defined) {
      ++s.alignment.denominator;
      if (rec.aligned) ++s.alignment.numerator;
      Ratio& cond = rec.numeric_correct ? s.alignment_given_numeric_correct
                                        : s.alignment_given_numeric_wrong;
      ++cond.denominator;
      if (rec.aligned) ++cond.numerator;
    }
    if (rec.similarity_defined) {
      s.bleu_mean.sum += 100.0 * rec.bleu;
      ++s.bleu_mean.count;
      s.lev_sim_mean.sum += 100.0 * rec.lev_sim;
      ++s.lev_sim_mean.count;
    }
  }
  return s;
}

std::vector<HistogramBin> similarity_histograms(const std::vector<EvalRecord>& records) {
  constexpr std::size_t kBins = 20;
  std::vector<std::size_t> bleu_bins(kBins, 0);
  std::vector<std::size_t> lev_bins(kBins, 0);
  auto bin_of = [](double v) {
    auto i = static_cast<long>(std::floor(v * kBins));
    return static_cast<std::size_t>(std::clamp<long>(i, 0, kBins - 1));
  };
  for (const auto& rec : records) {
    if (!rec.similarity_defined) continue;
    ++bleu_bins[bin_of(rec.bleu)];
    ++lev_bins[bin_of(rec.lev_sim)];
  }
  std::vector<HistogramBin> out;
  out.reserve(2 * kBins);
  for (std::size_t i = 0; i < kBins; ++i) {
    out.push_back({"bleu", static_cast<double>(i) / kBins,
                   static_cast<double>(i + 1) / kBins, bleu_bins[i]});
  }
  for (std::size_t i = 0; i < kBins; ++i) {
    out.push_back({"lev_sim", static_cast<double>(i) / kBins,
                   static_cast<double>(i + 1) / kBins, lev_bins[i]});
  }
  return out;
}

}  // namespace symeval
