#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "symeval/metrics.hpp"
#include "symeval/pipeline.hpp"

using namespace symeval;

TEST_CASE("numeric_correct parses then compares against the gold answer") {
  CHECK(numeric_correct("11", Rational(11)));
  CHECK(numeric_correct("11.0", Rational(11)));
  CHECK(numeric_correct("1625", Rational(1625)));
  CHECK_FALSE(numeric_correct("54", Rational(48)));
  CHECK_FALSE(numeric_correct("", Rational(1)));
  CHECK_FALSE(numeric_correct("eleven", Rational(11)));
  CHECK(numeric_correct("2.5", Rational(5, 2)));
  CHECK(numeric_correct("2.500001", Rational(5, 2)));  // 1e-6 relative
  CHECK_FALSE(numeric_correct("2.51", Rational(5, 2)));
  CHECK_FALSE(numeric_correct("2.000001", Rational(2)));  // integer gold is exact
}

TEST_CASE("symbolic_correct is equivalence against the gold expression") {
  CHECK(symbolic_correct("w-x-y", "w-x-y", 1));
  CHECK(symbolic_correct("x*w", "w*x", 1));
  CHECK(symbolic_correct("(w)/(x)", "w/x", 1));
  CHECK_FALSE(symbolic_correct("w+w", "w+x", 1));
  CHECK_FALSE(symbolic_correct("w*x+6", "w*x", 1));
  CHECK_FALSE(symbolic_correct("x-w", "w-x", 1));
  CHECK_FALSE(symbolic_correct("", "w+x", 1));
  CHECK_FALSE(symbolic_correct("w+", "w+x", 1));
  // Indeterminate comparisons count as wrong rather than crashing the run.
  CHECK_FALSE(symbolic_correct("w/(x-x)", "w", 1));
}

TEST_CASE("alignment evaluates the symbolic answer at the original numbers") {
  const Bindings b47 = {{"w", Rational(4)}, {"x", Rational(7)}};
  CHECK(alignment("w+x", "11", b47));
  CHECK_FALSE(alignment("w+w", "11", b47));
  // Aligned-but-wrong: the expression reproduces the model's wrong number.
  const Bindings b68 = {{"w", Rational(6)}, {"x", Rational(8)}};
  CHECK(alignment("w*x+6", "54", b68));
  CHECK_FALSE(alignment("w*x+6", "48", b68));
  CHECK(alignment("w/x", "2.5", {{"w", Rational(10)}, {"x", Rational(4)}}));
  CHECK_FALSE(alignment("", "11", b47));
  CHECK_FALSE(alignment("w+x", "", b47));
  CHECK_FALSE(alignment("w+x", "eleven", b47));
  CHECK_FALSE(alignment("w/(x-x)", "11", b47));   // division by zero
  CHECK_FALSE(alignment("w+x+q", "11", b47));     // unbound variable
}

TEST_CASE("bleu_avg known values") {
  CHECK(bleu_avg("the cat sat on the mat", "the cat sat on the mat") == doctest::Approx(1.0));
  CHECK(bleu_avg("a b c", "x y z") == doctest::Approx(0.0));
  // Too short for any trigram: zero by the no-smoothing rule.
  CHECK(bleu_avg("the cat sat", "the cat") == doctest::Approx(0.0));
  CHECK(bleu_avg("anything", "") == doctest::Approx(0.0));
  CHECK(bleu_avg("", "anything") == doctest::Approx(0.0));
  // One substitution in seven tokens: p1=6/7, p2=4/6, p3=2/5, BP=1.
  const double expected = std::cbrt((6.0 / 7.0) * (4.0 / 6.0) * (2.0 / 5.0));
  CHECK(bleu_avg("a b c d e f g", "a b c x e f g") == doctest::Approx(expected).epsilon(1e-12));
  // Brevity penalty when the hypothesis is shorter.
  const double bp = std::exp(1.0 - 5.0 / 4.0);
  CHECK(bleu_avg("a b c d e", "a b c d") ==
        doctest::Approx(bp * std::cbrt((4.0 / 4.0) * (3.0 / 3.0) * (2.0 / 2.0))));
  // Clipping: repeated hypothesis tokens cannot overcount the reference.
  CHECK(bleu_avg("a b a", "a a a") ==
        doctest::Approx(0.0));  // bigram "a a" absent in reference
}

TEST_CASE("bleu_avg agrees with the product-form oracle") {
  using symeval::testing::bleu_avg_oracle;
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"the cat sat on the mat", "the cat sat on the mat"},
      {"the cat sat on the mat", "a cat sat on a mat"},
      {"w + x roses in total", "5 + 7 roses in total"},
      {"a b c d e f g", "a b c x e f g"},
      {"a b c d e", "a b c d"},
      {"one two three four", "one two three four five six"},
      {"x x x x", "x x"},
      {"p q r s t", "p q r s t"},
      {"", ""},
      {"solo", "solo"},
  };
  for (const auto& [ref, hyp] : pairs) {
    CAPTURE(ref);
    CAPTURE(hyp);
    CHECK(bleu_avg(ref, hyp) == doctest::Approx(bleu_avg_oracle(ref, hyp)).epsilon(1e-12));
  }
}

TEST_CASE("bleu_avg fuzz against the oracle stays bounded and equal") {
  std::mt19937_64 rng(404);
  const char* words[] = {"a", "b", "c", "ab", "ba"};
  for (int iter = 0; iter < 1000; ++iter) {
    auto make = [&]() {
      std::string s;
      const std::size_t n = rng() % 9;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += words[rng() % 5];
      }
      return s;
    };
    const std::string ref = make();
    const std::string hyp = make();
    const double v = bleu_avg(ref, hyp);
    CAPTURE(ref);
    CAPTURE(hyp);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v == doctest::Approx(symeval::testing::bleu_avg_oracle(ref, hyp)).epsilon(1e-9));
  }
}

TEST_CASE("levenshtein distance and similarity") {
  CHECK(levenshtein_distance("kitten", "sitting") == 3);
  CHECK(levenshtein_similarity("kitten", "sitting") == doctest::Approx(4.0 / 7.0));
  CHECK(levenshtein_similarity("same", "same") == doctest::Approx(1.0));
  CHECK(levenshtein_similarity("", "") == doctest::Approx(1.0));
  CHECK(levenshtein_similarity("abc", "") == doctest::Approx(0.0));
  CHECK(levenshtein_distance("flaw", "lawn") == 2);
}

TEST_CASE("levenshtein fuzz: bounds, symmetry, oracle agreement") {
  std::mt19937_64 rng(808);
  auto make = [&]() {
    std::string s;
    const std::size_t n = rng() % 16;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('a' + rng() % 3);
    return s;
  };
  for (int iter = 0; iter < 1000; ++iter) {
    const std::string a = make();
    const std::string b = make();
    const std::size_t d = levenshtein_distance(a, b);
    CHECK(d == levenshtein_distance(b, a));
    CHECK(d == symeval::testing::levenshtein_oracle(a, b));
    const double sim = levenshtein_similarity(a, b);
    CHECK(sim >= 0.0);
    CHECK(sim <= 1.0);
    if (a == b) CHECK(sim == doctest::Approx(1.0));
  }
}

namespace {

EvalRecord rec_of(const char* id, Mode mode, bool num_ok, bool sym_ok, bool aligned,
                  bool aligned_defined, double bleu = -1.0) {
  EvalRecord r;
  r.problem_id = id;
  r.mode = mode;
  r.style = PromptStyle::CoT;
  r.varset = "wxyz";
  r.numeric_correct = num_ok;
  r.symbolic_correct = sym_ok;
  r.aligned = aligned;
  r.aligned_defined = aligned_defined;
  if (bleu >= 0.0) {
    r.bleu = bleu;
    r.lev_sim = bleu / 2.0;
    r.similarity_defined = true;
  }
  return r;
}

std::vector<NumericProblem> two_problem_dataset() {
  std::vector<NumericProblem> ps(2);
  ps[0].id = "add1";
  ps[0].type_tag = OperationType::Addition;
  ps[1].id = "sub1";
  ps[1].type_tag = OperationType::Subtraction;
  return ps;
}

}  // namespace

TEST_CASE("aggregate computes accuracy, alignment, conditionals and means") {
  const auto ds = two_problem_dataset();
  std::vector<EvalRecord> records = {
      rec_of("add1", Mode::SelfPrompt, true, true, true, true, 0.8),
      rec_of("add1", Mode::SelfPrompt, true, false, false, true, 0.4),
      rec_of("sub1", Mode::SelfPrompt, false, true, false, true, 0.6),
      rec_of("sub1", Mode::SelfPrompt, false, false, true, true),  // no similarity
      rec_of("sub1", Mode::SelfPrompt, true, true, true, true, 0.2),
  };
  MetricsSummary s = aggregate(records, ds);
  CHECK(s.mode == "sp");
  CHECK(s.style == "cot");
  CHECK(s.varset == "wxyz");
  CHECK(s.n_records == 5);
  CHECK(s.accuracy.numerator == 3);  // symbolic_correct is primary for sp
  CHECK(s.accuracy.denominator == 5);
  CHECK(s.alignment.numerator == 3);
  CHECK(s.alignment.denominator == 5);
  // Conditionals split on the record's own numeric correctness.
  CHECK(s.alignment_given_numeric_correct.numerator == 2);
  CHECK(s.alignment_given_numeric_correct.denominator == 3);
  CHECK(s.alignment_given_numeric_wrong.numerator == 1);
  CHECK(s.alignment_given_numeric_wrong.denominator == 2);
  // Per-type buckets count the same primary metric as overall accuracy
  // (symbolic_correct under sp), so they sum to the overall numerator.
  CHECK(s.per_type.at("Addition").numerator == 1);
  CHECK(s.per_type.at("Addition").denominator == 2);
  CHECK(s.per_type.at("Subtraction").numerator == 2);
  CHECK(s.per_type.at("Subtraction").denominator == 3);
  // Means are percentages over the records that define similarity.
  CHECK(s.bleu_mean.count == 4);
  CHECK(s.bleu_mean.mean() == doctest::Approx(100.0 * (0.8 + 0.4 + 0.6 + 0.2) / 4));
  CHECK(s.lev_sim_mean.mean() == doctest::Approx(50.0 * (0.8 + 0.4 + 0.6 + 0.2) / 4));
  CHECK(s.accuracy.percent() == doctest::Approx(60.0));
}

TEST_CASE("aggregate: numeric mode scores the numeric answer, alignment undefined") {
  const auto ds = two_problem_dataset();
  std::vector<EvalRecord> records = {
      rec_of("add1", Mode::Numeric, true, false, false, false),
      rec_of("sub1", Mode::Numeric, false, false, false, false),
  };
  MetricsSummary s = aggregate(records, ds);
  CHECK(s.accuracy.numerator == 1);
  CHECK(s.accuracy.denominator == 2);
  CHECK_FALSE(s.alignment.defined());
  CHECK_FALSE(s.bleu_mean.defined());
  CHECK(s.alignment.percent() == 0.0);
}

TEST_CASE("aggregate rejects empty, mixed, and unknown-id inputs") {
  const auto ds = two_problem_dataset();
  CHECK_THROWS_AS(aggregate({}, ds), Error);
  std::vector<EvalRecord> mixed = {
      rec_of("add1", Mode::SelfPrompt, true, true, true, true),
      rec_of("sub1", Mode::Numeric, true, true, true, true),
  };
  CHECK_THROWS_AS(aggregate(mixed, ds), Error);
  std::vector<EvalRecord> styles = {
      rec_of("add1", Mode::SelfPrompt, true, true, true, true),
      rec_of("sub1", Mode::SelfPrompt, true, true, true, true),
  };
  styles[1].style = PromptStyle::Vanilla;
  CHECK_THROWS_AS(aggregate(styles, ds), Error);
  std::vector<EvalRecord> unknown = {
      rec_of("mystery", Mode::SelfPrompt, true, true, true, true)};
  CHECK_THROWS_AS(aggregate(unknown, ds), Error);
}

TEST_CASE("similarity histograms clamp into 20 bins and skip undefined records") {
  std::vector<EvalRecord> records = {
      rec_of("add1", Mode::SelfPrompt, true, true, true, true, 0.0),
      rec_of("add1", Mode::SelfPrompt, true, true, true, true, 0.07),
      rec_of("add1", Mode::SelfPrompt, true, true, true, true, 1.0),
      rec_of("add1", Mode::SelfPrompt, true, true, true, true),  // undefined
  };
  auto bins = similarity_histograms(records);
  REQUIRE(bins.size() == 40);
  CHECK(bins[0].metric == "bleu");
  CHECK(bins[0].lo == doctest::Approx(0.0));
  CHECK(bins[0].hi == doctest::Approx(0.05));
  CHECK(bins[0].count == 1);   // bleu 0.0
  CHECK(bins[1].count == 1);   // bleu 0.07
  CHECK(bins[19].count == 1);  // bleu 1.0 clamps into the last bin
  std::size_t bleu_total = 0;
  for (std::size_t i = 0; i < 20; ++i) bleu_total += bins[i].count;
  CHECK(bleu_total == 3);
  CHECK(bins[20].metric == "lev_sim");
  // lev_sim values were 0.0, 0.035, 0.5.
  CHECK(bins[20].count == 2);
  CHECK(bins[30].count == 1);
}
