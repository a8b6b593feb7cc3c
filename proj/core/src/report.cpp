#include "symeval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "symeval/errors.hpp"

namespace symeval {

namespace {

const std::vector<std::string> kModeOrder = {"numeric", "symbolic", "sp", "sp-ap",
                                             "sp-ap-always"};
const std::vector<std::string> kVarsetOrder = {"wxyz", "pqrs", "ijkl"};
const std::vector<std::string> kStyleOrder = {"vanilla", "cot"};

std::size_t order_index(const std::vector<std::string>& order, const std::string& key) {
  auto it = std::find(order.begin(), order.end(), key);
  return it == order.end() ? order.size() : static_cast<std::size_t>(it - order.begin());
}

std::string pretty_varset(const std::string& letters) {
  std::string out;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i > 0) out.push_back(',');
    out.push_back(letters[i]);
  }
  return out;
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

struct Column {
  std::string mode;
  std::string varset;
  std::string label;
};

struct MetricRow {
  std::string key;    // csv name
  std::string label;  // grid name
};

const std::vector<MetricRow> kMetrics = {
    {"accuracy", "Accuracy"},
    {"alignment", "Alignment"},
    {"bleu", "BLEU"},
    {"levenshtein", "Levenshtein"},
};

std::optional<std::string> cell_value(const MetricsSummary& s, const std::string& metric) {
  if (metric == "accuracy") {
    if (!s.accuracy.defined()) return std::nullopt;
    return format_percent(s.accuracy.percent());
  }
  if (metric == "alignment") {
    if (!s.alignment.defined()) return std::nullopt;
    return format_percent(s.alignment.percent());
  }
  if (metric == "bleu") {
    if (!s.bleu_mean.defined()) return std::nullopt;
    return format_percent(s.bleu_mean.mean());
  }
  if (!s.lev_sim_mean.defined()) return std::nullopt;
  return format_percent(s.lev_sim_mean.mean());
}

}  // namespace

ReportOutput build_report(const std::vector<SummaryFile>& summaries) {
  if (summaries.empty()) throw Error("report requires at least one summary");
  ReportOutput out;

  // Provenance checks.
  std::set<std::string> seeds;
  std::set<std::string> datasets;
  for (const auto& sf : summaries) {
    seeds.insert(sf.provenance.seed ? std::to_string(*sf.provenance.seed) : "unknown");
    if (!sf.provenance.dataset.empty()) datasets.insert(sf.provenance.dataset);
  }
  if (seeds.size() > 1) {
    std::string msg = "mixed seeds across summaries:";
    for (const auto& s : seeds) msg += " " + s;
    out.warnings.push_back(msg);
  }
  if (datasets.size() > 1) {
    std::string msg = "mixed datasets across summaries:";
    for (const auto& d : datasets) msg += " " + d;
    out.warnings.push_back(msg);
  }

  // Cell index: (mode, varset, style) -> summary. Later files win.
  std::map<std::string, const MetricsSummary*> cells;
  std::vector<Column> columns;
  std::vector<std::string> styles;
  for (const auto& sf : summaries) {
    const MetricsSummary& s = sf.summary;
    const std::string cell_key = s.mode + "|" + s.varset + "|" + s.style;
    if (cells.count(cell_key)) {
      out.warnings.push_back("duplicate summary for mode=" + s.mode +
                             " varset=" + s.varset + " style=" + s.style +
                             "; keeping the last one");
    }
    cells[cell_key] = &s;
    const bool have_col = std::any_of(columns.begin(), columns.end(), [&](const Column& c) {
      return c.mode == s.mode && c.varset == s.varset;
    });
    if (!have_col) {
      Column col;
      col.mode = s.mode;
      col.varset = s.varset;
      col.label = s.mode == "numeric" ? s.mode
                                      : s.mode + " (" + pretty_varset(s.varset) + ")";
      columns.push_back(std::move(col));
    }
    if (std::find(styles.begin(), styles.end(), s.style) == styles.end()) {
      styles.push_back(s.style);
    }
  }
  std::sort(columns.begin(), columns.end(), [](const Column& a, const Column& b) {
    auto ka = std::make_tuple(order_index(kModeOrder, a.mode),
                              order_index(kVarsetOrder, a.varset), a.varset);
    auto kb = std::make_tuple(order_index(kModeOrder, b.mode),
                              order_index(kVarsetOrder, b.varset), b.varset);
    return ka < kb;
  });
  std::sort(styles.begin(), styles.end(), [](const std::string& a, const std::string& b) {
    return order_index(kStyleOrder, a) < order_index(kStyleOrder, b);
  });

  // Build the grid as strings first, then align.
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = {"metric", "style"};
  for (const auto& c : columns) header.push_back(c.label);
  grid.push_back(header);

  std::ostringstream csv;
  csv << "metric,style,mode,varset,value,numerator,denominator\n";

  for (const auto& metric : kMetrics) {
    for (const auto& style : styles) {
      std::vector<std::string> row = {metric.label, style};
      bool any = false;
      for (const auto& c : columns) {
        auto it = cells.find(c.mode + "|" + c.varset + "|" + style);
        std::optional<std::string> value;
        if (it != cells.end()) value = cell_value(*it->second, metric.key);
        row.push_back(value.value_or("-"));
        if (value) any = true;
        if (it != cells.end()) {
          const MetricsSummary& s = *it->second;
          csv << metric.key << ',' << style << ',' << c.mode << ',' << c.varset << ',';
          if (value) csv << *value;
          csv << ',';
          if (metric.key == "accuracy") {
            csv << s.accuracy.numerator << ',' << s.accuracy.denominator;
          } else if (metric.key == "alignment") {
            csv << s.alignment.numerator << ',' << s.alignment.denominator;
          } else if (metric.key == "bleu") {
            csv << ',' << s.bleu_mean.count;
          } else {
            csv << ',' << s.lev_sim_mean.count;
          }
          csv << '\n';
        }
      }
      if (any) grid.push_back(std::move(row));
    }
  }

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::ostringstream text;
  for (const auto& w : out.warnings) text << "WARNING: " << w << '\n';
  if (!out.warnings.empty()) text << '\n';
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const auto& row = grid[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) text << "  ";
      // Left-align the label columns, right-align values.
      if (i < 2) {
        text << row[i] << std::string(widths[i] - row[i].size(), ' ');
      } else {
        text << std::string(widths[i] - row[i].size(), ' ') << row[i];
      }
    }
    text << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i ? 2 : 0);
      text << std::string(total, '-') << '\n';
    }
  }
  out.text = text.str();
  out.csv = csv.str();
  return out;
}

}  // namespace symeval
