#include "symeval/serialization.hpp"

#include <fstream>

#include "symeval/errors.hpp"

namespace symeval {

namespace {

using nlohmann::json;

constexpr const char* kRecordsKind = "symeval.records";
constexpr const char* kSummaryKind = "symeval.summary";

std::string_view role_name(TranscriptRole r) {
  return r == TranscriptRole::Prompt ? "prompt" : "completion";
}

TranscriptRole role_from_name(std::string_view s) {
  if (s == "prompt") return TranscriptRole::Prompt;
  if (s == "completion") return TranscriptRole::Completion;
  throw Error("unknown transcript role: " + std::string(s));
}

std::string_view phase_name(TranscriptPhase p) {
  return p == TranscriptPhase::Initial ? "initial" : "extraction";
}

TranscriptPhase phase_from_name(std::string_view s) {
  if (s == "initial") return TranscriptPhase::Initial;
  if (s == "extraction") return TranscriptPhase::Extraction;
  throw Error("unknown transcript phase: " + std::string(s));
}

json ratio_to_json(const Ratio& r) {
  json j;
  j["numerator"] = r.numerator;
  j["denominator"] = r.denominator;
  if (r.defined()) {
    j["percent"] = r.percent();
  } else {
    j["percent"] = nullptr;
  }
  return j;
}

Ratio ratio_from_json(const json& j) {
  Ratio r;
  r.numerator = j.at("numerator").get<std::size_t>();
  r.denominator = j.at("denominator").get<std::size_t>();
  return r;
}

json mean_to_json(const MeanStat& m) {
  json j;
  j["count"] = m.count;
  if (m.defined()) {
    j["mean"] = m.mean();
  } else {
    j["mean"] = nullptr;
  }
  return j;
}

MeanStat mean_from_json(const json& j) {
  MeanStat m;
  m.count = j.at("count").get<std::size_t>();
  if (!j.at("mean").is_null()) {
    m.sum = j.at("mean").get<double>() * static_cast<double>(m.count);
  }
  return m;
}

void check_kind(const json& j, const char* kind, const std::string& where) {
  if (j.value("kind", "") != kind) {
    throw Error(where + ": expected kind \"" + kind + "\"");
  }
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw Error(where + ": unsupported schema_version");
  }
}

}  // namespace

json record_to_json(const EvalRecord& rec) {
  json j;
  j["problem_id"] = rec.problem_id;
  j["run_index"] = rec.run_index;
  j["mode"] = mode_name(rec.mode);
  j["style"] = style_name(rec.style);
  j["varset"] = rec.varset;
  j["numeric_answer_filtered"] = rec.numeric_answer_filtered;
  j["symbolic_answer_filtered"] = rec.symbolic_answer_filtered;
  j["numeric_correct"] = rec.numeric_correct;
  j["symbolic_correct"] = rec.symbolic_correct;
  if (rec.aligned_defined) {
    j["aligned"] = rec.aligned;
  } else {
    j["aligned"] = nullptr;
  }
  j["align_prompt_used"] = rec.align_prompt_used;
  if (rec.similarity_defined) {
    j["bleu"] = rec.bleu;
    j["lev_sim"] = rec.lev_sim;
  } else {
    j["bleu"] = nullptr;
    j["lev_sim"] = nullptr;
  }
  json transcripts = json::array();
  for (const auto& t : rec.transcripts) {
    json jt;
    jt["label"] = t.label;
    json entries = json::array();
    for (const auto& e : t.entries) {
      json je;
      je["role"] = role_name(e.role);
      je["phase"] = phase_name(e.phase);
      je["text"] = e.text;
      entries.push_back(std::move(je));
    }
    jt["entries"] = std::move(entries);
    transcripts.push_back(std::move(jt));
  }
  j["transcripts"] = std::move(transcripts);
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

EvalRecord record_from_json(const json& j) {
  EvalRecord rec;
  try {
    rec.problem_id = j.at("problem_id").get<std::string>();
    rec.run_index = j.at("run_index").get<int>();
    rec.mode = mode_from_name(j.at("mode").get<std::string>());
    rec.style = style_from_name(j.at("style").get<std::string>());
    rec.varset = j.at("varset").get<std::string>();
    rec.numeric_answer_filtered = j.at("numeric_answer_filtered").get<std::string>();
    rec.symbolic_answer_filtered = j.at("symbolic_answer_filtered").get<std::string>();
    rec.numeric_correct = j.at("numeric_correct").get<bool>();
    rec.symbolic_correct = j.at("symbolic_correct").get<bool>();
    if (!j.at("aligned").is_null()) {
      rec.aligned_defined = true;
      rec.aligned = j.at("aligned").get<bool>();
    }
    rec.align_prompt_used = j.at("align_prompt_used").get<bool>();
    if (!j.at("bleu").is_null()) {
      rec.similarity_defined = true;
      rec.bleu = j.at("bleu").get<double>();
      rec.lev_sim = j.at("lev_sim").get<double>();
    }
    for (const auto& jt : j.at("transcripts")) {
      Transcript t;
      t.label = jt.at("label").get<std::string>();
      for (const auto& je : jt.at("entries")) {
        t.add(role_from_name(je.at("role").get<std::string>()),
              phase_from_name(je.at("phase").get<std::string>()),
              je.at("text").get<std::string>());
      }
      rec.transcripts.push_back(std::move(t));
    }
    rec.error = j.value("error", "");
  } catch (const json::exception& e) {
    throw Error(std::string("malformed eval record: ") + e.what());
  }
  return rec;
}

json records_meta_to_json(const RecordsFileMeta& meta) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kRecordsKind;
  j["mode"] = meta.mode;
  j["style"] = meta.style;
  j["varset"] = meta.varset;
  j["runs"] = meta.runs;
  j["seed"] = meta.seed;
  if (meta.subset) {
    j["subset"] = *meta.subset;
  } else {
    j["subset"] = nullptr;
  }
  j["backend"] = meta.backend;
  j["dataset"] = meta.dataset;
  j["problem_count"] = meta.problem_count;
  return j;
}

RecordsFileMeta records_meta_from_json(const json& j) {
  check_kind(j, kRecordsKind, "records file header");
  RecordsFileMeta meta;
  meta.mode = j.at("mode").get<std::string>();
  meta.style = j.at("style").get<std::string>();
  meta.varset = j.at("varset").get<std::string>();
  meta.runs = j.at("runs").get<int>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("subset").is_null()) meta.subset = j.at("subset").get<std::size_t>();
  meta.backend = j.at("backend").get<std::string>();
  meta.dataset = j.at("dataset").get<std::string>();
  meta.problem_count = j.at("problem_count").get<std::size_t>();
  return meta;
}

void write_records(const std::filesystem::path& path, const RecordsFileMeta& meta,
                   const std::vector<EvalRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write records file: " + path.string());
  out << records_meta_to_json(meta).dump() << '\n';
  for (const auto& rec : records) out << record_to_json(rec).dump() << '\n';
  if (!out) throw Error("failed writing records file: " + path.string());
}

RecordsFile read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open records file: " + path.string());
  RecordsFile rf;
  std::string line;
  std::size_t line_no = 0;
  bool saw_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error("records file " + path.string() + ": invalid JSON on line " +
                  std::to_string(line_no));
    }
    if (!saw_meta) {
      rf.meta = records_meta_from_json(j);
      saw_meta = true;
      continue;
    }
    rf.records.push_back(record_from_json(j));
  }
  if (!saw_meta) throw Error("records file " + path.string() + ": missing header line");
  return rf;
}

json summary_to_json(const MetricsSummary& s, const SummaryProvenance& prov) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kSummaryKind;
  j["mode"] = s.mode;
  j["style"] = s.style;
  j["varset"] = s.varset;
  j["n_records"] = s.n_records;
  j["accuracy"] = ratio_to_json(s.accuracy);
  j["alignment"] = ratio_to_json(s.alignment);
  j["bleu_mean"] = mean_to_json(s.bleu_mean);
  j["lev_sim_mean"] = mean_to_json(s.lev_sim_mean);
  json per_type = json::object();
  for (const auto& [tag, ratio] : s.per_type) per_type[tag] = ratio_to_json(ratio);
  j["per_type"] = std::move(per_type);
  j["alignment_given_numeric_correct"] =
      ratio_to_json(s.alignment_given_numeric_correct);
  j["alignment_given_numeric_wrong"] = ratio_to_json(s.alignment_given_numeric_wrong);
  json p;
  if (prov.seed) {
    p["seed"] = *prov.seed;
  } else {
    p["seed"] = nullptr;
  }
  p["records"] = prov.records;
  p["dataset"] = prov.dataset;
  p["backend"] = prov.backend;
  p["runs"] = prov.runs;
  if (prov.subset) {
    p["subset"] = *prov.subset;
  } else {
    p["subset"] = nullptr;
  }
  j["provenance"] = std::move(p);
  return j;
}

SummaryFile summary_from_json(const json& j) {
  check_kind(j, kSummaryKind, "summary file");
  SummaryFile sf;
  try {
    MetricsSummary& s = sf.summary;
    s.mode = j.at("mode").get<std::string>();
    s.style = j.at("style").get<std::string>();
    s.varset = j.at("varset").get<std::string>();
    s.n_records = j.at("n_records").get<std::size_t>();
    s.accuracy = ratio_from_json(j.at("accuracy"));
    s.alignment = ratio_from_json(j.at("alignment"));
    s.bleu_mean = mean_from_json(j.at("bleu_mean"));
    s.lev_sim_mean = mean_from_json(j.at("lev_sim_mean"));
    for (const auto& [tag, jr] : j.at("per_type").items()) {
      s.per_type[tag] = ratio_from_json(jr);
    }
    s.alignment_given_numeric_correct =
        ratio_from_json(j.at("alignment_given_numeric_correct"));
    s.alignment_given_numeric_wrong =
        ratio_from_json(j.at("alignment_given_numeric_wrong"));
    const json& p = j.at("provenance");
    if (!p.at("seed").is_null()) sf.provenance.seed = p.at("seed").get<std::uint64_t>();
    sf.provenance.records = p.value("records", "");
    sf.provenance.dataset = p.value("dataset", "");
    sf.provenance.backend = p.value("backend", "");
    sf.provenance.runs = p.value("runs", 0);
    if (p.contains("subset") && !p.at("subset").is_null()) {
      sf.provenance.subset = p.at("subset").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed summary file: ") + e.what());
  }
  return sf;
}

void write_summary(const std::filesystem::path& path, const MetricsSummary& s,
                   const SummaryProvenance& prov) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write summary file: " + path.string());
  out << summary_to_json(s, prov).dump(2) << '\n';
  if (!out) throw Error("failed writing summary file: " + path.string());
}

SummaryFile read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open summary file: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("summary file " + path.string() + ": invalid JSON");
  return summary_from_json(j);
}

void write_histogram_csv(const std::filesystem::path& path,
                         const std::vector<HistogramBin>& bins) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write histogram file: " + path.string());
  out << "metric,bin_lo,bin_hi,count\n";
  for (const auto& b : bins) {
    out << b.metric << ',' << json(b.lo).dump() << ',' << json(b.hi).dump() << ','
        << b.count << '\n';
  }
  if (!out) throw Error("failed writing histogram file: " + path.string());
}

void write_symbolic_dataset(const std::filesystem::path& path,
                            const std::vector<NumericProblem>& problems,
                            const std::vector<SymbolicProblem>& symbolic) {
  if (problems.size() != symbolic.size()) {
    throw Error("symbolic dataset writer: length mismatch");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  json arr = json::array();
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const NumericProblem& p = problems[i];
    const SymbolicProblem& sp = symbolic[i];
    json j;
    j["ID"] = p.id;
    j["Body"] = p.body;
    j["Question"] = p.question;
    j["Equation"] = p.equation;
    j["Answer"] = json::parse(to_decimal_string(p.answer));
    j["Type"] = operation_type_name(p.type_tag);
    json sym;
    sym["Body"] = sp.symbolic_body();
    sym["Question"] = sp.symbolic_question();
    sym["Equation"] = sp.symbolic_equation;
    sym["Varset"] = sp.varset.letters();
    json bindings = json::array();
    for (const auto& b : sp.bindings) {
      json jb;
      jb["variable"] = b.variable;
      jb["value"] = to_decimal_string(b.value);
      jb["literal"] = b.literal;
      bindings.push_back(std::move(jb));
    }
    sym["Bindings"] = std::move(bindings);
    sym["Ambiguous"] = sp.ambiguity_flag;
    j["Symbolic"] = std::move(sym);
    arr.push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write symbolic dataset: " + path.string());
  out << arr.dump(2) << '\n';
  if (!out) throw Error("failed writing symbolic dataset: " + path.string());
}

}  // namespace symeval
