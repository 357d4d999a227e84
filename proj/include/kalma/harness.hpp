#pragma once

// Subcommand implementations behind kalma_cli: retrieval, generation,
// evaluation, the knowledge-removal and retrieval-corruption ablations, and
// dataset construction. Every command writes under RunConfig::output_dir and
// finishes with manifest.json; its presence marks a complete run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalma/citation.hpp"
#include "kalma/dataset.hpp"
#include "kalma/error.hpp"
#include "kalma/http_client.hpp"
#include "kalma/judges.hpp"
#include "kalma/kg_store.hpp"
#include "kalma/metrics.hpp"
#include "kalma/prompts.hpp"
#include "kalma/questiongen.hpp"
#include "kalma/retrieval.hpp"
#include "kalma/rng.hpp"
#include "kalma/text.hpp"

namespace kalma {

inline constexpr const char* kToolVersion = "0.1.0";

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

enum class KnowledgeSource { kRetrieved, kGold };

inline JudgeConfig judge_defaults(std::string endpoint, double temperature) {
  JudgeConfig c;
  c.endpoint = std::move(endpoint);
  c.temperature = temperature;
  return c;
}

struct RunConfig {
  fs::path store_path;
  fs::path dataset_path;
  fs::path output_dir;
  fs::path answers_path;  // evaluate input; defaults to <output_dir>/answers.jsonl
  fs::path seeds_path;    // construct input
  fs::path prompt_dir;    // empty uses the built-in prompt assets
  fs::path replay_dir;    // serve chat calls from <replay_dir>/transcripts
  uint64_t seed = 0;

  // Generator mock used when generator.endpoint is "mock":
  // faithful | gap-aware | scripted
  std::string mock = "faithful";
  fs::path scripted_answers;
  JudgeConfig generator = judge_defaults("mock", 0.5);
  JudgeConfig nli;
  JudgeConfig grader = judge_defaults("none", 0.0);
  double entailment_threshold = kDefaultEntailmentThreshold;

  QuestionSetting setting = QuestionSetting::kSpecific;
  KnowledgeSource knowledge = KnowledgeSource::kRetrieved;
  bool na_offtopic_credit = false;
  CorrectnessPooling pooling = CorrectnessPooling::kCorpus;

  double alpha = 0.5;
  int rounds = 5;
  CoherenceNormalization coherence = CoherenceNormalization::kSoftmax;
  std::vector<int> removals = {1, 2, 3};
  std::vector<double> fractions = {0.0, 0.2, 0.4, 0.6, 0.8};

  size_t workers = 1;
};

inline const char* setting_name(QuestionSetting s) {
  return s == QuestionSetting::kGeneral ? "general" : "specific";
}

inline const char* knowledge_source_name(KnowledgeSource k) {
  return k == KnowledgeSource::kGold ? "gold" : "retrieved";
}

namespace detail {

inline ojson judge_json(const JudgeConfig& c) {
  ojson j;
  j["endpoint"] = c.endpoint;
  j["model"] = c.model_name;
  j["temperature"] = c.temperature;
  j["seed"] = c.seed;
  j["timeout_ms"] = c.timeout.count();
  j["max_attempts"] = c.max_attempts;
  return j;
}

}  // namespace detail

// Canonical form hashed into every report. The output directory, worker count
// and replay location do not change results and are left out.
inline ojson config_to_json(const RunConfig& c) {
  ojson j;
  j["store"] = c.store_path.generic_string();
  j["dataset"] = c.dataset_path.generic_string();
  j["answers"] = c.answers_path.generic_string();
  j["seeds"] = c.seeds_path.generic_string();
  j["prompt_dir"] = c.prompt_dir.generic_string();
  j["seed"] = c.seed;
  j["mock"] = c.mock;
  j["scripted_answers"] = c.scripted_answers.generic_string();
  j["generator"] = detail::judge_json(c.generator);
  j["nli"] = detail::judge_json(c.nli);
  j["nli"]["threshold"] = c.entailment_threshold;
  j["grader"] = detail::judge_json(c.grader);
  j["setting"] = setting_name(c.setting);
  j["knowledge"] = knowledge_source_name(c.knowledge);
  j["na_offtopic_credit"] = c.na_offtopic_credit;
  j["correctness_pooling"] = c.pooling == CorrectnessPooling::kCorpus ? "corpus" : "per-answer";
  j["alpha"] = c.alpha;
  j["rounds"] = c.rounds;
  j["coherence"] = c.coherence == CoherenceNormalization::kSoftmax ? "softmax" : "sum";
  j["removals"] = c.removals;
  j["fractions"] = c.fractions;
  j["prompt_version"] = kPromptVersion;
  return j;
}

inline std::string config_hash(const RunConfig& c) {
  return text::hex64(text::fnv1a64(config_to_json(c).dump()));
}

inline void validate_run_config(const RunConfig& c) {
  if (c.output_dir.empty()) throw std::invalid_argument("no output directory (--out)");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (c.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (c.workers < 1) throw std::invalid_argument("workers must be >= 1");
  for (int k : c.removals) {
    if (k < 1) throw std::invalid_argument("removal counts must be >= 1");
  }
  for (double f : c.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("fractions must lie in [0,1]");
  }
  if (c.mock != "faithful" && c.mock != "gap-aware" && c.mock != "scripted") {
    throw std::invalid_argument("unknown mock generator '" + c.mock +
                                "' (faithful, gap-aware, scripted)");
  }
  if (c.generator.is_mock() && c.mock == "scripted" && c.scripted_answers.empty()) {
    throw std::invalid_argument("scripted mock needs scripted_answers");
  }
  if (!c.generator.is_mock()) validate_judge_config(c.generator);
  if (!c.nli.is_mock()) validate_judge_config(c.nli);
  if (c.grader.endpoint != "none") {
    if (c.grader.is_mock()) throw std::invalid_argument("the grader has no mock; use none or an endpoint");
    validate_judge_config(c.grader);
  }
}

// ---------------------------------------------------------------------------
// Judges for one run

class JudgeStack {
 public:
  explicit JudgeStack(const RunConfig& c) : config_(c) {
    lib_ = c.prompt_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::from_directory(c.prompt_dir);
    if (c.generator.is_mock()) {
      if (c.mock == "faithful") generator_ = std::make_unique<FaithfulCiter>();
      if (c.mock == "gap-aware") generator_ = std::make_unique<GapAwareCiter>();
      if (c.mock == "scripted") {
        generator_ = std::make_unique<ScriptedGenerator>(ScriptedGenerator::load(c.scripted_answers));
      }
    } else {
      generator_ = std::make_unique<ChatGenerator>(client("generator", c.generator), c.generator, lib_);
    }
    if (c.nli.is_mock()) {
      nli_ = std::make_unique<LexicalEntailmentJudge>();
    } else {
      nli_ = std::make_unique<ChatEntailmentJudge>(client("nli", c.nli), c.nli,
                                                   c.entailment_threshold, lib_);
    }
    if (c.grader.endpoint != "none") {
      grader_ = std::make_unique<ChatTextGrader>(client("grader", c.grader), c.grader, lib_);
    }
    relevance_ = std::make_unique<LexicalRelevanceJudge>();
  }

  Generator& generator() { return *generator_; }
  EntailmentJudge& nli() { return *nli_; }
  TextGrader* grader() { return grader_.get(); }
  RelevanceJudge& relevance() { return *relevance_; }
  const PromptLibrary& prompts() const { return lib_; }

  // Construction model sharing the generator's endpoint.
  std::unique_ptr<ConstructionModel> construction_model() {
    if (config_.generator.is_mock()) return std::make_unique<TemplateConstructionModel>();
    return std::make_unique<ChatConstructionModel>(client("generator", config_.generator),
                                                   config_.generator, lib_);
  }

  ojson identity() const {
    ojson j;
    j["generator"] = generator_->identity();
    j["nli"] = nli_->identity();
    j["grader"] = grader_ ? grader_->identity() : "none";
    return j;
  }

  // Transcript files written by this run, relative to the output directory.
  std::vector<std::string> transcripts() const {
    std::vector<std::string> out;
    for (const auto& [role, _] : recorders_) out.push_back("transcripts/" + role + ".jsonl");
    return out;
  }

 private:
  ChatClient& client(const std::string& role, const JudgeConfig& jc) {
    if (auto it = recorders_.find(role); it != recorders_.end()) return *it->second;
    if (auto it = replays_.find(role); it != replays_.end()) return *it->second;
    if (!config_.replay_dir.empty()) {
      auto path = config_.replay_dir / "transcripts" / (role + ".jsonl");
      auto& r = replays_[role];
      r = std::make_unique<ReplayChatClient>(path, "replay:" + jc.model_name);
      return *r;
    }
    auto& http = http_[role];
    http = std::make_unique<HttpChatClient>(jc);
    fs::create_directories(config_.output_dir / "transcripts");
    auto path = config_.output_dir / "transcripts" / (role + ".jsonl");
    auto& rec = recorders_[role];
    rec = std::make_unique<RecordingChatClient>(*http, path);
    return *rec;
  }

  const RunConfig& config_;
  PromptLibrary lib_ = PromptLibrary::builtin();
  std::map<std::string, std::unique_ptr<HttpChatClient>> http_;
  std::map<std::string, std::unique_ptr<RecordingChatClient>> recorders_;
  std::map<std::string, std::unique_ptr<ReplayChatClient>> replays_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<EntailmentJudge> nli_;
  std::unique_ptr<TextGrader> grader_;
  std::unique_ptr<RelevanceJudge> relevance_;
};

// ---------------------------------------------------------------------------
// Plumbing

// Runs fn(0..n-1) on up to `workers` threads. fn must not throw.
inline void parallel_for(size_t n, size_t workers, const std::function<void(size_t)>& fn) {
  workers = std::max<size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline ojson triple_json(const KnowledgeTriple& t) {
  return ojson::array({t.subject().str(), t.relation(), t.object()});
}

inline KnowledgeTriple triple_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("triple must be [subject, relation, object]");
  return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
}

// Collects emitted files and the outcome of one command.
class RunRecorder {
 public:
  RunRecorder(const RunConfig& config, std::string command)
      : config_(config), command_(std::move(command)), started_(utc_timestamp()) {
    fs::create_directories(config.output_dir);
    // A stale manifest would claim completion of this run.
    fs::remove(config.output_dir / "manifest.json");
  }

  void write(const std::string& rel, const std::string& content) {
    write_text(config_.output_dir / rel, content);
    add(rel);
  }
  void add(const std::string& rel) {
    if (std::find(artifacts_.begin(), artifacts_.end(), rel) == artifacts_.end()) artifacts_.push_back(rel);
  }
  void fail(size_t n = 1) { failures_ += n; }
  size_t failures() const { return failures_; }

  // Written last.
  void finish(const ojson& judges) {
    ojson m;
    m["tool_version"] = kToolVersion;
    m["command"] = command_;
    m["config_hash"] = config_hash(config_);
    m["seed"] = config_.seed;
    m["config"] = config_to_json(config_);
    m["judges"] = judges;
    m["started_at"] = started_;
    m["finished_at"] = utc_timestamp();
    m["failures"] = failures_;
    m["artifacts"] = artifacts_;
    write_text(config_.output_dir / "manifest.json", m.dump(2) + "\n");
  }

 private:
  const RunConfig& config_;
  std::string command_;
  std::string started_;
  std::vector<std::string> artifacts_;
  size_t failures_ = 0;
};

struct CommandResult {
  size_t failures = 0;
  std::string summary;  // one human-readable line for stdout
};

inline KnowledgeStore load_run_store(const RunConfig& c) {
  if (c.store_path.empty()) throw std::invalid_argument("no knowledge store (--store)");
  return load_store(c.store_path);
}

inline std::vector<DatasetEntry> load_run_dataset(const RunConfig& c) {
  if (c.dataset_path.empty()) throw std::invalid_argument("no dataset (--dataset)");
  return load_dataset(c.dataset_path);
}

inline std::vector<SubGraph> gold_graphs(const KnowledgeStore& store, const DatasetEntry& e) {
  std::vector<SubGraph> out;
  for (const auto& p : e.people) out.push_back(store.neighborhood(p));
  return out;
}

inline std::vector<SubGraph> knowledge_for(const KnowledgeStore& store, const DatasetEntry& e,
                                           const RunConfig& c, const ExtractorConfig& ex) {
  if (c.knowledge == KnowledgeSource::kGold) return gold_graphs(store, e);
  return retrieve(store, e.question(c.setting), ex, e.id).graphs();
}

inline std::vector<std::string> center_ids(const std::vector<SubGraph>& graphs) {
  std::vector<std::string> out;
  for (const auto& g : graphs) out.push_back(g.center().id.str());
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline ojson opt_json(std::optional<double> v) {
  return v ? ojson(text::round1(*v)) : ojson(nullptr);
}

inline std::string opt_csv(std::optional<double> v) { return v ? text::format1(*v) : ""; }

// Report columns, citation quality first.
inline std::vector<std::pair<std::string, std::optional<double>>> report_columns(
    const CorpusReport& r) {
  return {{"Align.", r.alignment_pct}, {"Corr.", r.correctness},   {"Micro P", r.micro_p},
          {"Micro R", r.micro_r},      {"Micro F1", r.micro_f1},   {"Macro P", r.macro_p},
          {"Macro R", r.macro_r},      {"Macro F1", r.macro_f1},   {"NA P", r.na_p},
          {"NA R", r.na_r},            {"NA F1", r.na_f1},         {"Coh.", r.coherence},
          {"Con.", r.consistency},     {"Flu.", r.fluency},        {"Rel.", r.relevance}};
}

inline std::string report_csv_header() {
  std::string h = "condition";
  for (const auto& [name, _] : report_columns(CorpusReport{})) h += "," + name;
  return h + "\n";
}

inline std::string report_csv_row(const std::string& condition, const CorpusReport& r) {
  std::string row = condition;
  for (const auto& [_, v] : report_columns(r)) row += "," + opt_csv(v);
  return row + "\n";
}

inline ojson corpus_json(const CorpusReport& r) {
  ojson j;
  for (const auto& [name, v] : report_columns(r)) j[name] = opt_json(v);
  return j;
}

inline ojson counts_json(const CorpusReport& r) {
  ojson j;
  j["answers"] = r.per_answer.size();
  j["scored_citations"] = r.scored_citations;
  j["correct"] = r.correct;
  j["triple_citations"] = r.triple_citations;
  j["precision_hits"] = r.precision_hits;
  j["min_set_total"] = r.min_set_total;
  j["recall_hits"] = r.recall_hits;
  j["align_entailed"] = r.align_entailed;
  j["align_total"] = r.align_total;
  j["na_sentences"] = r.na_sentences;
  j["na_precision_hits"] = r.na_precision_hits;
  j["absent_total"] = r.absent_total;
  j["na_recall_hits"] = r.na_recall_hits;
  return j;
}

inline ojson answer_report_json(const AnswerReport& a) {
  ojson j;
  j["question_id"] = a.question_id;
  j["n_citations"] = a.n_citations;
  j["n_malformed"] = a.n_malformed;
  j["n_na"] = a.n_na;
  j["n_correct"] = a.n_correct;
  j["precision_hits"] = a.precision_hits;
  j["min_set_size"] = a.min_set_size;
  j["recall_hits"] = a.recall_hits;
  j["align_entailed"] = a.alignment_pairs.entailed;
  j["align_total"] = a.alignment_pairs.total;
  j["na_sentences"] = a.na_sentences;
  j["na_precision_hits"] = a.na_precision_hits;
  j["absent_size"] = a.absent_size;
  j["na_recall_hits"] = a.na_recall_hits;
  if (a.quality) {
    for (auto m : kQualityMetrics) j[quality_metric_name(m)] = a.quality->get(m);
  }
  return j;
}

inline ojson report_json(const CorpusReport& r, const RunConfig& c, const std::string& command,
                         const std::string& condition, const ojson& judges) {
  ojson j;
  ojson meta;
  meta["command"] = command;
  meta["condition"] = condition;
  meta["seed"] = c.seed;
  meta["config_hash"] = config_hash(c);
  meta["judges"] = judges;
  meta["tool_version"] = kToolVersion;
  j["meta"] = meta;
  j["corpus"] = corpus_json(r);
  j["counts"] = counts_json(r);
  auto per = ojson::array();
  for (const auto& a : r.per_answer) per.push_back(answer_report_json(a));
  j["per_answer"] = per;
  return j;
}

// ---------------------------------------------------------------------------
// Generation and scoring of one condition

struct AnswerRecord {
  std::string question_id;
  std::string raw_text;
  std::vector<std::string> retrieved;
  std::vector<KnowledgeTriple> removed;  // knowledge-removal rounds only

  ojson to_json() const {
    ojson j;
    j["question_id"] = question_id;
    j["raw_text"] = raw_text;
    j["retrieved"] = retrieved;
    if (!removed.empty()) {
      auto r = ojson::array();
      for (const auto& t : removed) r.push_back(triple_json(t));
      j["removed"] = r;
    }
    return j;
  }

  static AnswerRecord from_json(const nlohmann::json& j) {
    AnswerRecord a;
    a.question_id = j.at("question_id").get<std::string>();
    a.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("retrieved")) a.retrieved = j["retrieved"].get<std::vector<std::string>>();
    if (j.contains("removed")) {
      for (const auto& t : j["removed"]) a.removed.push_back(triple_from_json(t));
    }
    return a;
  }
};

inline std::vector<AnswerRecord> load_answers(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open answers " + path.string());
  std::vector<AnswerRecord> out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim_view(line).empty()) continue;
    try {
      out.push_back(AnswerRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), n, e.what());
    }
  }
  return out;
}

inline std::string answers_jsonl(const std::vector<std::optional<AnswerRecord>>& answers) {
  std::string out;
  for (const auto& a : answers) {
    if (a) out += a->to_json().dump() + "\n";
  }
  return out;
}

struct WorkItem {
  const DatasetEntry* entry = nullptr;
  std::vector<SubGraph> graphs;
  std::vector<KnowledgeTriple> removed;
};

struct Failure {
  std::string question_id;
  std::string stage;
  std::string error;

  ojson to_json() const {
    ojson j;
    j["question_id"] = question_id;
    j["stage"] = stage;
    j["error"] = error;
    return j;
  }
};

inline std::string failures_jsonl(const std::vector<std::optional<Failure>>& fs) {
  std::string out;
  for (const auto& f : fs) {
    if (f) out += f->to_json().dump() + "\n";
  }
  return out;
}

inline AnswerRecord generate_one(const WorkItem& item, const KnowledgeStore& store,
                                 const RunConfig& c, JudgeStack& judges) {
  const auto& e = *item.entry;
  auto req = make_generation_request(e.id, e.question(c.setting), item.graphs, &store, judges.prompts());
  req.parametric_knowledge = e.minimum_knowledge_set;
  AnswerRecord a;
  a.question_id = e.id;
  a.raw_text = judges.generator().generate(req);
  a.retrieved = center_ids(item.graphs);
  a.removed = item.removed;
  return a;
}

inline AnswerReport score_one(const WorkItem& item, const AnswerRecord& a, const KnowledgeStore& store,
                              const RunConfig& c, JudgeStack& judges) {
  const auto& e = *item.entry;
  AttributedAnswer parsed = parse_answer(a.raw_text);
  TripleSet min_set = e.min_set();
  TripleSet absent(item.removed.begin(), item.removed.end());
  EvaluationInput in;
  in.question_id = e.id;
  in.question = e.question(c.setting);
  in.answer = &parsed;
  in.retrieved = item.graphs;
  in.min_set = &min_set;
  in.absent = item.removed.empty() ? nullptr : &absent;
  EvaluationJudges ej;
  ej.nli = &judges.nli();
  ej.relevance = &judges.relevance();
  ej.offtopic_credit = c.na_offtopic_credit;
  AnswerReport r = evaluate_answer(in, ej);
  if (auto* grader = judges.grader()) {
    std::vector<std::string> lines;
    for (const auto& g : item.graphs) lines.push_back(knowledge_dict(g, &store));
    r.quality = grade_all(*grader, e.id, in.question, a.raw_text, join_lines(lines));
  }
  return r;
}

struct ConditionResult {
  std::optional<CorpusReport> report;  // absent when nothing could be scored
  size_t failures = 0;
  size_t evaluated = 0;
};

// Generates (unless answers are given) and scores one batch of work items,
// writing answers, failures and the report under `dir`.
inline ConditionResult run_condition(const std::vector<WorkItem>& items, const KnowledgeStore& store,
                                     const RunConfig& c, JudgeStack& judges, RunRecorder& rec,
                                     const std::string& dir, const std::string& command,
                                     const std::string& condition) {
  const size_t n = items.size();
  std::vector<std::optional<AnswerRecord>> answers(n);
  std::vector<std::optional<AnswerReport>> reports(n);
  std::vector<std::optional<Failure>> failures(n);
  parallel_for(n, c.workers, [&](size_t i) {
    const auto& id = items[i].entry->id;
    try {
      answers[i] = generate_one(items[i], store, c, judges);
    } catch (const std::exception& e) {
      failures[i] = Failure{id, "generate", e.what()};
      return;
    }
    try {
      reports[i] = score_one(items[i], *answers[i], store, c, judges);
    } catch (const std::exception& e) {
      failures[i] = Failure{id, "evaluate", e.what()};
    }
  });
  const std::string prefix = dir.empty() ? "" : dir + "/";
  rec.write(prefix + "answers.jsonl", answers_jsonl(answers));
  rec.write(prefix + "failures.jsonl", failures_jsonl(failures));
  ConditionResult out;
  std::vector<AnswerReport> scored;
  for (size_t i = 0; i < n; ++i) {
    if (failures[i]) ++out.failures;
    if (reports[i]) scored.push_back(*reports[i]);
  }
  out.evaluated = scored.size();
  rec.fail(out.failures);
  if (!scored.empty()) {
    out.report = aggregate(scored, {c.pooling});
    rec.write(prefix + "report.json",
              report_json(*out.report, c, command, condition, judges.identity()).dump(2) + "\n");
    rec.write(prefix + "report.csv", report_csv_header() + report_csv_row(condition, *out.report));
  }
  return out;
}

// ---------------------------------------------------------------------------
// retrieve

inline CommandResult cmd_retrieve(const RunConfig& c) {
  validate_run_config(c);
  auto store = load_run_store(c);
  auto entries = load_run_dataset(c);
  ExtractorConfig ex;
  validate_extractor_config(ex, store);
  RunRecorder rec(c, "retrieve");

  std::vector<RetrievalOutput> outs(entries.size());
  parallel_for(entries.size(), c.workers, [&](size_t i) {
    outs[i] = retrieve(store, entries[i].question(c.setting), ex, entries[i].id);
  });

  std::string lines;
  size_t gold_total = 0, gold_found = 0, ties = 0, dropped = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& o = outs[i];
    ojson j;
    j["question_id"] = e.id;
    j["question"] = e.question(c.setting);
    auto ms = ojson::array();
    for (const auto& r : o.results) {
      ojson m;
      m["surface"] = r.mention.surface;
      m["lookup_name"] = r.mention.lookup_name;
      m["mention_type"] = r.mention.mention_type;
      m["start"] = r.mention.start;
      m["end"] = r.mention.end;
      m["chosen"] = r.chosen.center().id.str();
      m["candidates"] = r.candidates_considered;
      m["match_score"] = r.match_score;
      m["tie_broken"] = r.tie_broken;
      ties += r.tie_broken;
      ms.push_back(m);
    }
    j["mentions"] = ms;
    auto graphs = o.graphs();
    j["retrieved"] = center_ids(graphs);
    j["dropped_mentions"] = o.dropped_mentions;
    dropped += o.dropped_mentions;
    std::set<EntityId> got;
    for (const auto& g : graphs) got.insert(g.center().id);
    for (const auto& p : e.people) {
      ++gold_total;
      gold_found += got.count(p);
    }
    lines += j.dump() + "\n";
  }
  rec.write("retrieval.jsonl", lines);

  auto acc = detail::pct(ratio(gold_found, gold_total));
  ojson s;
  s["meta"] = {{"command", "retrieve"}, {"seed", c.seed}, {"config_hash", config_hash(c)},
               {"tool_version", kToolVersion}};
  s["questions"] = entries.size();
  s["gold_entities"] = gold_total;
  s["gold_found"] = gold_found;
  s["accuracy"] = opt_json(acc);
  // Equal rerank scores are settled by the smallest center id.
  s["tie_broken_mentions"] = ties;
  s["dropped_mentions"] = dropped;
  rec.write("retrieval_summary.json", s.dump(2) + "\n");
  rec.finish(ojson::object());
  return {0, "retrieval accuracy: " + (acc ? text::format1(*acc) + "%" : std::string("n/a")) + " (" +
                 std::to_string(gold_found) + "/" + std::to_string(gold_total) + " gold entities, " +
                 std::to_string(entries.size()) + " questions)"};
}

// ---------------------------------------------------------------------------
// generate

// Answers already on disk (a finished answers.jsonl or the partial log of an
// interrupted run) are kept and their questions skipped.
inline CommandResult cmd_generate(const RunConfig& c) {
  validate_run_config(c);
  auto store = load_run_store(c);
  auto entries = load_run_dataset(c);
  ExtractorConfig ex;
  validate_extractor_config(ex, store);
  JudgeStack judges(c);
  RunRecorder rec(c, "generate");

  const fs::path final_path = c.output_dir / "answers.jsonl";
  const fs::path partial_path = c.output_dir / "answers.partial.jsonl";
  std::map<std::string, AnswerRecord> done;
  for (const auto& p : {final_path, partial_path}) {
    if (!fs::exists(p)) continue;
    for (auto& a : load_answers(p)) done[a.question_id] = std::move(a);
  }

  std::vector<std::optional<AnswerRecord>> answers(entries.size());
  std::vector<std::optional<Failure>> failures(entries.size());
  std::mutex log_mu;
  std::ofstream partial(partial_path, std::ios::app);
  if (!partial) throw Error("cannot write " + partial_path.string());
  size_t resumed = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (auto it = done.find(entries[i].id); it != done.end()) {
      answers[i] = it->second;
      ++resumed;
    }
  }
  parallel_for(entries.size(), c.workers, [&](size_t i) {
    if (answers[i]) return;
    const auto& e = entries[i];
    try {
      WorkItem item{&e, knowledge_for(store, e, c, ex), {}};
      auto a = generate_one(item, store, c, judges);
      std::lock_guard<std::mutex> lock(log_mu);
      partial << a.to_json().dump() << '\n';
      partial.flush();
      answers[i] = std::move(a);
    } catch (const std::exception& ex_) {
      failures[i] = Failure{e.id, "generate", ex_.what()};
    }
  });
  partial.close();

  rec.write("answers.jsonl", answers_jsonl(answers));
  fs::remove(partial_path);
  rec.write("failures.jsonl", failures_jsonl(failures));
  size_t n_fail = 0;
  for (const auto& f : failures) n_fail += f.has_value();
  rec.fail(n_fail);
  for (const auto& t : judges.transcripts()) rec.add(t);
  rec.finish(judges.identity());
  return {n_fail, "generated " + std::to_string(entries.size() - n_fail - resumed) + " answers, resumed " +
                      std::to_string(resumed) + ", failed " + std::to_string(n_fail)};
}

// ---------------------------------------------------------------------------
// evaluate

inline CommandResult cmd_evaluate(const RunConfig& c) {
  validate_run_config(c);
  auto store = load_run_store(c);
  auto entries = load_run_dataset(c);
  ExtractorConfig ex;
  validate_extractor_config(ex, store);
  const fs::path answers_path = c.answers_path.empty() ? c.output_dir / "answers.jsonl" : c.answers_path;
  auto answers = load_answers(answers_path);

  std::map<std::string, const DatasetEntry*> by_id;
  for (const auto& e : entries) by_id[e.id] = &e;
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  for (const auto& a : answers) {
    if (!by_id.count(a.question_id)) unknown.push_back(a.question_id);
    if (!seen.insert(a.question_id).second) {
      throw Error("duplicate answer for question " + a.question_id + " in " + answers_path.string());
    }
  }
  if (!unknown.empty()) {
    std::string ids;
    for (const auto& u : unknown) ids += (ids.empty() ? "" : ", ") + u;
    throw Error("answers reference unknown question ids: " + ids);
  }

  JudgeStack judges(c);
  RunRecorder rec(c, "evaluate");
  std::vector<std::optional<AnswerReport>> reports(answers.size());
  std::vector<std::optional<Failure>> failures(answers.size());
  parallel_for(answers.size(), c.workers, [&](size_t i) {
    const auto& a = answers[i];
    const auto& e = *by_id.at(a.question_id);
    try {
      WorkItem item{&e, {}, a.removed};
      if (a.retrieved.empty()) {
        item.graphs = knowledge_for(store, e, c, ex);
      } else {
        for (const auto& id : a.retrieved) item.graphs.push_back(store.neighborhood(EntityId(id)));
      }
      for (const auto& t : a.removed) {
        for (auto& g : item.graphs) g.erase(t);
      }
      reports[i] = score_one(item, a, store, c, judges);
    } catch (const std::exception& ex_) {
      failures[i] = Failure{a.question_id, "evaluate", ex_.what()};
    }
  });
  std::vector<AnswerReport> scored;
  size_t n_fail = 0;
  for (size_t i = 0; i < answers.size(); ++i) {
    if (reports[i]) scored.push_back(*reports[i]);
    n_fail += failures[i].has_value();
  }
  rec.fail(n_fail);
  rec.write("evaluation_failures.jsonl", failures_jsonl(failures));
  std::string summary = "no answers scored";
  if (!scored.empty()) {
    auto report = aggregate(scored, {c.pooling});
    rec.write("report.json", report_json(report, c, "evaluate", "all", judges.identity()).dump(2) + "\n");
    rec.write("report.csv", report_csv_header() + report_csv_row("all", report));
    summary = "scored " + std::to_string(scored.size()) + " answers: Corr. " + opt_csv(report.correctness) +
              ", micro P/R/F1 " + opt_csv(report.micro_p) + "/" + opt_csv(report.micro_r) + "/" +
              opt_csv(report.micro_f1);
  }
  for (const auto& t : judges.transcripts()) rec.add(t);
  rec.finish(judges.identity());
  return {n_fail, summary};
}

// ---------------------------------------------------------------------------
// Ablations

// Seeded removal order for an entry's minimum knowledge set. The first k
// entries are the victims of round k, so rounds are nested.
inline std::vector<KnowledgeTriple> removal_order(const DatasetEntry& e, uint64_t seed) {
  Rng rng(mix_seed(seed, text::fnv1a64(e.id)));
  auto perm = rng.permutation(e.minimum_knowledge_set.size());
  std::vector<KnowledgeTriple> out;
  for (size_t i : perm) out.push_back(e.minimum_knowledge_set[i]);
  return out;
}

inline std::vector<SubGraph> remove_from_graphs(const std::vector<SubGraph>& graphs,
                                                const std::vector<KnowledgeTriple>& victims) {
  std::vector<SubGraph> out = graphs;
  for (const auto& v : victims) {
    bool hit = false;
    for (auto& g : out) {
      if (g.center().id != v.subject()) continue;
      g = remove_knowledge(g, TripleSet{v}).graph;
      hit = true;
      break;
    }
    if (!hit) {
      throw std::invalid_argument("minimum-set triple (" + v.subject().str() + ", " + v.relation() +
                                  ", " + v.object() + ") is not in the gold graphs");
    }
  }
  return out;
}

struct TrendRow {
  std::string condition;
  size_t evaluated = 0;
  size_t skipped = 0;
  size_t failures = 0;
  std::optional<CorpusReport> report;
};

inline void write_trend(RunRecorder& rec, const std::string& stem, const std::vector<TrendRow>& rows,
                        const RunConfig& c, const std::string& command, const ojson& judges) {
  std::string csv = "condition,evaluated,skipped,failures";
  for (const auto& [name, _] : report_columns(CorpusReport{})) csv += "," + name;
  csv += "\n";
  ojson j;
  j["meta"] = {{"command", command}, {"seed", c.seed}, {"config_hash", config_hash(c)},
               {"judges", judges}, {"tool_version", kToolVersion}};
  auto arr = ojson::array();
  for (const auto& r : rows) {
    csv += r.condition + "," + std::to_string(r.evaluated) + "," + std::to_string(r.skipped) + "," +
           std::to_string(r.failures);
    for (const auto& [_, v] : report_columns(r.report.value_or(CorpusReport{}))) csv += "," + opt_csv(v);
    csv += "\n";
    ojson row;
    row["condition"] = r.condition;
    row["evaluated"] = r.evaluated;
    row["skipped"] = r.skipped;
    row["failures"] = r.failures;
    row["corpus"] = corpus_json(r.report.value_or(CorpusReport{}));
    row["counts"] = r.report ? counts_json(*r.report) : ojson(nullptr);
    arr.push_back(row);
  }
  j["rows"] = arr;
  rec.write(stem + ".csv", csv);
  rec.write(stem + ".json", j.dump(2) + "\n");
}

inline std::string trend_summary(const std::vector<TrendRow>& rows) {
  std::string s;
  for (const auto& r : rows) {
    if (!s.empty()) s += "; ";
    s += r.condition + ": R " + (r.report ? opt_csv(r.report->micro_r) : "n/a");
    if (r.report && r.report->na_p) s += ", NA P/R " + opt_csv(r.report->na_p) + "/" + opt_csv(r.report->na_r);
  }
  return s;
}

// For each k, removes k seeded-random minimum-set triples per entry from its
// gold graphs, regenerates against the reduced graphs and scores citations
// and [NA]. Entries with |min_set| <= k are skipped and counted.
inline CommandResult cmd_ablate_na(const RunConfig& c) {
  validate_run_config(c);
  if (c.removals.empty()) throw std::invalid_argument("no removal counts");
  auto store = load_run_store(c);
  auto entries = load_run_dataset(c);
  JudgeStack judges(c);
  RunRecorder rec(c, "ablate-na");

  std::vector<std::optional<std::vector<SubGraph>>> gold(entries.size());
  std::vector<std::vector<KnowledgeTriple>> order(entries.size());
  std::vector<std::optional<Failure>> setup_failures(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    try {
      gold[i] = gold_graphs(store, entries[i]);
      order[i] = removal_order(entries[i], c.seed);
      remove_from_graphs(*gold[i], order[i]);  // every min-set triple must be removable
    } catch (const std::exception& e) {
      gold[i].reset();
      setup_failures[i] = Failure{entries[i].id, "setup", e.what()};
      rec.fail();
    }
  }
  rec.write("setup_failures.jsonl", failures_jsonl(setup_failures));

  std::vector<TrendRow> rows;
  for (int k : c.removals) {
    TrendRow row;
    row.condition = "k=" + std::to_string(k);
    std::vector<WorkItem> items;
    for (size_t i = 0; i < entries.size(); ++i) {
      if (!gold[i]) continue;
      if (entries[i].minimum_knowledge_set.size() <= static_cast<size_t>(k)) {
        ++row.skipped;
        continue;
      }
      std::vector<KnowledgeTriple> victims(order[i].begin(), order[i].begin() + k);
      items.push_back({&entries[i], remove_from_graphs(*gold[i], victims), victims});
    }
    auto res = run_condition(items, store, c, judges, rec, "removal_k" + std::to_string(k), "ablate-na",
                             row.condition);
    row.evaluated = res.evaluated;
    row.failures = res.failures;
    row.report = res.report;
    rows.push_back(std::move(row));
  }
  write_trend(rec, "na_trend", rows, c, "ablate-na", judges.identity());
  for (const auto& t : judges.transcripts()) rec.add(t);
  rec.finish(judges.identity());
  return {rec.failures(), trend_summary(rows)};
}

// Slot i of the corpus is one (entry, gold graph) pair. Slots are replaced
// in one seeded order, so a larger fraction corrupts a superset of the slots
// a smaller one does; each replaced slot gets a fixed decoy drawn without
// replacement from the gold graphs of other entries whose center is not one
// of the slot entry's people.
struct CorpusCorruption {
  std::vector<std::pair<size_t, size_t>> slots;  // (entry, graph index)
  std::vector<size_t> slot_order;
  std::vector<std::optional<SubGraph>> decoy_for;  // by slot_order position
};

inline CorpusCorruption plan_corpus_corruption(const std::vector<DatasetEntry>& entries,
                                               const std::vector<std::vector<SubGraph>>& gold,
                                               size_t max_corrupted, uint64_t seed) {
  CorpusCorruption out;
  std::vector<SubGraph> pool;
  std::set<EntityId> pooled;
  for (size_t i = 0; i < gold.size(); ++i) {
    for (size_t j = 0; j < gold[i].size(); ++j) {
      out.slots.push_back({i, j});
      if (pooled.insert(gold[i][j].center().id).second) pool.push_back(gold[i][j]);
    }
  }
  auto plan = plan_corruption(out.slots.size(), pool.size(), seed);
  out.slot_order = plan.slot_order;
  out.decoy_for.resize(out.slots.size());
  std::vector<bool> used(pool.size(), false);
  size_t cursor = 0;
  for (size_t pos = 0; pos < max_corrupted; ++pos) {
    const auto& e = entries[out.slots[out.slot_order[pos]].first];
    std::set<EntityId> own(e.people.begin(), e.people.end());
    std::optional<size_t> pick;
    for (size_t d = cursor; d < pool.size(); ++d) {
      size_t cand = plan.decoy_order[d];
      if (used[cand] || own.count(pool[cand].center().id)) continue;
      pick = cand;
      break;
    }
    if (!pick) {
      for (size_t d = 0; d < cursor && !pick; ++d) {
        size_t cand = plan.decoy_order[d];
        if (!used[cand] && !own.count(pool[cand].center().id)) pick = cand;
      }
    }
    if (!pick) {
      throw std::invalid_argument("insufficient decoys: need " + std::to_string(max_corrupted) +
                                  " graphs, the pool ran out at " + std::to_string(pos));
    }
    used[*pick] = true;
    while (cursor < pool.size() && used[plan.decoy_order[cursor]]) ++cursor;
    out.decoy_for[pos] = pool[*pick];
  }
  return out;
}

inline std::string fraction_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", f);
  return buf;
}

inline CommandResult cmd_ablate_retrieval(const RunConfig& c) {
  validate_run_config(c);
  if (c.fractions.empty()) throw std::invalid_argument("no corruption fractions");
  auto store = load_run_store(c);
  auto entries = load_run_dataset(c);
  JudgeStack judges(c);
  RunRecorder rec(c, "ablate-retrieval");

  std::vector<std::vector<SubGraph>> gold;
  for (const auto& e : entries) gold.push_back(gold_graphs(store, e));
  size_t n_slots = 0;
  for (const auto& g : gold) n_slots += g.size();
  size_t max_k = 0;
  for (double f : c.fractions) max_k = std::max(max_k, corruption_count(n_slots, f));
  auto plan = plan_corpus_corruption(entries, gold, max_k, c.seed);

  std::vector<TrendRow> rows;
  for (double f : c.fractions) {
    const size_t k = corruption_count(n_slots, f);
    auto graphs = gold;
    for (size_t pos = 0; pos < k; ++pos) {
      auto [i, j] = plan.slots[plan.slot_order[pos]];
      graphs[i][j] = *plan.decoy_for[pos];
    }
    std::vector<WorkItem> items;
    for (size_t i = 0; i < entries.size(); ++i) items.push_back({&entries[i], graphs[i], {}});
    TrendRow row;
    row.condition = "f=" + fraction_label(f);
    auto res = run_condition(items, store, c, judges, rec, "corruption_f" + fraction_label(f),
                             "ablate-retrieval", row.condition);
    row.evaluated = res.evaluated;
    row.failures = res.failures;
    row.report = res.report;
    rows.push_back(std::move(row));
  }
  write_trend(rec, "retrieval_trend", rows, c, "ablate-retrieval", judges.identity());
  for (const auto& t : judges.transcripts()) rec.add(t);
  rec.finish(judges.identity());
  return {rec.failures(), trend_summary(rows)};
}

// ---------------------------------------------------------------------------
// construct

// Seeds -> filtered, disambiguated person pairs -> evolved entries. Relation
// statistics come from the dataset named in the config when it exists,
// otherwise from the round-1 annotations of this batch.
inline CommandResult cmd_construct(const RunConfig& c) {
  validate_run_config(c);
  if (c.seeds_path.empty()) throw std::invalid_argument("no seed corpus (--seeds)");
  auto store = load_run_store(c);
  auto seeds = load_seeds(c.seeds_path);
  JudgeStack judges(c);
  auto model = judges.construction_model();
  RunRecorder rec(c, "construct");

  std::vector<std::optional<Failure>> failures(seeds.size());
  std::vector<std::optional<KnowledgePool>> pools(seeds.size());
  UnigramPerplexity lm;
  for (size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = seeds[i];
    const std::string key = "seed" + std::to_string(i + 1);
    lm.train(s.paragraph);
    if (!filter_name_pair(s.name_a, s.name_b, s.relation)) {
      failures[i] = Failure{key, "filter", "name pair rejected: " + s.name_a + " / " + s.name_b};
      continue;
    }
    auto pair = disambiguate_pair(s.name_a, s.name_b, s.relation, store);
    if (!pair) {
      failures[i] = Failure{key, "disambiguate",
                            "no '" + s.relation + "' edge joins " + s.name_a + " and " + s.name_b};
      continue;
    }
    pools[i] = KnowledgePool{{store.neighborhood(pair->first), store.neighborhood(pair->second)}, {}};
  }

  RelationStats stats;
  if (!c.dataset_path.empty() && fs::exists(c.dataset_path)) {
    stats = RelationStats::from_dataset(load_dataset(c.dataset_path));
  } else {
    std::vector<std::vector<KnowledgeTriple>> annotated;
    for (size_t i = 0; i < seeds.size(); ++i) {
      if (!pools[i]) continue;
      try {
        std::vector<KnowledgeTriple> ks;
        for (const auto& t : parse_answer(model->annotate(seeds[i].paragraph, *pools[i])).triples()) {
          if (pools[i]->contains(t)) ks.push_back(t);
        }
        annotated.push_back(std::move(ks));
      } catch (const std::exception&) {
        // Reported by the evolution step below.
      }
    }
    stats = RelationStats::from_min_sets(annotated);
    if (stats.total == 0) stats.total = 1;
  }

  EvolveOptions opt;
  opt.rounds = c.rounds;
  opt.selection.alpha = c.alpha;
  opt.selection.coherence = c.coherence;
  std::vector<std::optional<EvolutionResult>> results(seeds.size());
  std::vector<std::vector<RoundTrace>> partial(seeds.size());
  auto perplexity = std::cref(lm);
  parallel_for(seeds.size(), c.workers, [&](size_t i) {
    if (!pools[i]) return;
    try {
      results[i] = evolve(seeds[i].paragraph, *pools[i], stats, *model, perplexity, opt);
    } catch (const EvolutionError& e) {
      partial[i] = e.partial_trace();
      failures[i] = Failure{"seed" + std::to_string(i + 1), "evolve", e.what()};
    } catch (const std::exception& e) {
      failures[i] = Failure{"seed" + std::to_string(i + 1), "evolve", e.what()};
    }
  });

  std::vector<DatasetEntry> dataset;
  std::string traces;
  for (size_t i = 0; i < seeds.size(); ++i) {
    const std::vector<RoundTrace>* trace = results[i] ? &results[i]->trace : &partial[i];
    if (results[i]) {
      results[i]->entry.id = positional_id(dataset.size());
      dataset.push_back(results[i]->entry);
    }
    if (trace->empty()) continue;
    ojson t;
    t["seed_index"] = i + 1;
    t["entry_id"] = results[i] ? ojson(results[i]->entry.id) : ojson(nullptr);
    auto rounds = ojson::array();
    for (const auto& r : *trace) rounds.push_back(r.to_json());
    t["rounds"] = rounds;
    traces += t.dump() + "\n";
  }
  std::ostringstream ds;
  write_dataset(ds, dataset);
  rec.write("dataset.jsonl", ds.str());
  rec.write("traces.jsonl", traces);
  rec.write("relation_stats.json", stats.to_json().dump(2) + "\n");
  rec.write("failures.jsonl", failures_jsonl(failures));
  size_t n_fail = 0;
  for (const auto& f : failures) n_fail += f.has_value();
  rec.fail(n_fail);
  for (const auto& t : judges.transcripts()) rec.add(t);
  ojson ids = judges.identity();
  ids["construction"] = model->identity();
  rec.finish(ids);
  return {n_fail, "constructed " + std::to_string(dataset.size()) + " entries from " +
                      std::to_string(seeds.size()) + " seeds, " + std::to_string(n_fail) + " failed"};
}

}  // namespace kalma
