// kalma_cli: retrieval, generation, evaluation, ablations and dataset
// construction over a local knowledge store.
//
// Settings come from built-in defaults, then the --config file, then flags.
// Exit status: 0 when every item succeeded and all outputs were written, 1
// when some items failed, 2 on usage, configuration or load errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kalma/harness.hpp"
#include "kalma/synthetic.hpp"

namespace {

using namespace kalma;

struct Flags {
  std::string config, store, dataset, out, answers, seeds, prompt_dir, replay, scripted;
  std::string judge_endpoint, model, mock, setting, knowledge;
  uint64_t seed = 0;
  double alpha = 0.5;
  int rounds = 5;
  size_t workers = 1;
  std::vector<double> fractions;
  std::vector<int> removals;
  bool offtopic = false;
  size_t synth_entries = 200, synth_min_set = 5, synth_max_people = 2;
};

std::string single(const CLI::ConfigItem& item) {
  if (item.inputs.size() != 1) {
    throw std::invalid_argument("config key '" + item.fullname() + "' expects one value");
  }
  return item.inputs[0];
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "' expects true or false, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

QuestionSetting parse_setting(const std::string& v) {
  if (v == "general") return QuestionSetting::kGeneral;
  if (v == "specific") return QuestionSetting::kSpecific;
  throw std::invalid_argument("setting must be general or specific, got '" + v + "'");
}

KnowledgeSource parse_knowledge(const std::string& v) {
  if (v == "retrieved") return KnowledgeSource::kRetrieved;
  if (v == "gold") return KnowledgeSource::kGold;
  throw std::invalid_argument("knowledge must be retrieved or gold, got '" + v + "'");
}

void apply_judge_key(JudgeConfig& j, const std::string& key, const std::string& full, const std::string& v) {
  if (key == "endpoint") j.endpoint = v;
  else if (key == "model") j.model_name = v;
  else if (key == "temperature") j.temperature = parse_number<double>(full, v);
  else if (key == "seed") j.seed = parse_number<uint64_t>(full, v);
  else if (key == "timeout_ms") j.timeout = std::chrono::milliseconds(parse_number<long>(full, v));
  else if (key == "backoff_ms") j.backoff = std::chrono::milliseconds(parse_number<long>(full, v));
  else if (key == "max_inflight") j.max_inflight = parse_number<size_t>(full, v);
  else if (key == "max_attempts") j.max_attempts = parse_number<int>(full, v);
  else if (key == "api_key_env") j.api_key_env = v;
  else throw std::invalid_argument("unknown config key '" + full + "'");
}

// TOML-style file: top-level keys plus [generator], [nli] and [grader]
// sections. Relative paths are taken from the file's directory.
void apply_config_file(RunConfig& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& v) {
    fs::path p(v);
    return p.is_absolute() || v.empty() ? p : base / p;
  };
  CLI::ConfigTOML parser;
  for (const auto& item : parser.from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string full = item.fullname();
    if (item.parents.size() == 1) {
      const std::string& section = item.parents[0];
      JudgeConfig* j = section == "generator" ? &c.generator
                       : section == "nli"     ? &c.nli
                       : section == "grader"  ? &c.grader
                                              : nullptr;
      if (!j) throw std::invalid_argument("unknown config section [" + section + "]");
      if (section == "nli" && item.name == "threshold") {
        c.entailment_threshold = parse_number<double>(full, single(item));
      } else {
        apply_judge_key(*j, item.name, full, single(item));
      }
      continue;
    }
    if (!item.parents.empty()) throw std::invalid_argument("config nesting too deep at '" + full + "'");
    const std::string& k = item.name;
    if (k == "removals") {
      c.removals.clear();
      for (const auto& v : item.inputs) c.removals.push_back(parse_number<int>(full, v));
      continue;
    }
    if (k == "fractions") {
      c.fractions.clear();
      for (const auto& v : item.inputs) c.fractions.push_back(parse_number<double>(full, v));
      continue;
    }
    const std::string v = single(item);
    if (k == "seed") c.seed = parse_number<uint64_t>(full, v);
    else if (k == "store") c.store_path = resolve(v);
    else if (k == "dataset") c.dataset_path = resolve(v);
    else if (k == "out") c.output_dir = resolve(v);
    else if (k == "answers") c.answers_path = resolve(v);
    else if (k == "seeds") c.seeds_path = resolve(v);
    else if (k == "prompt_dir") c.prompt_dir = resolve(v);
    else if (k == "replay") c.replay_dir = resolve(v);
    else if (k == "scripted_answers") c.scripted_answers = resolve(v);
    else if (k == "mock") c.mock = v;
    else if (k == "judge_endpoint") c.generator.endpoint = c.nli.endpoint = v;
    else if (k == "setting") c.setting = parse_setting(v);
    else if (k == "knowledge") c.knowledge = parse_knowledge(v);
    else if (k == "na_offtopic_credit") c.na_offtopic_credit = parse_bool(full, v);
    else if (k == "correctness_pooling") {
      if (v == "corpus") c.pooling = CorrectnessPooling::kCorpus;
      else if (v == "per-answer") c.pooling = CorrectnessPooling::kPerAnswerMean;
      else throw std::invalid_argument("correctness_pooling must be corpus or per-answer");
    } else if (k == "coherence") {
      if (v == "softmax") c.coherence = CoherenceNormalization::kSoftmax;
      else if (v == "sum") c.coherence = CoherenceNormalization::kSum;
      else throw std::invalid_argument("coherence must be softmax or sum");
    } else if (k == "alpha") c.alpha = parse_number<double>(full, v);
    else if (k == "rounds") c.rounds = parse_number<int>(full, v);
    else if (k == "workers") c.workers = parse_number<size_t>(full, v);
    else throw std::invalid_argument("unknown config key '" + full + "'");
  }
}

RunConfig build_config(CLI::App& app, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) apply_config_file(c, f.config);
  auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  if (given("--seed")) c.seed = f.seed;
  if (given("--store")) c.store_path = f.store;
  if (given("--dataset")) c.dataset_path = f.dataset;
  if (given("--out")) c.output_dir = f.out;
  if (given("--answers")) c.answers_path = f.answers;
  if (given("--seeds")) c.seeds_path = f.seeds;
  if (given("--prompt-dir")) c.prompt_dir = f.prompt_dir;
  if (given("--replay")) c.replay_dir = f.replay;
  if (given("--scripted-answers")) c.scripted_answers = f.scripted;
  if (given("--judge-endpoint")) c.generator.endpoint = c.nli.endpoint = f.judge_endpoint;
  if (given("--model")) c.generator.model_name = c.nli.model_name = f.model;
  if (given("--mock")) {
    c.mock = f.mock;
    c.generator.endpoint = "mock";
  }
  if (given("--setting")) c.setting = parse_setting(f.setting);
  if (given("--knowledge")) c.knowledge = parse_knowledge(f.knowledge);
  if (given("--alpha")) c.alpha = f.alpha;
  if (given("--rounds")) c.rounds = f.rounds;
  if (given("--workers")) c.workers = f.workers;
  if (given("--fractions")) c.fractions = f.fractions;
  if (given("--removals")) c.removals = f.removals;
  if (given("--na-offtopic-credit")) c.na_offtopic_credit = f.offtopic;
  return c;
}

CommandResult cmd_synth(const RunConfig& c, const Flags& f) {
  if (c.output_dir.empty()) throw std::invalid_argument("no output directory (--out)");
  SyntheticOptions opt;
  opt.entries = f.synth_entries;
  opt.min_set_size = f.synth_min_set;
  opt.max_people = f.synth_max_people;
  opt.seed = c.seed;
  auto corpus = make_synthetic_corpus(opt);
  RunRecorder rec(c, "synth");
  std::ostringstream store, dataset;
  write_store(store, corpus.store, StoreFormat::kJsonl);
  write_dataset(dataset, corpus.entries);
  rec.write("store.jsonl", store.str());
  rec.write("dataset.jsonl", dataset.str());
  rec.finish(ojson::object());
  return {0, "wrote " + std::to_string(corpus.entries.size()) + " entries over " +
                 std::to_string(corpus.store.entity_count()) + " people"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph attribution benchmark toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "TOML-style config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Run seed");
  app.add_option("--store", f.store, "Knowledge store dump (.jsonl or .tsv)");
  app.add_option("--dataset", f.dataset, "Dataset JSONL");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--answers", f.answers, "Answers JSONL to evaluate (default <out>/answers.jsonl)");
  app.add_option("--seeds", f.seeds, "Seed paragraphs JSONL for construct");
  app.add_option("--prompt-dir", f.prompt_dir, "Directory overriding the built-in prompt templates");
  app.add_option("--replay", f.replay, "Earlier run directory whose transcripts answer all chat calls");
  app.add_option("--scripted-answers", f.scripted, "JSONL answers for the scripted mock");
  app.add_option("--judge-endpoint", f.judge_endpoint,
                 "OpenAI-compatible base URL for the generator and NLI judge, or 'mock'");
  app.add_option("--model", f.model, "Model name sent to the endpoint");
  app.add_option("--mock", f.mock, "Offline generator: faithful, gap-aware or scripted")
      ->check(CLI::IsMember({"faithful", "gap-aware", "scripted"}));
  app.add_option("--setting", f.setting, "Question setting: general or specific")
      ->check(CLI::IsMember({"general", "specific"}));
  app.add_option("--knowledge", f.knowledge, "Knowledge given to the generator: retrieved or gold")
      ->check(CLI::IsMember({"retrieved", "gold"}));
  app.add_option("--fractions", f.fractions, "Corruption fractions, comma separated")->delimiter(',');
  app.add_option("--removals", f.removals, "Knowledge removal counts, comma separated")->delimiter(',');
  app.add_option("--alpha", f.alpha, "Coherence/specificity trade-off in [0,1]");
  app.add_option("--rounds", f.rounds, "Evolution rounds");
  app.add_option("--workers", f.workers, "Concurrent work items");
  app.add_flag("--na-offtopic-credit", f.offtopic, "Credit [NA] sentences that do not answer the question");

  auto* retrieve = app.add_subcommand("retrieve", "Retrieve subgraphs and report retrieval accuracy");
  auto* generate = app.add_subcommand("generate", "Generate cited answers");
  auto* evaluate = app.add_subcommand("evaluate", "Score stored answers");
  auto* ablate_na = app.add_subcommand("ablate-na", "Knowledge-removal rounds with [NA] scoring");
  auto* ablate_ret = app.add_subcommand("ablate-retrieval", "Retrieval-corruption ladder");
  auto* construct = app.add_subcommand("construct", "Build dataset entries from seed paragraphs");
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic store and dataset");
  synth->add_option("--entries", f.synth_entries, "Entries");
  synth->add_option("--min-set-size", f.synth_min_set, "Minimum knowledge set size (0 = varied)");
  synth->add_option("--max-people", f.synth_max_people, "People per entry, at most");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig c = build_config(app, f);
    CommandResult r;
    if (*retrieve) r = cmd_retrieve(c);
    else if (*generate) r = cmd_generate(c);
    else if (*evaluate) r = cmd_evaluate(c);
    else if (*ablate_na) r = cmd_ablate_na(c);
    else if (*ablate_ret) r = cmd_ablate_retrieval(c);
    else if (*construct) r = cmd_construct(c);
    else if (*synth) r = cmd_synth(c, f);
    std::cout << r.summary << "\n";
    if (r.failures > 0) {
      std::cerr << r.failures << " item(s) failed; see the failures files under " << c.output_dir.string()
                << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
