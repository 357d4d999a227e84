#pragma once

// Concrete generators and judges. Remote variants talk to a ChatClient (see
// http_client.hpp for the HTTP one); mocks are deterministic and offline.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalma/citation.hpp"
#include "kalma/error.hpp"
#include "kalma/judge_api.hpp"
#include "kalma/prompts.hpp"
#include "kalma/text.hpp"

namespace kalma {

// ---------------------------------------------------------------------------
// Chat transport

struct JudgeConfig {
  // "mock" or an OpenAI-compatible base URL such as http://localhost:8000/v1
  std::string endpoint = "mock";
  std::string model_name;
  double temperature = 0.0;
  uint64_t seed = 0;
  std::chrono::milliseconds timeout{60000};
  size_t max_inflight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  std::string api_key_env = "KALMA_API_KEY";

  bool is_mock() const { return endpoint == "mock"; }
};

inline void validate_judge_config(const JudgeConfig& c) {
  if (c.endpoint.empty()) throw std::invalid_argument("judge endpoint is empty");
  if (!(c.temperature >= 0.0)) throw std::invalid_argument("judge temperature must be >= 0");
  if (c.max_inflight < 1) throw std::invalid_argument("max_inflight must be >= 1");
  if (c.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!c.is_mock() && c.model_name.empty()) {
    throw std::invalid_argument("remote judge " + c.endpoint + " needs a model name");
  }
}

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  uint64_t seed = 0;
  std::string prompt;  // sent as a single user message

  nlohmann::json to_json() const {
    return {{"model", model},
            {"temperature", temperature},
            {"seed", seed},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  }

  // Stable key for transcripts.
  std::string hash() const { return text::hex64(text::fnv1a64(to_json().dump())); }
};

inline ChatRequest make_chat_request(const JudgeConfig& c, std::string prompt) {
  return {c.model_name, c.temperature, c.seed, std::move(prompt)};
}

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the first completion's message content.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string identity() const = 0;
};

// Appends one JSONL line per call: {request_hash, response_hash, response}.
class RecordingChatClient : public ChatClient {
 public:
  RecordingChatClient(ChatClient& inner, const std::filesystem::path& path)
      : inner_(inner), out_(path, std::ios::app) {
    if (!out_) throw Error("cannot open transcript " + path.string());
  }

  std::string complete(const ChatRequest& request) override {
    std::string response = inner_.complete(request);
    nlohmann::json line = {{"request_hash", request.hash()},
                           {"response_hash", text::hex64(text::fnv1a64(response))},
                           {"response", response}};
    std::lock_guard<std::mutex> lock(mu_);
    out_ << line.dump() << '\n';
    out_.flush();
    return response;
  }

  std::string identity() const override { return inner_.identity(); }

 private:
  ChatClient& inner_;
  std::ofstream out_;
  std::mutex mu_;
};

// Serves responses from a transcript; never touches the network.
class ReplayChatClient : public ChatClient {
 public:
  explicit ReplayChatClient(const std::filesystem::path& path, std::string identity = "replay")
      : identity_(std::move(identity)) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open transcript " + path.string());
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim_view(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        responses_.emplace(j.at("request_hash").get<std::string>(),
                           j.at("response").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), n, e.what());
      }
    }
  }

  std::string complete(const ChatRequest& request) override {
    auto it = responses_.find(request.hash());
    if (it == responses_.end()) {
      throw JudgeError("no transcript entry for request " + request.hash());
    }
    return it->second;
  }

  std::string identity() const override { return identity_; }
  size_t size() const { return responses_.size(); }

 private:
  std::string identity_;
  std::map<std::string, std::string> responses_;
};

// ---------------------------------------------------------------------------
// Reply parsing

// Accepts a probability ("0.83"), a binary label ("1", "entailment",
// "not_entailment", "yes") or a JSON object with "label" or "score".
inline EntailmentVerdict parse_entailment_reply(std::string_view reply,
                                                double threshold = kDefaultEntailmentThreshold) {
  std::string s = text::to_lower(text::trim(reply));
  auto fail = [&] {
    return JudgeError("unparseable entailment reply: '" + std::string(reply) + "'");
  };
  if (s.empty()) throw fail();
  if (s.front() == '{') {
    nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_object()) {
      for (const char* key : {"score", "probability", "prob"}) {
        if (j.contains(key) && j[key].is_number()) {
          return EntailmentVerdict::from_score(j[key].get<double>(), threshold);
        }
      }
      if (j.contains("label")) {
        if (j["label"].is_string()) return parse_entailment_reply(j["label"].get<std::string>());
        if (j["label"].is_number()) return parse_entailment_reply(j["label"].dump());
      }
    }
    throw fail();
  }
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() && text::trim_view(std::string_view(end)).empty()) {
    if (v < 0.0 || v > 1.0) throw fail();
    return EntailmentVerdict::from_score(v, threshold);
  }
  static const std::set<std::string> yes = {"entailment", "entailed", "entails", "yes", "true"};
  static const std::set<std::string> no = {"not_entailment", "not entailment", "not entailed",
                                           "contradiction", "neutral", "no", "false"};
  std::string word = s;
  while (!word.empty() && (word.back() == '.' || word.back() == '!')) word.pop_back();
  if (yes.count(word)) return {true, std::nullopt};
  if (no.count(word)) return {false, std::nullopt};
  throw fail();
}

// First standalone integer in 1..5, e.g. "Score: 5 because..." gives 5.
inline int parse_grade(std::string_view reply) {
  size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
      size_t j = i;
      while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
      if (j - i == 1 && reply[i] >= '1' && reply[i] <= '5') return reply[i] - '0';
      i = j;
    } else {
      ++i;
    }
  }
  throw JudgeError("no 1-5 grade in reply: '" + std::string(reply) + "'");
}

// ---------------------------------------------------------------------------
// Remote roles over a ChatClient

class ChatGenerator : public Generator {
 public:
  ChatGenerator(ChatClient& client, JudgeConfig config,
                const PromptLibrary& lib = PromptLibrary::builtin())
      : client_(client), config_(std::move(config)), lib_(lib) {}

  std::string generate(const GenerationRequest& request) override {
    std::string reply = client_.complete(make_chat_request(config_, generation_prompt(request, lib_)));
    if (text::trim_view(reply).empty()) {
      throw JudgeError("empty completion for question " + request.question_id);
    }
    return reply;
  }

  std::string identity() const override { return "chat:" + config_.model_name; }

 private:
  ChatClient& client_;
  JudgeConfig config_;
  const PromptLibrary& lib_;
};

class ChatEntailmentJudge : public EntailmentJudge {
 public:
  ChatEntailmentJudge(ChatClient& client, JudgeConfig config, double threshold = kDefaultEntailmentThreshold,
                      const PromptLibrary& lib = PromptLibrary::builtin())
      : client_(client), config_(std::move(config)), threshold_(threshold), lib_(lib) {}

  EntailmentVerdict entails(std::string_view premise, std::string_view hypothesis) override {
    if (text::trim_view(premise).empty() || text::trim_view(hypothesis).empty()) {
      throw std::invalid_argument("entailment query with empty premise or hypothesis");
    }
    return parse_entailment_reply(
        client_.complete(make_chat_request(config_, nli_prompt(premise, hypothesis, lib_))),
        threshold_);
  }

  std::string identity() const override { return "chat:" + config_.model_name; }

 private:
  ChatClient& client_;
  JudgeConfig config_;
  double threshold_;
  const PromptLibrary& lib_;
};

class ChatTextGrader : public TextGrader {
 public:
  ChatTextGrader(ChatClient& client, JudgeConfig config,
                 const PromptLibrary& lib = PromptLibrary::builtin())
      : client_(client), config_(std::move(config)), lib_(lib) {}

  int grade(std::string_view, std::string_view question, std::string_view answer,
            QualityMetric metric, std::string_view knowledge) override {
    return parse_grade(client_.complete(
        make_chat_request(config_, geval_prompt(metric, question, answer, knowledge, lib_))));
  }

  std::string identity() const override { return "chat:" + config_.model_name; }

 private:
  ChatClient& client_;
  JudgeConfig config_;
  const PromptLibrary& lib_;
};

// ---------------------------------------------------------------------------
// Offline mocks

// Returns a fixed answer per question id.
class ScriptedGenerator : public Generator {
 public:
  explicit ScriptedGenerator(std::map<std::string, std::string> answers)
      : answers_(std::move(answers)) {}

  // JSONL of {question_id, raw_text}.
  static ScriptedGenerator load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scripted answers " + path.string());
    std::map<std::string, std::string> answers;
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim_view(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        answers[j.at("question_id").get<std::string>()] = j.at("raw_text").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), n, e.what());
      }
    }
    return ScriptedGenerator(std::move(answers));
  }

  std::string generate(const GenerationRequest& request) override {
    auto it = answers_.find(request.question_id);
    if (it == answers_.end()) throw JudgeError("no scripted answer for " + request.question_id);
    return it->second;
  }

  std::string identity() const override { return "mock:scripted"; }

 private:
  std::map<std::string, std::string> answers_;
};

namespace detail {

inline std::string fact_sentence(const std::string& subject_name, const KnowledgeTriple& t) {
  return subject_name + "'s " + t.relation() + " is " + t.object();
}

inline std::string cite_graphs(const std::vector<SubGraph>& graphs) {
  std::string out;
  for (const auto& g : graphs) {
    for (const auto& t : g.triples()) {
      if (!citable(t)) continue;
      if (!out.empty()) out.push_back(' ');
      out += fact_sentence(g.center().name, t) + " [" + t.subject().str() + ", " +
             t.relation() + ": " + t.object() + "].";
    }
  }
  return out;
}

}  // namespace detail

// One sentence per provided triple, each citing exactly that triple. Triples
// the citation grammar cannot express (commas in values, "name" echoes) are
// left out.
class FaithfulCiter : public Generator {
 public:
  std::string generate(const GenerationRequest& request) override {
    return detail::cite_graphs(request.knowledge);
  }
  std::string identity() const override { return "mock:faithful"; }
};

// Faithful citer that also states every parametric fact missing from the
// provided graphs, marking those sentences [NA].
class GapAwareCiter : public Generator {
 public:
  std::string generate(const GenerationRequest& request) override {
    std::string out = detail::cite_graphs(request.knowledge);
    std::map<EntityId, std::string> names;
    TripleSet provided;
    for (const auto& g : request.knowledge) {
      names[g.center().id] = g.center().name;
      provided.insert(g.triples().begin(), g.triples().end());
    }
    for (const auto& t : request.parametric_knowledge) {
      if (provided.count(t)) continue;
      auto it = names.find(t.subject());
      std::string subject = it == names.end() ? t.subject().str() : it->second;
      if (!out.empty()) out.push_back(' ');
      out += detail::fact_sentence(subject, t) + " [NA].";
    }
    return out;
  }
  std::string identity() const override { return "mock:gap-aware"; }
};

namespace detail {

inline const std::set<std::string>& mock_stopwords() {
  static const std::set<std::string> words = {
      "a", "an", "and", "as", "at", "by", "de", "for", "from", "in", "is",
      "of", "on", "or", "the", "to", "was", "with"};
  return words;
}

inline std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& tok : text::word_tokens(s)) {
    std::string low = text::to_lower(tok);
    if (!mock_stopwords().count(low)) out.push_back(low);
  }
  return out;
}

}  // namespace detail

// Lexical stand-in for an NLI model: entailed iff every content token of the
// hypothesis value (the part after "relation: ") occurs in the premise,
// case-insensitively. Not a fidelity claim.
class LexicalEntailmentJudge : public EntailmentJudge {
 public:
  EntailmentVerdict entails(std::string_view premise, std::string_view hypothesis) override {
    std::string_view value = hypothesis;
    if (size_t colon = hypothesis.find(": "); colon != std::string_view::npos) {
      value = hypothesis.substr(colon + 2);
    }
    auto need = detail::content_tokens(value);
    if (need.empty()) return {false, 0.0};
    auto have_list = detail::content_tokens(premise);
    std::set<std::string> have(have_list.begin(), have_list.end());
    for (const auto& w : need) {
      if (!have.count(w)) return {false, 0.0};
    }
    return {true, 1.0};
  }
  std::string identity() const override { return "mock:lexical"; }
};

// Off-topic iff the sentence shares no content token with the question.
class LexicalRelevanceJudge : public RelevanceJudge {
 public:
  bool off_topic(std::string_view question, std::string_view sentence) override {
    auto q = detail::content_tokens(question);
    std::set<std::string> qs(q.begin(), q.end());
    for (const auto& w : detail::content_tokens(sentence)) {
      if (qs.count(w)) return false;
    }
    return true;
  }
};

// Scores from a table keyed by (question key, metric); `fallback` answers
// anything not in the table, otherwise a miss is an error.
class ScriptedTextGrader : public TextGrader {
 public:
  using Table = std::map<std::pair<std::string, QualityMetric>, int>;

  explicit ScriptedTextGrader(Table table, std::optional<int> fallback = std::nullopt)
      : table_(std::move(table)), fallback_(fallback) {
    for (const auto& [_, v] : table_) check(v);
    if (fallback_) check(*fallback_);
  }

  int grade(std::string_view key, std::string_view, std::string_view, QualityMetric metric,
            std::string_view) override {
    auto it = table_.find({std::string(key), metric});
    if (it != table_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw JudgeError("no scripted " + std::string(quality_metric_name(metric)) + " grade for " +
                     std::string(key));
  }

  std::string identity() const override { return "mock:scripted-grader"; }

 private:
  static void check(int v) {
    if (v < 1 || v > 5) throw std::invalid_argument("grade outside 1..5: " + std::to_string(v));
  }
  Table table_;
  std::optional<int> fallback_;
};

inline TextQualityScores grade_all(TextGrader& grader, std::string_view key,
                                   std::string_view question, std::string_view answer,
                                   std::string_view knowledge) {
  TextQualityScores s;
  for (auto m : kQualityMetrics) {
    int v = grader.grade(key, question, answer, m, knowledge);
    if (v < 1 || v > 5) {
      throw JudgeError(std::string(quality_metric_name(m)) + " grade outside 1..5: " +
                       std::to_string(v));
    }
    s.set(m, v);
  }
  return s;
}

}  // namespace kalma
