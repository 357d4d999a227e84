#pragma once

// Prompt templates and their assembly. Templates use `{slot}` placeholders;
// any other brace text (the knowledge dictionaries in the demonstrations) is
// literal. Built-in copies live in prompt_assets.hpp; a directory of .txt
// files with the same names can override them.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kalma/error.hpp"
#include "kalma/judge_api.hpp"
#include "kalma/kg_store.hpp"
#include "kalma/prompt_assets.hpp"
#include "kalma/text.hpp"

namespace kalma {

inline constexpr const char* kPromptVersion = "1";

// Replaces `{name}` for every name in `slots`. Throws if a slot is never used,
// which catches a template/slot mismatch early. Text inside slot values is
// not re-scanned.
inline std::string fill_template(std::string_view tmpl,
                                 const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::set<std::string> used;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      size_t j = i + 1;
      while (j < tmpl.size() && ((tmpl[j] >= 'a' && tmpl[j] <= 'z') || tmpl[j] == '_')) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        std::string name(tmpl.substr(i + 1, j - i - 1));
        if (auto it = slots.find(name); it != slots.end()) {
          out += it->second;
          used.insert(name);
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  for (const auto& [name, _] : slots) {
    if (!used.count(name)) throw std::invalid_argument("template has no slot {" + name + "}");
  }
  return out;
}

class PromptLibrary {
 public:
  static const PromptLibrary& builtin() {
    static const PromptLibrary lib = [] {
      PromptLibrary l;
      for (const auto& a : prompt_assets::kAll) l.templates_[std::string(a.name)] = a.text;
      return l;
    }();
    return lib;
  }

  // Files named <template>.txt in `dir` replace the built-in of that name.
  static PromptLibrary from_directory(const std::filesystem::path& dir) {
    PromptLibrary l = builtin();
    if (!std::filesystem::is_directory(dir)) {
      throw Error("prompt directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      l.templates_[entry.path().stem().string()] = ss.str();
    }
    return l;
  }

  // File contents as stored, including the trailing newline.
  const std::string& raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw std::invalid_argument("unknown prompt template: " + name);
    return it->second;
  }

  // Template text without its final newline; this is what gets sent.
  std::string body(const std::string& name) const {
    std::string s = raw(name);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : templates_) out.push_back(n);
    return out;
  }

  // Hash over every template; recorded in reports.
  std::string fingerprint() const {
    std::string all;
    for (const auto& [n, t] : templates_) all += n + '\0' + t + '\0';
    return text::hex64(text::fnv1a64(all));
  }

 private:
  std::map<std::string, std::string> templates_;
};

// ---------------------------------------------------------------------------
// Knowledge rendering

enum class QidPlacement { kFirst, kLast };

// "{name: <center>, r1: o1, ..., qid: <id>}" (kLast) or
// "{qid: <id>, name: <center>, r1: o1, ...}" (kFirst). Object ids resolve to
// names through `store` when given. A "name" triple repeating the center's
// name is not printed twice.
inline std::string knowledge_dict(const SubGraph& g, const KnowledgeStore* store,
                                  QidPlacement placement = QidPlacement::kLast) {
  std::string out = "{";
  if (placement == QidPlacement::kFirst) out += "qid: " + g.center().id.str() + ", ";
  out += "name: " + g.center().name;
  for (const auto& t : g.triples()) {
    if (t.relation() == "name" && t.object() == g.center().name) continue;
    out += ", " + t.relation() + ": " + (store ? store->display_object(t.object()) : t.object());
  }
  if (placement == QidPlacement::kLast) out += ", qid: " + g.center().id.str();
  out += "}";
  return out;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Answer generation

inline GenerationRequest make_generation_request(std::string question_id, std::string question,
                                                 std::vector<SubGraph> graphs,
                                                 const KnowledgeStore* store,
                                                 const PromptLibrary& lib = PromptLibrary::builtin()) {
  GenerationRequest r;
  r.question_id = std::move(question_id);
  r.instruction = lib.body("generation_instruction");
  r.demonstration = lib.body("generation_demo");
  for (const auto& g : graphs) r.knowledge_block.push_back(knowledge_dict(g, store));
  r.question = std::move(question);
  r.knowledge = std::move(graphs);
  return r;
}

inline std::string generation_prompt(const GenerationRequest& r,
                                     const PromptLibrary& lib = PromptLibrary::builtin()) {
  if (text::trim_view(r.instruction).empty()) throw std::invalid_argument("empty instruction");
  if (text::trim_view(r.question).empty()) throw std::invalid_argument("empty question");
  return fill_template(lib.body("generation"), {{"instruction", r.instruction},
                                                {"demonstration", r.demonstration},
                                                {"knowledge", join_lines(r.knowledge_block)},
                                                {"question", r.question}});
}

// ---------------------------------------------------------------------------
// Judges

inline std::string nli_prompt(std::string_view premise, std::string_view hypothesis,
                              const PromptLibrary& lib = PromptLibrary::builtin()) {
  return fill_template(lib.body("nli"), {{"premise", std::string(premise)},
                                         {"hypothesis", std::string(hypothesis)}});
}

inline std::string geval_prompt(QualityMetric metric, std::string_view question,
                                std::string_view answer, std::string_view knowledge,
                                const PromptLibrary& lib = PromptLibrary::builtin()) {
  std::map<std::string, std::string> slots = {{"question", std::string(question)},
                                              {"answer", std::string(answer)}};
  if (metric == QualityMetric::kConsistency) slots["knowledge"] = std::string(knowledge);
  return fill_template(lib.body(std::string("geval_") + quality_metric_name(metric)), slots);
}

// ---------------------------------------------------------------------------
// Dataset construction

inline std::string annotate_prompt(std::string_view sentence, std::string_view knowledge,
                                   const PromptLibrary& lib = PromptLibrary::builtin()) {
  return fill_template(lib.body("annotate"), {{"sentence", std::string(sentence)},
                                              {"knowledge", std::string(knowledge)}});
}

inline std::string extend_prompt(std::string_view paragraph, std::string_view knowledge,
                                 const PromptLibrary& lib = PromptLibrary::builtin()) {
  return fill_template(lib.body("extend"), {{"paragraph", std::string(paragraph)},
                                            {"knowledge", std::string(knowledge)}});
}

enum class QuestionKind { kGeneral, kSpecific };

inline std::string question_prompt(QuestionKind kind, std::string_view paragraph,
                                   const PromptLibrary& lib = PromptLibrary::builtin()) {
  return fill_template(
      lib.body(kind == QuestionKind::kGeneral ? "general_question" : "specific_question"),
      {{"paragraph", std::string(paragraph)}});
}

}  // namespace kalma
