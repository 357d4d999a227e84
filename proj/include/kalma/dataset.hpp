#pragma once

// Dataset entries: a general and a specific question, the minimum knowledge
// set and the people they are about. One JSON object per line:
//   {"general_question": ..., "specific_question": ...,
//    "minimum_knowledge_set": [["Q85907", "occupation", "biologist"], ...],
//    "people": ["Q85907", "Q68753"]}
// An optional trailing "id" names the entry; otherwise entries are q1, q2, ...
// in file order.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalma/error.hpp"
#include "kalma/kg_store.hpp"

namespace kalma {

enum class QuestionSetting { kGeneral, kSpecific };

struct DatasetEntry {
  std::string id;
  std::string general_question;
  std::string specific_question;
  std::vector<KnowledgeTriple> minimum_knowledge_set;  // file order kept
  std::vector<EntityId> people;

  const std::string& question(QuestionSetting s) const {
    return s == QuestionSetting::kGeneral ? general_question : specific_question;
  }

  TripleSet min_set() const {
    return TripleSet(minimum_knowledge_set.begin(), minimum_knowledge_set.end());
  }

  bool operator==(const DatasetEntry&) const = default;
};

inline std::string positional_id(size_t index) { return "q" + std::to_string(index + 1); }

inline nlohmann::ordered_json to_json(const DatasetEntry& e, bool with_id = false) {
  nlohmann::ordered_json j;
  j["general_question"] = e.general_question;
  j["specific_question"] = e.specific_question;
  auto ks = nlohmann::ordered_json::array();
  for (const auto& t : e.minimum_knowledge_set) {
    ks.push_back({t.subject().str(), t.relation(), t.object()});
  }
  j["minimum_knowledge_set"] = ks;
  auto ps = nlohmann::ordered_json::array();
  for (const auto& p : e.people) ps.push_back(p.str());
  j["people"] = ps;
  if (with_id) j["id"] = e.id;
  return j;
}

inline DatasetEntry dataset_entry_from_json(const nlohmann::json& j, size_t index,
                                            const std::string& source = "<memory>",
                                            size_t line = 0) {
  auto fail = [&](const std::string& what) { return ParseError(source, line, what); };
  if (!j.is_object()) throw fail("dataset entry is not an object");
  DatasetEntry e;
  try {
    e.general_question = j.at("general_question").get<std::string>();
    e.specific_question = j.at("specific_question").get<std::string>();
    for (const auto& k : j.at("minimum_knowledge_set")) {
      if (!k.is_array() || k.size() != 3) throw fail("knowledge must be [subject, relation, object]");
      e.minimum_knowledge_set.emplace_back(k[0].get<std::string>(), k[1].get<std::string>(),
                                           k[2].get<std::string>());
    }
    for (const auto& p : j.at("people")) e.people.emplace_back(p.get<std::string>());
    e.id = j.contains("id") ? j["id"].get<std::string>() : positional_id(index);
  } catch (const nlohmann::json::exception& ex) {
    throw fail(ex.what());
  } catch (const std::invalid_argument& ex) {
    throw fail(ex.what());
  }
  if (text::trim_view(e.general_question).empty() || text::trim_view(e.specific_question).empty()) {
    throw fail("empty question");
  }
  if (e.minimum_knowledge_set.empty()) throw fail("empty minimum knowledge set");
  return e;
}

inline std::vector<DatasetEntry> load_dataset(std::istream& in, const std::string& source = "<stream>") {
  std::vector<DatasetEntry> out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim_view(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(source, n, ex.what());
    }
    out.push_back(dataset_entry_from_json(j, out.size(), source, n));
  }
  std::set<std::string> ids;
  for (const auto& e : out) {
    if (!ids.insert(e.id).second) throw ParseError(source, 0, "duplicate entry id " + e.id);
  }
  return out;
}

inline std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return load_dataset(in, path.string());
}

// Ids are written only when they differ from the positional default.
inline void write_dataset(std::ostream& out, const std::vector<DatasetEntry>& entries) {
  for (size_t i = 0; i < entries.size(); ++i) {
    out << to_json(entries[i], entries[i].id != positional_id(i)).dump() << '\n';
  }
}

}  // namespace kalma
