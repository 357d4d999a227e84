#pragma once

// Local triple store: entities, one-hop adjacency and a normalized name index,
// plus the two graph transforms the ablation harnesses are built on
// (knowledge removal and retrieval corruption).
//
// Dump format, one record per line:
//   jsonl: {"subject_id","subject_name","subject_type","relation","object"}
//   tsv:   the same five columns, tab separated
// A record with empty relation and object only declares its entity.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "kalma/error.hpp"
#include "kalma/rng.hpp"
#include "kalma/text.hpp"

namespace kalma {

// Opaque WikiData-style identifier ("Q212657").
class EntityId {
 public:
  explicit EntityId(std::string value) : value_(text::trim(value)) {
    if (value_.empty()) throw std::invalid_argument("empty entity id");
  }

  const std::string& str() const { return value_; }

  auto operator<=>(const EntityId&) const = default;
  bool operator==(const EntityId&) const = default;

 private:
  std::string value_;
};

inline std::ostream& operator<<(std::ostream& os, const EntityId& id) {
  return os << id.str();
}

struct Entity {
  EntityId id;
  std::string name;
  std::string type;

  bool operator==(const Entity&) const = default;
};

// (subject, relation, object). All parts are trimmed on construction and
// compared by exact string equality.
class KnowledgeTriple {
 public:
  KnowledgeTriple(EntityId subject, std::string_view relation,
                  std::string_view object)
      : subject_(std::move(subject)),
        relation_(text::trim(relation)),
        object_(text::trim(object)) {
    if (relation_.empty()) throw std::invalid_argument("empty relation");
    if (object_.empty()) throw std::invalid_argument("empty object");
  }

  KnowledgeTriple(std::string_view subject, std::string_view relation,
                  std::string_view object)
      : KnowledgeTriple(EntityId(std::string(subject)), relation, object) {}

  const EntityId& subject() const { return subject_; }
  const std::string& relation() const { return relation_; }
  const std::string& object() const { return object_; }

  auto operator<=>(const KnowledgeTriple&) const = default;
  bool operator==(const KnowledgeTriple&) const = default;

 private:
  EntityId subject_;
  std::string relation_;
  std::string object_;
};

using TripleSet = std::set<KnowledgeTriple>;

inline std::ostream& operator<<(std::ostream& os, const KnowledgeTriple& t) {
  return os << "(" << t.subject() << ", " << t.relation() << ", " << t.object()
            << ")";
}

// Entity-centred one-hop graph: every triple has subject == center.id.
class SubGraph {
 public:
  explicit SubGraph(Entity center) : center_(std::move(center)) {}

  SubGraph(Entity center, const TripleSet& triples)
      : center_(std::move(center)) {
    for (const auto& t : triples) insert(t);
  }

  void insert(const KnowledgeTriple& t) {
    if (t.subject() != center_.id) {
      throw std::invalid_argument("triple subject " + t.subject().str() +
                                  " does not match subgraph center " +
                                  center_.id.str());
    }
    triples_.insert(t);
  }

  bool erase(const KnowledgeTriple& t) { return triples_.erase(t) > 0; }

  const Entity& center() const { return center_; }
  const TripleSet& triples() const { return triples_; }
  size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  bool contains(const KnowledgeTriple& t) const { return triples_.count(t) > 0; }

  bool operator==(const SubGraph&) const = default;

 private:
  Entity center_;
  TripleSet triples_;
};

enum class StoreFormat { kJsonl, kTsv };

inline StoreFormat store_format_from_path(const std::filesystem::path& path) {
  auto ext = text::to_lower(path.extension().string());
  return ext == ".tsv" ? StoreFormat::kTsv : StoreFormat::kJsonl;
}

struct StoreRecord {
  std::string subject_id;
  std::string subject_name;
  std::string subject_type;
  std::string relation;
  std::string object;
};

class KnowledgeStore {
 public:
  // Adds one dump record. Throws ParseError (tagged with source/line) when the
  // record is incomplete or contradicts an earlier declaration of its entity.
  void add(const StoreRecord& rec, const std::string& source = "<memory>",
           size_t line = 0) {
    auto fail = [&](const std::string& msg) {
      throw ParseError(source, line, msg);
    };
    std::string id = text::trim(rec.subject_id);
    std::string name = text::collapse_whitespace(rec.subject_name);
    std::string type = text::trim(rec.subject_type);
    std::string relation = text::trim(rec.relation);
    std::string object = text::trim(rec.object);
    if (id.empty()) fail("missing subject_id");
    if (name.empty()) fail("missing subject_name for " + id);
    if (type.empty()) fail("missing subject_type for " + id);
    if (relation.empty() != object.empty()) {
      fail("relation and object must both be present for " + id);
    }

    EntityId eid(id);
    auto it = entities_.find(eid);
    if (it == entities_.end()) {
      entities_.emplace(eid, Entity{eid, name, type});
      name_index_[text::normalize_name(name)].insert(eid);
      types_.insert(type);
    } else {
      if (it->second.name != name) {
        fail("conflicting names for " + id + ": '" + it->second.name +
             "' vs '" + name + "'");
      }
      if (it->second.type != type) {
        fail("conflicting types for " + id + ": '" + it->second.type +
             "' vs '" + type + "'");
      }
    }
    auto& adj = adjacency_[eid];
    if (!relation.empty()) adj.insert(KnowledgeTriple(eid, relation, object));
  }

  bool contains(const EntityId& id) const { return entities_.count(id) > 0; }

  const Entity* find(const EntityId& id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
  }

  const Entity& entity(const EntityId& id) const {
    const Entity* e = find(id);
    if (!e) throw UnknownEntityError(id.str());
    return *e;
  }

  size_t entity_count() const { return entities_.size(); }

  size_t triple_count() const {
    size_t n = 0;
    for (const auto& [_, adj] : adjacency_) n += adj.size();
    return n;
  }

  const std::set<std::string>& types() const { return types_; }
  const std::map<EntityId, Entity>& entities() const { return entities_; }
  const std::map<std::string, std::set<EntityId>>& name_index() const {
    return name_index_;
  }

  // All ids whose normalized name equals the normalized query, sorted by id.
  std::vector<EntityId> find_nodes_by_name(
      std::string_view name,
      const std::optional<std::string>& type_filter = std::nullopt) const {
    std::vector<EntityId> out;
    auto it = name_index_.find(text::normalize_name(name));
    if (it == name_index_.end()) return out;
    for (const auto& id : it->second) {
      if (type_filter && entities_.at(id).type != *type_filter) continue;
      out.push_back(id);
    }
    return out;
  }

  SubGraph neighborhood(const EntityId& id) const {
    SubGraph g(entity(id));
    auto it = adjacency_.find(id);
    if (it != adjacency_.end()) {
      for (const auto& t : it->second) g.insert(t);
    }
    return g;
  }

  // Object values that are entity ids in this store render as the entity's
  // name; everything else (literals, unknown ids) renders verbatim.
  std::string display_object(const std::string& object) const {
    auto it = entities_.find(EntityId(object));
    return it == entities_.end() ? object : it->second.name;
  }

  // "<center name> - <relation> - <object>" per triple, ordered by relation
  // then object.
  std::vector<std::string> flatten(const SubGraph& g) const {
    std::vector<std::string> out;
    out.reserve(g.size());
    for (const auto& t : g.triples()) {
      out.push_back(g.center().name + " - " + t.relation() + " - " +
                    display_object(t.object()));
    }
    return out;
  }

  std::vector<StoreRecord> records() const {
    std::vector<StoreRecord> out;
    for (const auto& [id, e] : entities_) {
      auto it = adjacency_.find(id);
      if (it == adjacency_.end() || it->second.empty()) {
        out.push_back({id.str(), e.name, e.type, "", ""});
        continue;
      }
      for (const auto& t : it->second) {
        out.push_back({id.str(), e.name, e.type, t.relation(), t.object()});
      }
    }
    return out;
  }

 private:
  std::map<EntityId, Entity> entities_;
  std::map<EntityId, TripleSet> adjacency_;
  std::map<std::string, std::set<EntityId>> name_index_;
  std::set<std::string> types_;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

inline std::string json_string_field(const nlohmann::json& obj,
                                     const char* key, bool required,
                                     const std::string& source, size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ParseError(source, line, std::string("missing key '") + key + "'");
    return {};
  }
  if (!it->is_string()) {
    throw ParseError(source, line, std::string("key '") + key + "' is not a string");
  }
  return it->get<std::string>();
}

}  // namespace detail

inline KnowledgeStore load_store(std::istream& in, StoreFormat format,
                                 const std::string& source = "<stream>") {
  KnowledgeStore store;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim_view(line).empty()) continue;
    StoreRecord rec;
    if (format == StoreFormat::kJsonl) {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) throw ParseError(source, lineno, "record is not an object");
      rec.subject_id = detail::json_string_field(obj, "subject_id", true, source, lineno);
      rec.subject_name = detail::json_string_field(obj, "subject_name", true, source, lineno);
      rec.subject_type = detail::json_string_field(obj, "subject_type", true, source, lineno);
      rec.relation = detail::json_string_field(obj, "relation", false, source, lineno);
      rec.object = detail::json_string_field(obj, "object", false, source, lineno);
    } else {
      if (line.front() == '#') continue;
      auto cols = detail::split_tabs(line);
      if (lineno == 1 && !cols.empty() && cols[0] == "subject_id") continue;
      if (cols.size() == 3) cols.resize(5);
      if (cols.size() != 5) {
        throw ParseError(source, lineno,
                         "expected 5 tab-separated columns, got " +
                             std::to_string(cols.size()));
      }
      rec = {cols[0], cols[1], cols[2], cols[3], cols[4]};
    }
    store.add(rec, source, lineno);
  }
  return store;
}

inline KnowledgeStore load_store(const std::filesystem::path& path,
                                 StoreFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open store file: " + path.string());
  return load_store(in, format, path.string());
}

inline KnowledgeStore load_store(const std::filesystem::path& path) {
  return load_store(path, store_format_from_path(path));
}

inline void write_store(std::ostream& out, const KnowledgeStore& store,
                        StoreFormat format) {
  for (const auto& r : store.records()) {
    if (format == StoreFormat::kJsonl) {
      nlohmann::ordered_json j;
      j["subject_id"] = r.subject_id;
      j["subject_name"] = r.subject_name;
      j["subject_type"] = r.subject_type;
      j["relation"] = r.relation;
      j["object"] = r.object;
      out << j.dump() << '\n';
    } else {
      out << r.subject_id << '\t' << r.subject_name << '\t' << r.subject_type
          << '\t' << r.relation << '\t' << r.object << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Transforms

struct RemovalResult {
  SubGraph graph;
  TripleSet absent;
};

// Deletes `victims` from `g`. The removed triples become the absent-knowledge
// ground truth for [NA] scoring.
inline RemovalResult remove_knowledge(const SubGraph& g, const TripleSet& victims) {
  SubGraph reduced = g;
  for (const auto& v : victims) {
    if (!reduced.erase(v)) {
      std::ostringstream msg;
      msg << "cannot remove " << v << ": not in subgraph of "
          << g.center().id;
      throw std::invalid_argument(msg.str());
    }
  }
  return {std::move(reduced), victims};
}

// round-half-up(fraction * n)
inline size_t corruption_count(size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("corruption fraction must lie in [0,1]");
  }
  auto k = static_cast<size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
  return std::min(k, n);
}

// Replacement order for a corpus of n slots. Slot order[i] is replaced when
// i < corruption_count(n, f), so for one seed a larger fraction always
// corrupts a superset of the slots a smaller one does.
struct CorruptionPlan {
  std::vector<size_t> slot_order;
  std::vector<size_t> decoy_order;
};

inline CorruptionPlan plan_corruption(size_t n_slots, size_t n_decoys,
                                      uint64_t seed) {
  Rng rng(seed);
  CorruptionPlan plan;
  plan.slot_order = rng.permutation(n_slots);
  plan.decoy_order = rng.permutation(n_decoys);
  return plan;
}

// Replaces round(fraction * n) graphs, chosen uniformly without replacement,
// by decoys (also drawn without replacement).
inline std::vector<SubGraph> corrupt_retrieval(std::span<const SubGraph> graphs,
                                               double fraction,
                                               std::span<const SubGraph> decoys,
                                               uint64_t seed) {
  const size_t k = corruption_count(graphs.size(), fraction);
  std::vector<SubGraph> out(graphs.begin(), graphs.end());
  if (k == 0) return out;
  if (decoys.size() < k) {
    throw std::invalid_argument("insufficient decoys: need " +
                                std::to_string(k) + ", have " +
                                std::to_string(decoys.size()));
  }
  std::set<EntityId> centers;
  for (const auto& g : graphs) centers.insert(g.center().id);
  for (const auto& d : decoys) {
    if (centers.count(d.center().id)) {
      throw std::invalid_argument("decoy center " + d.center().id.str() +
                                  " overlaps the graphs being corrupted");
    }
  }
  auto plan = plan_corruption(graphs.size(), decoys.size(), seed);
  for (size_t i = 0; i < k; ++i) {
    out[plan.slot_order[i]] = decoys[plan.decoy_order[i]];
  }
  return out;
}

}  // namespace kalma
