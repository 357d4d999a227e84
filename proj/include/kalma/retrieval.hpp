#pragma once

// Question -> subgraphs: mention extraction, type-filtered candidate lookup and
// exact-match re-ranking of namesakes against the question text.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalma/error.hpp"
#include "kalma/kg_store.hpp"
#include "kalma/text.hpp"

namespace kalma {

struct EntityMention {
  std::string surface;
  std::string mention_type;
  size_t start = 0;
  size_t end = 0;
  // Name used for the store lookup. Equals `surface` except for coordinated
  // names ("Oscar and Richard Hertwig" yields surface "Oscar", lookup
  // "Oscar Hertwig").
  std::string lookup_name;

  bool operator==(const EntityMention&) const = default;
};

// Pre-computed mentions from an external NER tool, keyed by question id.
// JSONL records: {question_id, surface, mention_type, start, end}.
class ExternalMentions {
 public:
  static ExternalMentions load(std::istream& in, const std::string& source = "<mentions>") {
    ExternalMentions out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim_view(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        EntityMention m;
        m.surface = j.at("surface").get<std::string>();
        m.mention_type = j.at("mention_type").get<std::string>();
        m.start = j.at("start").get<size_t>();
        m.end = j.at("end").get<size_t>();
        m.lookup_name = m.surface;
        out.by_question_[j.at("question_id").get<std::string>()].push_back(std::move(m));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(source, lineno, e.what());
      }
    }
    return out;
  }

  void add(const std::string& question_id, EntityMention m) {
    if (m.lookup_name.empty()) m.lookup_name = m.surface;
    by_question_[question_id].push_back(std::move(m));
  }

  const std::vector<EntityMention>* find(const std::string& question_id) const {
    auto it = by_question_.find(question_id);
    return it == by_question_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, std::vector<EntityMention>> by_question_;
};

enum class ExtractorMode { kGazetteer, kExternal };

struct ExtractorConfig {
  ExtractorMode mode = ExtractorMode::kGazetteer;
  // mention type -> store entity type used as the candidate filter
  std::map<std::string, std::string> type_map = {{"person", "human"}};
  const ExternalMentions* external = nullptr;
};

inline void validate_extractor_config(const ExtractorConfig& config,
                                      const KnowledgeStore& store) {
  for (const auto& [mention_type, entity_type] : config.type_map) {
    if (!store.types().count(entity_type)) {
      throw std::invalid_argument("type_map maps '" + mention_type + "' to '" +
                                  entity_type + "', which the store does not declare");
    }
  }
  if (config.mode == ExtractorMode::kExternal && !config.external) {
    throw std::invalid_argument("external extractor mode needs a mention source");
  }
}

namespace detail {

struct Token {
  size_t begin;
  size_t end;
  std::string folded;
};

inline std::vector<Token> tokenize_with_offsets(std::string_view s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !text::is_word_char(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && text::is_word_char(s[j])) ++j;
    if (j > i) out.push_back({i, j, text::to_lower(s.substr(i, j - i))});
    i = j;
  }
  return out;
}

inline std::string mention_type_for(const KnowledgeStore& store,
                                     const std::set<EntityId>& ids,
                                     const ExtractorConfig& config) {
  std::set<std::string> types;
  for (const auto& id : ids) types.insert(store.entity(id).type);
  for (const auto& [mention_type, entity_type] : config.type_map) {
    if (types.count(entity_type)) return mention_type;
  }
  return *types.begin();
}

}  // namespace detail

// Gazetteer mode: maximal non-overlapping matches of store names, scanning left
// to right and taking the longest name at each position. Matching is
// case-insensitive and token aligned. A single capitalised word coordinated
// with a matched full name ("Oscar and Richard Hertwig", "Oscar, Richard
// Hertwig") becomes a mention of "<word> <rest of name>" when the store knows
// that name.
inline std::vector<EntityMention> extract_entities(std::string_view question,
                                                   const ExtractorConfig& config,
                                                   const KnowledgeStore& store,
                                                   const std::string& question_id = "") {
  if (config.mode == ExtractorMode::kExternal) {
    std::vector<EntityMention> out;
    const auto* found = config.external ? config.external->find(question_id) : nullptr;
    if (!found) return out;
    for (auto m : *found) {
      if (!(m.start < m.end && m.end <= question.size()) ||
          question.substr(m.start, m.end - m.start) != m.surface) {
        throw std::invalid_argument("external mention '" + m.surface +
                                    "' does not match its span in question " + question_id);
      }
      if (m.lookup_name.empty()) m.lookup_name = m.surface;
      out.push_back(std::move(m));
    }
    return out;
  }

  auto tokens = detail::tokenize_with_offsets(question);
  // first folded token of each indexed name -> (normalized name, token count)
  std::map<std::string, std::vector<std::pair<std::string, size_t>>> by_first;
  for (const auto& [norm, ids] : store.name_index()) {
    auto name_tokens = detail::tokenize_with_offsets(norm);
    if (name_tokens.empty()) continue;
    by_first[name_tokens.front().folded].emplace_back(norm, name_tokens.size());
  }

  struct Match {
    size_t first_token;
    size_t n_tokens;
    std::string norm;
  };
  std::vector<Match> matches;
  for (size_t i = 0; i < tokens.size();) {
    auto it = by_first.find(tokens[i].folded);
    std::optional<Match> best;
    if (it != by_first.end()) {
      for (const auto& [norm, n] : it->second) {
        if (i + n > tokens.size()) continue;
        std::string_view slice =
            question.substr(tokens[i].begin, tokens[i + n - 1].end - tokens[i].begin);
        if (text::normalize_name(slice) != norm) continue;
        if (!best || n > best->n_tokens ||
            (n == best->n_tokens && norm.size() > best->norm.size())) {
          best = Match{i, n, norm};
        }
      }
    }
    if (best) {
      matches.push_back(*best);
      i += best->n_tokens;
    } else {
      ++i;
    }
  }

  std::vector<EntityMention> out;
  std::vector<bool> covered(tokens.size(), false);
  for (const auto& m : matches) {
    for (size_t k = 0; k < m.n_tokens; ++k) covered[m.first_token + k] = true;
  }
  auto make = [&](size_t begin, size_t end, const std::string& norm) {
    EntityMention em;
    em.start = begin;
    em.end = end;
    em.surface = std::string(question.substr(begin, end - begin));
    const auto& ids = store.name_index().at(norm);
    em.lookup_name = store.entity(*ids.begin()).name;
    em.mention_type = detail::mention_type_for(store, ids, config);
    return em;
  };

  for (const auto& m : matches) {
    // Coordinated given names sharing this match's surname, nearest first.
    std::vector<EntityMention> coordinated;
    if (m.n_tokens >= 2) {
      size_t rest_begin = tokens[m.first_token + 1].begin;
      std::string rest(question.substr(
          rest_begin, tokens[m.first_token + m.n_tokens - 1].end - rest_begin));
      size_t t = m.first_token;
      while (t >= 1) {
        size_t w = t - 1;
        std::string_view gap = question.substr(tokens[w].end, tokens[t].begin - tokens[w].end);
        bool linked = text::collapse_whitespace(gap) == ",";
        size_t word = w;
        if (!linked && tokens[w].folded == "and" && w >= 1) {
          std::string_view g1 =
              question.substr(tokens[w - 1].end, tokens[w].begin - tokens[w - 1].end);
          std::string_view g2 = question.substr(tokens[w].end, tokens[t].begin - tokens[w].end);
          linked = text::trim_view(g1).empty() || text::collapse_whitespace(g1) == ",";
          linked = linked && text::trim_view(g2).empty();
          word = w - 1;
        }
        if (!linked || covered[word]) break;
        char lead = question[tokens[word].begin];
        if (!(lead >= 'A' && lead <= 'Z')) break;
        std::string candidate = text::normalize_name(
            std::string(question.substr(tokens[word].begin, tokens[word].end - tokens[word].begin)) +
            " " + rest);
        if (!store.name_index().count(candidate)) break;
        coordinated.push_back(make(tokens[word].begin, tokens[word].end, candidate));
        covered[word] = true;
        t = word;
      }
    }
    std::reverse(coordinated.begin(), coordinated.end());
    for (auto& c : coordinated) out.push_back(std::move(c));
    out.push_back(make(tokens[m.first_token].begin,
                       tokens[m.first_token + m.n_tokens - 1].end, m.norm));
  }
  return out;
}

struct RerankResult {
  size_t winner_index = 0;  // into the candidate list
  int score = 0;
  bool tie_broken = false;  // another candidate had the same best score
};

// Number of distinct object values of `g` found in the question
// (case-insensitive, word-boundary, whole value).
inline int exact_match_score(const SubGraph& g, std::string_view question) {
  std::set<std::string> seen;
  int score = 0;
  for (const auto& t : g.triples()) {
    std::string key = text::to_lower(t.object());
    if (!seen.insert(key).second) continue;
    if (text::contains_at_word_boundary(question, t.object())) ++score;
  }
  return score;
}

// Highest exact-match score wins; equal scores go to the smallest center id.
inline RerankResult rerank(std::span<const SubGraph> candidates, std::string_view question) {
  if (candidates.empty()) throw std::invalid_argument("rerank needs at least one candidate");
  RerankResult best;
  best.score = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    int s = exact_match_score(candidates[i], question);
    if (s > best.score) {
      best = {i, s, false};
    } else if (s == best.score) {
      best.tie_broken = true;
      if (candidates[i].center().id < candidates[best.winner_index].center().id) {
        best.winner_index = i;
      }
    }
  }
  return best;
}

struct RetrievalResult {
  EntityMention mention;
  SubGraph chosen;
  size_t candidates_considered = 0;
  int match_score = 0;
  bool tie_broken = false;
};

struct RetrievalOutput {
  std::vector<RetrievalResult> results;
  size_t dropped_mentions = 0;  // mentions with no candidate after filtering

  // Distinct retrieved graphs, ordered by first appearance.
  std::vector<SubGraph> graphs() const {
    std::vector<SubGraph> out;
    std::set<EntityId> seen;
    for (const auto& r : results) {
      if (seen.insert(r.chosen.center().id).second) out.push_back(r.chosen);
    }
    return out;
  }
};

inline RetrievalOutput retrieve(const KnowledgeStore& store, std::string_view question,
                                const ExtractorConfig& config,
                                const std::string& question_id = "") {
  RetrievalOutput out;
  if (text::trim_view(question).empty()) return out;
  for (auto& mention : extract_entities(question, config, store, question_id)) {
    std::optional<std::string> filter;
    if (auto it = config.type_map.find(mention.mention_type); it != config.type_map.end()) {
      filter = it->second;
    }
    auto ids = store.find_nodes_by_name(mention.lookup_name, filter);
    if (ids.empty()) {
      ++out.dropped_mentions;
      continue;
    }
    std::vector<SubGraph> candidates;
    candidates.reserve(ids.size());
    for (const auto& id : ids) candidates.push_back(store.neighborhood(id));
    auto ranked = rerank(candidates, question);
    out.results.push_back({std::move(mention), candidates[ranked.winner_index], ids.size(),
                           ranked.score, ranked.tie_broken});
  }
  return out;
}

}  // namespace kalma
