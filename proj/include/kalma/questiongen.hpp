#pragma once

// Dataset construction: person-pair filtering, name disambiguation against
// the store, and evolutionary question generation. Each round after the first
// injects one knowledge triple chosen by
//   score_r = alpha * log(2N / count_r) + (1 - alpha) * softmax_r(1 / perp_r)

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kalma/citation.hpp"
#include "kalma/dataset.hpp"
#include "kalma/error.hpp"
#include "kalma/judges.hpp"
#include "kalma/kg_store.hpp"
#include "kalma/prompts.hpp"
#include "kalma/text.hpp"

namespace kalma {

// ---------------------------------------------------------------------------
// Person selection and disambiguation

// Both names must have at least two whitespace-separated parts.
inline bool filter_name_pair(std::string_view name_a, std::string_view name_b,
                             std::string_view /*relation*/) {
  return text::split_whitespace(name_a).size() >= 2 && text::split_whitespace(name_b).size() >= 2;
}

namespace detail {

// x has a `relation` edge whose object is y (by id or by name).
// 2 when an edge points at y's id, 1 when it matches y's name only, else 0.
inline int edge_strength(const KnowledgeStore& store, const EntityId& x, const Entity& y,
                         std::string_view relation) {
  const SubGraph g = store.neighborhood(x);
  int best = 0;
  for (const auto& t : g.triples()) {
    if (!text::iequals(t.relation(), relation)) continue;
    if (t.object() == y.id.str()) return 2;
    if (text::normalize_name(store.display_object(t.object())) == text::normalize_name(y.name)) {
      best = 1;
    }
  }
  return best;
}

}  // namespace detail

// Picks the candidate pair joined by an edge labelled `relation` (either
// direction, case-insensitive). A name-only edge is ambiguous among namesakes,
// so pairs are ranked by summed edge strength over both directions. Ties go to
// the smallest (id_a, id_b).
inline std::optional<std::pair<EntityId, EntityId>> disambiguate_pair(
    std::string_view name_a, std::string_view name_b, std::string_view relation,
    const KnowledgeStore& store) {
  if (text::trim_view(name_a).empty() || text::trim_view(name_b).empty()) return std::nullopt;
  std::optional<std::pair<EntityId, EntityId>> best;
  int best_score = 0;
  for (const auto& a : store.find_nodes_by_name(name_a)) {
    for (const auto& b : store.find_nodes_by_name(name_b)) {
      if (a == b) continue;
      int score = detail::edge_strength(store, a, store.entity(b), relation) +
                  detail::edge_strength(store, b, store.entity(a), relation);
      if (score == 0) continue;
      auto cand = std::make_pair(a, b);
      if (score > best_score || (score == best_score && cand < *best)) {
        best = cand;
        best_score = score;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Specificity

struct RelationStats {
  std::map<std::string, size_t> counts;  // Count_r
  size_t total = 0;                      // N

  // Counts relation occurrences over the minimum knowledge sets.
  static RelationStats from_min_sets(const std::vector<std::vector<KnowledgeTriple>>& sets) {
    RelationStats s;
    s.total = sets.size();
    for (const auto& set : sets) {
      for (const auto& t : set) ++s.counts[t.relation()];
    }
    return s;
  }

  static RelationStats from_dataset(const std::vector<DatasetEntry>& entries) {
    std::vector<std::vector<KnowledgeTriple>> sets;
    for (const auto& e : entries) sets.push_back(e.minimum_knowledge_set);
    return from_min_sets(sets);
  }

  // Relations never seen in the statistics count once.
  size_t count_or_floor(const std::string& relation) const {
    auto it = counts.find(relation);
    return it == counts.end() || it->second == 0 ? 1 : it->second;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [r, n] : counts) c[r] = n;
    j["counts"] = c;
    return j;
  }
};

inline double specificity_from_count(size_t count, size_t total) {
  if (total < 1) throw std::invalid_argument("relation stats need N >= 1");
  if (count < 1) throw std::invalid_argument("relation count must be >= 1");
  return std::log(2.0 * static_cast<double>(total) / static_cast<double>(count));
}

// log(2N / Count_r), natural log.
inline double specificity(const std::string& relation, const RelationStats& stats) {
  auto it = stats.counts.find(relation);
  if (it == stats.counts.end()) throw std::invalid_argument("unknown relation: " + relation);
  return specificity_from_count(it->second, stats.total);
}

// ---------------------------------------------------------------------------
// Coherence

enum class RelationClass { kNoun, kVerb, kMembership };

inline const std::map<std::string, RelationClass>& relation_classes() {
  static const std::map<std::string, RelationClass> table = {
      {"educated at", RelationClass::kVerb},
      {"influenced by", RelationClass::kVerb},
      {"nominated for", RelationClass::kVerb},
      {"participated in", RelationClass::kVerb},
      {"died in", RelationClass::kVerb},
      {"worked at", RelationClass::kVerb},
      {"member of", RelationClass::kMembership},
      {"student of", RelationClass::kMembership},
      {"founder of", RelationClass::kMembership},
      {"participant of", RelationClass::kMembership},
      {"partner of", RelationClass::kMembership},
  };
  return table;
}

inline RelationClass relation_class(std::string_view relation) {
  auto it = relation_classes().find(text::to_lower(relation));
  return it == relation_classes().end() ? RelationClass::kNoun : it->second;
}

// "<s>'s <r> is <o>", "<s> <r> <o>" or "<s> is a <r> of <o>"; for the last
// form a trailing " of" on the relation is not repeated.
inline std::string templatize(const KnowledgeTriple& t, std::string_view subject_name) {
  std::string s(subject_name);
  switch (relation_class(t.relation())) {
    case RelationClass::kVerb:
      return s + " " + t.relation() + " " + t.object();
    case RelationClass::kMembership: {
      std::string r = t.relation();
      if (r.size() > 3 && r.compare(r.size() - 3, 3, " of") == 0) r.resize(r.size() - 3);
      return s + " is a " + r + " of " + t.object();
    }
    case RelationClass::kNoun:
      break;
  }
  return s + "'s " + t.relation() + " is " + t.object();
}

using PerplexityFn = std::function<double(const std::string&)>;

enum class CoherenceNormalization { kSoftmax, kSum };

// Normalized inverse perplexity of each candidate sentence appended to the
// paragraph; sums to 1.
inline std::vector<double> coherence_scores(
    const std::vector<std::string>& candidate_sentences, const std::string& paragraph,
    const PerplexityFn& perplexity, CoherenceNormalization norm = CoherenceNormalization::kSoftmax) {
  if (candidate_sentences.empty()) throw std::invalid_argument("coherence_scores: no candidates");
  std::vector<double> inv;
  for (const auto& s : candidate_sentences) {
    std::string text = paragraph.empty() ? s : paragraph + " " + s;
    double p = perplexity(text);
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("perplexity must be positive and finite, got " + std::to_string(p) +
                                  " for: " + s);
    }
    inv.push_back(1.0 / p);
  }
  std::vector<double> out(inv.size());
  if (norm == CoherenceNormalization::kSum) {
    double sum = 0.0;
    for (double v : inv) sum += v;
    for (size_t i = 0; i < inv.size(); ++i) out[i] = inv[i] / sum;
    return out;
  }
  double mx = *std::max_element(inv.begin(), inv.end());
  double sum = 0.0;
  for (size_t i = 0; i < inv.size(); ++i) sum += (out[i] = std::exp(inv[i] - mx));
  for (double& v : out) v /= sum;
  return out;
}

inline std::vector<double> coherence_scores(const std::vector<KnowledgeTriple>& candidates,
                                            const std::map<EntityId, std::string>& names,
                                            const std::string& paragraph,
                                            const PerplexityFn& perplexity,
                                            CoherenceNormalization norm = CoherenceNormalization::kSoftmax) {
  std::vector<std::string> sentences;
  for (const auto& t : candidates) {
    auto it = names.find(t.subject());
    sentences.push_back(templatize(t, it == names.end() ? t.subject().str() : it->second) + ".");
  }
  return coherence_scores(sentences, paragraph, perplexity, norm);
}

// Add-one smoothed unigram model; an offline stand-in for an LM perplexity.
class UnigramPerplexity {
 public:
  void train(std::string_view text) {
    for (const auto& w : text::word_tokens(text)) {
      ++counts_[text::to_lower(w)];
      ++total_;
    }
  }

  double operator()(const std::string& text) const {
    auto words = text::word_tokens(text);
    if (words.empty()) return std::numeric_limits<double>::infinity();
    const double vocab = static_cast<double>(counts_.size() + 1);
    double log_sum = 0.0;
    for (const auto& w : words) {
      auto it = counts_.find(text::to_lower(w));
      double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
      log_sum += std::log((c + 1.0) / (static_cast<double>(total_) + vocab));
    }
    return std::exp(-log_sum / static_cast<double>(words.size()));
  }

 private:
  std::map<std::string, size_t> counts_;
  size_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Knowledge selection

struct KnowledgePool {
  std::vector<SubGraph> subgraphs;
  TripleSet used;

  std::map<EntityId, std::string> names() const {
    std::map<EntityId, std::string> out;
    for (const auto& g : subgraphs) out[g.center().id] = g.center().name;
    return out;
  }
  bool contains(const KnowledgeTriple& t) const {
    for (const auto& g : subgraphs) {
      if (g.contains(t)) return true;
    }
    return false;
  }
};

struct SelectionOptions {
  double alpha = 0.5;
  CoherenceNormalization coherence = CoherenceNormalization::kSoftmax;
  // Divide specificity by its maximum over the candidates so both terms lie
  // in [0, 1].
  bool normalize_specificity = false;
  // Identity relations are never injected.
  std::set<std::string> excluded_relations = {"name", "given name", "surname", "family name"};
};

struct EvolutionState {
  std::string paragraph;  // annotated text
  KnowledgePool pool;
  int round = 1;
};

// Unused, citable pool triples in (subject, relation, object) order.
inline std::vector<KnowledgeTriple> selection_candidates(const KnowledgePool& pool,
                                                         const SelectionOptions& opt) {
  TripleSet all;
  for (const auto& g : pool.subgraphs) all.insert(g.triples().begin(), g.triples().end());
  std::vector<KnowledgeTriple> out;
  for (const auto& t : all) {
    if (pool.used.count(t) || opt.excluded_relations.count(t.relation()) || !citable(t)) continue;
    out.push_back(t);
  }
  return out;
}

inline std::string plain_paragraph(const std::string& annotated) {
  return render_plain(parse_answer(annotated));
}

struct ScoredCandidate {
  KnowledgeTriple triple;
  double specificity;
  double coherence;
  double score;
};

inline std::vector<ScoredCandidate> score_candidates(const EvolutionState& state,
                                                     const RelationStats& stats,
                                                     const PerplexityFn& perplexity,
                                                     const SelectionOptions& opt) {
  if (!(opt.alpha >= 0.0 && opt.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  auto cands = selection_candidates(state.pool, opt);
  if (cands.empty()) throw std::invalid_argument("no unused knowledge left in the pool");
  std::vector<double> spec;
  for (const auto& t : cands) {
    spec.push_back(specificity_from_count(stats.count_or_floor(t.relation()), std::max<size_t>(stats.total, 1)));
  }
  if (opt.normalize_specificity) {
    double mx = *std::max_element(spec.begin(), spec.end());
    if (mx > 0.0) {
      for (double& s : spec) s /= mx;
    }
  }
  std::vector<double> coh(cands.size(), 0.0);
  if (opt.alpha < 1.0) {
    std::string plain = plain_paragraph(state.paragraph);
    coh = coherence_scores(cands, state.pool.names(), plain, perplexity, opt.coherence);
  }
  std::vector<ScoredCandidate> out;
  for (size_t i = 0; i < cands.size(); ++i) {
    out.push_back({cands[i], spec[i], coh[i], opt.alpha * spec[i] + (1.0 - opt.alpha) * coh[i]});
  }
  return out;
}

// Highest score; ties by (relation, object, subject).
inline KnowledgeTriple select_knowledge(const EvolutionState& state, const RelationStats& stats,
                                        const PerplexityFn& perplexity,
                                        const SelectionOptions& opt = {}) {
  auto scored = score_candidates(state, stats, perplexity, opt);
  const ScoredCandidate* best = &scored[0];
  auto key = [](const KnowledgeTriple& t) {
    return std::tie(t.relation(), t.object(), t.subject());
  };
  for (const auto& c : scored) {
    if (c.score > best->score || (c.score == best->score && key(c.triple) < key(best->triple))) {
      best = &c;
    }
  }
  return best->triple;
}

// ---------------------------------------------------------------------------
// Evolution

// The language model used during construction.
class ConstructionModel {
 public:
  virtual ~ConstructionModel() = default;
  // Returns `sentence` annotated with bracketed citations from `pool`.
  virtual std::string annotate(const std::string& sentence, const KnowledgePool& pool) = 0;
  // Returns the annotated paragraph extended by one sentence stating `k`.
  virtual std::string extend(const std::string& paragraph, const KnowledgeTriple& k,
                             const std::string& subject_name) = 0;
  virtual std::string question(QuestionKind kind, const std::string& plain_paragraph,
                               const std::vector<Entity>& people) = 0;
  virtual std::string identity() const = 0;
};

class ChatConstructionModel : public ConstructionModel {
 public:
  ChatConstructionModel(ChatClient& client, JudgeConfig config,
                        const PromptLibrary& lib = PromptLibrary::builtin())
      : client_(client), config_(std::move(config)), lib_(lib) {}

  std::string annotate(const std::string& sentence, const KnowledgePool& pool) override {
    std::vector<std::string> lines;
    for (const auto& g : pool.subgraphs) lines.push_back(knowledge_dict(g, nullptr, QidPlacement::kFirst));
    return ask(annotate_prompt(sentence, join_lines(lines), lib_));
  }

  std::string extend(const std::string& paragraph, const KnowledgeTriple& k,
                     const std::string& subject_name) override {
    std::string knowledge = "{qid: " + k.subject().str() + ", name: " + subject_name + ", " +
                            k.relation() + ": " + k.object() + "}";
    return ask(extend_prompt(paragraph, knowledge, lib_));
  }

  std::string question(QuestionKind kind, const std::string& plain_paragraph,
                       const std::vector<Entity>&) override {
    return ask(question_prompt(kind, plain_paragraph, lib_));
  }

  std::string identity() const override { return "chat:" + config_.model_name; }

 private:
  std::string ask(const std::string& prompt) {
    std::string reply = text::trim(client_.complete(make_chat_request(config_, prompt)));
    if (reply.empty()) throw JudgeError("empty completion during construction");
    return reply;
  }

  ChatClient& client_;
  JudgeConfig config_;
  const PromptLibrary& lib_;
};

// Deterministic offline model. Annotation cites every pool triple whose
// object occurs in the sentence; extension appends the templated fact with
// its citation; questions are fixed phrasings over the people's names.
class TemplateConstructionModel : public ConstructionModel {
 public:
  std::set<std::string> annotation_skip = {"name", "given name", "surname", "family name"};

  std::string annotate(const std::string& sentence, const KnowledgePool& pool) override {
    AttributedAnswer a = parse_answer(sentence);
    for (auto& s : a.sentences) {
      for (const auto& g : pool.subgraphs) {
        for (const auto& t : g.triples()) {
          if (annotation_skip.count(t.relation()) || !citable(t)) continue;
          if (text::contains_at_word_boundary(text::to_lower(s.text), text::to_lower(t.object()))) {
            s.citations.push_back(t);
          }
        }
      }
    }
    return render_answer(a);
  }

  std::string extend(const std::string& paragraph, const KnowledgeTriple& k,
                     const std::string& subject_name) override {
    std::string added = render_sentence({templatize(k, subject_name) + ".", {k}});
    return paragraph.empty() ? added : paragraph + " " + added;
  }

  std::string question(QuestionKind kind, const std::string&,
                       const std::vector<Entity>& people) override {
    std::string names;
    for (size_t i = 0; i < people.size(); ++i) {
      if (i) names += i + 1 == people.size() ? " and " : ", ";
      names += people[i].name;
    }
    if (kind == QuestionKind::kGeneral) return "Who were " + names + ", and how were they connected?";
    return "What were the backgrounds and careers of " + names +
           ", and which facts link their lives together?";
  }

  std::string identity() const override { return "mock:template"; }
};

struct RoundTrace {
  int round = 0;
  std::vector<KnowledgeTriple> knowledge;  // annotated (round 1) or injected
  std::string paragraph;                   // annotated paragraph after the round
  std::string added_text;                  // text appended this round

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["round"] = round;
    auto ks = nlohmann::ordered_json::array();
    for (const auto& t : knowledge) ks.push_back({t.subject().str(), t.relation(), t.object()});
    j["knowledge"] = ks;
    j["added_text"] = added_text;
    j["paragraph"] = paragraph;
    return j;
  }
};

class EvolutionError : public Error {
 public:
  EvolutionError(const std::string& what, std::vector<RoundTrace> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<RoundTrace>& partial_trace() const { return partial_; }

 private:
  std::vector<RoundTrace> partial_;
};

struct EvolveOptions {
  int rounds = 5;
  SelectionOptions selection;
};

struct EvolutionResult {
  DatasetEntry entry;
  std::vector<RoundTrace> trace;
};

// Round 1 annotates the seed paragraph; rounds 2..rounds each inject one
// selected triple. The minimum knowledge set is every annotated or injected
// triple (annotations outside the pool are dropped).
inline EvolutionResult evolve(const std::string& seed_paragraph, KnowledgePool pool,
                              const RelationStats& stats, ConstructionModel& model,
                              const PerplexityFn& perplexity, const EvolveOptions& opt = {}) {
  if (opt.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (pool.subgraphs.empty()) throw std::invalid_argument("empty knowledge pool");
  EvolutionResult result;
  std::vector<KnowledgeTriple> min_set;
  auto add_min = [&](const KnowledgeTriple& t) {
    if (pool.used.insert(t).second) min_set.push_back(t);
  };
  auto names = pool.names();
  EvolutionState state;
  int round = 1;
  try {
    state.paragraph = model.annotate(seed_paragraph, pool);
    RoundTrace r1;
    r1.round = 1;
    for (const auto& t : parse_answer(state.paragraph).triples()) {
      if (!pool.contains(t)) continue;
      if (!pool.used.count(t)) r1.knowledge.push_back(t);
      add_min(t);
    }
    r1.paragraph = state.paragraph;
    r1.added_text = plain_paragraph(state.paragraph);
    result.trace.push_back(r1);

    for (round = 2; round <= opt.rounds; ++round) {
      state.pool = pool;
      state.round = round;
      auto k = select_knowledge(state, stats, perplexity, opt.selection);
      std::string before = plain_paragraph(state.paragraph);
      state.paragraph = model.extend(state.paragraph, k, names.at(k.subject()));
      add_min(k);
      RoundTrace rt;
      rt.round = round;
      rt.knowledge = {k};
      rt.paragraph = state.paragraph;
      std::string after = plain_paragraph(state.paragraph);
      rt.added_text = after.compare(0, before.size(), before) == 0
                          ? text::trim(std::string_view(after).substr(before.size()))
                          : after;
      result.trace.push_back(rt);
    }
    std::string plain = plain_paragraph(state.paragraph);
    std::vector<Entity> people;
    for (const auto& g : pool.subgraphs) people.push_back(g.center());
    result.entry.general_question = model.question(QuestionKind::kGeneral, plain, people);
    result.entry.specific_question = model.question(QuestionKind::kSpecific, plain, people);
    for (const auto& p : people) result.entry.people.push_back(p.id);
  } catch (const std::exception& e) {
    throw EvolutionError("evolution failed in round " + std::to_string(std::min(round, opt.rounds)) +
                             ": " + e.what(),
                         result.trace);
  }
  if (min_set.empty()) {
    throw EvolutionError("no knowledge was annotated or injected", result.trace);
  }
  result.entry.minimum_knowledge_set = std::move(min_set);
  return result;
}

// ---------------------------------------------------------------------------
// Ingestion: one {paragraph, name_a, name_b, relation} object per line.

struct SeedRecord {
  std::string paragraph;
  std::string name_a;
  std::string name_b;
  std::string relation;
};

inline std::vector<SeedRecord> load_seeds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open seed corpus " + path.string());
  std::vector<SeedRecord> out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim_view(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("paragraph").get<std::string>(), j.at("name_a").get<std::string>(),
                     j.at("name_b").get<std::string>(), j.at("relation").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), n, e.what());
    }
  }
  return out;
}

}  // namespace kalma
