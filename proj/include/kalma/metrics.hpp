#pragma once

// Citation quality (correctness, precision, recall, F1), text-citation
// alignment and [NA] precision/recall.
//
// Scoring rules:
//  - correctness: a Triple citation scores 1 iff it exactly matches a triple
//    of the retrieved graphs. Malformed citations score 0. [NA] is not scored.
//  - precision: per Triple citation, correct AND in the minimum knowledge set.
//  - recall: per minimum-set triple, hit by at least one correct citation.
//  - micro pools bits over the whole corpus; macro averages answer-level
//    ratios. Answers without Triple citations have no precision term.
//  - alignment: one NLI query per (sentence, Triple citation) pair, premise =
//    sentence, hypothesis = "<relation>: <object>".
//  - [NA] precision: per sentence carrying [NA], entails some absent triple.
//    [NA] recall: per absent triple, entailed by some [NA] sentence.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kalma/citation.hpp"
#include "kalma/error.hpp"
#include "kalma/judge_api.hpp"
#include "kalma/kg_store.hpp"

namespace kalma {

using MinKnowledgeSet = TripleSet;

inline std::optional<double> ratio(size_t num, size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline std::optional<double> f1_score(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

inline std::string nli_hypothesis(const KnowledgeTriple& t) {
  return t.relation() + ": " + t.object();
}

inline TripleSet union_triples(std::span<const SubGraph> graphs) {
  TripleSet all;
  for (const auto& g : graphs) all.insert(g.triples().begin(), g.triples().end());
  return all;
}

// One bit per Triple or Malformed citation, in answer order.
inline std::vector<bool> correctness_bits(const AttributedAnswer& answer,
                                          const TripleSet& retrieved) {
  std::vector<bool> bits;
  for (const auto& s : answer.sentences) {
    for (const auto& c : s.citations) {
      if (auto* t = std::get_if<KnowledgeTriple>(&c)) {
        bits.push_back(retrieved.count(*t) > 0);
      } else if (is_malformed(c)) {
        bits.push_back(false);
      }
    }
  }
  return bits;
}

inline std::optional<double> citation_correctness(const AttributedAnswer& answer,
                                                  const TripleSet& retrieved) {
  auto bits = correctness_bits(answer, retrieved);
  size_t hits = 0;
  for (bool b : bits) hits += b;
  return ratio(hits, bits.size());
}

inline std::optional<double> citation_correctness(const AttributedAnswer& answer,
                                                  std::span<const SubGraph> retrieved) {
  return citation_correctness(answer, union_triples(retrieved));
}

struct PrecisionRecallBits {
  std::vector<bool> precision;  // one per Triple citation
  std::vector<bool> recall;     // one per min-set triple, in set order
};

inline PrecisionRecallBits citation_precision_recall(const AttributedAnswer& answer,
                                                     const MinKnowledgeSet& min_set,
                                                     const TripleSet& retrieved) {
  PrecisionRecallBits out;
  TripleSet correct_hits;
  for (const auto& t : answer.triples()) {
    bool correct = retrieved.count(t) > 0;
    bool in_min = min_set.count(t) > 0;
    out.precision.push_back(correct && in_min);
    if (correct) correct_hits.insert(t);
  }
  for (const auto& k : min_set) out.recall.push_back(correct_hits.count(k) > 0);
  return out;
}

inline PrecisionRecallBits citation_precision_recall(const AttributedAnswer& answer,
                                                     const MinKnowledgeSet& min_set,
                                                     std::span<const SubGraph> retrieved) {
  return citation_precision_recall(answer, min_set, union_triples(retrieved));
}

struct AlignmentCount {
  size_t entailed = 0;
  size_t total = 0;
  std::optional<double> fraction() const { return ratio(entailed, total); }
};

namespace detail {

inline EntailmentVerdict query_judge(EntailmentJudge& judge, std::string_view premise,
                                     std::string_view hypothesis, size_t sentence_index) {
  try {
    return judge.entails(premise, hypothesis);
  } catch (const std::exception& e) {
    throw JudgeError("entailment query failed for sentence #" +
                     std::to_string(sentence_index) + " / hypothesis '" +
                     std::string(hypothesis) + "': " + e.what());
  }
}

}  // namespace detail

inline AlignmentCount alignment(const AttributedAnswer& answer, EntailmentJudge& judge) {
  AlignmentCount out;
  for (size_t i = 0; i < answer.sentences.size(); ++i) {
    const auto& s = answer.sentences[i];
    for (const auto& c : s.citations) {
      auto* t = std::get_if<KnowledgeTriple>(&c);
      if (!t) continue;
      ++out.total;
      if (detail::query_judge(judge, s.text, nli_hypothesis(*t), i).entailed) {
        ++out.entailed;
      }
    }
  }
  return out;
}

struct NaOptions {
  // Grant the precision bit to an [NA] sentence that does not answer the
  // question at all. Needs `relevance` and the question text.
  bool offtopic_credit = false;
  RelevanceJudge* relevance = nullptr;
  std::string question;
};

struct NaBits {
  std::vector<bool> precision;  // one per sentence carrying [NA]
  std::vector<bool> recall;     // one per absent triple, in set order
};

inline NaBits na_precision_recall(const AttributedAnswer& answer, const TripleSet& absent,
                                  EntailmentJudge& judge, const NaOptions& opt = {}) {
  if (opt.offtopic_credit && !opt.relevance) {
    throw std::invalid_argument("off-topic [NA] credit needs a relevance judge");
  }
  std::vector<size_t> na_sentences;
  for (size_t i = 0; i < answer.sentences.size(); ++i) {
    if (answer.sentences[i].has_na()) na_sentences.push_back(i);
  }
  std::vector<KnowledgeTriple> absent_list(absent.begin(), absent.end());
  // entails[s][k]: [NA] sentence s entails absent triple k
  std::vector<std::vector<bool>> entails(na_sentences.size(),
                                         std::vector<bool>(absent_list.size()));
  for (size_t s = 0; s < na_sentences.size(); ++s) {
    const auto& premise = answer.sentences[na_sentences[s]].text;
    for (size_t k = 0; k < absent_list.size(); ++k) {
      entails[s][k] = detail::query_judge(judge, premise, nli_hypothesis(absent_list[k]),
                                          na_sentences[s])
                          .entailed;
    }
  }
  NaBits out;
  for (size_t s = 0; s < na_sentences.size(); ++s) {
    bool hit = false;
    for (bool b : entails[s]) hit = hit || b;
    if (!hit && opt.offtopic_credit) {
      hit = opt.relevance->off_topic(opt.question, answer.sentences[na_sentences[s]].text);
    }
    out.precision.push_back(hit);
  }
  for (size_t k = 0; k < absent_list.size(); ++k) {
    bool hit = false;
    for (size_t s = 0; s < na_sentences.size(); ++s) hit = hit || entails[s][k];
    out.recall.push_back(hit);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct AnswerReport {
  std::string question_id;
  size_t n_citations = 0;  // Triple citations
  size_t n_malformed = 0;
  size_t n_na = 0;         // [NA] markers
  size_t n_correct = 0;
  size_t precision_hits = 0;
  size_t min_set_size = 0;
  size_t recall_hits = 0;
  AlignmentCount alignment_pairs;
  size_t na_sentences = 0;
  size_t na_precision_hits = 0;
  size_t absent_size = 0;
  size_t na_recall_hits = 0;
  std::optional<TextQualityScores> quality;

  std::optional<double> correctness() const {
    return ratio(n_correct, n_citations + n_malformed);
  }
  std::optional<double> precision() const { return ratio(precision_hits, n_citations); }
  std::optional<double> recall() const { return ratio(recall_hits, min_set_size); }
  std::optional<double> na_precision() const { return ratio(na_precision_hits, na_sentences); }
  std::optional<double> na_recall() const { return ratio(na_recall_hits, absent_size); }

  bool operator==(const AnswerReport& o) const {
    return question_id == o.question_id && n_citations == o.n_citations &&
           n_malformed == o.n_malformed && n_na == o.n_na && n_correct == o.n_correct &&
           precision_hits == o.precision_hits && min_set_size == o.min_set_size &&
           recall_hits == o.recall_hits &&
           alignment_pairs.entailed == o.alignment_pairs.entailed &&
           alignment_pairs.total == o.alignment_pairs.total &&
           na_sentences == o.na_sentences && na_precision_hits == o.na_precision_hits &&
           absent_size == o.absent_size && na_recall_hits == o.na_recall_hits;
  }
};

struct EvaluationInput {
  std::string question_id;
  std::string question;
  const AttributedAnswer* answer = nullptr;
  std::span<const SubGraph> retrieved;
  const MinKnowledgeSet* min_set = nullptr;
  const TripleSet* absent = nullptr;  // only for knowledge-removal rounds
};

struct EvaluationJudges {
  EntailmentJudge* nli = nullptr;  // null skips alignment and [NA] scoring
  RelevanceJudge* relevance = nullptr;
  bool offtopic_credit = false;
};

inline AnswerReport evaluate_answer(const EvaluationInput& in, const EvaluationJudges& judges) {
  if (!in.answer) throw std::invalid_argument("evaluate_answer: missing answer");
  const auto& answer = *in.answer;
  AnswerReport r;
  r.question_id = in.question_id;
  const TripleSet retrieved = union_triples(in.retrieved);
  for (bool b : correctness_bits(answer, retrieved)) r.n_correct += b;
  for (const auto& s : answer.sentences) {
    for (const auto& c : s.citations) {
      r.n_citations += is_triple(c);
      r.n_malformed += is_malformed(c);
      r.n_na += is_na(c);
    }
  }
  static const MinKnowledgeSet kEmpty;
  const auto& min_set = in.min_set ? *in.min_set : kEmpty;
  auto pr = citation_precision_recall(answer, min_set, retrieved);
  for (bool b : pr.precision) r.precision_hits += b;
  for (bool b : pr.recall) r.recall_hits += b;
  r.min_set_size = min_set.size();

  if (judges.nli) {
    r.alignment_pairs = alignment(answer, *judges.nli);
    // [NA] scoring needs an absent set; without one the [NA] fields stay empty.
    if (in.absent) {
      for (const auto& s : answer.sentences) r.na_sentences += s.has_na();
      NaOptions opt;
      opt.offtopic_credit = judges.offtopic_credit;
      opt.relevance = judges.relevance;
      opt.question = in.question;
      auto na = na_precision_recall(answer, *in.absent, *judges.nli, opt);
      for (bool b : na.precision) r.na_precision_hits += b;
      for (bool b : na.recall) r.na_recall_hits += b;
      r.absent_size = in.absent->size();
    }
  }
  return r;
}

enum class CorrectnessPooling { kCorpus, kPerAnswerMean };

struct AggregateOptions {
  CorrectnessPooling correctness = CorrectnessPooling::kCorpus;
};

// Percentages in [0, 100]; nullopt where the denominator is empty.
struct CorpusReport {
  std::optional<double> correctness, micro_p, micro_r, micro_f1, macro_p, macro_r,
      macro_f1, alignment_pct, na_p, na_r, na_f1;
  std::optional<double> coherence, consistency, fluency, relevance;

  // Pooled counts behind the micro figures.
  size_t scored_citations = 0, correct = 0, triple_citations = 0, precision_hits = 0,
         min_set_total = 0, recall_hits = 0, align_entailed = 0, align_total = 0,
         na_sentences = 0, na_precision_hits = 0, absent_total = 0, na_recall_hits = 0;

  std::vector<AnswerReport> per_answer;
};

namespace detail {

inline std::optional<double> pct(std::optional<double> v) {
  if (!v) return std::nullopt;
  return *v * 100.0;
}

inline std::optional<double> mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace detail

inline CorpusReport aggregate(std::span<const AnswerReport> answers,
                              const AggregateOptions& opt = {}) {
  if (answers.empty()) throw std::invalid_argument("aggregate needs at least one answer");
  CorpusReport c;
  c.per_answer.assign(answers.begin(), answers.end());
  std::vector<double> macro_p, macro_r, per_answer_corr;
  std::vector<double> quality[4];
  for (const auto& a : answers) {
    c.scored_citations += a.n_citations + a.n_malformed;
    c.correct += a.n_correct;
    c.triple_citations += a.n_citations;
    c.precision_hits += a.precision_hits;
    c.min_set_total += a.min_set_size;
    c.recall_hits += a.recall_hits;
    c.align_entailed += a.alignment_pairs.entailed;
    c.align_total += a.alignment_pairs.total;
    c.na_sentences += a.na_sentences;
    c.na_precision_hits += a.na_precision_hits;
    c.absent_total += a.absent_size;
    c.na_recall_hits += a.na_recall_hits;
    if (auto p = a.precision()) macro_p.push_back(*p);
    if (auto r = a.recall()) macro_r.push_back(*r);
    if (auto k = a.correctness()) per_answer_corr.push_back(*k);
    if (a.quality) {
      for (size_t m = 0; m < 4; ++m) {
        quality[m].push_back(static_cast<double>(a.quality->get(kQualityMetrics[m])));
      }
    }
  }
  c.correctness = opt.correctness == CorrectnessPooling::kCorpus
                      ? detail::pct(ratio(c.correct, c.scored_citations))
                      : detail::pct(detail::mean(per_answer_corr));
  auto mp = ratio(c.precision_hits, c.triple_citations);
  auto mr = ratio(c.recall_hits, c.min_set_total);
  c.micro_p = detail::pct(mp);
  c.micro_r = detail::pct(mr);
  c.micro_f1 = detail::pct(f1_score(mp, mr));
  auto ap = detail::mean(macro_p);
  auto ar = detail::mean(macro_r);
  c.macro_p = detail::pct(ap);
  c.macro_r = detail::pct(ar);
  c.macro_f1 = detail::pct(f1_score(ap, ar));
  c.alignment_pct = detail::pct(ratio(c.align_entailed, c.align_total));
  auto np = ratio(c.na_precision_hits, c.na_sentences);
  auto nr = ratio(c.na_recall_hits, c.absent_total);
  c.na_p = detail::pct(np);
  c.na_r = detail::pct(nr);
  c.na_f1 = detail::pct(f1_score(np, nr));
  c.coherence = detail::mean(quality[0]);
  c.consistency = detail::mean(quality[1]);
  c.fluency = detail::mean(quality[2]);
  c.relevance = detail::mean(quality[3]);
  return c;
}

}  // namespace kalma
