#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "kalma/metrics.hpp"
#include "kalma/rng.hpp"

using namespace kalma;

namespace {

KnowledgeTriple T(const std::string& s, const std::string& r, const std::string& o) {
  return {s, r, o};
}

// Entails exactly the (premise, hypothesis) pairs it was told about.
class TableJudge : public EntailmentJudge {
 public:
  std::set<std::pair<std::string, std::string>> yes;
  int calls = 0;
  EntailmentVerdict entails(std::string_view p, std::string_view h) override {
    ++calls;
    return {yes.count({std::string(p), std::string(h)}) > 0, std::nullopt};
  }
  std::string identity() const override { return "table"; }
};

class AlwaysJudge : public EntailmentJudge {
 public:
  bool value;
  explicit AlwaysJudge(bool v) : value(v) {}
  EntailmentVerdict entails(std::string_view, std::string_view) override { return {value, {}}; }
  std::string identity() const override { return "always"; }
};

class ThrowingJudge : public EntailmentJudge {
 public:
  EntailmentVerdict entails(std::string_view, std::string_view) override {
    throw std::runtime_error("connection reset");
  }
  std::string identity() const override { return "throwing"; }
};

class OffTopic : public RelevanceJudge {
 public:
  bool off_topic(std::string_view, std::string_view) override { return true; }
};

SubGraph graph(const std::string& id, const std::vector<KnowledgeTriple>& ts) {
  SubGraph g(Entity{EntityId(id), id, "human"});
  for (const auto& t : ts) g.insert(t);
  return g;
}

AnswerReport report(size_t cites, size_t hits, size_t min_set, size_t recall_hits) {
  AnswerReport r;
  r.n_citations = cites;
  r.n_correct = hits;
  r.precision_hits = hits;
  r.min_set_size = min_set;
  r.recall_hits = recall_hits;
  return r;
}

}  // namespace

TEST(Correctness, CraneCitationIsCorrect) {
  auto g = graph("Q206534", {T("Q206534", "religion", "atheism")});
  auto a = parse_answer("Crane's views on religion were atheistic [Q206534, religion: atheism].");
  std::vector<SubGraph> kg = {g};
  EXPECT_EQ(citation_correctness(a, union_triples(kg)), 1.0);
}

TEST(Correctness, MalformedOnlyScoresZeroAndNaIsIgnored) {
  TripleSet kg;
  EXPECT_EQ(citation_correctness(parse_answer("x [Q1]."), kg), 0.0);
  EXPECT_FALSE(citation_correctness(parse_answer("x [NA]."), kg).has_value());
  EXPECT_FALSE(citation_correctness(parse_answer("nothing cited."), kg).has_value());
}

TEST(Correctness, TwoOfThree) {
  TripleSet kg = {T("Q1", "a", "x"), T("Q1", "b", "y")};
  auto a = parse_answer("S [Q1, a: x, b: y, c: z].");
  EXPECT_NEAR(*citation_correctness(a, kg), 2.0 / 3.0, 1e-12);
}

TEST(PrecisionRecall, ConjunctiveAndSetSemantics) {
  TripleSet kg = {T("Q1", "a", "x"), T("Q1", "b", "y"), T("Q1", "c", "z")};
  MinKnowledgeSet min = {T("Q1", "a", "x")};
  auto bits = citation_precision_recall(parse_answer("S [Q1, b: y]."), min, kg);
  EXPECT_EQ(bits.precision, std::vector<bool>{false});
  EXPECT_EQ(bits.recall, std::vector<bool>{false});

  auto dup = citation_precision_recall(parse_answer("S [Q1, a: x]. T [Q1, a: x]."), min, kg);
  EXPECT_EQ(dup.precision, (std::vector<bool>{true, true}));
  EXPECT_EQ(dup.recall, std::vector<bool>{true});

  // In the min set but not retrieved: not correct, so no precision or recall.
  MinKnowledgeSet min2 = {T("Q1", "d", "w")};
  auto absent = citation_precision_recall(parse_answer("S [Q1, d: w]."), min2, kg);
  EXPECT_EQ(absent.precision, std::vector<bool>{false});
  EXPECT_EQ(absent.recall, std::vector<bool>{false});
}

TEST(PrecisionRecall, ThreeOfFive) {
  std::vector<KnowledgeTriple> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(T("Q9", "r" + std::to_string(i), "v"));
  MinKnowledgeSet min(ts.begin(), ts.end());
  TripleSet kg = min;
  auto bits = citation_precision_recall(parse_answer("A [Q9, r0: v, r2: v, r4: v]."), min, kg);
  EXPECT_EQ(std::count(bits.recall.begin(), bits.recall.end(), true), 3);
}

TEST(Aggregate, PublishedF1Rows) {
  // P and R reported as percentages; build pooled counts that hit them exactly.
  struct Row { size_t ph, pc, rh, rm; double f1; };
  for (auto row : {Row{360, 1000, 436, 1000, 39.4}, Row{290, 1000, 508, 1000, 36.9},
                   Row{301, 1000, 571, 1000, 39.4}}) {
    std::vector<AnswerReport> rs = {report(row.pc, row.ph, row.rm, row.rh)};
    auto c = aggregate(rs);
    EXPECT_NEAR(text::round1(*c.micro_f1), row.f1, 0.05);
    EXPECT_DOUBLE_EQ(*c.micro_f1, *c.macro_f1);
  }
}

TEST(Aggregate, ZeroCitationAnswersExcludedFromPrecisionOnly) {
  std::vector<AnswerReport> rs = {report(4, 2, 5, 2), report(0, 0, 5, 0)};
  auto c = aggregate(rs);
  EXPECT_DOUBLE_EQ(*c.micro_p, 50.0);
  EXPECT_DOUBLE_EQ(*c.micro_r, 20.0);
  EXPECT_DOUBLE_EQ(*c.macro_p, 50.0);
  EXPECT_DOUBLE_EQ(*c.macro_r, 20.0);
  EXPECT_THROW(aggregate(std::span<const AnswerReport>{}), std::invalid_argument);
}

TEST(Aggregate, F1AbsentWhenBothZero) {
  std::vector<AnswerReport> rs = {report(3, 0, 4, 0)};
  auto c = aggregate(rs);
  EXPECT_DOUBLE_EQ(*c.micro_p, 0.0);
  EXPECT_FALSE(c.micro_f1.has_value());
}

TEST(Aggregate, CorrectnessPoolingToggle) {
  std::vector<AnswerReport> rs = {report(1, 1, 1, 1), report(3, 0, 1, 0)};
  EXPECT_DOUBLE_EQ(*aggregate(rs).correctness, 25.0);
  AggregateOptions opt;
  opt.correctness = CorrectnessPooling::kPerAnswerMean;
  EXPECT_DOUBLE_EQ(*aggregate(rs, opt).correctness, 50.0);
}

TEST(Alignment, HertwigPairAndCounts) {
  TableJudge judge;
  judge.yes.insert({"Hertwig served as a professor at the University of Jena for the last 40 "
                    "years of his career.",
                    "employer: University of Jena"});
  auto a = parse_answer(
      "Hertwig served as a professor at the University of Jena for the last 40 years of his "
      "career [Q68753, employer: University of Jena].");
  auto c = alignment(a, judge);
  EXPECT_EQ(c.entailed, 1u);
  EXPECT_EQ(c.total, 1u);

  auto none = alignment(parse_answer("No citations here [NA]."), judge);
  EXPECT_EQ(none.total, 0u);
  EXPECT_FALSE(none.fraction().has_value());
}

TEST(Alignment, SevenOfTen) {
  TableJudge judge;
  std::string raw;
  for (int i = 0; i < 10; ++i) {
    std::string sentence = "Sentence " + std::to_string(i) + ".";
    raw += "Sentence " + std::to_string(i) + " [Q1, r" + std::to_string(i) + ": v]. ";
    if (i < 7) judge.yes.insert({sentence, "r" + std::to_string(i) + ": v"});
  }
  auto c = alignment(parse_answer(raw), judge);
  EXPECT_EQ(c.total, 10u);
  EXPECT_EQ(c.entailed, 7u);
  EXPECT_DOUBLE_EQ(*c.fraction(), 0.7);
}

TEST(Alignment, JudgeErrorsCarryPairIdentity) {
  ThrowingJudge judge;
  try {
    alignment(parse_answer("One. Two [Q1, religion: atheism]."), judge);
    FAIL();
  } catch (const JudgeError& e) {
    std::string what = e.what();
    EXPECT_NE(what.find("religion: atheism"), std::string::npos);
    EXPECT_NE(what.find("sentence #1"), std::string::npos);
  }
}

TEST(Alignment, InvariantUnderSentenceReordering) {
  TableJudge judge;
  judge.yes.insert({"A.", "r: x"});
  judge.yes.insert({"C.", "t: z"});
  auto a = alignment(parse_answer("A [Q1, r: x]. B [Q1, s: y]. C [Q1, t: z]."), judge);
  auto b = alignment(parse_answer("C [Q1, t: z]. A [Q1, r: x]. B [Q1, s: y]."), judge);
  EXPECT_EQ(a.entailed, b.entailed);
  EXPECT_EQ(a.total, b.total);
}

TEST(NaScoring, NoNaSentences) {
  AlwaysJudge judge(true);
  TripleSet absent = {T("Q1", "r", "v")};
  auto bits = na_precision_recall(parse_answer("Plain [Q1, s: w]."), absent, judge);
  EXPECT_TRUE(bits.precision.empty());
  EXPECT_EQ(bits.recall, std::vector<bool>{false});
}

TEST(NaScoring, SingleNaEntailingRemovedTriple) {
  TableJudge judge;
  judge.yes.insert({"He was a biologist.", "occupation: biologist"});
  TripleSet absent = {T("Q85907", "occupation", "biologist")};
  auto bits = na_precision_recall(parse_answer("He was a biologist [NA]."), absent, judge);
  EXPECT_EQ(bits.precision, std::vector<bool>{true});
  EXPECT_EQ(bits.recall, std::vector<bool>{true});
}

TEST(NaScoring, OffTopicCreditIsOptIn) {
  AlwaysJudge judge(false);
  OffTopic rel;
  TripleSet absent = {T("Q1", "r", "v")};
  auto a = parse_answer("Unrelated musing [NA].");
  EXPECT_EQ(na_precision_recall(a, absent, judge).precision, std::vector<bool>{false});
  NaOptions opt;
  opt.offtopic_credit = true;
  opt.relevance = &rel;
  auto bits = na_precision_recall(a, absent, judge, opt);
  EXPECT_EQ(bits.precision, std::vector<bool>{true});
  EXPECT_EQ(bits.recall, std::vector<bool>{false});
  NaOptions broken;
  broken.offtopic_credit = true;
  EXPECT_THROW(na_precision_recall(a, absent, judge, broken), std::invalid_argument);
}

TEST(Evaluate, HandBuiltTwoAnswerCorpus) {
  // Answer 1: 3 triple citations, 2 retrieved, 1 in min set; 1 malformed.
  // Answer 2: 1 triple citation, correct, in min set.
  auto g1 = graph("Q1", {T("Q1", "a", "x"), T("Q1", "b", "y"), T("Q1", "c", "z")});
  auto g2 = graph("Q2", {T("Q2", "d", "w")});
  MinKnowledgeSet m1 = {T("Q1", "a", "x"), T("Q1", "c", "z")};
  MinKnowledgeSet m2 = {T("Q2", "d", "w")};
  auto a1 = parse_answer("One [Q1, a: x, b: y]. Two [Q1, e: q] [Q1]. ");
  auto a2 = parse_answer("Three [Q2, d: w].");
  std::vector<SubGraph> k1 = {g1}, k2 = {g2};
  AlwaysJudge yes(true);
  EvaluationJudges judges{&yes, nullptr, false};
  auto r1 = evaluate_answer({"q1", "", &a1, k1, &m1, nullptr}, judges);
  auto r2 = evaluate_answer({"q2", "", &a2, k2, &m2, nullptr}, judges);
  EXPECT_EQ(r1.n_citations, 3u);
  EXPECT_EQ(r1.n_malformed, 1u);
  EXPECT_EQ(r1.n_correct, 2u);
  EXPECT_EQ(r1.precision_hits, 1u);
  EXPECT_EQ(r1.recall_hits, 1u);
  EXPECT_EQ(r1.alignment_pairs.total, 3u);
  std::vector<AnswerReport> rs = {r1, r2};
  auto c = aggregate(rs);
  EXPECT_DOUBLE_EQ(*c.correctness, 100.0 * 3 / 5);
  EXPECT_DOUBLE_EQ(*c.micro_p, 100.0 * 2 / 4);
  EXPECT_DOUBLE_EQ(*c.micro_r, 100.0 * 2 / 3);
  EXPECT_DOUBLE_EQ(*c.macro_p, 100.0 * (1.0 / 3 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(*c.macro_r, 100.0 * (0.5 + 1.0) / 2);
  double p = 0.5, r = 2.0 / 3;
  EXPECT_NEAR(*c.micro_f1, 100.0 * 2 * p * r / (p + r), 1e-9);
  EXPECT_DOUBLE_EQ(*c.alignment_pct, 100.0);
}

TEST(Evaluate, NullJudgeSkipsAlignment) {
  auto a = parse_answer("S [Q1, a: x].");
  std::vector<SubGraph> kg = {graph("Q1", {T("Q1", "a", "x")})};
  MinKnowledgeSet m = {T("Q1", "a", "x")};
  auto r = evaluate_answer({"q", "", &a, kg, &m, nullptr}, {});
  EXPECT_EQ(r.alignment_pairs.total, 0u);
  EXPECT_EQ(r.recall_hits, 1u);
}

// Property: on corpora without malformed citations, micro precision never
// exceeds correctness.
TEST(Properties, PrecisionBoundedByCorrectness) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<AnswerReport> reports;
    size_t n = 1 + rng.below(5);
    for (size_t i = 0; i < n; ++i) {
      std::vector<KnowledgeTriple> universe;
      for (int k = 0; k < 8; ++k) universe.push_back(T("Q1", "r" + std::to_string(k), "v"));
      TripleSet kg, min;
      for (const auto& t : universe) {
        if (rng.below(2)) kg.insert(t);
        if (rng.below(3) == 0) min.insert(t);
      }
      std::string raw;
      size_t nc = rng.below(7);
      for (size_t c = 0; c < nc; ++c) {
        raw += "S" + std::to_string(c) + " [Q1, r" + std::to_string(rng.below(8)) + ": v]. ";
      }
      auto a = parse_answer(raw);
      std::vector<SubGraph> g = {SubGraph(Entity{EntityId("Q1"), "x", "human"}, kg)};
      reports.push_back(evaluate_answer({"q", "", &a, g, &min, nullptr}, {}));
    }
    auto c = aggregate(reports);
    if (c.micro_p) {
      EXPECT_LE(*c.micro_p, *c.correctness + 1e-9);
    }
    if (c.micro_p && c.micro_r && c.micro_f1) {
      double p = *c.micro_p, r = *c.micro_r;
      EXPECT_NEAR(*c.micro_f1, 2 * p * r / (p + r), 1e-9);
    }
  }
}

TEST(Properties, SingleAnswerMicroEqualsMacro) {
  std::vector<AnswerReport> rs = {report(7, 3, 6, 2)};
  auto c = aggregate(rs);
  EXPECT_DOUBLE_EQ(*c.micro_p, *c.macro_p);
  EXPECT_DOUBLE_EQ(*c.micro_r, *c.macro_r);
}
