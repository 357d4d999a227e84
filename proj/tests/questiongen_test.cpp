#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kalma/questiongen.hpp"
#include "kalma/rng.hpp"

using namespace kalma;

namespace {

const std::string kData = KALMA_TEST_DATA;

const KnowledgeStore& people() {
  static const KnowledgeStore s = load_store(kData + "/people.jsonl");
  return s;
}

const std::string kSimeoneSeed =
    "The son of former Argentine international footballer Diego Simeone and Carolina Baldini "
    "Giovanni Simeone was born in Madrid while his father was playing for Atletico Madrid.";

KnowledgePool simeone_pool() {
  KnowledgePool pool;
  pool.subgraphs = {people().neighborhood(EntityId("Q258115")),
                    people().neighborhood(EntityId("Q6439494"))};
  return pool;
}

UnigramPerplexity simeone_lm() {
  UnigramPerplexity lm;
  lm.train(kSimeoneSeed);
  for (const auto& g : simeone_pool().subgraphs) {
    for (const auto& line : people().flatten(g)) lm.train(line);
  }
  return lm;
}

// A three-candidate fixture with scripted perplexities.
struct ThreeCandidates {
  KnowledgePool pool;
  RelationStats stats;
  PerplexityFn perp;

  ThreeCandidates() {
    SubGraph g(Entity{EntityId("Q1"), "Ada Lovelace", "human"});
    g.insert({"Q1", "r1", "x"});
    g.insert({"Q1", "r2", "y"});
    g.insert({"Q1", "r3", "z"});
    pool.subgraphs = {g};
    stats.total = 20;
    stats.counts = {{"r1", 10}, {"r2", 2}, {"r3", 5}};
    perp = [](const std::string& text) {
      if (text.find("r1 is x.") != std::string::npos) return 1.25;
      if (text.find("r2 is y.") != std::string::npos) return 10.0;
      return 2.0;
    };
  }
};

}  // namespace

TEST(Selection, NamePairFilter) {
  EXPECT_TRUE(filter_name_pair("William Shakespeare", "Anne Hathaway", "Spouse"));
  EXPECT_FALSE(filter_name_pair("Prince", "Anne Hathaway", "Friend"));
  EXPECT_FALSE(filter_name_pair("", "X Y", "r"));
  EXPECT_TRUE(filter_name_pair("  Oscar   Hertwig ", "Richard Hertwig", "sibling"));
}

TEST(Disambiguation, NamesakeConnectedBySpouseEdge) {
  auto p = disambiguate_pair("William Shakespeare", "Anne Hathaway", "Spouse", people());
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->first.str(), "Q692");
  EXPECT_EQ(p->second.str(), "Q206924");
  EXPECT_FALSE(disambiguate_pair("William Shakespeare", "Diego Simeone", "spouse", people()));
  auto s = disambiguate_pair("Giovanni Simeone", "Diego Simeone", "father", people());
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->first.str(), "Q6439494");
  EXPECT_EQ(s->second.str(), "Q258115");
  // Edge stored on the other person.
  EXPECT_TRUE(disambiguate_pair("Diego Simeone", "Giovanni Simeone", "FATHER", people()));
  EXPECT_FALSE(disambiguate_pair("Nobody Known", "Diego Simeone", "father", people()));
}

TEST(Specificity, FormulaAndMonotonicity) {
  RelationStats stats{{{"gender", 200}, {"rare", 2}}, 100};
  EXPECT_DOUBLE_EQ(specificity("gender", stats), 0.0);
  // ln(100) evaluated through log10.
  EXPECT_NEAR(specificity("rare", stats), std::log10(100.0) / std::log10(std::exp(1.0)),
              1e-12);
  EXPECT_NEAR(specificity("rare", stats), 4.60517, 1e-5);
  EXPECT_THROW(specificity("unknown", stats), std::invalid_argument);
  for (size_t c = 1; c < 300; ++c) {
    EXPECT_GT(specificity_from_count(c, 100), specificity_from_count(c + 1, 100));
  }
}

TEST(Coherence, SmallCases) {
  auto one = coherence_scores(std::vector<std::string>{"a"}, "p", [](const std::string&) { return 7.0; });
  EXPECT_DOUBLE_EQ(one[0], 1.0);
  auto eq = coherence_scores(std::vector<std::string>{"a", "b"}, "p",
                             [](const std::string&) { return 3.0; });
  EXPECT_DOUBLE_EQ(eq[0], 0.5);
  EXPECT_DOUBLE_EQ(eq[1], 0.5);
  auto two = coherence_scores(std::vector<std::string>{"a", "b"}, "",
                              [](const std::string& s) { return s == "a" ? 2.0 : 4.0; });
  double expect = 1.0 / (1.0 + std::exp(-0.25));  // e^.5 / (e^.5 + e^.25)
  EXPECT_NEAR(two[0], expect, 1e-12);
  EXPECT_NEAR(two[0], 0.5622, 1e-4);
  EXPECT_NEAR(two[1], 0.4378, 1e-4);
  auto summed = coherence_scores(std::vector<std::string>{"a", "b"}, "",
                                 [](const std::string& s) { return s == "a" ? 2.0 : 4.0; },
                                 CoherenceNormalization::kSum);
  EXPECT_NEAR(summed[0], 2.0 / 3.0, 1e-12);
  EXPECT_THROW(coherence_scores(std::vector<std::string>{"a"}, "", [](const std::string&) { return 0.0; }),
               std::invalid_argument);
  EXPECT_THROW(coherence_scores(std::vector<std::string>{}, "", [](const std::string&) { return 1.0; }),
               std::invalid_argument);
}

TEST(Coherence, SumsToOneAndPermutationEquivariant) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 1 + rng.below(12);
    std::vector<std::string> cands;
    std::map<std::string, double> perp;
    for (size_t i = 0; i < n; ++i) {
      cands.push_back("c" + std::to_string(i));
      perp[cands.back()] = 1.0 + rng.unit() * 50.0;
    }
    PerplexityFn fn = [&](const std::string& s) { return perp.at(s); };
    auto scores = coherence_scores(cands, "", fn);
    double sum = 0.0;
    for (double v : scores) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    auto order = rng.permutation(n);
    std::vector<std::string> shuffled;
    for (size_t i : order) shuffled.push_back(cands[i]);
    auto again = coherence_scores(shuffled, "", fn);
    for (size_t i = 0; i < n; ++i) EXPECT_NEAR(again[i], scores[order[i]], 1e-15);
  }
}

TEST(Templates, ThreeForms) {
  EXPECT_EQ(templatize({"Q212657", "place of birth", "Rome"}, "Artemisia"),
            "Artemisia's place of birth is Rome");
  EXPECT_EQ(templatize({"Q212657", "educated at", "Rome"}, "Artemisia"), "Artemisia educated at Rome");
  EXPECT_EQ(templatize({"Q212657", "member of", "Accademia delle Arti del Disegno"}, "Artemisia"),
            "Artemisia is a member of Accademia delle Arti del Disegno");
  EXPECT_EQ(templatize({"Q1", "some new relation", "v"}, "X"), "X's some new relation is v");
}

TEST(Select, HandEvaluatedThreeCandidates) {
  ThreeCandidates f;
  EvolutionState state;
  state.pool = f.pool;
  state.paragraph = "Ada Lovelace wrote notes.";
  SelectionOptions opt;
  opt.alpha = 0.5;
  auto scored = score_candidates(state, f.stats, f.perp, opt);
  ASSERT_EQ(scored.size(), 3u);
  // Precomputed by hand: ln(40/c) and softmax(0.8, 0.1, 0.5).
  const double expected[3] = {0.916621, 1.608840, 1.205274};
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(scored[i].score, expected[i], 1e-5) << i;
  EXPECT_EQ(select_knowledge(state, f.stats, f.perp, opt).relation(), "r2");

  opt.alpha = 0.0;
  EXPECT_EQ(select_knowledge(state, f.stats, f.perp, opt).relation(), "r1");

  opt.alpha = 1.0;
  PerplexityFn explode = [](const std::string&) -> double { throw std::logic_error("consulted"); };
  EXPECT_EQ(select_knowledge(state, f.stats, explode, opt).relation(), "r2");
}

TEST(Select, AlphaOneIgnoresPerplexity) {
  ThreeCandidates f;
  EvolutionState state;
  state.pool = f.pool;
  SelectionOptions opt;
  opt.alpha = 1.0;
  Rng rng(11);
  auto first = select_knowledge(state, f.stats, f.perp, opt);
  for (int i = 0; i < 20; ++i) {
    double a = 0.5 + rng.unit() * 20, b = 0.5 + rng.unit() * 20;
    PerplexityFn fn = [&](const std::string& s) { return s.size() % 2 ? a : b; };
    EXPECT_EQ(select_knowledge(state, f.stats, fn, opt), first);
  }
}

TEST(Select, NeverReturnsUsedAndTiesAreLexicographic) {
  ThreeCandidates f;
  EvolutionState state;
  state.pool = f.pool;
  state.pool.used.insert({"Q1", "r2", "y"});
  SelectionOptions opt;
  opt.alpha = 1.0;
  EXPECT_EQ(select_knowledge(state, f.stats, f.perp, opt).relation(), "r3");
  RelationStats flat{{{"r1", 1}, {"r2", 1}, {"r3", 1}}, 20};
  EXPECT_EQ(select_knowledge(state, flat, f.perp, opt).relation(), "r1");
  state.pool.used.insert({"Q1", "r1", "x"});
  state.pool.used.insert({"Q1", "r3", "z"});
  EXPECT_THROW(select_knowledge(state, f.stats, f.perp, opt), std::invalid_argument);
}

TEST(Evolve, SingleRoundKeepsAnnotationsOnly) {
  TemplateConstructionModel model;
  auto lm = simeone_lm();
  EvolveOptions opt;
  opt.rounds = 1;
  auto r = evolve(kSimeoneSeed, simeone_pool(), RelationStats{{}, 1}, model, std::cref(lm), opt);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.entry.minimum_knowledge_set, r.trace[0].knowledge);
  TripleSet ann(r.trace[0].knowledge.begin(), r.trace[0].knowledge.end());
  EXPECT_TRUE(ann.count({"Q6439494", "place of birth", "Madrid"}));
  EXPECT_TRUE(ann.count({"Q6439494", "father", "Diego Simeone"}));
  EXPECT_TRUE(ann.count({"Q258115", "member of sports team", "Atletico Madrid"}));
}

TEST(Evolve, FiveRoundsOnSimeoneFixture) {
  TemplateConstructionModel model;
  auto lm = simeone_lm();
  RelationStats stats{{{"occupation", 60}, {"member of sports team", 30}, {"place of birth", 50},
                       {"father", 20}, {"child", 20}, {"position played on team", 8},
                       {"medical condition", 3}, {"date of birth", 70},
                       {"country of citizenship", 80}},
                      100};
  auto run = [&] { return evolve(kSimeoneSeed, simeone_pool(), stats, model, std::cref(lm)); };
  auto r = run();
  ASSERT_EQ(r.trace.size(), 5u);
  EXPECT_FALSE(r.trace[0].knowledge.empty());
  for (int i = 1; i < 5; ++i) {
    EXPECT_EQ(r.trace[i].round, i + 1);
    ASSERT_EQ(r.trace[i].knowledge.size(), 1u);
    // The injected fact is stated in the text added this round.
    EXPECT_NE(r.trace[i].added_text.find(r.trace[i].knowledge[0].object()), std::string::npos);
    // Every paragraph stays parseable with no malformed citations.
    for (const auto& s : parse_answer(r.trace[i].paragraph).sentences) {
      for (const auto& c : s.citations) EXPECT_FALSE(is_malformed(c));
    }
  }
  EXPECT_GE(r.entry.minimum_knowledge_set.size(), 4u);
  EXPECT_LE(r.entry.minimum_knowledge_set.size(), 10u);
  EXPECT_EQ(r.entry.people, (std::vector<EntityId>{EntityId("Q258115"), EntityId("Q6439494")}));
  EXPECT_FALSE(r.entry.general_question.empty());
  EXPECT_NE(r.entry.general_question, r.entry.specific_question);
  // Rare relation with high specificity is picked in round 2.
  EXPECT_EQ(r.trace[1].knowledge[0].relation(), "medical condition");

  auto again = run();
  EXPECT_EQ(again.entry, r.entry);
  EXPECT_EQ(to_json(again.entry).dump(), to_json(r.entry).dump());
}

TEST(Evolve, FailureKeepsPartialTrace) {
  class Flaky : public TemplateConstructionModel {
   public:
    int calls = 0;
    std::string extend(const std::string& p, const KnowledgeTriple& k, const std::string& n) override {
      if (++calls == 2) throw JudgeError("timeout");
      return TemplateConstructionModel::extend(p, k, n);
    }
  };
  Flaky model;
  auto lm = simeone_lm();
  try {
    evolve(kSimeoneSeed, simeone_pool(), RelationStats{{}, 10}, model, std::cref(lm));
    FAIL();
  } catch (const EvolutionError& e) {
    EXPECT_EQ(e.partial_trace().size(), 2u);
    EXPECT_NE(std::string(e.what()).find("round 3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, KeyOrderAndRoundTrip) {
  DatasetEntry e;
  e.general_question =
      "Who were Oscar and Richard Hertwig, and what were their contributions to the fields of "
      "anatomy and biology?";
  e.specific_question = "What were the career paths of Oscar and Richard Hertwig?";
  e.minimum_knowledge_set = {{"Q85907", "occupation", "biologist"},
                             {"Q68753", "doctoral advisor", "Ernst Haeckel"}};
  e.people = {EntityId("Q85907"), EntityId("Q68753")};
  std::string line = to_json(e).dump();
  EXPECT_EQ(line.rfind("{\"general_question\":", 0), 0u);
  EXPECT_LT(line.find("specific_question"), line.find("minimum_knowledge_set"));
  EXPECT_LT(line.find("minimum_knowledge_set"), line.find("people"));
  EXPECT_NE(line.find("[\"Q85907\",\"occupation\",\"biologist\"]"), std::string::npos);
  std::stringstream ss;
  e.id = "q1";
  write_dataset(ss, {e});
  EXPECT_EQ(ss.str(), line + "\n");
  auto back = load_dataset(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], e);

  std::istringstream bad(R"({"general_question":"a","specific_question":"b","minimum_knowledge_set":[],"people":[]})");
  EXPECT_THROW(load_dataset(bad), ParseError);
}
