#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kalma/prompts.hpp"

using namespace kalma;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::filesystem::path kPrompts = KALMA_PROMPT_DIR;
const std::filesystem::path kGolden = KALMA_GOLDEN_DIR;

const std::string kQuestion =
    "How did Artemisia Gentileschi's birthplace shape her early career?";
const std::string kAnswer =
    "Artemisia Gentileschi was born in Rome [Q212657, place of birth: Rome].";

std::vector<SubGraph> fixture_graphs() {
  SubGraph a(Entity{EntityId("Q212657"), "Artemisia Gentileschi", "human"});
  a.insert({"Q212657", "place of birth", "Rome"});
  a.insert({"Q212657", "occupation", "painter"});
  SubGraph o(Entity{EntityId("Q367360"), "Orazio Gentileschi", "human"});
  o.insert({"Q367360", "work location", "Rome"});
  return {a, o};
}

}  // namespace

TEST(Assets, EmbeddedCopiesMatchFiles) {
  size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kPrompts)) {
    if (entry.path().extension() != ".txt") continue;
    ++n;
    EXPECT_EQ(PromptLibrary::builtin().raw(entry.path().stem().string()), slurp(entry.path()))
        << entry.path() << " is stale; rerun tools/embed_prompts.py";
  }
  EXPECT_EQ(n, prompt_assets::kAll.size());
  EXPECT_EQ(PromptLibrary::from_directory(kPrompts).fingerprint(),
            PromptLibrary::builtin().fingerprint());
}

TEST(Golden, GenerationPrompt) {
  auto req = make_generation_request("q1", kQuestion, fixture_graphs(), nullptr);
  ASSERT_EQ(req.knowledge_block.size(), 2u);
  EXPECT_EQ(req.knowledge_block[1], "{name: Orazio Gentileschi, work location: Rome, qid: Q367360}");
  EXPECT_EQ(generation_prompt(req), slurp(kGolden / "generation.txt"));
}

TEST(Golden, GEvalPrompts) {
  auto req = make_generation_request("q1", kQuestion, fixture_graphs(), nullptr);
  std::string knowledge = join_lines(req.knowledge_block);
  for (auto m : kQualityMetrics) {
    std::string name = quality_metric_name(m);
    EXPECT_EQ(geval_prompt(m, kQuestion, kAnswer, knowledge),
              slurp(kGolden / ("geval_" + name + ".txt")))
        << name;
  }
}

TEST(Golden, NliPrompt) {
  EXPECT_EQ(nli_prompt("Hertwig served as a professor at the University of Jena for the last 40 "
                       "years of his career.",
                       "employer: University of Jena"),
            slurp(kGolden / "nli.txt"));
}

TEST(Fill, SlotsAndLiterals) {
  EXPECT_EQ(fill_template("a {x} b {x}", {{"x", "1"}}), "a 1 b 1");
  EXPECT_EQ(fill_template("{qid: Q1, name: {x}}", {{"x", "y"}}), "{qid: Q1, name: y}");
  // Inserted values are not re-scanned.
  EXPECT_EQ(fill_template("{a}", {{"a", "{b}"}}), "{b}");
  EXPECT_EQ(fill_template("{unknown}", {}), "{unknown}");
  EXPECT_THROW(fill_template("nothing", {{"x", "1"}}), std::invalid_argument);
  EXPECT_THROW(PromptLibrary::builtin().raw("no_such_template"), std::invalid_argument);
}

TEST(Fill, GenerationRequiresInstructionAndQuestion) {
  auto req = make_generation_request("q1", "  ", fixture_graphs(), nullptr);
  EXPECT_THROW(generation_prompt(req), std::invalid_argument);
  req.question = kQuestion;
  req.instruction = "";
  EXPECT_THROW(generation_prompt(req), std::invalid_argument);
}

TEST(Knowledge, DictForms) {
  auto gs = fixture_graphs();
  EXPECT_EQ(knowledge_dict(gs[0], nullptr, QidPlacement::kFirst),
            "{qid: Q212657, name: Artemisia Gentileschi, occupation: painter, place of birth: Rome}");
  SubGraph empty(Entity{EntityId("Q1"), "Solo Person", "human"});
  EXPECT_EQ(knowledge_dict(empty, nullptr), "{name: Solo Person, qid: Q1}");

  KnowledgeStore s;
  s.add({"Q220", "Rome", "city", "", ""});
  s.add({"Q212657", "Artemisia Gentileschi", "human", "place of birth", "Q220"});
  s.add({"Q212657", "Artemisia Gentileschi", "human", "name", "Artemisia Gentileschi"});
  EXPECT_EQ(knowledge_dict(s.neighborhood(EntityId("Q212657")), &s),
            "{name: Artemisia Gentileschi, place of birth: Rome, qid: Q212657}");
}

TEST(Construction, QuestionAndAnnotationPrompts) {
  auto g = question_prompt(QuestionKind::kGeneral, "P.");
  auto s = question_prompt(QuestionKind::kSpecific, "P.");
  EXPECT_NE(g, s);
  std::string tail = "Paragraph: P.\n\nGenerated Question:";
  ASSERT_GE(g.size(), tail.size());
  EXPECT_EQ(g.substr(g.size() - tail.size()), tail);
  auto a = annotate_prompt("S.", "{qid: Q1, name: X}");
  EXPECT_NE(a.find("sentence: S.\nknowledge: {qid: Q1, name: X}\n\nGenerated Answer:"),
            std::string::npos);
  auto e = extend_prompt("P.", "K");
  EXPECT_NE(e.find("answer: P.\nknowledge: K\n\nGenerated Answer:"), std::string::npos);
}

TEST(Library, DirectoryOverride) {
  auto dir = std::filesystem::temp_directory_path() / "kalma_prompt_override";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "nli.txt") << "P={premise} H={hypothesis}\n";
  auto lib = PromptLibrary::from_directory(dir);
  EXPECT_EQ(nli_prompt("a", "b", lib), "P=a H=b");
  EXPECT_NE(lib.fingerprint(), PromptLibrary::builtin().fingerprint());
  EXPECT_EQ(lib.body("geval_fluency"),
            PromptLibrary::builtin().body("geval_fluency"));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(PromptLibrary::from_directory(dir), Error);
}
