#pragma once

// Seeded synthetic store and dataset for scale tests of the ablation
// harnesses. Every entry gets its own people, so gold graphs of different
// entries never share a center.

#include <array>
#include <string>
#include <vector>

#include "kalma/dataset.hpp"
#include "kalma/kg_store.hpp"
#include "kalma/rng.hpp"

namespace kalma {

struct SyntheticOptions {
  size_t entries = 200;
  size_t min_set_size = 5;    // 0 draws a size in [3, 6] per entry
  size_t max_people = 2;      // people per entry drawn from [1, max_people]
  size_t facts_per_person = 6;
  uint64_t seed = 0;
};

struct SyntheticCorpus {
  KnowledgeStore store;
  std::vector<DatasetEntry> entries;
};

namespace detail {

inline const std::vector<std::string>& synth_given_names() {
  static const std::vector<std::string> v = {
      "Adela", "Bruno", "Celina", "Dorian", "Elsa", "Feliks", "Greta", "Hugo", "Ines", "Jonas",
      "Klara", "Lorenz", "Mira", "Nils", "Olga", "Pavel", "Rosa", "Silas", "Tilda", "Urban",
      "Vera", "Wendel", "Yara", "Zeno", "Agnes", "Bastian", "Cosima", "Emil", "Frida", "Gustav",
      "Hedda", "Ivo", "Janka", "Kasimir", "Linnea", "Matteo", "Nora", "Oskar", "Petra", "Quirin",
      "Runa", "Stellan", "Thea", "Ulrich", "Viggo", "Wilma", "Xaver", "Ylva", "Zora", "Anselm"};
  return v;
}

inline const std::vector<std::string>& synth_surnames() {
  static const std::vector<std::string> v = {
      "Abendroth", "Brandauer", "Castellan", "Dellinger", "Eckhart", "Falkenrath", "Gellert",
      "Hallowell", "Ilsinger", "Jorgensen", "Kettering", "Lindqvist", "Marchetti", "Nordahl",
      "Oberlin", "Pasternak", "Quellmalz", "Rasmussen", "Salvatori", "Thorvald", "Ulbricht",
      "Vasquez", "Wendling", "Yardley", "Zellweger", "Albrecht", "Bergmann", "Corvino", "Dunmore",
      "Engstrom", "Fontaine", "Grunwald", "Holbrook", "Isaksen", "Janowski", "Kallweit", "Lorimer",
      "Moravec", "Nyberg", "Ostrander", "Pellegrini", "Radcliffe", "Sandoval", "Tellheim",
      "Uhlmann", "Vandermeer", "Winthrop", "Ziegler", "Aldana", "Bramante", "Cederholm",
      "Dragomir", "Ellery", "Fischbach", "Gorecki", "Hartmann", "Ingersoll", "Kovacic",
      "Lemaire", "Mortensen"};
  return v;
}

struct SynthRelation {
  const char* relation;
  std::vector<std::string> values;
};

inline const std::vector<SynthRelation>& synth_relations() {
  static const std::vector<std::string> cities = {
      "Lyon", "Turin", "Leiden", "Uppsala", "Krakow", "Porto", "Ghent", "Graz", "Bergen", "Tartu",
      "Basel", "Bologna", "Seville", "Aarhus", "Brno", "Pisa", "Zurich", "Dresden", "Coimbra", "Lund"};
  static const std::vector<std::string> institutions = {
      "University of Leiden", "University of Uppsala", "University of Bologna",
      "University of Tartu", "University of Basel", "University of Coimbra",
      "Jagiellonian University", "University of Graz", "Lund University", "University of Pisa"};
  static const std::vector<SynthRelation> v = {
      {"occupation", {"botanist", "chemist", "painter", "sculptor", "architect", "physician",
                      "composer", "novelist", "astronomer", "engineer", "mathematician",
                      "historian", "linguist", "geologist", "economist"}},
      {"place of birth", cities},
      {"place of death", cities},
      {"work location", cities},
      {"educated at", institutions},
      {"employer", institutions},
      {"award received", {"Copley Medal", "Royal Medal", "Lalande Prize", "Rumford Medal",
                          "Davy Medal", "Wollaston Medal", "Linnean Medal", "Lyell Medal"}},
      {"field of work", {"botany", "organic chemistry", "astronomy", "number theory",
                         "linguistics", "seismology", "economics", "music theory",
                         "crystallography", "embryology"}},
      {"member of", {"Royal Society", "Leopoldina", "Academy of Sciences of Turin",
                     "Royal Swedish Academy of Sciences", "Academie des Sciences"}},
  };
  return v;
}

inline std::string synth_date(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", 1800 + static_cast<int>(rng.below(150)),
                1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28)));
  return buf;
}

}  // namespace detail

inline SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& opt) {
  if (opt.max_people < 1) throw std::invalid_argument("max_people must be >= 1");
  const auto& given = detail::synth_given_names();
  const auto& surnames = detail::synth_surnames();
  const auto& relations = detail::synth_relations();
  const size_t max_facts = relations.size() + 1;  // + date of birth
  if (opt.facts_per_person < 1 || opt.facts_per_person > max_facts) {
    throw std::invalid_argument("facts_per_person must lie in [1, " + std::to_string(max_facts) + "]");
  }
  const size_t max_needed = opt.min_set_size == 0 ? 6 : opt.min_set_size;
  if (max_needed > opt.facts_per_person) {
    throw std::invalid_argument("min_set_size exceeds the facts of a single person");
  }

  Rng rng(opt.seed);
  auto name_order = rng.permutation(given.size() * surnames.size());
  if (opt.entries * opt.max_people > name_order.size()) {
    throw std::invalid_argument("too many synthetic people for the name pool");
  }
  SyntheticCorpus out;
  size_t next_person = 0;
  for (size_t e = 0; e < opt.entries; ++e) {
    size_t n_people = 1 + static_cast<size_t>(rng.below(opt.max_people));
    size_t want = opt.min_set_size == 0 ? 3 + static_cast<size_t>(rng.below(4)) : opt.min_set_size;

    std::vector<Entity> people;
    std::vector<std::vector<KnowledgeTriple>> facts;  // citable, non-identity
    for (size_t p = 0; p < n_people; ++p, ++next_person) {
      size_t k = name_order[next_person];
      const std::string& g = given[k % given.size()];
      const std::string& s = surnames[k / given.size()];
      Entity person{EntityId("Q" + std::to_string(900001 + next_person)), g + " " + s, "human"};
      auto add = [&](const std::string& r, const std::string& o) {
        out.store.add({person.id.str(), person.name, person.type, r, o});
      };
      add("given name", g);
      add("surname", s);
      std::vector<KnowledgeTriple> mine;
      auto rel_order = rng.permutation(max_facts);
      for (size_t i = 0; i < opt.facts_per_person; ++i) {
        std::string r, o;
        if (rel_order[i] == relations.size()) {
          r = "date of birth";
          o = detail::synth_date(rng);
        } else {
          const auto& rel = relations[rel_order[i]];
          r = rel.relation;
          o = rel.values[rng.below(rel.values.size())];
        }
        add(r, o);
        mine.emplace_back(person.id, r, o);
      }
      people.push_back(person);
      facts.push_back(std::move(mine));
    }
    // The first person of a pair knows the second.
    if (n_people >= 2) {
      out.store.add({people[0].id.str(), people[0].name, "human", "student of", people[1].name});
    }

    // Min set drawn round-robin over the people so each graph carries an
    // even share.
    std::vector<std::vector<size_t>> orders;
    for (const auto& f : facts) orders.push_back(rng.permutation(f.size()));
    std::vector<KnowledgeTriple> min_set;
    for (size_t i = 0; min_set.size() < want; ++i) {
      size_t p = i % n_people;
      size_t j = i / n_people;
      if (j < facts[p].size()) min_set.push_back(facts[p][orders[p][j]]);
    }

    DatasetEntry entry;
    entry.id = positional_id(e);
    std::string names = people[0].name;
    for (size_t p = 1; p < people.size(); ++p) names += " and " + people[p].name;
    entry.general_question = people.size() == 1 ? "Who was " + names + "?"
                                                 : "How were " + names + " connected?";
    entry.specific_question = "Where did " + names + " work, and what is " +
                              (people.size() == 1 ? "this person" : "each of them") +
                              " remembered for?";
    entry.minimum_knowledge_set = std::move(min_set);
    for (const auto& p : people) entry.people.push_back(p.id);
    out.entries.push_back(std::move(entry));
  }
  return out;
}

}  // namespace kalma
