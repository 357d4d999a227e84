#!/usr/bin/env python3
"""Writes the namesake disambiguation fixture to data/disambiguation/.

25 names, each shared by two people. Every name appears in two questions,
once per namesake. For 20 names the question mentions something from the
target's own neighborhood (sometimes next to a fact both namesakes share);
for the other 5 it mentions nothing that separates them.
"""

import json
import pathlib
import sys

GIVEN = ["Henrik", "Lucia", "Anton", "Marta", "Emile", "Sofia", "Victor", "Ilse", "Tobias", "Clara",
         "Rafael", "Elena", "Jakob", "Irene", "Mathis", "Livia", "Oskar", "Helene", "Bruno", "Nadia",
         "Felix", "Ada", "Lukas", "Greta", "Samuel"]
SURNAMES = ["Solberg", "Ferrante", "Kowalczyk", "Lindgren", "Moreau", "Bianchi", "Halvorsen", "Brandt",
            "Novak", "Castell", "Okafor", "Varga", "Ritter", "Sandoval", "Dufresne", "Marek", "Holm",
            "Amsel", "Quiroga", "Petrov", "Aalto", "Reinholt", "Vidal", "Stenberg", "Falk"]
CITIES = ["Lyon", "Turin", "Leiden", "Uppsala", "Krakow", "Porto", "Ghent", "Graz", "Bergen", "Tartu",
          "Basel", "Bologna", "Seville", "Aarhus", "Brno", "Pisa", "Zurich", "Dresden", "Coimbra", "Lund",
          "Trieste", "Salamanca", "Utrecht", "Riga", "Gdansk", "Nantes", "Bilbao", "Heidelberg",
          "Ljubljana", "Tampere", "Valencia", "Bruges", "Innsbruck", "Verona", "Odense", "Toulouse",
          "Linz", "Cork", "Malmo", "Ferrara", "Kaunas", "Lille", "Padua", "Vigo", "Bremen", "Siena",
          "Aachen", "Split", "Turku", "Girona"]
OCCUPATIONS = ["chemist", "painter", "architect", "composer", "novelist", "astronomer", "engineer",
               "historian", "botanist", "physician"]
EMPLOYERS = ["Institute of Marine Studies", "Northern Polytechnic", "Royal Conservatory",
             "Museum of Natural History", "Observatory of the South", "Academy of Fine Arts",
             "College of Surgeons", "Botanical Garden Trust", "National Archive", "Institute of Mines"]
SPOUSES = ["Marguerite Olsen", "Dorothea Klee", "Arvid Moen", "Beatrix Lund", "Cyril Hart",
           "Ottilie Sand", "Leopold Crane", "Rosalind Vey", "Gaspard Imre", "Hanne Witt"]


def build():
    records = []
    entries = []
    next_id = 700001
    for n in range(25):
        name = f"{GIVEN[n]} {SURNAMES[n]}"
        people = []
        for side in range(2):
            qid = f"Q{next_id}"
            next_id += 1
            facts = {
                "place of birth": CITIES[(2 * n + side) % len(CITIES)],
                "employer": EMPLOYERS[(n + 3 * side) % len(EMPLOYERS)],
                "spouse": SPOUSES[(2 * n + side) % len(SPOUSES)],
                # shared by both namesakes for the odd names
                "occupation": OCCUPATIONS[n % len(OCCUPATIONS)] if n % 2 else
                              OCCUPATIONS[(n + side * 5) % len(OCCUPATIONS)],
            }
            records.append({"subject_id": qid, "subject_name": name, "subject_type": "human",
                            "relation": "", "object": ""})
            for rel in sorted(facts):
                records.append({"subject_id": qid, "subject_name": name, "subject_type": "human",
                                "relation": rel, "object": facts[rel]})
            people.append((qid, facts))

        connected = n < 20
        for side in range(2):
            qid, facts = people[side]
            if connected:
                style = (n + side) % 3
                if style == 0:
                    q = f"What is known about {name}, who was born in {facts['place of birth']}?"
                    cue = "place of birth"
                elif style == 1:
                    q = f"How did {name} come to marry {facts['spouse']}?"
                    cue = "spouse"
                else:
                    q = (f"What did the {facts['occupation']} {name} achieve while working for "
                         f"the {facts['employer']}?")
                    cue = "employer"
                general = f"Who was {name}?"
            else:
                q = f"What is {name} remembered for?" if side == 0 else f"Why is {name} still discussed today?"
                cue = "occupation"
                general = f"Who was {name}?"
            entries.append({
                "general_question": general,
                "specific_question": q,
                "minimum_knowledge_set": [[qid, cue, facts[cue]]],
                "people": [qid],
            })
    return records, entries


def main():
    root = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent
    out = root / "data" / "disambiguation"
    out.mkdir(parents=True, exist_ok=True)
    records, entries = build()
    with open(out / "store.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    with open(out / "dataset.jsonl", "w") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")
    print(f"{len(entries)} questions, {len(records)} store records")


if __name__ == "__main__":
    main()
