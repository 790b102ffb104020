#!/usr/bin/env python3
"""Generate the bundled synthetic joint corpus under data/synthetic.

A small fictional world of people, places, songs and jobs is rendered
twice: as answer-selection sentences and as KBQA candidate triples. Both
tasks draw their questions from the same entities.

    python3 tools/make_synthetic.py [output-dir]
"""

import os
import random
import sys

SEED = 20181

FIRST = ["alma", "boris", "celia", "dario", "elena", "farid", "greta", "hugo",
         "ines", "jonas", "kira", "lucas", "mira", "nils", "olga", "pablo",
         "rosa", "sven", "tara", "umar", "vera", "wendel", "xenia", "yusuf"]
LAST = ["reyes", "novak", "lindqvist", "moreau", "okafor", "petrov", "quint",
        "sato", "tamm", "ulloa", "varga", "weiss", "young", "zeller", "abara",
        "brandt", "castel", "duarte", "eriksen", "faber", "galle", "horvat",
        "iqbal", "jansen"]
CITIES = ["port elder", "vale marsh", "north cairn", "silverton", "old harrow",
          "brightwater", "kestrel bay", "amberfield", "lowmoor", "stonebridge",
          "redhaven", "wyncliff"]
COUNTRIES = ["arvenia", "belmora", "cordova", "dravia", "estmark", "falland"]
SONGS = ["velvet moon", "glass river", "cold harbor", "ember light", "quiet storm",
         "iron heart", "blue lantern", "hollow sky", "wild orchard", "salt road",
         "night owl", "copper bell", "gold meadow", "last ferry", "winter bloom",
         "silent engine"]
JOBS = ["carpenter", "surgeon", "painter", "pilot", "chemist", "librarian",
        "architect", "baker"]
INSTRUMENTS = ["violin", "cello", "trumpet", "piano", "harp", "drums"]
ADJ = ["busy", "quiet", "famous", "small", "ancient", "lively", "windy",
       "sunny", "crowded", "charming", "misty", "narrow", "grand", "humble",
       "restless", "sleepy", "wealthy", "rugged", "elegant", "foggy", "bustling",
       "remote", "colorful", "gloomy", "peaceful", "historic", "modern", "tiny",
       "vast", "hidden"]
NOUNS = ["market", "harbor", "festival", "cathedral", "library", "bridge",
         "garden", "museum", "lighthouse", "orchard", "canal", "fortress",
         "opera", "bazaar", "vineyard", "monastery", "carnival", "observatory",
         "promenade", "theater", "quarry", "tannery", "windmill", "aqueduct",
         "arcade", "boulevard", "citadel", "fountain"]
YEARS = ["spring", "summer", "autumn", "winter", "early sixties", "late seventies",
         "nineties", "wet season", "dry season"]

RELATIONS = {
    "people.person.place_of_birth": "place of birth",
    "music.artist.track": "artist track",
    "people.person.profession": "profession",
    "music.group_member.instrument": "instrument",
    "people.person.spouse_s": "spouse",
    "location.location.containedby": "contained by",
}

QUESTIONS = {
    "people.person.place_of_birth": ["where was {h} born ?", "what city is {h} from ?",
                                     "in which town did {h} grow up ?"],
    "music.artist.track": ["what is the name of a track created by {h} ?",
                           "name a song recorded by {h} .",
                           "which song did {h} release ?"],
    "people.person.profession": ["what does {h} do for a living ?",
                                 "what is the profession of {h} ?",
                                 "what job does {h} have ?"],
    "music.group_member.instrument": ["which instrument does {h} play ?",
                                      "what does {h} play in the band ?"],
    "people.person.spouse_s": ["who is {h} married to ?", "who is the spouse of {h} ?",
                               "whom did {h} marry ?"],
    "location.location.containedby": ["which country is {h} in ?",
                                      "where is {h} located ?"],
}

SENTENCES = {
    "people.person.place_of_birth": ["{h} was born in {t} , a town known for its {adj} {noun} .",
                                     "{h} grew up in {t} near the {adj} {noun} ."],
    "music.artist.track": ["{h} recorded the track {t} in the {year} .",
                           "the song {t} was released by {h} ."],
    "people.person.profession": ["{h} worked as a {t} for many years .",
                                 "by trade {h} is a {t} ."],
    "music.group_member.instrument": ["{h} plays the {t} in a {adj} band .",
                                      "on stage {h} performs on the {t} ."],
    "people.person.spouse_s": ["{h} married {t} after a long courtship .",
                               "{h} and {t} have been married since the {year} ."],
    "location.location.containedby": ["{h} is a {adj} city located in {t} .",
                                      "the {noun} of {h} attracts visitors from all over {t} ."],
}


def slug(name):
    return name.replace(" ", "_")


def build_world(rng):
    people = [f"{f} {l}" for f, l in zip(FIRST, rng.sample(LAST, len(LAST)))]
    facts = {}
    songs = SONGS[:]
    rng.shuffle(songs)
    for i, p in enumerate(people):
        facts[(p, "people.person.place_of_birth")] = rng.choice(CITIES)
        facts[(p, "music.artist.track")] = songs[i % len(songs)]
        facts[(p, "people.person.profession")] = rng.choice(JOBS)
        facts[(p, "music.group_member.instrument")] = rng.choice(INSTRUMENTS)
    partners = people[:]
    rng.shuffle(partners)
    for a, b in zip(partners[0::2], partners[1::2]):
        facts[(a, "people.person.spouse_s")] = b
        facts[(b, "people.person.spouse_s")] = a
    for c in CITIES:
        facts[(c, "location.location.containedby")] = rng.choice(COUNTRIES)
    return people, facts


def sentence(rng, head, rel, tail):
    tpl = rng.choice(SENTENCES[rel])
    return tpl.format(h=head, t=tail, adj=rng.choice(ADJ), noun=rng.choice(NOUNS),
                      year=rng.choice(YEARS))


def negatives(rng, facts, head, rel):
    """Two facts about the same head and two about other heads."""
    same_head = [(h, r) for (h, r) in facts if h == head and r != rel]
    same_rel = [(h, r) for (h, r) in facts if r == rel and h != head
                and facts[(h, r)] != facts[(head, rel)]]
    picks = rng.sample(same_head, min(2, len(same_head)))
    picks += rng.sample(same_rel, 4 - len(picks))
    return picks


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data", "synthetic")
    os.makedirs(out, exist_ok=True)
    rng = random.Random(SEED)
    people, facts = build_world(rng)
    keys = sorted(facts)
    rng.shuffle(keys)
    # Disjoint question facts per task and split.
    as_train, kb_train = keys[0:50], keys[50:100]
    as_dev, kb_dev = keys[100:116], keys[116:132]

    def write_as(path, items, prefix):
        with open(path, "w") as f:
            for i, (head, rel) in enumerate(items):
                gid = f"{prefix}{i:03d}"
                q = rng.choice(QUESTIONS[rel]).format(h=head)
                rows = [(sentence(rng, head, rel, facts[(head, rel)]), 1)]
                for h, r in negatives(rng, facts, head, rel):
                    rows.append((sentence(rng, h, r, facts[(h, r)]), 0))
                rng.shuffle(rows)
                for text, label in rows:
                    f.write(f"{gid}\t{q}\t{text}\t{label}\n")

    def write_kbqa(path, items, prefix):
        with open(path, "w") as f:
            for i, (head, rel) in enumerate(items):
                gid = f"{prefix}{i:03d}"
                q = rng.choice(QUESTIONS[rel]).format(h=head)
                rows = [((head, rel, facts[(head, rel)]), 1)]
                for h, r in negatives(rng, facts, head, rel):
                    rows.append(((h, r, facts[(h, r)]), 0))
                rng.shuffle(rows)
                for (h, r, t), label in rows:
                    f.write(f"{gid}\t{q}\t{slug(h)}\t{r}\t{slug(t)}\t{label}\n")

    write_as(os.path.join(out, "as_train.tsv"), as_train, "as-train-")
    write_as(os.path.join(out, "as_dev.tsv"), as_dev, "as-dev-")
    write_kbqa(os.path.join(out, "kbqa_train.tsv"), kb_train, "kb-train-")
    write_kbqa(os.path.join(out, "kbqa_dev.tsv"), kb_dev, "kb-dev-")

    entities = sorted(set(people) | set(CITIES) | set(COUNTRIES) | set(SONGS)
                      | set(JOBS) | set(INSTRUMENTS))
    with open(os.path.join(out, "names.tsv"), "w") as f:
        for e in entities:
            f.write(f"{slug(e)}\t{e}\n")
        for r in sorted(RELATIONS):
            f.write(f"{r}\t{r}\n")
    with open(os.path.join(out, "gazetteer.tsv"), "w") as f:
        for e in entities:
            f.write(f"{e}\t{slug(e)}\t{rng.uniform(0.5, 1.0):.3f}\n")
        for p in people:
            # Surname alone is ambiguous and stays below the link threshold.
            f.write(f"{p.split()[1]}\t{slug(p)}\t{rng.uniform(0.05, 0.19):.3f}\n")
    with open(os.path.join(out, "kb.tsv"), "w") as f:
        for (h, r) in sorted(facts):
            f.write(f"{slug(h)}\t{r}\t{slug(facts[(h, r)])}\n")


if __name__ == "__main__":
    main()
