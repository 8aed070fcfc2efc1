#!/usr/bin/env python3
"""Convert WordNet `data.*` files into the flat thesaurus format.

Each output line is `word<TAB>syn1|syn2|...`. Only single-token, purely
alphabetic lemmas are kept. Synonyms are the other lemmas of every synset the
word belongs to, in file order, de-duplicated.

Usage: wordnet_to_thesaurus.py <wordnet dict dir> <output.tsv>
"""
import re
import sys
from pathlib import Path

WORD = re.compile(r"^[a-z]+(?:'[a-z]+)?$")


def synsets(dict_dir):
    for pos in ("adj", "adv", "noun", "verb"):
        with open(Path(dict_dir) / f"data.{pos}", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("  "):
                    continue
                fields = line.split()
                count = int(fields[3], 16)
                words = []
                for i in range(count):
                    w = fields[4 + 2 * i].lower()
                    w = re.sub(r"\([a-z]+\)$", "", w)
                    if WORD.match(w) and w not in words:
                        words.append(w)
                if len(words) > 1:
                    yield words


def main():
    dict_dir, out = sys.argv[1], sys.argv[2]
    table = {}
    for words in synsets(dict_dir):
        for w in words:
            syns = table.setdefault(w, [])
            for s in words:
                if s != w and s not in syns:
                    syns.append(s)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("# Derived from WordNet 3.1 (Princeton University). See assets/WORDNET_LICENSE.\n")
        for w in sorted(table):
            fh.write(f"{w}\t{'|'.join(table[w])}\n")


if __name__ == "__main__":
    main()
