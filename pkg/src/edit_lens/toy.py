"""Synthetic corpus generator for demos and end-to-end tests.

Builds a German-like target side with lemma/POS/dependency annotation, an
English-like source aligned to it, and several systems whose outputs are
noisy copies of a hidden gold sentence (moved blocks, wrong inflections,
lexical substitutions, dropped and extra words). Post-edits are lightly
perturbed copies of the same gold sentence. Everything is driven by one seed.
"""

from __future__ import annotations

import random
from pathlib import Path

import yaml

from edit_lens.corpus import AlignmentSet, Segment, Token, format_alignments, format_conllu, format_plain

# (forms, lemma, POS, dependency labels)
LEXICON = [
    (("Hund", "Hunde", "Hundes"), "Hund", "N", ("subj", "obja", "pn")),
    (("Haus", "Häuser", "Hauses"), "Haus", "N", ("obja", "pn", "subj")),
    (("Leben", "Lebens"), "Leben", "N", ("pn", "obja")),
    (("Video", "Videos"), "Video", "N", ("obja", "subj")),
    (("Idee", "Ideen"), "Idee", "N", ("subj", "obja")),
    (("Welt", "Welten"), "Welt", "N", ("pn",)),
    (("sieht", "sehen", "gesehen", "sah"), "sehen", "V", ("root", "neb", "cj")),
    (("wurden", "wird", "werden"), "werden", "V", ("aux",)),
    (("gezeigt", "zeigt", "zeigen"), "zeigen", "V", ("root", "aux", "objc")),
    (("funktioniert", "funktionieren"), "funktionieren", "V", ("neb", "root")),
    (("habe", "hat", "haben"), "haben", "V", ("aux", "root")),
    (("ich",), "ich", "PRO", ("subj",)),
    (("sie",), "sie", "PRO", ("subj", "obja")),
    (("das", "dies"), "das", "PRO", ("subj", "obja")),
    (("der", "die", "das", "dem", "den"), "die", "ART", ("det",)),
    (("ein", "eine", "einem"), "ein", "ART", ("det",)),
    (("in", "im"), "in", "PREP", ("pp",)),
    (("mit",), "mit", "PREP", ("pp",)),
    (("von", "vom"), "von", "PREP", ("pp",)),
    (("nicht",), "nicht", "PTKNEG", ("adv",)),
    (("zu",), "zu", "PTKZU", ("part",)),
    (("und",), "und", "KON", ("kon",)),
    (("sehr",), "sehr", "ADV", ("adv",)),
    (("einfach",), "einfach", "ADV", ("adv",)),
    (("schnell", "schnelle", "schnellen"), "schnell", "ADJA", ("attr",)),
    (("groß", "große", "großen"), "groß", "ADJA", ("attr",)),
]
SYNONYMS = {"sehen": ("anschauen", "betrachten"), "Hund": ("Köter",), "Idee": ("Gedanke",), "einfach": ("nur",)}
PUNCT_TOKENS = ((",", ","), (".", "."))
SYSTEMS = {
    # name: (block moves, inflection errors, substitutions, drops, extra words) per 10 words
    "PBSY": (0.9, 0.8, 0.9, 0.3, 0.3),
    "HPB": (1.1, 0.9, 1.0, 0.3, 0.3),
    "SPB": (1.0, 0.9, 0.9, 0.4, 0.3),
    "NMT": (0.3, 0.6, 0.7, 0.2, 0.2),
}


def _gold_sentence(rng: random.Random, length: int) -> tuple[list[Token], list[int]]:
    """Target tokens plus, for each target token, the lexicon id it came from (-1 for punctuation)."""
    tokens, ids = [], []
    for i in range(length):
        if i and i < length - 1 and rng.random() < 0.06:
            tokens.append(Token(",", ",", "$,", "punct"))
            ids.append(-1)
            continue
        k = rng.randrange(len(LEXICON))
        forms, lemma, pos, deps = LEXICON[k]
        tokens.append(Token(rng.choice(forms), lemma, pos, rng.choice(deps)))
        ids.append(k)
    tokens.append(Token(".", ".", "$.", "punct"))
    ids.append(-1)
    return tokens, ids


def _source_for(rng: random.Random, ids: list[int]) -> tuple[list[str], AlignmentSet]:
    """English-like source: one word per content target word, locally reordered."""
    content = [t for t, k in enumerate(ids) if k >= 0]
    order = list(content)
    # local reordering between source and target, as between English and German
    for _ in range(max(1, len(order) // 6)):
        i = rng.randrange(len(order))
        j = min(len(order) - 1, i + rng.randint(1, 3))
        order.insert(j, order.pop(i))
    words = [f"en{ids[t]}" for t in order] + ["."]
    links = {(s, t) for s, t in enumerate(order)}
    links.add((len(words) - 1, len(ids) - 1))
    return words, AlignmentSet(frozenset(links))


def _inflect(rng: random.Random, tok: Token) -> Token:
    for forms, lemma, pos, _ in LEXICON:
        if lemma == tok.lemma and pos == tok.pos:
            others = [f for f in forms if f != tok.surface]
            if others:
                return Token(rng.choice(others), tok.lemma, tok.pos, tok.dep_label)
    return tok


def _substitute(rng: random.Random, tok: Token) -> Token:
    if tok.lemma in SYNONYMS:
        word = rng.choice(SYNONYMS[tok.lemma])
        return Token(word, word, tok.pos, tok.dep_label)
    forms, lemma, pos, deps = LEXICON[rng.randrange(len(LEXICON))]
    return Token(rng.choice(forms), lemma, pos, rng.choice(deps))


def _perturb(rng: random.Random, gold: list[Token], rates: tuple[float, ...]) -> tuple[list[Token], list[int]]:
    """Noisy copy of ``gold``; the second list gives each output token's gold position or -1."""
    moves, infl, subs, drops, extras = (r * len(gold) / 10 for r in rates)
    toks = list(gold)
    origin = list(range(len(gold)))

    def times(rate: float) -> int:
        return int(rate) + (rng.random() < rate - int(rate))

    for _ in range(times(infl)):
        i = rng.randrange(len(toks))
        toks[i] = _inflect(rng, toks[i])
    for _ in range(times(subs)):
        i = rng.randrange(len(toks))
        if toks[i].pos not in ("$.", "$,"):
            toks[i] = _substitute(rng, toks[i])
    for _ in range(times(moves)):
        if len(toks) < 4:
            break
        length = rng.randint(1, 3)
        i = rng.randrange(len(toks) - length)
        block, block_origin = toks[i : i + length], origin[i : i + length]
        del toks[i : i + length], origin[i : i + length]
        j = rng.randrange(len(toks))
        toks[j:j] = block
        origin[j:j] = block_origin
    for _ in range(times(drops)):
        if len(toks) > 2:
            i = rng.randrange(len(toks) - 1)
            del toks[i], origin[i]
    for _ in range(times(extras)):
        i = rng.randrange(len(toks))
        toks.insert(i, _substitute(rng, toks[i]))
        origin.insert(i, -1)
    return toks, origin


def _first_positions(origin: list[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for pos, g in enumerate(origin):
        if g >= 0 and g not in out:
            out[g] = pos
    return out


def build_toy_corpus(seed: int = 7, segments: int = 50, docs: int = 5) -> dict[str, str]:
    """Return ``{filename: content}`` for a complete toy run, manifest included."""
    rng = random.Random(seed)
    files: dict[str, list] = {"source": [], "reference": []}
    per_system = {name: {"mt": [], "pe": [], "a_mt": [], "a_pe": []} for name in SYSTEMS}
    for i in range(segments):
        length = rng.choices(
            [rng.randint(3, 14), rng.randint(15, 24), rng.randint(25, 34), rng.randint(35, 40)], weights=(5, 3, 2, 1)
        )[0]
        gold, ids = _gold_sentence(rng, length)
        src_words, src_align = _source_for(rng, ids)
        files["source"].append(Segment(i, tuple(Token(w) for w in src_words)))
        ref, _ = _perturb(rng, gold, (0.1, 0.2, 0.3, 0.0, 0.0))
        files["reference"].append(Segment(i, tuple(ref)))
        for name, rates in SYSTEMS.items():
            mt, mt_origin = _perturb(rng, gold, rates)
            # each post-editor also makes a few preferential changes, so the
            # post-edits of one sentence differ and another system's post-edit
            # can be closer than the targeted one
            pe, pe_origin = _perturb(rng, gold, (0.2, 0.3, 0.6, 0.1, 0.1))
            gold_to_pe = _first_positions(pe_origin)
            gold_to_mt = _first_positions(mt_origin)
            a_pe = {(s, gold_to_pe[g]) for s, g in src_align.links if g in gold_to_pe}
            a_mt = {(s, gold_to_mt[g]) for s, g in src_align.links if g in gold_to_mt}
            slot = per_system[name]
            slot["mt"].append(Segment(i, tuple(mt)))
            slot["pe"].append(Segment(i, tuple(pe)))
            slot["a_mt"].append(AlignmentSet(frozenset(a_mt)))
            slot["a_pe"].append(AlignmentSet(frozenset(a_pe)))

    out = {
        "source.txt": format_plain(files["source"]),
        "reference.txt": format_plain(files["reference"]),
    }
    systems = []
    for name, slot in per_system.items():
        low = name.lower()
        out[f"{low}.mt.conllu"] = format_conllu(slot["mt"])
        out[f"{low}.pe.conllu"] = format_conllu(slot["pe"])
        out[f"{low}.src-mt.align"] = format_alignments(slot["a_mt"])
        out[f"{low}.src-pe.align"] = format_alignments(slot["a_pe"])
        systems.append(
            {
                "name": name,
                "output": f"{low}.mt.conllu",
                "postedit": f"{low}.pe.conllu",
                "align_src_mt": f"{low}.src-mt.align",
                "align_src_pe": f"{low}.src-pe.align",
            }
        )
    size = segments // docs
    doc_list = [
        [f"talk{d + 1:02d}", d * size, (d + 1) * size - 1 if d < docs - 1 else segments - 1] for d in range(docs)
    ]
    manifest = {
        "source": "source.txt",
        "reference": "reference.txt",
        "systems": systems,
        "docs": doc_list,
    }
    out["manifest.yaml"] = yaml.safe_dump(manifest, sort_keys=False, default_flow_style=None)
    return out


def write_toy_corpus(directory: str | Path, seed: int = 7, segments: int = 50, docs: int = 5) -> Path:
    """Write the toy run into ``directory`` and return the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, content in build_toy_corpus(seed, segments, docs).items():
        (directory / name).write_text(content, encoding="utf-8")
    return directory / "manifest.yaml"


def bundled_manifest() -> Path:
    """Path of the toy corpus shipped with the package."""
    return Path(__file__).parent / "data" / "toy" / "manifest.yaml"
