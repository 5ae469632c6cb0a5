"""Error decomposition and corpus breakdowns built on the TER traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from edit_lens.corpus import Run, Segment, is_punct
from edit_lens.metrics import (
    KrsConfig,
    KrsResult,
    MetricScore,
    corpus_krs,
    hter,
    hter_noshift,
    word_count,
)
from edit_lens.ter import HTER_CONFIG, EditTrace, ScoringError, TerConfig, shift_blocks

UNK = "UNK"
PUNCT = "PUNCT"
DEFAULT_BIN_EDGES = (15, 25, 35)


def round_half_up(value: float, digits: int = 0) -> float:
    """Round halves away from zero, as printed tables do."""
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def morph_delta(word: float, lemma: float) -> float:
    if word == 0:
        raise ScoringError("%Δ undefined when the word-level score is 0")
    return 100.0 * (lemma - word) / word


@dataclass(frozen=True)
class ErrorProfile:
    system: str
    word_noshift: float
    lemma_noshift: float
    shift_count: int
    word_count: int
    krs: float | None = None

    @property
    def morph_delta_pct(self) -> float | None:
        if self.word_noshift == 0:
            return 0.0 if self.lemma_noshift == 0 else None
        return morph_delta(self.word_noshift, self.lemma_noshift)

    @property
    def shift_pct(self) -> float:
        return 100.0 * self.shift_count / self.word_count if self.word_count else 0.0


def profile_errors(
    run: Run,
    base: TerConfig = HTER_CONFIG,
    krs_config: KrsConfig = KrsConfig(),
    hter_scores: Mapping[str, MetricScore] | None = None,
    with_krs: bool = True,
    jobs: int = 1,
) -> list[ErrorProfile]:
    """Morphology, lexical and word-order figures for every system of the run.

    Shift counts come from standard HTER traces; pass ``hter_scores`` to reuse
    traces computed elsewhere.
    """
    return [
        profile_from_components(error_components(run, name, base, krs_config, hter_scores, with_krs, jobs))
        for name in run.outputs
    ]


@dataclass(frozen=True)
class ErrorComponents:
    """Per-segment material an ErrorProfile is aggregated from."""

    system: str
    word: MetricScore
    lemma: MetricScore
    standard: MetricScore
    word_count: int
    krs: KrsResult | None = None

    @property
    def shifts_per_segment(self) -> list[int]:
        return [a.trace.num_shifts for a in self.standard.details]


def error_components(
    run: Run,
    name: str,
    base: TerConfig = HTER_CONFIG,
    krs_config: KrsConfig = KrsConfig(),
    hter_scores: Mapping[str, MetricScore] | None = None,
    with_krs: bool = True,
    jobs: int = 1,
) -> ErrorComponents:
    system = run.outputs[name]
    krs_result = None
    if with_krs and run.has_alignments(name):
        krs_result = corpus_krs(
            run.source,
            system.segments,
            run.refs.targeted[name],
            run.alignments[(name, "mt")],
            run.alignments[(name, "pe")],
            krs_config,
        )
    return ErrorComponents(
        system=name,
        word=hter_noshift(system, run.refs, "surface", base, jobs),
        lemma=hter_noshift(system, run.refs, "lemma", base, jobs),
        standard=hter_scores[name] if hter_scores else hter(system, run.refs, base, jobs),
        word_count=word_count(system),
        krs=krs_result,
    )


def profile_from_components(c: ErrorComponents) -> ErrorProfile:
    return ErrorProfile(
        system=c.system,
        word_noshift=c.word.corpus_value,
        lemma_noshift=c.lemma.corpus_value,
        shift_count=sum(c.shifts_per_segment),
        word_count=c.word_count,
        krs=c.krs.corpus_value if c.krs is not None and c.krs.scored else None,
    )


# -- shift classes ---------------------------------------------------------


@dataclass
class ShiftClassTable:
    """Shifted-token counts keyed by POS tag and by ``deplabel:POS``, per system."""

    systems: list[str] = field(default_factory=list)
    pos: dict[str, dict[str, int]] = field(default_factory=dict)
    dep: dict[str, dict[str, int]] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=dict)
    unknown: dict[str, int] = field(default_factory=dict)

    def count(self, section: str, key: str, system: str) -> int:
        rows = self.pos if section == "pos" else self.dep
        return rows.get(key, {}).get(system, 0)

    def merge(self, other: "ShiftClassTable") -> "ShiftClassTable":
        out = ShiftClassTable(systems=self.systems + [s for s in other.systems if s not in self.systems])
        for table in (self, other):
            for mine, theirs in ((out.pos, table.pos), (out.dep, table.dep)):
                for key, counts in theirs.items():
                    row = mine.setdefault(key, {})
                    for s, c in counts.items():
                        row[s] = row.get(s, 0) + c
            for s, c in table.totals.items():
                out.totals[s] = out.totals.get(s, 0) + c
            for s, c in table.unknown.items():
                out.unknown[s] = out.unknown.get(s, 0) + c
        return out


def _keys(seg: Segment, position: int, punct_extra: Iterable[str]) -> tuple[str, str, bool]:
    if position >= len(seg.tokens):
        return UNK, UNK, True
    tok = seg.tokens[position]
    if is_punct(tok.surface, punct_extra):
        return PUNCT, PUNCT, False
    if tok.pos is None:
        return UNK, UNK, True
    return tok.pos, f"{tok.dep_label or UNK}:{tok.pos}", False


def classify_shifts(
    traces: Sequence[EditTrace],
    pe_segments: Sequence[Segment],
    system: str = "system",
    punct_extra: Iterable[str] = (),
) -> ShiftClassTable:
    """Count every token of every shifted block under the annotation of the post-edit word it landed on."""
    table = ShiftClassTable(systems=[system], totals={system: 0}, unknown={system: 0})
    punct_extra = tuple(punct_extra)
    for trace, pe in zip(traces, pe_segments):
        for block in shift_blocks(trace):
            for position in block.ref_positions:
                pos_key, dep_key, unknown = _keys(pe, position, punct_extra)
                for rows, key in ((table.pos, pos_key), (table.dep, dep_key)):
                    row = rows.setdefault(key, {})
                    row[system] = row.get(system, 0) + 1
                table.totals[system] += 1
                if unknown:
                    table.unknown[system] += 1
    return table


def reduction(focal: int, baseline: int) -> float | None:
    """Percent change of ``focal`` relative to ``baseline``; None when undefined."""
    if baseline == 0:
        return 0.0 if focal == 0 else None
    return 100.0 * (focal - baseline) / baseline


@dataclass(frozen=True)
class ReductionRow:
    section: str
    key: str
    counts: dict[str, int]
    reduction: float | None

    @property
    def reduction_pct(self) -> int | None:
        return None if self.reduction is None else int(round_half_up(self.reduction))


def reduction_table(
    table: ShiftClassTable,
    focal: str,
    baseline: str,
    threshold: int = 10,
    omit: Iterable[str] = (PUNCT,),
    keep: Iterable[str] = (UNK,),
) -> list[ReductionRow]:
    """POS rows, then dep:POS rows, each ascending by reduction, then the ``all`` row.

    A key is kept when some system shifted it at least ``threshold`` times.
    Keys in ``keep`` are shown whatever their count, keys in ``omit`` never.
    The ``all`` row is computed on the unfiltered totals.
    """
    for name in (focal, baseline):
        if name not in table.systems:
            raise KeyError(f"system {name!r} not in shift table")
    omit, keep = set(omit), set(keep)
    rows: list[ReductionRow] = []
    for section, source in (("pos", table.pos), ("dep", table.dep)):
        kept = []
        for key, counts in source.items():
            if key in omit or (key not in keep and max(counts.values(), default=0) < threshold):
                continue
            full = {s: counts.get(s, 0) for s in table.systems}
            kept.append(ReductionRow(section, key, full, reduction(full[focal], full[baseline])))
        kept.sort(key=lambda r: (r.reduction is None, r.reduction if r.reduction is not None else 0.0, r.key))
        rows.extend(kept)
    totals = {s: table.totals.get(s, 0) for s in table.systems}
    rows.append(ReductionRow("all", "all", totals, reduction(totals[focal], totals[baseline])))
    return rows


# -- length bins -----------------------------------------------------------


@dataclass(frozen=True)
class LengthBin:
    lo: int
    hi: int | None
    n: int
    mean: float | None


@dataclass(frozen=True)
class BinnedScores:
    edges: tuple[int, ...]
    bins: tuple[LengthBin, ...]
    pct_delta: tuple[float | None, ...]


def bin_bounds(edges: Sequence[int]) -> list[tuple[int, int | None]]:
    if any(b <= a for a, b in zip(edges, edges[1:])) or (edges and edges[0] < 1):
        raise ValueError(f"bin edges must be positive and strictly increasing: {list(edges)}")
    bounds = []
    lo = 1
    for e in edges:
        bounds.append((lo, e))
        lo = e + 1
    bounds.append((lo, None))
    return bounds


def bin_by_length(
    scores: Sequence[float],
    source: Sequence[Segment],
    edges: Sequence[int] = DEFAULT_BIN_EDGES,
) -> BinnedScores:
    """Mean segment score per source-length bin, with the percent change from the preceding bin.

    The change is oriented so that a negative value means the score got worse
    (higher error): ``-100 * (m_k - m_{k-1}) / m_{k-1}``.
    """
    if len(scores) != len(source):
        raise ValueError(f"{len(scores)} scores for {len(source)} segments")
    bounds = bin_bounds(edges)
    members: list[list[float]] = [[] for _ in bounds]
    for score, seg in zip(scores, source):
        length = len(seg)
        for k, (lo, hi) in enumerate(bounds):
            if hi is None or length <= hi:
                members[k].append(score)
                break
    bins = tuple(
        LengthBin(lo, hi, len(vals), sum(vals) / len(vals) if vals else None)
        for (lo, hi), vals in zip(bounds, members)
    )
    deltas: list[float | None] = [None]
    for prev, cur in zip(bins, bins[1:]):
        if prev.mean is None or cur.mean is None or prev.mean == 0:
            deltas.append(None)
        else:
            deltas.append(-100.0 * (cur.mean - prev.mean) / prev.mean)
    return BinnedScores(tuple(edges), bins, tuple(deltas))


# -- documents -------------------------------------------------------------


def type_token_ratio(segments: Iterable[Segment], lowercase: bool = True, skip_punct: bool = True,
                     punct_extra: Iterable[str] = ()) -> float:
    punct_extra = tuple(punct_extra)
    words = [
        t.surface.lower() if lowercase else t.surface
        for s in segments
        for t in s.tokens
        if not (skip_punct and is_punct(t.surface, punct_extra))
    ]
    if not words:
        raise ScoringError("type-token ratio undefined for an empty text")
    return len(set(words)) / len(words)


@dataclass(frozen=True)
class DocRow:
    doc_id: str
    mter: dict[str, float]
    ttr: float
    gain: float | None


@dataclass(frozen=True)
class DocScores:
    focal: str
    rows: tuple[DocRow, ...]

    def pairs(self) -> tuple[list[float], list[float]]:
        """(TTR, gain) vectors over documents with a defined gain."""
        kept = [r for r in self.rows if r.gain is not None]
        return [r.ttr for r in kept], [r.gain for r in kept]


def doc_breakdown(
    run: Run,
    focal: str,
    mter_scores: Mapping[str, MetricScore],
    lowercase: bool = True,
    skip_punct: bool = True,
    punct_extra: Iterable[str] = (),
) -> DocScores:
    """Per-document mTER for every system, source TTR, and the focal system's gain over its closest competitor.

    The gain is in absolute mTER points: competitor minus focal.
    """
    if focal not in mter_scores:
        raise KeyError(f"system {focal!r} has no mTER scores")
    rows = []
    for doc in run.docs:
        idx = doc.indices()
        per_system = {}
        for name, score in mter_scores.items():
            num = sum(score.per_segment[i][0] for i in idx)
            den = sum(score.per_segment[i][1] for i in idx)
            per_system[name] = 100.0 * num / den
        others = [v for k, v in per_system.items() if k != focal]
        gain = min(others) - per_system[focal] if others else None
        ttr = type_token_ratio((run.source[i] for i in idx), lowercase, skip_punct, punct_extra)
        rows.append(DocRow(doc.doc_id, per_system, ttr, gain))
    return DocScores(focal, tuple(rows))
