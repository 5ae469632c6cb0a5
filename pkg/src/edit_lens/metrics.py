"""Corpus-level scores: HTER, mTER, no-shift HTER, BLEU, PER and KRS."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

from edit_lens.corpus import AlignmentSet, ReferenceSet, Segment, SystemOutput
from edit_lens.ter import HTER_CONFIG, ScoringError, TerAlignment, TerConfig, normalize, ter_align

MTER_DENOMINATORS = ("mean", "targeted", "best")


@dataclass(frozen=True)
class MetricScore:
    """A ratio metric kept as per-segment (numerator, denominator) pairs."""

    name: str
    system: str
    per_segment: tuple[tuple[float, float], ...]
    details: tuple[Any, ...] = field(default=(), compare=False, repr=False)

    @property
    def numerator(self) -> float:
        return sum(n for n, _ in self.per_segment)

    @property
    def denominator(self) -> float:
        return sum(d for _, d in self.per_segment)

    @property
    def corpus_value(self) -> float:
        den = self.denominator
        if den <= 0:
            raise ScoringError(f"{self.name} for {self.system}: empty denominator")
        return 100.0 * self.numerator / den

    def segment_scores(self) -> list[float]:
        return [100.0 * n / d for n, d in self.per_segment]


def parallel_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map; results never depend on ``jobs``."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _align_pair(args: tuple[Segment, Segment, TerConfig]) -> TerAlignment:
    hyp, ref, config = args
    return ter_align(hyp, ref, config)


def _align_multi(args: tuple[Segment, list[Segment], TerConfig]) -> list[tuple[int, int]]:
    hyp, refs, config = args
    return [ter_align(hyp, ref, config)[1:] for ref in refs]


def hter(system: SystemOutput, refs: ReferenceSet, config: TerConfig = HTER_CONFIG, jobs: int = 1) -> MetricScore:
    """TER of each segment against its targeted post-edit, aggregated as total edits / total length."""
    pe = refs.targeted[system.system_name]
    if len(pe) != len(system.segments):
        raise ScoringError(f"system {system.system_name}: {len(system.segments)} segments, {len(pe)} post-edits")
    alignments = parallel_map(_align_pair, [(h, r, config) for h, r in zip(system.segments, pe)], jobs)
    return MetricScore(
        name="hter",
        system=system.system_name,
        per_segment=tuple((a.edits, a.ref_len) for a in alignments),
        details=tuple(alignments),
    )


def mter(
    system: SystemOutput,
    refs: ReferenceSet,
    config: TerConfig = HTER_CONFIG,
    denominator: str = "mean",
    jobs: int = 1,
) -> MetricScore:
    """TER against the closest of all post-edits available for each segment.

    ``denominator`` picks the length each segment is normalized by: the mean
    length of all its references (default), the targeted post-edit's length,
    or the length of the closest reference.
    """
    if denominator not in MTER_DENOMINATORS:
        raise ValueError(f"unknown mTER denominator {denominator!r}")
    name = system.system_name
    work = []
    for i, hyp in enumerate(system.segments):
        seg_refs = refs.for_segment(name, i)
        if not seg_refs:
            raise ScoringError(f"system {name}: segment {i} has no references")
        work.append((hyp, seg_refs, config))
    results = parallel_map(_align_multi, work, jobs)
    per_segment = []
    chosen = []
    for runs in results:
        best = min(range(len(runs)), key=lambda k: runs[k][0])
        lengths = [ref_len for _, ref_len in runs]
        if denominator == "mean":
            den = sum(lengths) / len(lengths)
        elif denominator == "targeted":
            den = lengths[0]
        else:
            den = lengths[best]
        per_segment.append((runs[best][0], den))
        chosen.append(best)
    return MetricScore("mter", name, tuple(per_segment), details=tuple(chosen))


def noshift_config(compare_on: str = "surface", base: TerConfig = HTER_CONFIG) -> TerConfig:
    return replace(base, shift_cost=0, strip_punct=True, compare_on=compare_on)


def hter_noshift(
    system: SystemOutput,
    refs: ReferenceSet,
    compare_on: str = "surface",
    base: TerConfig = HTER_CONFIG,
    jobs: int = 1,
) -> MetricScore:
    """HTER with free shifts and punctuation removed, on surface forms or lemmas."""
    if compare_on == "lemma":
        for label, segs in (("output", system.segments), ("post-edit", refs.targeted[system.system_name])):
            if not any(t.lemma is not None for s in segs for t in s.tokens):
                raise ScoringError(f"system {system.system_name}: {label} has no lemma annotations")
    score = hter(system, refs, noshift_config(compare_on, base), jobs)
    return replace(score, name=f"hter_noshift_{'word' if compare_on == 'surface' else 'lemma'}")


# -- PER -------------------------------------------------------------------


def _words(seg: Segment | str | Sequence[str]) -> list[str]:
    if isinstance(seg, Segment):
        return seg.surfaces
    if isinstance(seg, str):
        return seg.split()
    return list(seg)


def per_edits(hyp, ref) -> int:
    h, r = _words(hyp), _words(ref)
    common = sum((Counter(h) & Counter(r)).values())
    return max(len(h), len(r)) - common


def per(hyp, ref) -> float:
    """Position-independent error rate."""
    r = _words(ref)
    if not r:
        raise ScoringError("PER undefined for an empty reference")
    return per_edits(hyp, r) / len(r)


# -- BLEU ------------------------------------------------------------------


def _ngrams(words: Sequence[str], n: int) -> Counter:
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def bleu_stats(hyp: Sequence[str], ref: Sequence[str], max_n: int = 4) -> list[int]:
    """Sufficient statistics: matches and totals for each order, then hyp and ref length."""
    stats = []
    for n in range(1, max_n + 1):
        h = _ngrams(hyp, n)
        stats.append(sum((h & _ngrams(ref, n)).values()))
        stats.append(max(len(hyp) - n + 1, 0))
    return stats + [len(hyp), len(ref)]


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    if hyp_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / hyp_len)


def bleu_from_stats(stats: Sequence[float], max_n: int = 4, epsilon: float = 1e-9) -> float:
    hyp_len, ref_len = stats[-2], stats[-1]
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(max_n):
        matches, total = stats[2 * n], stats[2 * n + 1]
        if total == 0:
            return 0.0
        log_sum += math.log(max(matches, epsilon) / total)
    return 100.0 * brevity_penalty(hyp_len, ref_len) * math.exp(log_sum / max_n)


def corpus_bleu(
    system: SystemOutput | Sequence[Segment],
    reference: Sequence[Segment],
    max_n: int = 4,
    epsilon: float = 1e-9,
    lowercase: bool = False,
) -> float:
    """Corpus BLEU with a single reference; zero match counts are replaced by ``epsilon``."""
    hyps = system.segments if isinstance(system, SystemOutput) else system
    if not hyps:
        raise ScoringError("BLEU undefined for an empty corpus")
    if len(hyps) != len(reference):
        raise ScoringError(f"BLEU: {len(hyps)} hypotheses, {len(reference)} references")
    totals = [0] * (2 * max_n + 2)
    for h, r in zip(hyps, reference):
        hw, rw = _words(h), _words(r)
        if lowercase:
            hw, rw = [w.lower() for w in hw], [w.lower() for w in rw]
        for k, v in enumerate(bleu_stats(hw, rw, max_n)):
            totals[k] += v
    return bleu_from_stats(totals, max_n, epsilon)


# -- KRS -------------------------------------------------------------------


@dataclass(frozen=True)
class KrsConfig:
    """``brevity``: ``coverage`` uses target length over aligned tokens,
    ``length`` compares hypothesis and reference lengths, ``none`` disables it.
    ``collapse`` reduces many-to-many links to one position per token."""

    brevity: str = "coverage"
    collapse: str = "min"

    def __post_init__(self) -> None:
        if self.brevity not in ("coverage", "length", "none"):
            raise ValueError(f"unknown brevity mode {self.brevity!r}")
        if self.collapse not in ("min", "mean"):
            raise ValueError(f"unknown collapse mode {self.collapse!r}")


@dataclass(frozen=True)
class KrsResult:
    per_segment: tuple[float | None, ...]

    @property
    def scored(self) -> list[float]:
        return [v for v in self.per_segment if v is not None]

    @property
    def skipped(self) -> int:
        return sum(1 for v in self.per_segment if v is None)

    @property
    def corpus_value(self) -> float:
        scored = self.scored
        if not scored:
            raise ScoringError("KRS: no segment has usable alignments")
        return 100.0 * sum(scored) / len(scored)


def _collapse(values: Iterable[float], mode: str) -> float:
    values = list(values)
    return min(values) if mode == "min" else sum(values) / len(values)


def discordant_pairs(seq: Sequence[float]) -> int:
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def kendall_similarity(seq: Sequence[float]) -> float:
    """``1 - sqrt(d / dmax)`` over the discordant pairs of ``seq``; 1.0 for fewer than two items."""
    k = len(seq)
    if k <= 1:
        return 1.0
    return 1.0 - math.sqrt(discordant_pairs(seq) / (k * (k - 1) / 2))


def _brevity(config: KrsConfig, target_len: int, k: int, ref_len: int | None = None) -> float:
    if config.brevity == "none":
        return 1.0
    if config.brevity == "length" and ref_len is not None:
        return min(1.0, math.exp(1.0 - ref_len / target_len)) if target_len else 0.0
    return min(1.0, math.exp(1.0 - target_len / k))


def _target_order(alignment: AlignmentSet, target_len: int, collapse: str) -> list[float]:
    by_target: dict[int, list[int]] = {}
    for s, t in alignment.links:
        by_target.setdefault(t, []).append(s)
    return [_collapse(by_target[t], collapse) for t in range(target_len) if t in by_target]


def krs(
    source: Segment | Sequence[str],
    target: Segment | Sequence[str],
    alignment: AlignmentSet,
    config: KrsConfig = KrsConfig(),
) -> float | None:
    """Kendall reordering score of a target against its source; None when nothing is aligned."""
    target_len = len(target)
    seq = _target_order(alignment, target_len, config.collapse)
    if not seq:
        return None if (len(source) and target_len) else 1.0
    return _brevity(config, target_len, len(seq)) * kendall_similarity(seq)


def krs_pair(
    source: Segment,
    mt: Segment,
    pe: Segment,
    align_src_mt: AlignmentSet,
    align_src_pe: AlignmentSet,
    config: KrsConfig = KrsConfig(),
) -> float | None:
    """Score the order of MT words against the post-edit order, pivoting through the source.

    Each source word gets the post-edit position it is aligned to; each MT
    word then takes the post-edit positions of its source words. The MT-order
    sequence of those positions is scored like a permutation by ``krs``.
    """
    pe_of_source: dict[int, list[int]] = {}
    for s, t in align_src_pe.links:
        pe_of_source.setdefault(s, []).append(t)
    pe_pos = {s: _collapse(ts, config.collapse) for s, ts in pe_of_source.items()}
    sources_of_mt: dict[int, list[int]] = {}
    for s, t in align_src_mt.links:
        sources_of_mt.setdefault(t, []).append(s)
    seq = []
    for t in range(len(mt)):
        positions = [pe_pos[s] for s in sorted(sources_of_mt.get(t, ())) if s in pe_pos]
        if positions:
            seq.append(_collapse(positions, config.collapse))
    if not seq:
        return None if (len(source) and len(mt)) else 1.0
    return _brevity(config, len(mt), len(seq), len(pe)) * kendall_similarity(seq)


def corpus_krs(
    source: Sequence[Segment],
    mt: Sequence[Segment],
    pe: Sequence[Segment],
    align_src_mt: Sequence[AlignmentSet],
    align_src_pe: Sequence[AlignmentSet],
    config: KrsConfig = KrsConfig(),
) -> KrsResult:
    return KrsResult(
        tuple(
            krs_pair(s, m, p, am, ap, config)
            for s, m, p, am, ap in zip(source, mt, pe, align_src_mt, align_src_pe)
        )
    )


def word_count(system: SystemOutput) -> int:
    return sum(len(s) for s in system.segments)


def normalized_length(seg: Segment, config: TerConfig) -> int:
    return len(normalize(seg, config)[0])
