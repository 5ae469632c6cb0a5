"""Translation Edit Rate with a full edit trace.

The search is the usual tercom-style greedy loop: align with a unit-cost
Levenshtein DP, try every block shift whose words match the reference
exactly, keep the shift that lowers the total cost the most, and repeat
until no shift helps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from edit_lens.corpus import Segment, Token, is_punct

MATCH = "match"
SUBSTITUTE = "substitute"
INSERT = "insert"
DELETE = "delete"
SHIFT = "shift"


class ScoringError(ValueError):
    """A metric precondition does not hold for some segment."""


@dataclass(frozen=True)
class TerConfig:
    shift_cost: int = 1
    strip_punct: bool = False
    lowercase: bool = False
    compare_on: str = "surface"
    max_shift_block: int = 10
    max_shift_distance: int = 50
    punct_extra: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.shift_cost not in (0, 1):
            raise ValueError("shift_cost must be 0 or 1")
        if self.compare_on not in ("surface", "lemma"):
            raise ValueError("compare_on must be 'surface' or 'lemma'")
        if self.max_shift_block < 1 or self.max_shift_distance < 1:
            raise ValueError("shift caps must be >= 1")


HTER_CONFIG = TerConfig()


@dataclass(frozen=True)
class EditOp:
    kind: str
    hyp_span: tuple[int, int] | None = None
    ref_span: tuple[int, int] | None = None
    shift_distance: int = 0


@dataclass(frozen=True)
class AppliedShift:
    """One block move: ``before[start:start+length]`` ends up at ``after[dest:dest+length]``."""

    start: int
    length: int
    dest: int
    ref_start: int
    before: tuple[str, ...]
    after: tuple[str, ...]

    @property
    def block(self) -> tuple[str, ...]:
        return self.before[self.start : self.start + self.length]


@dataclass(frozen=True)
class EditTrace:
    """Shifts first, in application order, then the alignment of the shifted hypothesis.

    Spans refer to the normalized token sequences (``hyp_words``/``ref_words``);
    ``hyp_index``/``ref_index`` map normalized positions back to the original
    segment positions.
    """

    ops: tuple[EditOp, ...]
    shifts_applied: tuple[AppliedShift, ...]
    final_alignment: dict[int, int]
    hyp_words: tuple[str, ...]
    ref_words: tuple[str, ...]
    hyp_index: tuple[int, ...] = ()
    ref_index: tuple[int, ...] = ()

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def edit_count(self) -> int:
        return sum(1 for op in self.ops if op.kind != MATCH)

    @property
    def num_shifts(self) -> int:
        return len(self.shifts_applied)


class TerAlignment(NamedTuple):
    trace: EditTrace
    edits: int
    ref_len: int

    @property
    def score(self) -> float:
        return ter_score(self.edits, self.ref_len)


class ShiftBlock(NamedTuple):
    tokens: tuple[str, ...]
    ref_span: tuple[int, int]
    ref_positions: tuple[int, ...]


def ter_score(edits: float, ref_len: int) -> float:
    """Edits per reference word. Not clipped at 1."""
    if ref_len <= 0:
        raise ScoringError("TER undefined for an empty reference")
    return edits / ref_len


def _tokens(seg: Segment | str | Sequence[str] | Sequence[Token]) -> tuple[Token, ...]:
    if isinstance(seg, Segment):
        return seg.tokens
    if isinstance(seg, str):
        return tuple(Token(w) for w in seg.split())
    return tuple(t if isinstance(t, Token) else Token(t) for t in seg)


def normalize(seg: Segment | str | Sequence[str], config: TerConfig) -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Project a segment to the strings TER compares, with their original positions."""
    words, index = [], []
    for i, tok in enumerate(_tokens(seg)):
        if config.strip_punct and is_punct(tok.surface, config.punct_extra):
            continue
        w = tok.lemma if config.compare_on == "lemma" and tok.lemma is not None else tok.surface
        words.append(w.lower() if config.lowercase else w)
        index.append(i)
    return tuple(words), tuple(index)


# -- Levenshtein -----------------------------------------------------------


def edit_distance(hyp: Sequence[str], ref: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance, two-row DP."""
    prev = list(range(len(ref) + 1))
    for i, h in enumerate(hyp, start=1):
        cur = [i]
        for j, r in enumerate(ref, start=1):
            cur.append(min(prev[j - 1] + (h != r), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


def indel_distance(hyp: Sequence[str], ref: Sequence[str]) -> int:
    """Insert/delete-only distance, i.e. ``len(hyp) + len(ref) - 2 * LCS``."""
    prev = [0] * (len(ref) + 1)
    for h in hyp:
        cur = [0]
        for j, r in enumerate(ref, start=1):
            cur.append(prev[j - 1] + 1 if h == r else max(prev[j], cur[j - 1]))
        prev = cur
    return len(hyp) + len(ref) - 2 * prev[-1]


def _batch_edit_distance(hyps: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Levenshtein distance of every row of ``hyps`` (equal lengths) to ``ref``."""
    count, n = hyps.shape
    m = len(ref)
    cols = np.arange(m + 1)
    prev = np.broadcast_to(cols, (count, m + 1))
    for i in range(n):
        diag = prev[:, :-1] + (hyps[:, i : i + 1] != ref[None, :])
        row = np.empty((count, m + 1), dtype=np.int64)
        row[:, 0] = i + 1
        row[:, 1:] = np.minimum(diag, prev[:, 1:] + 1)
        # insertions: cur[j] = min over k <= j of row[k] + (j - k)
        prev = np.minimum.accumulate(row - cols, axis=1) + cols
    return prev[:, m]


def _batch_indel_distance(hyps: np.ndarray, ref: np.ndarray) -> np.ndarray:
    count, n = hyps.shape
    m = len(ref)
    prev = np.zeros((count, m + 1), dtype=np.int64)
    for i in range(n):
        row = np.zeros((count, m + 1), dtype=np.int64)
        row[:, 1:] = np.where(hyps[:, i : i + 1] == ref[None, :], prev[:, :-1] + 1, prev[:, 1:])
        prev = np.maximum.accumulate(row, axis=1)
    return n + m - 2 * prev[:, m]


def _move_ids(words: np.ndarray, start: int, length: int, dest: int) -> np.ndarray:
    rest = np.concatenate((words[:start], words[start + length :]))
    return np.concatenate((rest[:dest], words[start : start + length], rest[dest:]))


def _align(hyp: Sequence[str], ref: Sequence[str]) -> tuple[int, list[EditOp]]:
    """Levenshtein with backtrace. Prefers diagonal moves, then deletions, then insertions."""
    n, m = len(hyp), len(ref)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row, up = dp[i], dp[i - 1]
        row[0] = i
        h = hyp[i - 1]
        for j in range(1, m + 1):
            row[j] = min(up[j - 1] + (h != ref[j - 1]), up[j] + 1, row[j - 1] + 1)
    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            kind = MATCH if hyp[i - 1] == ref[j - 1] else SUBSTITUTE
            ops.append(EditOp(kind, (i - 1, 1), (j - 1, 1)))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(EditOp(DELETE, hyp_span=(i - 1, 1)))
            i -= 1
        else:
            ops.append(EditOp(INSERT, ref_span=(j - 1, 1)))
            j -= 1
    ops.reverse()
    return dp[n][m], ops


def _ref_to_hyp(ops: Sequence[EditOp], ref_len: int) -> list[int]:
    """For each ref position, the hyp position aligned to it, or the last hyp position before it."""
    out = [-1] * ref_len
    last_h = -1
    for op in ops:
        if op.hyp_span is not None:
            last_h = op.hyp_span[0]
        if op.ref_span is not None:
            out[op.ref_span[0]] = last_h
    return out


def _move(words: Sequence[str], start: int, length: int, dest: int) -> tuple[str, ...]:
    block = words[start : start + length]
    rest = list(words[:start]) + list(words[start + length :])
    return tuple(rest[:dest]) + tuple(block) + tuple(rest[dest:])


def _candidates(hyp: tuple[str, ...], ref: tuple[str, ...], ops: list[EditOp], config: TerConfig):
    """Yield (start, length, ref_start, dest) for every admissible shift."""
    n, m = len(hyp), len(ref)
    matched = {op.hyp_span[0]: op.ref_span[0] for op in ops if op.kind == MATCH}
    matched_refs = set(matched.values())
    r2h = _ref_to_hyp(ops, m)
    aligned_refs = {op.ref_span[0] for op in ops if op.hyp_span is not None and op.ref_span is not None}
    ref_positions: dict[str, list[int]] = {}
    for j, w in enumerate(ref):
        ref_positions.setdefault(w, []).append(j)
    seen = set()
    for start in range(n):
        for rstart in ref_positions.get(hyp[start], ()):
            length = 0
            while (
                length < config.max_shift_block
                and start + length < n
                and rstart + length < m
                and hyp[start + length] == ref[rstart + length]
            ):
                length += 1
                if all(matched.get(start + k) == rstart + k for k in range(length)):
                    continue
                # the target span is already matched by other words
                if all(rstart + k in matched_refs for k in range(length)):
                    continue
                # insertion points: after the hyp word aligned to the ref word
                # preceding the block, or before the one aligned to the word following it
                points = set()
                for r in range(rstart - 1, rstart + length):
                    points.add(0 if r < 0 else r2h[r] + 1)
                if rstart + length < m:
                    after = rstart + length
                    points.add(r2h[after] if after in aligned_refs else r2h[after] + 1)
                for idx in points:
                    if start < idx < start + length:
                        continue
                    dest = idx if idx <= start else idx - length
                    if dest == start or abs(dest - start) > config.max_shift_distance:
                        continue
                    key = (start, length, dest)
                    if key in seen:
                        continue
                    seen.add(key)
                    yield start, length, rstart, dest


@lru_cache(maxsize=1 << 16)
def _search(
    hyp_words: tuple[str, ...], ref_words: tuple[str, ...], config: TerConfig
) -> tuple[tuple[AppliedShift, ...], tuple[EditOp, ...], int]:
    # free shifts can leave the DP cost flat while still gathering matches;
    # the indel distance breaks those plateaus
    free_shifts = config.shift_cost == 0
    ids: dict[str, int] = {}
    ref_ids = np.array([ids.setdefault(w, len(ids)) for w in ref_words], dtype=np.int64)

    current = hyp_words
    cost, ops = _align(current, ref_words)
    tiebreak = indel_distance(current, ref_words) if free_shifts else 0
    shifts: list[AppliedShift] = []
    while True:
        cands = list(_candidates(current, ref_words, ops, config))
        if not cands:
            break
        current_ids = np.array([ids.setdefault(w, len(ids)) for w in current], dtype=np.int64)
        moved_ids = np.stack([_move_ids(current_ids, start, length, dest) for start, length, _, dest in cands])
        new_costs = _batch_edit_distance(moved_ids, ref_ids)
        new_tiebreaks = _batch_indel_distance(moved_ids, ref_ids) if free_shifts else np.zeros_like(new_costs)
        best_key = None
        best = None
        for k, (start, length, rstart, dest) in enumerate(cands):
            gain = cost - (int(new_costs[k]) + config.shift_cost)
            tie_gain = tiebreak - int(new_tiebreaks[k])
            if gain < 0 or (gain == 0 and tie_gain <= 0):
                continue
            key = (-gain, -tie_gain, -length, abs(dest - start), start, dest)
            if best_key is None or key < best_key:
                best_key, best = key, k
        if best is None:
            break
        start, length, rstart, dest = cands[best]
        moved = _move(current, start, length, dest)
        shifts.append(AppliedShift(start, length, dest, rstart, current, moved))
        current = moved
        cost, ops = _align(current, ref_words)
        tiebreak = int(new_tiebreaks[best])

    return tuple(shifts), tuple(ops), cost


def ter_align(
    hyp: Segment | str | Sequence[str],
    ref: Segment | str | Sequence[str],
    config: TerConfig = HTER_CONFIG,
) -> TerAlignment:
    """Align ``hyp`` to ``ref`` and count TER edits."""
    hyp_words, hyp_index = normalize(hyp, config)
    ref_words, ref_index = normalize(ref, config)
    if not ref_words:
        seg_id = ref.id if isinstance(ref, Segment) else "?"
        raise ScoringError(f"segment {seg_id}: empty reference")

    shifts, ops, cost = _search(hyp_words, ref_words, config)
    shift_ops = tuple(
        EditOp(SHIFT, (s.start, s.length), (s.ref_start, s.length), s.dest - s.start) for s in shifts
    )
    trace = EditTrace(
        ops=shift_ops + tuple(ops),
        shifts_applied=tuple(shifts),
        final_alignment={op.hyp_span[0]: op.ref_span[0] for op in ops if op.kind in (MATCH, SUBSTITUTE)},
        hyp_words=hyp_words,
        ref_words=ref_words,
        hyp_index=hyp_index,
        ref_index=ref_index,
    )
    return TerAlignment(trace, cost + config.shift_cost * len(shifts), len(ref_words))


def replay(trace: EditTrace) -> list[str]:
    """Apply the trace to its hypothesis; yields the reference when the trace is consistent."""
    words = trace.hyp_words
    for s in trace.shifts_applied:
        if words != s.before:
            raise AssertionError("shift snapshot does not match replayed hypothesis")
        words = _move(words, s.start, s.length, s.dest)
    out = []
    for op in trace.ops:
        if op.kind in (MATCH, SUBSTITUTE):
            out.append(trace.ref_words[op.ref_span[0]] if op.kind == SUBSTITUTE else words[op.hyp_span[0]])
        elif op.kind == INSERT:
            out.append(trace.ref_words[op.ref_span[0]])
    return out


def shift_blocks(trace: EditTrace) -> list[ShiftBlock]:
    """One entry per shift, in application order, with the reference positions the block landed on."""
    blocks = []
    for s in trace.shifts_applied:
        span = (s.ref_start, s.length)
        positions = tuple(
            trace.ref_index[j] if trace.ref_index else j for j in range(s.ref_start, s.ref_start + s.length)
        )
        blocks.append(ShiftBlock(s.block, span, positions))
    return blocks
