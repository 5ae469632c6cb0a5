import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import exact_ter_edits, levenshtein

from edit_lens.corpus import Segment, Token, segment
from edit_lens.ter import (
    SHIFT,
    ScoringError,
    TerConfig,
    edit_distance,
    indel_distance,
    replay,
    shift_blocks,
    ter_align,
    ter_score,
)

words = st.lists(st.sampled_from("abcd"), max_size=8)
nonempty = st.lists(st.sampled_from("abcd"), min_size=1, max_size=8)


@pytest.mark.parametrize(
    "hyp, ref, edits, score",
    [
        ("a b c", "a b c", 0, 0.0),
        ("a c b d", "a b c d", 1, 0.25),
        ("", "a b", 2, 1.0),
    ],
)
def test_examples(hyp, ref, edits, score):
    result = ter_align(hyp.split(), ref.split())
    assert result.edits == edits
    assert result.score == score


def test_single_shift_trace():
    result = ter_align("a c b d".split(), "a b c d".split())
    assert result.trace.num_shifts == 1
    (block,) = shift_blocks(result.trace)
    assert block.tokens in (("c",), ("b",))
    assert block.ref_positions == ((2,) if block.tokens == ("c",) else (1,))


def test_free_shift_reorder():
    assert ter_align(["b", "a"], ["a", "b"], TerConfig(shift_cost=0)).edits == 0


def test_two_independent_shifts_in_order():
    hyp, ref = "a c b d f e".split(), "a b c d e f".split()
    result = ter_align(hyp, ref)
    assert result.edits == exact_ter_edits(hyp, ref) == 2
    blocks = shift_blocks(result.trace)
    assert [b.tokens for b in blocks] == [("c",), ("f",)]
    assert [b.ref_positions for b in blocks] == [(2,), (5,)]


def test_no_shift_when_it_does_not_pay():
    result = ter_align("x y z".split(), "a b c".split())
    assert shift_blocks(result.trace) == []
    assert result.edits == 3


def test_empty_reference_reports_segment():
    with pytest.raises(ScoringError, match="segment 7: empty reference"):
        ter_align(segment("a"), Segment(7, (Token("."),)), TerConfig(strip_punct=True))


@pytest.mark.parametrize("edits, ref_len, expected", [(1, 4, 0.25), (0, 3, 0.0), (5, 4, 1.25)])
def test_ter_score(edits, ref_len, expected):
    assert ter_score(edits, ref_len) == expected


def test_ter_score_empty():
    with pytest.raises(ScoringError):
        ter_score(1, 0)


def test_normalization_options():
    hyp = Segment(0, (Token("Die", "die"), Token("Hunde", "Hund"), Token(",", ",")))
    ref = Segment(0, (Token("die", "die"), Token("Hund", "Hund")))
    assert ter_align(hyp, ref).edits == 3
    assert ter_align(hyp, ref, TerConfig(lowercase=True, strip_punct=True)).edits == 1
    assert ter_align(hyp, ref, TerConfig(compare_on="lemma", strip_punct=True)).edits == 0


def test_stripped_positions_map_back():
    ref = Segment(0, tuple(Token(w) for w in "a , b c".split()))
    result = ter_align(segment("a c b"), ref, TerConfig(strip_punct=True))
    assert result.trace.ref_index == (0, 2, 3)
    (block,) = shift_blocks(result.trace)
    assert block.ref_positions[0] in (2, 3)


def test_shift_distance_cap():
    ref = ["x"] + [f"w{i}" for i in range(30)]
    hyp = [f"w{i}" for i in range(30)] + ["x"]
    near = ter_align(hyp, ref)
    capped = ter_align(hyp, ref, TerConfig(max_shift_distance=5))
    assert near.edits == 1
    assert capped.edits == 2
    far_ref = ["x"] + [f"w{i}" for i in range(60)]
    far_hyp = [f"w{i}" for i in range(60)] + ["x"]
    assert ter_align(far_hyp, far_ref).edits == 2


def test_block_cap():
    ref = "a b c d e f g h i j k l".split()
    hyp = ref[6:] + ref[:6]
    assert ter_align(hyp, ref).edits == 1
    assert ter_align(hyp, ref, TerConfig(max_shift_block=3)).edits > 1


def test_bad_config():
    with pytest.raises(ValueError):
        TerConfig(shift_cost=2)
    with pytest.raises(ValueError):
        TerConfig(compare_on="pos")


@settings(max_examples=300, deadline=None)
@given(words, nonempty)
def test_edit_distance_matches_recursion(a, b):
    assert edit_distance(a, b) == levenshtein(a, b)


@settings(max_examples=300, deadline=None)
@given(words, nonempty)
def test_indel_distance_bounds(a, b):
    d = indel_distance(a, b)
    assert levenshtein(a, b) <= d <= len(a) + len(b)
    assert (d - len(a) - len(b)) % 2 == 0


@settings(max_examples=300, deadline=None)
@given(words, nonempty, st.sampled_from([0, 1]))
def test_trace_replays_to_reference(hyp, ref, cost):
    result = ter_align(hyp, ref, TerConfig(shift_cost=cost))
    assert replay(result.trace) == ref
    assert result.edits <= levenshtein(hyp, ref)
    if cost:
        assert result.edits == result.trace.edit_count
        assert result.trace.count(SHIFT) == result.trace.num_shifts


@settings(max_examples=200, deadline=None)
@given(nonempty)
def test_identity_is_free(ref):
    assert ter_align(ref, ref).edits == 0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=6), st.lists(st.sampled_from("abc"), min_size=1, max_size=6))
def test_never_below_exhaustive_search(hyp, ref):
    assert ter_align(hyp, ref).edits >= exact_ter_edits(hyp, ref)


@settings(max_examples=150, deadline=None)
@given(nonempty, st.randoms(use_true_random=False))
def test_free_shifts_undo_any_permutation(ref, rnd):
    hyp = list(ref)
    rnd.shuffle(hyp)
    assert ter_align(hyp, ref, TerConfig(shift_cost=0)).edits == 0
