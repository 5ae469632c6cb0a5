from pathlib import Path

import pytest
import yaml

from edit_lens.corpus import (
    AlignmentSet,
    InputError,
    Segment,
    Token,
    format_alignments,
    format_conllu,
    format_plain,
    is_punct,
    load_manifest,
    parse_alignments,
    parse_segments,
    segment,
)


def write(tmp_path: Path, name: str, text: str) -> Path:
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_plain_line_is_unannotated(tmp_path):
    (seg,) = parse_segments(write(tmp_path, "a.txt", "a b c\n"))
    assert seg.surfaces == ["a", "b", "c"]
    assert all(t.lemma is None and t.pos is None for t in seg.tokens)


def test_conllu_fields(tmp_path):
    (seg,) = parse_segments(write(tmp_path, "a.conllu", "1\tHunde\tHund\tN\t_\t_\t2\tsubj\n\n"))
    assert seg.tokens == (Token("Hunde", "Hund", "N", "subj"),)


def test_conllu_xpos_fallback_and_comments(tmp_path):
    text = "# sent_id = 1\n1\tsieht\tsehen\t_\tVVFIN\t_\t0\troot\n2\t.\t.\t$.\t_\t_\t1\tpunct\n\n"
    (seg,) = parse_segments(write(tmp_path, "a.conllu", text))
    assert seg.tokens[0].pos == "VVFIN"
    assert seg.tokens[1].is_punct


def test_short_conllu_line_names_its_line(tmp_path):
    rows = "".join(f"{i}\tw\tw\tN\t_\t_\t0\tx\n" for i in range(1, 12))
    text = rows + "12\tw\tw\tN\t_\t_\t0\n"
    with pytest.raises(InputError, match="line 12: expected ≥8 columns"):
        parse_segments(write(tmp_path, "a.conllu", text))


@pytest.mark.parametrize(
    "text, message",
    [
        ("x\tw\tw\tN\t_\t_\t0\tx\n", "non-integer token ID"),
        ("1\tw\tw\tN\t_\t_\t0\tx\n3\tv\tv\tN\t_\t_\t0\tx\n", "line 2: token ID 3 out of sequence"),
    ],
)
def test_conllu_id_errors(tmp_path, text, message):
    with pytest.raises(InputError, match=message):
        parse_segments(write(tmp_path, "a.conllu", text))


def test_empty_file(tmp_path):
    with pytest.raises(InputError, match="empty file"):
        parse_segments(write(tmp_path, "a.txt", ""))


def test_round_trips(tmp_path):
    segs = [
        Segment(0, (Token("Die", "die", "ART", "det"), Token("Hunde", "Hund", "N", "subj"))),
        Segment(1, (Token("."),)),
    ]
    back = parse_segments(write(tmp_path, "r.conllu", format_conllu(segs)))
    assert [s.tokens for s in back] == [s.tokens for s in segs]
    plain = [segment("a b"), segment("c", id=1)]
    assert [s.surfaces for s in parse_segments(write(tmp_path, "r.txt", format_plain(plain)))] == [["a", "b"], ["c"]]


def test_alignments(tmp_path):
    path = write(tmp_path, "a.align", "0-0 1-2 2-1\n\n0-0 0-0\n")
    sets = parse_alignments(path)
    assert sets[0].links == {(0, 0), (1, 2), (2, 1)}
    assert sets[1].links == frozenset()
    assert sets[2].links == {(0, 0)}
    assert parse_alignments(write(tmp_path, "b.align", format_alignments(sets))) == sets


@pytest.mark.parametrize("line, message", [("0-0 12", "missing '-'"), ("a-1", "non-numeric")])
def test_alignment_errors(tmp_path, line, message):
    with pytest.raises(InputError, match=f"line 2: .*{message}"):
        parse_alignments(write(tmp_path, "a.align", "0-0\n" + line + "\n"))


@pytest.mark.parametrize("text, expected", [(".", True), ("Hund", False), ("...", True), ("«", True), ("a.", False)])
def test_is_punct(text, expected):
    assert is_punct(text) is expected


def test_is_punct_extra():
    assert is_punct("@", extra="@")
    assert is_punct("--", extra=("--",))


def test_token_validation():
    with pytest.raises(ValueError):
        Token("a b")
    with pytest.raises(ValueError):
        Token("a", dep_label="subj")


def small_run(tmp_path: Path, docs=None, **overrides) -> Path:
    write(tmp_path, "src.txt", "s1 s2\ns3\ns4 s5\ns6\n")
    for name in ("A", "B"):
        write(tmp_path, f"{name}.mt.txt", "a b\nc\nd e\nf\n")
        write(tmp_path, f"{name}.pe.txt", "a b\nc\ne d\nf\n")
        write(tmp_path, f"{name}.align", "0-0 1-1\n0-0\n0-1 1-0\n0-0\n")
    manifest = {
        "source": "src.txt",
        "systems": [
            {"name": n, "output": f"{n}.mt.txt", "postedit": f"{n}.pe.txt",
             "align_src_mt": f"{n}.align", "align_src_pe": f"{n}.align"}
            for n in ("A", "B")
        ],
        "docs": docs if docs is not None else [["d1", 0, 1], ["d2", 2, 3]],
    }
    manifest.update(overrides)
    return write(tmp_path, "run.yaml", yaml.safe_dump(manifest))


def test_manifest_loads(tmp_path):
    run = load_manifest(small_run(tmp_path))
    assert run.system_names == ["A", "B"]
    assert [d.doc_id for d in run.docs] == ["d1", "d2"]
    assert run.source[3].doc_id == "d2"
    assert run.has_alignments("A")
    assert len(run.refs.for_segment("A", 0)) == 2


def test_overlapping_docs(tmp_path):
    with pytest.raises(InputError, match="segment 2 claimed twice"):
        load_manifest(small_run(tmp_path, docs=[["d1", 0, 2], ["d2", 2, 3]]))


def test_uncovered_segment(tmp_path):
    with pytest.raises(InputError, match="segment 3 not covered"):
        load_manifest(small_run(tmp_path, docs=[["d1", 0, 2]]))


def test_count_mismatch(tmp_path):
    path = small_run(tmp_path)
    write(tmp_path, "B.mt.txt", "a b\nc\nd e\n")
    with pytest.raises(InputError, match="system B: 3 segments, expected 4"):
        load_manifest(path)


def test_missing_alignment_file_fails_at_load(tmp_path):
    path = small_run(tmp_path)
    (tmp_path / "A.align").unlink()
    with pytest.raises(InputError, match="A.align: alignment file not found"):
        load_manifest(path)


def test_alignment_out_of_range(tmp_path):
    path = small_run(tmp_path)
    write(tmp_path, "B.align", "0-0 1-1\n0-0\n0-5\n0-0\n")
    with pytest.raises(InputError, match="line 3: alignment link 0-5 out of range"):
        load_manifest(path)


def test_required_alignments(tmp_path):
    path = small_run(tmp_path)
    raw = yaml.safe_load(path.read_text())
    del raw["systems"][1]["align_src_pe"]
    path.write_text(yaml.safe_dump(raw))
    assert not load_manifest(path).has_alignments("B")
    with pytest.raises(InputError, match="system B: no align_src_pe"):
        load_manifest(path, require_alignments=True)


def test_default_single_doc(tmp_path):
    run = load_manifest(small_run(tmp_path, docs=[]))
    assert [(d.doc_id, d.first, d.last) for d in run.docs] == [("all", 0, 3)]


def test_alignment_set_validate():
    with pytest.raises(InputError):
        AlignmentSet(frozenset({(2, 0)})).validate(2, 2)
