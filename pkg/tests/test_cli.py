import csv
import json
import shutil
from pathlib import Path

import pytest
import yaml

from edit_lens.cli import EXIT_INPUT, EXIT_PRECONDITION, fmt, main
from edit_lens.toy import build_toy_corpus, bundled_manifest


@pytest.fixture
def toy(tmp_path):
    """A writable copy of the bundled corpus."""
    dest = tmp_path / "toy"
    shutil.copytree(bundled_manifest().parent, dest)
    return dest / "manifest.yaml"


def read_tsv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.reader(fh, delimiter="\t"))


def test_bundled_corpus_matches_generator():
    folder = bundled_manifest().parent
    generated = build_toy_corpus()
    assert sorted(p.name for p in folder.iterdir()) == sorted(generated)
    for name, content in generated.items():
        assert (folder / name).read_text(encoding="utf-8") == content, name


def test_score_tsv_and_json_agree(toy, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["score", str(toy), "--metric", "hter,mter,bleu,krs", "--out", str(out)]) == 0
    rows = read_tsv(out / "score.tsv")
    assert capsys.readouterr().out == (out / "score.tsv").read_text(encoding="utf-8")
    data = json.loads((out / "score.json").read_text(encoding="utf-8"))
    assert data["schema"] == 1
    assert rows[0] == ["system", "metric", "score", "numerator", "denominator"]
    for system, metric, score, num, den in rows[1:]:
        entry = data["scores"][system][metric]
        assert score == fmt(entry["corpus"])
        if metric in ("hter", "mter"):
            assert float(num) == entry["numerator"]
            assert float(den) == entry["denominator"]
            assert sum(p[0] for p in entry["per_segment"]) == entry["numerator"]
    nmt, pbsy = data["scores"]["NMT"], data["scores"]["PBSY"]
    assert nmt["hter"]["corpus"] < pbsy["hter"]["corpus"]
    assert nmt["mter"]["corpus"] < nmt["hter"]["corpus"]


def test_errors_report(toy, tmp_path):
    out = tmp_path / "out"
    assert main(["errors", str(toy), "--out", str(out)]) == 0
    rows = read_tsv(out / "errors.tsv")
    data = json.loads((out / "errors.json").read_text())
    header = rows[0]
    for row in rows[1:]:
        rec = dict(zip(header, row))
        prof = next(p for p in data["profiles"] if p["system"] == rec["system"])
        assert rec["word"] == fmt(prof["word_noshift"])
        assert rec["shifts"] == str(prof["shift_count"])


def test_shifts_report(toy, tmp_path):
    out = tmp_path / "out"
    assert main(["shifts", str(toy), "--focal", "NMT", "--baseline", "PBSY", "--out", str(out)]) == 0
    rows = read_tsv(out / "shifts.tsv")
    assert rows[-1][:2] == ["all", "all"]
    data = json.loads((out / "shifts.json").read_text())
    totals = data["unfiltered"]["totals"]
    assert int(rows[-1][2]) == round(100 * (totals["NMT"] - totals["PBSY"]) / totals["PBSY"])


def test_breakdown_csvs(toy, tmp_path):
    out = tmp_path / "out"
    assert main(["breakdown", str(toy), "--focal", "NMT", "--out", str(out)]) == 0
    bins = (out / "bins.csv").read_text().splitlines()
    assert bins[0] == "bin_lo,bin_hi,n,system,mter"
    docs = list(csv.reader((out / "docs.csv").open()))
    focal = [float(r[docs[0].index("NMT")]) for r in docs[1:]]
    assert focal == sorted(focal)
    data = json.loads((out / "breakdown.json").read_text())
    assert data["correlation"]["n"] == 5


def test_single_doc_correlation_warns(toy, tmp_path, capsys):
    raw = yaml.safe_load(toy.read_text())
    raw["docs"] = [["only", 0, 49]]
    toy.write_text(yaml.safe_dump(raw))
    assert main(["breakdown", str(toy), "--focal", "NMT", "--out", str(tmp_path / "o")]) == 0
    assert "correlation omitted" in capsys.readouterr().err
    data = json.loads((tmp_path / "o" / "breakdown.json").read_text())
    assert data["correlation"]["r"] is None


@pytest.mark.parametrize("test", ["bootstrap", "ztest", "ar"])
def test_sigtest(toy, tmp_path, test):
    out = tmp_path / test
    assert main(["sigtest", str(toy), "--test", test, "--a", "NMT", "--b", "PBSY", "--out", str(out)]) == 0
    data = json.loads((out / "sigtest.json").read_text())
    assert data["result"]["p_value"] < 0.01
    row = read_tsv(out / "sigtest.tsv")[1]
    assert float(row[4]) == data["result"]["p_value"]


def test_seed_precedence(toy, tmp_path, monkeypatch):
    def seed_of(*extra):
        out = tmp_path / "s"
        assert main(["sigtest", str(toy), "--a", "NMT", "--b", "PBSY", "--iterations", "50", "--out", str(out),
                     *extra]) == 0
        return json.loads((out / "sigtest.json").read_text())["seed"]

    assert seed_of() == 1234
    config = tmp_path / "c.yaml"
    config.write_text("stats:\n  seed: 5\n")
    assert seed_of("--config", str(config)) == 5
    monkeypatch.setenv("EDIT_LENS_SEED", "6")
    assert seed_of("--config", str(config)) == 6
    assert seed_of("--seed", "7") == 7


def test_missing_alignment_file_is_input_error(toy, capsys):
    (toy.parent / "hpb.src-pe.align").unlink()
    assert main(["score", str(toy), "--metric", "krs"]) == EXIT_INPUT
    assert "hpb.src-pe.align" in capsys.readouterr().err


def test_undeclared_alignment_with_krs(toy, capsys):
    raw = yaml.safe_load(toy.read_text())
    del raw["systems"][0]["align_src_mt"]
    toy.write_text(yaml.safe_dump(raw))
    assert main(["score", str(toy), "--metric", "hter"]) == 0
    capsys.readouterr()
    assert main(["score", str(toy), "--metric", "krs"]) == EXIT_INPUT
    assert "no align_src_mt" in capsys.readouterr().err


def test_bad_manifest_and_system(toy, tmp_path):
    assert main(["score", str(tmp_path / "nope.yaml")]) == EXIT_INPUT
    assert main(["shifts", str(toy), "--focal", "XX", "--baseline", "PBSY"]) == EXIT_INPUT
    assert main(["score", str(toy), "--metric", "wer"]) == EXIT_INPUT


def test_empty_reference_is_precondition_error(toy):
    pe = toy.parent / "nmt.pe.conllu"
    blocks = pe.read_text(encoding="utf-8").split("\n\n")
    blocks[0] = "1\t.\t.\t$.\t_\t_\t_\tpunct"
    pe.write_text("\n\n".join(blocks), encoding="utf-8")
    align = toy.parent / "nmt.src-pe.align"
    lines = align.read_text().split("\n")
    lines[0] = ""
    align.write_text("\n".join(lines))
    assert main(["errors", str(toy)]) == EXIT_PRECONDITION


def test_lemma_free_input_is_precondition_error(tmp_path):
    for name, text in (("src.txt", "a b\n"), ("mt.txt", "a b\n"), ("pe.txt", "b a\n")):
        (tmp_path / name).write_text(text)
    (tmp_path / "m.yaml").write_text(
        yaml.safe_dump({"source": "src.txt", "systems": [{"name": "A", "output": "mt.txt", "postedit": "pe.txt"}]})
    )
    assert main(["score", str(tmp_path / "m.yaml")]) == 0
    assert main(["errors", str(tmp_path / "m.yaml")]) == EXIT_PRECONDITION


def test_toy_command(tmp_path, capsys):
    assert main(["toy", str(tmp_path / "t")]) == 0
    assert Path(capsys.readouterr().out.strip()).name == "manifest.yaml"
    assert (tmp_path / "t" / "nmt.pe.conllu").exists()


def test_json_echoes_manifest_and_config(toy, tmp_path):
    out = tmp_path / "out"
    assert main(["score", str(toy), "--lowercase", "--out", str(out)]) == 0
    data = json.loads((out / "score.json").read_text())
    assert data["manifest"]["source"] == "source.txt"
    assert data["config"]["ter"]["lowercase"] is True
    assert data["config"]["ter"]["shift_cost"] == 1
