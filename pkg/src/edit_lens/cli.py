"""``edit-lens`` command line: score, errors, shifts, breakdown, sigtest.

Exit codes: 0 success, 2 input error, 3 metric precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from edit_lens.config import Settings, resolve_settings
from edit_lens.corpus import InputError, Run, load_manifest
from edit_lens.metrics import (
    MetricScore,
    bleu_stats,
    corpus_bleu,
    corpus_krs,
    hter,
    mter,
)
from edit_lens.profiler import (
    bin_by_length,
    classify_shifts,
    doc_breakdown,
    error_components,
    morph_delta,
    profile_from_components,
    reduction_table,
    round_half_up,
)
from edit_lens.stats import approx_randomization, paired_bootstrap, pearson, ztest_proportions
from edit_lens.ter import ScoringError, shift_blocks

SCHEMA_VERSION = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3


class PreconditionError(Exception):
    pass


def fmt(value: float | None, digits: int = 1) -> str:
    if value is None:
        return "n/a"
    return f"{round_half_up(value, digits):.{digits}f}"


def _tsv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _relative(path: Path | None, base: Path) -> str | None:
    if path is None:
        return None
    try:
        return str(path.relative_to(base))
    except ValueError:
        return str(path)


def _header(command: str, run: Run, settings: Settings) -> dict:
    m = run.manifest
    base = m.path.parent
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "manifest": {
            "file": m.path.name,
            "source": _relative(m.source, base),
            "reference": _relative(m.reference, base),
            "systems": [
                {
                    "name": s.name,
                    "output": _relative(s.output, base),
                    "postedit": _relative(s.postedit, base),
                    "align_src_mt": _relative(s.align_src_mt, base),
                    "align_src_pe": _relative(s.align_src_pe, base),
                }
                for s in m.systems
            ],
            "docs": [[d.doc_id, d.first, d.last] for d in run.docs],
            "segments": len(run),
        },
        "config": settings.to_dict(),
        "seed": settings.stats.seed,
    }


def _ratio_json(score: MetricScore) -> dict:
    return {
        "corpus": score.corpus_value,
        "numerator": score.numerator,
        "denominator": score.denominator,
        "per_segment": [list(p) for p in score.per_segment],
    }


def _emit(args, name: str, payload: dict, tsv_rows: Sequence[Sequence[Any]], extra: dict[str, str] | None = None):
    text = _tsv(tsv_rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(dump_json(payload), encoding="utf-8")
        (out / f"{name}.tsv").write_text(text, encoding="utf-8")
        for fname, content in (extra or {}).items():
            (out / fname).write_text(content, encoding="utf-8")
    sys.stdout.write(text)


def _load(args, require_alignments: bool = False) -> tuple[Run, Settings]:
    run = load_manifest(args.manifest, require_alignments=require_alignments)
    settings = resolve_settings(
        run.manifest.config, args.config, lowercase=args.lowercase, seed=getattr(args, "seed", None)
    )
    return run, settings


def _check_systems(run: Run, *names: str) -> None:
    for name in names:
        if name not in run.outputs:
            raise InputError(f"system {name!r} not in manifest (have: {', '.join(run.system_names)})")


# -- commands --------------------------------------------------------------


def cmd_score(args) -> None:
    metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
    unknown = set(metrics) - {"hter", "mter", "bleu", "krs"}
    if unknown:
        raise InputError(f"unknown metric(s): {', '.join(sorted(unknown))}")
    run, settings = _load(args, require_alignments="krs" in metrics)
    if "bleu" in metrics and run.reference is None:
        raise PreconditionError("BLEU needs a 'reference' file in the manifest")
    payload = _header("score", run, settings)
    scores: dict[str, dict] = {}
    rows: list[list[Any]] = [["system", "metric", "score", "numerator", "denominator"]]
    for name, system in run.outputs.items():
        entry: dict[str, Any] = {}
        for metric in metrics:
            if metric == "hter":
                s = hter(system, run.refs, settings.ter, args.jobs)
                entry[metric] = _ratio_json(s)
                rows.append([name, metric, fmt(s.corpus_value), s.numerator, s.denominator])
            elif metric == "mter":
                s = mter(system, run.refs, settings.ter, settings.mter_denominator, args.jobs)
                entry[metric] = _ratio_json(s)
                entry[metric]["closest_reference"] = list(s.details)
                rows.append([name, metric, fmt(s.corpus_value), s.numerator, s.denominator])
            elif metric == "bleu":
                b = settings.bleu
                value = corpus_bleu(system, run.reference, b.max_n, b.epsilon, b.lowercase)
                stats = []
                for h, r in zip(system.segments, run.reference):
                    hw, rw = h.surfaces, r.surfaces
                    if b.lowercase:
                        hw, rw = [w.lower() for w in hw], [w.lower() for w in rw]
                    stats.append(bleu_stats(hw, rw, b.max_n))
                entry[metric] = {"corpus": value, "per_segment_stats": stats}
                rows.append([name, metric, fmt(value), "", ""])
            else:
                k = corpus_krs(
                    run.source,
                    system.segments,
                    run.refs.targeted[name],
                    run.alignments[(name, "mt")],
                    run.alignments[(name, "pe")],
                    settings.krs,
                )
                entry[metric] = {"corpus": k.corpus_value, "skipped": k.skipped, "per_segment": list(k.per_segment)}
                rows.append([name, metric, fmt(k.corpus_value), "", ""])
        scores[name] = entry
    payload["scores"] = scores
    _emit(args, "score", payload, rows)


def cmd_errors(args) -> None:
    run, settings = _load(args)
    payload = _header("errors", run, settings)
    rows: list[list[Any]] = [["system", "words", "shifts", "shift_pct", "word", "lemma", "delta_pct", "krs"]]
    profiles, per_segment, checks = [], {}, {}
    for name in run.outputs:
        comp = error_components(run, name, settings.ter, settings.krs, jobs=args.jobs)
        p = profile_from_components(comp)
        delta = p.morph_delta_pct
        profiles.append(
            {
                "system": name,
                "word_count": p.word_count,
                "shift_count": p.shift_count,
                "shift_pct": p.shift_pct,
                "word_noshift": p.word_noshift,
                "lemma_noshift": p.lemma_noshift,
                "morph_delta_pct": delta,
                "krs": p.krs,
            }
        )
        per_segment[name] = {
            "word": [list(x) for x in comp.word.per_segment],
            "lemma": [list(x) for x in comp.lemma.per_segment],
            "shifts": comp.shifts_per_segment,
            "words": [len(s) for s in run.outputs[name].segments],
            "krs": list(comp.krs.per_segment) if comp.krs is not None else None,
        }
        word = 100.0 * sum(n for n, _ in comp.word.per_segment) / sum(d for _, d in comp.word.per_segment)
        lemma = 100.0 * sum(n for n, _ in comp.lemma.per_segment) / sum(d for _, d in comp.lemma.per_segment)
        recomputed = morph_delta(word, lemma) if word else None
        checks[name] = {
            "morph_delta_pct": recomputed,
            "shift_pct": 100.0 * sum(comp.shifts_per_segment) / p.word_count if p.word_count else 0.0,
            "consistent": recomputed == delta or (recomputed is None and word == 0),
        }
        rows.append([name, p.word_count, p.shift_count, fmt(p.shift_pct), fmt(p.word_noshift),
                     fmt(p.lemma_noshift), fmt(delta), fmt(p.krs)])
    payload.update(profiles=profiles, per_segment=per_segment, self_check=checks)
    _emit(args, "errors", payload, rows)


def cmd_shifts(args) -> None:
    run, settings = _load(args)
    _check_systems(run, args.focal, args.baseline)
    payload = _header("shifts", run, settings)
    table = None
    blocks = {}
    for name, system in run.outputs.items():
        score = hter(system, run.refs, settings.ter, args.jobs)
        traces = [a.trace for a in score.details]
        part = classify_shifts(traces, run.refs.targeted[name], name, settings.ter.punct_extra)
        table = part if table is None else table.merge(part)
        blocks[name] = [[[list(b.tokens), list(b.ref_positions)] for b in shift_blocks(t)] for t in traces]
    result = reduction_table(table, args.focal, args.baseline, args.threshold)
    systems = run.system_names
    rows: list[list[Any]] = [["section", "class", "reduction_pct"] + systems]
    for r in result:
        rows.append([r.section, r.key, "n/a" if r.reduction_pct is None else r.reduction_pct]
                    + [r.counts[s] for s in systems])
    payload.update(
        focal=args.focal,
        baseline=args.baseline,
        threshold=args.threshold,
        rows=[
            {"section": r.section, "class": r.key, "counts": r.counts, "reduction": r.reduction,
             "reduction_pct": r.reduction_pct}
            for r in result
        ],
        unfiltered={"pos": table.pos, "dep": table.dep, "totals": table.totals},
        unknown=table.unknown,
        per_segment=blocks,
    )
    if any(table.unknown.values()):
        print(f"warning: {sum(table.unknown.values())} shifted tokens landed on unannotated post-edit words",
              file=sys.stderr)
    _emit(args, "shifts", payload, rows)


def cmd_breakdown(args) -> None:
    run, settings = _load(args)
    _check_systems(run, args.focal)
    edges = tuple(int(x) for x in args.bins.split(",")) if args.bins else settings.bins
    payload = _header("breakdown", run, settings)
    scores = {name: mter(s, run.refs, settings.ter, settings.mter_denominator, args.jobs)
              for name, s in run.outputs.items()}
    bins_json = {}
    bin_rows: list[list[Any]] = [["bin_lo", "bin_hi", "n", "system", "mter"]]
    for name, score in scores.items():
        binned = bin_by_length(score.segment_scores(), run.source, edges)
        bins_json[name] = [
            {"lo": b.lo, "hi": b.hi, "n": b.n, "mter": b.mean, "pct_delta": d}
            for b, d in zip(binned.bins, binned.pct_delta)
        ]
        for b in binned.bins:
            if b.n:
                bin_rows.append([b.lo, "" if b.hi is None else b.hi, b.n, name, fmt(b.mean)])
    docs = doc_breakdown(run, args.focal, scores, settings.ttr.lowercase, settings.ttr.skip_punct,
                         settings.ter.punct_extra)
    ordered = sorted(docs.rows, key=lambda r: (r.mter[args.focal], r.doc_id))
    systems = run.system_names
    doc_rows: list[list[Any]] = [["doc_id", "ttr", "gain"] + systems]
    for r in ordered:
        doc_rows.append([r.doc_id, fmt(r.ttr, 4), fmt(r.gain)] + [fmt(r.mter[s]) for s in systems])
    x, y = docs.pairs()
    correlation: dict[str, Any] = {"n": len(x), "r": None}
    try:
        correlation["r"] = pearson(x, y)
    except ValueError as exc:
        correlation["warning"] = str(exc)
        print(f"warning: TTR/gain correlation omitted: {exc}", file=sys.stderr)
    payload.update(
        focal=args.focal,
        bins=bins_json,
        bin_edges=list(edges),
        docs=[{"doc_id": r.doc_id, "ttr": r.ttr, "gain": r.gain, "mter": r.mter} for r in ordered],
        correlation=correlation,
        per_segment={name: [list(p) for p in s.per_segment] for name, s in scores.items()},
    )
    _emit(args, "breakdown", payload, doc_rows, {"bins.csv": _csv(bin_rows), "docs.csv": _csv(doc_rows)})


def cmd_sigtest(args) -> None:
    run, settings = _load(args, require_alignments=args.test == "ar")
    _check_systems(run, args.a, args.b)
    payload = _header("sigtest", run, settings)
    st = settings.stats
    if args.test == "bootstrap":
        scorer = mter if args.metric == "mter" else hter
        extra = (settings.mter_denominator,) if args.metric == "mter" else ()
        sa = scorer(run.outputs[args.a], run.refs, settings.ter, *extra, jobs=args.jobs)
        sb = scorer(run.outputs[args.b], run.refs, settings.ter, *extra, jobs=args.jobs)
        iterations = args.iterations or st.bootstrap_iterations
        result = paired_bootstrap(sa.per_segment, sb.per_segment, iterations, st.seed)
        data = {"metric": args.metric, "a": _ratio_json(sa), "b": _ratio_json(sb)}
    elif args.test == "ztest":
        counts = {}
        for name in (args.a, args.b):
            s = hter(run.outputs[name], run.refs, settings.ter, args.jobs)
            counts[name] = (sum(a.trace.num_shifts for a in s.details),
                            sum(len(seg) for seg in run.outputs[name].segments))
        result = ztest_proportions(*counts[args.a], *counts[args.b])
        data = {"metric": "shift_proportion", "a": list(counts[args.a]), "b": list(counts[args.b])}
    else:
        values = {}
        for name in (args.a, args.b):
            values[name] = corpus_krs(run.source, run.outputs[name].segments, run.refs.targeted[name],
                                      run.alignments[(name, "mt")], run.alignments[(name, "pe")],
                                      settings.krs).per_segment
        paired = [(x, y) for x, y in zip(values[args.a], values[args.b]) if x is not None and y is not None]
        if not paired:
            raise PreconditionError("no segment has KRS for both systems")
        iterations = args.iterations or st.ar_iterations
        result = approx_randomization([p[0] for p in paired], [p[1] for p in paired], iterations, st.seed)
        data = {"metric": "krs", "a": list(values[args.a]), "b": list(values[args.b]), "paired": len(paired)}
    payload.update(a=args.a, b=args.b, result=result.to_dict(), significant_at_0_01=result.significant_at(0.01),
                   data=data)
    rows = [["test", "a", "b", "statistic", "p_value", "iterations", "seed"],
            [result.test, args.a, args.b, repr(result.statistic), repr(result.p_value), result.iterations,
             "" if result.seed is None else result.seed]]
    _emit(args, "sigtest", payload, rows)


def cmd_toy(args) -> None:
    from edit_lens.toy import write_toy_corpus

    path = write_toy_corpus(args.directory, seed=args.seed)
    print(path)


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edit-lens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("manifest", help="run manifest (YAML)")
        p.add_argument("--config", help="YAML/JSON file overriding default settings")
        p.add_argument("--lowercase", action="store_true", help="compare tokens case-insensitively")
        p.add_argument("--out", help="directory for JSON/TSV/CSV reports")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for segment scoring")

    p = sub.add_parser("score", help="corpus HTER/mTER/BLEU/KRS per system")
    common(p)
    p.add_argument("--metric", default="hter,mter", help="comma-separated: hter, mter, bleu, krs")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("errors", help="morphology, lexical and word-order profile")
    common(p)
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("shifts", help="shifted words by POS and dependency label")
    common(p)
    p.add_argument("--focal", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--threshold", type=int, default=10)
    p.set_defaults(func=cmd_shifts)

    p = sub.add_parser("breakdown", help="mTER by sentence length and by document")
    common(p)
    p.add_argument("--focal", required=True)
    p.add_argument("--bins", help="comma-separated upper bin edges, e.g. 15,25,35")
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("sigtest", help="significance of the difference between two systems")
    common(p)
    p.add_argument("--test", choices=("bootstrap", "ztest", "ar"), default="bootstrap")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=("hter", "mter"), default="hter", help="metric for bootstrap")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=cmd_sigtest)

    p = sub.add_parser("toy", help="write the synthetic demo corpus")
    p.add_argument("directory")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScoringError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return 0


if __name__ == "__main__":
    sys.exit(main())
