"""Corpus data model and readers for segments, annotations, alignments and manifests."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import yaml

PLAIN = "plain"
CONLLU = "conllu"
_CONLLU_SUFFIXES = (".conllu", ".conll")


class InputError(ValueError):
    """Malformed or inconsistent input. Carries the file and line when known."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.message = message
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = f"{self.path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


def is_punct(token: "Token | str", extra: Iterable[str] = ()) -> bool:
    """True iff every character of the surface is punctuation.

    Punctuation is any character in a Unicode ``P*`` category, or any
    character listed in ``extra``. Entries of ``extra`` longer than one
    character match whole tokens.
    """
    surface = token if isinstance(token, str) else token.surface
    if not surface:
        return False
    extra = set(extra)
    if surface in extra:
        return True
    return all(ch in extra or unicodedata.category(ch).startswith("P") for ch in surface)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str | None = None
    pos: str | None = None
    dep_label: str | None = None

    def __post_init__(self) -> None:
        if not self.surface or any(ch.isspace() for ch in self.surface):
            raise ValueError(f"invalid token surface {self.surface!r}")
        if self.dep_label is not None and self.pos is None:
            raise ValueError(f"token {self.surface!r} has a dependency label but no POS")

    @property
    def is_punct(self) -> bool:
        return is_punct(self.surface)


@dataclass(frozen=True)
class Segment:
    id: int
    tokens: tuple[Token, ...]
    doc_id: str = ""

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return " ".join(self.surfaces)

    @property
    def has_lemmas(self) -> bool:
        return all(t.lemma is not None for t in self.tokens)


def segment(text: str | Sequence[str], id: int = 0, doc_id: str = "") -> Segment:
    """Build an unannotated segment from a whitespace-tokenized string or token list."""
    words = text.split() if isinstance(text, str) else list(text)
    return Segment(id=id, tokens=tuple(Token(w) for w in words), doc_id=doc_id)


@dataclass(frozen=True)
class SystemOutput:
    system_name: str
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class AlignmentSet:
    links: frozenset[tuple[int, int]] = frozenset()

    def __len__(self) -> int:
        return len(self.links)

    def validate(self, source_len: int, target_len: int) -> None:
        for s, t in self.links:
            if not (0 <= s < source_len and 0 <= t < target_len):
                raise InputError(
                    f"alignment link {s}-{t} out of range for lengths {source_len}/{target_len}"
                )


@dataclass(frozen=True)
class ReferenceSet:
    """Targeted post-edits per system plus optional additional references."""

    targeted: Mapping[str, tuple[Segment, ...]]
    extra: tuple[tuple[Segment, ...], ...] = ()

    def for_segment(self, system: str, index: int) -> list[Segment]:
        """All post-edits available for a segment, the system's targeted one first."""
        refs = [self.targeted[system][index]]
        refs.extend(segs[index] for name, segs in self.targeted.items() if name != system)
        refs.extend(segs[index] for segs in self.extra)
        return refs


@dataclass(frozen=True)
class DocRange:
    doc_id: str
    first: int
    last: int

    def indices(self) -> range:
        return range(self.first, self.last + 1)


@dataclass(frozen=True)
class SystemEntry:
    name: str
    output: Path
    postedit: Path
    align_src_mt: Path | None = None
    align_src_pe: Path | None = None


@dataclass(frozen=True)
class EvalManifest:
    path: Path
    source: Path
    systems: tuple[SystemEntry, ...]
    docs: tuple[DocRange, ...] = ()
    reference: Path | None = None
    extra_postedits: tuple[Path, ...] = ()
    config: Mapping[str, Any] = field(default_factory=dict)

    @property
    def system_names(self) -> list[str]:
        return [s.name for s in self.systems]


@dataclass(frozen=True)
class Run:
    """A fully loaded and cross-validated evaluation run."""

    manifest: EvalManifest
    source: tuple[Segment, ...]
    outputs: Mapping[str, SystemOutput]
    refs: ReferenceSet
    docs: tuple[DocRange, ...]
    reference: tuple[Segment, ...] | None = None
    alignments: Mapping[tuple[str, str], tuple[AlignmentSet, ...]] = field(default_factory=dict)

    @property
    def system_names(self) -> list[str]:
        return list(self.outputs)

    def __len__(self) -> int:
        return len(self.source)

    def has_alignments(self, system: str) -> bool:
        return (system, "mt") in self.alignments and (system, "pe") in self.alignments


# -- readers ---------------------------------------------------------------


def _guess_format(path: Path) -> str:
    return CONLLU if path.suffix.lower() in _CONLLU_SUFFIXES else PLAIN


def _read_lines(path: Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError("file not found", path) from None
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8 ({exc.reason})", path) from None
    return text.split("\n") if text else []


def _none_if_blank(value: str) -> str | None:
    return None if value in ("", "_") else value


def parse_segments(path: str | Path, format: str | None = None, doc_id: str = "") -> list[Segment]:
    """Read a pre-tokenized corpus.

    ``plain`` holds one whitespace-tokenized segment per line. ``conllu``
    holds one token per line in blocks separated by blank lines; only FORM,
    LEMMA, UPOS (XPOS when UPOS is ``_``) and DEPREL are kept.
    """
    path = Path(path)
    fmt = format or _guess_format(path)
    lines = _read_lines(path)
    # a trailing newline yields one empty element that is not a segment
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise InputError("empty file", path)
    if fmt == PLAIN:
        return [
            Segment(id=i, tokens=tuple(Token(w) for w in line.split()), doc_id=doc_id)
            for i, line in enumerate(lines)
        ]
    if fmt == CONLLU:
        return _parse_conllu(path, lines, doc_id)
    raise InputError(f"unknown segment format {fmt!r}", path)


def _parse_conllu(path: Path, lines: list[str], doc_id: str) -> list[Segment]:
    segments: list[Segment] = []
    block: list[Token] = []
    block_open = False

    def close() -> None:
        nonlocal block, block_open
        if block_open:
            segments.append(Segment(id=len(segments), tokens=tuple(block), doc_id=doc_id))
        block, block_open = [], False

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            close()
            continue
        if line.startswith("#"):
            block_open = True
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise InputError(f"expected ≥8 columns, got {len(cols)}", path, lineno)
        try:
            tok_id = int(cols[0])
        except ValueError:
            raise InputError(f"non-integer token ID {cols[0]!r}", path, lineno) from None
        if tok_id != len(block) + 1:
            raise InputError(f"token ID {tok_id} out of sequence, expected {len(block) + 1}", path, lineno)
        pos = _none_if_blank(cols[3]) or _none_if_blank(cols[4])
        try:
            block.append(
                Token(
                    surface=cols[1],
                    lemma=_none_if_blank(cols[2]),
                    pos=pos,
                    dep_label=_none_if_blank(cols[7]),
                )
            )
        except ValueError as exc:
            raise InputError(str(exc), path, lineno) from None
        block_open = True
    close()
    if not segments:
        raise InputError("empty file", path)
    return segments


def format_plain(segments: Iterable[Segment]) -> str:
    return "".join(" ".join(seg.surfaces) + "\n" for seg in segments)


def format_conllu(segments: Iterable[Segment]) -> str:
    out = []
    for seg in segments:
        for i, tok in enumerate(seg.tokens, start=1):
            cols = [str(i), tok.surface, tok.lemma or "_", tok.pos or "_", "_", "_", "_", tok.dep_label or "_"]
            out.append("\t".join(cols) + "\n")
        out.append("\n")
    return "".join(out)


def parse_alignments(path: str | Path) -> list[AlignmentSet]:
    """Read Pharaoh alignments: one line per segment, ``i-j`` links, 0-based."""
    path = Path(path)
    lines = _read_lines(path)
    if lines and lines[-1] == "":
        lines = lines[:-1]
    result = []
    for lineno, line in enumerate(lines, start=1):
        links = set()
        for item in line.split():
            src, dash, tgt = item.partition("-")
            if not dash:
                raise InputError(f"link {item!r} is missing '-'", path, lineno)
            if not (src.isdigit() and tgt.isdigit()):
                raise InputError(f"non-numeric link {item!r}", path, lineno)
            links.add((int(src), int(tgt)))
        result.append(AlignmentSet(frozenset(links)))
    return result


def format_alignments(alignments: Iterable[AlignmentSet]) -> str:
    return "".join(" ".join(f"{s}-{t}" for s, t in sorted(a.links)) + "\n" for a in alignments)


# -- manifest --------------------------------------------------------------


def _resolve(base: Path, value: Any, what: str, manifest: Path) -> Path:
    if not isinstance(value, str) or not value:
        raise InputError(f"{what}: expected a file path", manifest)
    return base / value


def _parse_docs(raw: Any, manifest: Path) -> tuple[DocRange, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise InputError("docs: expected a list", manifest)
    docs = []
    for item in raw:
        if isinstance(item, Mapping):
            values = (item.get("id"), item.get("first"), item.get("last"))
        elif isinstance(item, (list, tuple)) and len(item) == 3:
            values = tuple(item)
        else:
            raise InputError(f"docs: cannot read entry {item!r}", manifest)
        doc_id, first, last = values
        if not isinstance(first, int) or not isinstance(last, int) or first > last or first < 0:
            raise InputError(f"docs: bad range for {doc_id!r}", manifest)
        docs.append(DocRange(str(doc_id), first, last))
    return tuple(docs)


def read_manifest(path: str | Path) -> EvalManifest:
    """Parse the manifest file without touching the files it references."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError("manifest not found", path) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise InputError(f"invalid manifest: {exc}", path, mark.line + 1 if mark else None) from None
    if not isinstance(raw, Mapping):
        raise InputError("manifest must be a mapping", path)
    base = path.parent
    if "source" not in raw:
        raise InputError("missing required key 'source'", path)
    systems_raw = raw.get("systems")
    if not isinstance(systems_raw, list) or not systems_raw:
        raise InputError("'systems' must be a non-empty list", path)
    systems = []
    for entry in systems_raw:
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise InputError(f"system entry without a name: {entry!r}", path)
        name = str(entry["name"])
        if name in (s.name for s in systems):
            raise InputError(f"duplicate system name {name!r}", path)
        for key in ("output", "postedit"):
            if key not in entry:
                raise InputError(f"system {name}: missing {key!r}", path)
        systems.append(
            SystemEntry(
                name=name,
                output=_resolve(base, entry["output"], f"system {name} output", path),
                postedit=_resolve(base, entry["postedit"], f"system {name} postedit", path),
                align_src_mt=_resolve(base, entry["align_src_mt"], f"system {name} align_src_mt", path)
                if entry.get("align_src_mt")
                else None,
                align_src_pe=_resolve(base, entry["align_src_pe"], f"system {name} align_src_pe", path)
                if entry.get("align_src_pe")
                else None,
            )
        )
    config = raw.get("config") or {}
    if not isinstance(config, Mapping):
        raise InputError("'config' must be a mapping", path)
    return EvalManifest(
        path=path,
        source=_resolve(base, raw["source"], "source", path),
        systems=tuple(systems),
        docs=_parse_docs(raw.get("docs"), path),
        reference=_resolve(base, raw["reference"], "reference", path) if raw.get("reference") else None,
        extra_postedits=tuple(
            _resolve(base, p, "extra_postedits", path) for p in raw.get("extra_postedits") or ()
        ),
        config=dict(config),
    )


def validate_docs(docs: Sequence[DocRange], n: int) -> None:
    owner: list[str | None] = [None] * n
    for doc in docs:
        if doc.last >= n:
            raise InputError(f"doc {doc.doc_id}: range {doc.first}-{doc.last} exceeds {n} segments")
        for i in doc.indices():
            if owner[i] is not None:
                raise InputError(f"segment {i} claimed twice (docs {owner[i]} and {doc.doc_id})")
            owner[i] = doc.doc_id
    missing = [i for i, o in enumerate(owner) if o is None]
    if missing:
        raise InputError(f"segment {missing[0]} not covered by any doc ({len(missing)} uncovered)")


def _with_doc_ids(segments: Sequence[Segment], docs: Sequence[DocRange]) -> tuple[Segment, ...]:
    doc_of = {}
    for doc in docs:
        for i in doc.indices():
            doc_of[i] = doc.doc_id
    return tuple(Segment(s.id, s.tokens, doc_of.get(s.id, "")) for s in segments)


def load_manifest(path: str | Path, require_alignments: bool = False) -> Run:
    """Load a manifest and every file it references, validating counts and ranges.

    With ``require_alignments`` every system must declare both alignment files;
    this lets reordering scores fail at load time rather than mid-run.
    """
    manifest = read_manifest(path)
    source = parse_segments(manifest.source)
    n = len(source)
    docs = manifest.docs or (DocRange("all", 0, n - 1),)
    validate_docs(docs, n)
    source = _with_doc_ids(source, docs)

    def load(p: Path, label: str) -> tuple[Segment, ...]:
        segs = parse_segments(p)
        if len(segs) != n:
            raise InputError(f"{label}: {len(segs)} segments, expected {n}", p)
        return _with_doc_ids(segs, docs)

    outputs: dict[str, SystemOutput] = {}
    targeted: dict[str, tuple[Segment, ...]] = {}
    alignments: dict[tuple[str, str], tuple[AlignmentSet, ...]] = {}
    for entry in manifest.systems:
        outputs[entry.name] = SystemOutput(entry.name, load(entry.output, f"system {entry.name}"))
        targeted[entry.name] = load(entry.postedit, f"system {entry.name} post-edit")
        for side, apath, target in (
            ("mt", entry.align_src_mt, outputs[entry.name].segments),
            ("pe", entry.align_src_pe, targeted[entry.name]),
        ):
            if apath is None:
                if require_alignments:
                    raise InputError(f"system {entry.name}: no align_src_{side} file declared", manifest.path)
                continue
            if not apath.exists():
                raise InputError("alignment file not found", apath)
            aligns = parse_alignments(apath)
            if len(aligns) != n:
                raise InputError(f"system {entry.name} alignments: {len(aligns)} lines, expected {n}", apath)
            for i, (a, src, tgt) in enumerate(zip(aligns, source, target)):
                try:
                    a.validate(len(src), len(tgt))
                except InputError as exc:
                    raise InputError(exc.message, apath, i + 1) from None
            alignments[(entry.name, side)] = tuple(aligns)

    extra = tuple(load(p, "additional post-edit") for p in manifest.extra_postedits)
    reference = load(manifest.reference, "reference") if manifest.reference else None
    return Run(
        manifest=manifest,
        source=source,
        outputs=outputs,
        refs=ReferenceSet(targeted=targeted, extra=extra),
        docs=tuple(docs),
        reference=reference,
        alignments=alignments,
    )
