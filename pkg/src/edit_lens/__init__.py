"""Post-edit based error analysis for machine translation output.

Scores systems with HTER/mTER, splits errors into morphology, lexical and
word-order components, classifies shifted words by POS and dependency label
and runs the usual significance tests.
"""

from edit_lens.corpus import (
    AlignmentSet,
    EvalManifest,
    InputError,
    ReferenceSet,
    Run,
    Segment,
    SystemOutput,
    Token,
    is_punct,
    load_manifest,
    parse_alignments,
    parse_segments,
)
from edit_lens.ter import EditOp, EditTrace, TerConfig, ter_align, ter_score, shift_blocks

__version__ = "0.1.0"

__all__ = [
    "AlignmentSet",
    "EditOp",
    "EditTrace",
    "EvalManifest",
    "InputError",
    "ReferenceSet",
    "Run",
    "Segment",
    "SystemOutput",
    "TerConfig",
    "Token",
    "is_punct",
    "load_manifest",
    "parse_alignments",
    "parse_segments",
    "shift_blocks",
    "ter_align",
    "ter_score",
]
