"""Per-residue prediction tracks, binding-site clusters, and mutant diffs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sequence import ProteinChain

PROTEIN_TRACK = "protein"
RNA_TRACK = "rna"
TRACKS = (PROTEIN_TRACK, RNA_TRACK)
GLYPH = {PROTEIN_TRACK: "p", RNA_TRACK: "r"}
LINE_TAG = {PROTEIN_TRACK: "PRO", RNA_TRACK: "RNA"}
NEG_GLYPH = "."
PREFIX = 5  # width of the "SEQ  " line tags


def as_mask(mask) -> np.ndarray:
    """Accept a bool array, 0/1 sequence, or a '+'/'-' string."""
    if isinstance(mask, str):
        return np.array([ch == "+" for ch in mask], dtype=bool)
    return np.asarray(mask, dtype=bool)


@dataclass(frozen=True)
class ClusterSpan:
    start: int  # 1-based, inclusive
    end: int
    size: int
    gaps: int

    def as_tuple(self):
        return (self.start, self.end)


def find_clusters(mask, max_gap: int = 2, min_size: int = 3) -> list:
    """Runs of positives, merged across internal gaps of at most ``max_gap``
    negatives; spans with fewer than ``min_size`` positives are dropped."""
    positions = np.flatnonzero(as_mask(mask)) + 1
    spans = []
    if len(positions) == 0:
        return spans
    start = prev = positions[0]
    count = 1
    for p in positions[1:]:
        if p - prev - 1 <= max_gap:
            count += 1
        else:
            spans.append((start, prev, count))
            start, count = p, 1
        prev = p
    spans.append((start, prev, count))
    return [ClusterSpan(int(s), int(e), c, int(e - s + 1 - c)) for s, e, c in spans if c >= min_size]


@dataclass(frozen=True)
class Annotation:
    name: str
    start: int
    end: int


def parse_annotations(text, chain_length: Optional[int] = None) -> list:
    """``name<TAB>start<TAB>end`` lines, 1-based inclusive."""
    if not isinstance(text, str):
        text = text.read()
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'name<TAB>start<TAB>end'")
        try:
            start, end = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: start/end must be integers")
        if not 1 <= start <= end or (chain_length is not None and end > chain_length):
            raise ValueError(f"line {lineno}: annotation {parts[0]!r} range {start}-{end} is invalid")
        out.append(Annotation(parts[0].strip(), start, end))
    return out


@dataclass(frozen=True, eq=False)
class PredictionTrack:
    chain: ProteinChain
    protein_mask: Optional[np.ndarray] = None
    rna_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("protein_mask", "rna_mask"):
            value = getattr(self, name)
            if value is None:
                continue
            value = as_mask(value)
            if len(value) != len(self.chain):
                raise ValueError(f"{name} length {len(value)} differs from chain length {len(self.chain)}")
            object.__setattr__(self, name, value)

    def mask(self, track: str) -> Optional[np.ndarray]:
        return self.protein_mask if track == PROTEIN_TRACK else self.rna_mask


def _ruler(start: int, stop: int) -> str:
    """Column ruler for 1-based positions start..stop; numbers end on their column."""
    line = [" "] * (stop - start + 1)
    marks = [start] + [p for p in range(start, stop + 1) if p % 10 == 0 and p != start]
    for p in marks:
        label = str(p)
        col = p - start
        lo = col - len(label) + 1 if p != start else col
        if lo < 0 or lo + len(label) > len(line) or any(ch != " " for ch in line[max(0, lo - 1):lo + len(label)]):
            continue
        line[lo:lo + len(label)] = label
    return "".join(line).rstrip()


def _annotation_line(annotations, length) -> str:
    line = [NEG_GLYPH] * length
    for ann in annotations:
        glyph = ann.name[:1] or "#"
        for p in range(ann.start, min(ann.end, length) + 1):
            line[p - 1] = glyph
    return "".join(line)


def render_report(t: PredictionTrack, annotations=None, width: int = 60,
                  max_gap: int = 2, min_size: int = 3) -> str:
    """Fixed-width text tracks followed by a cluster summary."""
    if width < 1:
        raise ValueError("report width must be positive")
    seq = t.chain.sequence
    n = len(seq)
    tracks = {}
    for track in TRACKS:
        m = t.mask(track)
        if m is not None:
            tracks[track] = "".join(GLYPH[track] if v else NEG_GLYPH for v in m)
    ann = _annotation_line(annotations, n) if annotations else None

    out = [f">{t.chain.id}  length={n}", ""]
    for lo in range(0, n, width):
        hi = min(n, lo + width)
        out.append(" " * PREFIX + _ruler(lo + 1, hi))
        out.append("SEQ".ljust(PREFIX) + seq[lo:hi])
        for track, line in tracks.items():
            out.append(LINE_TAG[track].ljust(PREFIX) + line[lo:hi])
        if ann is not None:
            out.append("ANN".ljust(PREFIX) + ann[lo:hi])
        out.append("")

    for track in tracks:
        label = "protein-binding" if track == PROTEIN_TRACK else "RNA-binding"
        m = t.mask(track)
        spans = find_clusters(m, max_gap, min_size)
        out.append(f"{label} residues: {int(m.sum())}; clusters (max_gap={max_gap}, min_size={min_size}): {len(spans)}")
        for s in spans:
            out.append(f"  {s.start}-{s.end}\tsize={s.size}\tgaps={s.gaps}\t{seq[s.start - 1:s.end]}")
        out.append("")
    if annotations:
        out.append("annotations:")
        for a in annotations:
            out.append(f"  {a.name[:1] or '#'}  {a.name}\t{a.start}-{a.end}")
        out.append("")
    return "\n".join(out)


def extract_masks(report: str) -> dict:
    """Recover ``{track: bool mask}`` from the PRO/RNA lines of a rendered report."""
    parts = {PROTEIN_TRACK: [], RNA_TRACK: []}
    tags = {LINE_TAG[t].ljust(PREFIX): t for t in TRACKS}
    for line in report.splitlines():
        track = tags.get(line[:PREFIX])
        if track is not None:
            parts[track].append(line[PREFIX:])
    return {t: np.array([ch == GLYPH[t] for ch in "".join(v)], dtype=bool) for t, v in parts.items() if v}


@dataclass(frozen=True)
class PositionChange:
    position: int  # 1-based
    track: str
    before: str  # '+' or '-'
    after: str


@dataclass(frozen=True)
class ClusterChange:
    track: str
    span: ClusterSpan
    change: str  # 'removed' (only in a) or 'added' (only in b)


@dataclass(frozen=True)
class DiffReport:
    changes: tuple = field(default_factory=tuple)
    cluster_changes: tuple = field(default_factory=tuple)

    @property
    def empty(self) -> bool:
        return not self.changes and not self.cluster_changes


def diff_predictions(a: PredictionTrack, b: PredictionTrack, max_gap: int = 2, min_size: int = 3) -> DiffReport:
    """Positionwise and cluster-level differences between two substitution variants."""
    if len(a.chain) != len(b.chain):
        raise ValueError(
            f"chains differ in length ({len(a.chain)} vs {len(b.chain)}); only substitution "
            "mutants are supported, align indel variants before comparing"
        )
    changes = []
    cluster_changes = []
    for track in TRACKS:
        ma, mb = a.mask(track), b.mask(track)
        if ma is None or mb is None:
            continue
        for i in np.flatnonzero(ma != mb):
            changes.append(PositionChange(int(i) + 1, track, "+" if ma[i] else "-", "+" if mb[i] else "-"))
        sa = {s.as_tuple(): s for s in find_clusters(ma, max_gap, min_size)}
        sb = {s.as_tuple(): s for s in find_clusters(mb, max_gap, min_size)}
        cluster_changes += [ClusterChange(track, sa[k], "removed") for k in sorted(sa.keys() - sb.keys())]
        cluster_changes += [ClusterChange(track, sb[k], "added") for k in sorted(sb.keys() - sa.keys())]
    changes.sort(key=lambda c: (c.position, c.track))
    return DiffReport(tuple(changes), tuple(cluster_changes))


def format_diff(report: DiffReport, fmt: str = "text") -> str:
    if fmt == "tsv":
        rows = ["kind\ttrack\tposition_or_span\tfrom\tto"]
        rows += [f"position\t{c.track}\t{c.position}\t{c.before}\t{c.after}" for c in report.changes]
        rows += [f"cluster\t{c.track}\t{c.span.start}-{c.span.end}\t"
                 f"{'+' if c.change == 'removed' else '-'}\t{'-' if c.change == 'removed' else '+'}"
                 for c in report.cluster_changes]
        return "\n".join(rows) + "\n"
    if report.empty:
        return "no differences\n"
    lines = [f"{len(report.changes)} positional change(s)"]
    lines += [f"  {c.position}\t{c.track}\t{c.before} -> {c.after}" for c in report.changes]
    lines.append(f"{len(report.cluster_changes)} cluster change(s)")
    lines += [f"  {c.track}\t{c.span.start}-{c.span.end}\t{c.change}" for c in report.cluster_changes]
    return "\n".join(lines) + "\n"


# --- track files ------------------------------------------------------------

TRACK_HEADER = "chain_id\tsequence\tprotein\trna"


def format_tracks(tracks) -> str:
    def enc(m):
        return "" if m is None else "".join("+" if v else "-" for v in m)
    rows = [TRACK_HEADER] + [f"{t.chain.id}\t{t.chain.sequence}\t{enc(t.protein_mask)}\t{enc(t.rna_mask)}"
                             for t in tracks]
    return "\n".join(rows) + "\n"


def parse_tracks(text) -> list:
    if not isinstance(text, str):
        text = text.read()
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("chain_id\t"):
            continue
        parts = raw.split("\t")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 tab-separated columns")
        cid, seq, pro, rna = parts
        out.append(PredictionTrack(ProteinChain.from_string(cid, seq), as_mask(pro) if pro else None,
                                   as_mask(rna) if rna else None))
    return out


def format_spans(rows) -> str:
    """TSV of ``(chain_id, track, span, sequence)`` rows; track/sequence may be None."""
    lines = ["chain_id\ttrack\tstart\tend\tsize\tgaps\tsequence"]
    for chain_id, track, s, seq in rows:
        lines.append(f"{chain_id}\t{track or ''}\t{s.start}\t{s.end}\t{s.size}\t{s.gaps}\t{seq or ''}")
    return "\n".join(lines) + "\n"
