"""Residue alphabet, protein chains, labels and window extraction.

Residues are stored as small integer codes. The 20 canonical amino acids
occupy codes 0-19 in alphabetical order of their one-letter symbols, followed
by ``UNK`` (20) for anything unrecognised and ``PAD`` (21), which only ever
appears in extracted windows that overhang a chain terminus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

CANONICAL = "ACDEFGHIKLMNPQRSTVWY"
UNK = 20
PAD = 21
ALPHABET_SIZE = 22
# one-letter symbols for every code; 'X' is UNK, '_' is PAD
SYMBOLS = CANONICAL + "X_"
ALPHABET_ORDER = list(CANONICAL) + ["UNK", "PAD"]

_LETTER_TO_CODE = {c: i for i, c in enumerate(CANONICAL)}

POSITIVE = "+"
NEGATIVE = "-"


class SequenceParseError(ValueError):
    """Raised for malformed FASTA or label files."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def encode_sequence(text: str) -> np.ndarray:
    """Map a one-letter string to residue codes; unknown letters become UNK."""
    codes = np.fromiter(
        (_LETTER_TO_CODE.get(ch, UNK) for ch in text.upper()), dtype=np.int8, count=len(text)
    )
    return codes


def decode_sequence(codes: Iterable[int]) -> str:
    return "".join(SYMBOLS[int(c)] for c in codes)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProteinChain:
    """An identified residue sequence with optional per-residue interface labels.

    ``labels`` is a boolean array (True = interface residue) or None.
    """

    id: str
    residues: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        residues = _frozen(np.asarray(self.residues, dtype=np.int8))
        if residues.ndim != 1 or len(residues) < 1:
            raise ValueError(f"chain {self.id!r}: sequence must contain at least one residue")
        if residues.min() < 0 or residues.max() >= PAD:
            raise ValueError(f"chain {self.id!r}: residue codes must lie in 0..{UNK}")
        object.__setattr__(self, "residues", residues)
        if self.labels is not None:
            labels = _frozen(np.asarray(self.labels, dtype=bool))
            if labels.shape != residues.shape:
                raise ValueError(
                    f"chain {self.id!r}: {len(labels)} labels for {len(residues)} residues"
                )
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_string(cls, id: str, sequence: str, mask: Optional[str] = None) -> "ProteinChain":
        labels = None if mask is None else mask_to_labels(mask)
        return cls(id, encode_sequence(sequence), labels)

    def __len__(self) -> int:
        return len(self.residues)

    @property
    def sequence(self) -> str:
        return decode_sequence(self.residues)

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    @property
    def mask(self) -> str:
        if self.labels is None:
            raise ValueError(f"chain {self.id!r} is unlabeled")
        return labels_to_mask(self.labels)

    def with_labels(self, labels) -> "ProteinChain":
        return ProteinChain(self.id, self.residues, labels)

    def __eq__(self, other):
        if not isinstance(other, ProteinChain):
            return NotImplemented
        if self.id != other.id or not np.array_equal(self.residues, other.residues):
            return False
        if self.labels is None or other.labels is None:
            return self.labels is None and other.labels is None
        return bool(np.array_equal(self.labels, other.labels))

    def __repr__(self):
        mask = "" if self.labels is None else f", mask={self.mask!r}"
        return f"ProteinChain({self.id!r}, {self.sequence!r}{mask})"


@dataclass(frozen=True, eq=False)
class Window:
    center_position: int
    symbols: np.ndarray

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return decode_sequence(self.symbols)


@dataclass(frozen=True)
class Dataset:
    chains: tuple
    name: str = "dataset"

    def __post_init__(self):
        chains = tuple(self.chains)
        seen = set()
        for chain in chains:
            if not chain.is_labeled:
                raise ValueError(f"dataset {self.name!r}: chain {chain.id!r} is unlabeled")
            if chain.id in seen:
                raise ValueError(f"dataset {self.name!r}: duplicate chain id {chain.id!r}")
            seen.add(chain.id)
        object.__setattr__(self, "chains", chains)

    def __len__(self):
        return len(self.chains)

    def __iter__(self):
        return iter(self.chains)

    def without(self, index: int) -> "Dataset":
        """All chains except the one at ``index``."""
        rest = self.chains[:index] + self.chains[index + 1:]
        return Dataset(rest, f"{self.name}-minus-{self.chains[index].id}")


def mask_to_labels(mask: str) -> np.ndarray:
    bad = set(mask) - {POSITIVE, NEGATIVE}
    if bad:
        raise ValueError(f"label mask contains characters other than '+'/'-': {sorted(bad)}")
    return np.frombuffer(mask.encode("ascii"), dtype=np.uint8) == ord(POSITIVE)


def labels_to_mask(labels) -> str:
    return "".join(POSITIVE if v else NEGATIVE for v in labels)


# --- FASTA ------------------------------------------------------------------

def parse_fasta(text: Union[str, TextIO]) -> list:
    """Parse FASTA records into unlabeled chains.

    The chain id is the header up to the first whitespace. Whitespace inside
    sequence lines is ignored.
    """
    lines = text.splitlines() if isinstance(text, str) else text.read().splitlines()
    records = []
    header = None
    header_line = 0
    buf: list = []

    def flush():
        seq = "".join(buf)
        if not seq:
            raise SequenceParseError(f"record {header!r} has an empty sequence", header_line)
        records.append(ProteinChain(header, encode_sequence(seq)))

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith(">"):
            if header is not None:
                flush()
            parts = line[1:].split()
            if not parts:
                raise SequenceParseError("record header has no identifier", lineno)
            header, header_line, buf = parts[0], lineno, []
        elif line:
            if header is None:
                raise SequenceParseError("sequence data before the first '>' header", lineno)
            seq = "".join(line.split())
            if not seq.isalpha():
                raise SequenceParseError(f"non-letter characters in sequence line {line!r}", lineno)
            buf.append(seq)
    if header is None:
        raise SequenceParseError("empty FASTA input")
    flush()
    return records


def format_fasta(chains: Iterable[ProteinChain], line_width: int = 60) -> str:
    out = []
    for chain in chains:
        out.append(f">{chain.id}")
        seq = chain.sequence
        out.extend(seq[i:i + line_width] for i in range(0, len(seq), line_width))
    return "\n".join(out) + "\n"


# --- label / mask files -----------------------------------------------------

def parse_label_file(text: Union[str, TextIO]) -> dict:
    """Read ``chain_id<TAB>mask`` lines into an ordered ``{id: mask}`` dict."""
    lines = text.splitlines() if isinstance(text, str) else text.read().splitlines()
    masks = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise SequenceParseError("expected 'chain_id<TAB>mask'", lineno)
        chain_id, mask = parts[0].strip(), parts[1].strip()
        if set(mask) - {POSITIVE, NEGATIVE} or not mask:
            raise SequenceParseError(f"mask for {chain_id!r} must be a non-empty '+'/'-' string", lineno)
        if chain_id in masks:
            raise SequenceParseError(f"duplicate chain id {chain_id!r}", lineno)
        masks[chain_id] = mask
    return masks


def format_label_file(chains: Iterable[ProteinChain]) -> str:
    return "".join(f"{c.id}\t{c.mask}\n" for c in chains)


def attach_labels(chains: Sequence[ProteinChain], masks: dict, name: str = "dataset") -> Dataset:
    labeled = []
    for chain in chains:
        if chain.id not in masks:
            raise ValueError(f"no labels for chain {chain.id!r}")
        mask = masks[chain.id]
        if len(mask) != len(chain):
            raise ValueError(
                f"chain {chain.id!r}: label mask has length {len(mask)}, sequence has {len(chain)}"
            )
        labeled.append(chain.with_labels(mask_to_labels(mask)))
    return Dataset(tuple(labeled), name)


# --- windows ----------------------------------------------------------------

def _check_width(w: int):
    if w < 1 or w % 2 == 0:
        raise ValueError(f"window size must be a positive odd integer, got {w}")


def window_at(chain: ProteinChain, position: int, w: int) -> Window:
    _check_width(w)
    if not 0 <= position < len(chain):
        raise IndexError(f"position {position} outside chain {chain.id!r} of length {len(chain)}")
    n = (w - 1) // 2
    symbols = np.full(w, PAD, dtype=np.int8)
    lo, hi = max(0, position - n), min(len(chain), position + n + 1)
    symbols[lo - (position - n):hi - (position - n)] = chain.residues[lo:hi]
    return Window(position, _frozen(symbols))


def window_matrix(chain: ProteinChain, w: int) -> np.ndarray:
    """Windows for every residue of ``chain`` as an ``(len, w)`` code matrix."""
    _check_width(w)
    n = (w - 1) // 2
    padded = np.concatenate(
        [np.full(n, PAD, np.int8), chain.residues, np.full(n, PAD, np.int8)]
    )
    return np.lib.stride_tricks.sliding_window_view(padded, w).copy()


def dataset_windows(d: Dataset, w: int):
    """Stack windows and labels for every residue of every chain."""
    X = np.concatenate([window_matrix(c, w) for c in d.chains])
    y = np.concatenate([c.labels for c in d.chains])
    return X, y


# --- dataset utilities ------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    chains: int
    residues: int
    positives: int
    positive_fraction: float = field(init=False)

    def __post_init__(self):
        frac = self.positives / self.residues if self.residues else 0.0
        object.__setattr__(self, "positive_fraction", frac)


def dataset_stats(d: Union[Dataset, Sequence[ProteinChain]]) -> DatasetStats:
    chains = d.chains if isinstance(d, Dataset) else d
    residues = positives = 0
    for chain in chains:
        if chain.labels is None:
            raise ValueError(f"chain {chain.id!r} is unlabeled")
        residues += len(chain)
        positives += int(chain.labels.sum())
    return DatasetStats(len(chains), residues, positives)


def filter_short_chains(chains: Sequence[ProteinChain], min_len: int = 10) -> list:
    return [c for c in chains if len(c) >= min_len]
