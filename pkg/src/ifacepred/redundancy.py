"""Sequence identity and the dataset redundancy / resolution filters."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sequence import Dataset, ProteinChain, filter_short_chains
from .structure import ContactParams, label_interface, parse_structure, partner_atoms

log = logging.getLogger(__name__)

MATCH = 1.0
MISMATCH = 0.0
GAP = -0.5


@dataclass(frozen=True)
class FilterParams:
    max_identity: float = 0.30
    max_resolution: float = 3.5
    min_chain_len: int = 10

    def __post_init__(self):
        if not 0 < self.max_identity <= 1:
            raise ValueError(f"max_identity must lie in (0, 1], got {self.max_identity}")


def _score_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = len(a), len(b)
    H = np.empty((n + 1, m + 1))
    H[0] = GAP * np.arange(m + 1)
    H[:, 0] = GAP * np.arange(n + 1)
    cols = np.arange(1, m + 1)
    for i in range(1, n + 1):
        sub = np.where(b == a[i - 1], MATCH, MISMATCH)
        best = np.maximum(H[i - 1, :-1] + sub, H[i - 1, 1:] + GAP)
        # horizontal gaps: H[i, j] = max_k (best[k] + GAP * (j - k)); running max in shifted frame
        shifted = np.concatenate(([H[i, 0]], best)) - GAP * np.arange(m + 1)
        H[i, 1:] = np.maximum.accumulate(shifted)[1:] + GAP * cols
    return H


def global_alignment(a: np.ndarray, b: np.ndarray):
    """Needleman-Wunsch alignment; returns (score, matches, alignment_length).

    Traceback prefers diagonal, then up (gap in ``b``), then left. Scores are
    multiples of 0.5 so the equality tests below are exact.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    H = _score_matrix(a, b)
    i, j = len(a), len(b)
    matches = length = 0
    while i > 0 or j > 0:
        length += 1
        if i > 0 and j > 0:
            same = a[i - 1] == b[j - 1]
            if H[i, j] == H[i - 1, j - 1] + (MATCH if same else MISMATCH):
                matches += int(same)
                i -= 1
                j -= 1
                continue
        if i > 0 and H[i, j] == H[i - 1, j] + GAP:
            i -= 1
        else:
            j -= 1
    return float(H[-1, -1]), matches, length


def sequence_identity(a, b) -> float:
    """Identical positions over aligned length for the optimal global alignment.

    The pair is put in a canonical order first so that identity is symmetric
    even when several optimal alignments exist.
    """
    ra = a.residues if isinstance(a, ProteinChain) else np.asarray(a)
    rb = b.residues if isinstance(b, ProteinChain) else np.asarray(b)
    if len(ra) == 0 or len(rb) == 0:
        raise ValueError("sequence_identity needs two non-empty sequences")
    if (len(ra), tuple(ra.tolist())) > (len(rb), tuple(rb.tolist())):
        ra, rb = rb, ra
    _, matches, length = global_alignment(ra, rb)
    return matches / length


def filter_redundancy(chains, params: FilterParams = FilterParams()) -> list:
    """Greedy culling in input order: keep a chain iff it is below
    ``max_identity`` against every chain kept so far."""
    kept = []
    for chain in chains:
        if all(sequence_identity(chain, k) < params.max_identity for k in kept):
            kept.append(chain)
        else:
            log.info("dropping redundant chain %s", chain.id)
    return kept


def filter_resolution(models, max_resolution: float = 3.5) -> list:
    """Keep ``(model, resolution)`` entries with resolution <= ``max_resolution``.

    Entries without a resolution are dropped with a logged warning.
    """
    kept = []
    for model, resolution in models:
        if resolution is None:
            log.warning("no resolution recorded for %s; dropped",
                        getattr(model, "source", "") or "<unnamed model>")
            continue
        if resolution <= max_resolution:
            kept.append(model)
    return kept


def build_dataset(entries, partner_kind: str, contact=None, params: FilterParams = FilterParams(),
                  base_dir=".", name: str = "dataset"):
    """Labeled dataset from ``(structure_path, resolution)`` manifest entries.

    Structures failing the resolution filter are skipped; every protein chain
    with a partner of ``partner_kind`` is labeled by contact, then short and
    redundant chains are removed.
    """
    contact = contact or ContactParams()
    loaded = []
    for path, resolution in entries:
        full = Path(base_dir) / path
        model = parse_structure(full.read_text(), source=str(path))
        model.resolution = resolution
        loaded.append((model, resolution))
    chains = []
    for model in filter_resolution(loaded, params.max_resolution):
        stem = Path(model.source).stem
        for chain_id, chain in model.protein_chains.items():
            if not partner_atoms(model, chain_id, partner_kind) or not chain.atoms:
                continue
            labels = label_interface(model, chain_id, partner_kind, contact)
            chains.append(ProteinChain(f"{stem}_{chain_id}", chain.sequence.residues, labels))
    chains = filter_short_chains(chains, params.min_chain_len)
    return Dataset(tuple(filter_redundancy(chains, params)), name)
