"""Synthetic labeled corpora with known generative structure, for benchmarking."""

from __future__ import annotations

import numpy as np

from .sequence import CANONICAL, Dataset, ProteinChain

_BACKGROUND = np.full(20, 1 / 20)


def _enriched(letters: str, boost: float) -> np.ndarray:
    p = np.ones(20)
    for ch in letters:
        p[CANONICAL.index(ch)] *= boost
    return p / p.sum()


def clustered_corpus(rng: np.random.Generator, n_chains: int = 30, length: int = 100,
                     run_lengths=(5, 12), runs_per_chain=(1, 3), enriched: str = "RKHYWN",
                     boost: float = 2.5, name: str = "clustered") -> Dataset:
    """Chains whose interface residues come in contiguous runs.

    Residues inside a run are drawn from a composition enriched in
    ``enriched``; all others from the uniform background.
    """
    p_in = _enriched(enriched, boost)
    chains = []
    for c in range(n_chains):
        labels = np.zeros(length, dtype=bool)
        for _ in range(rng.integers(runs_per_chain[0], runs_per_chain[1] + 1)):
            size = rng.integers(run_lengths[0], run_lengths[1] + 1)
            start = rng.integers(0, length - size + 1)
            labels[start:start + size] = True
        residues = np.where(labels, rng.choice(20, length, p=p_in), rng.choice(20, length, p=_BACKGROUND))
        chains.append(ProteinChain(f"{name}{c:03d}", residues, labels))
    return Dataset(tuple(chains), name)


MOTIF_LETTERS = "RK"


def motif_rule(residues: np.ndarray, half_width: int = 3, min_count: int = 3) -> np.ndarray:
    """Interface iff the (2*half_width+1)-window holds >= ``min_count`` of R/K."""
    hits = np.isin(residues, [CANONICAL.index(ch) for ch in MOTIF_LETTERS]).astype(int)
    padded = np.concatenate([np.zeros(half_width, int), hits, np.zeros(half_width, int)])
    counts = np.convolve(padded, np.ones(2 * half_width + 1, int), mode="valid")
    return counts >= min_count


def motif_corpus(rng: np.random.Generator, n_chains: int = 40, length: int = 120,
                 motif_fraction: float = 0.2, half_width: int = 3, min_count: int = 3,
                 name: str = "motif") -> Dataset:
    """Chains whose labels are a deterministic function of local R/K density.

    Sequences are background residues with R/K inflated to ``motif_fraction``
    so that both classes are well populated.
    """
    p = np.ones(20)
    rk = [CANONICAL.index(ch) for ch in MOTIF_LETTERS]
    other = [i for i in range(20) if i not in rk]
    p[rk] = motif_fraction / len(rk)
    p[other] = (1 - motif_fraction) / len(other)
    chains = []
    for c in range(n_chains):
        residues = rng.choice(20, length, p=p)
        chains.append(ProteinChain(f"{name}{c:03d}", residues, motif_rule(residues, half_width, min_count)))
    return Dataset(tuple(chains), name)
