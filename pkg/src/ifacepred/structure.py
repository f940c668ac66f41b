"""Fixed-column coordinate files and contact-based interface labeling."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .sequence import CANONICAL, ProteinChain

log = logging.getLogger(__name__)

THREE_TO_ONE = {
    "ALA": "A", "CYS": "C", "ASP": "D", "GLU": "E", "PHE": "F",
    "GLY": "G", "HIS": "H", "ILE": "I", "LYS": "K", "LEU": "L",
    "MET": "M", "ASN": "N", "PRO": "P", "GLN": "Q", "ARG": "R",
    "SER": "S", "THR": "T", "VAL": "V", "TRP": "W", "TYR": "Y",
}
assert sorted(THREE_TO_ONE.values()) == sorted(CANONICAL)
RNA_RESIDUES = {"A", "C", "G", "U"}

PROTEIN = "protein"
RNA = "RNA"


class StructureParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Atom:
    name: str
    residue_index: int  # 1-based within its chain/molecule
    chain_id: str
    position: tuple
    is_hydrogen: bool = False


@dataclass
class ChainStructure:
    sequence: ProteinChain
    atoms: list


@dataclass
class PartnerMolecule:
    kind: str
    chain_id: str
    atoms: list


@dataclass
class StructureModel:
    protein_chains: dict
    partner_molecules: list = field(default_factory=list)
    resolution: Optional[float] = None
    source: str = ""


@dataclass(frozen=True)
class ContactParams:
    cutoff: float = 5.0
    include_hydrogens: bool = False

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"contact cutoff must be positive, got {self.cutoff}")


def _field_float(line, start, end, lineno, what):
    text = line[start:end]
    try:
        value = float(text)
    except ValueError:
        raise StructureParseError(f"malformed {what} field {text!r} (columns {start + 1}-{end})", lineno)
    if not np.isfinite(value):
        raise StructureParseError(f"non-finite {what} coordinate", lineno)
    return value


def _is_hydrogen(line, atom_name):
    element = line[76:78].strip() if len(line) >= 78 else ""
    if element:
        return element.upper() in ("H", "D")
    stripped = atom_name.strip().lstrip("0123456789")
    return stripped[:1] in ("H", "D")


def parse_structure(text, source: str = "") -> StructureModel:
    """Read protein chains and RNA partners from legacy fixed-column records.

    Only ``ATOM``/``HETATM`` records of the first model are used. Residues whose
    names are neither standard amino acids nor A/C/G/U (waters, ligands, DNA)
    are skipped.
    """
    if not isinstance(text, str):
        text = text.read()
    # chain_id -> list of (residue key, residue name, [atoms as tuples])
    protein = defaultdict(list)
    rna = defaultdict(list)
    seen_model = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6]
        if record.startswith("MODEL"):
            if seen_model:
                break
            seen_model = True
            continue
        if record.startswith("ENDMDL") or record.rstrip() == "END":
            break
        if record not in ("ATOM  ", "HETATM"):
            continue
        if len(line) < 54:
            raise StructureParseError("coordinate record shorter than 54 columns", lineno)
        resname = line[17:20].strip()
        if resname in THREE_TO_ONE:
            target = protein
        elif resname in RNA_RESIDUES:
            target = rna
        else:
            continue
        atom_name = line[12:16]
        chain_id = line[21]
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise StructureParseError(f"malformed residue number {line[22:26]!r}", lineno)
        key = (resseq, line[26])
        xyz = tuple(
            _field_float(line, s, e, lineno, axis)
            for (s, e), axis in zip(((30, 38), (38, 46), (46, 54)), "xyz")
        )
        residues = target[chain_id]
        if not residues or residues[-1][0] != key:
            residues.append((key, resname, []))
        residues[-1][2].append((atom_name.strip(), xyz, _is_hydrogen(line, atom_name)))

    if not protein:
        raise StructureParseError("no protein chain found")

    chains = {}
    for chain_id, residues in protein.items():
        seq = "".join(THREE_TO_ONE[name] for _, name, _ in residues)
        atoms = [
            Atom(name, index, chain_id, xyz, is_h)
            for index, (_, _, rows) in enumerate(residues, start=1)
            for name, xyz, is_h in rows
        ]
        chains[chain_id] = ChainStructure(ProteinChain.from_string(chain_id, seq), atoms)
    partners = [
        PartnerMolecule(
            RNA,
            chain_id,
            [
                Atom(name, index, chain_id, xyz, is_h)
                for index, (_, _, rows) in enumerate(residues, start=1)
                for name, xyz, is_h in rows
            ],
        )
        for chain_id, residues in rna.items()
    ]
    return StructureModel(chains, partners, source=source)


def _coords(atoms, include_hydrogens):
    kept = [a for a in atoms if include_hydrogens or not a.is_hydrogen]
    if not kept:
        return np.zeros((0, 3)), np.zeros(0, dtype=int)
    xyz = np.array([a.position for a in kept], dtype=float)
    idx = np.array([a.residue_index for a in kept], dtype=int)
    return xyz, idx


def partner_atoms(model: StructureModel, chain_id: str, partner_kind: str) -> list:
    if partner_kind == PROTEIN:
        return [a for cid, ch in model.protein_chains.items() if cid != chain_id for a in ch.atoms]
    if partner_kind == RNA:
        return [a for p in model.partner_molecules if p.kind == RNA for a in p.atoms]
    raise ValueError(f"unknown partner kind {partner_kind!r}")


def contact_mask(query: np.ndarray, targets: np.ndarray, cutoff: float) -> np.ndarray:
    """For each query point, whether any target lies within ``cutoff``.

    Targets are hashed into cubic cells of edge ``cutoff``; each query cell
    only examines its 27 surrounding cells.
    """
    hit = np.zeros(len(query), dtype=bool)
    if len(query) == 0 or len(targets) == 0:
        return hit
    cut2 = cutoff * cutoff
    tcell = np.floor(targets / cutoff).astype(np.int64)
    grid = defaultdict(list)
    for i, key in enumerate(map(tuple, tcell)):
        grid[key].append(i)
    grid = {k: np.array(v) for k, v in grid.items()}

    qcell = np.floor(query / cutoff).astype(np.int64)
    by_cell = defaultdict(list)
    for i, key in enumerate(map(tuple, qcell)):
        by_cell[key].append(i)
    offsets = list(product((-1, 0, 1), repeat=3))
    for (cx, cy, cz), members in by_cell.items():
        near = [grid[k] for k in ((cx + dx, cy + dy, cz + dz) for dx, dy, dz in offsets) if k in grid]
        if not near:
            continue
        cand = targets[np.concatenate(near)]
        members = np.array(members)
        diff = query[members, None, :] - cand[None, :, :]
        d2 = (diff * diff).sum(axis=-1)
        hit[members] = (d2 <= cut2).any(axis=1)
    return hit


def label_interface(model: StructureModel, chain_id: str, partner_kind: str,
                    params: ContactParams = ContactParams()) -> np.ndarray:
    """Boolean interface labels for ``chain_id``, aligned with its sequence.

    A residue is interface iff any of its atoms lies within ``params.cutoff``
    of any partner atom (hydrogens excluded unless requested).
    """
    if chain_id not in model.protein_chains:
        raise KeyError(f"chain {chain_id!r} not present in structure")
    chain = model.protein_chains[chain_id]
    if not chain.atoms:
        raise ValueError(f"chain {chain_id!r} has no atoms")
    partners = partner_atoms(model, chain_id, partner_kind)
    if not partners:
        raise ValueError(f"no {partner_kind} partner molecule for chain {chain_id!r}")
    qxyz, qres = _coords(chain.atoms, params.include_hydrogens)
    txyz, _ = _coords(partners, params.include_hydrogens)
    labels = np.zeros(len(chain.sequence), dtype=bool)
    hits = contact_mask(qxyz, txyz, params.cutoff)
    labels[qres[hits] - 1] = True
    return labels


def parse_manifest(text) -> list:
    """``file_path<TAB>resolution`` lines; a blank/'NA' resolution means unknown."""
    if not isinstance(text, str):
        text = text.read()
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.rstrip("\n").split("\t")
        path = parts[0].strip()
        res = parts[1].strip() if len(parts) > 1 else ""
        if res in ("", "NA", "-"):
            entries.append((path, None))
            continue
        try:
            entries.append((path, float(res)))
        except ValueError:
            raise StructureParseError(f"malformed resolution {res!r}", lineno)
    return entries
