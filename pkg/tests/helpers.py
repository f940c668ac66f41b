"""Builders for fixed-column coordinate records used across tests."""

import numpy as np


def atom_line(serial, name, resname, chain, resseq, x, y, z, element=None, record="ATOM"):
    element = element if element is not None else name.strip()[0]
    padded = f" {name:<3}" if len(name) < 4 else name
    return (f"{record:<6}{serial:>5} {padded:<4} {resname:>3} {chain}{resseq:>4}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}          {element:>2}")


def random_model_text(rng, n_atoms=500, n_protein_res=40, box=20.0, rna_fraction=0.3, hydrogen_fraction=0.1):
    """Random protein chain A plus RNA chain R, as coordinate-file text."""
    lines = []
    n_rna = int(n_atoms * rna_fraction)
    n_pro = n_atoms - n_rna
    res_of = np.sort(rng.integers(1, n_protein_res + 1, n_pro))
    res_of[:n_protein_res] = np.arange(1, n_protein_res + 1)  # every residue gets an atom
    res_of = np.sort(res_of)
    xyz = rng.uniform(0, box, (n_atoms, 3))
    names3 = ["ALA", "GLY", "LYS", "ARG", "SER"]
    for k in range(n_pro):
        is_h = rng.random() < hydrogen_fraction
        lines.append(atom_line(k + 1, "H" if is_h else "CA", names3[res_of[k] % 5], "A", int(res_of[k]),
                               *xyz[k], element="H" if is_h else "C"))
    for k in range(n_rna):
        is_h = rng.random() < hydrogen_fraction
        lines.append(atom_line(n_pro + k + 1, "H5'" if is_h else "P", "A", "R", 1 + k // 10,
                               *xyz[n_pro + k], element="H" if is_h else "P"))
    return "\n".join(lines) + "\nEND\n"
