"""One-hot atom and bond feature vectors."""

from __future__ import annotations

import numpy as np

from .elements import SYMBOLS
from .graph import AROMATIC, DOUBLE, HYBRIDIZATIONS, SINGLE, TRIPLE, MolecularGraph

# First 64 elements by atomic number, then a shared "other" slot.
ELEMENT_VOCAB = SYMBOLS[:64]
DEGREE_VOCAB = tuple(range(9))
CHARGE_VOCAB = (-1, 0, 1, 2)
VALENCE_VOCAB = tuple(range(6))
HCOUNT_VOCAB = tuple(range(4))
BOND_VOCAB = (SINGLE, DOUBLE, TRIPLE, AROMATIC)

# (element, degree, charge, valence, H count, aromatic, hybridization)
ATOM_BLOCKS = (65, 10, 5, 7, 5, 1, 5)
BOND_BLOCKS = (4, 1, 1)
ATOM_DIM = sum(ATOM_BLOCKS)
BOND_DIM = sum(BOND_BLOCKS)


def _one_hot(value, vocab, size: int) -> np.ndarray:
    vec = np.zeros(size)
    try:
        vec[vocab.index(value)] = 1.0
    except ValueError:
        vec[size - 1] = 1.0
    return vec


def atom_features(g: MolecularGraph, i: int) -> np.ndarray:
    atom = g.atoms[i]
    sizes = ATOM_BLOCKS
    parts = [
        _one_hot(atom.symbol, ELEMENT_VOCAB, sizes[0]),
        _one_hot(g.degree(i), DEGREE_VOCAB, sizes[1]),
        _one_hot(atom.charge, CHARGE_VOCAB, sizes[2]),
        _one_hot(g.explicit_valence(i), VALENCE_VOCAB, sizes[3]),
        _one_hot(atom.hcount, HCOUNT_VOCAB, sizes[4]),
        np.array([1.0 if atom.aromatic else 0.0]),
        # every hybridization state has its own slot
        _one_hot(g.hybridization(i), HYBRIDIZATIONS, sizes[6]),
    ]
    return np.concatenate(parts)


def bond_features(g: MolecularGraph, k: int) -> np.ndarray:
    bond = g.bonds[k]
    vec = np.zeros(BOND_DIM)
    vec[BOND_VOCAB.index(bond.order)] = 1.0
    vec[4] = 1.0 if g.bond_conjugated(k) else 0.0
    vec[5] = 1.0 if g.bond_in_ring(k) else 0.0
    return vec


def featurize(g: MolecularGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Atom matrix (n, 98), bond matrix (m, 6) and bond endpoint array (m, 2)."""
    atoms = np.array([atom_features(g, i) for i in range(len(g.atoms))]).reshape(-1, ATOM_DIM)
    bonds = np.array([bond_features(g, k) for k in range(len(g.bonds))]).reshape(-1, BOND_DIM)
    ends = np.array([(b.a, b.b) for b in g.bonds], dtype=np.int64).reshape(-1, 2)
    return atoms, bonds, ends
