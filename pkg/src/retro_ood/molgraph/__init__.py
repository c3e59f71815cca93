"""Molecule parsing, canonical SMILES, scaffolds, fingerprints and features."""

from .canon import canonical_ranks, canonicalize, to_canonical_smiles, to_smiles
from .elements import ATOMIC_NUMBER
from .features import ATOM_DIM, BOND_DIM, featurize
from .fingerprint import Fingerprint, circular_fingerprint
from .graph import (
    AROMATIC,
    DOUBLE,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    MolecularGraph,
    ValenceError,
    merge,
)
from .scaffold import heavy_atom_count, murcko_scaffold, scaffold_key, scaffold_smiles
from .smiles import SmilesSyntaxError, parse_smiles

__all__ = [
    "AROMATIC",
    "ATOMIC_NUMBER",
    "ATOM_DIM",
    "Atom",
    "BOND_DIM",
    "Bond",
    "DOUBLE",
    "Fingerprint",
    "MolecularGraph",
    "SINGLE",
    "SmilesSyntaxError",
    "TRIPLE",
    "ValenceError",
    "canonical_ranks",
    "canonicalize",
    "circular_fingerprint",
    "featurize",
    "heavy_atom_count",
    "merge",
    "murcko_scaffold",
    "parse_smiles",
    "scaffold_key",
    "scaffold_smiles",
    "to_canonical_smiles",
    "to_smiles",
]
