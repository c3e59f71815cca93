"""Hashed circular fingerprints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import ATOMIC_NUMBER
from .graph import MolecularGraph

_MASK64 = (1 << 64) - 1


def _mix(*values: int) -> int:
    """Deterministic 64-bit hash of a sequence of small integers (splitmix64 chain)."""
    h = 0x9E3779B97F4A7C15
    for v in values:
        h = (h ^ (v & _MASK64)) & _MASK64
        h = (h + 0x9E3779B97F4A7C15) & _MASK64
        z = h
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        h = z ^ (z >> 31)
    return h


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # uint8 0/1 vector
    radius: int

    @property
    def nbits(self) -> int:
        return int(self.bits.shape[0])

    def on_bits(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]


def atom_identifiers(g: MolecularGraph, radius: int) -> list[set[int]]:
    """Environment identifiers per iteration, ``result[r]`` for radius r.

    The radius-0 identifier is coarse (element, charge, aromaticity, ring
    membership); each iteration folds in the sorted (bond order, neighbour
    identifier) multiset.
    """
    current = [
        _mix(ATOMIC_NUMBER.get(a.symbol, 0), a.charge, int(a.aromatic), int(g.atom_in_ring(i)))
        for i, a in enumerate(g.atoms)
    ]
    layers = [set(current)]
    for r in range(1, radius + 1):
        nxt = []
        for i in range(len(g.atoms)):
            env = sorted((g.bonds[k].order, current[j]) for j, k in g.adjacency[i].items())
            flat = [r, current[i]]
            for order, ident in env:
                flat.extend((order, ident))
            nxt.append(_mix(*flat))
        current = nxt
        layers.append(set(current))
    return layers


def circular_fingerprint(g: MolecularGraph, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits < 64:
        raise ValueError("nbits must be >= 64")
    bits = np.zeros(nbits, dtype=np.uint8)
    for layer in atom_identifiers(g, radius):
        for ident in layer:
            bits[ident % nbits] = 1
    return Fingerprint(bits, radius)
