"""Shared test utilities."""

from __future__ import annotations

import dataclasses
import random

import numpy as np

from retro_ood.molgraph import MolecularGraph
from retro_ood.templates import Reaction


def permute(g: MolecularGraph, rng: np.random.Generator) -> MolecularGraph:
    """Copy of ``g`` with atoms and bonds listed in a random order."""
    n = len(g.atoms)
    order = rng.permutation(n)  # new position i holds old atom order[i]
    new_of = np.empty(n, dtype=np.int64)
    new_of[order] = np.arange(n)
    atoms = []
    for old in order:
        a = dataclasses.replace(g.atoms[old])
        a.stereo_nbrs = tuple(int(new_of[j]) if j >= 0 else j for j in a.stereo_nbrs)
        atoms.append(a)
    bonds = []
    for k in rng.permutation(len(g.bonds)):
        b = dataclasses.replace(g.bonds[k])
        b.a, b.b = int(new_of[b.a]), int(new_of[b.b])
        if b.stereo_from >= 0:
            b.stereo_from = int(new_of[b.stereo_from])
        if rng.random() < 0.5:
            b.a, b.b = b.b, b.a
        bonds.append(b)
    return MolecularGraph(atoms, bonds)


def shuffled(r: Reaction, seed: int) -> Reaction:
    """Same reaction with precursors and atoms listed in another order."""
    rng = np.random.default_rng(seed)
    precs = [permute(p, rng) for p in r.precursors]
    random.Random(seed).shuffle(precs)
    return Reaction(r.id, precs, permute(r.product, rng), r.reaction_class)


def brute_force_khop(mols, tmpls, adj, seed, k):
    """Set-replacement trace on a dense adjacency matrix."""
    m_rim = np.zeros(len(mols), dtype=bool)
    t_rim = np.zeros(len(tmpls), dtype=bool)
    m_rim[mols.index(seed[0])] = True
    t_rim[tmpls.index(seed[1])] = True
    for _ in range(k):
        m_rim, t_rim = adj[:, t_rim].any(axis=1), adj[m_rim, :].any(axis=0)
    induced = adj & np.outer(m_rim, t_rim)
    return ({mols[i] for i in np.flatnonzero(m_rim)}, {tmpls[j] for j in np.flatnonzero(t_rim)},
            {(mols[i], tmpls[j]) for i, j in zip(*np.nonzero(induced))})
