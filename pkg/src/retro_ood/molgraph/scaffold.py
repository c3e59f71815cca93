"""Murcko scaffolds and molecule size."""

from __future__ import annotations

from .canon import to_smiles
from .graph import AROMATIC, MolecularGraph


def heavy_atom_count(g: MolecularGraph) -> int:
    return g.heavy_atom_count()


def murcko_scaffold(g: MolecularGraph) -> MolecularGraph:
    """Ring systems plus linkers, with terminal side chains stripped.

    Atoms are peeled off while they have at most one neighbour and are not in
    a ring; each removed bond is compensated by hydrogens on the surviving
    atom. An acyclic input therefore reduces to the empty graph.
    """
    if not g.ring_bonds:
        return MolecularGraph()
    alive = set(range(len(g.atoms)))
    hydrogens = [a.hcount for a in g.atoms]
    ring_atoms = {i for i in alive if g.atom_in_ring(i)}
    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            if i in ring_atoms:
                continue
            live_nbrs = [j for j in g.adjacency[i] if j in alive]
            if len(live_nbrs) <= 1:
                alive.discard(i)
                for j in live_nbrs:
                    order = g.bonds[g.adjacency[i][j]].order
                    hydrogens[j] += 1 if order == AROMATIC else order
                changed = True
    keep = sorted(alive)
    sub = g.subgraph(keep).without_maps()
    for new, old in enumerate(keep):
        atom = sub.atoms[new]
        atom.hcount = hydrogens[old]
        atom.isotope = 0
        atom.chirality = None
        atom.stereo_nbrs = ()
    for bond in sub.bonds:
        bond.stereo = None
    return sub


def scaffold_smiles(g: MolecularGraph) -> str:
    """Canonical scaffold string; the empty string for acyclic molecules."""
    return to_smiles(murcko_scaffold(g), keep_maps=False)


def scaffold_key(g: MolecularGraph) -> tuple[int, int, str]:
    """Complexity key: (ring count, heavy atoms, canonical string) of the scaffold."""
    scaf = murcko_scaffold(g)
    return (scaf.cyclomatic_number(), scaf.heavy_atom_count(), to_smiles(scaf, keep_maps=False))
