"""Molecular graph data model.

Hydrogens are never graph nodes: every atom carries its total attached
hydrogen count in ``hcount``. Bond orders are small integers, with
``AROMATIC`` standing in for the delocalised 1.5 order.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .elements import allowed_valences

SINGLE, DOUBLE, TRIPLE, AROMATIC = 1, 2, 3, 4
BOND_NAMES = {SINGLE: "single", DOUBLE: "double", TRIPLE: "triple", AROMATIC: "aromatic"}

HYBRIDIZATIONS = ("sp", "sp2", "sp3", "other", "unspecified")


class ValenceError(ValueError):
    """An atom's bonds plus hydrogens exceed what its element allows."""


@dataclass(slots=True)
class Atom:
    symbol: str
    charge: int = 0
    hcount: int = 0
    aromatic: bool = False
    atom_map: int = 0
    isotope: int = 0
    chirality: str | None = None
    # Neighbour order the chirality tag refers to; -1 marks the implicit H.
    stereo_nbrs: tuple[int, ...] = ()
    # Template-only: required heavy-atom degree of the matched atom.
    degree_constraint: int | None = None


@dataclass(slots=True)
class Bond:
    a: int
    b: int
    order: int = SINGLE
    # '/' or '\\' as written when traversing from ``stereo_from``.
    stereo: str | None = None
    stereo_from: int = -1

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


def bond_valence(order: int) -> float:
    return 1.5 if order == AROMATIC else float(order)


@dataclass(eq=False)
class MolecularGraph:
    """Atoms and bonds of one or more molecules (dot-separated fragments)."""

    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        n = len(self.atoms)
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n) or bond.a == bond.b:
                raise ValueError(f"invalid bond endpoints ({bond.a}, {bond.b})")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {key}")
            seen.add(key)
        maps = [a.atom_map for a in self.atoms if a.atom_map]
        if len(maps) != len(set(maps)):
            raise ValueError("atom map numbers must be unique within a molecule")

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        from .canon import to_smiles

        return f"MolecularGraph({to_smiles(self)!r})"

    # -- adjacency --------------------------------------------------------
    @cached_property
    def adjacency(self) -> list[dict[int, int]]:
        """``adjacency[i][j]`` is the index of the bond between atoms i and j."""
        adj: list[dict[int, int]] = [{} for _ in self.atoms]
        for k, bond in enumerate(self.bonds):
            adj[bond.a][bond.b] = k
            adj[bond.b][bond.a] = k
        return adj

    def neighbors(self, i: int) -> list[int]:
        return list(self.adjacency[i])

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self.adjacency[i].get(j)
        return None if k is None else self.bonds[k]

    def bond_order_sum(self, i: int) -> float:
        return sum(bond_valence(self.bonds[k].order) for k in self.adjacency[i].values())

    def map_index(self) -> dict[int, int]:
        """Atom map number -> atom index, for mapped atoms only."""
        return {a.atom_map: i for i, a in enumerate(self.atoms) if a.atom_map}

    # -- validity ---------------------------------------------------------
    def atom_valence_ok(self, i: int) -> bool:
        atom = self.atoms[i]
        allowed = allowed_valences(atom.symbol, atom.charge)
        if allowed is None:
            return True
        low = atom.hcount
        flexible = 0
        for k in self.adjacency[i].values():
            order = self.bonds[k].order
            if order == AROMATIC:
                low += 1
                flexible = 1
            else:
                low += order
        return any(low <= v <= low + flexible for v in allowed)

    def check_valence(self) -> None:
        for i, atom in enumerate(self.atoms):
            if not self.atom_valence_ok(i):
                raise ValenceError(
                    f"atom {i} ({atom.symbol}, charge {atom.charge}, H{atom.hcount}) "
                    f"has bond order sum {self.bond_order_sum(i):g}"
                )

    def is_valid(self) -> bool:
        return all(self.atom_valence_ok(i) for i in range(len(self.atoms)))

    # -- rings ------------------------------------------------------------
    @cached_property
    def ring_bonds(self) -> frozenset[int]:
        """Indices of bonds that lie on at least one cycle (non-bridges)."""
        n = len(self.atoms)
        disc = [-1] * n
        low = [0] * n
        bridges = set()
        timer = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self.adjacency[root].items()))]
            while stack:
                u, parent_bond, it = stack[-1]
                advanced = False
                for v, k in it:
                    if k == parent_bond:
                        continue
                    if disc[v] == -1:
                        disc[v] = low[v] = timer
                        timer += 1
                        stack.append((v, k, iter(self.adjacency[v].items())))
                        advanced = True
                        break
                    low[u] = min(low[u], disc[v])
                if not advanced:
                    stack.pop()
                    if stack:
                        p = stack[-1][0]
                        low[p] = min(low[p], low[u])
                        if low[u] > disc[p]:
                            bridges.add(parent_bond)
        return frozenset(k for k in range(len(self.bonds)) if k not in bridges)

    def bond_in_ring(self, k: int) -> bool:
        return k in self.ring_bonds

    def atom_in_ring(self, i: int) -> bool:
        return any(k in self.ring_bonds for k in self.adjacency[i].values())

    def num_components(self) -> int:
        return len(self.components())

    def cyclomatic_number(self) -> int:
        return len(self.bonds) - len(self.atoms) + self.num_components()

    @cached_property
    def smallest_rings(self) -> tuple[tuple[int, ...], ...]:
        """A smallest set of smallest rings, each as an atom-index cycle."""
        need = self.cyclomatic_number()
        if need == 0:
            return ()
        ring_adj: dict[int, list[tuple[int, int]]] = {}
        for k in sorted(self.ring_bonds):
            bond = self.bonds[k]
            ring_adj.setdefault(bond.a, []).append((bond.b, k))
            ring_adj.setdefault(bond.b, []).append((bond.a, k))
        candidates = {}
        for k in sorted(self.ring_bonds):
            bond = self.bonds[k]
            path = _shortest_path(ring_adj, bond.a, bond.b, banned=k)
            if path is None:
                continue
            atoms, bond_ids = path
            mask = 1 << k
            for b in bond_ids:
                mask |= 1 << b
            candidates.setdefault(mask, tuple(atoms))
        basis: list[int] = []
        rings = []
        for mask, atoms in sorted(candidates.items(), key=lambda kv: (bin(kv[0]).count("1"), kv[1])):
            reduced = mask
            for vec in basis:
                reduced = min(reduced, reduced ^ vec)
            if reduced:
                basis.append(reduced)
                basis.sort(reverse=True)
                rings.append(atoms)
                if len(rings) == need:
                    break
        return tuple(rings)

    # -- derived chemistry ------------------------------------------------
    def bond_conjugated(self, k: int) -> bool:
        bond = self.bonds[k]
        if bond.order == AROMATIC:
            return True

        def unsaturated_elsewhere(i: int) -> bool:
            return any(
                j != k and self.bonds[j].order in (DOUBLE, TRIPLE, AROMATIC)
                for j in self.adjacency[i].values()
            )

        if bond.order in (DOUBLE, TRIPLE):
            return unsaturated_elsewhere(bond.a) or unsaturated_elsewhere(bond.b)
        return unsaturated_elsewhere(bond.a) and unsaturated_elsewhere(bond.b)

    def hybridization(self, i: int) -> str:
        atom = self.atoms[i]
        orders = [self.bonds[k].order for k in self.adjacency[i].values()]
        if not orders and atom.hcount == 0:
            return "unspecified"
        if atom.symbol in ("P", "S") and sum(min(o, 3) for o in orders) + atom.hcount > 4:
            return "other"
        if atom.aromatic or AROMATIC in orders:
            return "sp2"
        doubles = orders.count(DOUBLE)
        if TRIPLE in orders or doubles >= 2:
            return "sp"
        if doubles == 1:
            return "sp2"
        if atom.symbol == "H":
            return "other"
        return "sp3"

    def explicit_valence(self, i: int) -> int:
        return int(self.bond_order_sum(i)) + self.atoms[i].hcount

    # -- structural operations -------------------------------------------
    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            queue = deque([start])
            comp = []
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in self.adjacency[u]:
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            comps.append(sorted(comp))
        return comps

    def subgraph(self, indices: Iterable[int]) -> MolecularGraph:
        """Induced subgraph on ``indices`` (kept in ascending order).

        Hydrogen counts are copied unchanged; stereo annotations referring to
        dropped neighbours are discarded.
        """
        keep = sorted(set(indices))
        remap = {old: new for new, old in enumerate(keep)}
        atoms = [_remap_atom(self.atoms[i], remap) for i in keep]
        bonds = []
        for bond in self.bonds:
            if bond.a in remap and bond.b in remap:
                bonds.append(_remap_bond(bond, remap))
        return MolecularGraph(atoms, bonds)

    def fragments(self) -> list[MolecularGraph]:
        return [self.subgraph(c) for c in self.components()]

    def copy(self) -> MolecularGraph:
        return MolecularGraph(
            [dataclasses.replace(a) for a in self.atoms],
            [dataclasses.replace(b) for b in self.bonds],
        )

    def without_maps(self) -> MolecularGraph:
        g = self.copy()
        for atom in g.atoms:
            atom.atom_map = 0
        return g

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.symbol != "H")


def merge(graphs: Sequence[MolecularGraph]) -> MolecularGraph:
    """Disjoint union; atom indices are offset in sequence order."""
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    for g in graphs:
        offset = len(atoms)
        remap = {i: i + offset for i in range(len(g.atoms))}
        atoms.extend(_remap_atom(a, remap) for a in g.atoms)
        bonds.extend(_remap_bond(b, remap) for b in g.bonds)
    return MolecularGraph(atoms, bonds)


def _remap_atom(atom: Atom, remap: dict[int, int]) -> Atom:
    new = dataclasses.replace(atom)
    if atom.chirality:
        if all(n == -1 or n in remap for n in atom.stereo_nbrs):
            new.stereo_nbrs = tuple(-1 if n == -1 else remap[n] for n in atom.stereo_nbrs)
        else:
            new.chirality = None
            new.stereo_nbrs = ()
    return new


def _remap_bond(bond: Bond, remap: dict[int, int]) -> Bond:
    new = dataclasses.replace(bond, a=remap[bond.a], b=remap[bond.b])
    if bond.stereo:
        new.stereo_from = remap[bond.stereo_from]
    return new


def _shortest_path(adj, src, dst, banned):
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v, k in adj.get(u, ()):
            if k == banned or v in prev:
                continue
            prev[v] = (u, k)
            queue.append(v)
    if dst not in prev:
        return None
    atoms, bond_ids = [dst], []
    node = dst
    while prev[node] is not None:
        u, k = prev[node]
        bond_ids.append(k)
        atoms.append(u)
        node = u
    return atoms[::-1], bond_ids
