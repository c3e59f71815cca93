"""Array encoding of patterns and targets for the embedding kernel."""

from __future__ import annotations

import weakref
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from ..kernels import find_embeddings
from ..molgraph import ATOMIC_NUMBER, MolecularGraph


def atom_label(atom) -> int:
    z = ATOMIC_NUMBER.get(atom.symbol, 0)
    return (z << 8) | (int(atom.aromatic) << 7) | (atom.charge + 64)


@dataclass(frozen=True)
class PatternArrays:
    order: np.ndarray  # search position -> pattern atom index
    labels: np.ndarray
    parent: np.ndarray
    parent_bond: np.ndarray
    check_ptr: np.ndarray
    check_pos: np.ndarray
    check_bond: np.ndarray
    degree: np.ndarray
    label_counts: Counter


@dataclass(frozen=True)
class TargetArrays:
    labels: np.ndarray
    degree: np.ndarray
    nbr_ptr: np.ndarray
    nbr_idx: np.ndarray
    bondmat: np.ndarray
    label_counts: Counter


def compile_pattern(p: MolecularGraph) -> PatternArrays:
    """Search order: components largest first, each a BFS from its highest-degree atom."""
    comps = sorted(p.components(), key=lambda c: (-len(c), c[0]))
    order: list[int] = []
    parent_atom: dict[int, int] = {}
    for comp in comps:
        root = min(comp, key=lambda i: (-p.degree(i), i))
        seen = {root}
        queue = deque([root])
        parent_atom[root] = -1
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in sorted(p.adjacency[u]):
                if v not in seen:
                    seen.add(v)
                    parent_atom[v] = u
                    queue.append(v)
    pos = {a: i for i, a in enumerate(order)}
    n = len(order)
    labels = np.empty(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    parent_bond = np.zeros(n, dtype=np.int64)
    degree = np.full(n, -1, dtype=np.int64)
    check_ptr = [0]
    check_pos: list[int] = []
    check_bond: list[int] = []
    for i, a in enumerate(order):
        atom = p.atoms[a]
        labels[i] = atom_label(atom)
        if atom.degree_constraint is not None:
            degree[i] = atom.degree_constraint
        par = parent_atom[a]
        if par >= 0:
            parent[i] = pos[par]
            parent_bond[i] = p.bonds[p.adjacency[a][par]].order
        for v, k in sorted(p.adjacency[a].items()):
            if v != par and pos[v] < i:
                check_pos.append(pos[v])
                check_bond.append(p.bonds[k].order)
        check_ptr.append(len(check_pos))
    as_arr = lambda xs: np.asarray(xs, dtype=np.int64)  # noqa: E731
    return PatternArrays(
        np.asarray(order, dtype=np.int64), labels, parent, parent_bond,
        as_arr(check_ptr), as_arr(check_pos), as_arr(check_bond), degree,
        Counter(labels.tolist()),
    )


_TARGET_CACHE: "weakref.WeakKeyDictionary[MolecularGraph, TargetArrays]" = weakref.WeakKeyDictionary()


def target_arrays(g: MolecularGraph) -> TargetArrays:
    cached = _TARGET_CACHE.get(g)
    if cached is not None:
        return cached
    n = len(g.atoms)
    labels = np.array([atom_label(a) for a in g.atoms], dtype=np.int64)
    degree = np.array([g.degree(i) for i in range(n)], dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    idx: list[int] = []
    for i in range(n):
        idx.extend(sorted(g.adjacency[i]))
        ptr[i + 1] = len(idx)
    bondmat = np.zeros((n, n), dtype=np.int64)
    for b in g.bonds:
        bondmat[b.a, b.b] = bondmat[b.b, b.a] = b.order
    out = TargetArrays(labels, degree, ptr, np.asarray(idx, dtype=np.int64), bondmat,
                       Counter(labels.tolist()))
    _TARGET_CACHE[g] = out
    return out


def kernel_args(pattern: PatternArrays, t: TargetArrays, max_matches: int = 100) -> tuple:
    """Positional arguments of the embedding kernel, shared by both backends."""
    return (
        pattern.labels, pattern.parent, pattern.parent_bond, pattern.check_ptr,
        pattern.check_pos, pattern.check_bond, pattern.degree,
        t.labels, t.degree, t.nbr_ptr, t.nbr_idx, t.bondmat, int(max_matches),
    )


def embeddings(pattern: PatternArrays, target: MolecularGraph, max_matches: int = 100) -> list[list[int]]:
    """Embeddings as lists indexed by pattern atom index, giving target atom indices."""
    n_p = len(pattern.order)
    if n_p == 0 or n_p > len(target.atoms):
        return []
    t = target_arrays(target)
    for label, count in pattern.label_counts.items():
        if t.label_counts.get(label, 0) < count:
            return []
    rows = find_embeddings(*kernel_args(pattern, t, max_matches))
    out = []
    order = pattern.order.tolist()
    for row in rows.tolist():
        emb = [0] * n_p
        for position, atom in enumerate(order):
            emb[atom] = row[position]
        out.append(emb)
    return out
