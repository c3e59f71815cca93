"""Canonical atom ranking and SMILES writing."""

from __future__ import annotations

from typing import Sequence

from .elements import AROMATIC_ORGANIC, ATOMIC_NUMBER, ORGANIC_SUBSET, implicit_hydrogens
from .graph import AROMATIC, DOUBLE, SINGLE, TRIPLE, MolecularGraph


def _dense_rank(keys: Sequence) -> list[int]:
    order = sorted(range(len(keys)), key=keys.__getitem__)
    ranks = [0] * len(keys)
    current = -1
    last = object()
    for i in order:
        if keys[i] != last:
            current += 1
            last = keys[i]
        ranks[i] = current
    return ranks


def _refine(g: MolecularGraph, ranks: list[int]) -> list[int]:
    adj = g.adjacency
    bonds = g.bonds
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], sorted((ranks[j], bonds[k].order) for j, k in adj[i].items()))
            for i in range(len(ranks))
        ]
        new = _dense_rank(keys)
        n_new = len(set(new))
        ranks = new
        if n_new == n_classes:
            return ranks
        n_classes = n_new


def atom_invariants(g: MolecularGraph, keep_maps: bool) -> list[tuple]:
    out = []
    for i, a in enumerate(g.atoms):
        out.append(
            (
                g.degree(i),
                ATOMIC_NUMBER.get(a.symbol, 0),
                a.isotope,
                a.aromatic,
                a.charge,
                a.hcount,
                -1 if a.degree_constraint is None else a.degree_constraint,
                a.atom_map if keep_maps else 0,
            )
        )
    return out


def canonical_ranks(
    g: MolecularGraph, keep_maps: bool = False, extra: Sequence | None = None
) -> list[int]:
    """Total canonical order of atoms: equal for isomorphic graphs.

    Atom invariants are refined by neighbour ranks until stable; remaining
    ties are broken one at a time on the lowest tied class and refined again.
    ``extra`` supplies additional per-atom invariants (tuples) that must be
    respected, e.g. reaction-side attributes for template patterns.
    """
    n = len(g.atoms)
    if n == 0:
        return []
    inv = atom_invariants(g, keep_maps)
    if extra is not None:
        inv = [a + tuple(b) for a, b in zip(inv, extra)]
    ranks = _refine(g, _dense_rank(inv))
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        pick = min(i for i in range(n) if ranks[i] == tied)
        ranks = [2 * r for r in ranks]
        ranks[pick] -= 1
        ranks = _refine(g, _dense_rank(ranks))
    return ranks


def _permutation_parity(src: Sequence[int], dst: Sequence[int]) -> int:
    pos = {v: i for i, v in enumerate(src)}
    perm = [pos[v] for v in dst]
    parity = 0
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


class _Writer:
    def __init__(self, g, ranks, keep_maps, isomeric, all_brackets):
        self.g = g
        self.ranks = ranks
        self.keep_maps = keep_maps
        self.isomeric = isomeric
        self.all_brackets = all_brackets

    def write_component(self, start: int) -> str:
        g, ranks = self.g, self.ranks
        adj = g.adjacency
        visited = {start}
        parent = {start: None}
        children: dict[int, list[int]] = {}
        closures: dict[int, list[tuple[int, int]]] = {}  # atom -> [(partner, bond)]
        used_bonds = set()

        # Pass 1: spanning tree and ring-closure bonds, neighbours in rank order.
        stack = [(start, iter(sorted(adj[start], key=ranks.__getitem__)))]
        children[start] = []
        while stack:
            u, it = stack[-1]
            for v in it:
                k = adj[u][v]
                if k in used_bonds:
                    continue
                used_bonds.add(k)
                if v in visited:
                    closures.setdefault(v, []).append((u, k))
                    closures.setdefault(u, []).append((v, k))
                else:
                    visited.add(v)
                    parent[v] = u
                    children[u].append(v)
                    children[v] = []
                    stack.append((v, iter(sorted(adj[v], key=ranks.__getitem__))))
                    break
            else:
                stack.pop()

        # Pass 2: emit.
        out: list[str] = []
        digits: dict[int, int] = {}  # bond -> ring digit
        free: list[int] = []
        next_digit = [1]
        opened: set[int] = set()

        def take_digit() -> int:
            if free:
                free.sort()
                return free.pop(0)
            d = next_digit[0]
            next_digit[0] += 1
            return d

        def emit(u: int, came_from: int | None) -> None:
            order: list[int] = []
            if came_from is not None:
                order.append(came_from)
            atom = g.atoms[u]
            if atom.chirality and atom.hcount:
                order.append(-1)
            ring_text = []
            entries = closures.get(u, [])
            closing = [(p, k) for p, k in entries if k in opened]
            opening = [(p, k) for p, k in entries if k not in opened]
            closing.sort(key=lambda pk: digits[pk[1]])
            opening.sort(key=lambda pk: ranks[pk[0]])
            for p, k in closing:
                d = digits.pop(k)
                ring_text.append(_ring_label(d))
                free.append(d)
                order.append(p)
            for p, k in opening:
                d = take_digit()
                digits[k] = d
                opened.add(k)
                ring_text.append(self.bond_text(k, u, p) + _ring_label(d))
                order.append(p)
            kids = children[u]
            order.extend(kids)
            out.append(self.atom_text(u, order))
            out.extend(ring_text)
            for idx, v in enumerate(kids):
                k = adj[u][v]
                last = idx == len(kids) - 1
                if not last:
                    out.append("(")
                out.append(self.bond_text(k, u, v))
                emit(v, u)
                if not last:
                    out.append(")")

        import sys

        limit = sys.getrecursionlimit()
        if len(visited) + 50 > limit:
            sys.setrecursionlimit(len(visited) + 100)
        emit(start, None)
        return "".join(out)

    def bond_text(self, k: int, frm: int, to: int) -> str:
        g = self.g
        bond = g.bonds[k]
        both_aromatic = g.atoms[frm].aromatic and g.atoms[to].aromatic
        if bond.order == SINGLE:
            if self.isomeric and bond.stereo:
                if bond.stereo_from == frm:
                    return bond.stereo
                return "\\" if bond.stereo == "/" else "/"
            return "-" if both_aromatic else ""
        if bond.order == DOUBLE:
            return "="
        if bond.order == TRIPLE:
            return "#"
        if bond.order == AROMATIC:
            # the parser reads an unwritten aromatic-aromatic bond outside a ring as single
            return "" if both_aromatic and g.bond_in_ring(k) else ":"
        raise ValueError(f"unknown bond order {bond.order}")

    def atom_text(self, u: int, out_order: list[int]) -> str:
        g = self.g
        atom = g.atoms[u]
        symbol = atom.symbol.lower() if atom.aromatic else atom.symbol
        chirality = atom.chirality if self.isomeric else None
        if chirality:
            if sorted(atom.stereo_nbrs) == sorted(out_order):
                if _permutation_parity(atom.stereo_nbrs, out_order):
                    chirality = "@" if chirality == "@@" else "@@"
            else:
                chirality = None
        atom_map = atom.atom_map if self.keep_maps else 0
        needs_bracket = (
            self.all_brackets
            or atom.charge
            or atom.isotope
            or atom_map
            or chirality
            or atom.degree_constraint is not None
        )
        if not needs_bracket:
            if atom.symbol == "*":
                needs_bracket = atom.hcount != 0
            elif atom.aromatic:
                needs_bracket = symbol not in AROMATIC_ORGANIC
            else:
                needs_bracket = atom.symbol not in ORGANIC_SUBSET
            if not needs_bracket:
                bond_sum = 0
                for k in g.adjacency[u].values():
                    order = g.bonds[k].order
                    bond_sum += 1 if order == AROMATIC else order
                if atom.symbol != "*":
                    expected = implicit_hydrogens(atom.symbol, atom.aromatic, bond_sum)
                    needs_bracket = expected != atom.hcount
        if not needs_bracket:
            return symbol
        parts = ["["]
        if atom.isotope:
            parts.append(str(atom.isotope))
        parts.append(symbol)
        if chirality:
            parts.append(chirality)
        if atom.hcount:
            parts.append("H" if atom.hcount == 1 else f"H{atom.hcount}")
        if atom.charge:
            sign = "+" if atom.charge > 0 else "-"
            parts.append(sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}")
        if atom.degree_constraint is not None:
            parts.append(f";D{atom.degree_constraint}")
        if atom_map:
            parts.append(f":{atom_map}")
        parts.append("]")
        return "".join(parts)


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d:02d}"


def to_smiles(
    g: MolecularGraph,
    keep_maps: bool = True,
    isomeric: bool = True,
    all_brackets: bool = False,
    ranks: list[int] | None = None,
) -> str:
    """Write ``g`` as SMILES in canonical atom order.

    Fragments are written separately and joined with ``.`` in sorted order, so
    the output for a multi-component graph is independent of fragment order.
    """
    if not g.atoms:
        return ""
    if ranks is None:
        ranks = canonical_ranks(g, keep_maps=keep_maps)
    writer = _Writer(g, ranks, keep_maps, isomeric, all_brackets)
    pieces = []
    for comp in g.components():
        start = min(comp, key=ranks.__getitem__)
        pieces.append(writer.write_component(start))
    return ".".join(sorted(pieces))


def to_canonical_smiles(g: MolecularGraph, keep_maps: bool = False) -> str:
    return to_smiles(g, keep_maps=keep_maps)


def canonicalize(smiles: str, keep_maps: bool = False) -> str:
    """Parse and re-write a SMILES string canonically."""
    from .smiles import parse_smiles

    return to_smiles(parse_smiles(smiles), keep_maps=keep_maps)
