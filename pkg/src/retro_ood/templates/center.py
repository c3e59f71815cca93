"""Reaction-center detection from atom maps."""

from __future__ import annotations

from dataclasses import dataclass

from .reaction import Reaction

FORMED, BROKEN, ORDER_CHANGED = "formed", "broken", "order_changed"


@dataclass(frozen=True)
class ReactionCenter:
    changed_bonds: frozenset[tuple[int, int, str]]
    changed_atoms: frozenset[int]
    # Product maps whose precursor atom is bonded to a leaving-group atom.
    leaving_attached: frozenset[int] = frozenset()

    @property
    def center_maps(self) -> frozenset[int]:
        maps = set(self.changed_atoms) | set(self.leaving_attached)
        for a, b, _ in self.changed_bonds:
            maps.update((a, b))
        return frozenset(maps)

    @property
    def bond_changed_maps(self) -> frozenset[int]:
        maps = set(self.leaving_attached)
        for a, b, _ in self.changed_bonds:
            maps.update((a, b))
        return frozenset(maps)

    def __bool__(self) -> bool:
        return bool(self.changed_bonds or self.changed_atoms or self.leaving_attached)


def _mapped_bonds(g) -> dict[tuple[int, int], int]:
    out = {}
    for bond in g.bonds:
        ma, mb = g.atoms[bond.a].atom_map, g.atoms[bond.b].atom_map
        if ma and mb:
            out[(min(ma, mb), max(ma, mb))] = bond.order
    return out


def detect_reaction_center(r: Reaction) -> ReactionCenter:
    """Bonds and atoms that differ between mapped precursors and product.

    Bond changes come from the symmetric difference of the mapped bond sets,
    keyed by unordered map pairs. An atom counts as changed when its hydrogen
    count, formal charge or aromatic flag differs between the two sides.
    Raises :class:`MappingError` when a product atom has no counterpart.
    """
    r.check_mapping()
    prod, prec = r.product, r.precursor_graph
    prod_bonds = _mapped_bonds(prod)
    prec_bonds = _mapped_bonds(prec)
    changed = set()
    for key in prod_bonds.keys() | prec_bonds.keys():
        before, after = prec_bonds.get(key), prod_bonds.get(key)
        if before is None:
            changed.add((key[0], key[1], FORMED))
        elif after is None:
            changed.add((key[0], key[1], BROKEN))
        elif before != after:
            changed.add((key[0], key[1], ORDER_CHANGED))

    prec_index = prec.map_index()
    product_maps = set(prod.map_index())
    atoms = set()
    attached = set()
    for atom in prod.atoms:
        m = atom.atom_map
        j = prec_index[m]
        other = prec.atoms[j]
        if (other.hcount, other.charge, other.aromatic) != (atom.hcount, atom.charge, atom.aromatic):
            atoms.add(m)
        for nb in prec.adjacency[j]:
            if prec.atoms[nb].atom_map not in product_maps:
                attached.add(m)
    return ReactionCenter(frozenset(changed), frozenset(atoms), frozenset(attached))
