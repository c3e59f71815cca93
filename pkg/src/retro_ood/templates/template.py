"""Template extraction and canonical serialization."""

from __future__ import annotations

import dataclasses
import hashlib
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

from ..molgraph import Atom, Bond, MolecularGraph, canonical_ranks, merge, parse_smiles, to_smiles
from .center import detect_reaction_center
from .reaction import Reaction


class CenterError(ValueError):
    """The reaction has no reaction center, so no template can be extracted."""


@dataclass(eq=False)
class Template:
    """A retro-strategy: product-side pattern and precursor-side patterns.

    Anchor atoms carry map numbers shared by both sides; precursor atoms
    without a map are leaving-group atoms added when the template is applied.
    """

    template_id: str
    radius: int
    product_pattern: MolecularGraph
    precursor_patterns: list[MolecularGraph]
    canonical_string: str
    frequency: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @cached_property
    def precursor_graph(self) -> MolecularGraph:
        return merge(self.precursor_patterns)

    @classmethod
    def from_string(cls, canonical_string: str, radius: int, frequency: int = 0,
                    template_id: str | None = None) -> "Template":
        """Rebuild a template from its canonical ``precursors>>product`` string."""
        left, sep, right = canonical_string.partition(">>")
        if not sep:
            raise ValueError(f"not a template string: {canonical_string!r}")
        precursor = parse_smiles(left, validate=False)
        product = parse_smiles(right, validate=False)
        tid = template_id or template_id_for(canonical_string, radius)
        return cls(tid, radius, product, precursor.fragments(), canonical_string, frequency)


def template_id_for(canonical_string: str, radius: int) -> str:
    digest = hashlib.blake2b(canonical_string.encode(), digest_size=6).hexdigest()
    return f"r{radius}_{digest}"


def _within_radius(g: MolecularGraph, sources: set[int], radius: int) -> set[int]:
    dist = {s: 0 for s in sources}
    queue = deque(sorted(sources))
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for v in g.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return set(dist)


def _strip_stereo(g: MolecularGraph) -> None:
    for atom in g.atoms:
        atom.chirality = None
        atom.stereo_nbrs = ()
        atom.isotope = 0
    for bond in g.bonds:
        bond.stereo = None
        bond.stereo_from = -1


def extract_template(r: Reaction, radius: int) -> Template:
    """Extract the template of ``r`` at ``radius`` bonds around its center.

    The product pattern is the induced product subgraph within ``radius``
    bonds of the center. The precursor side holds the matching mapped atoms
    plus every connected group of leaving atoms (precursor atoms whose map
    does not reach the product) bonded to them. Product atoms whose bonds
    change carry a degree constraint equal to their product degree.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    center = detect_reaction_center(r)
    if not center:
        raise CenterError(f"{r.id}: empty reaction center")
    prod, prec = r.product, r.precursor_graph
    pmap = prod.map_index()
    rmap = prec.map_index()
    sources = {pmap[m] for m in center.center_maps if m in pmap}
    if not sources:
        raise CenterError(f"{r.id}: reaction center has no product atom")
    included = _within_radius(prod, sources, radius)
    maps = {prod.atoms[i].atom_map for i in included}

    leaving = {j for j, a in enumerate(prec.atoms) if a.atom_map not in pmap}
    anchors_prec = {rmap[m] for m in maps}
    chosen_leaving: set[int] = set()
    seen: set[int] = set()
    for start in sorted(leaving):
        if start in seen:
            continue
        comp, queue = {start}, deque([start])
        seen.add(start)
        while queue:
            u = queue.popleft()
            for v in prec.adjacency[u]:
                if v in leaving and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        if any(v in anchors_prec for u in comp for v in prec.adjacency[u]):
            chosen_leaving |= comp

    prod_pat = prod.subgraph(included)
    prec_pat = prec.subgraph(anchors_prec | chosen_leaving)
    _strip_stereo(prod_pat)
    _strip_stereo(prec_pat)
    constrained = center.bond_changed_maps
    for atom, idx in zip(prod_pat.atoms, sorted(included)):
        if atom.atom_map in constrained:
            atom.degree_constraint = prod.degree(idx)
    for atom in prec_pat.atoms:
        if atom.atom_map not in maps:
            atom.atom_map = 0
        atom.degree_constraint = None
    return build_template(prod_pat, prec_pat, radius)


def build_template(prod_pat: MolecularGraph, prec_pat: MolecularGraph, radius: int,
                   frequency: int = 0) -> Template:
    """Renumber anchors canonically and serialize.

    Anchors are ranked on a combined graph: each anchor carries its product
    attributes plus its precursor hydrogen count, charge and aromatic flag,
    and each bond is labelled by its order on both sides. Maps 1..n follow
    that ranking, which makes the string independent of the input maps.
    """
    canon_string, prod_pat, prec_pat = _canonicalize_patterns(prod_pat, prec_pat)
    return Template(
        template_id_for(canon_string, radius), radius, prod_pat,
        prec_pat.fragments(), canon_string, frequency,
    )


def _canonicalize_patterns(prod_pat: MolecularGraph, prec_pat: MolecularGraph):
    prod_index = prod_pat.map_index()
    prec_index = prec_pat.map_index()
    anchor_maps = sorted(prod_index)
    if set(anchor_maps) != set(prec_index):
        raise ValueError("product and precursor patterns disagree on anchor maps")
    leaving = [j for j, a in enumerate(prec_pat.atoms) if not a.atom_map]

    node_of_prec: dict[int, int] = {}
    atoms: list[Atom] = []
    extra: list[tuple] = []
    for m in anchor_maps:
        pa = prod_pat.atoms[prod_index[m]]
        ra = prec_pat.atoms[prec_index[m]]
        node_of_prec[prec_index[m]] = len(atoms)
        atoms.append(dataclasses.replace(pa, atom_map=0, chirality=None, stereo_nbrs=()))
        extra.append((0, ra.hcount, ra.charge, int(ra.aromatic)))
    for j in leaving:
        ra = prec_pat.atoms[j]
        node_of_prec[j] = len(atoms)
        atoms.append(dataclasses.replace(ra, atom_map=0, chirality=None, stereo_nbrs=()))
        extra.append((1, 0, 0, 0))

    codes: dict[tuple[int, int], int] = {}
    node_of_prod = {prod_index[m]: node_of_prec[prec_index[m]] for m in anchor_maps}
    for b in prod_pat.bonds:
        key = tuple(sorted((node_of_prod[b.a], node_of_prod[b.b])))
        codes[key] = codes.get(key, 0) + 8 * b.order
    for b in prec_pat.bonds:
        key = tuple(sorted((node_of_prec[b.a], node_of_prec[b.b])))
        codes[key] = codes.get(key, 0) + b.order
    combined = MolecularGraph(atoms, [Bond(a, b, c) for (a, b), c in sorted(codes.items())])
    ranks = canonical_ranks(combined, keep_maps=False, extra=extra)

    new_map = {}
    for rank_order, m in enumerate(sorted(anchor_maps, key=lambda m: ranks[node_of_prod[prod_index[m]]]), 1):
        new_map[m] = rank_order
    prod_out = prod_pat.copy()
    prec_out = prec_pat.copy()
    for atom in prod_out.atoms:
        atom.atom_map = new_map[atom.atom_map]
    for atom in prec_out.atoms:
        if atom.atom_map:
            atom.atom_map = new_map[atom.atom_map]
    left = to_smiles(prec_out, keep_maps=True, all_brackets=True)
    right = to_smiles(prod_out, keep_maps=True, all_brackets=True)
    return f"{left}>>{right}", prod_out, prec_out


def canonical_template_string(t: Template) -> str:
    """Recompute the canonical string from the pattern graphs."""
    return _canonicalize_patterns(t.product_pattern, t.precursor_graph)[0]
