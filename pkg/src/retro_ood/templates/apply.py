"""Applying a template to a product: match, rewrite, validate."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..molgraph import AROMATIC, Atom, Bond, MolecularGraph, to_smiles
from .match import PatternArrays, compile_pattern, embeddings
from .template import Template

DEFAULT_MAX_MATCHES = 100


class RewriteError(ValueError):
    """Every rewrite of a template on a product produced an invalid graph."""


@dataclass(frozen=True)
class _Plan:
    pattern: PatternArrays
    # (product-pattern atom, hydrogen delta, precursor charge, precursor aromatic)
    anchors: tuple[tuple[int, int, int, bool], ...]
    delete: tuple[tuple[int, int], ...]
    form: tuple[tuple[int, int, int], ...]
    reorder: tuple[tuple[int, int, int], ...]
    leaving_atoms: tuple[Atom, ...]
    # Leaving bonds as (end, end, order); ends >= 0 are leaving-atom offsets,
    # ends < 0 encode product-pattern atom ``-1 - idx``.
    leaving_bonds: tuple[tuple[int, int, int], ...]


def _plan(t: Template) -> _Plan:
    plan = t._cache.get("plan")
    if plan is not None:
        return plan
    prod, prec = t.product_pattern, t.precursor_graph
    pidx, ridx = prod.map_index(), prec.map_index()
    prec_to_prod = {ridx[m]: pidx[m] for m in pidx}
    anchors = []
    for m, i in sorted(pidx.items()):
        pa, ra = prod.atoms[i], prec.atoms[ridx[m]]
        anchors.append((i, ra.hcount - pa.hcount, ra.charge, ra.aromatic))

    delete, form, reorder = [], [], []
    prod_bonds = {tuple(sorted((b.a, b.b))): b.order for b in prod.bonds}
    prec_bonds = {}
    leaving_offset: dict[int, int] = {}
    leaving_atoms = []
    for j, a in enumerate(prec.atoms):
        if j not in prec_to_prod:
            leaving_offset[j] = len(leaving_atoms)
            leaving_atoms.append(dataclasses.replace(a, atom_map=0, degree_constraint=None))
    leaving_bonds = []
    for b in prec.bonds:
        if b.a in prec_to_prod and b.b in prec_to_prod:
            prec_bonds[tuple(sorted((prec_to_prod[b.a], prec_to_prod[b.b])))] = b.order
        else:
            ends = [leaving_offset[x] if x in leaving_offset else -1 - prec_to_prod[x] for x in (b.a, b.b)]
            leaving_bonds.append((ends[0], ends[1], b.order))
    for key in sorted(prod_bonds.keys() | prec_bonds.keys()):
        before, after = prec_bonds.get(key), prod_bonds.get(key)
        if before is None:
            delete.append(key)
        elif after is None:
            form.append((key[0], key[1], before))
        elif before != after:
            reorder.append((key[0], key[1], before))
    plan = _Plan(compile_pattern(prod), tuple(anchors), tuple(delete), tuple(form),
                 tuple(reorder), tuple(leaving_atoms), tuple(leaving_bonds))
    t._cache["plan"] = plan
    return plan


def _rewrite(plan: _Plan, target: MolecularGraph, emb: list[int]) -> MolecularGraph | None:
    atoms = [dataclasses.replace(a, atom_map=0) for a in target.atoms]
    bonds: dict[tuple[int, int], Bond] = {}
    for b in target.bonds:
        bonds[(min(b.a, b.b), max(b.a, b.b))] = dataclasses.replace(b)
    touched: set[int] = set()

    for p, dh, charge, aromatic in plan.anchors:
        atom = atoms[emb[p]]
        atom.hcount += dh
        if atom.hcount < 0:
            return None
        if dh or atom.charge != charge or atom.aromatic != aromatic:
            touched.add(emb[p])
        atom.charge = charge
        atom.aromatic = aromatic
    for a, b in plan.delete:
        u, v = emb[a], emb[b]
        del bonds[(min(u, v), max(u, v))]
        touched.update((u, v))
    for a, b, order in plan.reorder:
        u, v = emb[a], emb[b]
        bonds[(min(u, v), max(u, v))].order = order
        touched.update((u, v))
    for a, b, order in plan.form:
        u, v = emb[a], emb[b]
        key = (min(u, v), max(u, v))
        if key in bonds:
            return None
        bonds[key] = Bond(key[0], key[1], order)
        touched.update((u, v))

    offset = len(atoms)
    for atom in plan.leaving_atoms:
        atoms.append(dataclasses.replace(atom))
        touched.add(len(atoms) - 1)
    for x, y, order in plan.leaving_bonds:
        u = offset + x if x >= 0 else emb[-1 - x]
        v = offset + y if y >= 0 else emb[-1 - y]
        key = (min(u, v), max(u, v))
        if key in bonds:
            return None
        bonds[key] = Bond(key[0], key[1], order)
        touched.update((u, v))

    for i in touched:
        atoms[i].chirality = None
        atoms[i].stereo_nbrs = ()
    bond_list = []
    for key in sorted(bonds):
        b = bonds[key]
        if b.stereo and (b.a in touched or b.b in touched):
            b.stereo, b.stereo_from = None, -1
        bond_list.append(b)
    g = MolecularGraph(atoms, bond_list)
    for i in touched:
        if not g.atom_valence_ok(i):
            return None
    ring = g.ring_bonds
    for k, b in enumerate(g.bonds):
        if b.order == AROMATIC and (b.a in touched or b.b in touched) and k not in ring:
            return None
    return g


def iter_outcomes(t: Template, product: MolecularGraph, max_matches: int = DEFAULT_MAX_MATCHES):
    """Yield ``(embedding, graph or None)`` per embedding, in discovery order."""
    plan = _plan(t)
    for emb in embeddings(plan.pattern, product, max_matches):
        yield emb, _rewrite(plan, product, emb)


def apply_template(t: Template, product: MolecularGraph, max_matches: int = DEFAULT_MAX_MATCHES,
                   strict: bool = False) -> set[str]:
    """Precursor sets generated by applying ``t`` to ``product``.

    Each outcome is a set of canonical precursor SMILES written as one sorted,
    dot-joined string (maps stripped). Outcomes that break the valence table
    are dropped; with ``strict`` an embedding that only yields invalid
    rewrites raises :class:`RewriteError`.
    """
    out: set[str] = set()
    n_emb = 0
    for _, g in iter_outcomes(t, product, max_matches):
        n_emb += 1
        if g is not None:
            out.add(to_smiles(g, keep_maps=False))
    if strict and n_emb and not out:
        raise RewriteError(f"{t.template_id}: all {n_emb} rewrites invalid")
    return out


def first_outcome(t: Template, product: MolecularGraph, max_matches: int = DEFAULT_MAX_MATCHES) -> str | None:
    """Smallest canonical outcome, or ``None`` when nothing valid results."""
    outcomes = apply_template(t, product, max_matches)
    return min(outcomes) if outcomes else None


def has_valid_outcome(t: Template, product: MolecularGraph, max_matches: int = DEFAULT_MAX_MATCHES) -> bool:
    """True as soon as one embedding rewrites to a valid graph."""
    return any(g is not None for _, g in iter_outcomes(t, product, max_matches))
