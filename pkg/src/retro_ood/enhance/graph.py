"""Target-template bipartite graph, rule-based filtering and k-hop samples."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..molgraph import MolecularGraph
from ..templates import Reaction, Template, apply_template, has_valid_outcome

log = logging.getLogger(__name__)

Edge = tuple[str, str]  # (molecule id, template id)


class MissingEdge(KeyError):
    """The seed edge is not part of the graph."""


@dataclass
class BipartiteGraph:
    """Molecule nodes (canonical product SMILES) and template nodes.

    ``edges`` is ``None`` for the complete graph, which is never
    materialized; filtering produces an explicit edge set and records the
    removed pairs in ``failed``.
    """

    molecules: list[str]
    templates: list[str]
    gt: set[Edge]
    edges: set[Edge] | None = None
    failed: set[Edge] = field(default_factory=set)
    mol_graphs: dict[str, MolecularGraph] = field(default_factory=dict, repr=False)
    template_objs: dict[str, Template] = field(default_factory=dict, repr=False)
    frequency: dict[str, int] = field(default_factory=dict)
    _mol_adj: dict[str, set[str]] | None = field(default=None, repr=False)
    _tmpl_adj: dict[str, set[str]] | None = field(default=None, repr=False)

    @property
    def is_complete(self) -> bool:
        return self.edges is None

    def n_edges(self) -> int:
        return len(self.molecules) * len(self.templates) if self.edges is None else len(self.edges)

    def edge_set(self) -> set[Edge]:
        if self.edges is None:
            return {(m, t) for m in self.molecules for t in self.templates}
        return set(self.edges)

    def has_edge(self, m: str, t: str) -> bool:
        if self.edges is None:
            return m in self.molecules and t in self.templates
        return (m, t) in self.edges

    def _build_adjacency(self) -> None:
        mol_adj: dict[str, set[str]] = {m: set() for m in self.molecules}
        tmpl_adj: dict[str, set[str]] = {t: set() for t in self.templates}
        for m, t in self.edges:
            mol_adj[m].add(t)
            tmpl_adj[t].add(m)
        self._mol_adj, self._tmpl_adj = mol_adj, tmpl_adj

    def templates_of(self, m: str) -> set[str]:
        if self.edges is None:
            return set(self.templates)
        if self._mol_adj is None:
            self._build_adjacency()
        return self._mol_adj[m]

    def molecules_of(self, t: str) -> set[str]:
        if self.edges is None:
            return set(self.molecules)
        if self._tmpl_adj is None:
            self._build_adjacency()
        return self._tmpl_adj[t]

    def label(self, m: str, t: str) -> str:
        return "gt" if (m, t) in self.gt else "candidate"

    def with_edges(self, edges: set[Edge], failed: set[Edge] | None = None) -> "BipartiteGraph":
        return BipartiteGraph(list(self.molecules), list(self.templates), set(self.gt), set(edges),
                              set(failed or ()), self.mol_graphs, self.template_objs, dict(self.frequency))


def build_bipartite_graph(reactions: Sequence[Reaction], assignment: Mapping[str, str],
                          templates: Mapping[str, Template]) -> BipartiteGraph:
    """Complete graph over the distinct products and the given templates.

    ``assignment`` maps reaction ids to template ids (radius >= 1); each
    assigned reaction contributes one ground-truth edge. Template node order
    follows (frequency desc, id).
    """
    mol_graphs: dict[str, MolecularGraph] = {}
    gt: set[Edge] = set()
    for r in reactions:
        tid = assignment.get(r.id)
        if tid is None or tid not in templates:
            continue
        m = r.product_smiles
        mol_graphs.setdefault(m, r.product.without_maps())
        gt.add((m, tid))
    used = {t for _, t in gt} | set(templates)
    tmpl = {t: templates[t] for t in used}
    freq = {t: tmpl[t].frequency for t in tmpl}
    order = sorted(tmpl, key=lambda t: (-freq[t], t))
    return BipartiteGraph(sorted(mol_graphs), order, gt, None, set(), mol_graphs, tmpl, freq)


def stage_a_filter(g: BipartiteGraph, max_matches: int = 100, check_gt: bool = True) -> BipartiteGraph:
    """Keep candidate edges whose template rewrites the molecule validly.

    Ground-truth edges are always kept; one that fails to regenerate is
    logged. Removed pairs become ``failed``.
    """
    kept: set[Edge] = set()
    failed: set[Edge] = set()
    for m in g.molecules:
        mol = g.mol_graphs[m]
        for t in g.templates:
            if (m, t) in g.gt:
                kept.add((m, t))
                if check_gt and not has_valid_outcome(g.template_objs[t], mol, max_matches):
                    log.warning("ground-truth edge (%s, %s) does not regenerate", m, t)
                continue
            if has_valid_outcome(g.template_objs[t], mol, max_matches):
                kept.add((m, t))
            else:
                failed.add((m, t))
    return g.with_edges(kept, failed)


def gt_regenerates(g: BipartiteGraph, reactions: Iterable[Reaction], assignment: Mapping[str, str]) -> float:
    """Share of ground-truth reactions whose template regenerates their precursors."""
    hits = total = 0
    for r in reactions:
        tid = assignment.get(r.id)
        if tid is None or tid not in g.template_objs:
            continue
        total += 1
        hits += r.ground_truth in apply_template(g.template_objs[tid], r.product)
    return hits / total if total else 1.0


@dataclass(frozen=True)
class SubgraphSample:
    seed: Edge
    molecules: frozenset[str]
    templates: frozenset[str]
    positives: tuple[Edge, ...]
    negatives: tuple[Edge, ...]
    k: int


def khop_subgraph(g: BipartiteGraph, seed: Edge, k: int = 1) -> SubgraphSample:
    """K-hop reaction-level subgraph around a seed edge.

    Starting from ``{m}`` and ``{t}``, each round replaces the molecule set
    with the neighbours of the current template set and the template set with
    the neighbours of the current molecule set. The result is the subgraph
    induced on the final sets, its edges split by label.
    """
    m, t = seed
    if not g.has_edge(m, t):
        raise MissingEdge(seed)
    if k < 1:
        raise ValueError("k must be at least 1")
    mols, tmpls = {m}, {t}
    for _ in range(k):
        new_mols = set().union(*(g.molecules_of(x) for x in tmpls))
        new_tmpls = set().union(*(g.templates_of(x) for x in mols))
        mols, tmpls = new_mols, new_tmpls
    pos, neg = [], []
    for mm in sorted(mols):
        for tt in sorted(g.templates_of(mm) & tmpls):
            (pos if (mm, tt) in g.gt else neg).append((mm, tt))
    return SubgraphSample(seed, frozenset(mols), frozenset(tmpls), tuple(pos), tuple(neg), k)


def sandwich_report(g_full: BipartiteGraph, g_enh: BipartiteGraph, e_enh: set[Edge]) -> list[tuple[str, bool]]:
    """Check ``E_gt <= E_enh <= E'_enh <= E_full``."""
    e_gt = g_full.gt
    e_filtered = g_enh.edge_set()
    mols, tmpls = set(g_full.molecules), set(g_full.templates)
    in_full = all(m in mols and t in tmpls for m, t in e_filtered)
    return [
        ("E_gt <= E_enh", e_gt <= e_enh),
        ("E_enh <= E'_enh", e_enh <= e_filtered),
        ("E'_enh <= E_full", in_full and (g_full.edges is None or e_filtered <= g_full.edges)),
    ]


def write_edges(path: str | Path, g: BipartiteGraph, enhanced: set[Edge] | None = None,
                energies: Mapping[Edge, float] | None = None) -> None:
    """TSV ``m_id, t_id, label, energy`` over the graph's explicit edges."""
    enhanced = enhanced or set()
    energies = energies or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["m_id", "t_id", "label", "energy"])
        for m, t in sorted(g.edge_set()):
            label = "gt" if (m, t) in g.gt else ("enhanced" if (m, t) in enhanced else "candidate")
            e = energies.get((m, t))
            w.writerow([m, t, label, "" if e is None else repr(float(e))])


def read_edges(path: str | Path) -> list[tuple[str, str, str, float | None]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            e = row["energy"]
            out.append((row["m_id"], row["t_id"], row["label"], float(e) if e else None))
    return out
