"""Top-n denoising of candidate edges and materialization of enhanced reactions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..molgraph import to_smiles
from ..templates import Reaction
from ..templates.apply import iter_outcomes
from .graph import BipartiteGraph, Edge, khop_subgraph
from .model import EncoderConfig, EnergyModel, TemplateInputs, fingerprint_inputs
from .train import GraphIndex


def build_index(g: BipartiteGraph, cfg: EncoderConfig) -> GraphIndex:
    """Encoder inputs for every molecule and every template's precursor patterns."""
    mols = fingerprint_inputs([g.mol_graphs[m] for m in g.molecules], cfg)
    patterns, owner = [], []
    for i, t in enumerate(g.templates):
        for pat in g.template_objs[t].precursor_patterns:
            patterns.append(pat)
            owner.append(i)
    tmpls = TemplateInputs(fingerprint_inputs(patterns, cfg), np.asarray(owner, dtype=np.int64),
                           len(g.templates))
    return GraphIndex({m: i for i, m in enumerate(g.molecules)},
                      {t: i for i, t in enumerate(g.templates)}, mols, tmpls)


def edge_energies(model: EnergyModel, index: GraphIndex, edges) -> dict[Edge, float]:
    edges = sorted(edges)
    mr, tr = index.rows(edges)
    values = model.energies(index.mols, index.tmpls, mr, tr)
    return dict(zip(edges, values.tolist()))


@dataclass
class DenoiseResult:
    e_enh: set[Edge]
    selected: set[Edge]  # candidate edges added on top of the ground truth
    energies: dict[Edge, float]


def denoise_top_n(g: BipartiteGraph, model: EnergyModel, index: GraphIndex, n: int, k: int = 1,
                  select_highest: bool = False, energies: dict[Edge, float] | None = None) -> DenoiseResult:
    """Per ground-truth edge, add the ``n`` most feasible candidates of its k-hop sample.

    Feasible means lowest energy by default; ``select_highest`` takes the
    highest-energy candidates instead. Ties break on the edge itself.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if energies is None:
        energies = edge_energies(model, index, g.edge_set())
    selected: set[Edge] = set()
    if n > 0:
        sign = -1.0 if select_highest else 1.0
        for seed in sorted(g.gt):
            sample = khop_subgraph(g, seed, k)
            ranked = sorted(sample.negatives, key=lambda e: (sign * energies[e], e))
            selected.update(ranked[:n])
    return DenoiseResult(set(g.gt) | selected, selected, energies)


def materialize(g: BipartiteGraph, edges, prefix: str = "enh", max_matches: int = 100,
                edge_of: dict[str, Edge] | None = None) -> list[Reaction]:
    """One atom-mapped reaction per edge from its smallest canonical outcome.

    Product atoms keep their identity through the rewrite, so they carry map
    numbers on both sides; added leaving-group atoms stay unmapped. Edges
    without a valid outcome are skipped. ``edge_of``, when given, receives
    the source edge of every reaction id.
    """
    out = []
    for i, (m, t) in enumerate(sorted(edges)):
        mol = g.mol_graphs[m]
        best = None
        for _, graph in iter_outcomes(g.template_objs[t], mol, max_matches):
            if graph is None:
                continue
            key = to_smiles(graph, keep_maps=False)
            if best is None or key < best[0]:
                best = (key, graph)
        if best is None:
            continue
        prec = best[1].copy()
        prod = mol.copy()
        n_prod = len(prod.atoms)
        for j in range(n_prod):
            prod.atoms[j].atom_map = j + 1
            prec.atoms[j].atom_map = j + 1
        for a in prec.atoms[n_prod:]:
            a.atom_map = 0
        text = f"{to_smiles(prec, keep_maps=True)}>>{to_smiles(prod, keep_maps=True)}"
        rid = f"{prefix}_{i:05d}"
        out.append(Reaction(rid, prec.fragments(), prod, None, "enhanced", text))
        if edge_of is not None:
            edge_of[rid] = (m, t)
    return out

