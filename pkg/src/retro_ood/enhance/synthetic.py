"""Planted-feature bipartite graphs for checking that the EBM separates edges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BipartiteGraph, Edge
from .model import NodeInputs, TemplateInputs
from .train import GraphIndex


@dataclass
class PlantedGraph:
    graph: BipartiteGraph
    index: GraphIndex
    mol_type: dict[str, int]
    tmpl_type: dict[str, int]


def make_planted_graph(n_mols: int = 200, n_tmpls: int = 40, n_types: int = 8, n_candidates: int = 10,
                       n_noise: int = 8, noise: float = 0.3, seed: int = 0) -> PlantedGraph:
    """Molecules and templates carry a hidden type; gt edges join equal types.

    Node inputs are a one-hot type code plus Gaussian noise. Each molecule
    also gets ``n_candidates`` edges to templates of other types, drawn
    uniformly without replacement. Templates own one to three pattern rows.
    """
    rng = np.random.default_rng(seed)
    mols = [f"m{i:04d}" for i in range(n_mols)]
    tmpls = [f"t{j:03d}" for j in range(n_tmpls)]
    m_type = rng.integers(0, n_types, n_mols)
    t_type = np.arange(n_tmpls) % n_types
    width = n_types + n_noise

    def rows(types: np.ndarray) -> np.ndarray:
        x = rng.normal(0.0, noise, (len(types), width))
        x[np.arange(len(types)), types] += 1.0
        return x

    gt: set[Edge] = set()
    edges: set[Edge] = set()
    for i, m in enumerate(mols):
        same = np.flatnonzero(t_type == m_type[i])
        other = np.flatnonzero(t_type != m_type[i])
        for j in same:
            gt.add((m, tmpls[j]))
        for j in rng.choice(other, size=min(n_candidates, len(other)), replace=False):
            edges.add((m, tmpls[j]))
    edges |= gt

    n_pat = rng.integers(1, 4, n_tmpls)
    owner = np.repeat(np.arange(n_tmpls), n_pat)
    g = BipartiteGraph(mols, tmpls, gt, edges, frequency={t: 1 for t in tmpls})
    index = GraphIndex({m: i for i, m in enumerate(mols)}, {t: j for j, t in enumerate(tmpls)},
                       NodeInputs(dense=rows(m_type)),
                       TemplateInputs(NodeInputs(dense=rows(t_type[owner])), owner, n_tmpls))
    return PlantedGraph(g, index, {m: int(m_type[i]) for i, m in enumerate(mols)},
                        {t: int(t_type[j]) for j, t in enumerate(tmpls)})
