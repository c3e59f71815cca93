"""Stage A, B and C end to end on a training partition."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from ..templates import Reaction, Template, assign_corpus_templates
from .graph import BipartiteGraph, Edge, build_bipartite_graph, sandwich_report, stage_a_filter
from .model import EncoderConfig, EnergyModel
from .stage_c import DenoiseResult, build_index, denoise_top_n, materialize
from .train import EnhanceConfig, TrainLog, train_ebm

log = logging.getLogger(__name__)


class InvariantBreach(RuntimeError):
    """An enhancement artifact violates the edge-set sandwich."""


@dataclass
class EnhanceResult:
    g_full: BipartiteGraph
    g_enh: BipartiteGraph
    model: EnergyModel
    train_log: TrainLog
    denoise: DenoiseResult
    reactions: list[Reaction]
    sandwich: list[tuple[str, bool]]
    edge_of: dict[str, Edge]
    templates: dict[str, Template]

    def assignment(self) -> dict[str, str]:
        """Template id of every enhanced reaction, taken from its source edge."""
        return {rid: e[1] for rid, e in self.edge_of.items()}

    @property
    def sandwich_ok(self) -> bool:
        return all(ok for _, ok in self.sandwich)

    def counts(self) -> dict:
        return {
            "molecules": len(self.g_full.molecules),
            "templates": len(self.g_full.templates),
            "E_gt": len(self.g_full.gt),
            "E_full": self.g_full.n_edges(),
            "E_enh_filtered": self.g_enh.n_edges(),
            "E_fail": len(self.g_enh.failed),
            "E_enh": len(self.denoise.e_enh),
            "selected": len(self.denoise.selected),
            "enhanced_reactions": len(self.reactions),
        }


def run_enhancement(train: Sequence[Reaction], radius: int = 1, cfg: EnhanceConfig = EnhanceConfig(),
                    encoder: EncoderConfig = EncoderConfig(), seed: int = 0,
                    strict: bool = True) -> EnhanceResult:
    """Build, filter, train and denoise on ``train`` reactions only.

    With ``strict`` a sandwich violation raises :class:`InvariantBreach`.
    """
    if radius < 1:
        raise ValueError("enhancement uses radius >= 1 templates")
    assigned = assign_corpus_templates(train, radius)
    g_full = build_bipartite_graph(train, assigned.assignment, assigned.by_id())
    g_enh = stage_a_filter(g_full)
    model_index = build_index(g_enh, encoder)
    model = EnergyModel(encoder, model_index.mols.width, model_index.tmpls.patterns.width, seed=seed)
    train_log = train_ebm(g_enh, model, model_index, cfg, seed=seed)
    denoise = denoise_top_n(g_enh, model, model_index, cfg.n, cfg.k, cfg.select_highest)
    report = sandwich_report(g_full, g_enh, denoise.e_enh)
    bound = len(g_full.gt) * (cfg.n + 1)
    report.append((f"|E_enh| <= (n+1)|E_gt| = {bound}", len(denoise.e_enh) <= bound))
    if strict and not all(ok for _, ok in report):
        raise InvariantBreach("; ".join(name for name, ok in report if not ok))
    edge_of: dict[str, Edge] = {}
    reactions = materialize(g_enh, denoise.selected, edge_of=edge_of)
    return EnhanceResult(g_full, g_enh, model, train_log, denoise, reactions, report, edge_of,
                         dict(g_full.template_objs))
