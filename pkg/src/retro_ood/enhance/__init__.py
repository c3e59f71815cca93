"""Concept enhancement over the target-template bipartite graph."""

from .graph import (
    BipartiteGraph,
    MissingEdge,
    SubgraphSample,
    build_bipartite_graph,
    gt_regenerates,
    khop_subgraph,
    read_edges,
    sandwich_report,
    stage_a_filter,
    write_edges,
)
from .model import EncoderConfig, EnergyModel, NodeInputs, TemplateInputs, fingerprint_inputs
from .pipeline import EnhanceResult, InvariantBreach, run_enhancement
from .stage_c import DenoiseResult, build_index, denoise_top_n, edge_energies, materialize
from .train import (
    EmptyNegatives,
    EnhanceConfig,
    GraphIndex,
    TrainLog,
    batch_subgraph_loss,
    ebm_subgraph_loss,
    ranking_auc,
    subgraph_loss_from_energies,
    train_ebm,
    truncate_negatives,
)

__all__ = [
    "BipartiteGraph",
    "DenoiseResult",
    "EmptyNegatives",
    "EncoderConfig",
    "EnergyModel",
    "EnhanceConfig",
    "EnhanceResult",
    "GraphIndex",
    "InvariantBreach",
    "MissingEdge",
    "NodeInputs",
    "SubgraphSample",
    "TemplateInputs",
    "TrainLog",
    "batch_subgraph_loss",
    "build_bipartite_graph",
    "build_index",
    "denoise_top_n",
    "ebm_subgraph_loss",
    "edge_energies",
    "fingerprint_inputs",
    "gt_regenerates",
    "khop_subgraph",
    "materialize",
    "ranking_auc",
    "read_edges",
    "run_enhancement",
    "sandwich_report",
    "stage_a_filter",
    "subgraph_loss_from_energies",
    "train_ebm",
    "truncate_negatives",
    "write_edges",
]
