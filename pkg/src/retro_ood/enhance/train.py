"""Subgraph contrastive loss and EBM training."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..numerics import AdamState, NonFinite, Tensor, adam_step, loss_and_grad
from ..numerics import ops as T
from .graph import BipartiteGraph, Edge, SubgraphSample, khop_subgraph
from .model import EnergyModel, NodeInputs, TemplateInputs

log = logging.getLogger(__name__)


class EmptyNegatives(ValueError):
    """A subgraph sample has no candidate edge to contrast against."""


@dataclass(frozen=True)
class EnhanceConfig:
    k: int = 1
    m_max: int = 100
    n: int = 5
    tau: float = 1.0
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-3
    max_steps: int | None = None
    include_positive: bool = False
    select_highest: bool = False

    def __post_init__(self):
        if self.k < 1 or self.n < 0 or self.m_max < 1:
            raise ValueError("need k >= 1, n >= 0 and m_max >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


def subgraph_loss_from_energies(f_pos: Tensor, f_neg: Tensor, tau: float = 1.0,
                                include_positive: bool = False) -> Tensor:
    """Contrastive loss of one sample from its positive and negative energies.

    ``L = mean_{e+} F(e+)/tau + log sum_{e-} exp(-F(e-)/tau)``, which equals
    ``-mean log(exp(-F(e+)/tau) / sum_{e-} exp(-F(e-)/tau))``. With
    ``include_positive`` the positives join the denominator, bounding the
    loss below by zero.
    """
    if f_neg.value.size == 0:
        raise EmptyNegatives("sample has no negative edges")
    if f_pos.value.size == 0:
        raise ValueError("sample has no positive edges")
    denom = T.concat([f_neg, f_pos]) if include_positive else f_neg
    return T.add(T.mul(T.mean(f_pos), 1.0 / tau), T.logsumexp(T.mul(denom, -1.0 / tau), axis=0))


def batch_subgraph_loss(f: Tensor, sample_of: np.ndarray, is_pos: np.ndarray, n_samples: int,
                        tau: float = 1.0, include_positive: bool = False) -> Tensor:
    """Mean of the per-sample losses for energies ``f`` of a batch of samples."""
    pos = np.flatnonzero(is_pos)
    neg = np.flatnonzero(~is_pos) if not include_positive else np.arange(len(is_pos))
    f_pos = T.take_rows(f, pos)
    f_den = T.take_rows(f, neg)
    pos_mean = T.segment_mean(f_pos, sample_of[pos], n_samples)
    lse = T.segment_logsumexp(T.mul(f_den, -1.0 / tau), sample_of[neg], n_samples)
    return T.mean(T.add(T.mul(pos_mean, 1.0 / tau), lse))


def ebm_subgraph_loss(model: EnergyModel, sample: SubgraphSample, index: "GraphIndex",
                      tau: float = 1.0, include_positive: bool = False, params=None) -> Tensor:
    p = params if params is not None else {k: Tensor(v) for k, v in model.params.items()}
    if not sample.negatives:
        raise EmptyNegatives(f"no negatives around {sample.seed}")
    edges = list(sample.positives) + list(sample.negatives)
    mr, tr = index.rows(edges)
    f = model.pair_energies(p, index.mols, index.tmpls, mr, tr)
    n_pos = len(sample.positives)
    return subgraph_loss_from_energies(T.take_rows(f, np.arange(n_pos)),
                                       T.take_rows(f, np.arange(n_pos, len(edges))), tau, include_positive)


@dataclass
class GraphIndex:
    """Row numbers of graph nodes in the encoder input matrices."""

    mol_row: dict[str, int]
    tmpl_row: dict[str, int]
    mols: NodeInputs
    tmpls: TemplateInputs

    def rows(self, edges: Sequence[Edge]) -> tuple[np.ndarray, np.ndarray]:
        mr = np.fromiter((self.mol_row[m] for m, _ in edges), dtype=np.int64, count=len(edges))
        tr = np.fromiter((self.tmpl_row[t] for _, t in edges), dtype=np.int64, count=len(edges))
        return mr, tr


def truncate_negatives(sample: SubgraphSample, m_max: int, frequency: dict[str, int]) -> SubgraphSample:
    """Keep at most ``m_max`` negatives.

    Negatives on the seed's molecule come first, then (template frequency
    desc, template id, molecule id).
    """
    if len(sample.negatives) <= m_max:
        return sample
    seed_mol = sample.seed[0]
    ordered = sorted(sample.negatives,
                     key=lambda e: (e[0] != seed_mol, -frequency.get(e[1], 0), e[1], e[0]))
    return SubgraphSample(sample.seed, sample.molecules, sample.templates, sample.positives,
                          tuple(ordered[:m_max]), sample.k)


@dataclass
class TrainLog:
    epochs: list[dict] = field(default_factory=list)
    skipped_no_negatives: int = 0
    steps: int = 0


def train_ebm(g: BipartiteGraph, model: EnergyModel, index: GraphIndex, cfg: EnhanceConfig,
              seed: int = 0) -> TrainLog:
    """Adam on the batched subgraph loss, one sample per ground-truth edge per epoch.

    Samples are extracted once (the graph is static) and truncated to
    ``cfg.m_max`` negatives; seeds without any negative are skipped. The
    model's parameters are updated in place. Raises :class:`NonFinite` when
    the loss or a gradient stops being finite.
    """
    samples = []
    skipped = 0
    for e in sorted(g.gt):
        s = truncate_negatives(khop_subgraph(g, e, cfg.k), cfg.m_max, g.frequency)
        if s.negatives:
            samples.append(s)
        else:
            skipped += 1
    out = TrainLog(skipped_no_negatives=skipped)
    if not samples:
        log.warning("no training samples with negatives")
        return out
    rows = [index.rows(list(s.positives) + list(s.negatives)) for s in samples]
    n_pos = [len(s.positives) for s in samples]
    rng = np.random.default_rng(seed)
    state = AdamState(lr=cfg.lr)
    params = model.params
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        losses, pos_e, neg_e = [], [], []
        for start in range(0, len(order), cfg.batch_size):
            if cfg.max_steps is not None and state.step >= cfg.max_steps:
                break
            chunk = order[start : start + cfg.batch_size]
            mr = np.concatenate([rows[i][0] for i in chunk])
            tr = np.concatenate([rows[i][1] for i in chunk])
            sample_of = np.concatenate([np.full(len(rows[i][0]), j) for j, i in enumerate(chunk)])
            is_pos = np.concatenate([np.arange(len(rows[i][0])) < n_pos[i] for i in chunk])
            step_seed = int(rng.integers(2**63))
            energies: list[np.ndarray] = []

            def loss_fn(p, _):
                f = model.pair_energies(p, index.mols, index.tmpls, mr, tr, training=True, seed=step_seed)
                energies.append(f.value)
                return batch_subgraph_loss(f, sample_of, is_pos, len(chunk), cfg.tau, cfg.include_positive)

            value, grads = loss_and_grad(loss_fn, params, None)
            params, state = adam_step(state, params, grads)
            losses.append(value)
            pos_e.append(float(energies[-1][is_pos].mean()))
            neg_e.append(float(energies[-1][~is_pos].mean()))
        if not losses:
            break
        mean_loss = float(np.mean(losses))
        if not math.isfinite(mean_loss):
            raise NonFinite(f"epoch {epoch}: loss {mean_loss}")
        out.epochs.append({"epoch": epoch, "loss": mean_loss, "pos_energy": float(np.mean(pos_e)),
                           "neg_energy": float(np.mean(neg_e)), "steps": state.step})
        log.info("epoch %d loss %.5f pos %.4f neg %.4f", epoch, mean_loss, np.mean(pos_e), np.mean(neg_e))
    model.params = params
    out.steps = state.step
    return out


def ranking_auc(gt_energy: np.ndarray, cand_energy: np.ndarray) -> float:
    """Probability that a random gt edge has lower energy than a random candidate (ties count half)."""
    gt_energy = np.asarray(gt_energy, dtype=np.float64)
    cand_energy = np.asarray(cand_energy, dtype=np.float64)
    if not len(gt_energy) or not len(cand_energy):
        return float("nan")
    both = np.concatenate([gt_energy, cand_energy])
    order = np.argsort(both, kind="mergesort")
    ranks = np.empty(len(both))
    sorted_vals = both[order]
    i = 0
    while i < len(both):
        j = i
        while j + 1 < len(both) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    n_gt, n_c = len(gt_energy), len(cand_energy)
    rank_sum = ranks[:n_gt].sum()
    # Mann-Whitney count of pairs where the gt edge ranks lower.
    lower = n_gt * n_c - (rank_sum - n_gt * (n_gt + 1) / 2.0)
    return float(lower / (n_gt * n_c))
