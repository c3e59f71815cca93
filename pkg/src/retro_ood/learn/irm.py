"""Environment binning and the IRMv1 penalty."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..molgraph import scaffold_key
from ..numerics import NonFinite, Tensor
from ..numerics import ops as T
from ..templates import Reaction

CRITERIA = ("size", "scaffold")


class TooFewSamples(ValueError):
    """Not enough reactions or scaffold groups to fill every environment."""


@dataclass(frozen=True)
class IrmConfig:
    """IRMv1 settings.

    ``lam`` weights the penalty once ``warmup`` epochs have passed. With
    ``target="center"`` the penalty is taken on the auxiliary
    reaction-center head instead of the template head.
    """

    lam: float = 1.0
    n_envs: int = 4
    criterion: str = "size"
    warmup: int = 5
    target: str = "main"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.n_envs < 2:
            raise ValueError("need at least two environments")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.target not in ("main", "center"):
            raise ValueError("target must be 'main' or 'center'")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")


def bin_environments(reactions: Sequence[Reaction], criterion: str = "size", n_envs: int = 4) -> dict[str, int]:
    """Assign every reaction id to one of ``n_envs`` environments.

    ``size`` cuts the reactions, ordered by (product heavy atoms, id), into
    equal-count quantile bins. ``scaffold`` groups by scaffold key, orders
    the groups by (size desc, key) and deals them round-robin.
    """
    if n_envs < 2:
        raise ValueError("need at least two environments")
    if len(reactions) < n_envs:
        raise TooFewSamples(f"{len(reactions)} reactions for {n_envs} environments")
    if criterion == "size":
        ordered = sorted(reactions, key=lambda r: (r.product.heavy_atom_count(), r.id))
        n = len(ordered)
        return {r.id: i * n_envs // n for i, r in enumerate(ordered)}
    if criterion == "scaffold":
        groups: dict[tuple, list[str]] = {}
        for r in reactions:
            groups.setdefault(scaffold_key(r.product), []).append(r.id)
        if len(groups) < n_envs:
            raise TooFewSamples(f"{len(groups)} scaffold groups for {n_envs} environments")
        ordered_groups = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        return {rid: j % n_envs for j, (_, ids) in enumerate(ordered_groups) for rid in ids}
    raise ValueError(f"criterion must be one of {CRITERIA}")


def irm_penalty(risk_grads) -> float:
    """``sum_e g_e**2`` for per-environment risk gradients at ``w = 1``."""
    g = np.asarray(risk_grads, dtype=np.float64).reshape(-1)
    if g.size == 0:
        raise ValueError("need at least one environment")
    if not np.all(np.isfinite(g)):
        raise NonFinite("non-finite risk gradient")
    return float(np.dot(g, g))


def logistic_risk_grad(z, y) -> float:
    """``d/dw mean softplus(-y z w)`` at ``w = 1`` for labels ``y`` in {-1, +1}."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = -y * z
    return float(np.mean(m * T.sigmoid_array(m)))


def softmax_risk_grad(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Per-row ``d/dw CE(w z_i, y_i)`` at ``w = 1``: ``sum_c p_ic z_ic - z_{i,y_i}``.

    Returned as a Tensor so the penalty can be differentiated with respect
    to the parameters that produced ``logits``.
    """
    p = T.exp(T.log_softmax(logits, axis=1))
    expected = T.sum(T.mul(p, logits), axis=1)
    return T.sub(expected, T.pick(logits, labels))


def irm_penalty_tensor(logits: Tensor, labels: np.ndarray, env: np.ndarray) -> Tensor:
    """Differentiable ``sum_e (mean_{i in e} dCE_i/dw)**2`` over environments present."""
    per_row = softmax_risk_grad(logits, labels)
    present = np.unique(env)
    local = np.searchsorted(present, env)
    g = T.segment_mean(per_row, local, len(present))
    return T.sum(T.square(g))
