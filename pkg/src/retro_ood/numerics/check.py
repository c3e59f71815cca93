"""Gradients of scalar losses and their finite-difference verification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np

from .tensor import NonFinite, ShapeError, Tensor

LossFn = Callable[[Mapping[str, Tensor], Any], Tensor]

# Gradient entries smaller than this are compared on an absolute scale.
REL_ERROR_FLOOR = 1e-6
# Roundoff in a computed loss value, in units of eps * |loss|.
ROUNDOFF_ULPS = 8.0


def loss_and_grad(loss_fn: LossFn, params: Mapping[str, np.ndarray], batch=None) -> tuple[float, dict[str, np.ndarray]]:
    """Evaluate ``loss_fn(tensor_params, batch)`` and its exact gradients.

    Parameters that do not influence the loss receive zero gradients.
    """
    tparams = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
    loss = loss_fn(tparams, batch)
    if not isinstance(loss, Tensor) or loss.value.size != 1:
        raise ShapeError("loss function must return a scalar Tensor")
    value = float(loss.value)
    if not np.isfinite(value):
        raise NonFinite(f"loss is {value}")
    if loss.requires_grad:
        loss.backward()
    grads = {}
    for k, t in tparams.items():
        g = t.grad if t.grad is not None else np.zeros_like(t.value)
        if not np.all(np.isfinite(g)):
            raise NonFinite(f"non-finite gradient for {k}")
        grads[k] = g
    return value, grads


def loss_value(loss_fn: LossFn, params: Mapping[str, np.ndarray], batch=None) -> float:
    return float(loss_fn({k: Tensor(v) for k, v in params.items()}, batch).value)


@dataclass(frozen=True)
class FiniteDiffReport:
    max_rel_error: float
    n_checked: int
    worst: tuple[str, tuple[int, ...]] | None
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error < self.tol


def relative_error(analytic: float, numeric: float, floor: float = REL_ERROR_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(loss_fn: LossFn, params: Mapping[str, np.ndarray], batch=None, h: float = 1e-5,
                      tol: float = 1e-4, n_coords: int = 40, seed: int = 0,
                      grads: Mapping[str, np.ndarray] | None = None) -> FiniteDiffReport:
    """Compare analytic gradients with central differences on sampled coordinates.

    ``grads`` overrides the analytic gradients (used to confirm the check
    catches corrupted gradients). Relative error is
    ``|a - n| / max(|a|, |n|, floor)``, where ``floor`` is the larger of
    ``REL_ERROR_FLOOR`` and the stencil's roundoff level divided by ``tol``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if grads is None:
        f0, grads = loss_and_grad(loss_fn, params, batch)
    else:
        f0 = loss_value(loss_fn, params, batch)
    # the central difference carries roundoff near ulps*eps*|f|/h, so entries
    # below that level over ``tol`` cannot be resolved to relative accuracy ``tol``
    noise = ROUNDOFF_ULPS * np.finfo(np.float64).eps * abs(f0) / h
    floor = max(REL_ERROR_FLOOR, noise / tol)
    rng = np.random.default_rng(seed)
    names = sorted(params)
    sizes = np.array([params[k].size for k in names])
    total = int(sizes.sum())
    picks = rng.choice(total, size=min(n_coords, total), replace=False) if total else []
    bounds = np.cumsum(sizes)
    work = {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}
    worst, worst_err = None, 0.0
    for flat in sorted(int(p) for p in picks):
        pi = int(np.searchsorted(bounds, flat, side="right"))
        name = names[pi]
        local = flat - (int(bounds[pi - 1]) if pi else 0)
        idx = np.unravel_index(local, params[name].shape)
        arr = work[name]
        orig = arr[idx]
        arr[idx] = orig + h
        f_plus = loss_value(loss_fn, work, batch)
        arr[idx] = orig - h
        f_minus = loss_value(loss_fn, work, batch)
        arr[idx] = orig
        numeric = (f_plus - f_minus) / (2.0 * h)
        err = relative_error(float(grads[name][idx]), numeric, floor)
        if err > worst_err or worst is None:
            worst_err = max(err, worst_err)
            worst = (name, tuple(int(i) for i in idx))
    return FiniteDiffReport(worst_err, len(picks), worst, tol)
