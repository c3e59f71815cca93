"""Parameter initialization, feed-forward and message-passing encoders.

Parameters live in flat ``dict[str, ndarray]`` containers; encoder functions
take the matching :class:`Tensor` views so gradients flow back to them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths ``sizes = (in, hidden..., out)`` and hidden-layer dropout."""

    sizes: tuple[int, ...]
    dropout: float = 0.0

    def __post_init__(self):
        if len(self.sizes) < 2 or any(s <= 0 for s in self.sizes):
            raise ShapeError(f"bad MLP sizes {self.sizes}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def init(self, rng: np.random.Generator, prefix: str) -> dict[str, np.ndarray]:
        params = {}
        for i in range(self.n_layers):
            params[f"{prefix}W{i}"] = glorot(rng, self.sizes[i], self.sizes[i + 1])
            params[f"{prefix}b{i}"] = np.zeros(self.sizes[i + 1])
        return params


def dropout_masks(spec: MlpSpec, n_rows: int, rng_seed) -> list[np.ndarray]:
    """Inverted-dropout masks for each hidden layer, replayable from ``rng_seed``."""
    rng = np.random.default_rng(rng_seed)
    keep = 1.0 - spec.dropout
    return [
        (rng.random((n_rows, width)) < keep) / keep
        for width in spec.sizes[1:-1]
    ]


def mlp(spec: MlpSpec, params: Mapping[str, Tensor], prefix: str, x: Tensor,
        training: bool = False, rng_seed=None, activations: list | None = None) -> Tensor:
    """Affine and ReLU per hidden layer, affine output.

    Dropout hits hidden activations only, and only when ``training`` is set;
    the masks derive from ``rng_seed``.
    """
    x = T.as_tensor(x)
    if x.value.ndim != 2 or x.shape[1] != spec.sizes[0]:
        raise ShapeError(f"MLP input {x.shape} does not match width {spec.sizes[0]}")
    masks = dropout_masks(spec, x.shape[0], rng_seed) if training and spec.dropout > 0 else None
    h = x
    for i in range(spec.n_layers):
        h = T.add(T.matmul(h, params[f"{prefix}W{i}"]), params[f"{prefix}b{i}"])
        if i < spec.n_layers - 1:
            h = T.relu(h)
            if masks is not None:
                h = T.mul(h, masks[i])
        if activations is not None:
            activations.append(h.value)
    return h


def mlp_forward(params: Mapping[str, np.ndarray], x: np.ndarray, spec: MlpSpec, prefix: str = "",
                training: bool = False, rng_seed=None) -> tuple[np.ndarray, list[np.ndarray]]:
    """Array-level forward pass returning the output and each layer's activations."""
    tparams = {k: Tensor(v) for k, v in params.items() if k.startswith(prefix)}
    acts: list[np.ndarray] = []
    out = mlp(spec, tparams, prefix, Tensor(x), training, rng_seed, acts)
    return out.value, acts


@dataclass(frozen=True)
class MpnnSpec:
    atom_dim: int
    bond_dim: int
    hidden: int = 256
    depth: int = 10

    def init(self, rng: np.random.Generator, prefix: str) -> dict[str, np.ndarray]:
        h = self.hidden
        return {
            f"{prefix}W_in": glorot(rng, self.atom_dim, h),
            f"{prefix}b_in": np.zeros(h),
            f"{prefix}W_self": glorot(rng, h, h),
            f"{prefix}W_msg": glorot(rng, h + self.bond_dim, h),
            f"{prefix}b_upd": np.zeros(h),
        }


@dataclass(frozen=True)
class GraphBatch:
    """Several featurized graphs stacked into one disjoint graph.

    ``src``/``dst`` list each bond in both directions; ``edge_feat`` repeats
    the bond features accordingly; ``graph_of`` maps atoms to graphs.
    """

    atom_feat: np.ndarray
    edge_feat: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    graph_of: np.ndarray
    n_graphs: int

    @classmethod
    def from_features(cls, graphs: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
                      bond_dim: int) -> "GraphBatch":
        atoms, edges, src, dst, owner = [], [], [], [], []
        offset = 0
        for gi, (a, b, ends) in enumerate(graphs):
            n = a.shape[0]
            atoms.append(a)
            owner.append(np.full(n, gi, dtype=np.int64))
            if len(ends):
                ends = np.asarray(ends, dtype=np.int64) + offset
                src.extend([ends[:, 0], ends[:, 1]])
                dst.extend([ends[:, 1], ends[:, 0]])
                edges.extend([b, b])
            offset += n
        cat = lambda xs, shape: np.concatenate(xs) if xs else np.zeros(shape)  # noqa: E731
        return cls(
            cat(atoms, (0, 0)).astype(np.float64),
            cat(edges, (0, bond_dim)).astype(np.float64),
            cat(src, (0,)).astype(np.int64),
            cat(dst, (0,)).astype(np.int64),
            cat(owner, (0,)).astype(np.int64),
            len(graphs),
        )


def message_passing_encode(spec: MpnnSpec, params: Mapping[str, Tensor], prefix: str,
                           batch: GraphBatch) -> Tensor:
    """Graph embeddings ``(n_graphs, hidden)``.

    ``h0 = relu(x W_in + b_in)``; each of ``depth`` rounds computes
    ``h = relu(h W_self + sum_{u->v} [h_u ; e_uv] W_msg + b_upd)`` with shared
    weights; the readout is the per-graph mean of atom states.
    """
    if batch.atom_feat.shape[1] != spec.atom_dim:
        raise ShapeError(f"atom features {batch.atom_feat.shape} vs width {spec.atom_dim}")
    if batch.edge_feat.shape[1] != spec.bond_dim:
        raise ShapeError(f"bond features {batch.edge_feat.shape} vs width {spec.bond_dim}")
    n_atoms = batch.atom_feat.shape[0]
    h = T.relu(T.add(T.matmul(Tensor(batch.atom_feat), params[f"{prefix}W_in"]), params[f"{prefix}b_in"]))
    edge = Tensor(batch.edge_feat)
    for _ in range(spec.depth):
        update = T.matmul(h, params[f"{prefix}W_self"])
        if len(batch.src):
            msg_in = T.concat([T.take_rows(h, batch.src), edge], axis=1)
            msgs = T.matmul(msg_in, params[f"{prefix}W_msg"])
            update = T.add(update, T.segment_sum(msgs, batch.dst, n_atoms))
        h = T.relu(T.add(update, params[f"{prefix}b_upd"]))
    return T.segment_mean(h, batch.graph_of, batch.n_graphs)
