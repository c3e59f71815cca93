"""Fingerprint-to-template classifier trained under ERM or IRMv1."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..molgraph import MolecularGraph, circular_fingerprint
from ..numerics import (
    AdamState,
    MlpSpec,
    NonFinite,
    Tensor,
    adam_step,
    load_checkpoint,
    loss_and_grad,
    mlp,
    save_checkpoint,
)
from ..numerics import ops as T
from ..numerics.nn import glorot
from ..templates import Reaction, Template
from .irm import IrmConfig, bin_environments, irm_penalty_tensor

log = logging.getLogger(__name__)

MODES = ("erm", "irm")


@dataclass(frozen=True)
class ClassifierConfig:
    """Network and optimizer settings.

    ``hidden=()`` gives a linear model on the raw inputs.
    """

    hidden: tuple[int, ...] = (512,)
    dropout: float = 0.1
    fp_bits: int = 2048
    fp_radius: int = 2
    epochs: int = 30
    batch_size: int | None = 128
    lr: float = 1e-3
    center_head: bool = False
    center_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.epochs < 0 or (self.batch_size is not None and self.batch_size < 1):
            raise ValueError("need epochs >= 0 and a positive batch size")


def product_features(graphs: Sequence[MolecularGraph], cfg: ClassifierConfig) -> np.ndarray:
    """Hashed circular fingerprints of the products, one row each."""
    rows = [circular_fingerprint(g, cfg.fp_radius, cfg.fp_bits).bits for g in graphs]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), cfg.fp_bits)


def init_params(cfg: ClassifierConfig, input_dim: int, n_classes: int, n_center: int = 0,
                seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    if cfg.hidden:
        params.update(MlpSpec((input_dim,) + cfg.hidden).init(rng, "phi."))
    width = cfg.hidden[-1] if cfg.hidden else input_dim
    params["head.W"] = glorot(rng, width, n_classes)
    params["head.b"] = np.zeros(n_classes)
    if n_center:
        params["center.W"] = glorot(rng, width, n_center)
        params["center.b"] = np.zeros(n_center)
    return params


def forward(cfg: ClassifierConfig, p: Mapping[str, Tensor], x: np.ndarray, training: bool = False,
            seed=None) -> tuple[Tensor, Tensor | None]:
    """Template logits and, when present, center-head logits."""
    h = Tensor(x)
    if cfg.hidden:
        spec = MlpSpec((x.shape[1],) + cfg.hidden, cfg.dropout)
        h = T.relu(mlp(spec, p, "phi.", h, training, seed))
        if training and cfg.dropout > 0:
            keep = 1.0 - cfg.dropout
            mask = (np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0]).random(h.shape) < keep) / keep
            h = T.mul(h, mask)
    logits = T.add(T.matmul(h, p["head.W"]), p["head.b"])
    center = None
    if "center.W" in p:
        center = T.add(T.matmul(h, p["center.W"]), p["center.b"])
    return logits, center


def _cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    return T.mul(T.mean(T.pick(T.log_softmax(logits, axis=1), labels)), -1.0)


@dataclass
class ClassifierLog:
    mode: str
    lam: float
    epochs: list[dict] = field(default_factory=list)
    steps: int = 0


def fit_arrays(x: np.ndarray, y: np.ndarray, n_classes: int, cfg: ClassifierConfig, mode: str = "erm",
               irm: IrmConfig | None = None, env: np.ndarray | None = None, seed: int = 0,
               center_y: np.ndarray | None = None, n_center: int = 0,
               params: dict[str, np.ndarray] | None = None) -> tuple[dict[str, np.ndarray], ClassifierLog]:
    """Adam on pooled cross-entropy, plus the IRMv1 penalty in ``irm`` mode.

    After ``irm.warmup`` epochs the objective becomes
    ``CE + lam * penalty`` (divided by ``lam`` when ``lam > 1`` to keep the
    gradient scale). With ``lam == 0`` the penalty branch is never built,
    so the run matches ERM bit for bit. Raises :class:`NonFinite` when the
    loss or a gradient blows up.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    irm = irm or IrmConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n == 0:
        raise ValueError("no training rows")
    use_center = center_y is not None and n_center > 0
    if mode == "irm":
        if env is None:
            raise ValueError("irm mode needs environment labels")
        if irm.target == "center" and not use_center:
            raise ValueError("center-targeted penalty needs center labels")
        env = np.asarray(env, dtype=np.int64)
    if params is None:
        params = init_params(cfg, x.shape[1], n_classes, n_center if use_center else 0, seed)
    rng = np.random.default_rng(seed)
    state = AdamState(lr=cfg.lr)
    out = ClassifierLog(mode, irm.lam if mode == "irm" else 0.0)
    bs = cfg.batch_size or n
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        penalize = mode == "irm" and irm.lam > 0 and epoch >= irm.warmup
        risks, pens = [], []
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            step_seed = int(rng.integers(2**63))
            parts: dict[str, float] = {}

            def loss_fn(p, _):
                logits, center = forward(cfg, p, x[idx], True, step_seed)
                loss = _cross_entropy(logits, y[idx])
                parts["risk"] = float(loss.value)
                if use_center:
                    loss = T.add(loss, T.mul(_cross_entropy(center, center_y[idx]), cfg.center_weight))
                if penalize:
                    target, labels = (logits, y[idx]) if irm.target == "main" else (center, center_y[idx])
                    pen = irm_penalty_tensor(target, labels, env[idx])
                    parts["penalty"] = float(pen.value)
                    loss = T.add(loss, T.mul(pen, irm.lam))
                    if irm.lam > 1.0:
                        loss = T.mul(loss, 1.0 / irm.lam)
                return loss

            value, grads = loss_and_grad(loss_fn, params, None)
            if not math.isfinite(value):
                raise NonFinite(f"epoch {epoch}: loss {value}")
            params, state = adam_step(state, params, grads)
            risks.append(parts["risk"])
            pens.append(parts.get("penalty", 0.0))
        out.epochs.append({"epoch": epoch, "risk": float(np.mean(risks)), "penalty": float(np.mean(pens)),
                           "penalty_active": penalize, "steps": state.step})
        log.debug("epoch %d risk %.5f penalty %.5f", epoch, np.mean(risks), np.mean(pens))
    out.steps = state.step
    return params, out


def predict_scores(cfg: ClassifierConfig, params: Mapping[str, np.ndarray], x: np.ndarray,
                   chunk: int = 2048) -> np.ndarray:
    """Inference logits of the template head."""
    p = {k: Tensor(v) for k, v in params.items()}
    x = np.asarray(x, dtype=np.float64)
    parts = [forward(cfg, p, x[s : s + chunk])[0].value for s in range(0, len(x), chunk)]
    return np.concatenate(parts) if parts else np.zeros((0, params["head.b"].shape[0]))


@dataclass
class Classifier:
    """A trained template scorer with its frozen vocabulary."""

    cfg: ClassifierConfig
    radius: int
    vocab: tuple[str, ...]
    templates: dict[str, Template]
    params: dict[str, np.ndarray]
    center_vocab: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def scores(self, products: Sequence[MolecularGraph]) -> np.ndarray:
        scores = predict_scores(self.cfg, self.params, product_features(products, self.cfg))
        if not np.all(np.isfinite(scores)):
            raise NonFinite("non-finite template scores")
        return scores

    def rank_templates(self, product: MolecularGraph) -> list[tuple[str, float]]:
        return rank_from_scores(self.vocab, self.scores([product])[0])

    def save(self, path: str | Path) -> None:
        meta = {
            "kind": "template_classifier",
            "config": asdict(self.cfg),
            "radius": self.radius,
            "vocab": list(self.vocab),
            "center_vocab": list(self.center_vocab),
            "templates": {tid: self.templates[tid].canonical_string for tid in self.vocab},
            "frequency": {tid: self.templates[tid].frequency for tid in self.vocab},
            **self.meta,
        }
        save_checkpoint(path, self.params, meta)

    @classmethod
    def load(cls, path: str | Path) -> "Classifier":
        params, meta = load_checkpoint(path)
        cfg_d = dict(meta["config"])
        cfg_d["hidden"] = tuple(cfg_d["hidden"])
        cfg = ClassifierConfig(**cfg_d)
        radius = int(meta["radius"])
        templates = {
            tid: Template.from_string(s, radius, meta["frequency"].get(tid, 0), tid)
            for tid, s in meta["templates"].items()
        }
        extra = {k: v for k, v in meta.items()
                 if k not in ("kind", "config", "radius", "vocab", "center_vocab", "templates", "frequency")}
        return cls(cfg, radius, tuple(meta["vocab"]), templates, params, tuple(meta["center_vocab"]), extra)


def rank_from_scores(vocab: Sequence[str], scores: np.ndarray) -> list[tuple[str, float]]:
    """Vocabulary ordered by descending score, ties broken by template id."""
    return sorted(zip(vocab, (float(s) for s in scores)), key=lambda kv: (-kv[1], kv[0]))


def train_classifier(train: Sequence[Reaction], assignment: Mapping[str, str], templates: Mapping[str, Template],
                     radius: int, cfg: ClassifierConfig = ClassifierConfig(), mode: str = "erm",
                     irm: IrmConfig | None = None, seed: int = 0,
                     center_assignment: Mapping[str, str] | None = None) -> tuple[Classifier, ClassifierLog]:
    """Fit a classifier on ``train`` reactions labelled by ``assignment``.

    Reactions without an assigned template are dropped. Environments for
    IRM are binned on these training reactions only.
    """
    irm = irm or IrmConfig()
    rows = [r for r in train if r.id in assignment]
    if not rows:
        raise ValueError("no labelled training reactions")
    vocab = tuple(sorted({assignment[r.id] for r in rows}))
    col = {t: i for i, t in enumerate(vocab)}
    x = product_features([r.product for r in rows], cfg)
    y = np.array([col[assignment[r.id]] for r in rows], dtype=np.int64)
    env = None
    if mode == "irm":
        envs = bin_environments(rows, irm.criterion, irm.n_envs)
        env = np.array([envs[r.id] for r in rows], dtype=np.int64)
    center_vocab: tuple[str, ...] = ()
    center_y = None
    if cfg.center_head:
        if center_assignment is None:
            raise ValueError("center head needs a radius-0 assignment")
        center_vocab = tuple(sorted({center_assignment.get(r.id, "") for r in rows}))
        ccol = {t: i for i, t in enumerate(center_vocab)}
        center_y = np.array([ccol[center_assignment.get(r.id, "")] for r in rows], dtype=np.int64)
    params, train_log = fit_arrays(x, y, len(vocab), cfg, mode, irm, env, seed, center_y, len(center_vocab))
    meta = {"mode": mode, "seed": seed, "irm": asdict(irm) if mode == "irm" else None, "n_train": len(rows)}
    clf = Classifier(cfg, radius, vocab, {t: templates[t] for t in vocab}, params, center_vocab, meta)
    return clf, train_log
