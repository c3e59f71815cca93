"""Two-environment task with one invariant and one spurious feature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_AGREEMENT = (0.95, 0.85)
TEST_AGREEMENT = 0.10
INVARIANT_AGREEMENT = 0.90


@dataclass
class EnvTask:
    x_train: np.ndarray
    y_train: np.ndarray
    env_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def _feature(rng: np.random.Generator, sign: np.ndarray, agreement: float, jitter: float) -> np.ndarray:
    # +-1 code that agrees with the label sign with probability ``agreement``
    keep = rng.random(len(sign)) < agreement
    return np.where(keep, sign, -sign) + jitter * rng.standard_normal(len(sign))


def make_env_task(n_per_env: int = 1000, n_test: int = 4000, n_noise: int = 0, jitter: float = 0.1,
                  seed: int = 0, train_agreement: tuple[float, ...] = TRAIN_AGREEMENT,
                  test_agreement: float = TEST_AGREEMENT,
                  invariant_agreement: float = INVARIANT_AGREEMENT) -> EnvTask:
    """Columns are ``[invariant, spurious, noise...]`` with balanced binary labels.

    The invariant column agrees with the label with the same probability in
    every environment; the spurious column's agreement changes between
    environments and flips at test time. Both are +-1 codes with a little
    Gaussian jitter; optional extra columns are pure noise.
    """
    rng = np.random.default_rng(seed)

    def block(n: int, spurious: float) -> tuple[np.ndarray, np.ndarray]:
        y = rng.integers(0, 2, n)
        sign = 2.0 * y - 1.0
        cols = [_feature(rng, sign, invariant_agreement, jitter), _feature(rng, sign, spurious, jitter)]
        cols += [rng.standard_normal(n) for _ in range(n_noise)]
        return np.stack(cols, axis=1), y

    xs, ys, envs = [], [], []
    for e, agree in enumerate(train_agreement):
        x, y = block(n_per_env, agree)
        xs.append(x)
        ys.append(y)
        envs.append(np.full(n_per_env, e))
    x_test, y_test = block(n_test, test_agreement)
    return EnvTask(np.concatenate(xs), np.concatenate(ys), np.concatenate(envs), x_test, y_test)


def accuracy(scores: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == y))
