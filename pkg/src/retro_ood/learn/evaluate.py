"""Top-k exact-match evaluation over template rankings."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..molgraph import MolecularGraph
from ..templates import Reaction, Template, apply_template
from .classifier import Classifier, rank_from_scores

DEFAULT_KS = (1, 3, 5, 10)


def best_match_rank(ranked: Sequence[str], templates: Mapping[str, Template], product: MolecularGraph,
                    gt: str, k_max: int) -> int | None:
    """1-based position of ``gt`` among the first ``k_max`` distinct predictions.

    Templates are applied in ranked order; each yields its outcomes in
    sorted order. Templates without an outcome consume no slot.
    """
    seen: list[str] = []
    seen_set: set[str] = set()
    for tid in ranked:
        for outcome in sorted(apply_template(templates[tid], product)):
            if outcome in seen_set:
                continue
            seen.append(outcome)
            seen_set.add(outcome)
            if outcome == gt:
                return len(seen)
            if len(seen) >= k_max:
                return None
    return None


def topk_from_ranks(ranks: Sequence[int | None], ks: Sequence[int] = DEFAULT_KS) -> dict[int, float]:
    n = len(ranks)
    if n == 0:
        return {k: 0.0 for k in ks}
    return {k: sum(1 for r in ranks if r is not None and r <= k) / n for k in ks}


@dataclass
class EvalResult:
    """Top-k accuracy per partition plus each sample's best-match rank."""

    ks: tuple[int, ...]
    topk: dict[str, dict[int, float]] = field(default_factory=dict)
    ranks: dict[str, dict[str, int | None]] = field(default_factory=dict)

    def monotone(self) -> bool:
        ks = sorted(self.ks)
        return all(
            0.0 <= acc[ks[0]] and acc[ks[-1]] <= 1.0 and all(acc[a] <= acc[b] for a, b in zip(ks, ks[1:]))
            for acc in self.topk.values()
        )

    def to_dict(self) -> dict:
        return {part: {str(k): acc[k] for k in self.ks} for part, acc in self.topk.items()}

    def table(self) -> str:
        head = "partition".ljust(10) + "".join(f"top-{k}".rjust(9) for k in self.ks)
        lines = [head]
        for part, acc in self.topk.items():
            lines.append(part.ljust(10) + "".join(f"{100 * acc[k]:8.1f}%" for k in self.ks))
        return "\n".join(lines)


_WORKER: dict = {}


def _init_worker(templates: dict[str, Template]) -> None:
    _WORKER["templates"] = templates


def _worker_rank(job: tuple[list[str], MolecularGraph, str, int]) -> int | None:
    ranked, product, gt, k_max = job
    return best_match_rank(ranked, _WORKER["templates"], product, gt, k_max)


def evaluate_topk(clf: Classifier, partitions: Mapping[str, Sequence[Reaction]],
                  ks: Sequence[int] = DEFAULT_KS, n_jobs: int = 1) -> EvalResult:
    """Walk each product's template ranking and score exact matches.

    ``n_jobs > 1`` spreads samples over worker processes; results are
    collected in input order so the outcome does not depend on it.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise ValueError("ks must be positive")
    k_max = ks[-1]
    result = EvalResult(ks)
    for part, reactions in partitions.items():
        reactions = list(reactions)
        jobs = []
        if reactions:
            scores = clf.scores([r.product for r in reactions])
            for r, row in zip(reactions, scores):
                ranked = [tid for tid, _ in rank_from_scores(clf.vocab, row)]
                jobs.append((ranked, r.product, r.ground_truth, k_max))
        if n_jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(n_jobs, initializer=_init_worker, initargs=(clf.templates,)) as pool:
                ranks = list(pool.map(_worker_rank, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
        else:
            ranks = [best_match_rank(j[0], clf.templates, j[1], j[2], j[3]) for j in jobs]
        result.ranks[part] = {r.id: rank for r, rank in zip(reactions, ranks)}
        result.topk[part] = topk_from_ranks(ranks, ks)
    return result
