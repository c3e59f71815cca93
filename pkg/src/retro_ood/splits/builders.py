"""Label-shift and covariate-shift split construction."""

from __future__ import annotations

import math
import random
from typing import Sequence

from ..molgraph import scaffold_key
from ..templates import Reaction, assign_corpus_templates
from .manifest import InfeasibleSplit, SplitManifest, largest_remainder


def _assign(corpus: Sequence[Reaction], radius: int, assignment: dict[str, str] | None):
    if assignment is not None:
        return assignment, []
    result = assign_corpus_templates(corpus, radius)
    return result.assignment, sorted(result.skipped)


def _classes(ids: Sequence[str], assignment: dict[str, str]) -> dict[str, list[str]]:
    classes: dict[str, list[str]] = {}
    for rid in sorted(ids):
        classes.setdefault(assignment[rid], []).append(rid)
    return classes


def _split_711(ids: list[str], rng: random.Random) -> tuple[list[str], list[str], list[str]]:
    ids = sorted(ids)
    rng.shuffle(ids)
    n_train, n_val, _ = largest_remainder(len(ids))
    return ids[:n_train], ids[n_train : n_train + n_val], ids[n_train + n_val :]


def make_label_split(
    corpus: Sequence[Reaction],
    radius: int,
    ood_fraction: float = 0.1,
    seed: int = 0,
    assignment: dict[str, str] | None = None,
) -> SplitManifest:
    """Move whole template classes to ``test_ood`` until it holds the target share.

    Template ids are drawn uniformly (seeded) from classes no larger than
    twice the target count, so the last draw overshoots by less than that
    bound. The remaining reactions are shuffled and split 7:1:1 into
    ``train``, ``val`` and ``test_id``. Reactions without a template are
    recorded as discarded.
    """
    if not 0 < ood_fraction < 0.5:
        raise InfeasibleSplit(f"ood_fraction must lie in (0, 0.5), got {ood_fraction}")
    assignment, skipped = _assign(corpus, radius, assignment)
    ids = [r.id for r in corpus if r.id in assignment]
    discarded = sorted({r.id for r in corpus} - set(ids))
    if not ids:
        raise InfeasibleSplit("no reaction has a template")
    classes = _classes(ids, assignment)
    target = ood_fraction * len(ids)
    limit = 2 * math.ceil(target)
    pool = sorted(t for t, members in classes.items() if len(members) <= limit)
    if sum(len(classes[t]) for t in pool) < target:
        raise InfeasibleSplit(
            f"classes small enough for the OOD budget hold fewer than {target:.1f} reactions"
        )
    rng = random.Random(seed)
    ood_templates: list[str] = []
    n_ood = 0
    while n_ood < target:
        t = pool.pop(rng.randrange(len(pool)))
        ood_templates.append(t)
        n_ood += len(classes[t])
    ood_set = set(ood_templates)
    ood = sorted(rid for t in ood_templates for rid in classes[t])
    rest = [rid for rid in ids if assignment[rid] not in ood_set]
    train, val, test_id = _split_711(rest, rng)
    id_templates = {assignment[rid] for rid in rest}
    manifest = SplitManifest(
        "label_minimal" if radius == 0 else "label_retro",
        seed,
        {"train": sorted(train), "val": sorted(val), "test_id": sorted(test_id), "test_ood": ood},
        radius,
        {
            "ood_fraction": ood_fraction,
            "target_ood_count": target,
            "counts": {"train": len(train), "val": len(val), "test_id": len(test_id), "test_ood": len(ood)},
            "discarded": discarded,
            "skipped_extraction": skipped,
            "ood_templates": sorted(ood_templates),
            "template_classes": {"id": len(id_templates), "ood": len(ood_set)},
        },
    )
    return manifest


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def product_size(r: Reaction) -> int:
    return r.product.heavy_atom_count()


def make_covariate_split(
    corpus: Sequence[Reaction],
    criterion: str = "size",
    min_class_size: int = 10,
    ood_fraction: float = 0.1,
    seed: int = 0,
    assignment: dict[str, str] | None = None,
) -> SplitManifest:
    """Per minimal-template class, send the largest products to ``test_ood``.

    Classes smaller than ``min_class_size`` are discarded. Within a class,
    reactions are ordered by product heavy-atom count (``size``) or by the
    scaffold key (ring count, scaffold heavy atoms, scaffold string) for
    ``scaffold``, ties broken by id. The top ``max(1, round(n * f))`` go to
    ``test_ood`` and the rest is split 7:1:1 at random.
    """
    if criterion not in ("size", "scaffold"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if min_class_size < 2:
        raise ValueError("min_class_size must be at least 2")
    if not 0 < ood_fraction < 1:
        raise InfeasibleSplit(f"ood_fraction must lie in (0, 1), got {ood_fraction}")
    assignment, skipped = _assign(corpus, 0, assignment)
    by_id = {r.id: r for r in corpus}
    ids = [r.id for r in corpus if r.id in assignment]
    classes = _classes(ids, assignment)
    kept = {t: m for t, m in classes.items() if len(m) >= min_class_size}
    if not kept:
        raise InfeasibleSplit(f"no template class has {min_class_size} or more reactions")
    discarded = sorted(set(by_id) - {rid for m in kept.values() for rid in m})

    if criterion == "size":
        key = lambda rid: (product_size(by_id[rid]), rid)  # noqa: E731
    else:
        key = lambda rid: (scaffold_key(by_id[rid].product), rid)  # noqa: E731
    rng = random.Random(seed)
    parts: dict[str, list[str]] = {"train": [], "val": [], "test_id": [], "test_ood": []}
    per_class = {}
    for t in sorted(kept):
        members = sorted(kept[t], key=key)
        n_ood = min(len(members) - 1, max(1, round_half_up(len(members) * ood_fraction)))
        parts["test_ood"] += members[len(members) - n_ood :]
        train, val, test_id = _split_711(members[: len(members) - n_ood], rng)
        parts["train"] += train
        parts["val"] += val
        parts["test_id"] += test_id
        per_class[t] = {"train": len(train), "val": len(val), "test_id": len(test_id), "test_ood": n_ood}
    parts = {k: sorted(v) for k, v in parts.items()}
    return SplitManifest(
        f"covariate_{criterion}",
        seed,
        parts,
        0,
        {
            "ood_fraction": ood_fraction,
            "criterion": criterion,
            "min_class_size": min_class_size,
            "counts": {k: len(v) for k, v in parts.items()},
            "discarded": discarded,
            "skipped_extraction": skipped,
            "template_classes": {"retained": len(kept), "discarded": len(classes) - len(kept)},
            "per_class": per_class,
        },
    )
