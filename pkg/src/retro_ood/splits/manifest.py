"""Split manifests, their file format and validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

PARTITIONS = ("train", "val", "test_id", "test_ood")
SPLIT_KINDS = ("label_minimal", "label_retro", "covariate_size", "covariate_scaffold")


class InfeasibleSplit(ValueError):
    """The requested split cannot be built from this corpus."""


@dataclass
class SplitManifest:
    split_kind: str
    seed: int
    partitions: dict[str, list[str]]
    template_radius: int
    metadata: dict = field(default_factory=dict)

    @property
    def is_label(self) -> bool:
        return self.split_kind.startswith("label")

    def id_side(self) -> list[str]:
        return self.partitions["train"] + self.partitions["val"] + self.partitions["test_id"]

    def partition_of(self) -> dict[str, str]:
        return {rid: name for name, ids in self.partitions.items() for rid in ids}

    def to_dict(self) -> dict:
        return {
            "split_kind": self.split_kind,
            "seed": self.seed,
            "partitions": {k: list(self.partitions.get(k, [])) for k in PARTITIONS},
            "template_radius": self.template_radius,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "SplitManifest":
        return cls(d["split_kind"], int(d["seed"]), {k: list(v) for k, v in d["partitions"].items()},
                   int(d["template_radius"]), dict(d.get("metadata", {})))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def largest_remainder(n: int, weights: tuple[int, ...] = (7, 1, 1)) -> list[int]:
    """Integer counts summing to ``n`` proportional to ``weights``.

    Leftover units go to the largest fractional parts; ties favour earlier
    positions.
    """
    total = sum(weights)
    exact = [n * w / total for w in weights]
    counts = [int(x) for x in exact]
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


@dataclass
class ValidationReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(p for _, p, _ in self.checks)

    def failures(self) -> list[str]:
        return [name for name, p, _ in self.checks if not p]

    def lines(self) -> list[str]:
        return [f"{'PASS' if p else 'FAIL'} {name}{': ' + d if d else ''}" for name, p, d in self.checks]


def validate_manifest(manifest: SplitManifest, corpus, assignment: dict[str, str] | None = None) -> ValidationReport:
    """Check every manifest invariant; failures are reported, never raised.

    ``assignment`` maps reaction ids to template ids at the manifest's radius
    (radius 0 for covariate splits); it is recomputed when omitted.
    """
    report = ValidationReport()
    parts = manifest.partitions
    structural = (
        set(parts) == set(PARTITIONS)
        and manifest.split_kind in SPLIT_KINDS
        and all(parts[k] for k in ("train", "test_ood"))
    )
    report.add("structure", structural,
               "" if structural else "missing partitions, unknown kind or empty train/test_ood")
    if not structural:
        return report

    all_ids = [rid for k in PARTITIONS for rid in parts[k]]
    report.add("disjoint", len(all_ids) == len(set(all_ids)),
               f"{len(all_ids) - len(set(all_ids))} duplicated ids")
    discarded = set(manifest.metadata.get("discarded", []))
    corpus_ids = {r.id for r in corpus}
    covered = set(all_ids) | discarded
    report.add("coverage", covered == corpus_ids,
               f"{len(corpus_ids - covered)} missing, {len(covered - corpus_ids)} unknown")
    report.add("discard_disjoint", not (discarded & set(all_ids)))

    if assignment is None:
        from ..templates import assign_corpus_templates

        assignment = assign_corpus_templates(list(corpus), manifest.template_radius).assignment
    if manifest.is_label:
        id_templates = {assignment.get(rid) for rid in manifest.id_side()}
        ood_templates = {assignment.get(rid) for rid in parts["test_ood"]}
        shared = (id_templates & ood_templates) - {None}
        report.add("template_disjoint", not shared, f"{len(shared)} shared templates")
    else:
        classes: dict[str, set[str]] = {}
        for name in PARTITIONS:
            for rid in parts[name]:
                classes.setdefault(assignment.get(rid), set()).add(name)
        missing = sorted(str(t) for t, sides in classes.items() if not {"train", "test_ood"} <= sides)
        report.add("class_both_sides", not missing, f"{len(missing)} classes missing a side")
        min_size = manifest.metadata.get("min_class_size")
        if min_size is not None:
            sizes: dict[str, int] = {}
            for rid in all_ids:
                sizes[assignment.get(rid)] = sizes.get(assignment.get(rid), 0) + 1
            small = [t for t, n in sizes.items() if n < min_size]
            report.add("min_class_size", not small, f"{len(small)} retained classes below {min_size}")
    return report
