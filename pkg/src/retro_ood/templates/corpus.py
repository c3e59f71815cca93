"""Corpus-level template assignment and template/assignment files."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .reaction import MappingError, Reaction
from .template import CenterError, Template, extract_template


@dataclass
class TemplateAssignment:
    radius: int
    assignment: dict[str, str]  # reaction id -> template id
    table: list[Template]  # frequency descending, then template id
    skipped: dict[str, str] = field(default_factory=dict)  # reaction id -> reason

    def by_id(self) -> dict[str, Template]:
        return {t.template_id: t for t in self.table}


def assign_corpus_templates(corpus: Sequence[Reaction], radius: int) -> TemplateAssignment:
    """One template per reaction at ``radius``, with a frequency table.

    Reactions whose center is empty or whose mapping is broken are listed in
    the skip report instead of raising.
    """
    assignment: dict[str, str] = {}
    templates: dict[str, Template] = {}
    counts: dict[str, int] = {}
    skipped: dict[str, str] = {}
    for r in corpus:
        try:
            t = extract_template(r, radius)
        except (CenterError, MappingError) as exc:
            skipped[r.id] = f"{type(exc).__name__}: {exc}"
            continue
        templates.setdefault(t.template_id, t)
        counts[t.template_id] = counts.get(t.template_id, 0) + 1
        assignment[r.id] = t.template_id
    for tid, t in templates.items():
        t.frequency = counts[tid]
    table = sorted(templates.values(), key=lambda t: (-t.frequency, t.template_id))
    return TemplateAssignment(radius, assignment, table, skipped)


def write_template_table(templates: Sequence[Template], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["template_id", "radius", "canonical_string", "frequency"])
        for t in templates:
            w.writerow([t.template_id, t.radius, t.canonical_string, t.frequency])


def read_template_table(path: str | Path) -> list[Template]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        for row in reader:
            out.append(Template.from_string(row["canonical_string"], int(row["radius"]),
                                            int(row["frequency"]), row["template_id"]))
    return out


def write_assignment(assignment: dict[str, str], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["reaction_id", "template_id"])
        for rid in sorted(assignment):
            w.writerow([rid, assignment[rid]])


def read_assignment(path: str | Path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["reaction_id"]: row["template_id"] for row in csv.DictReader(fh, delimiter="\t")}
