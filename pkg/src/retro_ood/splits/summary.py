"""Distribution summaries behind the shift figures."""

from __future__ import annotations

from collections import Counter

from ..molgraph import scaffold_smiles
from .manifest import PARTITIONS, SplitManifest


def summarize_shift(manifest: SplitManifest, corpus, assignment: dict[str, str] | None = None) -> dict:
    """Per-partition template histogram, product-size histogram and scaffold counts.

    Histogram keys are strings so the result serializes to JSON unchanged.
    """
    if assignment is None:
        from ..templates import assign_corpus_templates

        assignment = assign_corpus_templates(list(corpus), manifest.template_radius).assignment
    by_id = {r.id: r for r in corpus}
    out: dict[str, dict] = {}
    for name in PARTITIONS:
        ids = manifest.partitions.get(name, [])
        templates = Counter(assignment.get(rid, "") for rid in ids)
        sizes = Counter(by_id[rid].product.heavy_atom_count() for rid in ids)
        scaffolds = Counter(scaffold_smiles(by_id[rid].product) for rid in ids)
        n = len(ids)
        out[name] = {
            "n": n,
            "template_histogram": dict(sorted(templates.items(), key=lambda kv: (-kv[1], kv[0]))),
            "size_histogram": {str(k): v for k, v in sorted(sizes.items())},
            "mean_size": (sum(k * v for k, v in sizes.items()) / n) if n else 0.0,
            "scaffold_classes": len(scaffolds),
            "acyclic": scaffolds.get("", 0),
        }
    id_keys = set()
    for name in ("train", "val", "test_id"):
        id_keys |= set(out[name]["template_histogram"])
    out["template_overlap"] = len(id_keys & set(out["test_ood"]["template_histogram"]))
    return out


def format_summary(summary: dict) -> str:
    rows = [f"{'partition':<10}{'n':>6}{'templates':>11}{'mean size':>11}{'scaffolds':>11}"]
    for name in PARTITIONS:
        s = summary[name]
        rows.append(f"{name:<10}{s['n']:>6}{len(s['template_histogram']):>11}"
                    f"{s['mean_size']:>11.2f}{s['scaffold_classes']:>11}")
    rows.append(f"ID/OOD template overlap: {summary['template_overlap']}")
    return "\n".join(rows)
