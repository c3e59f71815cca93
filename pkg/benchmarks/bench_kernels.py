"""Compiled versus pure-Python embedding search on the desk corpus.

Runs every radius-1 product pattern against a sample of products with both
backends, checks that they return identical embeddings and reports timings.

Usage: python3 benchmarks/bench_kernels.py [--products N] [--repeat R]
"""

from __future__ import annotations

import argparse
import sys
import time
from importlib import resources

import numpy as np

from retro_ood.kernels import find_embeddings_cy, find_embeddings_py
from retro_ood.templates import assign_corpus_templates, read_corpus
from retro_ood.templates.match import compile_pattern, kernel_args, target_arrays


def jobs(n_products: int) -> list[tuple]:
    corpus = read_corpus(resources.files("retro_ood") / "data" / "desk_corpus.tsv")
    table = assign_corpus_templates(corpus, 1).table
    patterns = [compile_pattern(t.product_pattern) for t in table]
    targets = [target_arrays(r.product) for r in corpus[:n_products]]
    return [kernel_args(p, t) for p in patterns for t in targets
            if len(p.order) <= len(t.labels)
            and all(t.label_counts.get(lab, 0) >= c for lab, c in p.label_counts.items())]


def run(kernel, work, repeat: int) -> tuple[float, list[np.ndarray]]:
    best = float("inf")
    out: list[np.ndarray] = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = [kernel(*args) for args in work]
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--products", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    work = jobs(args.products)
    print(f"{len(work)} pattern/target pairs after the label-count prefilter")
    t_py, out_py = run(find_embeddings_py, work, args.repeat)
    print(f"python : {t_py * 1e3:9.1f} ms")
    if find_embeddings_cy is None:
        print("compiled backend not built; nothing to compare")
        return 0
    t_cy, out_cy = run(find_embeddings_cy, work, args.repeat)
    same = all(np.array_equal(a, b) for a, b in zip(out_py, out_cy))
    print(f"cython : {t_cy * 1e3:9.1f} ms   speedup x{t_py / t_cy:.1f}   identical={same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
