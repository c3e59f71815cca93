"""Command-line pipeline: extract-templates, split, enhance, train, eval.

Exit codes: 0 success, 2 I/O or configuration error, 3 empty output,
4 infeasible split, 5 invariant breach, 6 non-finite training.
Artifacts go to ``--out-dir``, else ``$RETRO_OOD_OUTPUT_DIR``, else
``./retro_ood_out``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

OUTPUT_ENV = "RETRO_OOD_OUTPUT_DIR"
DEFAULT_OUTPUT = "retro_ood_out"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")

EXIT_OK, EXIT_IO, EXIT_EMPTY, EXIT_INFEASIBLE, EXIT_INVARIANT, EXIT_NONFINITE = 0, 2, 3, 4, 5, 6

log = logging.getLogger("retro_ood")


class EmptyOutput(RuntimeError):
    """A command would write an artifact with nothing in it."""


class InvariantViolation(RuntimeError):
    """An artifact failed a check that must hold before it is written."""


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _ids_digest(ids) -> str:
    return hashlib.sha256("\n".join(sorted(ids)).encode()).hexdigest()


def output_dir(args) -> Path:
    out = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(path: str):
    from .templates import read_corpus

    errors: list = []
    corpus = read_corpus(path, errors=errors)
    for lineno, rid, msg in errors:
        log.warning("%s:%d (%s) skipped: %s", path, lineno, rid, msg)
    if not corpus:
        raise EmptyOutput(f"no readable reactions in {path}")
    return corpus, errors


def _load_manifest(path: str):
    from .splits import SplitManifest

    return SplitManifest.load(path)


def _by_partition(manifest, corpus) -> dict[str, list]:
    by_id = {r.id: r for r in corpus}
    missing = [i for ids in manifest.partitions.values() for i in ids if i not in by_id]
    if missing:
        raise InvariantViolation(f"manifest lists {len(missing)} ids absent from the corpus, e.g. {missing[0]}")
    return {p: [by_id[i] for i in ids] for p, ids in manifest.partitions.items()}


def _classifier_radius(args, manifest) -> int:
    if args.radius is not None:
        return args.radius
    return manifest.template_radius if manifest.is_label else 1


# ----------------------------------------------------------------------------- commands


def cmd_extract(args) -> int:
    from .templates import assign_corpus_templates, write_assignment, write_template_table

    out = output_dir(args)
    corpus, parse_errors = _load_corpus(args.corpus)
    report = {"command": "extract-templates", "corpus": str(args.corpus), "corpus_sha256": _sha256(args.corpus),
              "seed": args.seed, "parse_errors": [list(e) for e in parse_errors], "radii": {}}
    empty = []
    for radius in sorted(set(args.radius)):
        assigned = assign_corpus_templates(corpus, radius)
        write_template_table(assigned.table, out / f"templates_r{radius}.tsv")
        write_assignment(assigned.assignment, out / f"assignment_r{radius}.tsv")
        report["radii"][str(radius)] = {
            "reactions": len(corpus),
            "templates": len(assigned.table),
            "assigned": len(assigned.assignment),
            "skipped": [[rid, reason] for rid, reason in sorted(assigned.skipped.items())],
        }
        print(f"radius {radius}: {len(assigned.table)} templates, {len(assigned.assignment)} assigned, "
              f"{len(assigned.skipped)} skipped")
        if not assigned.table:
            empty.append(radius)
    _write_json(out / "extract_report.json", report)
    if empty:
        raise EmptyOutput(f"no templates extracted at radius {empty}")
    return EXIT_OK


def cmd_split(args) -> int:
    from .splits import format_summary, make_covariate_split, make_label_split, summarize_shift, validate_manifest
    from .templates import read_assignment

    out = output_dir(args)
    corpus, _ = _load_corpus(args.corpus)
    if args.kind.startswith("label"):
        radius = 0 if args.kind == "label_minimal" else (args.radius if args.radius is not None else 1)
        if args.kind == "label_retro" and radius < 1:
            raise ValueError("label_retro needs radius >= 1")
        assignment = read_assignment(args.assignment) if args.assignment else None
        manifest = make_label_split(corpus, radius, args.ood_fraction, args.seed, assignment)
    else:
        criterion = args.kind.split("_", 1)[1]
        assignment = read_assignment(args.assignment) if args.assignment else None
        manifest = make_covariate_split(corpus, criterion, args.min_class_size, args.ood_fraction, args.seed,
                                        assignment)
    report = validate_manifest(manifest, corpus, assignment)
    for line in report.lines():
        print(line)
    if not report.ok:
        raise InvariantViolation("split validation failed: " + ", ".join(report.failures()))
    path = out / f"split_{manifest.split_kind}.json"
    manifest.save(path)
    summary = summarize_shift(manifest, corpus, assignment)
    _write_json(out / f"split_{manifest.split_kind}_summary.json",
                {"seed": args.seed, "manifest_digest": manifest.digest(), "summary": summary})
    print(format_summary(summary))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_enhance(args) -> int:
    from .enhance import EncoderConfig, EnhanceConfig, InvariantBreach, run_enhancement, write_edges
    from .numerics import save_checkpoint
    from .templates import write_corpus

    out = output_dir(args)
    corpus, _ = _load_corpus(args.corpus)
    manifest = _load_manifest(args.split)
    parts = _by_partition(manifest, corpus)
    train = parts["train"]
    if not train:
        raise EmptyOutput("split has an empty train partition")
    cfg = EnhanceConfig(k=args.k, m_max=args.m_max, n=args.n, tau=args.tau, epochs=args.epochs,
                        batch_size=args.batch_size, lr=args.lr, max_steps=args.max_steps,
                        include_positive=args.include_positive, select_highest=args.select_highest)
    enc = EncoderConfig(kind=args.encoder, hidden=args.hidden, embed=args.embed, dropout=args.dropout,
                        depth=args.depth, head_hidden=args.hidden, fp_bits=args.fp_bits, fp_radius=args.fp_radius)
    try:
        result = run_enhancement(train, args.radius, cfg, enc, seed=args.seed, strict=True)
    except InvariantBreach as exc:
        raise InvariantViolation(str(exc)) from exc
    if not result.g_full.gt:
        raise EmptyOutput("no ground-truth edges in the training partition")
    tag = args.name or f"enhance_{manifest.split_kind}"
    edges_path = out / f"{tag}_edges.tsv"
    write_edges(edges_path, result.g_enh, result.denoise.selected, result.denoise.energies)
    meta = dict(result.model.meta(), seed=args.seed, manifest_digest=manifest.digest(), radius=args.radius)
    save_checkpoint(out / f"{tag}_ebm.ckpt", result.model.params, meta)
    train_ids = {r.id for r in train}
    enhanced_rows = list(train) + result.reactions
    if not train_ids.isdisjoint(r.id for r in result.reactions):
        raise InvariantViolation("enhanced reaction ids collide with training ids")
    write_corpus(enhanced_rows, out / f"{tag}_corpus.tsv", provenance=True)
    report = {
        "command": "enhance", "seed": args.seed, "manifest_digest": manifest.digest(),
        "config": asdict(cfg), "encoder": result.model.meta()["encoder"],
        "counts": result.counts(), "sandwich": {name: ok for name, ok in result.sandwich},
        "train_log": {"epochs": result.train_log.epochs, "steps": result.train_log.steps,
                      "skipped_no_negatives": result.train_log.skipped_no_negatives},
        "reads_only_train": True,
    }
    _write_json(out / f"{tag}_report.json", report)
    for name, ok in result.sandwich:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(json.dumps(result.counts(), sort_keys=True))
    return EXIT_OK


def _enhanced_rows(path: str, train) -> list:
    from .templates import read_corpus

    rows = [r for r in read_corpus(path) if r.provenance == "enhanced"]
    train_products = {r.product_smiles for r in train}
    leaked = [r.id for r in rows if r.product_smiles not in train_products]
    if leaked:
        raise InvariantViolation(f"{len(leaked)} enhanced reactions have products outside the train partition")
    return rows


def cmd_train(args) -> int:
    from .learn import ClassifierConfig, IrmConfig, train_classifier
    from .templates import assign_corpus_templates

    out = output_dir(args)
    corpus, _ = _load_corpus(args.corpus)
    manifest = _load_manifest(args.split)
    parts = _by_partition(manifest, corpus)
    train = parts["train"]
    enhanced = _enhanced_rows(args.enhanced, train) if args.enhanced else []
    rows = enhanced + train
    radius = _classifier_radius(args, manifest)
    assigned = assign_corpus_templates(rows, radius)
    center = assign_corpus_templates(rows, 0).assignment if args.center_head else None
    cfg = ClassifierConfig(hidden=tuple(args.hidden), dropout=args.dropout, fp_bits=args.fp_bits,
                           fp_radius=args.fp_radius, epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                           center_head=args.center_head)
    irm = IrmConfig(lam=args.lam, n_envs=args.n_envs, criterion=args.env_criterion, warmup=args.warmup,
                    target=args.penalty_target)
    clf, train_log = train_classifier(rows, assigned.assignment, assigned.by_id(), radius, cfg, args.mode, irm,
                                      args.seed, center)
    clf.meta.update({"manifest_digest": manifest.digest(), "split_kind": manifest.split_kind,
                     "enhanced_rows": len(enhanced),
                     "enhanced_sha256": _sha256(args.enhanced) if args.enhanced else None})
    name = args.name or f"{manifest.split_kind}_{args.mode}"
    clf.save(out / f"{name}.ckpt")
    _write_json(out / f"{name}_train_log.json", {
        "command": "train", "seed": args.seed, "mode": args.mode, "radius": radius,
        "manifest_digest": manifest.digest(), "vocab_size": len(clf.vocab), "n_train": len(rows),
        "enhanced_rows": len(enhanced), "epochs": train_log.epochs, "steps": train_log.steps,
    })
    print(f"trained {args.mode} classifier over {len(clf.vocab)} templates on {len(rows)} reactions")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .learn import Classifier, evaluate_topk

    out = output_dir(args)
    corpus, _ = _load_corpus(args.corpus)
    manifest = _load_manifest(args.split)
    parts = _by_partition(manifest, corpus)
    clf = Classifier.load(args.checkpoint)
    if clf.meta.get("manifest_digest") not in (None, manifest.digest()):
        raise InvariantViolation("checkpoint was trained on a different split manifest")
    wanted = (["train"] if args.include_train else []) + ["test_id", "test_ood"]
    n_jobs = 1 if args.deterministic else args.n_jobs
    result = evaluate_topk(clf, {p: parts[p] for p in wanted}, args.ks, n_jobs=n_jobs)
    if not result.monotone():
        raise InvariantViolation("top-k accuracy is not monotone in k")
    name = args.name or Path(args.checkpoint).stem
    _write_json(out / f"{name}_metrics.json", {
        "command": "eval", "seed": clf.meta.get("seed"), "mode": clf.meta.get("mode"),
        "split_kind": manifest.split_kind, "manifest_digest": manifest.digest(),
        "test_digest": {p: _ids_digest(manifest.partitions[p]) for p in ("test_id", "test_ood")},
        "checkpoint_sha256": _sha256(args.checkpoint), "n": {p: len(parts[p]) for p in wanted},
        "metrics": result.to_dict(),
        "ranks": {p: {rid: r for rid, r in sorted(ranks.items())} for p, ranks in result.ranks.items()},
    })
    print(result.table())
    return EXIT_OK


# ----------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="retro-ood", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None, help=f"artifact directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("--seed", type=int, default=0, help="root seed, recorded in every artifact")
    common.add_argument("--deterministic", action="store_true", help="single-threaded numerics and evaluation")
    common.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-templates", parents=[common], help="extract and assign templates")
    p.add_argument("--corpus", required=True)
    p.add_argument("--radius", type=int, nargs="+", default=[0, 1])
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("split", parents=[common], help="build a label or covariate split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", required=True,
                   choices=["label_minimal", "label_retro", "covariate_size", "covariate_scaffold"])
    p.add_argument("--radius", type=int, default=None, help="template radius for label_retro (default 1)")
    p.add_argument("--ood-fraction", type=float, default=0.1)
    p.add_argument("--min-class-size", type=int, default=10)
    p.add_argument("--assignment", default=None, help="reuse an assignment TSV from extract-templates")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("enhance", parents=[common], help="EBM concept enhancement on the train partition")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m-max", type=int, default=100)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--include-positive", action="store_true")
    p.add_argument("--select-highest", action="store_true")
    p.add_argument("--encoder", choices=["dense", "mpnn"], default="dense")
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--embed", type=int, default=256)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--fp-bits", type=int, default=2048)
    p.add_argument("--fp-radius", type=int, default=2)
    p.add_argument("--name", default=None, help="artifact prefix (default enhance_<split kind>)")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("train", parents=[common], help="train the reference classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--mode", choices=["erm", "irm"], default="erm")
    p.add_argument("--enhanced", default=None, help="enhanced corpus from the enhance command")
    p.add_argument("--radius", type=int, default=None,
                   help="template radius (default: the split's radius for label splits, 1 otherwise)")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--n-envs", type=int, default=4)
    p.add_argument("--env-criterion", choices=["size", "scaffold"], default="size")
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--penalty-target", choices=["main", "center"], default="main")
    p.add_argument("--center-head", action="store_true")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, nargs="*", default=[512])
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--fp-bits", type=int, default=2048)
    p.add_argument("--fp-radius", type=int, default=2)
    p.add_argument("--name", default=None, help="checkpoint name (default <split kind>_<mode>)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="top-k exact-match evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ks", type=int, nargs="+", default=[1, 3, 5, 10])
    p.add_argument("--include-train", action="store_true")
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--name", default=None, help="report name (default: checkpoint stem)")
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.deterministic:
        for var in THREAD_VARS:
            os.environ[var] = "1"
    # imported late so the thread settings above reach the numeric backends
    from .learn import TooFewSamples
    from .numerics import NonFinite
    from .splits import InfeasibleSplit

    try:
        return args.func(args)
    except (InfeasibleSplit, TooFewSamples) as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EmptyOutput as exc:
        print(f"error: empty output: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except InvariantViolation as exc:
        print(f"error: invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NonFinite as exc:
        print(f"error: non-finite values: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
