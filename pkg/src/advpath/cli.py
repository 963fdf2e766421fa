"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path as FsPath

import numpy as np

from . import _backend
from .classifier import (
    DimensionMismatch,
    Hyperparams,
    LabeledImageSet,
    ModelFormatError,
    SingleClassData,
    dumps_model,
    load_model,
    split,
    train,
)
from .gridworld import ValidationError
from .imaging import rasterize, to_ppm
from .metrics import SingleClassTestSet, curve_csv, curve_svg, evaluate, timing_bench
from .perturb import PLACEMENTS, GenConfig, GenerationExhausted, NoCandidateCell
from .pipeline import (
    PROTOCOLS,
    ModelMissing,
    adversarial_examples,
    balance,
    generate_pairs,
    identify,
    image_set,
    label_records,
    labeled_records,
    plan_records,
    run_experiment,
)
from .planner import PlannerConfig
from .storage import (
    DatasetError,
    Manifest,
    atomic_write_bytes,
    atomic_write_text,
    import_external_records,
    read_records,
    write_records,
)
from .taxonomy import Label, TaxonomyConfig

log = logging.getLogger("advpath")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DATA_ERRORS = (
    DatasetError,
    ValidationError,
    ModelFormatError,
    DimensionMismatch,
    SingleClassData,
    SingleClassTestSet,
    ModelMissing,
    GenerationExhausted,
    NoCandidateCell,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 28x28, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return w, h


# -- config resolution -------------------------------------------------------

def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        return json.loads(FsPath(args.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read config {args.config}: {exc}") from exc


def _grid(args, cfg: dict) -> tuple[int, int]:
    if args.grid:
        return args.grid
    if "grid" in cfg:
        return int(cfg["grid"]["width"]), int(cfg["grid"]["height"])
    return 28, 28


def gen_config(args, cfg: dict) -> GenConfig:
    w, h = _grid(args, cfg)
    base = GenConfig.from_dict(cfg["gen_config"]) if cfg.get("gen_config") else GenConfig()
    base = replace(base, width=w, height=h)
    overrides = {
        "obstacle_density": getattr(args, "density", None),
        "placement": getattr(args, "placement", None),
        "radius": getattr(args, "radius", None),
        "require_reachable": getattr(args, "require_reachable", None),
        "seed": args.seed,
    }
    return replace(base, **{k: v for k, v in overrides.items() if v is not None})


def planner_config(args, cfg: dict) -> PlannerConfig:
    base = PlannerConfig.from_dict(cfg["planner_config"]) if cfg.get("planner_config") else PlannerConfig()
    overrides = {
        "mode": getattr(args, "mode", None),
        "max_iterations": getattr(args, "iterations", None),
        "max_rollout_steps": getattr(args, "rollout_steps", None),
    }
    return replace(base, **{k: v for k, v in overrides.items() if v is not None})


def taxonomy_config(args, cfg: dict) -> TaxonomyConfig:
    threshold = args.threshold
    if threshold is None:
        threshold = (cfg.get("taxonomy_config") or {}).get("threshold", 4)
    return TaxonomyConfig(threshold=threshold)


def hyperparams(args) -> Hyperparams:
    return Hyperparams(C=args.C, tol=args.tol, max_passes=args.max_passes, seed=args.seed or 0)


def _out(args) -> FsPath:
    out = FsPath(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_from(existing: Manifest, **changes) -> Manifest:
    return replace(existing, record_count=0, content_hash="", created="", **changes)


# -- image set files ---------------------------------------------------------

def save_images(path, data: LabeledImageSet, width: int, height: int) -> None:
    import io

    buf = io.BytesIO()
    np.savez_compressed(
        buf,
        X=data.X.astype(np.uint8),
        labels=np.array(data.labels, dtype="U3"),
        provenance=np.array(data.provenance, dtype="U64"),
        grid=np.array([width, height]),
        source=np.array(data.source),
    )
    atomic_write_bytes(path, buf.getvalue())


def load_images(path) -> tuple[LabeledImageSet, int, int]:
    try:
        with np.load(path, allow_pickle=False) as z:
            w, h = (int(v) for v in z["grid"])
            data = LabeledImageSet(
                z["X"].astype(np.float64),
                tuple(str(v) for v in z["labels"]),
                tuple(str(v) for v in z["provenance"]),
                str(z["source"]),
            )
    except (OSError, KeyError, ValueError) as exc:
        raise DatasetError(f"cannot read image set {path}: {exc}") from exc
    return data, w, h


# -- subcommands -------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load_config(args)
    gen = gen_config(args, cfg)
    planner = planner_config(args, cfg)
    tax = taxonomy_config(args, cfg)
    records = generate_pairs(gen, planner, args.count, gen.seed, with_paths=False)
    path = _out(args) / "dataset.rec"
    m = write_records(path, records, Manifest(
        "generated", gen.width, gen.height,
        gen_config=gen.to_dict(), planner_config=planner.to_dict(),
        taxonomy_config={"threshold": tax.threshold},
    ))
    print(f"wrote {m.record_count} map pairs to {path}")
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg = _load_config(args)
    records, manifest = read_records(args.input)
    planner = planner_config(args, cfg or {"planner_config": manifest.planner_config})
    planned = plan_records(records, planner, manifest.width, manifest.height)
    path = _out(args) / "planned.rec"
    write_records(path, planned, _manifest_from(
        manifest, dataset_id=manifest.dataset_id + "-planned", planner_config=planner.to_dict()
    ))
    print(f"planned {len(planned)} pairs -> {path}")
    return EXIT_OK


def cmd_label(args) -> int:
    cfg = _load_config(args)
    records, manifest = read_records(args.input)
    tax = taxonomy_config(args, cfg or {"taxonomy_config": manifest.taxonomy_config})
    labeled = label_records(records, tax)
    path = _out(args) / "labeled.rec"
    write_records(path, labeled, _manifest_from(
        manifest, dataset_id=manifest.dataset_id + "-labeled",
        taxonomy_config={"threshold": tax.threshold},
    ))
    _print_counts(labeled)
    print(f"-> {path}")
    return EXIT_OK


def _print_counts(records) -> None:
    for lab in Label:
        print(f"{lab.value}\t{sum(r.label == lab.value for r in records)}")


def cmd_rasterize(args) -> int:
    records, manifest = read_records(args.input)
    w, h = manifest.width, manifest.height
    out = _out(args)
    data = image_set(records, w, h, source=manifest.content_hash)
    save_images(out / "images.npz", data, w, h)
    if args.ppm:
        ppm_dir = out / "ppm"
        ppm_dir.mkdir(exist_ok=True)
        for r in records:
            if r.has_paths:
                atomic_write_text(ppm_dir / f"{r.no:06d}.ppm", to_ppm(rasterize(r.path_pair(), w, h)))
    print(f"{len(data)} FP/DP images -> {out / 'images.npz'}")
    return EXIT_OK


def cmd_augment(args) -> int:
    data, w, h = load_images(args.images)
    balanced = balance(data, w, h, args.seed or 0)
    path = _out(args) / "images_balanced.npz"
    save_images(path, balanced, w, h)
    print(f"{len(data)} -> {len(balanced)} images -> {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    data, w, h = load_images(args.images)
    seed = args.seed or 0
    if args.protocol == "augment-then-split":
        train_set, test_set = split(balance(data, w, h, seed), args.train_fraction, seed)
    elif args.protocol == "split-then-augment":
        tr, test_set = split(data, args.train_fraction, seed)
        train_set = balance(tr, w, h, seed)
    else:
        train_set, test_set = split(data, args.train_fraction, seed)
    model = train(train_set, hyperparams(args))
    out = _out(args)
    atomic_write_text(out / "model.svm", dumps_model(model))
    save_images(out / "train.npz", train_set, w, h)
    save_images(out / "test.npz", test_set, w, h)
    d = model.dual
    print(f"trained on {len(train_set)} images: {d.iterations} updates, "
          f"KKT violation {d.kkt_violation:.2e} -> {out / 'model.svm'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data, _, _ = load_images(args.images)
    report = evaluate(model, data)
    out = _out(args)
    text = report.to_text("evaluation of " + FsPath(args.model).name)
    atomic_write_text(out / "report.txt", text)
    if report.auc is not None:
        for name, pts, hdr, title in (
            ("roc", report.roc_points, ("fpr", "tpr"), "ROC"),
            ("pr", report.pr_points, ("recall", "precision"), "Precision-Recall"),
        ):
            atomic_write_text(out / f"{name}.csv", curve_csv(pts, hdr))
            atomic_write_text(out / f"{name}.svg", curve_svg(pts, title, *hdr))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_identify(args) -> int:
    cfg = _load_config(args)
    records, manifest = read_records(args.input)
    tax = taxonomy_config(args, cfg or {"taxonomy_config": manifest.taxonomy_config})
    model = None if args.rule_only or not args.model else load_model(args.model)
    results = identify(records, model, tax, manifest.width, manifest.height, rule_only=args.rule_only)
    out = _out(args)
    base = _manifest_from(manifest, taxonomy_config={"threshold": tax.threshold})
    write_records(out / "identified.rec", labeled_records(records, results),
                  replace(base, dataset_id=manifest.dataset_id + "-identified"))
    adv = adversarial_examples(records, results)
    write_records(out / "adversarial.rec", adv,
                  replace(base, dataset_id=manifest.dataset_id + "-adversarial"))
    for res in results:
        print(f"{res.no}\t{res.outcome}\t{res.stage}")
    print(f"# {len(adv)} adversarial examples of {len(results)} pairs", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    records, manifest = read_records(args.input)
    model = load_model(args.model)
    pairs = [(r.path_pair(), r.goal_cell()) for r in records if r.has_paths][: args.count]
    tax = TaxonomyConfig(threshold=args.threshold or 4)
    result = timing_bench(model, pairs, tax, manifest.width, manifest.height)
    sys.stdout.write(f"backend={_backend.BACKEND}\n" + result.to_text())
    return EXIT_OK


def cmd_import(args) -> int:
    w, h = args.grid or (28, 28)
    records = import_external_records(args.input, w, h)
    path = _out(args) / "imported.rec"
    records = sorted(records, key=lambda r: r.no)
    write_records(path, records, Manifest("imported", w, h, extra={"source": str(args.input)}))
    print(f"imported {len(records)} path pairs -> {path}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    gen = gen_config(args, cfg)
    if args.require_reachable is None and not cfg.get("gen_config"):
        gen = replace(gen, require_reachable=True)
    if args.mode is None and not cfg.get("planner_config"):
        args.mode = "limited"
    planner = planner_config(args, cfg)
    tax = taxonomy_config(args, cfg)
    res = run_experiment(gen, planner, tax, args.count, args.seed or 0, _out(args),
                         hyperparams=hyperparams(args), protocol=args.protocol)
    sys.stdout.write(res.summary())
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed")
    common.add_argument("--grid", type=parse_grid, default=None, metavar="WxH")
    common.add_argument("--threshold", type=int, default=None, help="FP/DP divergence threshold")
    common.add_argument("--config", default=None, help="manifest JSON supplying configs")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    gen_opts = argparse.ArgumentParser(add_help=False)
    gen_opts.add_argument("--count", type=int, default=200)
    gen_opts.add_argument("--density", type=float, default=None)
    gen_opts.add_argument("--placement", choices=PLACEMENTS, default=None)
    gen_opts.add_argument("--radius", type=int, default=None)
    gen_opts.add_argument("--require-reachable", action="store_true", default=None)

    plan_opts = argparse.ArgumentParser(add_help=False)
    plan_opts.add_argument("--mode", choices=("exact", "limited"), default=None)
    plan_opts.add_argument("--iterations", type=int, default=None, help="sweeps in limited mode")
    plan_opts.add_argument("--rollout-steps", type=int, default=None)

    svm_opts = argparse.ArgumentParser(add_help=False)
    svm_opts.add_argument("--C", type=float, default=1.0)
    svm_opts.add_argument("--tol", type=float, default=1e-3)
    svm_opts.add_argument("--max-passes", type=int, default=50)
    svm_opts.add_argument("--train-fraction", type=float, default=0.7)

    p = _Parser(prog="advpath", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", parents=[common, gen_opts, plan_opts], help="map pairs -> dataset")
    s.set_defaults(func=cmd_generate)
    s = sub.add_parser("plan", parents=[common, plan_opts], help="plan paths for a dataset")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_plan)
    s = sub.add_parser("label", parents=[common], help="rule-oracle labels")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_label)
    s = sub.add_parser("rasterize", parents=[common], help="FP/DP path images (+ PPM export)")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--ppm", action="store_true", help="also write one P3 pixmap per pair")
    s.set_defaults(func=cmd_rasterize)
    s = sub.add_parser("augment", parents=[common], help="balance an image set")
    s.add_argument("--images", required=True)
    s.set_defaults(func=cmd_augment)
    s = sub.add_parser("train", parents=[common, svm_opts], help="train the linear SVM")
    s.add_argument("--images", required=True)
    s.add_argument("--protocol", choices=PROTOCOLS + ("none",), default="augment-then-split")
    s.set_defaults(func=cmd_train)
    s = sub.add_parser("evaluate", parents=[common], help="accuracy, ROC/PR, curve files")
    s.add_argument("--model", required=True)
    s.add_argument("--images", required=True)
    s.set_defaults(func=cmd_evaluate)
    s = sub.add_parser("identify", parents=[common], help="label pairs and extract adversarial examples")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--model", default=None)
    s.add_argument("--rule-only", action="store_true", help="label FP/DP with the rule oracle")
    s.set_defaults(func=cmd_identify)
    s = sub.add_parser("bench", parents=[common], help="time rule stage + rasterize + predict")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--count", type=int, default=100)
    s.set_defaults(func=cmd_bench)
    s = sub.add_parser("import", parents=[common], help="import externally planned path pairs")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_import)
    s = sub.add_parser("experiment", parents=[common, gen_opts, plan_opts, svm_opts],
                       help="generate, label, train and evaluate in one go")
    s.add_argument("--protocol", choices=PROTOCOLS, default="augment-then-split")
    s.set_defaults(func=cmd_experiment, count=1000)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"advpath: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"advpath: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"advpath: invalid value: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"advpath: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
