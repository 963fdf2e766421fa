"""End-to-end identification of adversarial map pairs.

``identify`` labels planned pairs in two stages: path features settle UrP and
UcP, and the image classifier separates FP from DP for everything else.
``run_experiment`` produces a dataset, trains the classifier on it and
evaluates the result.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath

import numpy as np

from .classifier import (
    NEGATIVE,
    POSITIVE,
    Classifier,
    ClassifierModel,
    Hyperparams,
    LabeledImageSet,
    SingleClassData,
    dumps_model,
    split,
    train,
)
from .gridworld import PathPair
from .imaging import apply_augment, augmentation_draws, flatten, rasterize, unflatten
from .metrics import EvalReport, curve_csv, curve_svg, evaluate
from .perturb import (
    MAX_ATTEMPTS,
    GenConfig,
    GenerationExhausted,
    NoCandidateCell,
    generate_scenario,
    pair_rng,
    perturb,
)
from .planner import PlannerConfig, plan
from .storage import (
    Manifest,
    Record,
    atomic_write_text,
    content_hash,
    dumps_records,
    write_records,
)
from .taxonomy import Label, TaxonomyConfig, classify_rule, rule_stage

log = logging.getLogger(__name__)


class ModelMissing(RuntimeError):
    pass


@dataclass(frozen=True)
class IdentificationResult:
    no: int
    label: Label
    attack: bool
    stage: str  # "rule", "image", or "oracle" in rule-only mode

    def __post_init__(self):
        if self.stage == "rule" and self.label not in (Label.UrP, Label.UcP):
            raise ValueError("rule stage only yields UrP or UcP")
        if self.stage == "image" and self.label not in (Label.FP, Label.DP):
            raise ValueError("image stage only yields FP or DP")

    @property
    def outcome(self) -> str:
        return ("Success-" if self.attack else "Unsuccess-") + self.label.value


def _pair_and_goal(rec: Record, cfg: TaxonomyConfig):
    pp = rec.path_pair()
    goal = rec.goal_cell() or cfg.goal
    return pp, cfg.with_goal(goal)


def identify(records, model: Classifier | None, cfg: TaxonomyConfig = TaxonomyConfig(),
             width: int = 28, height: int = 28, *, rule_only: bool = False) -> list:
    """Label every planned record; results come back ordered by record number."""
    records = sorted(records, key=lambda r: r.no)
    seen = set()
    results: dict[int, IdentificationResult] = {}
    pending = []  # (no, PathPair) left for the image stage
    for rec in records:
        if rec.no in seen:
            raise ValueError(f"duplicate record number {rec.no}")
        seen.add(rec.no)
        pp, pcfg = _pair_and_goal(rec, cfg)
        if rule_only:
            label = classify_rule(pp, pcfg)
            results[rec.no] = IdentificationResult(rec.no, label, label.attack, "oracle")
            continue
        label = rule_stage(pp, pcfg)
        if label is None:
            pending.append((rec.no, pp))
        else:
            results[rec.no] = IdentificationResult(rec.no, label, label.attack, "rule")

    if pending:
        if model is None:
            raise ModelMissing(f"{len(pending)} pairs need the image classifier but no model was given")
        X = np.stack([flatten(rasterize(pp, width, height)) for _, pp in pending])
        scores = np.asarray(model.decision_function(X))
        for (no, _), s in zip(pending, scores):
            label = Label.FP if s > 0 else Label.DP
            results[no] = IdentificationResult(no, label, label.attack, "image")
    return [results[r.no] for r in records]


def adversarial_examples(records, results) -> list:
    """Records whose identified label marks a successful attack."""
    by_no = {r.no: r for r in records}
    return [by_no[res.no].with_label(res.label) for res in results if res.attack]


def labeled_records(records, results) -> list:
    by_no = {res.no: res for res in results}
    return [r.with_label(by_no[r.no].label) for r in sorted(records, key=lambda r: r.no)]


# -- dataset construction ----------------------------------------------------

def generate_pairs(gen: GenConfig, planner: PlannerConfig, n_pairs: int, seed: int,
                   *, with_paths: bool = True) -> list:
    """``n_pairs`` records numbered from 1; pair ``i`` draws from seed ``seed + i``.

    The original path is always planned, because on-path and near-path
    placement need it. A scenario whose path offers no candidate cell is
    redrawn from the same stream.
    """
    out = []
    for i in range(n_pairs):
        rng = pair_rng(seed, i)
        for _ in range(MAX_ATTEMPTS):
            scenario = generate_scenario(gen, rng)
            original_path = plan(scenario, planner)
            try:
                mp = perturb(scenario, original_path, gen, rng, pair_id=i + 1)
            except NoCandidateCell:
                continue
            break
        else:
            raise GenerationExhausted(f"pair {i + 1}: no usable scenario in {MAX_ATTEMPTS} draws")
        if with_paths:
            pp = PathPair(original_path, plan(mp.adversarial, planner))
            out.append(Record.from_pairs(mp, pp))
        else:
            out.append(Record.from_pairs(mp))
    return out


def plan_records(records, planner: PlannerConfig, width: int, height: int) -> list:
    out = []
    for r in records:
        mp = r.map_pair(width, height)
        pp = PathPair(plan(mp.original, planner), plan(mp.adversarial, planner))
        out.append(r.with_paths(pp))
    return out


def label_records(records, cfg: TaxonomyConfig) -> list:
    out = []
    for r in records:
        pp, pcfg = _pair_and_goal(r, cfg)
        out.append(r.with_label(classify_rule(pp, pcfg)))
    return out


def image_set(records, width: int, height: int, source: str = "") -> LabeledImageSet:
    """FP/DP-labelled records as flattened path images."""
    rows, labels, prov = [], [], []
    for r in records:
        if r.label in (POSITIVE, NEGATIVE):
            rows.append(flatten(rasterize(r.path_pair(), width, height)))
            labels.append(r.label)
            prov.append(str(r.no))
    X = np.stack(rows) if rows else np.zeros((0, 2 * width * height))
    return LabeledImageSet(X, tuple(labels), tuple(prov), source)


def balance(data: LabeledImageSet, width: int, height: int, seed: int) -> LabeledImageSet:
    """Augment the smaller class until both classes are the same size."""
    pos = [i for i, v in enumerate(data.labels) if v == POSITIVE]
    neg = [i for i, v in enumerate(data.labels) if v == NEGATIVE]
    if not pos or not neg or len(pos) == len(neg):
        return data
    small, label, target = (pos, POSITIVE, len(neg)) if len(pos) < len(neg) else (neg, NEGATIVE, len(pos))
    draws = augmentation_draws(len(small), target - len(small), seed)
    if not draws:
        return data
    rows = [flatten(apply_augment(unflatten(data.X[small[i]], width, height), op)) for i, op in draws]
    aug = LabeledImageSet(
        np.stack(rows),
        (label,) * len(rows),
        tuple(f"{data.provenance[small[i]]}+{op.value}" for i, op in draws),
        data.source,
    )
    return data.concat(aug)


# -- experiment --------------------------------------------------------------

@dataclass
class ExperimentResult:
    records: list
    manifest: Manifest
    model: ClassifierModel
    report: EvalReport
    baseline_report: EvalReport | None
    results: list
    label_counts: dict
    image_agreement: float | None
    files: dict = field(default_factory=dict)

    def summary(self) -> str:
        lines = ["# experiment summary"]
        lines += [f"count_{k}={v}" for k, v in self.label_counts.items()]
        lines.append(f"test_accuracy={self.report.accuracy:.6f}")
        if self.report.auc is not None:
            lines.append(f"test_auc={self.report.auc:.6f}")
            lines.append(f"test_ap={self.report.ap:.6f}")
        if self.image_agreement is not None:
            lines.append(f"image_stage_agreement={self.image_agreement:.6f}")
        lines.append(f"adversarial_examples={sum(r.attack for r in self.results)}")
        return "\n".join(lines) + "\n"


PROTOCOLS = ("augment-then-split", "split-then-augment")


def train_and_evaluate(images: LabeledImageSet, width: int, height: int, seed: int,
                       hp: Hyperparams, train_fraction: float = 0.7,
                       protocol: str = "augment-then-split"):
    """Train on a 7:3 split of ``images``; returns (model, report, baseline_report).

    ``augment-then-split`` balances the whole image set before splitting, so
    the test split is balanced as well. ``split-then-augment`` balances only
    the training split and tests on the untouched class mix. The baseline is
    trained and tested on an unaugmented split with the same seed.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}")
    raw_train, raw_test = split(images, train_fraction, seed)
    if protocol == "augment-then-split":
        train_set, test_set = split(balance(images, width, height, seed), train_fraction, seed)
    else:
        train_set, test_set = balance(raw_train, width, height, seed), raw_test
    if len(set(train_set.labels)) < 2:
        raise SingleClassData("training split lacks one of FP/DP")
    model = train(train_set, hp)
    report = evaluate(model, test_set)
    baseline = None
    if len(set(raw_train.labels)) == 2 and len(raw_test):
        baseline = evaluate(train(raw_train, hp), raw_test)
    return model, report, baseline


def run_experiment(gen: GenConfig = GenConfig(require_reachable=True),
                   planner: PlannerConfig = PlannerConfig(mode="limited", max_iterations=20),
                   taxonomy: TaxonomyConfig = TaxonomyConfig(),
                   n_pairs: int = 1000, seed: int = 0, out_dir=None, *,
                   train_fraction: float = 0.7,
                   hyperparams: Hyperparams | None = None,
                   protocol: str = "augment-then-split",
                   dataset_id: str = "experiment") -> ExperimentResult:
    w, h = gen.width, gen.height
    gen = replace(gen, seed=seed)
    hp = hyperparams or Hyperparams(seed=seed)

    records = label_records(generate_pairs(gen, planner, n_pairs, seed), taxonomy)
    counts = {lab.value: sum(r.label == lab.value for r in records) for lab in Label}
    log.info("label counts: %s", counts)

    manifest = Manifest(
        dataset_id=dataset_id,
        width=w,
        height=h,
        gen_config=gen.to_dict(),
        planner_config=planner.to_dict(),
        taxonomy_config={"threshold": taxonomy.threshold},
        extra={"n_pairs": n_pairs, "seed": seed, "train_fraction": train_fraction,
               "protocol": protocol},
    )
    files = {}
    if out_dir is not None:
        files["dataset"] = FsPath(out_dir) / "dataset.rec"
        manifest = write_records(files["dataset"], records, manifest)
    else:
        data = dumps_records(records, w, h)
        manifest = replace(manifest, record_count=len(records), content_hash=content_hash(data))

    images = image_set(records, w, h, source=manifest.content_hash)
    model, report, baseline_report = train_and_evaluate(
        images, w, h, seed, hp, train_fraction, protocol
    )

    results = identify(records, model, taxonomy, w, h)
    image_stage = [(res, rec) for res, rec in zip(results, records) if res.stage == "image"]
    agreement = (
        sum(res.label.value == rec.label for res, rec in image_stage) / len(image_stage)
        if image_stage else None
    )
    result = ExperimentResult(records, manifest, model, report, baseline_report, results,
                              counts, agreement, files)
    if out_dir is not None:
        _write_outputs(FsPath(out_dir), result, manifest, w, h)
    return result


def _write_outputs(out: FsPath, res: ExperimentResult, manifest: Manifest, w: int, h: int) -> None:
    files = res.files
    files["model"] = out / "model.svm"
    atomic_write_text(files["model"], dumps_model(res.model))
    files["report"] = out / "report.txt"
    text = res.report.to_text("after augmentation")
    if res.baseline_report is not None:
        text += "\n" + res.baseline_report.to_text("before augmentation")
    text += "\n" + res.summary()
    atomic_write_text(files["report"], text)
    if res.report.auc is not None:
        for name, pts, hdr, title in (
            ("roc", res.report.roc_points, ("fpr", "tpr"), "ROC"),
            ("pr", res.report.pr_points, ("recall", "precision"), "Precision-Recall"),
        ):
            files[f"{name}_csv"] = out / f"{name}.csv"
            atomic_write_text(files[f"{name}_csv"], curve_csv(pts, hdr))
            files[f"{name}_svg"] = out / f"{name}.svg"
            atomic_write_text(files[f"{name}_svg"], curve_svg(pts, title, *hdr))
    identified = labeled_records(res.records, res.results)
    adv = adversarial_examples(res.records, res.results)
    m = replace(manifest, dataset_id=manifest.dataset_id + "-identified", created=manifest.created)
    files["identified"] = out / "identified.rec"
    write_records(files["identified"], identified, m)
    files["adversarial"] = out / "adversarial.rec"
    write_records(files["adversarial"], adv, replace(m, dataset_id=manifest.dataset_id + "-adversarial"))
