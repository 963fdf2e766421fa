"""Classifier evaluation: accuracy, confusion counts, ROC/AUC, PR/AP, timing.

FP is the positive class throughout.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .classifier import Classifier, LabeledImageSet
from .imaging import flatten, rasterize
from .taxonomy import TaxonomyConfig, rule_stage


class SingleClassTestSet(ValueError):
    """ROC and PR curves are undefined without both classes."""


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: Confusion
    roc_points: list = field(default_factory=list)
    auc: float | None = None
    pr_points: list = field(default_factory=list)
    ap: float | None = None
    n_samples: int = 0

    def to_text(self, title: str = "evaluation") -> str:
        c = self.confusion
        lines = [
            f"# {title}",
            "positive_class=FP",
            "ap_definition=step (sum over thresholds of recall increment x precision, no interpolation)",
            f"samples={self.n_samples}",
            f"accuracy={self.accuracy:.6f}",
            f"tp={c.tp} fp={c.fp} fn={c.fn} tn={c.tn}",
            f"auc={'undefined' if self.auc is None else format(self.auc, '.6f')}",
            f"ap={'undefined' if self.ap is None else format(self.ap, '.6f')}",
        ]
        return "\n".join(lines) + "\n"


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> Confusion:
    t = np.asarray(y_true, dtype=bool)
    p = np.asarray(y_pred, dtype=bool)
    return Confusion(
        tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)), fn=int(np.sum(t & ~p)), tn=int(np.sum(~t & ~p))
    )


def _sweep(y_true, scores):
    """Cumulative TP/FP counts at each distinct score, highest first."""
    y = np.asarray(y_true, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of every run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tps = np.cumsum(y)[ends]
    fps = np.cumsum(~y)[ends]
    return tps, fps, s[ends]


def roc_curve(y_true, scores) -> list:
    y = np.asarray(y_true, dtype=bool)
    P, N = int(y.sum()), int((~y).sum())
    if P == 0 or N == 0:
        raise SingleClassTestSet("ROC needs both classes")
    tps, fps, _ = _sweep(y, scores)
    pts = [(0.0, 0.0)]
    pts.extend((f / N, t / P) for t, f in zip(tps.tolist(), fps.tolist()))
    return pts


def auc_trapezoid(points) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def roc_auc(y_true, scores) -> float:
    return auc_trapezoid(roc_curve(y_true, scores))


def pr_curve(y_true, scores) -> list:
    """``(recall, precision)`` at each distinct threshold, highest first."""
    y = np.asarray(y_true, dtype=bool)
    P = int(y.sum())
    if P == 0 or P == y.size:
        raise SingleClassTestSet("PR needs both classes")
    tps, fps, _ = _sweep(y, scores)
    return [(t / P, t / (t + f)) for t, f in zip(tps.tolist(), fps.tolist())]


def average_precision(points) -> float:
    ap, prev_r = 0.0, 0.0
    for r, p in points:
        ap += (r - prev_r) * p
        prev_r = r
    return ap


def evaluate_scores(y_true, scores) -> EvalReport:
    """Report from ground truth (True = FP) and decision scores (> 0 -> FP)."""
    y = np.asarray(y_true, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty test set")
    cm = confusion(y, s > 0)
    acc = (cm.tp + cm.tn) / cm.total
    if y.all() or not y.any():
        return EvalReport(acc, cm, n_samples=int(y.size))
    roc = roc_curve(y, s)
    pr = pr_curve(y, s)
    return EvalReport(acc, cm, roc, auc_trapezoid(roc), pr, average_precision(pr), int(y.size))


def evaluate(model: Classifier, test: LabeledImageSet, *, strict: bool = False) -> EvalReport:
    """Score ``test`` with ``model``.

    A single-class test set still yields accuracy and confusion counts;
    with ``strict=True`` it raises :class:`SingleClassTestSet` instead.
    """
    y = test.y > 0
    if strict and (y.all() or not y.any()):
        raise SingleClassTestSet("test set holds a single class")
    scores = model.decision_function(test.X) if len(test) else np.zeros(0)
    return evaluate_scores(y, scores)


def curve_csv(points, header: tuple[str, str]) -> str:
    lines = [",".join(header)]
    lines.extend(f"{a!r},{b!r}" for a, b in points)
    return "\n".join(lines) + "\n"


def curve_svg(points, title: str, xlabel: str, ylabel: str, size: int = 320) -> str:
    pad = 40
    span = size - 2 * pad

    def sx(v):
        return pad + v * span

    def sy(v):
        return size - pad - v * span

    poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n'
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>\n'
        f'<polyline points="{poly}" fill="none" stroke="blue" stroke-width="2"/>\n'
        f'<text x="{size / 2}" y="{pad / 2}" text-anchor="middle">{title}</text>\n'
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle">{xlabel}</text>\n'
        f'<text x="12" y="{size / 2}" transform="rotate(-90 12 {size / 2})" '
        f'text-anchor="middle">{ylabel}</text>\n'
        "</svg>\n"
    )


@dataclass(frozen=True)
class BenchResult:
    pairs: int
    elapsed: float
    rule_seconds: float
    raster_seconds: float
    predict_seconds: float
    per_pair: list  # seconds per pair, in input order

    def to_text(self) -> str:
        return (
            f"pairs={self.pairs}\nelapsed_s={self.elapsed:.6f}\n"
            f"rule_s={self.rule_seconds:.6f}\nrasterize_s={self.raster_seconds:.6f}\n"
            f"predict_s={self.predict_seconds:.6f}\n"
        )


def timing_bench(model: Classifier, pairs: list, cfg: TaxonomyConfig = TaxonomyConfig(),
                 width: int = 28, height: int = 28) -> BenchResult:
    """Time the identification work per pair: rule stage, then raster + predict.

    ``pairs`` holds ``PathPair`` objects or ``(PathPair, goal)`` tuples.
    Planning and file I/O are not timed.
    """
    clock = time.perf_counter
    per_pair = []
    t_rule = t_raster = t_pred = 0.0
    for item in pairs:
        pp, goal = item if isinstance(item, tuple) else (item, cfg.goal)
        pcfg = cfg.with_goal(goal)
        t0 = clock()
        label = rule_stage(pp, pcfg)
        t1 = clock()
        t2 = t3 = t1
        if label is None:
            vec = flatten(rasterize(pp, width, height))
            t2 = clock()
            model.decision_function(vec)
            t3 = clock()
        t_rule += t1 - t0
        t_raster += t2 - t1
        t_pred += t3 - t2
        per_pair.append(t3 - t0)
    return BenchResult(len(per_pair), sum(per_pair), t_rule, t_raster, t_pred, per_pair)

