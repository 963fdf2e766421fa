"""Rule-based four-way labelling of path pairs.

Labels
------
UrP  adversarial path does not end at the goal
UcP  both paths are the same step sequence
FP   the non-coincident parts diverge beyond the threshold on some axis
DP   everything else: a small detour

Divergence is measured between the two set differences of path cells. For
each non-coincident cell the row gap is the distance to the nearest cell of
the other path's non-coincident part lying on the same row, and the column
gap likewise on the same column. A cell that shares neither a row nor a
column with the other part is measured by its Chebyshev distance to the
nearest cell of that part instead. When the other part is empty (one path
only adds a loop to the other) each cell is measured by its Chebyshev
distance to the nearest cell of the other whole path.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass

from .gridworld import Cell, PathPair

DEFAULT_THRESHOLD = 4


class Label(str, enum.Enum):
    UrP = "UrP"
    FP = "FP"
    DP = "DP"
    UcP = "UcP"

    def __str__(self) -> str:
        return self.value

    @property
    def attack(self) -> bool:
        return attack_verdict(self)


@dataclass(frozen=True)
class DivergenceReport:
    dx_max: int = 0
    dy_max: int = 0
    disjoint_rows: int = 0  # cells with no same-row counterpart
    disjoint_cols: int = 0  # cells with no same-column counterpart
    unmatched: int = 0  # cells with neither
    unmatched_gap: int = 0  # largest Chebyshev distance of those cells to the other part
    orphaned: int = 0  # cells whose other part is empty; measured against the other path

    def exceeds(self, threshold: int) -> bool:
        return (
            self.dx_max > threshold
            or self.dy_max > threshold
            or self.unmatched_gap > threshold
        )


@dataclass(frozen=True)
class TaxonomyConfig:
    goal: Cell | None = None
    threshold: int = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.goal is not None:
            object.__setattr__(self, "goal", Cell(*self.goal))

    def with_goal(self, goal) -> "TaxonomyConfig":
        return TaxonomyConfig(goal, self.threshold)


def noncoincident_parts(pp: PathPair) -> tuple[frozenset, frozenset]:
    o = pp.original.cells()
    a = pp.adversarial.cells()
    return o - a, a - o


def _index(cells, key, other):
    out: dict[int, list[int]] = {}
    for c in cells:
        out.setdefault(key(c), []).append(other(c))
    for v in out.values():
        v.sort()
    return out


def _nearest(sorted_vals: list[int], v: int) -> int:
    k = bisect.bisect_left(sorted_vals, v)
    best = None
    if k < len(sorted_vals):
        best = sorted_vals[k] - v
    if k > 0:
        d = v - sorted_vals[k - 1]
        if best is None or d < best:
            best = d
    return best


def divergence(pp: PathPair) -> DivergenceReport:
    only_o, only_a = noncoincident_parts(pp)
    dx_max = dy_max = rows = cols = unmatched = gap = orphaned = 0
    sides = ((only_a, only_o, pp.original.cells()), (only_o, only_a, pp.adversarial.cells()))
    for mine, theirs, whole in sides:
        if not theirs:
            orphaned += len(mine)
            rows += len(mine)
            cols += len(mine)
            unmatched += len(mine)
            for c in mine:
                gap = max(gap, min(c.chebyshev(t) for t in whole))
            continue
        by_row = _index(theirs, lambda c: c.y, lambda c: c.x)
        by_col = _index(theirs, lambda c: c.x, lambda c: c.y)
        for c in mine:
            row = by_row.get(c.y)
            col = by_col.get(c.x)
            if row is None:
                rows += 1
            else:
                dx_max = max(dx_max, _nearest(row, c.x))
            if col is None:
                cols += 1
            else:
                dy_max = max(dy_max, _nearest(col, c.y))
            if row is None and col is None:
                unmatched += 1
                gap = max(gap, min(c.chebyshev(t) for t in theirs))
    return DivergenceReport(dx_max, dy_max, rows, cols, unmatched, gap, orphaned)


def goal_for(pp: PathPair, cfg: TaxonomyConfig) -> Cell:
    # without a known goal, compare against where the original path ended
    return cfg.goal if cfg.goal is not None else pp.original.end


def rule_stage(pp: PathPair, cfg: TaxonomyConfig) -> Label | None:
    """UrP or UcP when the path features decide it, else ``None``."""
    if pp.adversarial.end != goal_for(pp, cfg):
        return Label.UrP
    if pp.original.steps == pp.adversarial.steps:
        return Label.UcP
    return None


def classify_rule(pp: PathPair, cfg: TaxonomyConfig = TaxonomyConfig()) -> Label:
    label = rule_stage(pp, cfg)
    if label is not None:
        return label
    return Label.FP if divergence(pp).exceeds(cfg.threshold) else Label.DP


def attack_verdict(label: Label | str) -> bool:
    return Label(label) in (Label.UrP, Label.FP)
