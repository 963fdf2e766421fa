"""Value-iteration planner used in place of a trained VIN.

``exact`` mode sweeps to the fixed point; ``limited`` mode stops after a fixed
number of sweeps, so cells beyond the horizon keep the unreachable sentinel
and greedy rollouts from them stall. That is how UrP outcomes appear on
solvable maps.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .gridworld import MapPair, Path, PathPair, Scenario

UNREACHABLE = -math.inf


@dataclass(frozen=True)
class PlannerConfig:
    mode: str = "exact"
    max_iterations: int = 20
    max_rollout_steps: int | None = None  # None -> 4 * width * height
    step_reward: float = -1.0
    goal_reward: float = 10.0

    def __post_init__(self):
        if self.mode not in ("exact", "limited"):
            raise ValueError(f"unknown planner mode {self.mode!r}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.max_rollout_steps is not None and self.max_rollout_steps < 1:
            raise ValueError("max_rollout_steps must be >= 1")
        if not self.step_reward < 0 < self.goal_reward:
            raise ValueError("need step_reward < 0 < goal_reward")

    def rollout_limit(self, width: int, height: int) -> int:
        if self.max_rollout_steps is None:
            return 4 * width * height
        return self.max_rollout_steps

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        return cls(**d)


@dataclass(frozen=True)
class ValueField:
    width: int
    height: int
    values: np.ndarray  # (height, width), read-only
    iterations_run: int

    def __getitem__(self, c) -> float:
        return float(self.values[c[1], c[0]])


def free_mask(s: Scenario) -> np.ndarray:
    mask = np.ones((s.height, s.width), dtype=np.uint8)
    for x, y in s.map.obstacles:
        mask[y, x] = 0
    return mask


def value_iterate(s: Scenario, cfg: PlannerConfig = PlannerConfig()) -> ValueField:
    values = np.full((s.height, s.width), UNREACHABLE)
    values[s.goal.y, s.goal.x] = cfg.goal_reward
    if cfg.mode == "exact":
        # the field settles within (longest shortest path) sweeps; +1 confirms it
        limit = s.width * s.height + 1
        n = _backend.value_sweeps(
            free_mask(s), values, s.goal.x, s.goal.y,
            cfg.step_reward, cfg.goal_reward, limit, 1e-9,
        )
    else:
        n = _backend.value_sweeps(
            free_mask(s), values, s.goal.x, s.goal.y,
            cfg.step_reward, cfg.goal_reward, cfg.max_iterations, -1.0,
        )
    values.flags.writeable = False
    return ValueField(s.width, s.height, values, n)


def greedy_rollout(s: Scenario, field: ValueField, max_steps: int) -> Path:
    """Follow strictly improving neighbours; ties go to the smallest (y, x)."""
    v = field.values
    cur = s.start
    steps = [cur]
    grid = s.map
    while cur != s.goal and len(steps) <= max_steps:
        here = v[cur.y, cur.x]
        best = None
        best_val = here
        # neighbours arrive in (y, x) order, so strict '>' keeps the first of equals
        for n in grid.neighbors(cur):
            val = v[n.y, n.x]
            if val > best_val:
                best, best_val = n, val
        if best is None:
            break
        cur = best
        steps.append(cur)
    return Path(tuple(steps))


def plan(s: Scenario, cfg: PlannerConfig = PlannerConfig()) -> Path:
    if s.start == s.goal:
        return Path((s.start,))
    field = value_iterate(s, cfg)
    return greedy_rollout(s, field, cfg.rollout_limit(s.width, s.height))


def plan_pair(mp: MapPair, cfg: PlannerConfig = PlannerConfig()) -> PathPair:
    return PathPair(plan(mp.original, cfg), plan(mp.adversarial, cfg))

