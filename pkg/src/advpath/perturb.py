"""Random scenarios and single-obstacle adversarial map pairs."""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .gridworld import Cell, GridMap, MapPair, Path, Scenario

MAX_ATTEMPTS = 1000
PLACEMENTS = ("random", "on_path", "near_path")


class GenerationExhausted(RuntimeError):
    pass


class NoCandidateCell(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    width: int = 28
    height: int = 28
    obstacle_density: float = 0.2
    placement: str = "on_path"
    radius: int = 1  # near_path only
    seed: int = 0
    require_reachable: bool = False

    def __post_init__(self):
        if not 0 <= self.obstacle_density < 1:
            raise ValueError("obstacle_density must be in [0, 1)")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.width * self.height < 2:
            raise ValueError("grid needs at least two cells")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(**d)


def pair_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for map pair ``index``; seeds are ``base_seed + index``."""
    return np.random.default_rng(base_seed + index)


def reachable(grid: GridMap, start: Cell, goal: Cell) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        if c == goal:
            return True
        for n in grid.neighbors(c):
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return False


def generate_scenario(cfg: GenConfig, rng: np.random.Generator) -> Scenario:
    """Draw start and goal uniformly, then obstacles i.i.d. on every other cell.

    With ``require_reachable`` the draw is repeated until the goal can be
    reached from the start.
    """
    w, h = cfg.width, cfg.height
    for _ in range(MAX_ATTEMPTS):
        s_idx, g_idx = rng.choice(w * h, size=2, replace=False)
        start = Cell(int(s_idx % w), int(s_idx // w))
        goal = Cell(int(g_idx % w), int(g_idx // w))
        draws = rng.random(w * h) < cfg.obstacle_density
        draws[[s_idx, g_idx]] = False
        obstacles = frozenset(Cell(int(i % w), int(i // w)) for i in np.flatnonzero(draws))
        grid = GridMap(w, h, obstacles)
        if cfg.require_reachable and not reachable(grid, start, goal):
            continue
        return Scenario(grid, start, goal)
    raise GenerationExhausted(
        f"no acceptable scenario after {MAX_ATTEMPTS} attempts "
        f"(density {cfg.obstacle_density} on {w}x{h})"
    )


def candidate_cells(s: Scenario, original_path: Path | None, cfg: GenConfig) -> list:
    """Cells eligible for the extra obstacle, in (y, x) order."""
    blocked = s.map.obstacles | {s.start, s.goal}
    if cfg.placement == "random":
        cells = [c for c in s.map.free_cells() if c not in blocked]
    elif cfg.placement == "on_path":
        if original_path is None:
            raise ValueError("on_path placement needs the original path")
        cells = [c for c in original_path.steps[1:-1] if c not in blocked]
    else:
        if original_path is None:
            raise ValueError("near_path placement needs the original path")
        r = cfg.radius
        near = set()
        for px, py in original_path.steps:
            for y in range(max(0, py - r), min(s.height, py + r + 1)):
                for x in range(max(0, px - r), min(s.width, px + r + 1)):
                    near.add(Cell(x, y))
        cells = [c for c in near if c not in blocked]
    return sorted(set(cells), key=lambda c: (c.y, c.x))


def perturb(
    s: Scenario,
    original_path: Path | None,
    cfg: GenConfig,
    rng: np.random.Generator,
    pair_id: int = 0,
) -> MapPair:
    cells = candidate_cells(s, original_path, cfg)
    if not cells:
        raise NoCandidateCell(f"no cell available for {cfg.placement} placement")
    extra = cells[int(rng.integers(len(cells)))]
    adversarial = Scenario(s.map.with_obstacle(extra), s.start, s.goal)
    return MapPair(pair_id, s, adversarial)
