"""Grid maps, scenarios, map pairs and paths.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, origin at
the top-left cell. Every module in the package shares this convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

DEFAULT_WIDTH = 28
DEFAULT_HEIGHT = 28


class ValidationError(ValueError):
    """Base class for violated domain invariants."""


class OutOfBounds(ValidationError):
    pass


class StartOnObstacle(ValidationError):
    pass


class GoalOnObstacle(ValidationError):
    pass


class StartEqualsGoal(ValidationError):
    pass


class NonAdjacentStep(ValidationError):
    pass


class StepOnObstacle(ValidationError):
    pass


class RepeatedCell(ValidationError):
    pass


class InvalidMapPair(ValidationError):
    pass


class Cell(NamedTuple):
    x: int
    y: int

    def chebyshev(self, other: "Cell") -> int:
        return max(abs(self.x - other.x), abs(self.y - other.y))

    def __str__(self) -> str:
        return f"{self.x}:{self.y}"


# 8-connected moves, listed in (dy, dx) scan order
NEIGHBOR_OFFSETS = tuple(
    (dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0)
)


@dataclass(frozen=True)
class GridMap:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    obstacles: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        obstacles = frozenset(Cell(*c) for c in self.obstacles)
        object.__setattr__(self, "obstacles", obstacles)
        for c in obstacles:
            if not self.in_bounds(c):
                raise OutOfBounds(f"obstacle {c} outside {self.width}x{self.height} grid")

    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and Cell(*c) not in self.obstacles

    def neighbors(self, c) -> list:
        """Free 8-connected neighbours of ``c`` in (y, x) order."""
        x, y = c
        out = []
        for dx, dy in NEIGHBOR_OFFSETS:
            n = Cell(x + dx, y + dy)
            if self.is_free(n):
                out.append(n)
        return out

    def with_obstacle(self, c) -> "GridMap":
        return GridMap(self.width, self.height, self.obstacles | {Cell(*c)})

    def free_cells(self) -> list:
        return [
            Cell(x, y)
            for y in range(self.height)
            for x in range(self.width)
            if Cell(x, y) not in self.obstacles
        ]


@dataclass(frozen=True)
class Scenario:
    map: GridMap
    start: Cell
    goal: Cell

    def __post_init__(self):
        object.__setattr__(self, "start", Cell(*self.start))
        object.__setattr__(self, "goal", Cell(*self.goal))

    @property
    def width(self) -> int:
        return self.map.width

    @property
    def height(self) -> int:
        return self.map.height


@dataclass(frozen=True)
class MapPair:
    id: int
    original: Scenario
    adversarial: Scenario

    @property
    def added_obstacle(self) -> Cell:
        (extra,) = self.adversarial.map.obstacles - self.original.map.obstacles
        return extra


@dataclass(frozen=True)
class Path:
    steps: tuple

    def __post_init__(self):
        steps = tuple(Cell(*c) for c in self.steps)
        if not steps:
            raise ValueError("a path has at least one cell")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    @property
    def start(self) -> Cell:
        return self.steps[0]

    @property
    def end(self) -> Cell:
        return self.steps[-1]

    def cells(self) -> frozenset:
        return frozenset(self.steps)


@dataclass(frozen=True)
class PathPair:
    original: Path
    adversarial: Path

    def __post_init__(self):
        if self.original.start != self.adversarial.start:
            raise ValidationError(
                f"paths start at different cells: {self.original.start} vs {self.adversarial.start}"
            )


def validate_scenario(s: Scenario) -> None:
    """Raise the matching :class:`ValidationError` if ``s`` is not a valid scenario."""
    for name, c in (("start", s.start), ("goal", s.goal)):
        if not s.map.in_bounds(c):
            raise OutOfBounds(f"{name} {c} outside {s.width}x{s.height} grid")
    if s.start in s.map.obstacles:
        raise StartOnObstacle(f"start {s.start} is an obstacle")
    if s.goal in s.map.obstacles:
        raise GoalOnObstacle(f"goal {s.goal} is an obstacle")
    if s.start == s.goal:
        raise StartEqualsGoal(f"start and goal are both {s.start}")


def validate_steps(steps: Iterable, grid: GridMap | None = None, *, simple: bool = True) -> None:
    """Check adjacency (and optionally obstacles and simplicity) of a cell sequence."""
    seen = set()
    prev = None
    for i, c in enumerate(steps):
        c = Cell(*c)
        if grid is not None:
            if not grid.in_bounds(c):
                raise OutOfBounds(f"step {i} {c} outside {grid.width}x{grid.height} grid")
            if c in grid.obstacles:
                raise StepOnObstacle(f"step {i} {c} lies on an obstacle")
        if prev is not None and prev.chebyshev(c) != 1:
            raise NonAdjacentStep(f"step {i - 1}->{i}: {prev} -> {c} is not an 8-neighbour move")
        if simple:
            if c in seen:
                raise RepeatedCell(f"step {i} revisits {c}")
            seen.add(c)
        prev = c


def validate_path(p: Path, s: Scenario) -> None:
    validate_steps(p.steps, s.map, simple=True)


def validate_map_pair(mp: MapPair) -> None:
    o, a = mp.original, mp.adversarial
    validate_scenario(o)
    validate_scenario(a)
    if (o.width, o.height) != (a.width, a.height):
        raise InvalidMapPair(f"pair {mp.id}: grid sizes differ")
    if o.start != a.start or o.goal != a.goal:
        raise InvalidMapPair(f"pair {mp.id}: start/goal differ between maps")
    if not o.map.obstacles <= a.map.obstacles:
        raise InvalidMapPair(f"pair {mp.id}: adversarial map drops an original obstacle")
    added = a.map.obstacles - o.map.obstacles
    if len(added) != 1:
        raise InvalidMapPair(f"pair {mp.id}: expected one added obstacle, found {len(added)}")


# -- canonical text encoding -------------------------------------------------

def encode_map(grid: GridMap) -> str:
    """Row-major 0/1 occupancy string, ``1`` = obstacle."""
    obs = grid.obstacles
    return "".join(
        "1" if (x, y) in obs else "0" for y in range(grid.height) for x in range(grid.width)
    )


def decode_map(text: str, width: int, height: int) -> GridMap:
    if len(text) != width * height:
        raise ValueError(f"map string has length {len(text)}, expected {width * height}")
    obstacles = set()
    for i, ch in enumerate(text):
        if ch == "1":
            obstacles.add(Cell(i % width, i // width))
        elif ch != "0":
            raise ValueError(f"invalid map character {ch!r} at offset {i}")
    return GridMap(width, height, frozenset(obstacles))


def encode_cell(c) -> str:
    return f"{c[0]}:{c[1]}"


def decode_cell(token: str) -> Cell:
    xs, sep, ys = token.partition(":")
    if not sep or not xs.isdigit() or not ys.isdigit():
        raise ValueError(f"invalid cell token {token!r}")
    return Cell(int(xs), int(ys))


def encode_path(p: Path) -> str:
    return ",".join(encode_cell(c) for c in p.steps)


def decode_path(text: str) -> Path:
    if not text:
        raise ValueError("empty path string")
    return Path(tuple(decode_cell(t) for t in text.split(",")))
