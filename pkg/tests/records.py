"""Random valid dataset records for storage and pipeline tests."""
import numpy as np

from advpath.gridworld import Cell, GridMap, MapPair, Path, PathPair, Scenario
from advpath.storage import Record
from advpath.taxonomy import Label
from oracles import random_path_pair


def random_record(rng, no, width=28, height=28, max_len=30):
    o, a = random_path_pair(rng, width, height, max_len)
    start, goal = Cell(*o[0]), Cell(*o[-1])
    if goal == start:
        goal = Cell((start.x + 1) % width, start.y)
    kind = rng.integers(6)
    if kind == 0:
        return Record(no)
    free = [(x, y) for y in range(height) for x in range(width) if (x, y) not in (start, goal)]
    mask = rng.random(len(free)) < 0.2
    mask[rng.integers(len(free))] = False  # room for the added obstacle
    obstacles = frozenset(c for c, m in zip(free, mask) if m)
    spare = [c for c, m in zip(free, mask) if not m]
    extra = spare[rng.integers(len(spare))]
    orig = Scenario(GridMap(width, height, obstacles), start, goal)
    adv = Scenario(orig.map.with_obstacle(extra), start, goal)
    mp = MapPair(no, orig, adv)
    pp = PathPair(Path(tuple(o)), Path(tuple(a))) if kind != 1 else None
    label = None
    if pp is not None and kind != 2:
        label = list(Label)[rng.integers(4)]
    return Record.from_pairs(mp, pp, label)


def random_records(seed, n, width=28, height=28):
    rng = np.random.default_rng(seed)
    nos = np.cumsum(rng.integers(1, 4, n))
    return [random_record(rng, int(k), width, height) for k in nos]
