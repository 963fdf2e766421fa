"""Reference implementations the package is checked against.

Each one is written from the definitions alone and shares no code with the
module it checks.
"""
import heapq
import itertools

import numpy as np

MOVES = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]


def dijkstra_steps(width, height, blocked, start, goal):
    """Unit-cost 8-connected shortest step count, or None when unreachable."""
    dist = {start: 0}
    heap = [(0, start)]
    while heap:
        d, (x, y) = heapq.heappop(heap)
        if (x, y) == goal:
            return d
        if d > dist[(x, y)]:
            continue
        for dx, dy in MOVES:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < width and 0 <= ny < height) or (nx, ny) in blocked:
                continue
            if d + 1 < dist.get((nx, ny), 1 << 30):
                dist[(nx, ny)] = d + 1
                heapq.heappush(heap, (d + 1, (nx, ny)))
    return None


def pairwise_divergence(orig, adv):
    """Exhaustive O(n*m) scan over the two set differences.

    Returns (dx_max, dy_max, no_row, no_col, no_either, gap_either, orphaned)
    with the same meaning as the package's DivergenceReport fields.
    """
    o, a = set(map(tuple, orig)), set(map(tuple, adv))
    only_o, only_a = o - a, a - o
    dx_max = dy_max = no_row = no_col = no_either = gap = orphaned = 0
    for mine, theirs, whole in ((only_a, only_o, o), (only_o, only_a, a)):
        for (x, y) in mine:
            if not theirs:
                orphaned += 1
                no_row += 1
                no_col += 1
                no_either += 1
                gap = max(gap, min(max(abs(x - tx), abs(y - ty)) for tx, ty in whole))
                continue
            row = [abs(x - tx) for tx, ty in theirs if ty == y]
            col = [abs(y - ty) for tx, ty in theirs if tx == x]
            if row:
                dx_max = max(dx_max, min(row))
            else:
                no_row += 1
            if col:
                dy_max = max(dy_max, min(col))
            else:
                no_col += 1
            if not row and not col:
                no_either += 1
                gap = max(gap, min(max(abs(x - tx), abs(y - ty)) for tx, ty in theirs))
    return dx_max, dy_max, no_row, no_col, no_either, gap, orphaned


def pairwise_auc(y, s):
    """Fraction of correctly ordered (positive, negative) pairs, ties count 1/2."""
    pos = [v for v, t in zip(s, y) if t]
    neg = [v for v, t in zip(s, y) if not t]
    total = 0.0
    for p, n in itertools.product(pos, neg):
        total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def _project(v, y, C):
    """Euclidean projection onto {0 <= a <= C, y.a = 0} by bisection on the multiplier."""
    def excess(nu):
        return float(y @ np.clip(v - nu * y, 0.0, C))

    lo, hi = -1.0, 1.0
    while excess(lo) < 0:
        lo *= 2
    while excess(hi) > 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, C)


def svm_dual_qp(X, y, C, tol=1e-10, max_iter=2_000_000):
    """Soft-margin linear SVM dual by projected gradient; returns (w, alpha)."""
    y = np.asarray(y, dtype=np.float64)
    Q = (y[:, None] * y[None, :]) * (X @ X.T)
    step = 1.0 / max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(len(y))
    for _ in range(max_iter):
        nxt = _project(a - step * (Q @ a - 1.0), y, C)
        if np.max(np.abs(nxt - a)) < tol:
            a = nxt
            break
        a = nxt
    return X.T @ (a * y), a


def direction_cosine(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


# -- random path pairs -------------------------------------------------------

def random_walk(rng, start, length, width, height, avoid=()):
    """Self-avoiding 8-connected walk of at most ``length`` cells."""
    path = [start]
    seen = {start, *avoid}
    while len(path) < length:
        x, y = path[-1]
        opts = [(x + dx, y + dy) for dx, dy in MOVES
                if 0 <= x + dx < width and 0 <= y + dy < height and (x + dx, y + dy) not in seen]
        if not opts:
            break
        nxt = opts[rng.integers(len(opts))]
        path.append(nxt)
        seen.add(nxt)
    return path


def walk_to(rng, path, goal, width, height, limit=200):
    """Extend ``path`` towards ``goal`` with random Chebyshev-decreasing steps."""
    path = list(path)
    seen = set(path)
    while path[-1] != goal and len(path) < limit:
        x, y = path[-1]
        d = max(abs(x - goal[0]), abs(y - goal[1]))
        opts = [(x + dx, y + dy) for dx, dy in MOVES
                if 0 <= x + dx < width and 0 <= y + dy < height
                and max(abs(x + dx - goal[0]), abs(y + dy - goal[1])) < d
                and (x + dx, y + dy) not in seen]
        if not opts:
            return None
        nxt = opts[rng.integers(len(opts))]
        path.append(nxt)
        seen.add(nxt)
    return path if path[-1] == goal else None


def random_path_pair(rng, width=28, height=28, max_len=50):
    """A valid (original, adversarial) pair of simple paths with a shared start.

    Mixes unchanged, truncated and rerouted adversarial paths so every label
    can occur. Both paths stay within ``max_len`` cells.
    """
    while True:
        start = (int(rng.integers(width)), int(rng.integers(height)))
        orig = random_walk(rng, start, int(rng.integers(1, max_len + 1)), width, height)
        kind = rng.integers(4)
        if kind == 0:
            return orig, list(orig)
        if kind == 1:
            return orig, orig[: int(rng.integers(1, len(orig) + 1))]
        keep = int(rng.integers(1, len(orig) + 1))
        head = orig[:keep]
        detour = random_walk(rng, head[-1], int(rng.integers(1, 12)), width, height, avoid=head[:-1])
        adv = walk_to(rng, head[:-1] + detour, orig[-1], width, height, limit=max_len)
        if adv is None:
            if kind == 3:
                continue
            adv = (head[:-1] + detour)[:max_len]
        return orig, adv
