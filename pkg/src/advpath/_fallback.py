"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so both backends return
bit-identical results. Keep the two in sync.
"""
import numpy as np

NEG_INF = -np.inf
TAU = 1e-12


def value_sweeps(free, values, gx, gy, step_reward, goal_reward, max_sweeps, tol):
    """Synchronous Bellman sweeps over an 8-connected grid, in place.

    ``free`` is a (H, W) uint8 mask, ``values`` a (H, W) float64 field. With
    ``tol < 0`` exactly ``max_sweeps`` sweeps run; otherwise sweeping stops
    after the first sweep whose largest change is ``<= tol``. Returns the
    number of sweeps run.
    """
    h, w = values.shape
    blocked = free == 0
    padded = np.full((h + 2, w + 2), NEG_INF)
    sweeps = 0
    while sweeps < max_sweeps:
        padded[1:-1, 1:-1] = values
        best = np.full((h, w), NEG_INF)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                np.maximum(best, padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w], out=best)
        new = best + step_reward
        new[blocked] = NEG_INF
        new[gy, gx] = goal_reward
        sweeps += 1
        if tol >= 0:
            with np.errstate(invalid="ignore"):
                diff = np.abs(new - values)
            diff[np.isnan(diff)] = 0.0
            values[...] = new
            if diff.max(initial=0.0) <= tol:
                break
        else:
            values[...] = new
    return sweeps


def smo_solve(K, y, C, tol, max_iter):
    """Soft-margin SVM dual by SMO with second-order working-set selection.

    Returns ``(alpha, grad, iterations)`` where ``grad`` is the dual gradient
    ``Q @ alpha - 1`` with ``Q[i, j] = y[i] * y[j] * K[i, j]``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diagonal(K).copy()
    pos = y > 0
    it = 0
    while it < max_iter:
        # I_up / I_low membership
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        minus_yg = -y * G
        if not up.any() or not low.any():
            break
        cand = np.where(up, minus_yg, NEG_INF)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmax2 = np.max(np.where(low, y * G, NEG_INF))
        if gmax + gmax2 < tol:
            break

        grad_diff = gmax + y * G
        quad = diag[i] + diag - 2.0 * K[i]
        quad = np.where(quad > 0, quad, TAU)
        eligible = low & (grad_diff > 0)
        if not eligible.any():
            break
        obj = np.where(eligible, -(grad_diff * grad_diff) / quad, np.inf)
        j = int(np.argmin(obj))

        ai_old = alpha[i]
        aj_old = alpha[j]
        ai, aj = _pair_update(ai_old, aj_old, y[i], y[j], G[i], G[j], diag[i], diag[j], K[i, j], C)
        alpha[i] = ai
        alpha[j] = aj
        dai = (ai - ai_old) * y[i]
        daj = (aj - aj_old) * y[j]
        G += y * (K[:, i] * dai + K[:, j] * daj)
        it += 1
    return alpha, G, it


def _pair_update(ai, aj, yi, yj, gi, gj, kii, kjj, kij, C):
    quad = kii + kjj - 2.0 * kij
    if quad <= 0:
        quad = TAU
    if yi != yj:
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        delta = (gi - gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai = C
                aj = total - C
        else:
            if aj < 0:
                aj = 0.0
                ai = total
        if total > C:
            if aj > C:
                aj = C
                ai = total - C
        else:
            if ai < 0:
                ai = 0.0
                aj = total
    return ai, aj
