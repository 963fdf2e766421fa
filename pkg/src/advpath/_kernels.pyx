# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_fallback.py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isnan

cnp.import_array()

cdef double TAU = 1e-12


def value_sweeps(const cnp.uint8_t[:, ::1] free, double[:, ::1] values,
                 Py_ssize_t gx, Py_ssize_t gy, double step_reward,
                 double goal_reward, Py_ssize_t max_sweeps, double tol):
    cdef Py_ssize_t h = values.shape[0]
    cdef Py_ssize_t w = values.shape[1]
    cdef double[:, ::1] old = np.empty((h, w))
    cdef Py_ssize_t x, y, nx, ny, dx, dy, sweeps = 0
    cdef double best, v, new, d, change
    while sweeps < max_sweeps:
        old[...] = values
        change = 0.0
        for y in range(h):
            for x in range(w):
                if free[y, x] == 0:
                    new = -INFINITY
                elif x == gx and y == gy:
                    new = goal_reward
                else:
                    best = -INFINITY
                    for dy in range(-1, 2):
                        ny = y + dy
                        if ny < 0 or ny >= h:
                            continue
                        for dx in range(-1, 2):
                            if dx == 0 and dy == 0:
                                continue
                            nx = x + dx
                            if nx < 0 or nx >= w:
                                continue
                            v = old[ny, nx]
                            if v > best:
                                best = v
                    new = best + step_reward
                d = fabs(new - old[y, x])
                if not isnan(d) and d > change:
                    change = d
                values[y, x] = new
        sweeps += 1
        if tol >= 0 and change <= tol:
            break
    return sweeps


def smo_solve(const double[:, ::1] K, const double[::1] y, double C,
              double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t n = y.shape[0]
    alpha_arr = np.zeros(n)
    G_arr = -np.ones(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef Py_ssize_t t, i, j, it = 0
    cdef double gmax, gmax2, mg, b, a, obj, best_obj
    cdef double ai, aj, ai_old, aj_old, quad, delta, diff, total, dai, daj
    cdef bint is_up, is_low
    while it < max_iter:
        i = -1
        gmax = -INFINITY
        gmax2 = -INFINITY
        for t in range(n):
            if y[t] > 0:
                is_up = alpha[t] < C
                is_low = alpha[t] > 0
            else:
                is_up = alpha[t] > 0
                is_low = alpha[t] < C
            if is_up:
                mg = -y[t] * G[t]
                if i == -1 or mg > gmax:
                    gmax = mg
                    i = t
            if is_low:
                mg = y[t] * G[t]
                if mg > gmax2:
                    gmax2 = mg
        if i == -1 or gmax2 == -INFINITY:
            break
        if gmax + gmax2 < tol:
            break

        j = -1
        best_obj = INFINITY
        for t in range(n):
            if y[t] > 0:
                is_low = alpha[t] > 0
            else:
                is_low = alpha[t] < C
            if not is_low:
                continue
            b = gmax + y[t] * G[t]
            if b > 0:
                a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                if not a > 0:
                    a = TAU
                obj = -(b * b) / a
                if obj < best_obj:
                    best_obj = obj
                    j = t
        if j == -1:
            break

        ai_old = alpha[i]
        aj_old = alpha[j]
        ai = ai_old
        aj = aj_old
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
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
            delta = (G[i] - G[j]) / quad
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
        alpha[i] = ai
        alpha[j] = aj
        dai = (ai - ai_old) * y[i]
        daj = (aj - aj_old) * y[j]
        for t in range(n):
            G[t] = G[t] + y[t] * (K[t, i] * dai + K[t, j] * daj)
        it += 1
    return alpha_arr, G_arr, it
