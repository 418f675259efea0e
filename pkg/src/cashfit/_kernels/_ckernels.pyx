# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels; mirrors ``_pykernels`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

DEF NONE = 0
DEF UP = 1
DEF DOWN = 2

DEF OPTIMAL = 0
DEF INFEASIBLE = 1
DEF ITERATION_LIMIT = 2


def simulate(const double[::1] flows, double b0, double L, double Z, double H):
    cdef Py_ssize_t n = flows.shape[0], t
    balances_a = np.empty(n)
    actions_a = np.empty(n)
    triggers_a = np.zeros(n, dtype=np.int8)
    cdef double[::1] balances = balances_a
    cdef double[::1] actions = actions_a
    cdef signed char[::1] triggers = triggers_a
    cdef double b = b0, w
    for t in range(n):
        w = b + flows[t]
        if w > H:
            actions[t] = Z - w
            triggers[t] = DOWN
            b = Z
        elif w < L:
            actions[t] = Z - w
            triggers[t] = UP
            b = Z
        else:
            actions[t] = 0.0
            b = w
        balances[t] = b
    return balances_a, actions_a, triggers_a


cdef inline double _sim_cost(const double[::1] flows, double b0, double L,
                             double Z, double H, double g0p, double g0m,
                             double g1p, double g1m, double v, double floor,
                             double cutoff) noexcept nogil:
    cdef Py_ssize_t t, n = flows.shape[0]
    cdef double cost = 0.0, b = b0, w
    for t in range(n):
        w = b + flows[t]
        if w > H:
            cost += g0m + g1m * (w - Z)
            b = Z
        elif w < L:
            cost += g0p + g1p * (Z - w)
            b = Z
        else:
            b = w
        if b < floor:
            return INFINITY
        cost = cost + v * b
        if cost >= cutoff:
            return INFINITY
    return cost


def simulate_cost(const double[::1] flows, double b0, double L, double Z,
                  double H, double g0p, double g0m, double g1p, double g1m,
                  double v, double b_min, double floor_tol):
    return _sim_cost(flows, b0, L, Z, H, g0p, g0m, g1p, g1m, v,
                     b_min - floor_tol, INFINITY)


def grid_search(const double[::1] flows, double b0, const double[::1] levels,
                double g0p, double g0m, double g1p, double g1m, double v,
                double b_min, double floor_tol):
    cdef Py_ssize_t G = levels.shape[0], i, j, k
    cdef double floor = b_min - floor_tol
    cdef double best = INFINITY, c, cutoff
    cdef Py_ssize_t bi = -1, bj = -1, bk = -1
    # pruning on a running total is only valid when every increment is >= 0
    cdef bint monotone = floor >= 0.0
    with nogil:
        for i in range(G):
            for j in range(i, G):
                for k in range(j, G):
                    cutoff = best if monotone else INFINITY
                    c = _sim_cost(flows, b0, levels[i], levels[j], levels[k],
                                  g0p, g0m, g1p, g1m, v, floor, cutoff)
                    if c < best:
                        best = c
                        bi = i
                        bj = j
                        bk = k
    return best, bi, bj, bk


cdef void _pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r,
                 Py_ssize_t q, double[::1] row) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, k
    cdef double p = T[r, q], f
    for k in range(n):
        row[k] = T[r, k] / p
    row[q] = 1.0 / p
    for i in range(m):
        if i == r:
            continue
        f = T[i, q]
        if f != 0.0:
            for k in range(n):
                T[i, k] = T[i, k] - f * row[k]
            T[i, q] = -f / p
        else:
            T[i, q] = -0.0 / p
    for k in range(n):
        T[r, k] = row[k]
    f = d[q]
    for k in range(n):
        d[k] = d[k] - f * row[k]
    d[q] = -f / p


def pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r, Py_ssize_t q):
    row = np.empty(T.shape[1])
    _pivot(T, d, r, q, row)


def dual_simplex(double[:, ::1] T, double[::1] d, double[::1] x,
                 const double[::1] lo, const double[::1] hi,
                 cnp.int64_t[::1] head, cnp.int64_t[::1] nb,
                 Py_ssize_t max_iter, double tol_primal, double tol_dual,
                 double tol_pivot, Py_ssize_t bland_after):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t it = 0, degenerate = 0, i, k, r, q, j, j_in, j_out
    cdef double below, above, infeas, best, s, a, absa, dd, theta_max, ratio
    cdef double step, target, theta, best_abs, xr
    cdef bint bland, is_below, at_upper
    cdef double[::1] row = np.empty(n)
    cdef int status = ITERATION_LIMIT
    cdef Py_ssize_t bad_row = -1
    with nogil:
        while it < max_iter:
            bland = degenerate >= bland_after
            r = -1
            best = 0.0
            for i in range(m):
                j = head[i]
                below = lo[j] - x[j]
                above = x[j] - hi[j]
                infeas = below if below >= above else above
                if infeas > tol_primal:
                    if r == -1:
                        r = i
                        best = infeas
                    elif bland:
                        if head[i] < head[r]:
                            r = i
                    elif infeas > best:
                        r = i
                        best = infeas
            if r == -1:
                status = OPTIMAL
                break
            j_out = head[r]
            xr = x[j_out]
            is_below = (lo[j_out] - xr) > tol_primal
            s = 1.0 if is_below else -1.0
            # ratio test, first pass
            q = -1
            theta_max = INFINITY
            for k in range(n):
                j = nb[k]
                if lo[j] == hi[j]:
                    continue
                a = T[r, k]
                absa = fabs(a)
                if not absa > tol_pivot:
                    continue
                at_upper = x[j] == hi[j]
                if at_upper:
                    if not s * a > 0.0:
                        continue
                    dd = -d[k]
                else:
                    if not s * a < 0.0:
                        continue
                    dd = d[k]
                if dd < 0.0:
                    dd = 0.0
                if bland:
                    ratio = dd / absa
                    if q == -1 or ratio < theta_max or (ratio == theta_max and nb[k] < nb[q]):
                        theta_max = ratio
                        q = k
                else:
                    ratio = (dd + tol_dual) / absa
                    if ratio < theta_max:
                        theta_max = ratio
                    q = k
            if q == -1:
                status = INFEASIBLE
                bad_row = r
                break
            if not bland:
                # second pass: largest |alpha| among admissible candidates
                q = -1
                best_abs = 0.0
                for k in range(n):
                    j = nb[k]
                    if lo[j] == hi[j]:
                        continue
                    a = T[r, k]
                    absa = fabs(a)
                    if not absa > tol_pivot:
                        continue
                    at_upper = x[j] == hi[j]
                    if at_upper:
                        if not s * a > 0.0:
                            continue
                        dd = -d[k]
                    else:
                        if not s * a < 0.0:
                            continue
                        dd = d[k]
                    if dd < 0.0:
                        dd = 0.0
                    if dd / absa <= theta_max and absa > best_abs:
                        best_abs = absa
                        q = k
            step = fabs(d[q] / T[r, q])
            if step <= 1e-12:
                degenerate += 1
            else:
                degenerate = 0
            target = lo[j_out] if is_below else hi[j_out]
            theta = (xr - target) / T[r, q]
            j_in = nb[q]
            for i in range(m):
                x[head[i]] = x[head[i]] - T[i, q] * theta
            x[j_in] = x[j_in] + theta
            x[j_out] = target
            _pivot(T, d, r, q, row)
            head[r] = j_in
            nb[q] = j_out
            it += 1
    return status, it, bad_row
