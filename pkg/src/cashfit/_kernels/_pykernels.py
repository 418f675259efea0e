"""Pure-Python/numpy implementations of the numerical kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same tie-breaking, so both backends return identical results.
"""
import numpy as np

# trigger codes shared with the compiled backend
NONE, UP, DOWN = 0, 1, 2

# dual simplex status codes
OPTIMAL, INFEASIBLE, ITERATION_LIMIT = 0, 1, 2


def simulate(flows, b0, L, Z, H):
    """Fold the bound policy over ``flows``; returns (balances, actions, triggers)."""
    n = len(flows)
    balances = np.empty(n)
    actions = np.empty(n)
    triggers = np.zeros(n, dtype=np.int8)
    b = float(b0)
    for t in range(n):
        w = b + flows[t]
        if w > H:
            x = Z - w
            triggers[t] = DOWN
        elif w < L:
            x = Z - w
            triggers[t] = UP
        else:
            x = 0.0
        # restore to Z exactly rather than w + (Z - w)
        b = Z if triggers[t] != NONE else w
        balances[t] = b
        actions[t] = x
    return balances, actions, triggers


def simulate_cost(flows, b0, L, Z, H, g0p, g0m, g1p, g1m, v, b_min, floor_tol):
    """Unaveraged cost with linear holding ``v*b``; inf if the floor is breached."""
    cost = 0.0
    b = float(b0)
    floor = b_min - floor_tol
    for t in range(len(flows)):
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
            return np.inf
        cost += v * b
    return cost


def grid_search(flows, b0, levels, g0p, g0m, g1p, g1m, v, b_min, floor_tol):
    """Exhaustive search over ``levels[i] <= levels[j] <= levels[k]``.

    Returns ``(cost, i, j, k)`` of the first minimum in (L, Z, H)
    lexicographic order, or ``(inf, -1, -1, -1)`` when nothing is feasible.
    """
    flows = np.asarray(flows, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64)
    G = len(levels)
    floor = b_min - floor_tol
    best = np.inf
    best_idx = (-1, -1, -1)
    jj, kk = np.triu_indices(G)
    for i in range(G):
        mask = jj >= i
        zi = jj[mask]
        hi = kk[mask]
        L = levels[i]
        Z = levels[zi]
        H = levels[hi]
        cost = np.zeros(len(zi))
        alive = np.ones(len(zi), dtype=bool)
        b = np.full(len(zi), float(b0))
        for t in range(len(flows)):
            w = b + flows[t]
            down = w > H
            up = (~down) & (w < L)
            cost = np.where(down, cost + (g0m + g1m * (w - Z)), cost)
            cost = np.where(up, cost + (g0p + g1p * (Z - w)), cost)
            b = np.where(down | up, Z, w)
            alive &= b >= floor
            cost = cost + v * b
        cost = np.where(alive, cost, np.inf)
        if len(cost) == 0:
            continue
        m = int(np.argmin(cost))
        if cost[m] < best:
            best = float(cost[m])
            best_idx = (i, int(zi[m]), int(hi[m]))
    return (best,) + best_idx


def pivot(T, d, r, q):
    """Condensed-tableau pivot on ``T[r, q]``; updates ``T`` and ``d`` in place."""
    p = T[r, q]
    row = T[r] / p
    row[q] = 1.0 / p
    col = T[:, q].copy()
    col[r] = 0.0
    T -= np.outer(col, row)
    T[:, q] = -col / p
    T[r] = row
    f = d[q]
    d -= f * row
    d[q] = -f / p


def dual_simplex(T, d, x, lo, hi, head, nb, max_iter, tol_primal, tol_dual,
                 tol_pivot, bland_after):
    """Bounded dual simplex on a condensed tableau, in place.

    ``T`` is B^-1 N with basic rows ``head`` and nonbasic columns ``nb``;
    ``d`` holds reduced costs of the nonbasic columns and ``x`` the values of
    all variables. Nonbasic variables sit exactly on a bound. Returns
    ``(status, iterations, row)`` where ``row`` is the infeasible row when
    status is INFEASIBLE.
    """
    m, n = T.shape
    degenerate = 0
    it = 0
    while it < max_iter:
        xb = x[head]
        lb = lo[head]
        ub = hi[head]
        below = lb - xb
        above = xb - ub
        infeas = np.maximum(below, above)
        cand = np.flatnonzero(infeas > tol_primal)
        if cand.size == 0:
            return OPTIMAL, it, -1
        bland = degenerate >= bland_after
        if bland:
            r = int(cand[np.argmin(head[cand])])
        else:
            r = int(cand[np.argmax(infeas[cand])])
        j_out = head[r]
        is_below = below[r] > tol_primal
        s = 1.0 if is_below else -1.0
        alpha = T[r]
        xn = x[nb]
        at_upper = xn == hi[nb]
        free = lo[nb] != hi[nb]
        sa = s * alpha
        ok = free & (np.abs(alpha) > tol_pivot) & (
            ((~at_upper) & (sa < 0.0)) | (at_upper & (sa > 0.0)))
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            return INFEASIBLE, it, r
        absa = np.abs(alpha[idx])
        dd = np.where(at_upper[idx], -d[idx], d[idx])
        dd = np.maximum(dd, 0.0)
        if bland:
            ratio = dd / absa
            rmin = ratio.min()
            ties = idx[ratio == rmin]
            q = int(ties[np.argmin(nb[ties])])
        else:
            theta_max = ((dd + tol_dual) / absa).min()
            ratio = dd / absa
            inside = ratio <= theta_max
            sub = idx[inside]
            q = int(sub[np.argmax(absa[inside])])
        step = abs(d[q] / alpha[q])
        if step <= 1e-12:
            degenerate += 1
        else:
            degenerate = 0
        target = lo[j_out] if is_below else hi[j_out]
        theta = (x[j_out] - target) / alpha[q]
        j_in = nb[q]
        x[head] -= T[:, q] * theta
        x[j_in] += theta
        x[j_out] = target
        pivot(T, d, r, q)
        head[r] = j_in
        nb[q] = j_out
        it += 1
    return ITERATION_LIMIT, it, -1
