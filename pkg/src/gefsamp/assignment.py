"""Minimum-cost bipartite assignment by shortest augmenting paths.

Returns the dual potentials along with the matching, so optimality can be
certified through complementary slackness (reduced costs vanish on matched
edges and are nonnegative everywhere).
"""

import numpy as np

from .errors import DomainError


def min_cost_assignment(cost):
    """Solve min sum cost[i, sigma(i)] over injections of rows into columns.

    Requires n_rows <= n_cols (transpose outside if needed).  Returns
    (col4row, u, v): column assigned to each row and the dual potentials.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise DomainError("cost must be a matrix")
    n, m = cost.shape
    if n > m:
        raise DomainError("need n_rows <= n_cols")
    if np.any(~np.isfinite(cost)):
        raise DomainError("cost entries must be finite")
    u = np.zeros(n)
    v = np.zeros(m)
    col4row = np.full(n, -1, dtype=int)
    row4col = np.full(m, -1, dtype=int)
    for cur_row in range(n):
        shortest = np.full(m, np.inf)
        path = np.full(m, -1, dtype=int)
        on_row_path = np.zeros(n, dtype=bool)
        scanned_col = np.zeros(m, dtype=bool)
        i = cur_row
        min_val = 0.0
        sink = -1
        while sink == -1:
            on_row_path[i] = True
            rem = np.nonzero(~scanned_col)[0]
            reduced = min_val + cost[i, rem] - u[i] - v[rem]
            better = reduced < shortest[rem]
            shortest[rem[better]] = reduced[better]
            path[rem[better]] = i
            j_loc = np.argmin(shortest[rem])
            j = rem[j_loc]
            min_val = shortest[j]
            if not np.isfinite(min_val):
                raise DomainError("infeasible assignment problem")
            scanned_col[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
        u[cur_row] += min_val
        others = np.nonzero(on_row_path)[0]
        others = others[others != cur_row]
        u[others] += min_val - shortest[col4row[others]]
        sc = np.nonzero(scanned_col)[0]
        v[sc] -= min_val - shortest[sc]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            col4row[i], j = j, col4row[i]
            if i == cur_row:
                break
    return col4row, u, v


def certify_optimal(cost, col4row, u, v, tol=1e-8):
    """Check complementary slackness of a matching against its duals."""
    cost = np.asarray(cost, dtype=float)
    reduced = cost - u[:, None] - v[None, :]
    scale = max(1.0, float(np.abs(cost).max()))
    if reduced.min() < -tol * scale:
        return False
    rows = np.arange(cost.shape[0])
    return bool(np.all(np.abs(reduced[rows, col4row]) <= tol * scale))
