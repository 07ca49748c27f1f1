"""Tiny exact-arithmetic LP solver (two-phase simplex over Fractions).

Built for the brute-force side of the test oracles: feasibility of interim
envy-freeness on small instances, and the 3-agent payment LPs.  Bland's rule
throughout, so it cannot cycle; it is O(everything) and meant for problems
with at most a few hundred variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

LE, GE, EQ = "<=", ">=", "="


@dataclass
class ExactLpResult:
    status: str  # optimal | infeasible | unbounded
    x: list | None = None
    objective: Fraction | None = None


def _pivot(tab, basis, row, col):
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    for r in range(len(tab)):
        if r != row and tab[r][col] != 0:
            f = tab[r][col]
            tab[r] = [a - f * b for a, b in zip(tab[r], tab[row])]
    basis[row] = col


def _reduced_costs(tab, basis, cost):
    ncols = len(tab[0]) - 1
    z = list(cost) + [Fraction(0)]
    for r, bcol in enumerate(basis):
        cb = cost[bcol]
        if cb != 0:
            z = [zv - cb * tv for zv, tv in zip(z, tab[r])]
    return z[:ncols], -z[ncols]


def _simplex(tab, basis, cost):
    # minimizes cost over the canonical tableau; Bland's rule
    while True:
        red, _ = _reduced_costs(tab, basis, cost)
        col = next((j for j, rj in enumerate(red) if rj < 0), None)
        if col is None:
            return "optimal"
        best_row, best_ratio = None, None
        for r, row in enumerate(tab):
            if row[col] > 0:
                ratio = row[-1] / row[col]
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[r] < basis[best_row])
                ):
                    best_row, best_ratio = r, ratio
        if best_row is None:
            return "unbounded"
        _pivot(tab, basis, best_row, col)


def solve_exact(c, rows, senses, rhs, maximize=False) -> ExactLpResult:
    """Solve min (or max) c.x subject to rows[i] . x (senses[i]) rhs[i], x >= 0.

    All data is converted to Fractions; the result is exact.
    """
    nv = len(c)
    c = [Fraction(v) for v in c]
    if maximize:
        c = [-v for v in c]
    rows = [[Fraction(v) for v in row] for row in rows]
    rhs = [Fraction(v) for v in rhs]

    # standard form: append slack/surplus columns, make rhs nonnegative
    aug = []
    nslack = sum(1 for s in senses if s in (LE, GE))
    total = nv + nslack
    si = 0
    for row, sense, b in zip(rows, senses, rhs):
        slack = [Fraction(0)] * nslack
        if sense in (LE, GE):
            slack[si] = Fraction(1) if sense == LE else Fraction(-1)
            si += 1
        full = row + slack
        if b < 0:
            full = [-v for v in full]
            b = -b
        aug.append((full, b))

    m = len(aug)
    # phase 1: artificial variable per row
    tab = []
    basis = []
    for r, (row, b) in enumerate(aug):
        art = [Fraction(0)] * m
        art[r] = Fraction(1)
        tab.append(row + art + [b])
        basis.append(total + r)
    cost1 = [Fraction(0)] * total + [Fraction(1)] * m
    status = _simplex(tab, basis, cost1)
    _, obj1 = _reduced_costs(tab, basis, cost1)
    if obj1 > 0:
        return ExactLpResult("infeasible")

    # drive leftover artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(len(tab)):
        if basis[r] >= total:
            col = next((j for j in range(total) if tab[r][j] != 0), None)
            if col is None:
                continue  # redundant row
            _pivot(tab, basis, r, col)
        keep.append(r)
    tab = [tab[r][: total] + [tab[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]

    cost2 = c + [Fraction(0)] * nslack
    status = _simplex(tab, basis, cost2)
    if status == "unbounded":
        return ExactLpResult("unbounded")
    x = [Fraction(0)] * total
    for r, bcol in enumerate(basis):
        x[bcol] = tab[r][-1]
    obj = sum(ci * xi for ci, xi in zip(c, x[:nv]))
    if maximize:
        obj = -obj
    return ExactLpResult("optimal", x[:nv], obj)


def feasible_exact(rows, senses, rhs, nv) -> bool:
    """Pure feasibility check for rows . x (sense) rhs, x >= 0."""
    res = solve_exact([Fraction(0)] * nv, rows, senses, rhs)
    return res.status == "optimal"
