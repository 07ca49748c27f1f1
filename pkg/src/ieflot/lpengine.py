"""Restricted-master column generation over matchings.

The full welfare LP has one probability variable per matching (n! of them)
and one interim-envy row per (agent i, item j, other agent k).  We keep a
restricted master over the matchings generated so far, read off its duals,
and ask a pricing oracle for a column whose dual constraint is violated;
the oracle is exactly the dual separation step, run on the primal side.

The dense subsolver is HiGHS dual simplex through scipy, so master optima
are vertices.  Dual values are reported in the "pricing frame": the row
duals y(i, j, k) are nonnegative and the convexity dual z enters pricing
as an additive z / (n (n - 1)) term on every edge pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .model import Instance, Lottery, Matching
from .twoebm import EdgePairWeights, solve_2ebm

PRICE_TOL = 1e-7
FEAS_TOL = 1e-7
SUPPORT_PRUNE = 1e-9


class InfeasibleError(Exception):
    """The LP has no feasible point (no lottery satisfies the constraints)."""


class ColumnGenError(Exception):
    pass


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    objective: float = None
    duals_ub: np.ndarray = None  # d(objective)/d(b_ub), caller's sense
    duals_eq: np.ndarray = None


def dense_lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None), maximize=False):
    """Vertex-optimal dense LP solve with duals.

    Duals follow the sensitivity convention in the caller's own sense:
    for a maximization, the dual of a binding ``x <= 1`` row is +1.
    """
    c = np.asarray(c, dtype=float)
    sign = -1.0 if maximize else 1.0
    res = linprog(
        sign * c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
    )
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        raise ColumnGenError(f"LP subsolver failure: {res.message}")
    return LpSolution(
        "optimal",
        x=res.x,
        objective=sign * res.fun,
        duals_ub=None if A_ub is None else sign * res.ineqlin.marginals,
        duals_eq=None if A_eq is None else sign * res.eqlin.marginals,
    )


@dataclass
class DualPoint:
    """Master duals in the pricing frame.

    y3[i, j, k] >= 0 is the dual of the interim-envy row (i, j, k); z is
    the convexity-row dual as it appears in the edge-pair weights.  Extra
    per-problem duals (payment rows) live in ``extra``.
    """

    n: int
    y3: np.ndarray
    z: float
    extra: dict = field(default_factory=dict)


def ief_rows(n):
    """Row index (agent i, item j, other agent k) of the interim-envy family."""
    return [(i, j, k) for i in range(n) for j in range(n) for k in range(n) if k != i]


def ief_column(values: np.ndarray, assignment, rows) -> np.ndarray:
    """Constraint coefficients of a matching column on the interim-envy rows:
    [assignment(i) = j] * (v_i(j) - v_i(assignment(k)))."""
    col = np.zeros(len(rows))
    for r, (i, j, k) in enumerate(rows):
        if assignment[i] == j:
            col[r] = values[i, j] - values[i, assignment[k]]
    return col


def duals_to_point(n, rows, y_row, z) -> DualPoint:
    y3 = np.zeros((n, n, n))
    for r, (i, j, k) in enumerate(rows):
        y3[i, j, k] = max(y_row[r], 0.0)
    return DualPoint(n, y3, z)


def phase1_pair_weights(instance: Instance, duals: DualPoint, allowed=None) -> EdgePairWeights:
    """Pricing weights with no welfare term: (v_i(j) - v_i(l)) y(i,j,k) + z/(n(n-1))."""
    n = instance.n_agents
    v = instance.float_matrix()
    diff = v[:, :, None] - v[:, None, :]  # [i, j, l]
    psi = diff[:, :, None, :] * duals.y3[:, :, :, None]  # [i, j, k, l]
    psi += duals.z / (n * (n - 1))
    return EdgePairWeights(n, psi, allowed)


class MasterProblem:
    """Restricted welfare master: max sum_b x(b) sw(b) over generated columns,
    subject to the interim-envy rows and the convexity row.

    In phase-1 mode the objective is instead to minimize the total violation
    of the interim-envy rows, measured by one slack variable per row.
    """

    def __init__(self, instance: Instance, phase1=False):
        self.instance = instance
        self.values = instance.float_matrix()
        self.n = instance.n_agents
        self.rows = ief_rows(self.n)
        self.columns = []  # Matching
        self.sw = []  # objective coefficient per column
        self._cols = {}
        self._coeffs = []  # cached constraint column per matching
        self.phase1 = phase1

    def has_column(self, matching: Matching) -> bool:
        return matching.assignment in self._cols

    def add_column(self, matching: Matching, sw_value: float = 0.0) -> bool:
        if self.has_column(matching):
            return False
        self._cols[matching.assignment] = len(self.columns)
        self.columns.append(matching)
        self.sw.append(float(sw_value))
        self._coeffs.append(ief_column(self.values, matching.assignment, self.rows))
        return True

    def solve(self):
        ncols = len(self.columns)
        nrows = len(self.rows)
        A = np.column_stack(self._coeffs) if ncols else np.zeros((nrows, 0))
        if self.phase1:
            # min sum of slacks s, rows A x + s >= 0
            nv = ncols + nrows
            c = np.concatenate([np.zeros(ncols), np.ones(nrows)])
            A_ub = np.hstack([-A, -np.eye(nrows)]) if nrows else None
            A_eq = np.zeros((1, nv))
            A_eq[0, :ncols] = 1.0
            sol = dense_lp_solve(c, A_ub, np.zeros(nrows) if nrows else None, A_eq, [1.0])
        else:
            c = np.array(self.sw)
            A_eq = np.ones((1, ncols))
            sol = dense_lp_solve(
                c, -A if nrows else None, np.zeros(nrows) if nrows else None,
                A_eq, [1.0], maximize=True,
            )
        if sol.status != "optimal":
            return sol, None
        # pricing frame: y = -marginal of the (-A x <= 0) row, z = convexity marginal
        y_row = sol.duals_ub if sol.duals_ub is not None else np.zeros(nrows)
        if self.phase1:
            y_row = -y_row
            z = sol.duals_eq[0]
        else:
            # for the max problem duals_ub already carries the caller-sense sign
            z = -sol.duals_eq[0]
        duals = duals_to_point(self.n, self.rows, y_row, z)
        return sol, duals

    def lottery(self, sol: LpSolution) -> Lottery:
        x = sol.x[: len(self.columns)]
        keep = [(b, float(p)) for b, p in zip(self.columns, x) if p > SUPPORT_PRUNE]
        total = sum(p for _, p in keep)
        return Lottery(tuple((b, p / total) for b, p in keep))


def solve_master(master: MasterProblem, oracle, tol=PRICE_TOL, max_iter=None):
    """Column generation loop: solve restricted master, price, repeat.

    ``oracle(duals)`` returns (violation, columns); violation <= tol means
    no dual constraint is violated and the restricted optimum is optimal
    for the full LP.  Returns (solution, duals, iterations).
    """
    n = master.n
    if max_iter is None:
        max_iter = 10 * n**3 + 1000
    last = None
    for it in range(1, max_iter + 1):
        sol, duals = master.solve()
        if sol.status != "optimal":
            return sol, None, it
        violation, columns = oracle(duals)
        if violation <= tol:
            return sol, duals, it
        added = False
        for matching, sw_value in columns:
            added |= master.add_column(matching, sw_value)
        if not added:
            # numerically stalled: the priced columns are already present, so
            # the restricted optimum cannot move; accept it with the residual
            if violation > 100 * tol:
                raise ColumnGenError(
                    f"pricing reports violation {violation} but no new column"
                )
            return sol, duals, it
        last = sol
    raise ColumnGenError(f"iteration cap {max_iter} exceeded (last obj {last and last.objective})")


def phase1_feasibility(instance: Instance, allowed=None, seed=None):
    """Minimum total interim-envy violation over all lotteries.

    Returns (feasible, columns, slack_optimum).  The generated columns are a
    warm start for the welfare master.  ``allowed`` restricts matchings to an
    edge mask (used by the log-Nash objective).
    """
    if instance.n_agents == 1:
        return True, [Matching((0,))], 0.0
    master = MasterProblem(instance, phase1=True)
    if seed is None:
        from .twoebm import max_weight_assignment

        mask_vals = instance.float_matrix()
        if allowed is not None:
            mask_vals = np.where(allowed, mask_vals, -1e9)
        seed_matching, _ = max_weight_assignment(instance.n_agents, mask_vals)
        if allowed is not None and not all(
            allowed[i, seed_matching[i]] for i in range(instance.n_agents)
        ):
            raise InfeasibleError("no perfect matching within the allowed edges")
        seed = [seed_matching]
    for b in seed:
        master.add_column(b)

    def oracle(duals):
        weights = phase1_pair_weights(instance, duals, allowed)
        b, value = solve_2ebm(weights)
        return value, [(b, 0.0)]

    sol, _, _ = solve_master(master, oracle)
    if sol.status != "optimal":
        raise ColumnGenError("phase-1 master failed")
    feasible = sol.objective <= FEAS_TOL
    return feasible, list(master.columns), sol.objective
