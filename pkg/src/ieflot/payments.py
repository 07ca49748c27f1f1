"""Interim envy-freeness with payments.

Three payment granularities: per agent (A), per bundle (B), and per agent
and support allocation (C).  The module provides

* the interim envy graph and the characterization of lotteries that can be
  made iEF with A-payments (no positive-weight cycle), with the longest-path
  payment construction;
* the checker for all three payment kinds, with an additive epsilon slack;
* column-generation solvers for subsidy minimization and rent-style utility
  maximization with C-payments, including the epsilon transformation that
  repairs support-zero payment mass;
* a small-instance exact search comparing the best A- and B-payment
  solutions (the two payment kinds are incomparable in general).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import ratlp
from .fairness import FairnessReport, is_proportional
from .lpengine import (
    DualPoint,
    InfeasibleError,
    ColumnGenError,
    dense_lp_solve,
    duals_to_point,
    ief_column,
    ief_rows,
    phase1_feasibility,
    phase1_pair_weights,
)
from .model import (
    Instance,
    Lottery,
    Matching,
    conditional_bundle_value,
    outcome_key,
)
from .twoebm import max_weight_assignment, solve_2ebm

PRICE_TOL = 1e-7
SUPPORT_EPS = 1e-9


class PositiveCycleError(Exception):
    """The interim envy graph has a positive-weight cycle: no A-payments work."""


@dataclass(frozen=True)
class PaymentScheme:
    """kind 'A': per-agent vector; 'B': payment per canonical bundle;
    'C': per (support outcome, agent), keyed by the outcome."""

    kind: str
    data: object

    def agent_payment(self, i):
        return self.data[i]

    def bundle_payment(self, bundle):
        return self.data[tuple(sorted(bundle))]

    def outcome_payment(self, outcome, i):
        return self.data[outcome_key(outcome)][i]

    def total(self):
        if self.kind == "A":
            return sum(self.data)
        if self.kind == "B":
            return sum(self.data.values())
        raise ValueError("total of C-payments depends on the lottery")

    @classmethod
    def a_payments(cls, vector):
        return cls("A", tuple(vector))

    @classmethod
    def b_payments(cls, mapping):
        return cls("B", {tuple(sorted(k)) if isinstance(k, tuple) else (k,): v
                         for k, v in mapping.items()})

    @classmethod
    def c_payments(cls, mapping):
        return cls("C", dict(mapping))


@dataclass
class InterimEnvyGraph:
    """Complete digraph on agents; w[i][k] is agent i's worst conditional
    envy toward agent k over the bundles i can receive."""

    n: int
    weights: list  # n x n, diagonal unused (zero)


def build_envy_graph(instance: Instance, lottery: Lottery) -> InterimEnvyGraph:
    n = instance.n_agents
    w = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        bundles = lottery.agent_bundles(i)
        for k in range(n):
            if k == i:
                continue
            w[i][k] = max(
                conditional_bundle_value(instance, lottery, i, k, s)
                - instance.bundle_value(i, s)
                for s in bundles
            )
    return InterimEnvyGraph(n, w)


def _longest_paths(graph: InterimEnvyGraph):
    """Maximizing Bellman-Ford; returns (payments, has_positive_cycle).

    d_i after r rounds is the best total weight of a walk from i using at
    most r edges (walks may stop early, so d >= 0).  Without positive
    cycles this converges to the longest-path value in n - 1 rounds; an
    improving n-th round certifies a positive cycle.
    """
    n, w = graph.n, graph.weights
    d = [w[0][0] * 0] * n  # zero in the weight type (Fraction or float)
    for _ in range(max(n - 1, 0)):
        d = [max(d[i], max((w[i][k] + d[k] for k in range(n) if k != i), default=d[i]))
             for i in range(n)]
    improved = any(
        w[i][k] + d[k] > d[i] for i in range(n) for k in range(n) if k != i
    )
    return d, improved


def is_ief_able_A(graph: InterimEnvyGraph) -> bool:
    """True iff the graph has no directed cycle of positive total weight."""
    _, positive_cycle = _longest_paths(graph)
    return not positive_cycle


def compute_A_payments(graph: InterimEnvyGraph):
    """Agent payments p_i = total weight of the longest path starting at i.

    Valid (the pair passes the A-payment check exactly) whenever there is
    no positive cycle; otherwise raises PositiveCycleError.
    """
    payments, positive_cycle = _longest_paths(graph)
    if positive_cycle:
        raise PositiveCycleError("interim envy graph has a positive-weight cycle")
    return tuple(payments)


def check_ief_with_payments(instance: Instance, lottery: Lottery,
                            scheme: PaymentScheme, epsilon=0) -> FairnessReport:
    """Definition check for iEF with A-, B-, or C-payments, slack epsilon.

    The margin is the minimum over all (agent i, bundle S, agent k) of
    LHS - RHS before the epsilon slack.
    """
    n = instance.n_agents
    exact = lottery.is_exact()
    margin = None
    witness = None
    for i in range(n):
        for bundle in lottery.agent_bundles(i):
            own = instance.bundle_value(i, bundle)
            mass = lottery.bundle_probability(i, bundle)
            cond = [
                (outcome, p / mass)
                for outcome, p in lottery.support
                if tuple(sorted(outcome.bundle(i))) == bundle
            ]
            if scheme.kind == "C":
                own = own + sum(q * scheme.outcome_payment(o, i) for o, q in cond)
            elif scheme.kind == "B":
                own = own + scheme.bundle_payment(bundle)
            for k in range(n):
                if k == i:
                    continue
                rival = sum(q * instance.bundle_value(i, o.bundle(k)) for o, q in cond)
                if scheme.kind == "A":
                    rival = rival + scheme.agent_payment(k) - scheme.agent_payment(i)
                elif scheme.kind == "B":
                    rival = rival + sum(
                        q * scheme.bundle_payment(o.bundle(k)) for o, q in cond
                    )
                else:
                    rival = rival + sum(q * scheme.outcome_payment(o, k) for o, q in cond)
                gap = own - rival
                if margin is None or gap < margin:
                    margin, witness = gap, (i, k, bundle)
    slack = 0 if exact and not isinstance(margin, float) else 1e-9
    holds = margin is None or margin >= -epsilon - slack
    return FairnessReport(f"ief_with_{scheme.kind}_payments", holds,
                          None if holds else witness, margin)


# ---------------------------------------------------------------------------
# column-generation masters for the two payment LPs


class _PaymentsMaster:
    """Restricted master with one probability variable x(b) and n payment
    mass variables t_i(b) per generated matching.

    subsidy mode:  min sum t, rows sum_{b: b(i)=j} [x (v_ij - v_i(b(k))) + t_i - t_k] >= 0
    utility mode:  max q, extra rows q <= E[v_i] - sum_b t_i(b), rent row sum t = R;
                   here t_i(b) stands for -x(b) p_i(b) (payments are collected)
    phase-1 mode:  utility rows with violation slacks, minimized (used when
                   the seeded utility master is infeasible)
    """

    def __init__(self, instance: Instance, mode, rent=0.0):
        self.instance = instance
        self.mode = mode
        self.rent = float(rent)
        self.values = instance.float_matrix()
        self.n = instance.n_agents
        self.rows = ief_rows(self.n)
        self.columns = []
        self._cols = {}
        self._ief_coeffs = []

    def has_column(self, matching):
        return matching.assignment in self._cols

    def add_column(self, matching, _sw=0.0):
        if self.has_column(matching):
            return False
        self._cols[matching.assignment] = len(self.columns)
        self.columns.append(matching)
        self._ief_coeffs.append(ief_column(self.values, matching.assignment, self.rows))
        return True

    @property
    def _has_q(self):
        return self.mode == "utility"

    def _x_index(self, c):
        return (1 if self._has_q else 0) + c * (1 + self.n)

    def solve(self):
        n, rows = self.n, self.rows
        ncols = len(self.columns)
        nslack = len(rows) if self.mode == "phase1" else 0
        nv = (1 if self._has_q else 0) + ncols * (1 + n) + nslack

        # interim-envy rows over x and t; in utility/phase-1 mode t stands
        # for -x p and flips sign
        t_sign = 1.0 if self.mode == "subsidy" else -1.0
        A_ief = np.zeros((len(rows), nv))
        for c, b in enumerate(self.columns):
            base = self._x_index(c)
            A_ief[:, base] = self._ief_coeffs[c]
            for r, (i, j, k) in enumerate(rows):
                if b[i] == j:
                    A_ief[r, base + 1 + i] += t_sign
                    A_ief[r, base + 1 + k] -= t_sign
        if nslack:
            A_ief[:, nv - nslack :] = np.eye(nslack)

        conv = np.zeros(nv)
        rent_row = np.zeros(nv)
        for c in range(ncols):
            conv[self._x_index(c)] = 1.0
            rent_row[self._x_index(c) + 1 : self._x_index(c) + 1 + n] = 1.0
        bounds = [(0, None)] * nv
        if self._has_q:
            bounds[0] = (None, None)

        if self.mode == "subsidy":
            sol = dense_lp_solve(rent_row, -A_ief, np.zeros(len(rows)),
                                 conv[None, :], [1.0], bounds=bounds)
            if sol.status != "optimal":
                return sol, None
            y_row, z = -sol.duals_ub, sol.duals_eq[0]
            extra = {"g": 0.0, "w": np.zeros(n)}
        elif self.mode == "phase1":
            c_obj = np.zeros(nv)
            c_obj[nv - nslack :] = 1.0
            A_eq = np.vstack([conv, rent_row])
            sol = dense_lp_solve(c_obj, -A_ief, np.zeros(len(rows)),
                                 A_eq, [1.0, self.rent], bounds=bounds)
            if sol.status != "optimal":
                return sol, None
            y_row, z = -sol.duals_ub, sol.duals_eq[0]
            extra = {"g": float(sol.duals_eq[1]), "w": np.zeros(n)}
        else:
            # agent utility rows: q - sum_b x(b) v_i(b(i)) + sum_b t_i(b) <= 0
            A_util = np.zeros((n, nv))
            A_util[:, 0] = 1.0
            for c, b in enumerate(self.columns):
                base = self._x_index(c)
                for i in range(n):
                    A_util[i, base] = -self.values[i, b[i]]
                    A_util[i, base + 1 + i] = 1.0
            A_ub = np.vstack([A_util, -A_ief])
            A_eq = np.vstack([conv, rent_row])
            c_obj = np.zeros(nv)
            c_obj[0] = 1.0  # maximize the minimum expected utility
            sol = dense_lp_solve(c_obj, A_ub, np.zeros(n + len(rows)),
                                 A_eq, [1.0, self.rent], bounds=bounds, maximize=True)
            if sol.status != "optimal":
                return sol, None
            y_row, z = sol.duals_ub[n:], -sol.duals_eq[0]
            extra = {"g": float(-sol.duals_eq[1]),
                     "w": np.maximum(sol.duals_ub[:n], 0.0)}
        duals = duals_to_point(self.n, rows, y_row, z)
        duals.extra = extra
        return sol, duals

    def extract(self, sol):
        """Per-column (x, t) values from the solution vector."""
        n = self.n
        x = np.zeros(len(self.columns))
        t = np.zeros((len(self.columns), n))
        for c in range(len(self.columns)):
            base = self._x_index(c)
            x[c] = sol.x[base]
            t[c] = sol.x[base + 1 : base + 1 + n]
        q = sol.x[0] if self._has_q else None
        return x, t, q


def _price_payment_columns(instance, duals, mode):
    """Separation for the payment duals: a 2EBM call for the lottery family
    and one classical assignment per agent for the payment family."""
    n = instance.n_agents
    v = instance.float_matrix()
    y3 = duals.y3
    w = duals.extra["w"]
    g = duals.extra["g"]

    weights = phase1_pair_weights(instance, duals)
    if mode == "utility":
        weights.psi += (w[:, None] * v)[:, :, None, None] / (n - 1)
    b_star, violation = solve_2ebm(weights)
    found = [(b_star, 0.0)] if violation > PRICE_TOL else []

    y_out = y3.sum(axis=2)  # sum_k y(i, l, k) at [i, l]
    for i in range(n):
        cost = np.empty((n, n))
        if mode == "subsidy":
            for r in range(n):
                cost[r] = (y_out[i] - 1.0 / n) if r == i else (-y3[r, :, i] - 1.0 / n)
        else:
            for r in range(n):
                base = -w[i] / n + g / n
                cost[r] = (-y_out[i] + base) if r == i else (y3[r, :, i] + base)
        b_i, value = max_weight_assignment(n, cost)
        violation = max(violation, value)
        if value > PRICE_TOL:
            found.append((b_i, 0.0))
    return violation, found


def epsilon_repair(support, t_values, epsilon, mode, v_max):
    """Turn an extreme master solution into an epsilon-iEF lottery with
    C-payments.

    ``support`` is [(matching, x)] including entries with x = 0 but payment
    mass; payment mass is untouched, probabilities are damped by
    delta = epsilon / (2 v_max) (subsidy) or epsilon / v_max (utility) and
    the freed mass spread over the x = 0 matchings, so each payment
    p_i(b) = +-t_i(b) / x'(b) is finite.
    """
    k1 = [(b, x, t) for (b, x), t in zip(support, t_values) if x > SUPPORT_EPS]
    k2 = [(b, t) for (b, x), t in zip(support, t_values)
          if x <= SUPPORT_EPS and max(t, default=0) > SUPPORT_EPS]
    sign = 1.0 if mode == "subsidy" else -1.0
    if not k2:
        total = sum(x for _, x, _ in k1)
        entries = [(b, x / total) for b, x, _ in k1]
        payments = {outcome_key(b): tuple(sign * ti / x for ti in t)
                    for (b, x, t), (_, p) in zip(k1, entries)}
        return Lottery(tuple(entries)), PaymentScheme.c_payments(payments), 0.0

    if epsilon <= 0:
        raise ValueError("support-zero payment mass requires epsilon > 0")
    delta = epsilon / (2 * v_max) if mode == "subsidy" else epsilon / v_max
    total = sum(x for _, x, _ in k1)
    entries = []
    payments = {}
    for b, x, t in k1:
        p = (1 - delta) * x / total
        entries.append((b, p))
        payments[outcome_key(b)] = tuple(sign * ti / p for ti in t)
    for b, t in k2:
        p = delta / len(k2)
        entries.append((b, p))
        payments[outcome_key(b)] = tuple(sign * ti / p for ti in t)
    scale = sum(p for _, p in entries)
    entries = [(b, p / scale) for b, p in entries]
    return Lottery(tuple(entries)), PaymentScheme.c_payments(payments), delta


@dataclass
class PaymentSolveResult:
    lottery: Lottery
    payments: PaymentScheme  # kind C
    total_expected_payment: float
    min_expected_utility: float
    lp_objective: float
    iterations: int
    epsilon: float


def _run_payment_generation(master, max_iter=None):
    n = master.n
    if max_iter is None:
        max_iter = 10 * n**3 + 1000
    for it in range(1, max_iter + 1):
        sol, duals = master.solve()
        if sol.status != "optimal":
            return sol, None, it
        violation, columns = _price_payment_columns(
            master.instance, duals, "subsidy" if master.mode == "subsidy" else "utility"
        )
        if violation <= PRICE_TOL:
            return sol, duals, it
        added = False
        for b, _ in columns:
            added |= master.add_column(b)
        if not added:
            if violation > 100 * PRICE_TOL:
                raise ColumnGenError(f"payment pricing stalled at violation {violation}")
            return sol, duals, it
    raise ColumnGenError(f"iteration cap {max_iter} exceeded")


def _seed_columns(instance: Instance):
    # a welfare-maximal matching is always repairable by payments (its envy
    # graph has no positive cycle), so it makes the restricted master feasible
    seed, _ = max_weight_assignment(instance.n_agents, instance.float_matrix())
    return [seed]


def solve_subsidy_min(instance: Instance, epsilon) -> PaymentSolveResult:
    """Lottery plus nonnegative C-payments, iEF up to epsilon, minimizing the
    total expected subsidy.  The total equals the LP optimum exactly."""
    if not instance.is_matching_instance:
        raise ValueError("subsidy solver requires a matching instance")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    master = _PaymentsMaster(instance, "subsidy")
    for b in _seed_columns(instance):
        master.add_column(b)
    sol, duals, iterations = _run_payment_generation(master)
    if sol.status != "optimal":
        # subsidies can always repair a welfare-maximal matching
        raise ColumnGenError(f"subsidy master unexpectedly {sol.status}")
    x, t, _ = master.extract(sol)
    v_max = float(max(max(row) for row in instance.valuations))
    lottery, payments, _ = epsilon_repair(
        list(zip(master.columns, x)), t, epsilon, "subsidy", v_max
    )
    total = float(t.sum())
    utilities = _expected_utilities(instance, lottery, payments)
    return PaymentSolveResult(lottery, payments, total, min(utilities),
                              sol.objective, iterations, epsilon)


def solve_utility_max(instance: Instance, rent, epsilon) -> PaymentSolveResult:
    """Lottery plus nonpositive C-payments summing to the rent in
    expectation, maximizing the minimum expected agent utility.

    The reported utility is at least the LP optimum minus epsilon.
    """
    if not instance.is_matching_instance:
        raise ValueError("utility solver requires a matching instance")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if rent < 0:
        raise ValueError("rent must be nonnegative")
    master = _PaymentsMaster(instance, "utility", rent=rent)
    _, columns, _ = phase1_feasibility(instance)
    for b in itertools.chain(_seed_columns(instance), columns):
        master.add_column(b)
    sol, duals, iterations = _run_payment_generation(master)
    if sol.status != "optimal":
        # restricted master may be infeasible even when the full LP is not:
        # fall back to minimizing the iEF violation to collect columns
        helper = _PaymentsMaster(instance, "phase1", rent=rent)
        for b in master.columns:
            helper.add_column(b)
        hsol, _, _ = _run_payment_generation(helper)
        if hsol.status != "optimal" or hsol.objective > PRICE_TOL:
            raise InfeasibleError("no iEF-able lottery meets the rent requirement")
        for b in helper.columns:
            master.add_column(b)
        sol, duals, iterations = _run_payment_generation(master)
        if sol.status != "optimal":
            raise InfeasibleError("no iEF-able lottery meets the rent requirement")
    x, t, q = master.extract(sol)
    v_max = float(max(max(row) for row in instance.valuations))
    lottery, payments, _ = epsilon_repair(
        list(zip(master.columns, x)), t, epsilon, "utility", v_max
    )
    utilities = _expected_utilities(instance, lottery, payments)
    return PaymentSolveResult(lottery, payments, float(-t.sum()), min(utilities),
                              sol.objective, iterations, epsilon)


def _expected_utilities(instance, lottery, payments):
    n = instance.n_agents
    out = []
    for i in range(n):
        u = 0.0
        for outcome, p in lottery.support:
            u += float(p) * (
                float(instance.bundle_value(i, outcome.bundle(i)))
                + payments.outcome_payment(outcome, i)
            )
        out.append(u)
    return out


# ---------------------------------------------------------------------------
# exact small-scale comparison of A- and B-payments


@dataclass
class BruteCompareReport:
    mode: str  # subsidy | utility
    best_A: Fraction
    best_B: Fraction
    best_A_lottery: Lottery
    best_B_lottery: Lottery
    best_A_payments: PaymentScheme
    best_B_payments: PaymentScheme


def _grid_lotteries(matchings, denominator):
    """Lotteries over every nonempty subset of the given matchings with
    exact probabilities in multiples of 1/denominator."""
    for size in range(1, len(matchings) + 1):
        for subset in itertools.combinations(matchings, size):
            for cuts in itertools.combinations(range(1, denominator), size - 1):
                parts = [b - a for a, b in zip((0,) + cuts, cuts + (denominator,))]
                probs = [Fraction(p, denominator) for p in parts]
                yield Lottery(tuple(zip(subset, probs)))


def _best_A_for_lottery(instance, lottery, mode, rent):
    graph = build_envy_graph(instance, lottery)
    if not is_ief_able_A(graph):
        return None
    if mode == "subsidy":
        p = compute_A_payments(graph)  # pointwise-minimal nonnegative payments
        return sum(p), PaymentScheme.a_payments(p)
    # rent: maximize min_i (E[v_i] + p_i), p <= 0, sum p = -rent, differences
    # as in the envy graph; exact tiny LP with p = -r, r >= 0, free u = u+ - u-
    n = instance.n_agents
    exp_val = [
        sum(p * instance.bundle_value(i, o.bundle(i)) for o, p in lottery.support)
        for i in range(n)
    ]
    nv = n + 2  # r_0..r_{n-1}, u+, u-
    rows, senses, rhs = [], [], []
    for i in range(n):  # u <= exp_val[i] - r_i
        row = [Fraction(0)] * nv
        row[n], row[n + 1], row[i] = Fraction(1), Fraction(-1), Fraction(1)
        rows.append(row), senses.append(ratlp.LE), rhs.append(exp_val[i])
    for i in range(n):
        for k in range(n):
            if i != k:  # r_k - r_i >= w(i,k)
                row = [Fraction(0)] * nv
                row[k], row[i] = Fraction(1), Fraction(-1)
                rows.append(row), senses.append(ratlp.GE), rhs.append(graph.weights[i][k])
    row = [Fraction(0)] * nv
    for i in range(n):
        row[i] = Fraction(1)
    rows.append(row), senses.append(ratlp.EQ), rhs.append(Fraction(rent))
    obj = [Fraction(0)] * nv
    obj[n], obj[n + 1] = Fraction(1), Fraction(-1)
    res = ratlp.solve_exact(obj, rows, senses, rhs, maximize=True)
    if res.status != "optimal":
        return None
    p = tuple(-res.x[i] for i in range(n))
    return res.objective, PaymentScheme.a_payments(p)


def _best_B_for_lottery(instance, lottery, mode, rent):
    """Exact LP over per-item payments for a fixed lottery support."""
    n, m = instance.n_agents, instance.n_items
    triples = []
    for i in range(n):
        for bundle in lottery.agent_bundles(i):
            mass = lottery.bundle_probability(i, bundle)
            cond = [
                (o, p / mass)
                for o, p in lottery.support
                if tuple(sorted(o.bundle(i))) == bundle
            ]
            for k in range(n):
                if k != i:
                    triples.append((i, bundle, k, cond))
    if mode == "subsidy":
        nv = m  # p_j >= 0
        rows, senses, rhs = [], [], []
        for i, bundle, k, cond in triples:
            row = [Fraction(0)] * nv
            row[bundle[0]] += Fraction(1)
            gap = instance.bundle_value(i, bundle)
            for o, q in cond:
                row[o.bundle(k)[0]] -= q
                gap -= q * instance.bundle_value(i, o.bundle(k))
            rows.append(row), senses.append(ratlp.GE), rhs.append(-gap)
        res = ratlp.solve_exact([Fraction(1)] * nv, rows, senses, rhs)
        if res.status != "optimal":
            return None
        return sum(res.x), PaymentScheme.b_payments({(j,): res.x[j] for j in range(m)})
    # rent mode: p_j = -r_j <= 0; every matching pays all items, so the rent
    # row is sum_j r_j = rent
    nv = m + 2
    rows, senses, rhs = [], [], []
    for i in range(n):
        row = [Fraction(0)] * nv
        row[m], row[m + 1] = Fraction(1), Fraction(-1)
        val = Fraction(0)
        for o, p in lottery.support:
            row[o.bundle(i)[0]] += p
            val += p * instance.bundle_value(i, o.bundle(i))
        rows.append(row), senses.append(ratlp.LE), rhs.append(val)
    for i, bundle, k, cond in triples:
        row = [Fraction(0)] * nv
        row[bundle[0]] -= Fraction(1)
        gap = instance.bundle_value(i, bundle)
        for o, q in cond:
            row[o.bundle(k)[0]] += q
            gap -= q * instance.bundle_value(i, o.bundle(k))
        rows.append(row), senses.append(ratlp.GE), rhs.append(-gap)
    row = [Fraction(0)] * nv
    for j in range(m):
        row[j] = Fraction(1)
    rows.append(row), senses.append(ratlp.EQ), rhs.append(Fraction(rent))
    obj = [Fraction(0)] * nv
    obj[m], obj[m + 1] = Fraction(1), Fraction(-1)
    res = ratlp.solve_exact(obj, rows, senses, rhs, maximize=True)
    if res.status != "optimal":
        return None
    return res.objective, PaymentScheme.b_payments({(j,): -res.x[j] for j in range(m)})


def brute_compare_AB(instance: Instance, mode="subsidy", rent=0,
                     grid_denominator=6, max_agents=3) -> BruteCompareReport:
    """Exact grid search for the best A- and B-payment solutions.

    Enumerates every lottery over matchings with probabilities on a
    1/denominator grid; for each fixed lottery the best payments are exact
    (longest paths for A-subsidies, a tiny rational LP otherwise).  Returns
    the incumbents in both payment kinds; values are exact rationals so the
    separations between A and B survive comparison at face value.
    """
    n = instance.n_agents
    if n > max_agents:
        raise ValueError("brute comparison limited to tiny instances")
    if not instance.is_matching_instance:
        raise ValueError("brute comparison requires a matching instance")
    from .testkit import enumerate_matchings

    matchings = list(enumerate_matchings(n))
    best_a = best_b = None
    better = (lambda new, old: new < old) if mode == "subsidy" else (lambda new, old: new > old)
    for lottery in _grid_lotteries(matchings, grid_denominator):
        ra = _best_A_for_lottery(instance, lottery, mode, rent)
        if ra is not None and (best_a is None or better(ra[0], best_a[0])):
            best_a = (ra[0], lottery, ra[1])
        rb = _best_B_for_lottery(instance, lottery, mode, rent)
        if rb is not None and (best_b is None or better(rb[0], best_b[0])):
            best_b = (rb[0], lottery, rb[1])
    if best_a is None or best_b is None:
        raise InfeasibleError(f"no {mode} solution with A- or B-payments on the grid")
    return BruteCompareReport(mode, best_a[0], best_b[0], best_a[1], best_b[1],
                              best_a[2], best_b[2])
