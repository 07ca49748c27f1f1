"""Welfare-optimal interim envy-free lotteries on matching instances.

One solver per objective (utilitarian, egalitarian, log-Nash), all sharing
the column-generation engine.  The pricing step turns the master duals into
edge-pair weights so that the total pair weight of a matching equals the
left-hand side of its dual constraint:

  utilitarian   (v_i(j) - v_i(l)) y(i,j,k) + (v_i(j) + v_k(l)) / (2(n-1)) + z / (n(n-1))
  log-Nash      same, with ln v in place of v in the welfare term, on the
                positive-value edge mask
  egalitarian   (v_i(j) - v_i(l)) y(i,j,k) + (e + z) / (n(n-1)) per welfare
                level e, restricted to edges of value at least e

A matching with positive total weight is a violated dual constraint and
enters the master as a new column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lpengine import (
    DualPoint,
    InfeasibleError,
    MasterProblem,
    phase1_feasibility,
    phase1_pair_weights,
    solve_master,
)
from .model import Instance, Lottery, Matching, WelfareObjective, welfare
from .twoebm import EdgePairWeights, solve_2ebm


class LogNashUnsupportableError(Exception):
    """No perfect matching on positive-value edges: every lottery has
    log-Nash welfare -inf, although interim envy-free lotteries may exist."""


@dataclass
class SolveResult:
    lottery: Lottery
    objective: float  # expected social welfare
    support_welfare: list  # welfare of each support matching, lottery order
    duals: DualPoint
    iterations: int
    objective_name: str


def _sw_function(instance: Instance, objective: WelfareObjective):
    if objective is WelfareObjective.LOG_NASH:
        values = instance.float_matrix()

        def sw(b):
            return float(sum(math.log(values[i, b[i]]) for i in range(instance.n_agents)))

    else:

        def sw(b):
            return float(welfare(instance, b, objective))

    return sw


def price_utilitarian(instance: Instance, duals: DualPoint) -> EdgePairWeights:
    n = instance.n_agents
    v = instance.float_matrix()
    weights = phase1_pair_weights(instance, duals)
    weights.psi += (v[:, :, None, None] + v[None, None, :, :]) / (2 * (n - 1))
    return weights


def price_lognash(instance: Instance, duals: DualPoint) -> EdgePairWeights:
    n = instance.n_agents
    v = instance.float_matrix()
    allowed = v > 0
    logs = np.where(allowed, np.log(np.where(allowed, v, 1.0)), 0.0)
    weights = phase1_pair_weights(instance, duals, allowed)
    weights.psi += (logs[:, :, None, None] + logs[None, None, :, :]) / (2 * (n - 1))
    return weights


def price_egalitarian(instance: Instance, duals: DualPoint, price_tol=0.0):
    """Stratified oracle: one restricted 2EBM per distinct valuation level e,
    searched in descending order.  Returns (max violation, new columns with
    their true egalitarian welfare)."""
    n = instance.n_agents
    levels = sorted({x for row in instance.valuations for x in row}, reverse=True)
    base = phase1_pair_weights(instance, duals)
    best_violation = -math.inf
    columns = {}
    for e in levels:
        # stratum membership is decided on the exact rationals
        allowed = np.array(
            [[x >= e for x in row] for row in instance.valuations], dtype=bool
        )
        weights = EdgePairWeights(n, base.psi + float(e) / (n * (n - 1)), allowed)
        if not weights.has_perfect_matching():
            continue  # empty stratum
        b, value = solve_2ebm(weights)
        best_violation = max(best_violation, value)
        if value > price_tol and b.assignment not in columns:
            columns[b.assignment] = (b, float(welfare(instance, b, WelfareObjective.EGALITARIAN)))
    return best_violation, list(columns.values())


def _oracle_for(instance, objective, sw):
    if objective is WelfareObjective.EGALITARIAN:

        def oracle(duals):
            return price_egalitarian(instance, duals)

    else:
        builder = price_utilitarian if objective is WelfareObjective.UTILITARIAN else price_lognash

        def oracle(duals):
            b, value = solve_2ebm(builder(instance, duals))
            return value, [(b, sw(b))]

    return oracle


def solve_ief_welfare(instance: Instance, objective: WelfareObjective) -> SolveResult:
    """Interim envy-free lottery of maximum expected social welfare.

    Raises InfeasibleError when the instance admits no interim envy-free
    lottery, and LogNashUnsupportableError when the log-Nash objective is
    undefined on every lottery (no perfect matching avoids zero values).
    """
    if not instance.is_matching_instance:
        raise ValueError("welfare solvers require a matching instance")
    if objective is WelfareObjective.AVERAGE_NASH:
        raise ValueError("average Nash is an evaluator, not a solver objective")
    n = instance.n_agents
    if n == 1:
        b = Matching((0,))
        lot = Lottery.deterministic(b)
        w = welfare(instance, b, objective)
        return SolveResult(lot, float(w), [w], DualPoint(1, np.zeros((1, 1, 1)), 0.0), 0,
                           objective.value)

    allowed = None
    if objective is WelfareObjective.LOG_NASH:
        allowed = instance.float_matrix() > 0
        mask_weights = EdgePairWeights(n, np.zeros((n,) * 4), allowed)
        if not mask_weights.has_perfect_matching():
            feasible, _, _ = phase1_feasibility(instance)
            if feasible:
                raise LogNashUnsupportableError(
                    "no perfect matching on positive-value edges"
                )
            raise InfeasibleError("no interim envy-free lottery exists")

    feasible, columns, slack = phase1_feasibility(instance, allowed=allowed)
    if not feasible:
        if objective is WelfareObjective.LOG_NASH:
            unrestricted, _, _ = phase1_feasibility(instance)
            if unrestricted:
                raise LogNashUnsupportableError(
                    "interim envy-free lotteries exist, but all have a "
                    "zero-value edge in support"
                )
        raise InfeasibleError(f"no interim envy-free lottery (violation {slack:.3e})")

    sw = _sw_function(instance, objective)
    master = MasterProblem(instance)
    for b in columns:
        master.add_column(b, sw(b))
    sol, duals, iterations = solve_master(master, _oracle_for(instance, objective, sw))
    if sol.status != "optimal":
        raise InfeasibleError("welfare master infeasible after feasible phase-1")
    lottery = master.lottery(sol)
    support_welfare = [welfare(instance, b, objective) for b in lottery.outcomes()]
    return SolveResult(lottery, sol.objective, support_welfare, duals, iterations,
                       objective.value)


def unconstrained_optimum(instance: Instance, objective: WelfareObjective):
    """Best welfare of any single matching, by brute force (the price-of-
    fairness baseline).  Exact rational for utilitarian/egalitarian."""
    from .testkit import enumerate_matchings

    best = None
    for b in enumerate_matchings(instance.n_agents):
        w = welfare(instance, b, objective)
        if best is None or w > best[1]:
            best = (b, w)
    return best
