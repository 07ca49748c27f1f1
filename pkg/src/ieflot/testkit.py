"""Fixture catalogue, brute-force oracles, and instance families.

The fixtures are the small instances driving every headline claim: the
separations between fairness notions, the unique-lottery instance, the
welfare-gap families, and the payment-type separations.  Expected verdicts
live next to each instance so test modules do not re-derive them.

The oracles here are deliberately independent of the column-generation
solvers: the full LPs are materialized with all n! columns and solved
densely, and existence questions are settled in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import ratlp
from .lpengine import dense_lp_solve, ief_column, ief_rows
from .model import Instance, Lottery, Matching, WelfareObjective, welfare

FIXTURES_DIR = Path(__file__).resolve().parents[2] / "fixtures"

MAX_ENUM_N = 8


def enumerate_matchings(n):
    """All n! matchings in lexicographic assignment order; n <= 8."""
    if n > MAX_ENUM_N:
        raise ValueError(f"enumeration limited to n <= {MAX_ENUM_N}")
    for perm in itertools.permutations(range(n)):
        yield Matching(perm)


# ---------------------------------------------------------------------------
# exact existence oracles


def ief_matching_feasible_exact(instance: Instance) -> bool:
    """Exact feasibility of the interim-envy LP over matchings.

    Materializes all n! probability variables and solves the feasibility
    problem in rational arithmetic; the verdict carries no tolerance.
    """
    n = instance.n_agents
    matchings = list(enumerate_matchings(n))
    rows, senses, rhs = [], [], []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if k == i:
                    continue
                row = []
                for b in matchings:
                    coeff = Fraction(0)
                    if b[i] == j:
                        coeff = instance.value(i, j) - instance.value(i, b[k])
                    row.append(coeff)
                rows.append(row)
                senses.append(ratlp.GE)
                rhs.append(Fraction(0))
    rows.append([Fraction(1)] * len(matchings))
    senses.append(ratlp.EQ)
    rhs.append(Fraction(1))
    return ratlp.feasible_exact(rows, senses, rhs, len(matchings))


def ief_existence_general(instance: Instance, cap=100_000) -> bool:
    """Exact iEF-lottery existence for general (non-matching) instances.

    LP feasibility over all n^m allocations with one row per
    (agent, bundle, other agent); exact rational arithmetic.
    """
    from .fairness import enumerate_allocations

    n, m = instance.n_agents, instance.n_items
    if n**m > cap:
        raise ValueError(f"{n}^{m} allocations exceed the cap {cap}")
    allocations = list(enumerate_allocations(n, m))
    bundles = [tuple(sorted(s)) for r in range(m + 1)
               for s in itertools.combinations(range(m), r)]
    rows, senses, rhs = [], [], []
    for i in range(n):
        for bundle in bundles:
            holders = [a for a in allocations if a.bundle(i) == bundle]
            if not holders:
                continue
            own = instance.bundle_value(i, bundle)
            for k in range(n):
                if k == i:
                    continue
                row = []
                for a in allocations:
                    if a.bundle(i) == bundle:
                        row.append(own - instance.bundle_value(i, a.bundle(k)))
                    else:
                        row.append(Fraction(0))
                rows.append(row)
                senses.append(ratlp.GE)
                rhs.append(Fraction(0))
    rows.append([Fraction(1)] * len(allocations))
    senses.append(ratlp.EQ)
    rhs.append(Fraction(1))
    return ratlp.feasible_exact(rows, senses, rhs, len(allocations))


# ---------------------------------------------------------------------------
# dense full-LP reference solver (all columns materialized)


@dataclass
class ReferenceResult:
    status: str  # optimal | infeasible | unsupportable
    value: float = None
    lottery: dict = None  # assignment tuple -> probability
    extras: dict = field(default_factory=dict)


def full_lp_reference(instance: Instance, problem_kind, rent=0.0, objective=None) -> ReferenceResult:
    """Reference optimum with every matching materialized as a column.

    problem_kind: 'welfare' (pass objective), 'subsidy', or 'utility'.
    Intended for n <= 4; this is the master oracle the column-generation
    solvers are tested against.
    """
    n = instance.n_agents
    if n > 4:
        raise ValueError("full LP reference limited to n <= 4")
    values = instance.float_matrix()
    rows = ief_rows(n)
    matchings = list(enumerate_matchings(n))

    if problem_kind == "welfare":
        if objective is WelfareObjective.LOG_NASH:
            matchings = [b for b in matchings
                         if all(instance.value(i, b[i]) > 0 for i in range(n))]
            if not matchings:
                return ReferenceResult("unsupportable")
        cols = [ief_column(values, b.assignment, rows) for b in matchings]
        sw = np.array([float(welfare(instance, b, objective)) for b in matchings])
        A = np.column_stack(cols) if cols else np.zeros((len(rows), 0))
        sol = dense_lp_solve(sw, -A, np.zeros(len(rows)),
                             np.ones((1, len(matchings))), [1.0], maximize=True)
        if sol.status != "optimal":
            return ReferenceResult("infeasible")
        lottery = {b.assignment: p for b, p in zip(matchings, sol.x) if p > 1e-9}
        return ReferenceResult("optimal", sol.objective, lottery)

    block = 1 + n
    nv = len(matchings) * block + (1 if problem_kind == "utility" else 0)
    off = 1 if problem_kind == "utility" else 0
    t_sign = 1.0 if problem_kind == "subsidy" else -1.0
    A_ief = np.zeros((len(rows), nv))
    for c, b in enumerate(matchings):
        base = off + c * block
        A_ief[:, base] = ief_column(values, b.assignment, rows)
        for r, (i, j, k) in enumerate(rows):
            if b[i] == j:
                A_ief[r, base + 1 + i] += t_sign
                A_ief[r, base + 1 + k] -= t_sign
    conv = np.zeros(nv)
    rent_row = np.zeros(nv)
    for c in range(len(matchings)):
        conv[off + c * block] = 1.0
        rent_row[off + c * block + 1 : off + c * block + 1 + n] = 1.0

    if problem_kind == "subsidy":
        sol = dense_lp_solve(rent_row, -A_ief, np.zeros(len(rows)), conv[None, :], [1.0])
        if sol.status != "optimal":
            return ReferenceResult("infeasible")
    elif problem_kind == "utility":
        A_util = np.zeros((n, nv))
        A_util[:, 0] = 1.0
        for c, b in enumerate(matchings):
            base = off + c * block
            for i in range(n):
                A_util[i, base] = -values[i, b[i]]
                A_util[i, base + 1 + i] = 1.0
        bounds = [(0, None)] * nv
        bounds[0] = (None, None)
        c_obj = np.zeros(nv)
        c_obj[0] = 1.0
        sol = dense_lp_solve(c_obj, np.vstack([A_util, -A_ief]),
                             np.zeros(n + len(rows)),
                             np.vstack([conv, rent_row]), [1.0, float(rent)],
                             bounds=bounds, maximize=True)
        if sol.status != "optimal":
            return ReferenceResult("infeasible")
    else:
        raise ValueError(f"unknown problem kind {problem_kind!r}")
    lottery = {}
    t_out = {}
    for c, b in enumerate(matchings):
        base = off + c * block
        if sol.x[base] > 1e-9:
            lottery[b.assignment] = sol.x[base]
        tvals = sol.x[base + 1 : base + 1 + n]
        if tvals.max() > 1e-9:
            t_out[b.assignment] = tuple(tvals)
    return ReferenceResult("optimal", sol.objective, lottery, {"t": t_out})


# ---------------------------------------------------------------------------
# instance families behind the welfare-gap and fairness-gap claims


def make_util_price_instance(k, eps) -> Instance:
    """2k agents; the welfare-optimal matching loses a Theta(k) factor once
    interim envy-freeness pins the top agents to their second-best items."""
    eps = Fraction(eps)
    n = 2 * k
    rows = []
    for i in range(k):
        row = [Fraction(0)] * n
        row[i] = Fraction(k, k + 1)
        row[i + k] = Fraction(1, k + 1)
        rows.append(tuple(row))
    for _ in range(k):
        row = [Fraction(1, 2 * k) + eps] * k + [Fraction(1, 2 * k) - eps] * k
        rows.append(tuple(row))
    return Instance(tuple(rows))


def make_egal_price_instance(n) -> Instance:
    """Chain instance whose interim envy-free egalitarian optimum is
    1/(n-1) against an unconstrained optimum of 1/3."""
    if n < 4:
        raise ValueError("need n >= 4")
    rows = []
    row = [Fraction(0)] * n
    row[0], row[1] = Fraction(1, 3), Fraction(2, 3)
    rows.append(tuple(row))
    for i in range(1, n - 2):
        row = [Fraction(0)] * n
        row[i] = row[i + 1] = row[n - 1] = Fraction(1, 3)
        rows.append(tuple(row))
    row = [Fraction(0)] * n
    row[n - 2] = row[n - 1] = Fraction(1, 2)
    rows.append(tuple(row))
    row = [Fraction(0)] * n
    row[0] = Fraction(1, n - 1)
    row[n - 1] = 1 - Fraction(1, n - 1)
    rows.append(tuple(row))
    return Instance(tuple(rows))


def make_nash_price_instance(k) -> Instance:
    """The utilitarian-gap family at eps = 1/(6k), where the average-Nash
    ratio between unconstrained and interim envy-free comes out sqrt(k/2)."""
    return make_util_price_instance(k, Fraction(1, 6 * k))


def make_max_envy_instance(n) -> Instance:
    """One agent must take her low-value item; her envy toward the holder of
    the prize item is 1 - 2/n in every support allocation."""
    if n < 3:
        raise ValueError("need n >= 3")
    rows = []
    row = [Fraction(0)] * n
    row[0], row[1] = Fraction(1, n), Fraction(n - 1, n)
    rows.append(tuple(row))
    for _ in range(n - 1):
        row = [Fraction(0)] + [Fraction(1, n - 1)] * (n - 1)
        rows.append(tuple(row))
    return Instance(tuple(rows))


def make_unique_lottery_instance() -> Instance:
    """Exactly one interim envy-free lottery exists (uniform over three
    matchings) and it is not ex-post Pareto-efficient."""
    F = Fraction
    return Instance(((F(1, 3), F(2, 3), F(0)),
                     (F(0), F(2, 3), F(1, 3)),
                     (F(1, 3), F(1, 3), F(1, 3))))


def gen_price_family(family, size, eps=None) -> Instance:
    """Dispatcher for the experiment CLI; family in
    {util, egal, nash, maxenvy, pareto}."""
    if family == "util":
        return make_util_price_instance(size, eps if eps is not None else Fraction(1, 100))
    if family == "egal":
        return make_egal_price_instance(size)
    if family == "nash":
        return make_nash_price_instance(size)
    if family == "maxenvy":
        return make_max_envy_instance(size)
    if family == "pareto":
        return make_unique_lottery_instance()
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# fixture catalogue


@dataclass(frozen=True)
class Fixture:
    name: str
    instance: Instance
    expected: dict  # verdicts the instance demonstrates
    reference: dict = field(default_factory=dict)  # known lotteries/payments


def _frac_rows(rows):
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _catalogue():
    F = Fraction
    e0 = F(1, 100)
    fixtures = []

    ief_no_ef = Instance(_frac_rows(
        [[F(1, 3), F(2, 3), 0], [0, F(1, 2), F(1, 2)], [0, F(1, 2), F(1, 2)]]))
    fixtures.append(Fixture(
        "ief_without_ef",
        ief_no_ef,
        expected={
            "has_ief_lottery": True,
            "has_ef_allocation": False,
            "has_mms_allocation": False,
            "mms_shares": (F(2, 3), F(1, 2), F(1, 2)),
        },
        reference={"ief_lottery": [((0, 1, 2), F(1, 2)), ((0, 2, 1), F(1, 2))]},
    ))

    fixtures.append(Fixture(
        "proportional_without_ief",
        Instance(_frac_rows(
            [[F(1, 3), F(2, 3), 0], [0, F(2, 3), F(1, 3)], [F(1, 4), F(1, 2), F(1, 4)]])),
        expected={
            "has_ief_lottery": False,
            "proportional_allocations": [(0, 2, 1)],
        },
    ))

    fixtures.append(Fixture(
        "eef_without_ief",
        Instance(_frac_rows([[F(4, 10), F(3, 10), F(3, 10), 0],
                             [F(4, 10), F(3, 10), F(3, 10), 0],
                             [0, F(3, 10), F(3, 10), F(4, 10)]])),
        expected={"has_ief_lottery": False, "has_eef_allocation": True},
        reference={"eef_allocation": [[0], [1, 2], [3]]},
    ))

    fixtures.append(Fixture(
        "unique_ief_not_pareto",
        make_unique_lottery_instance(),
        expected={
            "has_ief_lottery": True,
            "utilitarian_optimum": F(11, 9),
            "ief_lottery_unique": True,
        },
        reference={"ief_lottery": [((0, 1, 2), F(1, 3)), ((0, 2, 1), F(1, 3)),
                                   ((1, 2, 0), F(1, 3))]},
    ))

    fixtures.append(Fixture(
        "rent_beats_ef",
        Instance(_frac_rows(
            [[F(1, 4), F(3, 4), 0], [0, F(1, 2), F(1, 2)], [0, F(1, 2), F(1, 2)]])),
        expected={"has_ief_lottery": True, "rent1_min_utility": F(1, 12)},
        reference={
            "rent_lottery": [((0, 1, 2), F(1, 2)), ((0, 2, 1), F(1, 2))],
            "rent_item_payments": {0: F(-1, 6), 1: F(-5, 12), 2: F(-5, 12)},
        },
    ))

    fixtures.append(Fixture(
        "b_payments_better_subsidy",
        Instance(_frac_rows([[F(1, 3), F(2, 3), 0],
                             [0, F(1, 2) + e0, F(1, 2) - e0],
                             [0, F(1, 2) + e0, F(1, 2) - e0]])),
        expected={"eps0": e0, "best_B_subsidy": 3 * e0, "best_A_subsidy": F(1, 3) + 2 * e0},
        reference={"b_item_payments": {0: e0, 1: F(0), 2: 2 * e0}},
    ))

    fixtures.append(Fixture(
        "b_payments_better_rent",
        Instance(_frac_rows([[F(1, 4), F(3, 4), 0],
                             [0, F(1, 2) + e0, F(1, 2) - e0],
                             [0, F(1, 2) + e0, F(1, 2) - e0]])),
        expected={"eps0": e0},
    ))

    fixtures.append(Fixture(
        "a_payments_better_subsidy",
        Instance(_frac_rows([[F(2, 5), F(3, 5), 0],
                             [0, F(3, 5), F(2, 5)],
                             [F(1, 3) - e0, F(1, 3) + 2 * e0, F(1, 3) - e0]])),
        expected={"eps0": e0, "best_A_subsidy": 3 * e0, "best_B_subsidy": 6 * e0},
        reference={"a_payments": (F(0), F(0), 3 * e0)},
    ))

    fixtures.append(Fixture(
        "a_payments_better_rent",
        Instance(_frac_rows([[F(9, 20) - e0, F(11, 20) + e0, 0],
                             [0, F(11, 20) + e0, F(9, 20) - e0],
                             [F(3, 10), F(2, 5), F(3, 10)]])),
        expected={"eps0": e0},
    ))

    for n in (3, 4, 5):
        fixtures.append(Fixture(
            f"max_envy_n{n}",
            make_max_envy_instance(n),
            expected={"has_ief_lottery": True, "max_envy": 1 - F(2, n),
                      "prize_item_agent": 0},
        ))
    return fixtures


_FIXTURES = None


def fixtures():
    global _FIXTURES
    if _FIXTURES is None:
        _FIXTURES = {f.name: f for f in _catalogue()}
    return _FIXTURES


def get_fixture(name) -> Fixture:
    return fixtures()[name]


def write_fixture_files(directory=None):
    """Dump the catalogue instances as JSON with rational strings."""
    directory = Path(directory) if directory else FIXTURES_DIR
    directory.mkdir(parents=True, exist_ok=True)
    for f in fixtures().values():
        path = directory / f"{f.name}.json"
        path.write_text(json.dumps(f.instance.to_json(), indent=2) + "\n")
    return directory


# ---------------------------------------------------------------------------
# random generators for property tests


def random_instance(rng, n, m=None, denominator=12, positive=False, normalized=False):
    m = n if m is None else m
    lo = 1 if positive else 0
    rows = []
    for _ in range(n):
        row = [Fraction(int(rng.integers(lo, denominator + 1)), denominator)
               for _ in range(m)]
        if normalized:
            s = sum(row, Fraction(0))
            if s == 0:
                row[int(rng.integers(0, m))] = Fraction(1)
                s = Fraction(1)
            row = [v / s for v in row]
        rows.append(tuple(row))
    return Instance(tuple(rows))


def random_matching_lottery(rng, n, max_support=3, denominator=12):
    matchings = list(enumerate_matchings(n))
    size = int(rng.integers(1, min(max_support, len(matchings)) + 1))
    idx = rng.choice(len(matchings), size=size, replace=False)
    weights = [1 + int(rng.integers(0, denominator)) for _ in range(size)]
    total = sum(weights)
    return Lottery(tuple(
        (matchings[i], Fraction(w, total)) for i, w in zip(idx, weights)
    ))
