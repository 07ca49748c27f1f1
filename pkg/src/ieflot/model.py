"""Core data types: instances, matchings, allocations, lotteries, welfare.

All valuation data is kept as exact rationals (``fractions.Fraction``).
Checkers and brute-force oracles run on the exact values; the LP-based
solvers convert to float64 at their boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Rat = Fraction

NEG_INF = float("-inf")


def parse_rational(value) -> Fraction:
    """Parse a number from JSON into an exact rational.

    Accepts ints, strings like ``"2/3"`` or ``"0.25"``, and floats.  Float
    and decimal-string inputs are read digit-by-digit (``0.1`` becomes
    1/10, not the nearest binary64).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(q: Fraction) -> str:
    return str(q)


class WelfareObjective(Enum):
    UTILITARIAN = "util"
    EGALITARIAN = "egal"
    LOG_NASH = "lognash"
    # average Nash is an evaluator only; no solver accepts it as objective
    AVERAGE_NASH = "avnash"


@dataclass(frozen=True)
class Matching:
    """Assignment of one item per agent; entry i is the item of agent i."""

    assignment: tuple

    def __post_init__(self):
        n = len(self.assignment)
        if sorted(self.assignment) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {self.assignment}")

    def __getitem__(self, i):
        return self.assignment[i]

    def __len__(self):
        return len(self.assignment)

    def __iter__(self):
        return iter(self.assignment)

    def bundle(self, i) -> tuple:
        return (self.assignment[i],)

    def bundles(self) -> tuple:
        return tuple((j,) for j in self.assignment)


@dataclass(frozen=True)
class Allocation:
    """Partition of all items into one (possibly empty) bundle per agent."""

    bundles: tuple  # tuple of sorted item tuples, one per agent

    def __post_init__(self):
        canon = tuple(tuple(sorted(b)) for b in self.bundles)
        object.__setattr__(self, "bundles", canon)
        seen = [j for b in canon for j in b]
        if len(seen) != len(set(seen)):
            raise ValueError("bundles overlap")

    def n_items(self):
        return sum(len(b) for b in self.bundles)

    def bundle(self, i) -> tuple:
        return self.bundles[i]


Outcome = Union[Matching, Allocation]


def outcome_bundle(outcome: Outcome, i) -> tuple:
    return outcome.bundle(i)


@dataclass(frozen=True)
class Instance:
    """An allocation instance: n agents, m items, exact rational valuations."""

    valuations: tuple  # tuple of tuples of Fraction, row = agent

    def __post_init__(self):
        rows = tuple(tuple(parse_rational(v) for v in row) for row in self.valuations)
        object.__setattr__(self, "valuations", rows)
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValueError("ragged valuation matrix")
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v < 0:
                    raise ValueError(f"negative valuation v[{i}][{j}] = {v}")

    @property
    def n_agents(self) -> int:
        return len(self.valuations)

    @property
    def n_items(self) -> int:
        return len(self.valuations[0]) if self.valuations else 0

    @property
    def is_matching_instance(self) -> bool:
        return self.n_agents == self.n_items

    def value(self, i, j) -> Fraction:
        return self.valuations[i][j]

    def bundle_value(self, i, bundle: Iterable[int]) -> Fraction:
        row = self.valuations[i]
        return sum((row[j] for j in bundle), Fraction(0))

    def total_value(self, i) -> Fraction:
        return sum(self.valuations[i], Fraction(0))

    def float_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.valuations])

    def normalize(self) -> "Instance":
        """Scale each agent's row to sum to one; all-zero rows are kept."""
        rows = []
        for row in self.valuations:
            s = sum(row, Fraction(0))
            rows.append(tuple(v / s for v in row) if s != 0 else row)
        return Instance(tuple(rows))

    def is_normalized(self) -> bool:
        return all(sum(r, Fraction(0)) == 1 for r in self.valuations)

    def to_json(self) -> dict:
        return {
            "agents": self.n_agents,
            "items": self.n_items,
            "valuations": [[format_rational(v) for v in row] for row in self.valuations],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        inst = cls(tuple(tuple(parse_rational(v) for v in row) for row in data["valuations"]))
        if "agents" in data and data["agents"] != inst.n_agents:
            raise ValueError("agent count disagrees with valuation matrix")
        if "items" in data and data["items"] != inst.n_items:
            raise ValueError("item count disagrees with valuation matrix")
        return inst


@dataclass(frozen=True)
class Lottery:
    """Finite-support probability distribution over matchings/allocations.

    Probabilities may be Fractions (exact mode) or floats (solver output).
    Support outcomes must be pairwise distinct and have positive mass.
    """

    support: tuple  # tuple of (Outcome, probability)

    def __post_init__(self):
        if not self.support:
            raise ValueError("empty lottery")
        keys = set()
        total = 0
        exact = all(isinstance(p, (Fraction, int)) for _, p in self.support)
        for outcome, p in self.support:
            if p <= 0:
                raise ValueError(f"non-positive probability {p}")
            key = outcome_key(outcome)
            if key in keys:
                raise ValueError("duplicate outcome in support")
            keys.add(key)
            total += p
        if exact:
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, not 1")
        elif abs(float(total) - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {float(total)}, not 1")

    def outcomes(self):
        return [o for o, _ in self.support]

    def is_exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for _, p in self.support)

    @classmethod
    def deterministic(cls, outcome: Outcome) -> "Lottery":
        return cls(((outcome, Fraction(1)),))

    @classmethod
    def uniform(cls, outcomes: Sequence[Outcome]) -> "Lottery":
        p = Fraction(1, len(outcomes))
        return cls(tuple((o, p) for o in outcomes))

    def bundle_probability(self, i, bundle) -> Fraction:
        """Pr[agent i receives exactly this bundle]."""
        key = tuple(sorted(bundle))
        total = 0
        for outcome, p in self.support:
            if tuple(sorted(outcome.bundle(i))) == key:
                total += p
        return total

    def agent_bundles(self, i):
        """The distinct bundles agent i receives with positive probability."""
        seen = {}
        for outcome, _ in self.support:
            b = tuple(sorted(outcome.bundle(i)))
            seen.setdefault(b, None)
        return list(seen)

    def to_json(self) -> dict:
        entries = []
        for outcome, p in self.support:
            prob = format_rational(p) if isinstance(p, Fraction) else float(p)
            if isinstance(outcome, Matching):
                entries.append({"matching": list(outcome.assignment), "prob": prob})
            else:
                entries.append({"bundles": [list(b) for b in outcome.bundles], "prob": prob})
        return {"support": entries}

    @classmethod
    def from_json(cls, data: dict, exact: bool = True) -> "Lottery":
        support = []
        for entry in data["support"]:
            if "matching" in entry:
                outcome = Matching(tuple(entry["matching"]))
            elif "bundles" in entry:
                outcome = Allocation(tuple(tuple(b) for b in entry["bundles"]))
            else:
                raise ValueError("support entry needs 'matching' or 'bundles'")
            p = entry["prob"]
            prob = parse_rational(p) if exact or isinstance(p, str) else float(p)
            support.append((outcome, prob))
        return cls(tuple(support))


def outcome_key(outcome: Outcome):
    if isinstance(outcome, Matching):
        return ("m", outcome.assignment)
    return ("a", outcome.bundles)


def matching_to_allocation(b: Matching) -> Allocation:
    return Allocation(b.bundles())


def outcome_values(instance: Instance, outcome: Outcome):
    """Each agent's value for her own bundle."""
    return [instance.bundle_value(i, outcome.bundle(i)) for i in range(instance.n_agents)]


def welfare(instance: Instance, outcome: Outcome, objective: WelfareObjective):
    """Social welfare of a single allocation under the given objective.

    Utilitarian and egalitarian values are exact rationals; log-Nash and
    average-Nash are floats.  Log-Nash is -inf when some agent values her
    bundle at zero.
    """
    vals = outcome_values(instance, outcome)
    if len(vals) != instance.n_agents:
        raise ValueError("outcome does not cover all agents")
    if objective is WelfareObjective.UTILITARIAN:
        return sum(vals, Fraction(0))
    if objective is WelfareObjective.EGALITARIAN:
        return min(vals)
    if objective is WelfareObjective.LOG_NASH:
        if any(v == 0 for v in vals):
            return NEG_INF
        return sum(math.log(v) for v in vals)
    if objective is WelfareObjective.AVERAGE_NASH:
        prod = 1.0
        for v in vals:
            prod *= float(v)
        return prod ** (1.0 / len(vals))
    raise ValueError(f"unknown objective {objective}")


def expected_welfare(instance: Instance, lottery: Lottery, objective: WelfareObjective):
    total = 0
    for outcome, p in lottery.support:
        w = welfare(instance, outcome, objective)
        if w == NEG_INF:
            return NEG_INF
        total = total + p * w
    return total


def conditional_bundle_value(instance: Instance, lottery: Lottery, i, k, bundle):
    """E[v_i(bundle of agent k) | agent i receives ``bundle``].

    Exact when the lottery probabilities are exact.  Raises if the bundle is
    never allocated to agent i (conditioning on a null event).
    """
    key = tuple(sorted(bundle))
    mass = 0
    acc = 0
    for outcome, p in lottery.support:
        if tuple(sorted(outcome.bundle(i))) == key:
            mass += p
            acc += p * instance.bundle_value(i, outcome.bundle(k))
    if mass == 0:
        raise ValueError(f"agent {i} never receives bundle {key}")
    return acc / mass


def expected_value_for(instance: Instance, lottery: Lottery, i, k):
    """E[v_i(bundle of agent k)] over the whole lottery."""
    return sum(
        (p * instance.bundle_value(i, outcome.bundle(k)) for outcome, p in lottery.support),
        Fraction(0) if lottery.is_exact() else 0.0,
    )


def load_instance(path) -> Instance:
    with open(path) as fh:
        return Instance.from_json(json.load(fh))


def load_lottery(path, exact: bool = True) -> Lottery:
    with open(path) as fh:
        return Lottery.from_json(json.load(fh), exact=exact)
