"""Decision procedures for fairness properties of allocations and lotteries.

Everything here is an exact brute-force checker: computations run on
rationals whenever the input lottery is exact, so these functions double as
test oracles for the LP-based solvers.  Float-probability lotteries are
checked with a 1e-9 absolute slack on every constraint.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Allocation,
    Instance,
    Lottery,
    Matching,
    conditional_bundle_value,
    expected_value_for,
)

FLOAT_SLACK = 1e-9

# allocation enumeration is an oracle; refuse rather than sample
BRUTE_FORCE_CAP = 2_000_000


class BruteForceCapExceeded(Exception):
    pass


@dataclass(frozen=True)
class FairnessReport:
    property_name: str
    holds: bool
    witness: object = None  # violating (i, k), (i, k, S), or allocation
    margin: object = None  # min over constraints of (LHS - RHS)

    def __bool__(self):
        return self.holds

    def to_json(self):
        witness = self.witness
        if isinstance(witness, tuple):
            witness = [w if not isinstance(w, tuple) else list(w) for w in witness]
        return {
            "property": self.property_name,
            "holds": self.holds,
            "witness": witness,
            "margin": None if self.margin is None else str(self.margin),
        }


@dataclass(frozen=True)
class MmsShares:
    tau: tuple  # one min-max share per agent


def _report(name, margin, witness, epsilon=0, exact=True):
    slack = 0 if exact else FLOAT_SLACK
    holds = margin is None or margin >= -epsilon - slack
    return FairnessReport(name, holds, None if holds else witness, margin)


def enumerate_allocations(n_agents, n_items):
    """All n^m ways to hand each item to an agent, as Allocation objects."""
    if n_agents**n_items > BRUTE_FORCE_CAP:
        raise BruteForceCapExceeded(f"{n_agents}^{n_items} allocations exceed cap {BRUTE_FORCE_CAP}")
    for owners in itertools.product(range(n_agents), repeat=n_items):
        bundles = [[] for _ in range(n_agents)]
        for item, owner in enumerate(owners):
            bundles[owner].append(item)
        yield Allocation(tuple(tuple(b) for b in bundles))


def is_envy_free(instance: Instance, outcome) -> FairnessReport:
    margin = None
    witness = None
    for i in range(instance.n_agents):
        own = instance.bundle_value(i, outcome.bundle(i))
        for k in range(instance.n_agents):
            if k == i:
                continue
            gap = own - instance.bundle_value(i, outcome.bundle(k))
            if margin is None or gap < margin:
                margin, witness = gap, (i, k)
    return _report("envy_free", margin, witness)


def is_proportional(instance: Instance, outcome) -> FairnessReport:
    n = instance.n_agents
    margin = None
    witness = None
    for i in range(n):
        gap = instance.bundle_value(i, outcome.bundle(i)) - instance.total_value(i) / n
        if margin is None or gap < margin:
            margin, witness = gap, (i,)
    return _report("proportional", margin, witness)


def is_ief(instance: Instance, lottery: Lottery, epsilon=0) -> FairnessReport:
    """Interim envy-freeness, with additive slack ``epsilon``.

    For every agent i, every bundle S that i receives with positive
    probability, and every other agent k, requires
    v_i(S) >= E[v_i(A_k) | A_i = S] - epsilon.
    """
    exact = lottery.is_exact()
    margin = None
    witness = None
    for i in range(instance.n_agents):
        for bundle in lottery.agent_bundles(i):
            own = instance.bundle_value(i, bundle)
            for k in range(instance.n_agents):
                if k == i:
                    continue
                gap = own - conditional_bundle_value(instance, lottery, i, k, bundle)
                if margin is None or gap < margin:
                    margin, witness = gap, (i, k, bundle)
    return _report("ief", margin, witness, epsilon, exact)


def is_ex_ante_ef(instance: Instance, lottery: Lottery) -> FairnessReport:
    exact = lottery.is_exact()
    margin = None
    witness = None
    for i in range(instance.n_agents):
        own = expected_value_for(instance, lottery, i, i)
        for k in range(instance.n_agents):
            if k == i:
                continue
            gap = own - expected_value_for(instance, lottery, i, k)
            if margin is None or gap < margin:
                margin, witness = gap, (i, k)
    return _report("ex_ante_ef", margin, witness, 0, exact)


def is_ex_post_ef(instance: Instance, lottery: Lottery) -> FairnessReport:
    margin = None
    witness = None
    for outcome, _ in lottery.support:
        rep = is_envy_free(instance, outcome)
        if margin is None or rep.margin < margin:
            margin = rep.margin
            witness = outcome
    return _report("ex_post_ef", margin, witness, 0, lottery.is_exact())


def max_envy(instance: Instance, lottery: Lottery):
    """Worst pairwise envy over all support allocations, floored at zero."""
    worst = Fraction(0)
    for outcome, _ in lottery.support:
        for i in range(instance.n_agents):
            own = instance.bundle_value(i, outcome.bundle(i))
            for k in range(instance.n_agents):
                if k != i:
                    envy = instance.bundle_value(i, outcome.bundle(k)) - own
                    if envy > worst:
                        worst = envy
    return worst


def mms_shares(instance: Instance) -> MmsShares:
    """tau_i = min over all allocations of the max bundle value of agent i."""
    n, m = instance.n_agents, instance.n_items
    tau = [None] * n
    for alloc in enumerate_allocations(n, m):
        for i in range(n):
            peak = max(instance.bundle_value(i, b) for b in alloc.bundles)
            if tau[i] is None or peak < tau[i]:
                tau[i] = peak
    return MmsShares(tuple(tau))


def exists_mms_allocation(instance: Instance):
    """Search for an allocation giving every agent at least her min-max share."""
    shares = mms_shares(instance)
    for alloc in enumerate_allocations(instance.n_agents, instance.n_items):
        if all(
            instance.bundle_value(i, alloc.bundle(i)) >= shares.tau[i]
            for i in range(instance.n_agents)
        ):
            return True, alloc
    return False, None


def _agent_is_epistemically_satisfied(instance, alloc, i):
    # does some redistribution of the other items leave agent i envy-free?
    own = instance.bundle_value(i, alloc.bundle(i))
    others = [k for k in range(instance.n_agents) if k != i]
    rest = [j for j in range(instance.n_items) if j not in alloc.bundle(i)]
    if len(others) ** len(rest) > BRUTE_FORCE_CAP:
        raise BruteForceCapExceeded("redistribution search too large")
    for owners in itertools.product(others, repeat=len(rest)):
        load = {k: Fraction(0) for k in others}
        ok = True
        for item, owner in zip(rest, owners):
            load[owner] += instance.value(i, item)
            if load[owner] > own:
                ok = False
                break
        if ok:
            return True
    return False


def is_eef(instance: Instance, alloc: Allocation) -> FairnessReport:
    """Epistemic envy-freeness: each agent has some redistribution of the
    items she does not hold under which she envies nobody."""
    for i in range(instance.n_agents):
        if not _agent_is_epistemically_satisfied(instance, alloc, i):
            return FairnessReport("eef", False, (i,), None)
    return FairnessReport("eef", True, None, None)


def exists_eef_allocation(instance: Instance):
    for alloc in enumerate_allocations(instance.n_agents, instance.n_items):
        if is_eef(instance, alloc).holds:
            return True, alloc
    return False, None
