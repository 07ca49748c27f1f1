"""Maximum edge-pair-weighted perfect bipartite matching (2EBM).

The problem: given a weight psi(e1, e2) for every ordered pair of
non-incident edges of the complete bipartite graph K_{n,n}, find a perfect
matching b maximizing the sum of psi over all ordered pairs of edges of b.

The solver follows the LP route: relax the pair-variable integer program
(doubly stochastic row/column families plus the pair-symmetry constraint)
and take a vertex optimum.  Under the pair-index bijection the feasible
region is exactly the polytope of centro-symmetric doubly stochastic
matrices, whose vertices are centro-symmetric permutation matrices, so
vertex solutions are always integral.  An integral vertex, however, is a
pair-assignment that need not be consistent with any single matching; when
the extracted assignment is inconsistent (or the subsolver returns a
non-vertex point), we fall back to peeling the matrix into centro-symmetric
permutations and, if necessary, to an exact search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .model import Matching

VALUE_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
BRUTE_FORCE_MAX_N = 8


class InfeasibleMatchingError(Exception):
    """No perfect matching exists within the allowed edge mask."""


class DecompositionError(Exception):
    """Peeling failed; upstream invariants are broken."""


@dataclass
class EdgePairWeights:
    """Dense table of ordered edge-pair weights plus an allowed-edge mask.

    psi has shape (n, n, n, n), indexed [i, j, k, l] for the ordered pair of
    edges (i, j), (k, l).  Entries with i == k, j == l, or a forbidden edge
    are ignored.
    """

    n: int
    psi: np.ndarray
    allowed: np.ndarray = None

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        if self.psi.shape != (self.n,) * 4:
            raise ValueError(f"psi must have shape {(self.n,) * 4}")
        if self.allowed is None:
            self.allowed = np.ones((self.n, self.n), dtype=bool)
        else:
            self.allowed = np.asarray(self.allowed, dtype=bool)

    @classmethod
    def from_entries(cls, n, entries, forbidden=()):
        psi = np.zeros((n, n, n, n))
        for i, j, k, l, w in entries:
            if i == k or j == l:
                raise ValueError(f"incident edge pair ({i},{j}),({k},{l})")
            psi[i, j, k, l] = w
        allowed = np.ones((n, n), dtype=bool)
        for i, j in forbidden:
            allowed[i, j] = False
        return cls(n, psi, allowed)

    @classmethod
    def from_edge_weights(cls, weights):
        """Classical assignment as 2EBM: psi(e, e') = w(e) / (n - 1)."""
        w = np.asarray(weights, dtype=float)
        n = w.shape[0]
        psi = np.repeat(w[:, :, None, None], n, axis=2).repeat(n, axis=3) / (n - 1)
        return cls(n, psi)

    def quadruples(self):
        n = self.n
        for i in range(n):
            for j in range(n):
                if not self.allowed[i, j]:
                    continue
                for k in range(n):
                    if k == i:
                        continue
                    for l in range(n):
                        if l != j and self.allowed[k, l]:
                            yield (i, j, k, l)

    def objective_value(self, assignment) -> float:
        b = tuple(assignment)
        total = 0.0
        for i in range(self.n):
            for k in range(self.n):
                if k != i:
                    total += self.psi[i, b[i], k, b[k]]
        return float(total)

    def has_perfect_matching(self) -> bool:
        graph = csr_matrix(self.allowed.astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return bool(np.all(match >= 0))


@dataclass
class PairIndexMap:
    """Bijection from ordered pairs of distinct indices in [n] to [n(n-1)].

    Values are 1-based, matching the centro-symmetry identity
    pi(i, k) + pi(k, i) = n(n-1) + 1.  Agent/item indices are 0-based.
    """

    n: int

    def __post_init__(self):
        n = self.n
        table = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for k in range(i + 1, n):
                table[i, k] = sum(n - h for h in range(1, i + 1)) + (k + 1) - (i + 1)
                table[k, i] = self.size + 1 - table[i, k]
        self._table = table

    @property
    def size(self) -> int:
        return self.n * (self.n - 1)

    def index(self, i, k) -> int:
        if i == k or not (0 <= i < self.n and 0 <= k < self.n):
            raise ValueError(f"invalid pair ({i}, {k})")
        return int(self._table[i, k])

    def pairs(self):
        return [(i, k) for i in range(self.n) for k in range(self.n) if i != k]

    def inverse(self) -> dict:
        return {self.index(i, k): (i, k) for i, k in self.pairs()}


@dataclass
class CsDsMatrix:
    """Centro-symmetric doubly stochastic matrix view of a relaxation point."""

    matrix: np.ndarray

    ROW_COL_TOL = 1e-7
    NONNEG_TOL = 1e-9
    CENTRO_TOL = 1e-9

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)

    @property
    def size(self):
        return self.matrix.shape[0]

    def validate(self):
        t = self.matrix
        size = self.size
        if t.shape != (size, size) or size % 2 != 0:
            raise DecompositionError(f"matrix must be square of even size, got {t.shape}")
        rows = t.sum(axis=1)
        cols = t.sum(axis=0)
        bad = np.argmax(np.abs(rows - 1.0))
        if abs(rows[bad] - 1.0) > self.ROW_COL_TOL:
            raise DecompositionError(f"row {bad + 1} sums to {rows[bad]!r}")
        bad = np.argmax(np.abs(cols - 1.0))
        if abs(cols[bad] - 1.0) > self.ROW_COL_TOL:
            raise DecompositionError(f"column {bad + 1} sums to {cols[bad]!r}")
        if t.min() < -self.NONNEG_TOL:
            u, v = np.unravel_index(np.argmin(t), t.shape)
            raise DecompositionError(f"negative entry {t[u, v]!r} at ({u + 1}, {v + 1})")
        centro = t - t[::-1, ::-1]
        if np.abs(centro).max() > self.CENTRO_TOL:
            u, v = np.unravel_index(np.argmax(np.abs(centro)), t.shape)
            raise DecompositionError(
                f"centro-symmetry violated at ({u + 1}, {v + 1}): "
                f"{t[u, v]!r} vs {t[size - 1 - u, size - 1 - v]!r}"
            )
        return self

    def is_integral(self, tol=INTEGRALITY_TOL) -> bool:
        t = self.matrix
        return bool(np.all((np.abs(t) <= tol) | (np.abs(t - 1.0) <= tol)))


@dataclass
class RelaxationSolution:
    """Vertex solution of the pair-variable LP relaxation."""

    weights: EdgePairWeights
    quads: list
    t: np.ndarray  # value per quadruple, aligned with quads
    value: float

    def t_table(self) -> dict:
        return {q: self.t[idx] for idx, q in enumerate(self.quads)}

    def edge_marginals(self) -> np.ndarray:
        """Average over partners of the implied edge usage (a doubly
        stochastic matrix for consistent solutions)."""
        n = self.weights.n
        mu = np.zeros((n, n))
        for (i, j, _k, _l), tv in zip(self.quads, self.t):
            mu[i, j] += tv
        return mu / (n - 1)


def solve_relaxation(weights: EdgePairWeights) -> RelaxationSolution:
    """Vertex-optimal solution of the LP relaxation over allowed quadruples.

    Uses the dual simplex so the returned point is a vertex; by the
    centro-symmetric Birkhoff argument it is integral (0/1).
    """
    n = weights.n
    if n < 2:
        raise ValueError("need n >= 2")
    if not weights.has_perfect_matching():
        raise InfeasibleMatchingError("no perfect matching within the allowed edges")
    quads = list(weights.quadruples())
    qidx = {q: t for t, q in enumerate(quads)}
    nv = len(quads)

    rows_i, cols_i, data = [], [], []
    rhs = []
    row = 0
    agent_pair_rows = {}
    item_pair_rows = {}
    for i in range(n):
        for k in range(n):
            if i != k:
                agent_pair_rows[(i, k)] = row
                rhs.append(1.0)
                row += 1
    for j in range(n):
        for l in range(n):
            if j != l:
                item_pair_rows[(j, l)] = row
                rhs.append(1.0)
                row += 1
    for idx, (i, j, k, l) in enumerate(quads):
        rows_i.append(agent_pair_rows[(i, k)])
        cols_i.append(idx)
        data.append(1.0)
        rows_i.append(item_pair_rows[(j, l)])
        cols_i.append(idx)
        data.append(1.0)
    # pair symmetry t(i,j,k,l) = t(k,l,i,j)
    for idx, (i, j, k, l) in enumerate(quads):
        if (i, j) < (k, l):
            rows_i.extend([row, row])
            cols_i.extend([idx, qidx[(k, l, i, j)]])
            data.extend([1.0, -1.0])
            rhs.append(0.0)
            row += 1
    A_eq = csr_matrix((data, (rows_i, cols_i)), shape=(row, nv))
    c = -np.array([weights.psi[q] for q in quads])
    res = linprog(c, A_eq=A_eq, b_eq=np.array(rhs), bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise InfeasibleMatchingError(f"relaxation failed: {res.message}")
    return RelaxationSolution(weights, quads, res.x, -res.fun)


def to_cs_matrix(solution: RelaxationSolution, pair_map: PairIndexMap = None) -> CsDsMatrix:
    """Store t(i,j,k,l) at matrix entry (pi(i,k), pi(j,l)) and validate."""
    if pair_map is None:
        pair_map = PairIndexMap(solution.weights.n)
    size = pair_map.size
    t = np.zeros((size, size))
    for (i, j, k, l), tv in zip(solution.quads, solution.t):
        t[pair_map.index(i, k) - 1, pair_map.index(j, l) - 1] = tv
    return CsDsMatrix(t).validate()


def _matching_from_marginals(solution: RelaxationSolution):
    """Extract the matching implied by a consistent integral vertex, or None."""
    weights = solution.weights
    n = weights.n
    mu = solution.edge_marginals()
    assignment = tuple(int(np.argmax(mu[i])) for i in range(n))
    if sorted(assignment) != list(range(n)):
        return None
    if not all(weights.allowed[i, assignment[i]] for i in range(n)):
        return None
    value = weights.objective_value(assignment)
    # accept only if the matching attains the LP optimum: the LP upper-bounds
    # every matching, so equality certifies optimality
    if value < solution.value - 2e-9 * max(1.0, abs(solution.value)):
        return None
    return Matching(assignment), value


def cs_permutation_to_matching(perm_matrix, pair_map: PairIndexMap):
    """Map a centro-symmetric permutation matrix back to a matching if its
    pair-assignment is consistent with one, else None."""
    n = pair_map.n
    inverse = pair_map.inverse()
    implied = {}
    rows, cols = np.nonzero(perm_matrix > 0.5)
    for u, v in zip(rows, cols):
        (i, k) = inverse[u + 1]
        (j, l) = inverse[v + 1]
        for agent, item in ((i, j), (k, l)):
            if implied.setdefault(agent, item) != item:
                return None
    assignment = tuple(implied.get(i, -1) for i in range(n))
    if sorted(assignment) != list(range(n)):
        return None
    return Matching(assignment)


def peel_cs_permutation(matrix: CsDsMatrix, tol=1e-9):
    """Decompose a centro-symmetric doubly stochastic matrix into a convex
    combination of centro-symmetric permutation matrices.

    This is the constructive side of the centro-symmetric Birkhoff theorem:
    pair up mirrored rows/columns, find a perfect matching between row pairs
    and column pairs on the positive support, lift it to a centro-symmetric
    permutation, subtract, and repeat.
    """
    matrix.validate()
    size = matrix.size
    half = size // 2
    residual = np.maximum(matrix.matrix.copy(), 0.0)
    residual = (residual + residual[::-1, ::-1]) / 2.0
    out = []
    remaining = 1.0
    for _ in range(size * size):
        if remaining <= tol:
            break
        support = residual > tol
        # reduced graph on mirror pairs: row pair u <-> {u, size-1-u}
        red = np.zeros((half, half), dtype=np.int8)
        for u in range(half):
            for v in range(half):
                if support[u, v] or support[u, size - 1 - v]:
                    red[u, v] = 1
        match = maximum_bipartite_matching(csr_matrix(red), perm_type="column")
        if np.any(match < 0):
            raise DecompositionError("no centro-symmetric matching in positive support")
        perm = np.zeros((size, size))
        lam = remaining
        for u in range(half):
            v = int(match[u])
            # orient the pair so both mirrored entries are positive
            if not support[u, v]:
                v = size - 1 - v
            perm[u, v] = 1.0
            perm[size - 1 - u, size - 1 - v] = 1.0
            lam = min(lam, residual[u, v], residual[size - 1 - u, size - 1 - v])
        if lam <= 0:
            raise DecompositionError("degenerate peel step")
        out.append((perm, float(lam)))
        residual -= lam * perm
        residual = np.maximum(residual, 0.0)
        remaining -= lam
    else:
        raise DecompositionError("peeling did not terminate")
    return out


def brute_force_2ebm(weights: EdgePairWeights):
    """Exact maximum by enumerating all matchings; n <= 8.

    Ties break to the lexicographically smallest assignment array.
    """
    n = weights.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    perms = np.array(list(itertools.permutations(range(n))))
    ok = np.ones(len(perms), dtype=bool)
    for i in range(n):
        ok &= weights.allowed[i, perms[:, i]]
    perms = perms[ok]
    if len(perms) == 0:
        raise InfeasibleMatchingError("no perfect matching within the allowed edges")
    totals = np.zeros(len(perms))
    for i in range(n):
        for k in range(n):
            if k != i:
                totals += weights.psi[i, perms[:, i], k, perms[:, k]]
    best = int(np.argmax(totals))  # first max = lex smallest
    assignment = tuple(int(j) for j in perms[best])
    return Matching(assignment), float(totals[best])


def _branch_and_bound(weights: EdgePairWeights):
    """Exact search for larger n: DFS over agents with the LP bound."""
    n = weights.n

    def recurse(depth, allowed, incumbent):
        sub = EdgePairWeights(n, weights.psi, allowed)
        if not sub.has_perfect_matching():
            return incumbent
        relax = solve_relaxation(sub)
        if incumbent is not None and relax.value <= incumbent[1] + 1e-12:
            return incumbent
        consistent = _matching_from_marginals(relax)
        if consistent is not None:
            if incumbent is None or consistent[1] > incumbent[1]:
                return consistent
            return incumbent
        mu = relax.edge_marginals()
        for j in np.argsort(-mu[depth]):
            if not allowed[depth, int(j)]:
                continue
            child = allowed.copy()
            child[depth, :] = False
            child[:, int(j)] = False
            child[depth, int(j)] = True
            incumbent = recurse(depth + 1, child, incumbent)
        return incumbent

    result = recurse(0, weights.allowed.copy(), None)
    if result is None:
        raise InfeasibleMatchingError("no perfect matching within the allowed edges")
    return result


def solve_2ebm(weights: EdgePairWeights):
    """Maximize the edge-pair weight over perfect matchings.

    Returns (matching, value).  The LP relaxation is solved first; its
    vertex is integral, and when the implied pair-assignment is consistent
    with a matching that matching is optimal and returned directly.
    Otherwise the relaxation optimum strictly exceeds every matching (the
    vertex is a non-matching centro-symmetric permutation), and the result
    comes from peeling or exact search.
    """
    relax = solve_relaxation(weights)
    extracted = _matching_from_marginals(relax)
    if extracted is not None:
        return extracted

    # non-vertex or inconsistent optimum: peel and look for a matching tie
    try:
        matrix = to_cs_matrix(relax)
        pair_map = PairIndexMap(weights.n)
        best = None
        for perm, _lam in peel_cs_permutation(matrix):
            b = cs_permutation_to_matching(perm, pair_map)
            if b is not None:
                v = weights.objective_value(b.assignment)
                if best is None or v > best[1]:
                    best = (b, v)
        if best is not None and best[1] >= relax.value - 2e-9 * max(1.0, abs(relax.value)):
            return best
    except DecompositionError:
        pass

    if weights.n <= BRUTE_FORCE_MAX_N:
        return brute_force_2ebm(weights)
    return _branch_and_bound(weights)


def max_weight_assignment(n, edge_weights):
    """Classical maximum-weight perfect matching on a complete n x n graph.

    Exact Hungarian-class optimum; among ties returns the lexicographically
    smallest assignment array.
    """
    w = np.asarray(edge_weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"expected {n}x{n} weights")
    ri, ci = linear_sum_assignment(w, maximize=True)
    best_value = float(w[ri, ci].sum())

    # lexicographic refinement: greedily fix the smallest item per agent
    # that still permits an optimal completion
    assignment = []
    rows = list(range(n))
    cols = list(range(n))
    remaining_value = best_value
    for i in range(n):
        rest_rows = rows[1:]
        for j in sorted(cols):
            sub_cols = [c for c in cols if c != j]
            if rest_rows:
                sri, sci = linear_sum_assignment(w[np.ix_(rest_rows, sub_cols)], maximize=True)
                completion = float(w[np.ix_(rest_rows, sub_cols)][sri, sci].sum())
            else:
                completion = 0.0
            if w[rows[0], j] + completion >= remaining_value - 1e-9:
                assignment.append(j)
                remaining_value -= w[rows[0], j]
                rows = rest_rows
                cols = sub_cols
                break
        else:
            raise RuntimeError("lexicographic refinement failed")
    return Matching(tuple(assignment)), best_value
