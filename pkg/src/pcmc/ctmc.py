"""Continuous-time Markov chain machinery.

A chain over n alternatives is described by its off-diagonal transition
rates. Restricting the chain to a subset keeps only the rates among the
subset's members and rebuilds the diagonal so rows sum to zero. The
stationary distribution of a restriction is found by communicating-class
analysis followed by a dense linear solve; states outside the single
closed class receive zero mass.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csgraph

from .errors import (
    EmptySubset,
    IndexOutOfRange,
    MultipleClosedClasses,
    SingularSystem,
)

# Off-diagonal entries at or below this magnitude count as structural
# zeros when building the transition graph.
TOL_EDGE = 1e-12

# Slack allowed on the pair-sum condition q_ij + q_ji >= 1 before a
# matrix stops counting as canonical.
TOL_CONSTRAINT = 1e-9

# A stationary solve is accepted when max|pi Q| is at or below this.
RESIDUAL_TOL = 1e-9

# Stationary mass must sum to one within this tolerance.
MASS_TOL = 1e-10


def _as_rate_array(rates, n=None):
    q = np.array(rates, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("rates must be a square matrix, got shape %s" % (q.shape,))
    if n is not None and q.shape[0] != n:
        raise ValueError("rates are %dx%d but n=%d" % (q.shape[0], q.shape[1], n))
    if not np.all(np.isfinite(q)):
        raise ValueError("rates must be finite")
    off = ~np.eye(q.shape[0], dtype=bool)
    if np.any(q[off] < 0):
        raise ValueError("off-diagonal rates must be nonnegative")
    np.fill_diagonal(q, 0.0)
    q.flags.writeable = False
    return q


@dataclass(frozen=True)
class RateMatrix:
    """Off-diagonal transition rates of a chain over n alternatives.

    The diagonal is not stored as data; it is forced to zero on
    construction. Whether the pair-sum condition q_ij + q_ji >= 1 holds
    is exposed via is_canonical; matrices built from raw data may
    violate it and remain usable, they just lose the guarantee of a
    unique closed class on every restriction.
    """

    n: int
    rates: np.ndarray
    meta: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one alternative")
        object.__setattr__(self, "rates", _as_rate_array(self.rates, self.n))

    @property
    def is_canonical(self) -> bool:
        return self.pair_sum_violation() <= TOL_CONSTRAINT

    def pair_sum_violation(self) -> float:
        """Largest amount by which any pair sum q_ij + q_ji falls short of 1.

        Zero when every pair satisfies the condition (and trivially for
        a one-alternative universe).
        """
        if self.n < 2:
            return 0.0
        sums = self.rates + self.rates.T
        off = ~np.eye(self.n, dtype=bool)
        return float(max(0.0, 1.0 - sums[off].min()))


def _check_subset(subset, n) -> tuple:
    members = tuple(int(i) for i in subset)
    if len(members) == 0:
        raise EmptySubset("choice set must be nonempty")
    seen = set()
    for i in members:
        if i < 0 or i >= n:
            raise IndexOutOfRange("alternative %d outside [0, %d)" % (i, n))
        if i in seen:
            raise ValueError("duplicate alternative %d in subset" % i)
        seen.add(i)
    return members


@dataclass(frozen=True)
class RestrictedGenerator:
    """Infinitesimal generator of a chain restricted to a subset.

    The matrix includes the diagonal: row sums are zero and off-diagonal
    entries are nonnegative. The subset records which original
    alternative each row/column refers to, in the order given at
    restriction time.
    """

    subset: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        s = len(self.subset)
        if m.shape != (s, s):
            raise ValueError("generator shape %s does not match subset size %d" % (m.shape, s))
        if not np.all(np.isfinite(m)):
            raise ValueError("generator entries must be finite")
        off = ~np.eye(s, dtype=bool)
        if s > 1 and m[off].min() < 0:
            raise ValueError("off-diagonal generator entries must be nonnegative")
        # Row sums are exactly zero when the diagonal is built here; allow
        # a little slack scaled by the matrix magnitude for hand-built ones.
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m.sum(axis=1)).max() > 1e-12 * scale:
            raise ValueError("generator rows must sum to zero")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))

    @property
    def size(self) -> int:
        return len(self.subset)


@dataclass(frozen=True)
class Distribution:
    """Probability mass over an ordered support of alternatives."""

    support: tuple
    mass: np.ndarray

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        sup = tuple(int(i) for i in self.support)
        if m.ndim != 1 or len(m) != len(sup):
            raise ValueError("mass length must match support length")
        if len(sup) != len(set(sup)):
            raise ValueError("support must not repeat alternatives")
        if m.min() < 0:
            raise ValueError("mass must be nonnegative")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise ValueError("mass sums to %r, not 1" % float(m.sum()))
        m.flags.writeable = False
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "support", sup)

    def prob(self, item: int) -> float:
        """Mass assigned to one alternative (zero if outside the support)."""
        item = int(item)
        for i, s in enumerate(self.support):
            if s == item:
                return float(self.mass[i])
        return 0.0

    def as_dict(self) -> dict:
        return {s: float(p) for s, p in zip(self.support, self.mass)}


def restrict(q: RateMatrix, subset: Iterable[int]) -> RestrictedGenerator:
    """Generator of the chain watched only on the given alternatives.

    Keeps the rates among subset members and sets each diagonal entry to
    minus its row sum.
    """
    members = _check_subset(subset, q.n)
    idx = np.array(members, dtype=int)
    block = q.rates[np.ix_(idx, idx)].copy()
    np.fill_diagonal(block, 0.0)
    np.fill_diagonal(block, -block.sum(axis=1))
    return RestrictedGenerator(subset=members, matrix=block)


def closed_classes(g: RestrictedGenerator) -> list:
    """Closed communicating classes of a restricted chain.

    Uses the directed graph with an edge i -> j whenever the rate
    exceeds TOL_EDGE. A strongly connected component is closed when no
    member has an edge leaving the component. Classes come back as
    sorted tuples of original alternative ids, ordered by smallest
    member.
    """
    s = g.size
    if s == 1:
        return [(g.subset[0],)]
    adj = g.matrix > TOL_EDGE
    np.fill_diagonal(adj, False)
    n_comp, labels = csgraph.connected_components(
        adj.astype(np.int8), directed=True, connection="strong"
    )
    closed = []
    for c in range(n_comp):
        inside = labels == c
        leaves = adj[inside][:, ~inside]
        if leaves.size == 0 or not leaves.any():
            members = [g.subset[k] for k in np.flatnonzero(inside)]
            closed.append(tuple(sorted(members)))
    closed.sort(key=lambda cls: cls[0])
    return closed


def _solve_on_class(gen: np.ndarray):
    """Stationary row vector of an irreducible generator block.

    Solves pi G = 0 with the last equation replaced by sum(pi) = 1,
    falling back to least squares on the stacked system when the direct
    solve is singular or inaccurate.
    """
    s = gen.shape[0]
    if s == 1:
        return np.array([1.0]), 0.0

    def residual_of(pi):
        return float(np.abs(pi @ gen).max())

    a = gen.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(s)
    b[-1] = 1.0
    best = None
    best_res = math.inf
    try:
        pi = np.linalg.solve(a, b)
        res = residual_of(pi)
        if np.all(np.isfinite(pi)):
            best, best_res = pi, res
    except np.linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.abs(gen).max()))
    if best is None or best_res > RESIDUAL_TOL * scale or best.min() < -1e-9:
        stacked = np.vstack([gen.T, np.ones((1, s))])
        rhs = np.zeros(s + 1)
        rhs[-1] = 1.0
        pi, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
        res = residual_of(pi)
        if res < best_res:
            best, best_res = pi, res
    if best is None or best_res > RESIDUAL_TOL * scale or best.min() < -1e-6:
        raise SingularSystem(best_res if best is not None else math.inf)
    pi = np.clip(best, 0.0, None)
    pi /= pi.sum()
    return pi, best_res


def stationary(g: RestrictedGenerator) -> Distribution:
    """Unique stationary distribution of a restricted chain.

    Raises MultipleClosedClasses when the restriction has more than one
    closed communicating class. Alternatives outside the closed class
    are transient and get exactly zero mass.
    """
    classes = closed_classes(g)
    if len(classes) != 1:
        raise MultipleClosedClasses(classes)
    members = classes[0]
    pos = {item: k for k, item in enumerate(g.subset)}
    cls_idx = np.array([pos[item] for item in members], dtype=int)

    block = g.matrix[np.ix_(cls_idx, cls_idx)].copy()
    # Rebuild the diagonal: rates leaving the closed class are zero by
    # definition, but tiny sub-threshold leaks must not skew row sums.
    np.fill_diagonal(block, 0.0)
    np.fill_diagonal(block, -block.sum(axis=1))
    pi_class, _ = _solve_on_class(block)

    mass = np.zeros(g.size)
    mass[cls_idx] = pi_class
    return Distribution(support=g.subset, mass=mass)
