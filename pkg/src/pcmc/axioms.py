"""Choice-axiom diagnostics and structural operations on rate matrices.

Covers three families of checks:

* Contractibility: when all rates between two blocks of a partition are
  equal, the chain projects onto a block-level chain whose stationary
  distribution gives the block masses of the original. Two models that
  agree on those block-level rates give their blocks identical total
  mass, whatever happens inside the blocks.
* Uniform expansion: replacing every alternative by k identical copies
  leaves the total mass of each copy-group equal to the original
  alternative's probability.
* Regularity and transitivity: whether adding alternatives to a menu
  can raise an existing alternative's probability, and how many cyclic
  triples the model's pairwise predictions contain. Cycle counts are
  compared against the maximum possible for a tournament of that size.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ctmc
from .base import ChoiceModel
from .ctmc import Distribution, RateMatrix
from .errors import (
    BadNesting,
    IndexOutOfRange,
    InvalidK,
    InvalidPairwise,
    LambdaMismatch,
    NotContractible,
)


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks covering all n alternatives."""

    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        flat = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must be nonempty")
        if sorted(flat) != list(range(self.n)):
            raise ValueError("blocks must partition 0..%d exactly" % (self.n - 1))
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class ContractionSummary:
    """Block-level view of a contractible matrix: the between-block
    rates, the block sizes, and the stationary distribution of the
    contracted chain (one state per block)."""

    lam: np.ndarray
    block_sizes: tuple
    contracted_pi: Distribution

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        k = len(self.block_sizes)
        if lam.shape != (k, k):
            raise ValueError("lam must be k x k")
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))


def check_contractible(q: RateMatrix, partition: Partition, tol: float = 1e-9):
    """Block-level summary if the matrix is contractible, else None.

    Contractible means: for every ordered pair of distinct blocks, all
    rates from members of the first to members of the second are equal
    (within tol). The contracted chain has one state per block and rate
    lam_ij times the target block's size from block i to block j.
    """
    if partition.n != q.n:
        raise ValueError("partition is over %d alternatives, matrix over %d"
                         % (partition.n, q.n))
    k = partition.k
    lam = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            rows = np.array(partition.blocks[a], dtype=int)
            cols = np.array(partition.blocks[b], dtype=int)
            vals = q.rates[np.ix_(rows, cols)]
            if float(vals.max() - vals.min()) > tol:
                return None
            lam[a, b] = float(vals.mean())
    sizes = np.array([len(b) for b in partition.blocks], dtype=float)
    contracted = lam * sizes[None, :]
    gen = contracted.copy()
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=1))
    pi = ctmc.stationary(
        ctmc.RestrictedGenerator(subset=tuple(range(k)), matrix=gen)
    )
    return ContractionSummary(
        lam=lam, block_sizes=tuple(len(b) for b in partition.blocks),
        contracted_pi=pi,
    )


def contraction_invariance(q1: RateMatrix, q2: RateMatrix,
                           partition: Partition, tol: float = 1e-9) -> bool:
    """Whether two contractible matrices with matching block-level rates
    put the same total mass on every block.

    Raises NotContractible when either matrix fails the block-rate
    equality test and LambdaMismatch when their block-level rates
    disagree. The comparison uses each chain's stationary distribution
    over the full universe.
    """
    s1 = check_contractible(q1, partition, tol)
    if s1 is None:
        raise NotContractible("first matrix is not contractible for this partition")
    s2 = check_contractible(q2, partition, tol)
    if s2 is None:
        raise NotContractible("second matrix is not contractible for this partition")
    gap = float(np.abs(s1.lam - s2.lam).max())
    if gap > tol:
        raise LambdaMismatch("block-level rates differ by %.3e" % gap)

    def block_masses(q):
        pi = ctmc.stationary(ctmc.restrict(q, range(q.n)))
        return np.array([pi.mass[np.array(b, dtype=int)].sum()
                         for b in partition.blocks])

    return bool(np.abs(block_masses(q1) - block_masses(q2)).max() <= tol)


def expand_copies(q: RateMatrix, k: int, within_rate: float = 0.5):
    """Replace each alternative with k interchangeable copies.

    Copies of different alternatives keep the original rates; copies of
    the same alternative exchange mass symmetrically at within_rate,
    which must be at least one half so the expanded matrix stays
    canonical whenever the original is. Returns the expanded matrix and
    the partition grouping the copies, copies of alternative m occupying
    indices m*k .. m*k + k - 1.
    """
    k = int(k)
    if k < 1:
        raise InvalidK("copy count must be >= 1, got %d" % k)
    if within_rate < 0.5:
        raise ValueError("within_rate below one half breaks the pair-sum condition")
    n = q.n
    big = np.repeat(np.repeat(q.rates, k, axis=0), k, axis=1)
    for m in range(n):
        block = slice(m * k, (m + 1) * k)
        big[block, block] = within_rate
    np.fill_diagonal(big, 0.0)
    partition = Partition(
        n=n * k,
        blocks=tuple(tuple(range(m * k, (m + 1) * k)) for m in range(n)),
    )
    return RateMatrix(n=n * k, rates=big, meta=q.meta), partition


def verify_uniform_expansion(q: RateMatrix, k: int, tol: float = 1e-8) -> bool:
    """Whether expanding into k copies preserves each alternative's total
    mass, comparing stationary distributions over the full universe."""
    pi = ctmc.stationary(ctmc.restrict(q, range(q.n)))
    big, partition = expand_copies(q, k)
    pi_big = ctmc.stationary(ctmc.restrict(big, range(big.n)))
    grouped = np.array([
        pi_big.mass[np.array(b, dtype=int)].sum() for b in partition.blocks
    ])
    return bool(np.abs(grouped - pi.mass).max() <= tol)


@dataclass(frozen=True)
class RegularityViolation:
    """A witness that enlarging a menu raised an alternative's
    probability: p(item | subset) < p(item | superset) minus tolerance."""

    item: int
    subset: tuple
    superset: tuple
    p_subset: float
    p_superset: float


def regularity_violations(model: ChoiceModel, nestings: Sequence,
                          tol: float = 1e-9) -> list:
    """Regularity violations among the given (subset, superset) pairs.

    Each pair must nest strictly: A a proper subset of B. Returns one
    violation record per (pair, item) where the item's probability rose
    when the menu grew by more than tol.
    """
    out = []
    for a, b in nestings:
        sa = tuple(sorted(int(i) for i in a))
        sb = tuple(sorted(int(i) for i in b))
        if not set(sa) < set(sb):
            raise BadNesting("%s is not a strict subset of %s" % (sa, sb))
        pa = model.probabilities(sa)
        pb = model.probabilities(sb)
        for item in sa:
            lo, hi = pa.prob(item), pb.prob(item)
            if lo < hi - tol:
                out.append(RegularityViolation(
                    item=item, subset=sa, superset=sb,
                    p_subset=lo, p_superset=hi,
                ))
    return out


@dataclass(frozen=True)
class Tournament:
    """Complete orientation of the pairwise comparison graph.

    beats holds ordered pairs (winner, loser), exactly one per unordered
    pair; ties records the pairs whose orientation was forced by the
    tie-breaking rule.
    """

    n: int
    beats: frozenset
    ties: frozenset

    def __post_init__(self):
        beats = frozenset((int(a), int(b)) for a, b in self.beats)
        ties = frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.ties)
        want = {tuple(sorted(e)) for e in beats}
        expect = {(i, j) for i in range(self.n) for j in range(i + 1, self.n)}
        if want != expect or len(beats) != len(expect):
            raise ValueError("need exactly one oriented edge per pair")
        object.__setattr__(self, "beats", beats)
        object.__setattr__(self, "ties", ties)

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for w, _ in self.beats:
            deg[w] += 1
        return deg


def tournament_from_pairwise(p) -> Tournament:
    """Orient each pair toward the likelier winner.

    Accepts a PairwiseMatrix or a raw matrix of win probabilities. An
    exact tie is flagged and its edge oriented toward the lower index
    (head at the lower-numbered alternative).
    """
    a = p.p if hasattr(p, "p") else np.array(p, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise InvalidPairwise("need a square matrix")
    beats, ties = set(), set()
    for i in range(n):
        for j in range(i + 1, n):
            if a[i, j] > a[j, i]:
                beats.add((i, j))
            elif a[i, j] < a[j, i]:
                beats.add((j, i))
            else:
                beats.add((j, i))
                ties.add((i, j))
    return Tournament(n=n, beats=frozenset(beats), ties=frozenset(ties))


def tournament_from_model(model: ChoiceModel) -> Tournament:
    """Tournament induced by a model's pairwise choice probabilities."""
    n = model.n
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = model.probabilities((i, j))
            a[i, j] = d.prob(i)
            a[j, i] = d.prob(j)
    return tournament_from_pairwise(a)


def cyclic_triplets(t: Tournament) -> int:
    """Number of 3-cycles, by out-degrees: C(n,3) - sum_i C(d_i, 2)."""
    deg = t.out_degrees()
    total = math.comb(t.n, 3)
    return total - int(sum(math.comb(int(d), 2) for d in deg))


def harary_moser_bound(n: int) -> int:
    """Maximum number of 3-cycles any tournament on n players can hold:
    (n^3 - n)/24 for odd n, (n^3 - 4n)/24 for even n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n % 2 == 1:
        return (n ** 3 - n) // 24
    return (n ** 3 - 4 * n) // 24


def _enumerate_cycles(t: Tournament) -> list:
    beats = t.beats
    cycles = []
    for i, j, k in itertools.combinations(range(t.n), 3):
        forward = ((i, j) in beats) + ((j, k) in beats) + ((k, i) in beats)
        if forward in (0, 3):
            cycles.append((i, j, k))
    return cycles


def _induced_rates(model):
    """Rate matrix equivalent to the model, when one exists."""
    from .luce import MnlModel
    from .model import PcmcModel
    from .param import BladeChest, q_from_btl

    if isinstance(model, PcmcModel):
        return model.q
    if isinstance(model, MnlModel):
        return q_from_btl(model.gamma)
    if isinstance(model, BladeChest):
        return model.to_pcmc().q
    return None


def _all_nestings(n, max_universe=12):
    """(B minus one item, B) for every set B of size >= 3.

    Full enumeration is exponential, so universes above max_universe
    only check menus against the full universe.
    """
    nestings = []
    if n <= max_universe:
        items = range(n)
        for size in range(3, n + 1):
            for b in itertools.combinations(items, size):
                for drop in b:
                    nestings.append((tuple(x for x in b if x != drop), b))
    else:
        full = tuple(range(n))
        for drop in full:
            nestings.append((tuple(x for x in full if x != drop), full))
    return nestings


def run_audit(model: ChoiceModel, expand_k: int = 2, tol: float = 1e-9) -> dict:
    """Battery of axiom checks on a fitted model, as a plain dict.

    Checks regularity over all one-item-removed nestings, uniform
    expansion of the induced rate matrix (skipped when the model has
    none), and counts cyclic triples in the pairwise predictions against
    the tournament maximum.
    """
    checks = []

    # One-item-removed nestings suffice: if no single addition ever
    # raises an item's probability, no nesting does.
    nestings = _all_nestings(model.n)
    violations = regularity_violations(model, nestings, tol)
    margin = max((v.p_superset - v.p_subset for v in violations), default=0.0)
    checks.append({
        "name": "regularity",
        "status": "fail" if violations else "pass",
        "pairs_checked": len(nestings),
        "margin": margin,
        "violations": [
            {
                "item": v.item,
                "subset": list(v.subset),
                "superset": list(v.superset),
                "p_subset": v.p_subset,
                "p_superset": v.p_superset,
            }
            for v in violations
        ],
    })

    q = _induced_rates(model)
    if q is None:
        checks.append({"name": "uniform_expansion", "status": "skipped",
                       "reason": "model has no single rate-matrix form"})
    else:
        pi = ctmc.stationary(ctmc.restrict(q, range(q.n)))
        big, partition = expand_copies(q, expand_k)
        pi_big = ctmc.stationary(ctmc.restrict(big, range(big.n)))
        grouped = np.array([
            pi_big.mass[np.array(b, dtype=int)].sum() for b in partition.blocks
        ])
        deviation = float(np.abs(grouped - pi.mass).max())
        checks.append({"name": "uniform_expansion",
                       "status": "pass" if deviation <= 1e-8 else "fail",
                       "copies": int(expand_k),
                       "margin": deviation})

    t = tournament_from_model(model)
    cycles = _enumerate_cycles(t)
    count = cyclic_triplets(t)
    if count != len(cycles):
        raise AssertionError("cycle count %d disagrees with enumeration %d"
                             % (count, len(cycles)))
    checks.append({
        "name": "cyclic_triplets",
        "status": "pass",
        "count": count,
        "max_possible": harary_moser_bound(t.n),
        "ties": sorted(list(e) for e in t.ties),
        "witnesses": [list(c) for c in cycles],
    })

    return {"n": model.n, "checks": checks}
