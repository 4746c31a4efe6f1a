"""Bridges from other parameterizations into rate matrices.

Two constructions map existing model families onto the chain model:

* Luce weights: setting the rate from j to i equal to the probability
  that i beats j reproduces the Luce model's choice probabilities
  exactly, on every choice set.
* An arbitrary pairwise win-probability matrix: the same construction
  (rate j -> i equals the probability i beats j) embeds any set of
  paired-comparison marginals, intransitive ones included, since rows
  and their transposes sum to one pairwise.

The embedding model ("blade-chest") scores ordered pairs with two
d-dimensional vectors per alternative and squashes the score through a
logistic; its pairwise matrix is plugged into the chain construction to
extend it from pairs to larger sets.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import ctmc, data as data_mod, model as model_mod
from .ctmc import Distribution, RateMatrix
from .errors import (
    EmptyDataset,
    IndexOutOfRange,
    InvalidK,
    InvalidPairwise,
    NonpositiveGamma,
    OptimizerFailure,
    SameItem,
)
from .luce import MnlModel
from .model import FitConfig, PcmcModel

_PAIR_TOL = 1e-10


@dataclass(frozen=True)
class PairwiseMatrix:
    """Win probabilities for ordered pairs: p[i, j] is the probability
    that i is chosen from {i, j}. Off-diagonal entries lie in [0, 1]
    and complementary entries sum to one; the diagonal is zero."""

    n: int
    p: np.ndarray

    def __post_init__(self):
        a = np.array(self.p, dtype=float)
        if a.shape != (self.n, self.n):
            raise InvalidPairwise("matrix must be %d x %d" % (self.n, self.n))
        if not np.all(np.isfinite(a)):
            raise InvalidPairwise("entries must be finite")
        off = ~np.eye(self.n, dtype=bool)
        if self.n > 1:
            vals = a[off]
            if vals.min() < 0 or vals.max() > 1:
                raise InvalidPairwise("off-diagonal entries must lie in [0, 1]")
            if np.abs(a + a.T - 1.0)[off].max() > _PAIR_TOL:
                raise InvalidPairwise("p[i, j] + p[j, i] must equal 1")
        np.fill_diagonal(a, 0.0)
        a.flags.writeable = False
        object.__setattr__(self, "p", a)


def q_from_btl(gamma) -> RateMatrix:
    """Rate matrix that reproduces a Luce model with the given weights.

    The rate from j to i is gamma_i / (gamma_i + gamma_j), so each pair
    sums to exactly one and the chain's stationary distribution on any
    set equals the Luce choice distribution on that set.
    """
    g = np.array(gamma, dtype=float)
    if g.ndim != 1 or len(g) < 2:
        raise ValueError("need a vector of at least 2 weights")
    if not np.all(np.isfinite(g)) or g.min() <= 0:
        raise NonpositiveGamma("weights must be finite and > 0")
    denom = g[:, None] + g[None, :]
    # entry [j, i] must be g_i / (g_i + g_j): column i carries g_i.
    rates = g[None, :] / denom
    # take the upper triangle as the exact complement so each pair sums
    # to one without rounding residue
    iu = np.triu_indices(len(g), k=1)
    rates[iu] = 1.0 - rates[(iu[1], iu[0])]
    np.fill_diagonal(rates, 0.0)
    return RateMatrix(n=len(g), rates=rates)


def q_from_pairwise(p: PairwiseMatrix) -> RateMatrix:
    """Rate matrix whose pair restrictions reproduce the given win
    probabilities: the rate from j to i is p[i, j]."""
    rates = p.p.T.copy()
    np.fill_diagonal(rates, 0.0)
    return RateMatrix(n=p.n, rates=rates)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class BladeChest:
    """Pairwise comparison model with two embeddings per alternative.

    The matchup score of i over j is either the inner-product form
    b_i . c_j - b_j . c_i or the distance form
    ||b_i - c_j||^2 - ||b_j - c_i||^2, squashed through a logistic to a
    win probability. Choice sets larger than two are handled by feeding
    the pairwise matrix into the chain construction.
    """

    n: int
    d: int
    blades: np.ndarray
    chests: np.ndarray
    variant: str = "distance"

    def __post_init__(self):
        if self.variant not in ("distance", "inner"):
            raise ValueError("variant must be 'distance' or 'inner'")
        b = np.array(self.blades, dtype=float)
        c = np.array(self.chests, dtype=float)
        if self.n < 2 or self.d < 1:
            raise InvalidK("need n >= 2 alternatives and d >= 1 dimensions")
        if b.shape != (self.n, self.d) or c.shape != (self.n, self.d):
            raise ValueError("embeddings must both be n x d")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("embeddings must be finite")
        b.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "blades", b)
        object.__setattr__(self, "chests", c)

    def matchups(self) -> np.ndarray:
        """Antisymmetric score matrix; entry [i, j] is i's score over j."""
        if self.variant == "inner":
            m = self.blades @ self.chests.T
            return m - m.T
        sq = ((self.blades[:, None, :] - self.chests[None, :, :]) ** 2).sum(axis=2)
        return sq - sq.T

    def pairwise(self) -> PairwiseMatrix:
        p = _sigmoid(self.matchups())
        np.fill_diagonal(p, 0.0)
        return PairwiseMatrix(n=self.n, p=p)

    def to_pcmc(self) -> PcmcModel:
        return PcmcModel(q=q_from_pairwise(self.pairwise()))

    def probabilities(self, subset: Sequence[int]) -> Distribution:
        return self.to_pcmc().probabilities(subset)


def bladechest_pair(model: BladeChest, i: int, j: int) -> float:
    """Probability that i beats j under the embedding model."""
    i, j = int(i), int(j)
    if i == j:
        raise SameItem("cannot compare alternative %d with itself" % i)
    for k in (i, j):
        if k < 0 or k >= model.n:
            raise IndexOutOfRange("alternative %d outside [0, %d)" % (k, model.n))
    return float(_sigmoid(model.matchups()[i, j]))


def mnl_to_pcmc(mnl: MnlModel) -> PcmcModel:
    """Chain model that reproduces a Luce model exactly."""
    return PcmcModel(q=q_from_btl(mnl.gamma))


def fit_bladechest(dataset, d: int, variant: str = "distance",
                   cfg: FitConfig = None) -> BladeChest:
    """Fit embeddings by maximizing the smoothed chain log-likelihood.

    The 2*d*n embedding coordinates are unconstrained; the induced rate
    matrix is always canonical because complementary win probabilities
    sum to one. Same quasi-Newton-with-finite-differences recipe as the
    rate-matrix fitter, started from small random embeddings drawn with
    cfg.seed.
    """
    cfg = cfg or FitConfig()
    if len(dataset) == 0:
        raise EmptyDataset("cannot fit on an empty dataset")
    d = int(d)
    if d < 1:
        raise InvalidK("embedding dimension must be >= 1, got %d" % d)
    n = dataset.n
    if variant not in ("distance", "inner"):
        raise ValueError("variant must be 'distance' or 'inner'")

    terms = data_mod._set_terms(dataset, cfg.smoothing_alpha)
    objective = model_mod._SetObjective(n, terms)

    def build(x):
        half = n * d
        return BladeChest(
            n=n, d=d,
            blades=x[:half].reshape(n, d),
            chests=x[half:].reshape(n, d),
            variant=variant,
        )

    def fun(x):
        bc = build(x)
        rates = _sigmoid(bc.matchups()).T.copy()
        np.fill_diagonal(rates, 0.0)
        value = objective.loglik(rates)
        if value is None or not math.isfinite(value):
            return model_mod._PENALTY
        return -value

    def jac(x):
        return model_mod.finite_difference_gradient(fun, x, cfg.grad_step)

    rng = np.random.default_rng(cfg.seed)
    x0 = rng.standard_normal(2 * n * d) / math.sqrt(d)

    tracked = {"x": x0.copy(), "val": fun(x0)}

    def callback(xk):
        v = fun(xk)
        if v < tracked["val"]:
            tracked["x"], tracked["val"] = xk.copy(), v

    # The embedding problem is unconstrained, so a plain quasi-Newton
    # method applies; it is far more reliable here than a sequential
    # quadratic programming step with no constraints to anchor it.
    res = minimize(
        fun, x0, jac=jac, method="L-BFGS-B", callback=callback,
        options={"maxiter": cfg.max_iters, "ftol": cfg.ftol},
    )
    best_x, best_val = tracked["x"], tracked["val"]
    if np.isfinite(res.fun) and res.fun < best_val:
        best_x, best_val = res.x, float(res.fun)
    if best_val >= model_mod._PENALTY:
        raise OptimizerFailure("embedding fit produced no finite likelihood")
    return build(best_x)
