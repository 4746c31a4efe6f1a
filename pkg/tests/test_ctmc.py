import numpy as np
import pytest
from hypothesis import given, strategies as st

from pcmc import ctmc
from pcmc.ctmc import Distribution, RateMatrix, RestrictedGenerator
from pcmc.errors import (
    EmptySubset,
    IndexOutOfRange,
    MultipleClosedClasses,
)

from _support import (
    ORACLE_PI,
    ORACLE_RATES,
    cyclic_matrix,
    cyclic_rates,
    random_canonical,
    simulate_stationary,
)


class TestRateMatrix:
    def test_diagonal_forced_to_zero(self):
        rates = np.ones((2, 2))
        q = RateMatrix(n=2, rates=rates)
        assert q.rates[0, 0] == 0.0 and q.rates[1, 1] == 0.0

    def test_negative_rate_rejected(self):
        rates = np.array([[0.0, -0.1], [1.2, 0.0]])
        with pytest.raises(ValueError):
            RateMatrix(n=2, rates=rates)

    def test_canonical_flag(self):
        assert RateMatrix(n=2, rates=[[0, 0.5], [0.5, 0]]).is_canonical
        weak = RateMatrix(n=2, rates=[[0, 0.2], [0.2, 0]])
        assert not weak.is_canonical
        assert weak.pair_sum_violation() == pytest.approx(0.6)

    def test_immutable(self):
        q = cyclic_matrix(0.9)
        with pytest.raises(ValueError):
            q.rates[0, 1] = 2.0


class TestRestrict:
    def test_cyclic_pair(self):
        # restriction to {0, 1} of the alpha-cycle
        alpha = 0.9
        g = ctmc.restrict(cyclic_matrix(alpha), (0, 1))
        expect = np.array([[-(1 - alpha), 1 - alpha], [alpha, -alpha]])
        assert np.allclose(g.matrix, expect, atol=1e-15)

    def test_singleton(self):
        g = ctmc.restrict(cyclic_matrix(0.3), (1,))
        assert g.matrix.shape == (1, 1)
        assert g.matrix[0, 0] == 0.0

    def test_oracle_diagonal(self):
        g = ctmc.restrict(RateMatrix(n=3, rates=ORACLE_RATES), (0, 1, 2))
        assert np.allclose(np.diag(g.matrix), [-1.3, -1.3, -0.7], atol=1e-15)

    def test_row_sums_zero(self):
        g = ctmc.restrict(RateMatrix(n=3, rates=ORACLE_RATES), (0, 2))
        assert np.abs(g.matrix.sum(axis=1)).max() <= 1e-12

    def test_empty_subset(self):
        with pytest.raises(EmptySubset):
            ctmc.restrict(cyclic_matrix(0.5), ())

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            ctmc.restrict(cyclic_matrix(0.5), (0, 3))

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            ctmc.restrict(cyclic_matrix(0.5), (0, 0))

    def test_generator_validation(self):
        with pytest.raises(ValueError):
            RestrictedGenerator(subset=(0, 1), matrix=np.array([[-1.0, 0.5],
                                                                [0.5, -0.5]]))


class TestClosedClasses:
    def test_cycle_is_one_class(self):
        g = ctmc.restrict(cyclic_matrix(0.9), (0, 1, 2))
        assert ctmc.closed_classes(g) == [(0, 1, 2)]

    def test_two_isolated_classes(self):
        # 0 drains into 1; 2 unreachable both ways: closed {1} and {2}
        rates = np.array([
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
        ])
        q = RateMatrix(n=3, rates=rates)
        g = ctmc.restrict(q, (0, 1, 2))
        assert ctmc.closed_classes(g) == [(1,), (2,)]

    def test_absorbing_state(self):
        rates = np.array([[0.0, 1.0], [0.0, 0.0]])
        g = ctmc.restrict(RateMatrix(n=2, rates=rates), (0, 1))
        assert ctmc.closed_classes(g) == [(1,)]

    def test_random_canonical_always_single_class(self):
        # canonical pair sums guarantee a unique closed class on every menu
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            q = RateMatrix(n=n, rates=random_canonical(rng, n))
            for size in range(2, n + 1):
                members = tuple(sorted(rng.choice(n, size=size, replace=False)))
                g = ctmc.restrict(q, members)
                assert len(ctmc.closed_classes(g)) == 1


class TestStationary:
    def test_cycle_uniform_exact(self):
        for alpha in (0.1, 0.5, 0.9):
            pi = ctmc.stationary(ctmc.restrict(cyclic_matrix(alpha), (0, 1, 2)))
            assert np.abs(pi.mass - 1.0 / 3.0).max() <= 1e-12

    def test_symmetric_pair(self):
        q = RateMatrix(n=2, rates=[[0.0, 0.5], [0.5, 0.0]])
        pi = ctmc.stationary(ctmc.restrict(q, (0, 1)))
        assert np.allclose(pi.mass, [0.5, 0.5], atol=1e-14)

    def test_oracle_fixture(self):
        pi = ctmc.stationary(ctmc.restrict(RateMatrix(n=3, rates=ORACLE_RATES),
                                           (0, 1, 2)))
        assert np.abs(pi.mass - ORACLE_PI).max() <= 1e-12

    def test_transients_get_zero(self):
        rates = np.array([[0.0, 1.0], [0.0, 0.0]])
        pi = ctmc.stationary(ctmc.restrict(RateMatrix(n=2, rates=rates), (0, 1)))
        assert pi.mass[0] == 0.0
        assert pi.mass[1] == 1.0

    def test_multiple_closed_classes_raises(self):
        rates = np.zeros((3, 3))
        rates[0, 1] = 1.0
        q = RateMatrix(n=3, rates=rates)
        with pytest.raises(MultipleClosedClasses) as err:
            ctmc.stationary(ctmc.restrict(q, (0, 1, 2)))
        assert err.value.classes == [(1,), (2,)]

    def test_singleton_is_forced(self):
        pi = ctmc.stationary(ctmc.restrict(cyclic_matrix(0.4), (2,)))
        assert pi.support == (2,)
        assert pi.mass[0] == 1.0

    def test_residual_and_mass(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            q = RateMatrix(n=n, rates=random_canonical(rng, n))
            g = ctmc.restrict(q, range(n))
            pi = ctmc.stationary(g)
            assert np.abs(pi.mass @ g.matrix).max() <= 1e-9
            assert abs(pi.mass.sum() - 1.0) <= 1e-12
            assert pi.mass.min() >= 0.0

    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
    def test_scale_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        rates = random_canonical(rng, n)
        members = tuple(range(n))
        base = ctmc.stationary(ctmc.restrict(RateMatrix(n=n, rates=rates), members))
        scaled = ctmc.stationary(
            ctmc.restrict(RateMatrix(n=n, rates=c * rates), members))
        assert np.abs(base.mass - scaled.mass).max() <= 1e-9

    def test_agreement_with_simulation(self):
        # jump-chain Monte Carlo as a model-free oracle
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            rates = random_canonical(rng, 4)
            g = ctmc.restrict(RateMatrix(n=4, rates=rates), range(4))
            pi = ctmc.stationary(g)
            sim = simulate_stationary(g.matrix, steps=1_000_000, seed=seed + 100)
            tv = 0.5 * np.abs(pi.mass - sim).sum()
            assert tv <= 5e-3


class TestDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            Distribution(support=(0, 1), mass=np.array([0.7, 0.7]))
        with pytest.raises(ValueError):
            Distribution(support=(0, 1), mass=np.array([-0.1, 1.1]))

    def test_prob_and_as_dict(self):
        d = Distribution(support=(3, 5), mass=np.array([0.25, 0.75]))
        assert d.prob(5) == 0.75
        assert d.as_dict() == {3: 0.25, 5: 0.75}
        assert d.prob(4) == 0.0
