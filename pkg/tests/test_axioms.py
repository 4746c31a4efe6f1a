import numpy as np
import pytest
from hypothesis import given, strategies as st

from pcmc import axioms, ctmc, serialize
from pcmc.axioms import (
    Partition,
    Tournament,
    check_contractible,
    contraction_invariance,
    cyclic_triplets,
    expand_copies,
    harary_moser_bound,
    regularity_violations,
    run_audit,
    tournament_from_model,
    tournament_from_pairwise,
    verify_uniform_expansion,
)
from pcmc.ctmc import RateMatrix
from pcmc.errors import BadNesting, InvalidK, LambdaMismatch, NotContractible
from pcmc.luce import MmnlModel, MnlModel
from pcmc.model import PcmcModel
from pcmc.param import q_from_btl

from _support import (
    QHAT_SHOP,
    QHAT_WORK,
    brute_force_cycles,
    cyclic_matrix,
    pairwise_from_rates,
    random_canonical,
    random_contractible,
)


class TestPartition:
    def test_valid(self):
        part = Partition(n=4, blocks=((0, 2), (1,), (3,)))
        assert part.k == 3

    def test_must_cover(self):
        with pytest.raises(ValueError):
            Partition(n=4, blocks=((0, 1), (2,)))

    def test_no_overlap(self):
        with pytest.raises(ValueError):
            Partition(n=3, blocks=((0, 1), (1, 2)))

    def test_no_empty_block(self):
        with pytest.raises(ValueError):
            Partition(n=2, blocks=((0, 1), ()))


class TestCheckContractible:
    def test_singletons_always_contract(self):
        rng = np.random.default_rng(1)
        rates = random_canonical(rng, 4)
        q = RateMatrix(n=4, rates=rates)
        part = Partition(n=4, blocks=tuple((i,) for i in range(4)))
        summary = check_contractible(q, part)
        assert summary is not None
        full = ctmc.stationary(ctmc.restrict(q, range(4)))
        assert np.abs(summary.contracted_pi.mass - full.mass).max() <= 1e-12

    def test_copies_contract_to_original(self):
        rng = np.random.default_rng(2)
        q = RateMatrix(n=2, rates=random_canonical(rng, 2))
        big, part = expand_copies(q, k=2)
        summary = check_contractible(big, part)
        assert summary is not None
        original = ctmc.stationary(ctmc.restrict(q, (0, 1)))
        assert np.abs(summary.contracted_pi.mass - original.mass).max() <= 1e-9

    def test_cyclic_split_not_contractible(self):
        part = Partition(n=3, blocks=((0,), (1, 2)))
        assert check_contractible(cyclic_matrix(0.9), part) is None
        # alpha = 0.5 makes both cross rates equal
        assert check_contractible(cyclic_matrix(0.5), part) is not None

    def test_block_masses_match_closed_form(self):
        # contracted chain must reproduce the full chain's block masses,
        # including the closed-form balance ratio for the first block
        rng = np.random.default_rng(3)
        for sizes in [(2, 2), (2, 3, 1), (3, 2, 2)]:
            rates, blocks, lam = random_contractible(rng, sizes)
            n = int(sum(sizes))
            q = RateMatrix(n=n, rates=rates)
            part = Partition(n=n, blocks=tuple(blocks))
            summary = check_contractible(q, part, tol=1e-9)
            assert summary is not None
            full = ctmc.stationary(ctmc.restrict(q, range(n)))
            block_mass = np.array([
                sum(full.prob(i) for i in b) for b in blocks
            ])
            assert np.abs(summary.contracted_pi.mass - block_mass).max() <= 1e-9
            k = len(sizes)
            num = sizes[0] * sum(block_mass[i] * lam[i, 0] for i in range(1, k))
            den = sum(sizes[i] * lam[0, i] for i in range(1, k))
            assert block_mass[0] == pytest.approx(num / den, abs=1e-9)


class TestContractionInvariance:
    def _pair(self, seed):
        rng = np.random.default_rng(seed)
        rates1, blocks, lam = random_contractible(rng, (2, 2))
        rates2 = rates1.copy()
        # change only the within-block corners, keep cross-block rates
        rates2[0, 1], rates2[1, 0] = 0.9, 0.8
        rates2[2, 3], rates2[3, 2] = 0.7, 0.6
        return rates1, rates2, blocks

    def test_within_block_changes_do_not_matter(self):
        rates1, rates2, blocks = self._pair(4)
        part = Partition(n=4, blocks=tuple(blocks))
        assert contraction_invariance(
            RateMatrix(n=4, rates=rates1), RateMatrix(n=4, rates=rates2),
            part, tol=1e-9)

    def test_identity(self):
        rates1, _, blocks = self._pair(5)
        part = Partition(n=4, blocks=tuple(blocks))
        q = RateMatrix(n=4, rates=rates1)
        assert contraction_invariance(q, q, part, tol=1e-9)

    def test_doubled_within_rates(self):
        rates1, _, blocks = self._pair(6)
        rates2 = rates1.copy()
        for b in blocks:
            idx = np.array(b, dtype=int)
            rates2[np.ix_(idx, idx)] *= 2.0
            np.fill_diagonal(rates2[np.ix_(idx, idx)], 0.0)
        part = Partition(n=4, blocks=tuple(blocks))
        assert contraction_invariance(
            RateMatrix(n=4, rates=rates1), RateMatrix(n=4, rates=rates2),
            part, tol=1e-9)

    def test_not_contractible_raises(self):
        part = Partition(n=3, blocks=((0,), (1, 2)))
        with pytest.raises(NotContractible):
            contraction_invariance(cyclic_matrix(0.9), cyclic_matrix(0.9),
                                   part, tol=1e-9)

    def test_lambda_mismatch_raises(self):
        rng = np.random.default_rng(7)
        rates1, blocks, _ = random_contractible(rng, (2, 2))
        rates2 = rates1.copy()
        # scale the cross-block rates: still contractible, different lam
        rates2[:2, 2:] *= 1.5
        rates2[2:, :2] *= 1.5
        part = Partition(n=4, blocks=tuple(blocks))
        with pytest.raises(LambdaMismatch):
            contraction_invariance(
                RateMatrix(n=4, rates=rates1), RateMatrix(n=4, rates=rates2),
                part, tol=1e-9)

    def test_random_contractible_pairs_property(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            k = int(rng.integers(2, 5))
            sizes = tuple(int(rng.integers(1, 4)) for _ in range(k))
            rates1, blocks, lam = random_contractible(rng, sizes)
            n = int(sum(sizes))
            rates2 = rates1.copy()
            for b in blocks:
                if len(b) < 2:
                    continue
                idx = np.array(b, dtype=int)
                fresh = random_canonical(rng, len(b))
                rates2[np.ix_(idx, idx)] = fresh
            part = Partition(n=n, blocks=tuple(blocks))
            assert contraction_invariance(
                RateMatrix(n=n, rates=rates1), RateMatrix(n=n, rates=rates2),
                part, tol=1e-8)


class TestExpandCopies:
    def test_k1_identity(self):
        q = cyclic_matrix(0.6)
        big, part = expand_copies(q, k=1)
        assert np.array_equal(big.rates, q.rates)
        assert part.blocks == ((0,), (1,), (2,))

    def test_cycle_k3_block_masses(self):
        big, part = expand_copies(cyclic_matrix(0.9), k=3)
        assert big.n == 9
        pi = ctmc.stationary(ctmc.restrict(big, range(9)))
        for b in part.blocks:
            mass = sum(pi.prob(i) for i in b)
            assert mass == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_within_rate_is_irrelevant(self):
        rng = np.random.default_rng(9)
        q = RateMatrix(n=4, rates=random_canonical(rng, 4))

        def block_masses(within):
            big, part = expand_copies(q, k=2, within_rate=within)
            pi = ctmc.stationary(ctmc.restrict(big, range(big.n)))
            return np.array([sum(pi.prob(i) for i in b) for b in part.blocks])

        assert np.abs(block_masses(0.5) - block_masses(5.0)).max() <= 1e-10

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            expand_copies(cyclic_matrix(0.5), k=0)

    def test_low_within_rate_rejected(self):
        with pytest.raises(ValueError):
            expand_copies(cyclic_matrix(0.5), k=2, within_rate=0.3)


class TestUniformExpansion:
    def test_k1(self):
        assert verify_uniform_expansion(cyclic_matrix(0.8), k=1)

    def test_cycle_k5(self):
        assert verify_uniform_expansion(cyclic_matrix(0.9), k=5)

    def test_btl_k4(self):
        q = q_from_btl(np.array([0.6, 0.3, 0.1]))
        assert verify_uniform_expansion(q, k=4)
        big, part = expand_copies(q, k=4)
        pi = ctmc.stationary(ctmc.restrict(big, range(big.n)))
        grouped = [sum(pi.prob(i) for i in b) for b in part.blocks]
        assert np.abs(np.array(grouped) - [0.6, 0.3, 0.1]).max() <= 1e-9

    @given(st.integers(0, 2 ** 31 - 1))
    def test_random_models_expand_uniformly(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 4))
        q = RateMatrix(n=n, rates=random_canonical(rng, n))
        assert verify_uniform_expansion(q, k=k, tol=1e-8)


class TestRegularity:
    def test_cycle_alpha_09_violations(self):
        m = PcmcModel(q=cyclic_matrix(0.9))
        triple = (0, 1, 2)
        violations = regularity_violations(m, [((0, 1), triple)])
        assert len(violations) == 1
        v = violations[0]
        assert v.item == 1
        assert v.p_subset == pytest.approx(0.1, abs=1e-12)
        assert v.p_superset == pytest.approx(1.0 / 3.0, abs=1e-12)
        # every pair shows the same pattern: one item per pair is hurt
        all_pairs = [((0, 1), triple), ((0, 2), triple), ((1, 2), triple)]
        assert len(regularity_violations(m, all_pairs)) == 3

    def test_cycle_alpha_06_clean(self):
        m = PcmcModel(q=cyclic_matrix(0.6))
        triple = (0, 1, 2)
        nestings = [((0, 1), triple), ((0, 2), triple), ((1, 2), triple)]
        assert regularity_violations(m, nestings) == []

    def test_mnl_always_regular(self):
        rng = np.random.default_rng(10)
        m = MnlModel(gamma=rng.uniform(0.1, 2.0, size=4))
        nestings = axioms._all_nestings(4)
        assert regularity_violations(m, nestings) == []

    def test_bad_nesting(self):
        m = PcmcModel(q=cyclic_matrix(0.5))
        with pytest.raises(BadNesting):
            regularity_violations(m, [((0, 1), (0, 1))])
        with pytest.raises(BadNesting):
            regularity_violations(m, [((0, 2), (0, 1))])


class TestTournament:
    def test_cyclic_pairwise(self):
        p = pairwise_from_rates(cyclic_matrix(0.9).rates)
        t = tournament_from_pairwise(p)
        assert cyclic_triplets(t) == 1
        assert t.ties == frozenset()

    def test_transitive_model(self):
        m = MnlModel(gamma=np.array([0.5, 0.25, 0.15, 0.1]))
        t = tournament_from_model(m)
        assert cyclic_triplets(t) == 0

    def test_tie_orientation_and_flag(self):
        p = np.array([[0.0, 0.5], [0.5, 0.0]])
        t = tournament_from_pairwise(p)
        assert t.beats == frozenset({(1, 0)})
        assert t.ties == frozenset({(0, 1)})

    def test_work_fixture_has_two_cycles(self):
        t = tournament_from_pairwise(pairwise_from_rates(QHAT_WORK))
        assert cyclic_triplets(t) == 2
        assert cyclic_triplets(t) <= harary_moser_bound(6)

    def test_shop_fixture_matches_enumeration(self):
        t = tournament_from_pairwise(pairwise_from_rates(QHAT_SHOP))
        count = cyclic_triplets(t)
        assert count == brute_force_cycles(t.beats, t.n)
        assert count == 10
        assert count <= harary_moser_bound(8)

    def test_harary_moser_values(self):
        assert harary_moser_bound(3) == 1
        assert harary_moser_bound(5) == 5
        assert harary_moser_bound(6) == 8
        assert harary_moser_bound(7) == 14
        assert harary_moser_bound(8) == 20

    @given(st.integers(0, 2 ** 31 - 1))
    def test_count_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 11))
        beats = set()
        for i in range(n):
            for j in range(i + 1, n):
                beats.add((i, j) if rng.random() < 0.5 else (j, i))
        t = Tournament(n=n, beats=frozenset(beats), ties=frozenset())
        count = cyclic_triplets(t)
        assert count == brute_force_cycles(beats, n)
        assert count <= harary_moser_bound(n)

    def test_tournament_validation(self):
        with pytest.raises(ValueError):
            Tournament(n=3, beats=frozenset({(0, 1)}), ties=frozenset())


class TestDebreuScenario:
    def test_expressible_and_round_trips(self, tmp_path):
        # two pairs dead even while the third is 70/30: impossible for
        # any single quality vector, plain for a rate matrix
        rates = np.array([
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.3],
            [0.5, 0.7, 0.0],
        ])
        m = PcmcModel(q=RateMatrix(n=3, rates=rates))
        assert m.probabilities((0, 1)).prob(0) == pytest.approx(0.5, abs=1e-12)
        assert m.probabilities((0, 2)).prob(0) == pytest.approx(0.5, abs=1e-12)
        assert m.probabilities((1, 2)).prob(1) == pytest.approx(0.7, abs=1e-12)
        path = tmp_path / "debreu.json"
        serialize.save_model(m, str(path))
        back = serialize.load_model(str(path))
        assert np.array_equal(back.q.rates, m.q.rates)
        assert abs(back.probabilities((0, 1, 2)).mass.sum() - 1.0) <= 1e-10


class TestRunAudit:
    def test_cycle_audit(self):
        report = run_audit(PcmcModel(q=cyclic_matrix(0.9)))
        by_name = {c["name"]: c for c in report["checks"]}
        reg = by_name["regularity"]
        assert reg["status"] == "fail"
        assert len(reg["violations"]) == 3
        assert reg["margin"] > 0.2
        assert by_name["uniform_expansion"]["status"] == "pass"
        cyc = by_name["cyclic_triplets"]
        assert cyc["count"] == 1
        assert cyc["max_possible"] == 1
        assert cyc["witnesses"] == [[0, 1, 2]]

    def test_mnl_audit_clean(self):
        report = run_audit(MnlModel(gamma=np.array([0.5, 0.3, 0.2])))
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["regularity"]["status"] == "pass"
        assert by_name["cyclic_triplets"]["count"] == 0

    def test_mixture_skips_expansion(self):
        mix = MmnlModel(
            weights=np.array([0.5, 0.5]),
            components=(MnlModel(gamma=np.array([0.8, 0.1, 0.1])),
                        MnlModel(gamma=np.array([0.2, 0.3, 0.5]))))
        report = run_audit(mix)
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["uniform_expansion"]["status"] == "skipped"
