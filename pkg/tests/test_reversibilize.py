import numpy as np
import pytest

from revmarkov import (
    AcceptanceRule,
    NonPositivePi,
    ProbabilityVector,
    SparseStochasticMatrix,
    SparsityPattern,
    ZeroRow,
    detailed_balance_residual,
    frobenius_distance,
    mh_baseline_distance,
    proposal_from_pattern,
    reversibilize,
    stationarity_residual,
    stationary_mixture,
    stochasticity_residual,
    symmetrized_pattern,
)


class TestProposalFromPattern:
    def test_identity_pattern(self):
        Q = proposal_from_pattern(SparsityPattern.identity(4))
        assert np.array_equal(Q.toarray(), np.eye(4))

    def test_full_pattern(self):
        Q = proposal_from_pattern(SparsityPattern(np.ones((4, 4))))
        assert np.allclose(Q.toarray(), 0.25)

    def test_ring_pattern_rows_are_thirds(self, butane_pattern_dense):
        Q = proposal_from_pattern(SparsityPattern(butane_pattern_dense))
        # every state has exactly three admissible moves in this pattern
        assert np.allclose(Q.csr.data, 1.0 / 3.0)
        assert stochasticity_residual(Q) <= 1e-15

    def test_empty_row_raises(self):
        with pytest.raises(ZeroRow):
            proposal_from_pattern(
                SparsityPattern(np.array([[1.0, 0.0], [0.0, 0.0]]))
            )


class TestReversibilize:
    def test_ring4_metropolis_is_exact(self, ring4):
        T = reversibilize(ring4.T, ring4.pi, AcceptanceRule.METROPOLIS_HASTINGS)
        assert np.abs(T.toarray() - ring4.adjusted).max() <= 1e-15

    def test_balanced_proposal_unchanged(self):
        Q = SparseStochasticMatrix.from_dense(np.full((4, 4), 0.25))
        pi = ProbabilityVector.uniform(4)
        T = reversibilize(Q, pi, AcceptanceRule.METROPOLIS_HASTINGS)
        assert np.abs(T.toarray() - Q.toarray()).max() <= 1e-16

    def test_barker_halves_symmetric_proposal(self):
        dense = np.array(
            [
                [0.4, 0.3, 0.3],
                [0.3, 0.4, 0.3],
                [0.3, 0.3, 0.4],
            ]
        )
        Q = SparseStochasticMatrix.from_dense(dense)
        pi = ProbabilityVector.uniform(3)
        T = reversibilize(Q, pi, AcceptanceRule.BARKER).toarray()
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(T[off], dense[off] / 2.0)
        assert np.allclose(T.sum(axis=1), 1.0)

    @pytest.mark.parametrize("rule", list(AcceptanceRule))
    @pytest.mark.parametrize("seed", range(5))
    def test_output_contracts(self, chain_factory, rule, seed):
        Q = chain_factory(8, seed, density=0.35)
        pi = stationary_mixture(Q)
        T = reversibilize(Q, pi, rule)
        assert detailed_balance_residual(T, pi) <= 1e-14
        assert stochasticity_residual(T) <= 1e-14
        assert stationarity_residual(T, pi) <= 1e-13
        # support containment and the non-reciprocated-edge elimination
        q = Q.toarray()
        t = T.toarray()
        off = ~np.eye(8, dtype=bool)
        assert not np.any((t > 0) & ~((q > 0) | np.eye(8, dtype=bool)))
        assert not np.any((t > 0) & off & (q.T == 0))
        # the diagonal only ever grows
        assert np.all(np.diag(t) >= np.diag(q) - 1e-15)

    def test_rejects_zero_mass_with_outgoing(self):
        Q = SparseStochasticMatrix.from_dense([[0.5, 0.5], [0.5, 0.5]])
        pi = ProbabilityVector([1.0, 0.0])
        with pytest.raises(NonPositivePi) as err:
            reversibilize(Q, pi)
        assert err.value.state == 1

    def test_zero_mass_isolated_state_allowed(self):
        Q = SparseStochasticMatrix.from_dense([[1.0, 0.0], [0.0, 1.0]])
        pi = ProbabilityVector([1.0, 0.0])
        T = reversibilize(Q, pi)
        assert np.array_equal(T.toarray(), np.eye(2))


class TestMHBaselineDistance:
    def test_reversible_input_is_zero(self, reversible_factory):
        P, pi = reversible_factory(7, 3)
        assert mh_baseline_distance(P, pi) <= 1e-13

    def test_matches_direct_computation(self, chain_factory):
        P = chain_factory(9, 21)
        pi = stationary_mixture(P)
        expected = frobenius_distance(
            reversibilize(P, pi, AcceptanceRule.METROPOLIS_HASTINGS), P
        )
        assert mh_baseline_distance(P, pi) == pytest.approx(expected, rel=1e-12)

    def test_default_pi_is_stationary(self, chain_factory):
        P = chain_factory(6, 22)
        assert mh_baseline_distance(P) == pytest.approx(
            mh_baseline_distance(P, stationary_mixture(P)), rel=1e-12
        )

    def test_desk_scale_butane(self, butane):
        # the adjustment must move the chain, but only modestly: asymmetry of
        # lag-1 counts from one wrapped 1d trajectory is winding-dominated
        distance = mh_baseline_distance(butane.P)
        assert 0.0 < distance < 0.2


def test_feasibility_certificate(pattern_factory):
    # any symmetric full-diagonal pattern plus strictly positive target admits
    # a balanced chain supported on the pattern
    rng = np.random.default_rng(5)
    for seed in range(5):
        n = int(rng.integers(3, 9))
        pattern = pattern_factory(n, seed, extra_edges=2 * n)
        raw = rng.random(n) + 0.05
        pi = ProbabilityVector(raw / raw.sum())
        T = reversibilize(proposal_from_pattern(pattern), pi)
        assert detailed_balance_residual(T, pi) <= 1e-14
        assert stationarity_residual(T, pi) <= 1e-13
        assert T.nnz <= pattern.size
        assert symmetrized_pattern(T).positions() <= pattern.positions()
