import numpy as np
import pytest

from revmarkov import (
    AcceptanceRule,
    InconsistentSupport,
    NotConverged,
    ProbabilityVector,
    SparseStochasticMatrix,
    StationarySolveOptions,
    detailed_balance_residual,
    ergodic_decomposition,
    irreducible_stationary,
    is_irreducible,
    kolmogorov_cycle_check,
    reversibilize,
    row_normalize,
    stationarity_residual,
    stationary_distribution,
    stationary_mixture,
    strongly_connected_components,
)

from test_sparse_core import dense_stationary


def lazy_uniform_mixture(n, eps):
    """(1 - eps) I + (eps / n) ones: irreducible, reversible, uniform pi."""
    return SparseStochasticMatrix.from_dense(
        (1.0 - eps) * np.eye(n) + (eps / n) * np.ones((n, n))
    )


class TestStationaryDistribution:
    @pytest.mark.parametrize("eps", [1.0, 0.5, 0.05])
    def test_lazy_uniform_family(self, eps):
        P = lazy_uniform_mixture(6, eps)
        pi = stationary_distribution(P)
        assert np.abs(pi.values - 1.0 / 6.0).max() <= 1e-12

    def test_doubly_stochastic_gives_uniform(self):
        P = row_normalize(np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]]))
        pi = stationary_distribution(P)
        assert np.abs(pi.values - 1.0 / 3.0).max() <= 1e-12

    def test_ring4(self, ring4):
        pi = stationary_distribution(ring4.T)
        assert np.abs(pi.values - ring4.pi.values).max() <= 1e-12
        assert stationarity_residual(ring4.T, pi) <= 1e-13

    def test_residual_contract(self, chain_factory):
        P = chain_factory(12, 0)
        opts = StationarySolveOptions(tolerance=1e-13)
        pi = stationary_distribution(P, opts)
        assert stationarity_residual(P, pi) <= 1e-13

    def test_start_independent_for_irreducible(self, chain_factory):
        P = chain_factory(9, 5)
        reference = stationary_distribution(P)
        rng = np.random.default_rng(0)
        for _ in range(5):
            x0 = rng.random(9) + 0.1
            opts = StationarySolveOptions(
                initial_distribution=ProbabilityVector(x0 / x0.sum())
            )
            pi = stationary_distribution(P, opts)
            assert np.abs(pi.values - reference.values).max() <= 1e-11

    def test_periodic_chain_uses_damping(self):
        # plain iteration oscillates on a 2-cycle; damping must rescue it
        P = SparseStochasticMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        opts = StationarySolveOptions(
            initial_distribution=ProbabilityVector([0.9, 0.1])
        )
        pi = stationary_distribution(P, opts)
        assert np.abs(pi.values - 0.5).max() <= 1e-12

    def test_not_converged(self, chain_factory):
        P = chain_factory(8, 3)
        with pytest.raises(NotConverged) as err:
            stationary_distribution(P, StationarySolveOptions(max_iterations=2))
        assert err.value.iterations == 2
        assert err.value.residual > 0

    def test_reducible_zero_set_marks_transients(self):
        # state 2 drains into the closed block {0, 1}
        P = SparseStochasticMatrix.from_dense(
            [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.25, 0.25, 0.5]]
        )
        pi = stationary_distribution(P)
        assert pi.support.tolist() == [0, 1]


class TestStationaryMixture:
    def test_matches_power_iteration_on_irreducible(self, chain_factory):
        for seed in range(4):
            P = chain_factory(8, seed)
            direct = stationary_mixture(P)
            powered = stationary_distribution(P)
            assert np.abs(direct.values - powered.values).max() <= 1e-11

    def test_matches_dense_oracle(self, chain_factory):
        P = chain_factory(10, 11)
        pi = stationary_mixture(P)
        assert np.abs(pi.values - dense_stationary(P.toarray())).max() <= 1e-12

    def test_exact_zeros_on_transients(self):
        P = SparseStochasticMatrix.from_dense(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.3, 0.4]]
        )
        pi = stationary_mixture(P)
        assert pi.values[2] == 0.0
        # uniform start: each absorbing state gets 1/3 directly plus half of
        # the transient third
        assert np.allclose(pi.values[:2], 0.5)

    def test_metastable_chain_beats_power_iteration(self, butane):
        # the torsion chain's spectral gap is ~1e-5, far too small for power
        # iteration at default budget; the elimination route is exact and is
        # why it is the pipeline default
        with pytest.raises(NotConverged):
            stationary_distribution(butane.P)
        pi = stationary_mixture(butane.P)
        assert stationarity_residual(butane.P, pi) <= 1e-14

    def test_gth_handles_metastable(self):
        # nearly uncoupled two-block chain: power iteration would need ~1e7
        # iterations, elimination is exact
        eps = 1e-9
        P = SparseStochasticMatrix.from_dense(
            [
                [1.0 - eps, eps, 0.0],
                [eps, 1.0 - 2.0 * eps, eps],
                [0.0, eps, 1.0 - eps],
            ]
        )
        pi = irreducible_stationary(P)
        assert stationarity_residual(P, pi) <= 1e-16
        # the chain is doubly stochastic, so the stationary vector is uniform
        assert np.allclose(pi.values, 1.0 / 3.0, atol=1e-12)


class TestStronglyConnectedComponents:
    def test_irreducible_single_component(self, chain_factory):
        P = chain_factory(7, 2)
        components = strongly_connected_components(P)
        assert len(components) == 1
        assert components[0].tolist() == list(range(7))

    def test_ring4_adjusted_three_components(self, ring4):
        adjusted = SparseStochasticMatrix.from_dense(ring4.adjusted)
        components = strongly_connected_components(adjusted)
        assert [c.tolist() for c in components] == [[0], [1], [2, 3]]

    def test_block_diagonal(self, reversible_factory):
        A, _ = reversible_factory(3, 0)
        B, _ = reversible_factory(4, 1)
        P = np.zeros((7, 7))
        P[:3, :3] = A.toarray()
        P[3:, 3:] = B.toarray()
        components = strongly_connected_components(SparseStochasticMatrix.from_dense(P))
        assert sorted(c.tolist() for c in components) == [[0, 1, 2], [3, 4, 5, 6]]

    def test_reverse_topological_order(self):
        # 0 -> 1 -> 2 with self loops: sinks must come out first
        P = SparseStochasticMatrix.from_dense(
            [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]]
        )
        components = strongly_connected_components(P)
        assert [c.tolist() for c in components] == [[2], [1], [0]]

    def test_deterministic(self, chain_factory):
        P = chain_factory(20, 8, density=0.15, ensure_irreducible=False)
        first = strongly_connected_components(P)
        second = strongly_connected_components(P)
        assert all(np.array_equal(a, b) for a, b in zip(first, second))


class TestIsIrreducible:
    def test_ring4(self, ring4):
        assert is_irreducible(ring4.T)

    def test_ring4_adjusted(self, ring4):
        assert not is_irreducible(SparseStochasticMatrix.from_dense(ring4.adjusted))

    def test_identity(self):
        assert not is_irreducible(SparseStochasticMatrix.from_dense(np.eye(3)))


class TestErgodicDecomposition:
    def test_irreducible_single_class(self, chain_factory):
        P = chain_factory(6, 1)
        pi = stationary_mixture(P)
        dec = ergodic_decomposition(P, pi)
        assert dec.num_classes == 1
        assert dec.transient.size == 0
        assert dec.classes[0].tolist() == list(range(6))

    def test_ring4_adjusted_three_classes(self, ring4):
        adjusted = SparseStochasticMatrix.from_dense(ring4.adjusted)
        pi = stationary_mixture(adjusted)
        dec = ergodic_decomposition(adjusted, pi)
        assert dec.num_classes == 3
        assert dec.transient.size == 0

    def test_transient_block(self):
        # two closed blocks feeding nothing, one transient block feeding both
        P = np.zeros((5, 5))
        P[0, 0] = P[1, 1] = 1.0
        P[2, 2:4] = [0.5, 0.5]
        P[3, 2:4] = [0.5, 0.5]
        P[4] = [0.25, 0.25, 0.2, 0.2, 0.1]
        P = SparseStochasticMatrix.from_dense(P)
        pi = stationary_mixture(P)
        dec = ergodic_decomposition(P, pi)
        assert dec.transient.tolist() == [4]
        assert sorted(c.tolist() for c in dec.classes) == [[0], [1], [2, 3]]
        assert dec.permutation.tolist() == [0, 1, 2, 3, 4]

    def test_classes_are_closed(self, chain_factory):
        P = chain_factory(9, 4)
        pi = stationary_mixture(P)
        dec = ergodic_decomposition(P, pi)
        for members in dec.classes:
            block = P.csr[members][:, members]
            sums = np.asarray(block.sum(axis=1)).ravel()
            assert np.abs(sums - 1.0).max() <= 1e-12

    def test_inconsistent_support_detected(self, chain_factory):
        P = chain_factory(5, 6)  # irreducible: every state has outflow
        fake = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
        with pytest.raises(InconsistentSupport):
            ergodic_decomposition(P, ProbabilityVector(fake))


class TestKolmogorovCycleCheck:
    def test_symmetric_passes(self):
        P = row_normalize(np.full((5, 5), 0.2))
        assert kolmogorov_cycle_check(P, 5).passed

    def test_ring4_violation(self, ring4):
        result = kolmogorov_cycle_check(ring4.T, 3)
        assert not result.passed
        assert result.cycle == (0, 1, 2)
        assert result.forward_product == pytest.approx(0.5)
        assert result.reverse_product == 0.0

    def test_reversibilized_chain_passes(self, chain_factory):
        P = chain_factory(6, 12)
        pi = stationary_mixture(P)
        T = reversibilize(P, pi, AcceptanceRule.METROPOLIS_HASTINGS)
        assert detailed_balance_residual(T, pi) <= 1e-14
        assert kolmogorov_cycle_check(T, 6).passed

    def test_balanced_implies_pass(self, reversible_factory):
        for seed in range(3):
            P, pi = reversible_factory(6, seed)
            assert detailed_balance_residual(P, pi) <= 1e-15
            assert kolmogorov_cycle_check(P, 6).passed

    def test_respects_length_cap(self, ring4):
        # the only violating cycles have length 3; capping at 2 must pass
        assert kolmogorov_cycle_check(ring4.T, 2).passed
