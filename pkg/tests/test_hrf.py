"""Edge signs, tree propagation, majority voting, reconstruction, and the error bounds."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ansatz_state, random_real_state
from hrftomo.experiments import ExperimentConfig, exact_hrf_probs, run_hrf, sample_hrf, simulate_edge_errors
from hrftomo.forest import HypercubeGraph, generate_forest, path_to_root, random_spanning_tree
from hrftomo.hrf import (
    EdgeSignOracle,
    budget,
    choose_root,
    default_n_tree,
    edge_error_bound,
    edge_sign,
    error_budget,
    forest_signs,
    majority_vote,
    minimal_overlap,
    reconstruct,
    reconstruct_from_probs,
    tree_error_bound,
    tree_signs,
    voting_error_bound,
)
from hrftomo.properties import state_fidelity
from hrftomo.sampling import CountTable
from hrftomo.state import MeasurementSetting, RealState


def oracle_for(state: RealState) -> EdgeSignOracle:
    probs = exact_hrf_probs(state)
    return EdgeSignOracle(probs[0], probs[1:])


def node_error_fraction(recovered: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of wrong signs, up to the global sign."""
    s = np.sign(truth)
    wrong = np.mean(recovered != s)
    return float(min(wrong, 1 - wrong))


class TestEdgeSign:
    def test_plus(self):
        assert edge_sign(oracle_for(RealState.from_amplitudes([1, 1])), 0, 0) == 1

    def test_minus(self):
        assert edge_sign(oracle_for(RealState.from_amplitudes([1, -1])), 0, 0) == -1

    def test_zero_maps_to_plus(self):
        assert edge_sign(EdgeSignOracle([1.0, 0.0], [[0.5, 0.5]]), 0, 0) == 1

    def test_matches_amplitude_product(self, rng):
        state = random_real_state(rng, 4)
        psi = state.amplitudes
        oracle = oracle_for(state)
        table = oracle.edge_table()
        for a, b, k in HypercubeGraph(4).edges():
            prod = psi[a] * psi[b]
            if abs(prod) > 1e-9:
                assert edge_sign(oracle, a, k) == np.sign(prod)
            assert table[k, a] == table[k, b] == edge_sign(oracle, a, k)

    def test_rejects_set_bit(self):
        with pytest.raises(ValueError):
            edge_sign(oracle_for(RealState.from_amplitudes([1, 1, 1, 1])), 1, 0)

    def test_oracle_validation(self):
        with pytest.raises(ValueError):
            EdgeSignOracle([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            EdgeSignOracle([0.5, 0.6], [[0.5, 0.5]])
        with pytest.raises(ValueError):
            EdgeSignOracle([0.5, 0.5], [[0.25, 0.25, 0.25, 0.25]])


class TestTreeSigns:
    def test_all_positive(self):
        oracle = oracle_for(RealState.from_amplitudes(np.ones(16)))
        for tree in generate_forest(HypercubeGraph(4), 5, 0):
            assert np.all(tree_signs(oracle, tree) == 1)

    @given(st.integers(1, 7), st.integers(0, 2**32 - 1))
    def test_exact_signs(self, n, seed):
        state = random_real_state(np.random.default_rng(seed), n)
        psi = state.amplitudes
        tree = random_spanning_tree(HypercubeGraph(n), seed)
        signs = tree_signs(oracle_for(state), tree)
        assert signs[0] == 1
        for j in range(1 << n):
            path = path_to_root(tree, j)
            if all(abs(psi[c]) > 1e-9 and abs(psi[p]) > 1e-9 for c, p, _ in path):
                assert signs[j] == np.sign(psi[j]) * np.sign(psi[0])

    def test_product_of_path_edges(self, rng):
        state = random_real_state(rng, 5)
        oracle = oracle_for(state)
        tree = random_spanning_tree(HypercubeGraph(5), 3)
        signs = tree_signs(oracle, tree)
        for j in range(32):
            expected = 1
            for c, p, k in path_to_root(tree, j):
                expected *= edge_sign(oracle, p, k)
            assert signs[j] == expected

    def test_single_tree_can_misassign_under_shot_noise(self):
        state = ansatz_state(5, 2)
        tables = sample_hrf(state, 1000, 0)
        probs = [t.frequencies() for t in tables]
        forest = generate_forest(HypercubeGraph(5), 11, 0)
        fids = [state_fidelity(reconstruct_from_probs(probs[0], probs[1:], forest=forest[i:i + 1]).state, state)
                for i in range(11)]
        assert min(fids) < 1 - 1e-3

    def test_rooted_signs(self, rng):
        state = random_real_state(rng, 4)
        psi = state.amplitudes
        forest = generate_forest(HypercubeGraph(4), 3, 0)
        for root in (0, 5, 15):
            signs = forest_signs(oracle_for(state), forest, root)
            assert np.all(signs[:, root] == 1)
            np.testing.assert_array_equal(signs, np.tile(np.sign(psi) * np.sign(psi[root]), (3, 1)))


class TestMajorityVote:
    def test_single(self):
        v = np.array([1, -1, -1, 1])
        np.testing.assert_array_equal(majority_vote([v]), v)

    def test_identical(self):
        v = np.array([1, -1, 1, -1, -1])
        np.testing.assert_array_equal(majority_vote([v] * 11), v)

    def test_tie_goes_positive(self):
        np.testing.assert_array_equal(majority_vote([[1, -1], [-1, 1]]), [1, 1])

    def test_empty(self):
        with pytest.raises(ValueError):
            majority_vote(np.zeros((0, 4)))

    def test_flip_rate(self):
        rng = np.random.default_rng(0)
        trials, n_tree = 10**4, 11
        votes = np.where(rng.random((n_tree, trials)) < 0.1, -1, 1)
        assert np.mean(majority_vote(votes) < 0) <= 0.03

    @given(st.integers(1, 15), st.integers(0, 2**32 - 1))
    def test_permutation_invariant(self, n_tree, seed):
        rng = np.random.default_rng(seed)
        votes = rng.choice([-1, 1], size=(n_tree, 8))
        np.testing.assert_array_equal(majority_vote(votes), majority_vote(votes[rng.permutation(n_tree)]))


def hrf_tables(state, shots, seed):
    tables = sample_hrf(state, shots, seed)
    return tables[0], tables[1:]


class TestReconstruct:
    @pytest.mark.parametrize("n", range(2, 11))
    def test_exact_input_single_tree(self, n):
        state = ansatz_state(n, 100 + n)
        probs = exact_hrf_probs(state)
        rec = reconstruct_from_probs(probs[0], probs[1:], 1, seed=n, root=0)
        if np.all(np.abs(state.amplitudes) > 1e-6):
            assert state_fidelity(rec.state, state) >= 1 - 1e-9

    @given(st.integers(1, 6), st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_exact_input_any_forest(self, n, n_tree, seed):
        state = random_real_state(np.random.default_rng(seed), n)
        probs = exact_hrf_probs(state)
        for root in (0, "max", "auto"):
            rec = reconstruct_from_probs(probs[0], probs[1:], n_tree, seed, root=root, shots=1e4)
            assert state_fidelity(rec.state, state) >= 1 - 1e-9

    def test_sampled_mean_fidelity(self):
        # the default experiment draw: 10 five-qubit ansatz states at 1e4 shots
        _, summary = run_hrf(ExperimentConfig(n_qubits=5, n_samp=10**4, n_states=10, n_tree=11, seed=0))
        assert summary["fidelity"]["mean"] >= 0.98

    @pytest.mark.slow
    def test_sampled_fidelity_population(self):
        # most states reconstruct near the shot-noise limit; a minority with tiny
        # amplitudes on every short path pulls the mean down
        rows, _ = run_hrf(ExperimentConfig(n_qubits=5, n_samp=10**4, n_states=100, n_tree=11, seed=1))
        fids = np.array([r["fidelity_vs_target"] for r in rows])
        assert np.median(fids) >= 0.99
        assert fids.mean() >= 0.95

    def test_zero_first_amplitude(self, rng):
        psi = rng.normal(size=16)
        psi[0] = 0.0
        state = RealState.from_amplitudes(psi)
        probs = exact_hrf_probs(state)
        for root in ("max", "auto"):
            rec = reconstruct_from_probs(probs[0], probs[1:], 5, 0, root=root, shots=10**4)
            assert rec.root != 0
            f_pos = state_fidelity(rec.state, state)
            f_neg = state_fidelity(rec.state, -state)
            assert f_pos == pytest.approx(f_neg) == pytest.approx(1.0)

    def test_global_sign_invariance(self):
        state = ansatz_state(4, 9)
        a = reconstruct(*hrf_tables(state, 5000, 1), 11, 0)
        b = reconstruct(*hrf_tables(-state, 5000, 1), 11, 0)
        assert state_fidelity(a, state) == pytest.approx(state_fidelity(b, -state), abs=1e-12)

    def test_accepts_any_x_order(self):
        state = ansatz_state(3, 1)
        z, xs = hrf_tables(state, 2000, 0)
        a = reconstruct(z, xs, 11, 0)
        b = reconstruct(z, xs[::-1], 11, 0)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)

    def test_missing_setting(self):
        z, xs = hrf_tables(ansatz_state(3, 1), 100, 0)
        with pytest.raises(ValueError, match="missing"):
            reconstruct(z, xs[:2], 11, 0)

    def test_z_table_required(self):
        z, xs = hrf_tables(ansatz_state(3, 1), 100, 0)
        with pytest.raises(ValueError):
            reconstruct(xs[0], [z, *xs[1:]], 11, 0)

    def test_dimension_mismatch(self):
        z, xs = hrf_tables(ansatz_state(3, 1), 100, 0)
        bad = CountTable(MeasurementSetting.x(2), 100, np.r_[100, np.zeros(15, int)])
        with pytest.raises(ValueError):
            reconstruct(z, [xs[0], xs[1], bad], 11, 0)

    def test_timing_phases(self):
        probs = exact_hrf_probs(ansatz_state(3, 0))
        rec = reconstruct_from_probs(probs[0], probs[1:], 3)
        assert set(rec.timing_ms) == {"forest", "voting", "assemble"}

    def test_default_n_tree(self):
        assert [default_n_tree(n) for n in (1, 5, 6, 12)] == [11, 11, 111, 111]


class TestChooseRoot:
    def test_policies(self):
        z = np.array([0.0005, 0.6, 0.3, 0.0995])
        assert choose_root(z, "max") == 1
        assert choose_root(z, "auto", shots=100) == 1
        assert choose_root(z, "auto", shots=10**6) == 0
        assert choose_root(z, 2) == 2
        with pytest.raises(ValueError):
            choose_root(z, 9)


class TestBounds:
    def test_edge_limits(self):
        assert edge_error_bound(10**12, 0.1) == pytest.approx(0.0, abs=1e-300)
        assert edge_error_bound(0, 0.1) == 1.0

    @pytest.mark.parametrize("a, b, n_samp", [(0.05, 0.5, 200), (0.1, 0.3, 100), (0.2, 0.2, 50)])
    def test_edge_monte_carlo(self, a, b, n_samp):
        emp = simulate_edge_errors(a, b, n_samp, 1000, 0)
        assert emp <= edge_error_bound(n_samp, a * b)

    def test_edge_grid_shape(self):
        # pairs of squared amplitudes that keep p_e below 0.05 at 1e5 shots
        p = np.linspace(0.01, 0.5, 50)
        pj, pk = np.meshgrid(p, p)
        grid = np.exp(-2e5 * pj * pk)
        assert np.all(grid[pj * pk > math.log(20) / 2e5] < 0.05)
        assert edge_error_bound(10**5, math.sqrt(math.log(20) / 2e5)) == pytest.approx(0.05)

    def test_tree_values(self):
        assert tree_error_bound(0.0, 10) == 0.0
        assert tree_error_bound(0.01, 10) == pytest.approx(0.0914, abs=1e-4)
        assert tree_error_bound(1e-4, 5) == pytest.approx(5e-4, rel=0.05)

    def test_voting_values(self):
        assert voting_error_bound(0.0, 7) == pytest.approx(math.exp(-3.5))
        assert voting_error_bound(0.1, 11) == pytest.approx(0.0296, abs=5e-5)
        with pytest.raises(ValueError):
            voting_error_bound(0.5, 11)

    def test_voting_monte_carlo(self):
        rng = np.random.default_rng(3)
        votes = np.where(rng.random((51, 10**4)) < 0.2, -1, 1)
        assert np.mean(majority_vote(votes) < 0) <= voting_error_bound(0.2, 51)

    @given(st.floats(1e-4, 0.5), st.floats(1e-4, 0.5), st.integers(1, 20))
    def test_monotonicity(self, p, q, L):
        lo, hi = sorted((p, q))
        assert tree_error_bound(lo, L) <= tree_error_bound(hi, L) + 1e-15
        assert tree_error_bound(lo, L) <= tree_error_bound(lo, L + 1) + 1e-15
        if hi < 0.5:
            assert voting_error_bound(lo, L + 1) <= voting_error_bound(lo, L)
        assert edge_error_bound(100, lo) >= edge_error_bound(100, hi)
        assert edge_error_bound(100, lo) >= edge_error_bound(101, lo)

    def test_budget_examples(self):
        # ln(L / delta) = 0 at delta = L = 1; the floor keeps one shot and one tree
        assert budget(1.0, 0.1, 1, 0.0) == (1, 1)
        assert budget(0.03, 0.1, 5, 0.1)[1] == 11
        assert budget(0.03, 0.1, 5, 0.1)[1] == math.ceil(math.log(1 / 0.03) / 0.32)

    @pytest.mark.parametrize("args", [(0.1, 0.0, 4, 0.1), (0.1, 0.1, 4, 0.5), (1.5, 0.1, 4, 0.1)])
    def test_budget_errors(self, args):
        with pytest.raises(ValueError):
            budget(*args)

    def test_error_budget_chain(self):
        eb = error_budget(0.05, 0.05, 6)
        assert 0 <= eb.p_e <= 1 and 0 <= eb.p_j < 0.5
        assert eb.n_samp_required >= 1 and eb.n_tree_required >= 1

    def test_minimal_overlap(self):
        state = RealState.from_amplitudes([0.1, 0.2, 0.3, 0.4])
        a = state.amplitudes
        assert minimal_overlap(state) == pytest.approx(min(a[0] * a[1], a[2] * a[3], a[0] * a[2], a[1] * a[3]))

    def test_budget_end_to_end(self):
        delta, L = 0.1, 4
        rng = np.random.default_rng(2024)
        ok = 0
        for t in range(100):
            psi = rng.choice([-1, 1], 16) * rng.uniform(0.5, 1.5, 16)
            state = RealState.from_amplitudes(psi)
            eb = error_budget(delta, minimal_overlap(state), L)
            z, xs = hrf_tables(state, eb.n_samp_required, t)
            rec = reconstruct(z, xs, eb.n_tree_required, t)
            ok += node_error_fraction(np.sign(rec.amplitudes), state.amplitudes) <= delta
        assert ok >= 90
