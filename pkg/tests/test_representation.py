import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markov_girsanov.core import Distribution, JumpTrajectory, validate_generator, validate_stochastic
from markov_girsanov.errors import (
    DegenerateReference,
    NegativeProbability,
    NotCenteredError,
    ZeroLikelihood,
)
from markov_girsanov.likelihood import likelihood_ctmc
from markov_girsanov.quadratic import QuadraticCoefficients, build_quadratic
from markov_girsanov.representation import (
    delta_basis_decompose,
    delta_basis_system,
    discrete_round_trip,
    extract_jump_coefficients,
    hadamard_decompose,
    recover_transition,
)
from markov_girsanov.simulate import ConstantCoefficients, ConstantControl, SeededSampler, simulate_ctmc

P0 = validate_stochastic([[0.5, 0.5], [0.5, 0.5]], require_positive=True)
P1 = validate_stochastic([[0.7, 0.3], [0.6, 0.4]])
Q0 = validate_generator([[-1.0, 1.0], [1.0, -1.0]], require_positive_offdiag=True)
DOUBLE = ConstantCoefficients(QuadraticCoefficients([1, 1], [2, 2]))


class TestDeltaBasis:
    def test_zero(self):
        assert np.all(delta_basis_decompose([0.0, 0.0, 0.0], [0.2, 0.3, 0.5]).G == 0)

    def test_canonical_gauge_returns_y(self):
        G = delta_basis_decompose([0.5, -0.5], [0.5, 0.5]).G
        assert np.allclose(G, [0.5, -0.5], atol=1e-14)
        assert np.allclose(delta_basis_system([0.5, 0.5]) @ G, [0.5, -0.5], atol=1e-14)

    def test_not_centred(self):
        with pytest.raises(NotCenteredError):
            delta_basis_decompose([0.3, 0.3], [0.5, 0.5])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(-50, 50))
    def test_gauge_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        p = rng.dirichlet(np.ones(n))
        G = rng.normal(size=n)
        A = delta_basis_system(p)
        assert np.allclose(A @ (G + c), A @ G, atol=1e-10)
        Y = A @ G
        canon = delta_basis_decompose(Y, p).G
        assert abs(p @ canon) < 1e-10
        assert np.allclose(A @ canon, Y, atol=1e-10)


class TestRecover:
    def test_zero_correction(self):
        assert np.array_equal(recover_transition(1.3, np.zeros((2, 2)), P0).entries, P0.entries)

    def test_example(self):
        P = recover_transition(1.0, {1: [0.2, -0.2]}, P0)
        assert np.allclose(P.entries[0], [0.6, 0.4], atol=1e-15)
        assert np.allclose(P.entries[1], [0.5, 0.5])

    def test_errors(self):
        with pytest.raises(ZeroLikelihood):
            recover_transition(0.0, np.zeros((2, 2)), P0)
        with pytest.raises(NegativeProbability):
            recover_transition(1.0, {1: [3.0, -3.0]}, P0)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_rows_always_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        from factories import random_stochastic
        n = int(rng.integers(2, 5))
        P = random_stochastic(rng, n)
        G = rng.normal(scale=0.1, size=(n, n))
        try:
            out = recover_transition(float(rng.uniform(0.5, 3)), G, P)
        except NegativeProbability:
            return
        assert np.allclose(out.entries.sum(axis=1), 1.0, atol=1e-12)

    def test_round_trip_example(self):
        rep = discrete_round_trip(Distribution.point_mass(1, 2), ConstantControl(P1), P0, 4)
        assert rep.max_deviation < 1e-10 and rep.atoms_checked == 1 + 2 + 4 + 8

    def test_round_trip_random_table(self, rng):
        from factories import random_stochastic, random_table_control
        P0r = random_stochastic(rng, 3)
        ctrl = random_table_control(rng, 3, 4, zero_prob=0.25)
        rep = discrete_round_trip(Distribution.uniform(3), ctrl, P0r, 4)
        assert rep.max_deviation < 1e-10
        assert rep.atoms_checked > 0


class TestHadamard:
    def test_identity(self):
        assert np.all(hadamard_decompose(Q0, Q0).K == 0)

    def test_doubling(self):
        K = hadamard_decompose(validate_generator([[-2, 2], [2, -2]]), Q0).K
        assert np.allclose(K, np.ones((2, 2)), atol=1e-15)

    def test_asymmetric(self):
        K = hadamard_decompose(validate_generator([[-0.5, 0.5], [1, -1]]), Q0).K
        assert np.allclose(K, [[-0.5, -0.5], [0, 0]], atol=1e-15)

    def test_degenerate_reference(self):
        with pytest.raises(DegenerateReference):
            hadamard_decompose(Q0, validate_generator([[0.0, 0.0], [1.0, -1.0]]))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_round_trip_and_row_constraint(self, seed):
        from factories import random_generator
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        q0, qt = random_generator(rng, n), random_generator(rng, n, low=0.0)
        corr = hadamard_decompose(qt, q0)
        assert np.allclose(corr.reconstruct(q0), qt.entries, atol=1e-12, rtol=0)
        assert np.all(np.abs(corr.row_constraint(q0)) < 1e-10)


class TestJumpCoefficients:
    def test_identity_is_zero(self):
        traj = JumpTrajectory(1, ((0.3, 2), (0.6, 1)), 1.0)
        for snap in extract_jump_coefficients(likelihood_ctmc(traj, Q0, None), traj, Q0, None):
            off = np.delete(snap.H, snap.state - 1)
            assert np.all(off == 0)

    def test_example_values(self):
        traj = JumpTrajectory(1, ((0.5, 2),), 1.0)
        Z = likelihood_ctmc(traj, Q0, DOUBLE)
        first, last = extract_jump_coefficients(Z, traj, Q0, DOUBLE)
        assert first.time == 0.5 and first.state == 1
        assert first.H[1] == pytest.approx(math.exp(-0.5), rel=1e-14)
        assert last.time == 1.0 and last.state == 2
        assert last.H[0] == pytest.approx(2 * math.exp(-1), rel=1e-13)
        assert math.isnan(first.H[0])

    def test_consistent_with_hadamard(self, rng):
        from factories import feasible_coefficients, random_generator
        q0 = random_generator(rng, 3)
        c = feasible_coefficients(rng, q0)
        ctrl = ConstantCoefficients(c)
        K = hadamard_decompose(build_quadratic(q0, c), q0).K
        for i in range(20):
            traj = simulate_ctmc(Distribution.uniform(3), q0, None, 2.0, SeededSampler(9, i))
            for snap in extract_jump_coefficients(likelihood_ctmc(traj, q0, ctrl), traj, q0, ctrl):
                row = snap.K_row
                mask = np.arange(3) != snap.state - 1
                assert np.allclose(row[mask], K[snap.state - 1][mask], atol=1e-12, rtol=0)

    def test_undefined_after_zero(self):
        stop = ConstantCoefficients(validate_generator([[-1.0, 1.0], [0.0, 0.0]]))
        traj = JumpTrajectory(1, ((0.2, 2), (0.4, 1)), 1.0)
        Z = likelihood_ctmc(traj, Q0, stop)
        snaps = extract_jump_coefficients(Z, traj, Q0, stop)
        assert snaps[1].K_row is not None
        assert snaps[2].z_left == 0.0 and snaps[2].K_row is None
