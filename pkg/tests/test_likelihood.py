import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markov_girsanov.core import DiscretePath, Distribution, JumpTrajectory, validate_generator, validate_stochastic
from markov_girsanov.errors import ValidationError, ZeroTargetProbability, ZeroTargetRate
from markov_girsanov.likelihood import (
    compensated_log_integral,
    direct_estimate,
    importance_estimate,
    likelihood_ctmc,
    likelihood_discrete,
)
from markov_girsanov.oracle import enumerate_paths, exact_expectation
from markov_girsanov.quadratic import QuadraticCoefficients, build_quadratic
from markov_girsanov.simulate import ConstantCoefficients, ConstantControl, SeededSampler, simulate_ctmc

P0 = validate_stochastic([[0.5, 0.5], [0.5, 0.5]], require_positive=True)
P1 = validate_stochastic([[0.7, 0.3], [0.6, 0.4]])
Q0 = validate_generator([[-1.0, 1.0], [1.0, -1.0]], require_positive_offdiag=True)
Q2 = validate_generator([[-2.0, 2.0], [2.0, -2.0]])
DOUBLE = ConstantCoefficients(QuadraticCoefficients([1, 1], [2, 2]))


class TestDiscrete:
    def test_identity_control(self):
        lp = likelihood_discrete(DiscretePath([1, 2, 2, 1]), P0, ConstantControl(P0))
        assert np.all(lp.log_values == 0.0)

    def test_one_and_two_steps(self):
        ctrl = ConstantControl(P1)
        assert likelihood_discrete(DiscretePath([1, 2]), P0, ctrl).terminal == pytest.approx(0.6, rel=1e-14)
        lp = likelihood_discrete(DiscretePath([1, 2, 1]), P0, ctrl)
        assert lp.terminal == pytest.approx(0.72, rel=1e-14)
        assert lp.log_left[2] == pytest.approx(math.log(0.6), rel=1e-14)

    def test_recursion(self, rng):
        from factories import random_stochastic, random_table_control
        N, n = 3, 6
        P0r = random_stochastic(rng, N)
        ctrl = random_table_control(rng, N, n)
        path = DiscretePath(list(rng.integers(1, N + 1, size=n + 1)))
        lp = likelihood_discrete(path, P0r, ctrl)
        for k in range(1, n + 1):
            i, j = path.states[k - 1], path.states[k]
            p = ctrl(k, path.states[:k]).entries[i - 1, j - 1]
            expected = lp.values[k - 1] * p / P0r.entries[i - 1, j - 1]
            assert lp.values[k] == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_zero_probability_flagged(self):
        flip = ConstantControl(validate_stochastic([[0, 1], [1, 0]]))
        lp = likelihood_discrete(DiscretePath([1, 1]), P0, flip)
        assert lp.zero_hit and lp.terminal == 0.0
        with pytest.raises(ZeroTargetProbability):
            likelihood_discrete(DiscretePath([1, 1]), P0, flip, strict=True)

    def test_reference_must_be_positive(self):
        with pytest.raises(ValidationError):
            likelihood_discrete(DiscretePath([1, 2]), validate_stochastic([[1.0, 0.0], [0.5, 0.5]]),
                                ConstantControl(P1))

    def test_mean_one_under_reference(self, rng):
        from factories import random_stochastic, random_table_control
        P0r = random_stochastic(rng, 3)
        ctrl = random_table_control(rng, 3, 4, zero_prob=0.2)
        paths = enumerate_paths(Distribution.uniform(3), ConstantControl(P0r), 4)
        mean = exact_expectation(paths, lambda p: likelihood_discrete(p, P0r, ctrl).terminal)
        assert mean == pytest.approx(1.0, abs=1e-12)


class TestCtmc:
    def test_identity_control(self):
        traj = JumpTrajectory(1, ((0.2, 2), (0.9, 1)), 1.5)
        lp = likelihood_ctmc(traj, Q0, None)
        assert np.all(lp.log_values == 0.0)
        lp = likelihood_ctmc(traj, Q0, ConstantCoefficients(QuadraticCoefficients.identity(2)))
        assert np.all(np.abs(lp.log_values) < 1e-15)

    def test_single_jump(self):
        traj = JumpTrajectory(1, ((0.5, 2),), 1.0)
        lp = likelihood_ctmc(traj, Q0, DOUBLE)
        assert lp.terminal == pytest.approx(2 * math.exp(-1), rel=1e-13)
        assert list(lp.times) == [0.0, 0.5, 1.0]
        assert lp.log_left[1] == pytest.approx(-0.5, rel=1e-14)
        assert lp.log_at(0.7) == pytest.approx(math.log(2) - 0.5, rel=1e-14)

    def test_no_jump(self):
        lp = likelihood_ctmc(JumpTrajectory(1, (), 1.0), Q0, DOUBLE)
        assert lp.terminal == pytest.approx(math.exp(-1), rel=1e-14)

    def test_jump_at_horizon_not_duplicated(self):
        lp = likelihood_ctmc(JumpTrajectory(1, ((1.0, 2),), 1.0), Q0, DOUBLE)
        assert list(lp.times) == [0.0, 1.0]
        assert lp.terminal == pytest.approx(2 * math.exp(-1), rel=1e-13)

    def test_zero_rate_flagged(self):
        stop = ConstantCoefficients(validate_generator([[0.0, 0.0], [1.0, -1.0]]))
        traj = JumpTrajectory(1, ((0.5, 2),), 1.0)
        assert likelihood_ctmc(traj, Q0, stop).zero_hit
        with pytest.raises(ZeroTargetRate):
            likelihood_ctmc(traj, Q0, stop, strict=True)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_matches_density_ratio(self, seed):
        # independent recompute: product of jump-density ratios of the two laws
        rng = np.random.default_rng(seed)
        from factories import feasible_coefficients, random_generator
        q0 = random_generator(rng, 3)
        c = feasible_coefficients(rng, q0)
        q = ConstantCoefficients(c)
        qt = build_quadratic(q0, c).entries
        traj = simulate_ctmc(Distribution.uniform(3), q0, None, 1.3, SeededSampler(seed % 1000))
        dens_t = dens_0 = 1.0
        t_prev, state = 0.0, traj.initial_state
        for tau, j in traj.jumps:
            dt = tau - t_prev
            dens_t *= math.exp(qt[state - 1, state - 1] * dt) * qt[state - 1, j - 1]
            dens_0 *= math.exp(q0.entries[state - 1, state - 1] * dt) * q0.entries[state - 1, j - 1]
            t_prev, state = tau, j
        dt = traj.horizon - t_prev
        dens_t *= math.exp(qt[state - 1, state - 1] * dt)
        dens_0 *= math.exp(q0.entries[state - 1, state - 1] * dt)
        assert likelihood_ctmc(traj, q0, q).terminal == pytest.approx(dens_t / dens_0, rel=1e-10)


class TestCompensated:
    def test_identity(self):
        traj = JumpTrajectory(1, ((0.5, 2),), 1.0)
        assert compensated_log_integral(traj, Q0, None, 1.0) == 0.0

    def test_examples(self):
        one = JumpTrajectory(1, ((0.5, 2),), 1.0)
        assert compensated_log_integral(one, Q0, DOUBLE, 1.0) == pytest.approx(0.0, abs=1e-15)
        none = JumpTrajectory(1, (), 1.0)
        assert compensated_log_integral(none, Q0, DOUBLE, 1.0) == pytest.approx(-math.log(2), rel=1e-14)

    def test_partial_time(self):
        one = JumpTrajectory(1, ((0.5, 2),), 1.0)
        assert compensated_log_integral(one, Q0, DOUBLE, 0.25) == pytest.approx(-0.25 * math.log(2), rel=1e-14)


class TestEstimators:
    def test_discrete_against_enumeration(self):
        nu = Distribution.point_mass(1, 2)
        f = [1.0, 0.0]
        exact = exact_expectation(enumerate_paths(nu, ConstantControl(P1), 3), lambda p: float(p.terminal == 1))
        est = importance_estimate(f, nu, P0, ConstantControl(P1), 3, 100_000, 5)
        assert abs(est.estimate - exact) <= 3 * est.std_error

    def test_ctmc_against_semigroup(self):
        nu = Distribution.point_mass(1, 2)
        est, se = importance_estimate([1.0, 0.0], nu, Q0, DOUBLE, 1.0, 100_000, 6)
        assert abs(est - (1 + math.exp(-4)) / 2) <= 3 * se

    def test_identity_control_matches_direct(self):
        nu = Distribution([0.3, 0.7])
        a = importance_estimate([2.0, -1.0], nu, P0, ConstantControl(P0), 4, 20_000, 1)
        b = direct_estimate([2.0, -1.0], nu, P0, ConstantControl(P0), 4, 20_000, 2)
        assert a.weights_mean == 1.0
        assert abs(a.estimate - b.estimate) <= 3 * math.hypot(a.std_error, b.std_error)

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            importance_estimate([1.0, 0.0], Distribution.uniform(2), P0, None, 2, 1, 0)
