import math

import numpy as np
import pytest

from markov_girsanov.core import (
    Distribution,
    JumpTrajectory,
    transition_matrix,
    validate_generator,
    validate_stochastic,
)
from markov_girsanov.errors import TimeOutOfRange
from markov_girsanov.oracle import enumerate_paths
from markov_girsanov.quadratic import QuadraticCoefficients
from markov_girsanov.simulate import (
    ConstantCoefficients,
    ConstantControl,
    JumpHistory,
    JumpStateTable,
    SeededSampler,
    StepStateTable,
    _draw,
    count_jumps,
    run_samples,
    simulate_ctmc,
    simulate_discrete,
)

UNIFORM2 = validate_stochastic([[0.5, 0.5], [0.5, 0.5]], require_positive=True)
Q0 = validate_generator([[-1.0, 1.0], [1.0, -1.0]], require_positive_offdiag=True)


class TestDraw:
    def test_boundary_goes_to_smaller_index(self):
        assert _draw(np.array([0.5, 0.5]), 0.5) == 0
        assert _draw(np.array([0.5, 0.5]), 0.50001) == 1

    def test_zero_weights_skipped(self):
        assert _draw(np.array([0.0, 1.0]), 0.0) == 1
        assert _draw(np.array([1.0, 0.0]), 0.999999) == 0
        assert _draw(np.array([0.2, 0.0, 0.8]), 0.2) == 0
        assert _draw(np.array([0.2, 0.0, 0.8]), 0.21) == 2


def test_sampler_is_counter_based():
    a = SeededSampler(7, 3).generator().random(5)
    b = SeededSampler(7, 3).generator().random(5)
    c = SeededSampler(7, 4).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


class TestSimulateDiscrete:
    def test_zero_steps(self):
        nu = Distribution([0.3, 0.7])
        path = simulate_discrete(nu, ConstantControl(UNIFORM2), 0, SeededSampler(1))
        assert len(path) == 1

    def test_deterministic_alternation(self):
        flip = ConstantControl(validate_stochastic([[0, 1], [1, 0]]))
        nu = Distribution.point_mass(1, 2)
        for i in range(20):
            assert simulate_discrete(nu, flip, 3, SeededSampler(5, i)).states == (1, 2, 1, 2)

    def test_history_control_sees_prefix(self):
        seen = []

        def ctrl(k, history):
            seen.append((k, history))
            return UNIFORM2

        path = simulate_discrete(Distribution([0.5, 0.5]), ctrl, 3, SeededSampler(2))
        assert [k for k, _ in seen] == [1, 2, 3]
        assert all(h == path.states[:k] for k, h in seen)

    def test_uniform_marginal(self):
        nu = Distribution([0.5, 0.5])
        n_samples = 100_000
        exact = sum(p for path, p in enumerate_paths(nu, ConstantControl(UNIFORM2), 5) if path.terminal == 1)
        assert exact == pytest.approx(0.5, abs=1e-15)
        hits = run_samples(lambda s: simulate_discrete(nu, ConstantControl(UNIFORM2), 5, s).terminal == 1,
                           n_samples, 99)
        freq = np.mean(hits)
        assert abs(freq - exact) <= 3 * math.sqrt(0.25 / n_samples)

    def test_marginals_match_enumeration(self, rng):
        from factories import random_distribution, random_stochastic
        N, n, n_samples = 4, 6, 100_000
        nu = random_distribution(rng, N)
        ctrl = ConstantControl(random_stochastic(rng, N, positive=False, zero_prob=0.3))
        exact = np.zeros(N)
        for path, p in enumerate_paths(nu, ctrl, n):
            exact[path.terminal - 1] += p
        term = np.array(run_samples(lambda s: simulate_discrete(nu, ctrl, n, s).terminal, n_samples, 4))
        freq = np.bincount(term - 1, minlength=N) / n_samples
        se = np.sqrt(exact * (1 - exact) / n_samples)
        assert np.all(np.abs(freq - exact) <= 4 * se + 1e-12)

    def test_table_control_lookup(self):
        A = validate_stochastic([[1, 0], [0, 1]])
        B = validate_stochastic([[0, 1], [1, 0]])
        C = UNIFORM2
        t = StepStateTable({(2, 1): A, (3, None): B, (None, 2): C}, UNIFORM2)
        assert t(2, (2, 1)) is A
        assert t(3, (1, 2, 1)) is B
        assert t(1, (2,)) is C
        assert t(1, (1,)) is UNIFORM2


class TestSimulateCtmc:
    def test_expected_jump_count(self):
        nu = Distribution.point_mass(1, 2)
        n_samples = 100_000
        counts = np.array(run_samples(lambda s: simulate_ctmc(nu, Q0, None, 1.0, s).n_jumps, n_samples, 17))
        # unit exit rate everywhere: jumps form a rate-1 Poisson clock
        assert abs(counts.mean() - 1.0) <= 3 * counts.std(ddof=1) / math.sqrt(n_samples)

    def test_zero_generator_never_jumps(self):
        Z = validate_generator(np.zeros((3, 3)))
        nu = Distribution([0.2, 0.3, 0.5])
        for i in range(50):
            assert simulate_ctmc(nu, Z, None, 10.0, SeededSampler(3, i)).n_jumps == 0

    def test_controlled_target_marginal(self):
        nu = Distribution.point_mass(1, 2)
        ctrl = ConstantCoefficients(QuadraticCoefficients([1, 1], [2, 2]))
        n_samples = 100_000
        stay = np.array(run_samples(lambda s: simulate_ctmc(nu, Q0, ctrl, 1.0, s).terminal_state == 1,
                                    n_samples, 23), dtype=float)
        exact = (1 + math.exp(-4)) / 2
        assert exact == pytest.approx(transition_matrix(validate_generator([[-2, 2], [2, -2]]), 1.0).entries[0, 0],
                                      abs=1e-14)
        assert abs(stay.mean() - exact) <= 3 * math.sqrt(exact * (1 - exact) / n_samples)

    def test_stationary_marginals(self, rng):
        from factories import random_distribution, random_generator
        q = random_generator(rng, 3)
        nu = random_distribution(rng, 3)
        T, n_samples = 0.8, 100_000
        exact = nu.probs @ transition_matrix(q, T).entries
        term = np.array(run_samples(lambda s: simulate_ctmc(nu, q, None, T, s).terminal_state, n_samples, 8))
        freq = np.bincount(term - 1, minlength=3) / n_samples
        assert np.all(np.abs(freq - exact) <= 4 * np.sqrt(exact * (1 - exact) / n_samples))

    def test_control_reevaluated_after_each_jump(self):
        calls = []
        slow = QuadraticCoefficients([0, 0], [0.5, 0.5])

        def ctrl(history: JumpHistory):
            calls.append(history)
            return slow

        traj = simulate_ctmc(Distribution.point_mass(1, 2), Q0, ctrl, 5.0, SeededSampler(1))
        assert len(calls) == traj.n_jumps + 1
        for k, h in enumerate(calls):
            assert h.jumps == traj.jumps[:k]

    def test_jump_table(self):
        a = QuadraticCoefficients([0, 0], [2, 2])
        b = QuadraticCoefficients([0, 0], [3, 3])
        t = JumpStateTable({(0, None): a}, b)
        assert t(JumpHistory(1, ())) is a
        assert t(JumpHistory(1, ((0.1, 2),))) is b

    def test_trajectories_valid(self, rng):
        from factories import feasible_coefficients, random_generator
        q0 = random_generator(rng, 4)
        ctrl = ConstantCoefficients(feasible_coefficients(rng, q0))
        nu = Distribution.uniform(4)
        for i in range(200):
            traj = simulate_ctmc(nu, q0, ctrl, 2.0, SeededSampler(4, i))
            JumpTrajectory(traj.initial_state, traj.jumps, traj.horizon, n_states=4)


def test_reproducible_regardless_of_order_and_threads():
    nu = Distribution.uniform(2)

    def one(s):
        return simulate_ctmc(nu, Q0, None, 3.0, s).jumps

    forward = run_samples(one, 300, 42)
    threaded = run_samples(one, 300, 42, workers=4)
    backward = [one(SeededSampler(42, i)) for i in reversed(range(300))][::-1]
    assert forward == threaded == backward


class TestCountJumps:
    traj = JumpTrajectory(1, ((0.3, 2), (0.7, 1)), 1.0)

    def test_empty(self):
        empty = JumpTrajectory(1, (), 1.0)
        assert all(count_jumps(empty, j, s) == 0 for j in (1, 2) for s in (0.0, 0.5, 1.0))

    def test_counts(self):
        assert count_jumps(self.traj, 2, 0.5) == 1
        assert count_jumps(self.traj, 1, 0.5) == 0
        assert count_jumps(self.traj, 1, 1.0) == 1
        assert count_jumps(self.traj, 2, 0.3) == 1

    def test_out_of_range(self):
        with pytest.raises(TimeOutOfRange):
            count_jumps(self.traj, 1, 1.5)
