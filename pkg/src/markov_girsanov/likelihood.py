"""Likelihood-ratio processes along realized paths, and reweighted estimators.

Discrete time:   log Z_n = sum_k [log P_k(X_{k-1}, X_k) - log P_0(X_{k-1}, X_k)]

Continuous time: log Z_t = sum over jumps s <= t into j of log(q_s(X_{s-}, j) / q0(X_{s-}, j))
                           - int_0^t sum_{j != X_s} (q_s(X_s, j) - q0(X_s, j)) ds

Everything is accumulated in log space. A realized transition the target law
cannot make gives ``log Z = -inf`` with ``zero_hit`` set, not an exception,
unless ``strict=True`` is passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DiscretePath,
    Distribution,
    GeneratorMatrix,
    JumpTrajectory,
    StochasticMatrix,
)
from .errors import (
    DimensionMismatch,
    TimeOutOfRange,
    ValidationError,
    ZeroTargetProbability,
    ZeroTargetRate,
)
from .simulate import (
    ConstantControl,
    ContinuousControl,
    DiscreteControl,
    JumpHistory,
    RateResolver,
    SeededSampler,
    run_samples,
    simulate_ctmc,
    simulate_discrete,
)


@dataclass(frozen=True, eq=False)
class LikelihoodProcess:
    """log Z at each evaluation time.

    ``times`` are step indices (discrete) or ``0``, every jump epoch and the
    horizon (continuous). ``log_left`` holds the left limits log Z_{t-} at the
    same times; in discrete time it is just the previous value.
    """

    times: np.ndarray
    log_values: np.ndarray
    log_left: np.ndarray
    zero_hit: bool = False

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def terminal_log(self) -> float:
        return float(self.log_values[-1])

    @property
    def terminal(self) -> float:
        return math.exp(self.terminal_log)

    def log_at(self, t: float) -> float:
        """Right-continuous log Z at time (or step) ``t``."""
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        if idx < 0:
            raise TimeOutOfRange(f"t={t} precedes the process start")
        return float(self.log_values[idx])


def _safe_log_ratio(num: float, den: float) -> float:
    if num <= 0.0:
        return -math.inf
    return math.log(num) - math.log(den)


def likelihood_discrete(path: DiscretePath, P0: StochasticMatrix, ctrl: DiscreteControl,
                        strict: bool = False) -> LikelihoodProcess:
    if not P0.strictly_positive:
        raise ValidationError("the reference transition matrix must be strictly positive")
    x = path.states
    if max(x) > P0.n_states:
        raise DimensionMismatch(f"path visits state {max(x)} but the reference has {P0.n_states}")
    logs = np.zeros(len(x))
    acc = 0.0
    zero_hit = False
    for k in range(1, len(x)):
        i, j = x[k - 1], x[k]
        Pk = ctrl(k, x[:k])
        if Pk.n_states != P0.n_states:
            raise DimensionMismatch(f"control matrix at step {k} has {Pk.n_states} states")
        step = _safe_log_ratio(Pk.entries[i - 1, j - 1], P0.entries[i - 1, j - 1])
        if step == -math.inf:
            if strict:
                raise ZeroTargetProbability(f"step {k}: transition {i}->{j} has zero target probability")
            zero_hit = True
        acc += step
        logs[k] = acc
    left = np.concatenate(([0.0], logs[:-1]))
    return LikelihoodProcess(np.arange(len(x), dtype=float), logs, left, zero_hit)


def _walk_ctmc(traj: JumpTrajectory, q0: GeneratorMatrix, rates: RateResolver, t_end: float):
    """Yield ``(start, end, state, Q, jump_target_or_None)`` per holding interval up to ``t_end``.

    ``Q`` is the target generator in force on the interval, evaluated on the
    history strictly before the interval's closing jump.
    """
    history: list = []
    start, state = 0.0, traj.initial_state
    for tau, target in traj.jumps:
        if tau > t_end:
            break
        Q = rates(JumpHistory(traj.initial_state, tuple(history)))
        yield start, tau, state, Q, target
        history.append((tau, target))
        start, state = tau, target
    Q = rates(JumpHistory(traj.initial_state, tuple(history)))
    yield start, t_end, state, Q, None


def _check_ctmc_inputs(traj: JumpTrajectory, q0: GeneratorMatrix):
    if not q0.strictly_positive_offdiag:
        raise ValidationError("the reference generator must have strictly positive off-diagonal rates")
    states = [traj.initial_state] + [j for _, j in traj.jumps]
    if max(states) > q0.n_states:
        raise DimensionMismatch(f"trajectory visits state {max(states)} but the reference has {q0.n_states}")


def likelihood_ctmc(traj: JumpTrajectory, q0: GeneratorMatrix, ctrl: ContinuousControl | None,
                    strict: bool = False, resolver: RateResolver | None = None) -> LikelihoodProcess:
    _check_ctmc_inputs(traj, q0)
    rates = resolver or RateResolver(q0, ctrl)
    q0e = q0.entries
    times, logs, left = [0.0], [0.0], [0.0]
    acc = 0.0
    zero_hit = False
    for start, end, i, Q, target in _walk_ctmc(traj, q0, rates, traj.horizon):
        qe = Q.entries
        # sum_{j != i} (q(i,j) - q0(i,j)) = q0(i,i) - q(i,i) by zero row sums
        acc -= (end - start) * (q0e[i - 1, i - 1] - qe[i - 1, i - 1])
        if target is None:
            if end > times[-1]:
                times.append(end)
                logs.append(acc)
                left.append(acc)
            break
        left_val = acc
        step = _safe_log_ratio(qe[i - 1, target - 1], q0e[i - 1, target - 1])
        if step == -math.inf:
            if strict:
                raise ZeroTargetRate(f"jump {i}->{target} at t={end} has zero target rate")
            zero_hit = True
        acc += step
        times.append(end)
        logs.append(acc)
        left.append(left_val)
    return LikelihoodProcess(np.array(times), np.array(logs), np.array(left), zero_hit)


def compensated_log_integral(traj: JumpTrajectory, q0: GeneratorMatrix, ctrl: ContinuousControl | None,
                             t: float, resolver: RateResolver | None = None) -> float:
    """U_t = sum_jumps log r - int_0^t sum_{j != X_s} q0(X_s, j) log r(s, j) ds with r = q_s / q0."""
    _check_ctmc_inputs(traj, q0)
    if not 0 <= t <= traj.horizon:
        raise TimeOutOfRange(f"t={t} outside [0, {traj.horizon}]")
    rates = resolver or RateResolver(q0, ctrl)
    q0e = q0.entries
    n = q0.n_states
    total = 0.0
    for start, end, i, Q, target in _walk_ctmc(traj, q0, rates, t):
        qrow, q0row = Q.entries[i - 1], q0e[i - 1]
        comp = 0.0
        for j in range(n):
            if j == i - 1:
                continue
            comp += q0row[j] * _safe_log_ratio(qrow[j], q0row[j])
        if end > start:
            total -= (end - start) * comp
        if target is not None:
            total += _safe_log_ratio(qrow[target - 1], q0row[target - 1])
    return total


@dataclass(frozen=True)
class Estimate:
    estimate: float
    std_error: float
    n_samples: int
    weights_mean: float = field(default=float("nan"))

    def __iter__(self):
        return iter((self.estimate, self.std_error))


def _summarize(values: np.ndarray, weights: np.ndarray | None = None) -> Estimate:
    n = values.size
    if n < 2:
        raise ValidationError("at least 2 samples are needed for a standard error")
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n))
    wm = float(weights.mean()) if weights is not None else float("nan")
    return Estimate(mean, se, n, wm)


def _payoff(f, n_states: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (n_states,):
        raise DimensionMismatch(f"payoff has shape {f.shape}, expected ({n_states},)")
    return f


def weighted_terminal_samples(nu: Distribution, reference, ctrl, horizon, n_samples: int,
                              master_seed: int, workers: int = 1,
                              claimed_reference=None) -> tuple[np.ndarray, np.ndarray]:
    """Sample under the reference law; return terminal states and terminal log Z per sample.

    ``reference`` is a :class:`StochasticMatrix` (horizon = number of steps)
    or a :class:`GeneratorMatrix` (horizon = time). ``claimed_reference``, if
    given, is the reference handed to the likelihood instead of the one
    actually sampled from.
    """
    claimed = reference if claimed_reference is None else claimed_reference
    if isinstance(reference, StochasticMatrix):
        ref_ctrl = ConstantControl(reference)
        n_steps = int(horizon)
        if n_steps != horizon:
            raise ValidationError(f"discrete horizon must be an integer, got {horizon}")

        def one(s: SeededSampler):
            path = simulate_discrete(nu, ref_ctrl, n_steps, s)
            return path.terminal, likelihood_discrete(path, claimed, ctrl).terminal_log
    elif isinstance(reference, GeneratorMatrix):
        ref_rates = RateResolver(reference, None)
        tgt_rates = RateResolver(claimed, ctrl)

        def one(s: SeededSampler):
            traj = simulate_ctmc(nu, reference, None, float(horizon), s, resolver=ref_rates)
            lz = likelihood_ctmc(traj, claimed, ctrl, resolver=tgt_rates).terminal_log
            return traj.terminal_state, lz
    else:
        raise ValidationError("reference must be a StochasticMatrix or a GeneratorMatrix")
    out = run_samples(one, n_samples, master_seed, workers)
    states = np.fromiter((o[0] for o in out), dtype=int, count=len(out))
    logz = np.fromiter((o[1] for o in out), dtype=float, count=len(out))
    return states, logz


def importance_estimate(f, nu: Distribution, reference, ctrl, horizon, n_samples: int,
                        master_seed: int, workers: int = 1, claimed_reference=None) -> Estimate:
    """Estimate E_P[f(X_T)] as the sample mean of Z_T f(X_T) under the reference law."""
    f = _payoff(f, nu.n_states)
    if n_samples < 2:
        raise ValidationError("at least 2 samples are needed for a standard error")
    states, logz = weighted_terminal_samples(nu, reference, ctrl, horizon, n_samples, master_seed,
                                             workers, claimed_reference)
    z = np.exp(logz)
    return _summarize(z * f[states - 1], z)


def direct_estimate(f, nu: Distribution, reference, ctrl, horizon, n_samples: int,
                    master_seed: int, workers: int = 1) -> Estimate:
    """Plain Monte Carlo of E[f(X_T)] sampling the controlled law itself (no reweighting)."""
    f = _payoff(f, nu.n_states)
    if isinstance(reference, StochasticMatrix):
        law = ctrl if ctrl is not None else ConstantControl(reference)

        def one(s):
            return simulate_discrete(nu, law, int(horizon), s).terminal
    else:
        rates = RateResolver(reference, ctrl)

        def one(s):
            return simulate_ctmc(nu, reference, ctrl, float(horizon), s, resolver=rates).terminal_state
    states = np.array(run_samples(one, n_samples, master_seed, workers), dtype=int)
    return _summarize(f[states - 1])
