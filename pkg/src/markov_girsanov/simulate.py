"""Sampling of controlled discrete chains and jump processes.

Randomness is counter based: sample ``i`` of a run seeded with ``s`` draws
from a Philox stream keyed by ``(s, i)``. A sample therefore never depends on
which other samples were drawn, in what order, or on how many threads ran.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .core import (
    DiscretePath,
    Distribution,
    GeneratorMatrix,
    JumpTrajectory,
    StochasticMatrix,
    validate_stochastic,
)
from .errors import DimensionMismatch, TimeOutOfRange, ValidationError
from .quadratic import QuadraticCoefficients, build_quadratic

_U64 = 2 ** 64


@dataclass(frozen=True)
class SeededSampler:
    master_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < _U64:
            raise ValidationError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if not 0 <= self.sample_index < _U64:
            raise ValidationError(f"sample_index must be a nonnegative 64-bit integer, got {self.sample_index}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.sample_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def at(self, sample_index: int) -> "SeededSampler":
        return SeededSampler(self.master_seed, sample_index)


def run_samples(fn: Callable[[SeededSampler], object], n_samples: int, master_seed: int,
                workers: int = 1) -> list:
    """Evaluate ``fn`` on samplers ``0..n_samples-1``; results come back in index order."""
    samplers = [SeededSampler(master_seed, i) for i in range(n_samples)]
    if workers <= 1 or n_samples < 2:
        return [fn(s) for s in samplers]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, samplers, chunksize=max(1, n_samples // (8 * workers))))


# --- controls -----------------------------------------------------------------

DiscreteControl = Callable[[int, tuple], StochasticMatrix]
"""``ctrl(k, history) -> P_k`` where ``history = (X_0, ..., X_{k-1})``, 1-based states."""


class JumpHistory(NamedTuple):
    """Left-limit information available to a continuous control."""

    initial_state: int
    jumps: tuple

    @property
    def current_state(self) -> int:
        return self.jumps[-1][1] if self.jumps else self.initial_state

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)


ContinuousControl = Callable[[JumpHistory], Union[QuadraticCoefficients, GeneratorMatrix]]


@dataclass(frozen=True)
class ConstantControl:
    """Discrete control returning the same transition matrix at every step."""

    matrix: StochasticMatrix

    def __call__(self, k: int, history: tuple) -> StochasticMatrix:
        return self.matrix


@dataclass(frozen=True)
class StepStateTable:
    """Discrete control looked up by ``(step, last state)``.

    Keys may use ``None`` as a wildcard. Lookup order is exact key, then
    ``(step, None)``, then ``(None, state)``, then the default.
    """

    rules: Mapping[tuple, StochasticMatrix]
    default: StochasticMatrix

    def __call__(self, k: int, history: tuple) -> StochasticMatrix:
        last = history[-1]
        for key in ((k, last), (k, None), (None, last)):
            if key in self.rules:
                return self.rules[key]
        return self.default


@dataclass(frozen=True)
class ConstantCoefficients:
    """Continuous control with fixed quadratic-family coefficients (or a fixed generator)."""

    value: Union[QuadraticCoefficients, GeneratorMatrix]

    def __call__(self, history: JumpHistory):
        return self.value


@dataclass(frozen=True)
class JumpStateTable:
    """Continuous control looked up by ``(jump count, current state)``, wildcards as in :class:`StepStateTable`."""

    rules: Mapping[tuple, Union[QuadraticCoefficients, GeneratorMatrix]]
    default: Union[QuadraticCoefficients, GeneratorMatrix]

    def __call__(self, history: JumpHistory):
        k, s = history.n_jumps, history.current_state
        for key in ((k, s), (k, None), (None, s)):
            if key in self.rules:
                return self.rules[key]
        return self.default


class RateResolver:
    """Turns control output into a generator, caching quadratic builds."""

    def __init__(self, q0: GeneratorMatrix, ctrl: ContinuousControl | None):
        self.q0 = q0
        self.ctrl = ctrl
        self._cache: dict[bytes, GeneratorMatrix] = {}

    def __call__(self, history: JumpHistory) -> GeneratorMatrix:
        if self.ctrl is None:
            return self.q0
        out = self.ctrl(history)
        if isinstance(out, GeneratorMatrix):
            if out.n_states != self.q0.n_states:
                raise DimensionMismatch("control generator does not match the reference size")
            return out
        key = out.key()
        q = self._cache.get(key)
        if q is None:
            q = build_quadratic(self.q0, out)
            self._cache[key] = q
        return q


# --- simulation ---------------------------------------------------------------

def _draw(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw, 0-based; zero-weight states are never selected.

    Returns the first positive-weight state whose cumulative weight reaches
    ``u * total``, so a draw landing on a boundary goes to the smaller index.
    """
    w = weights.tolist()
    target = u * sum(w)
    acc, last = 0.0, -1
    for idx, x in enumerate(w):
        if x > 0:
            acc += x
            last = idx
            if target <= acc:
                return idx
    return last


def simulate_discrete(nu: Distribution, ctrl: DiscreteControl, n: int,
                      sampler: SeededSampler) -> DiscretePath:
    if n < 0:
        raise ValidationError(f"number of steps must be >= 0, got {n}")
    rng = sampler.generator()
    x = _draw(nu.probs, rng.random()) + 1
    states = [x]
    for k in range(1, n + 1):
        P = ctrl(k, tuple(states))
        if P.n_states != nu.n_states:
            raise DimensionMismatch(f"control matrix at step {k} has {P.n_states} states")
        x = _draw(P.entries[x - 1], rng.random()) + 1
        states.append(x)
    return DiscretePath(states)


def simulate_ctmc(nu: Distribution, q0: GeneratorMatrix, ctrl: ContinuousControl | None,
                  T: float, sampler: SeededSampler,
                  resolver: RateResolver | None = None) -> JumpTrajectory:
    """Gillespie simulation with rates frozen between jumps.

    With ``ctrl=None`` the path follows the reference generator ``q0``.
    """
    if not T > 0:
        raise TimeOutOfRange(f"horizon must be positive, got {T}")
    rates = resolver or RateResolver(q0, ctrl)
    rng = sampler.generator()
    state = _draw(nu.probs, rng.random()) + 1
    initial = state
    jumps: list[tuple[float, int]] = []
    t = 0.0
    while True:
        Q = rates(JumpHistory(initial, tuple(jumps))).entries
        row = Q[state - 1]
        total = -row[state - 1]
        if total <= 0:
            break
        t += rng.standard_exponential() / total
        if t > T:
            break
        w = row.copy()
        w[state - 1] = 0.0
        state = _draw(w, rng.random()) + 1
        jumps.append((t, state))
    return JumpTrajectory(initial, tuple(jumps), T)


def count_jumps(traj: JumpTrajectory, j: int, s: float) -> int:
    """Number of jumps into state ``j`` during ``(0, s]``."""
    if not 0 <= s <= traj.horizon:
        raise TimeOutOfRange(f"s={s} outside [0, {traj.horizon}]")
    return sum(1 for t, target in traj.jumps if t <= s and target == j)


def constant_control(P: StochasticMatrix | Sequence[Sequence[float]]) -> ConstantControl:
    if not isinstance(P, StochasticMatrix):
        P = validate_stochastic(P)
    return ConstantControl(P)
