"""Validated matrix, distribution and path types plus generator algebra.

States are labelled ``1..N`` everywhere a state index crosses an API
boundary (paths, trajectories, control histories, CLI files). Matrices and
vectors are ordinary zero-based numpy arrays, so row ``i - 1`` of a matrix
belongs to state ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    InvalidPath,
    NegativeEntry,
    NegativeOffDiagonal,
    NotSquare,
    RowSumNotOne,
    RowSumNotZero,
    TimeOutOfRange,
    ValidationError,
    ZeroEntryWhenPositivityRequired,
    ZeroOffDiagonalWhenPositivityRequired,
)

INPUT_TOL = 1e-12
COMPUTED_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _square(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValidationError("state space needs at least 2 states")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    return arr


@dataclass(frozen=True)
class StateSpace:
    n_states: int

    def __post_init__(self):
        if int(self.n_states) != self.n_states or self.n_states < 2:
            raise ValidationError(f"n_states must be an integer >= 2, got {self.n_states}")

    @property
    def labels(self) -> range:
        return range(1, self.n_states + 1)


@dataclass(frozen=True)
class Distribution:
    probs: np.ndarray

    def __init__(self, probs, tol: float = INPUT_TOL):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise InvalidDistribution("distribution must be a vector of length >= 2")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidDistribution("distribution entries must be finite and >= 0")
        if abs(p.sum() - 1.0) > tol:
            raise InvalidDistribution(f"distribution sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p))

    @classmethod
    def point_mass(cls, state: int, n_states: int) -> "Distribution":
        if not 1 <= state <= n_states:
            raise InvalidDistribution(f"state {state} outside 1..{n_states}")
        p = np.zeros(n_states)
        p[state - 1] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, n_states: int) -> "Distribution":
        return cls(np.full(n_states, 1.0 / n_states))

    @property
    def n_states(self) -> int:
        return self.probs.size

    def __getitem__(self, state: int) -> float:
        return float(self.probs[state - 1])


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Row-stochastic transition matrix. Build through :func:`validate_stochastic`."""

    entries: np.ndarray
    strictly_positive: bool = False

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    def prob(self, i: int, j: int) -> float:
        """Transition probability from state ``i`` to ``j`` (1-based)."""
        return float(self.entries[i - 1, j - 1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Rate matrix with zero row sums. Build through :func:`validate_generator`."""

    entries: np.ndarray
    strictly_positive_offdiag: bool = False

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    def rate(self, i: int, j: int) -> float:
        return float(self.entries[i - 1, j - 1])

    def exit_rate(self, i: int) -> float:
        return -float(self.entries[i - 1, i - 1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def validate_stochastic(entries, require_positive: bool = False,
                        tol: float = INPUT_TOL) -> StochasticMatrix:
    if isinstance(entries, StochasticMatrix):
        entries = entries.entries
    m = _square(entries)
    neg = np.argwhere(m < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntry(f"entry ({i + 1},{j + 1}) = {m[i, j]!r} is negative")
    sums = m.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        i = bad[0]
        raise RowSumNotOne(f"row {i + 1} sums to {sums[i]!r}, not 1")
    strictly = bool(np.all(m > 0))
    if require_positive and not strictly:
        i, j = np.argwhere(m <= 0)[0]
        raise ZeroEntryWhenPositivityRequired(
            f"entry ({i + 1},{j + 1}) is zero but a strictly positive matrix is required")
    return StochasticMatrix(_frozen(m), strictly)


def validate_generator(entries, require_positive_offdiag: bool = False,
                       tol: float = INPUT_TOL) -> GeneratorMatrix:
    if isinstance(entries, GeneratorMatrix):
        entries = entries.entries
    m = _square(entries)
    off = ~np.eye(m.shape[0], dtype=bool)
    neg = np.argwhere((m < 0) & off)
    if neg.size:
        i, j = neg[0]
        raise NegativeOffDiagonal(f"off-diagonal ({i + 1},{j + 1}) = {m[i, j]!r} is negative")
    sums = m.sum(axis=1)
    # scale-aware: a row with large rates accumulates proportionally more rounding
    scale = np.maximum(1.0, np.abs(m).sum(axis=1))
    bad = np.flatnonzero(np.abs(sums) > tol * scale)
    if bad.size:
        i = bad[0]
        raise RowSumNotZero(f"row {i + 1} sums to {sums[i]!r}, not 0")
    strictly = bool(np.all(m[off] > 0))
    if require_positive_offdiag and not strictly:
        i, j = np.argwhere((m <= 0) & off)[0]
        raise ZeroOffDiagonalWhenPositivityRequired(
            f"off-diagonal ({i + 1},{j + 1}) is zero but strictly positive rates are required")
    return GeneratorMatrix(_frozen(m), strictly)


def apply_generator(Q: GeneratorMatrix, f) -> np.ndarray:
    """Return ``(Qf)(i) = sum_j Q(i, j) f(j)`` for every state."""
    f = np.asarray(f, dtype=float)
    if f.shape != (Q.n_states,):
        raise DimensionMismatch(f"f has shape {f.shape}, expected ({Q.n_states},)")
    return Q.entries @ f


def _expm_nonnegative(A: np.ndarray, shift: float) -> np.ndarray:
    """exp(A) * exp(-shift) for an entrywise nonnegative matrix ``A``.

    Scaling and squaring on the Taylor series. Every term is nonnegative, so
    nothing cancels; the factor exp(-shift) is applied at the scaled level so
    it never underflows on its own.
    """
    n = A.shape[0]
    norm = np.abs(A).sum(axis=1).max()
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    B = A / 2.0 ** s
    bnorm = norm / 2.0 ** s
    result = np.eye(n)
    term = np.eye(n)
    k = 0
    while True:
        k += 1
        term = term @ B / k
        result = result + term
        # tail after term k is bounded by ||B||^(k+1)/(k+1)! / (1 - ||B||/(k+2));
        # held well under 1e-13 since squaring amplifies it by up to 2^s
        tail = bnorm ** (k + 1) / math.factorial(k + 1) / (1.0 - bnorm / (k + 2))
        if tail < 1e-17 or k >= 30:
            break
    result *= math.exp(-shift / 2.0 ** s)
    for _ in range(s):
        result = result @ result
    return result


def transition_matrix(Q: GeneratorMatrix, h: float) -> StochasticMatrix:
    """Transition probabilities ``exp(hQ)`` over an interval of length ``h``."""
    if h < 0 or not math.isfinite(h):
        raise TimeOutOfRange(f"h must be finite and >= 0, got {h}")
    n = Q.n_states
    if h == 0:
        return validate_stochastic(np.eye(n))
    lam = float(np.max(-np.diag(Q.entries)))
    # Q + lam*I is nonnegative, which keeps the series free of cancellation
    P = _expm_nonnegative(h * (Q.entries + lam * np.eye(n)), h * lam)
    return validate_stochastic(P, tol=COMPUTED_TOL)


@dataclass(frozen=True)
class DiscretePath:
    states: tuple[int, ...]

    def __init__(self, states: Sequence[int], n_states: int | None = None):
        st = tuple(int(x) for x in states)
        if not st:
            raise InvalidPath("a path needs at least the initial state")
        if min(st) < 1 or (n_states is not None and max(st) > n_states):
            raise InvalidPath(f"path {st} has states outside 1..{n_states}")
        object.__setattr__(self, "states", st)

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1

    @property
    def terminal(self) -> int:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, k):
        return self.states[k]


@dataclass(frozen=True)
class JumpTrajectory:
    """Piecewise-constant path: initial state plus sorted ``(time, target)`` jumps on ``(0, T]``."""

    initial_state: int
    jumps: tuple[tuple[float, int], ...]
    horizon: float
    n_states: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidPath(f"horizon must be positive, got {self.horizon}")
        jumps = tuple((float(t), int(j)) for t, j in self.jumps)
        object.__setattr__(self, "jumps", jumps)
        top = self.n_states
        if self.initial_state < 1 or (top is not None and self.initial_state > top):
            raise InvalidPath(f"initial state {self.initial_state} out of range")
        prev_t, prev_state = 0.0, self.initial_state
        for t, j in jumps:
            if not prev_t < t <= self.horizon:
                raise InvalidPath(f"jump time {t} not strictly increasing within (0, {self.horizon}]")
            if j == prev_state:
                raise InvalidPath(f"jump at {t} targets the state it leaves ({j})")
            if j < 1 or (top is not None and j > top):
                raise InvalidPath(f"jump target {j} out of range")
            prev_t, prev_state = t, j

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def terminal_state(self) -> int:
        return self.jumps[-1][1] if self.jumps else self.initial_state

    def state_at(self, t: float) -> int:
        """Right-continuous state at time ``t``."""
        if not 0 <= t <= self.horizon:
            raise TimeOutOfRange(f"t={t} outside [0, {self.horizon}]")
        state = self.initial_state
        for s, j in self.jumps:
            if s > t:
                break
            state = j
        return state

    def segments(self, t: float | None = None):
        """Yield ``(start, end, state)`` holding intervals covering ``[0, t]``."""
        end_time = self.horizon if t is None else t
        start, state = 0.0, self.initial_state
        for s, j in self.jumps:
            if s > end_time:
                break
            yield start, s, state
            start, state = s, j
        yield start, end_time, state
