"""Quadratic generator family built from a reference generator.

For per-state coefficients ``a`` and ``b`` the family is

    q(i, j) = a_i q0(i, j)^2 + b_i q0(i, j) - (a_i / N) S_i,   S_i = sum_k q0(i, k)^2

applied to every entry, diagonal included. Because ``sum_j q0(i, j) = 0`` and
``sum_j q0(i, j)^2 = S_i`` the rows of ``q`` sum to zero for any ``a, b``; only
nonnegativity of the off-diagonal rates can fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import INPUT_TOL, GeneratorMatrix, validate_generator
from .errors import DimensionMismatch, InfeasibleCoefficients, ValidationError


@dataclass(frozen=True, eq=False)
class QuadraticCoefficients:
    a: np.ndarray
    b: np.ndarray

    def __init__(self, a, b):
        a = np.array(a, dtype=float)
        b = np.array(b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise DimensionMismatch(f"a and b must be equal-length vectors, got {a.shape} and {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n_states: int) -> "QuadraticCoefficients":
        """Coefficients (a, b) = (0, 1), which reproduce the reference generator."""
        return cls(np.zeros(n_states), np.ones(n_states))

    def key(self) -> bytes:
        return self.a.tobytes() + self.b.tobytes()

    def __eq__(self, other):
        if not isinstance(other, QuadraticCoefficients):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash(self.key())


def quadratic_rates(q0: GeneratorMatrix, c: QuadraticCoefficients) -> np.ndarray:
    """Raw family matrix, without checking that it is a generator."""
    q = q0.entries
    n = q.shape[0]
    if c.a.shape != (n,):
        raise DimensionMismatch(f"coefficients have length {c.a.size}, reference has {n} states")
    s = (q * q).sum(axis=1)
    a = c.a[:, None]
    return a * q * q + c.b[:, None] * q - (a / n) * s[:, None]


def feasibility_margin(q0: GeneratorMatrix, c: QuadraticCoefficients) -> float:
    """Smallest off-diagonal rate of the family member; feasible iff >= 0."""
    q = quadratic_rates(q0, c)
    off = ~np.eye(q.shape[0], dtype=bool)
    return float(q[off].min())


def build_quadratic(q0: GeneratorMatrix, c: QuadraticCoefficients,
                    tol: float = INPUT_TOL) -> GeneratorMatrix:
    q = quadratic_rates(q0, c)
    off = ~np.eye(q.shape[0], dtype=bool)
    if np.any(q[off] < 0):
        i, j = np.argwhere((q < 0) & off)[0]
        raise InfeasibleCoefficients(
            f"rate ({i + 1},{j + 1}) = {q[i, j]!r} is negative for a={c.a.tolist()}, b={c.b.tolist()}")
    return validate_generator(q, tol=tol)
