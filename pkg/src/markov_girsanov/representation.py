"""Martingale-representation coefficients and the transition laws they imply.

Discrete time. On an atom ``{X_{k-1} = i}`` a centred increment ``Y`` is
written as ``Y(k) = sum_j G_j [1{k = j} - P0(i, j)]``. The system has a
one-dimensional null space (adding a constant to every ``G_j`` changes
nothing), which is fixed here by the gauge ``sum_j P0(i, j) G_j = 0``.

Continuous time. A target generator is split as ``q = q0 * (1 + K)``
(entrywise), with the diagonal of ``K`` completed so rows of ``q0 * K``
sum to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import (
    DiscretePath,
    Distribution,
    GeneratorMatrix,
    JumpTrajectory,
    StochasticMatrix,
    validate_stochastic,
)
from .errors import (
    DegenerateReference,
    DimensionMismatch,
    NegativeProbability,
    NotCenteredError,
    ValidationError,
    ZeroLikelihood,
)
from .likelihood import LikelihoodProcess, _walk_ctmc, likelihood_discrete
from .oracle import check_scale
from .simulate import ContinuousControl, DiscreteControl, RateResolver

CANONICAL_GAUGE = "p0-centered"
CENTER_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RepresentationCoefficients:
    G: np.ndarray
    gauge: str = CANONICAL_GAUGE


@dataclass(frozen=True, eq=False)
class HadamardCorrection:
    K: np.ndarray

    def row_constraint(self, q0: GeneratorMatrix) -> np.ndarray:
        """``sum_j q0(i, j) K(i, j)`` per row; zero for a genuine correction."""
        return (q0.entries * self.K).sum(axis=1)

    def reconstruct(self, q0: GeneratorMatrix) -> np.ndarray:
        return q0.entries * (1.0 + self.K)


def delta_basis_system(p0_row) -> np.ndarray:
    """Matrix ``A`` with ``A[k, j] = 1{k = j} - p0_row[j]``, so that ``Y = A @ G``."""
    p = np.asarray(p0_row, dtype=float)
    return np.eye(p.size) - p[None, :]


def delta_basis_decompose(Y, p0_row, tol: float = CENTER_TOL) -> RepresentationCoefficients:
    """Coefficients ``G`` for one atom, in the canonical gauge.

    Solves ``Y = A G`` together with ``p0_row . G = 0``; the solution equals
    ``Y`` itself up to rounding.
    """
    Y = np.asarray(Y, dtype=float)
    p = np.asarray(p0_row, dtype=float)
    if Y.shape != p.shape or Y.ndim != 1:
        raise DimensionMismatch(f"Y has shape {Y.shape}, P0 row has shape {p.shape}")
    mean = float(p @ Y)
    if abs(mean) > tol:
        raise NotCenteredError(f"increment has conditional mean {mean!r} under the reference row")
    A = np.vstack([delta_basis_system(p), p[None, :]])
    rhs = np.concatenate([Y, [0.0]])
    G, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = float(np.max(np.abs(A @ G - rhs)))
    if resid > tol:
        raise NotCenteredError(f"delta-basis system residual {resid!r} exceeds {tol}")
    return RepresentationCoefficients(G)


def _coefficient_rows(G, n: int) -> np.ndarray:
    if isinstance(G, RepresentationCoefficients):
        G = G.G
    if isinstance(G, Mapping):
        rows = np.zeros((n, n))
        for state, coeffs in G.items():
            if isinstance(coeffs, RepresentationCoefficients):
                coeffs = coeffs.G
            rows[state - 1] = coeffs
        return rows
    rows = np.asarray(G, dtype=float)
    if rows.shape != (n, n):
        raise DimensionMismatch(f"coefficients have shape {rows.shape}, expected ({n}, {n})")
    return rows


def recover_transition(Z_prev: float, G, P0: StochasticMatrix,
                       tol: float = 1e-12) -> StochasticMatrix:
    """Rebuild ``P_k(i, j) = P0(i, j) (1 + (G_ij - sum_l G_il P0(i, l)) / Z_prev)``.

    ``G`` is an N x N array of per-atom coefficient rows, or a mapping from
    1-based state to a row; rows not supplied get no correction.
    """
    if not Z_prev > 0:
        raise ZeroLikelihood(f"previous likelihood {Z_prev!r} must be positive")
    P0e = P0.entries
    rows = _coefficient_rows(G, P0.n_states)
    centred = rows - (rows * P0e).sum(axis=1, keepdims=True)
    P = P0e * (1.0 + centred / Z_prev)
    if np.any(P < -tol):
        i, j = np.argwhere(P < -tol)[0]
        raise NegativeProbability(f"recovered entry ({i + 1},{j + 1}) = {P[i, j]!r} is negative")
    return validate_stochastic(np.clip(P, 0.0, None), tol=tol)


@dataclass(frozen=True)
class RoundTripReport:
    max_deviation: float
    max_row_sum_error: float
    atoms_checked: int
    atoms_skipped: int


def discrete_round_trip(nu: Distribution, ctrl: DiscreteControl, P0: StochasticMatrix,
                        n: int) -> RoundTripReport:
    """Decompose every likelihood increment and rebuild the control's rows.

    Atoms are full history prefixes of length ``1..n`` with positive
    reference probability; those with ``Z_prev = 0`` are skipped.
    """
    N = P0.n_states
    check_scale(N, n)
    worst = 0.0
    worst_sum = 0.0
    checked = skipped = 0
    starts = [i + 1 for i in range(N) if nu.probs[i] > 0]
    frontier = [(s,) for s in starts]

    for k in range(1, n + 1):
        nxt = []
        for prefix in frontier:
            i = prefix[-1]
            z_prev = likelihood_discrete(DiscretePath(prefix), P0, ctrl).terminal
            children = [prefix + (j,) for j in range(1, N + 1)]
            nxt.extend(children)
            if z_prev <= 0:
                skipped += 1
                continue
            Y = np.array([likelihood_discrete(DiscretePath(c), P0, ctrl).terminal - z_prev
                          for c in children])
            G = delta_basis_decompose(Y, P0.entries[i - 1])
            P = recover_transition(z_prev, {i: G}, P0)
            target = ctrl(k, prefix).entries[i - 1]
            worst = max(worst, float(np.max(np.abs(P.entries[i - 1] - target))))
            worst_sum = max(worst_sum, float(np.max(np.abs(P.entries.sum(axis=1) - 1.0))))
            checked += 1
        frontier = nxt
    return RoundTripReport(worst, worst_sum, checked, skipped)


def hadamard_decompose(qt: GeneratorMatrix, q0: GeneratorMatrix) -> HadamardCorrection:
    if qt.n_states != q0.n_states:
        raise DimensionMismatch("generators differ in size")
    q0e, qte = q0.entries, qt.entries
    n = q0.n_states
    diag = np.diag(q0e)
    if np.any(diag >= 0):
        i = int(np.flatnonzero(diag >= 0)[0])
        raise DegenerateReference(f"reference state {i + 1} has no exit rate; row {i + 1} cannot be decomposed")
    off = ~np.eye(n, dtype=bool)
    if np.any(q0e[off] <= 0):
        raise DegenerateReference("reference generator needs strictly positive off-diagonal rates")
    K = np.zeros((n, n))
    K[off] = qte[off] / q0e[off] - 1.0
    for i in range(n):
        s = sum(q0e[i, j] * K[i, j] for j in range(n) if j != i)
        K[i, i] = -s / q0e[i, i]
    return HadamardCorrection(K)


@dataclass(frozen=True, eq=False)
class JumpCoefficients:
    """Representation integrand at one snapshot time.

    ``H[j] = Z_{t-} (q_t(i, j) / q0(i, j) - 1)`` for ``j != i`` with ``i`` the
    state occupied just before ``t``; ``H[i]`` is NaN.
    """

    time: float
    state: int
    z_left: float
    H: np.ndarray

    @property
    def K_row(self) -> np.ndarray | None:
        """Off-diagonal correction ``H / Z_{t-}``; undefined (None) when ``Z_{t-} = 0``."""
        if self.z_left == 0:
            return None
        return self.H / self.z_left


def extract_jump_coefficients(Z: LikelihoodProcess, traj: JumpTrajectory, q0: GeneratorMatrix,
                              ctrl: ContinuousControl | None) -> list[JumpCoefficients]:
    """Snapshots at every jump epoch and at the horizon, using left limits."""
    rates = RateResolver(q0, ctrl)
    q0e = q0.entries
    out = []
    snaps = list(_walk_ctmc(traj, q0, rates, traj.horizon))
    if traj.jumps and traj.jumps[-1][0] == traj.horizon:
        snaps = snaps[:-1]
    if len(snaps) != len(Z.times) - 1:
        raise ValidationError("likelihood process does not belong to this trajectory")
    for idx, (start, end, i, Q, _target) in enumerate(snaps, start=1):
        if not np.isclose(Z.times[idx], end, rtol=0, atol=1e-12):
            raise ValidationError("likelihood process does not belong to this trajectory")
        z_left = float(np.exp(Z.log_left[idx]))
        H = z_left * (Q.entries[i - 1] / q0e[i - 1] - 1.0)
        H[i - 1] = np.nan
        out.append(JumpCoefficients(float(end), i, z_left, H))
    return out
