"""Exact and Monte Carlo checks of the martingale characterisations.

Discrete checks enumerate every path and evaluate conditional expectations
atom by atom (an atom is a full history prefix with positive probability).
Continuous checks are Monte Carlo with a fixed 4-sigma rule.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    Distribution,
    GeneratorMatrix,
    StochasticMatrix,
    transition_matrix,
)
from .errors import DimensionMismatch, ScaleTooLarge, ValidationError
from .likelihood import _walk_ctmc, likelihood_ctmc, likelihood_discrete
from .oracle import enumerate_paths
from .simulate import (
    ConstantControl,
    ContinuousControl,
    DiscreteControl,
    RateResolver,
    SeededSampler,
    run_samples,
    simulate_ctmc,
)

EXACT_TOL = 1e-12
N_SIGMA = 4.0
MAX_STATES = 6
MAX_STEPS = 8


@dataclass
class CheckReport:
    name: str
    scale: str
    value: float
    threshold: float
    passed: bool
    std_error: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.threshold = float(self.threshold)
        self.passed = bool(self.passed)

    def line(self) -> str:
        """Tab-separated ``name value threshold PASS|FAIL``."""
        value = repr(float(self.value))
        if self.std_error is not None:
            value += f"+-{float(self.std_error)!r}"
        return f"{self.name}\t{value}\t{float(self.threshold)!r}\t{'PASS' if self.passed else 'FAIL'}"


def _guard(n_states: int, n: int):
    if n_states > MAX_STATES or n > MAX_STEPS:
        raise ScaleTooLarge(f"exact checks are limited to N <= {MAX_STATES}, n <= {MAX_STEPS}")


def _as_control(c) -> DiscreteControl:
    return ConstantControl(c) if isinstance(c, StochasticMatrix) else c


def conditional_increment_residuals(nu: Distribution, ctrl: DiscreteControl, claimed, n: int,
                                    z) -> dict[tuple, float]:
    """``E[M_k^z - M_{k-1}^z | history]`` for every nonnull history of length ``1..n``.

    The law comes from ``ctrl``; the compensator uses ``claimed`` (a matrix
    or a control), defaulting to ``ctrl`` itself. Keys are the histories
    ``(x_0, .., x_{k-1})``.
    """
    N = nu.n_states
    _guard(N, n)
    z = np.asarray(z, dtype=float)
    if z.shape != (N,):
        raise DimensionMismatch(f"z has shape {z.shape}, expected ({N},)")
    claim = _as_control(claimed) if claimed is not None else ctrl
    paths = enumerate_paths(nu, ctrl, n)
    mass: dict[tuple, float] = defaultdict(float)
    acc: dict[tuple, float] = defaultdict(float)
    for path, p in paths:
        x = path.states
        for k in range(1, n + 1):
            h = x[:k]
            compensator = float(claim(k, h).entries[x[k - 1] - 1] @ z)
            mass[h] += p
            acc[h] += p * (z[x[k] - 1] - compensator)
    return {h: acc[h] / mass[h] for h in mass}


def check_discrete_martingale(nu: Distribution, ctrl: DiscreteControl, claimed, n: int,
                              z, tol: float = EXACT_TOL) -> CheckReport:
    res = conditional_increment_residuals(nu, ctrl, claimed, n, z)
    worst = max((abs(v) for v in res.values()), default=0.0)
    N = nu.n_states
    total_atoms = sum(N ** k for k in range(1, n + 1))
    return CheckReport(
        "discrete-martingale", f"N={N},n={n}", worst, tol, worst <= tol,
        details={"atoms": len(res), "null_atoms_skipped": total_atoms - len(res)})


def indicator_residuals(nu: Distribution, ctrl: DiscreteControl, claimed, n: int) -> dict[tuple, np.ndarray]:
    """Per-history residual vectors for every indicator ``z = e_j``.

    Entry ``j`` equals ``P(X_k = j | history) - claimed_k(x_{k-1}, j)``, i.e.
    the residuals are exactly the conditional-law mismatches.
    """
    N = nu.n_states
    cols = [conditional_increment_residuals(nu, ctrl, claimed, n, np.eye(N)[j]) for j in range(N)]
    return {h: np.array([c[h] for c in cols]) for h in cols[0]}


def check_Z_martingale_discrete(nu: Distribution, ctrl: DiscreteControl, P0: StochasticMatrix,
                                n: int, tol: float = EXACT_TOL) -> CheckReport:
    """Under the reference law, ``E_0[Z_k | history_{k-1}] = Z_{k-1}`` on every atom and ``E_0[Z_n] = 1``."""
    N = nu.n_states
    _guard(N, n)
    paths = enumerate_paths(nu, ConstantControl(P0), n)
    mass: dict[tuple, float] = defaultdict(float)
    acc: dict[tuple, float] = defaultdict(float)
    prev: dict[tuple, float] = {}
    mean_z = 0.0
    for path, p in paths:
        z = likelihood_discrete(path, P0, ctrl).values
        x = path.states
        for k in range(1, n + 1):
            h = x[:k]
            mass[h] += p
            acc[h] += p * z[k]
            prev[h] = z[k - 1]
        mean_z += p * z[-1]
    worst = max((abs(acc[h] / mass[h] - prev[h]) for h in mass), default=0.0)
    mean_err = abs(mean_z - 1.0)
    value = max(worst, mean_err)
    return CheckReport(
        "Z-martingale-discrete", f"N={N},n={n}", value, tol, value <= tol,
        details={"max_conditional_residual": worst, "mean_minus_one": mean_z - 1.0, "atoms": len(mass)})


def _integral_qf(traj, q0, rates, f, compensator, t_end) -> float:
    total = 0.0
    for start, end, i, Q, _ in _walk_ctmc(traj, q0, rates, t_end):
        G = compensator if compensator is not None else Q
        total += (end - start) * float(G.entries[i - 1] @ f)
    return total


def dynkin_samples(q0: GeneratorMatrix, ctrl: ContinuousControl | None, nu: Distribution, f, T: float,
                   n_samples: int, master_seed: int, compensator: GeneratorMatrix | None = None,
                   workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample ``M_T^f`` and ``M_T^f - M_{T/2}^f``, time integrals exact per trajectory."""
    f = np.asarray(f, dtype=float)
    if f.shape != (nu.n_states,):
        raise DimensionMismatch(f"f has shape {f.shape}, expected ({nu.n_states},)")
    rates = RateResolver(q0, ctrl)
    half = T / 2.0

    def one(s: SeededSampler):
        traj = simulate_ctmc(nu, q0, ctrl, T, s, resolver=rates)
        f0 = f[traj.initial_state - 1]
        i_half = _integral_qf(traj, q0, rates, f, compensator, half)
        i_full = _integral_qf(traj, q0, rates, f, compensator, T)
        m_half = f[traj.state_at(half) - 1] - f0 - i_half
        m_full = f[traj.terminal_state - 1] - f0 - i_full
        return m_full, m_full - m_half

    out = np.array(run_samples(one, n_samples, master_seed, workers))
    return out[:, 0], out[:, 1]


def _sigma_report(name: str, scale: str, x: np.ndarray, n_sigma: float) -> CheckReport:
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return CheckReport(name, scale, mean, n_sigma * se, abs(mean) <= n_sigma * se, std_error=se)


def check_dynkin_mc(q0: GeneratorMatrix, ctrl: ContinuousControl | None, nu: Distribution, f, T: float,
                    n_samples: int, master_seed: int, compensator: GeneratorMatrix | None = None,
                    n_sigma: float = N_SIGMA, workers: int = 1) -> CheckReport:
    """Monte Carlo test that ``M_T^f`` and ``M_T^f - M_{T/2}^f`` have mean zero.

    ``compensator`` replaces the generator inside the time integral (the
    simulated law is unchanged); used to confirm the check can fail.
    """
    if n_samples < 2:
        raise ValidationError("at least 2 samples are needed")
    full, incr = dynkin_samples(q0, ctrl, nu, f, T, n_samples, master_seed, compensator, workers)
    scale = f"N={nu.n_states},T={T},samples={n_samples}"
    a = _sigma_report("dynkin-M_T", scale, full, n_sigma)
    b = _sigma_report("dynkin-M_T-M_T/2", scale, incr, n_sigma)
    return CheckReport(
        "dynkin", scale, a.value, a.threshold, a.passed and b.passed, std_error=a.std_error,
        details={"full": a, "increment": b})


def check_Z_mean_one_mc(nu: Distribution, q0: GeneratorMatrix, ctrl: ContinuousControl | None, T: float,
                        n_samples: int, master_seed: int, n_sigma: float = N_SIGMA,
                        workers: int = 1, claimed_reference: GeneratorMatrix | None = None) -> CheckReport:
    """Sample mean of ``Z_T`` over reference-law trajectories is 1 within ``n_sigma`` standard errors.

    ``claimed_reference`` replaces ``q0`` inside the likelihood only.
    """
    claimed = q0 if claimed_reference is None else claimed_reference
    ref = RateResolver(q0, None)
    tgt = RateResolver(claimed, ctrl)

    def one(s: SeededSampler):
        traj = simulate_ctmc(nu, q0, None, T, s, resolver=ref)
        return likelihood_ctmc(traj, claimed, ctrl, resolver=tgt).terminal

    z = np.array(run_samples(one, n_samples, master_seed, workers))
    rep = _sigma_report("Z-mean-one-ctmc", f"N={nu.n_states},T={T},samples={n_samples}", z - 1.0, n_sigma)
    rep.details["mean"] = float(z.mean())
    return rep


def check_generator_limit(q0: GeneratorMatrix, h_sequence: Sequence[float],
                          margin: float = 0.1) -> CheckReport:
    """Difference quotients ``(exp(hQ) - I)/h`` against ``Q``.

    Passes when, for every ``h``: the entrywise deviation is at most
    ``||Q||^2 h / 2 (1 + margin)`` (induced infinity norm); deviations shrink
    as ``h`` shrinks and stay below ``C h (1 + margin)`` with ``C`` taken from
    the two largest ``h``; shrinking ``h`` by a factor cuts the deviation by
    at least that factor up to ``1 + 2 margin``; the quotient's diagonal is
    negative.
    """
    hs = sorted((float(h) for h in h_sequence), reverse=True)
    if not hs or hs[-1] <= 0:
        raise ValidationError("h values must be positive")
    Q = q0.entries
    n = Q.shape[0]
    norm = float(np.abs(Q).sum(axis=1).max())
    devs, diag_neg = [], True
    for h in hs:
        quotient = (transition_matrix(q0, h).entries - np.eye(n)) / h
        devs.append(float(np.max(np.abs(quotient - Q))))
        diag_neg &= bool(np.all(np.diag(quotient)[np.diag(Q) < 0] < 0))
    bound_ok = all(d <= norm ** 2 * h / 2 * (1 + margin) for d, h in zip(devs, hs))
    monotone = all(b < a or a == b == 0 for a, b in zip(devs, devs[1:]))
    C = max(d / h for d, h in zip(devs[:2], hs[:2]))
    linear_ok = all(d <= C * h * (1 + margin) for d, h in zip(devs, hs))
    ratios = [d2 / d1 if d1 > 0 else 0.0 for d1, d2 in zip(devs, devs[1:])]
    rate_ok = all(r <= (h2 / h1) * (1 + 2 * margin)
                  for r, h1, h2 in zip(ratios, hs, hs[1:]) if h1 <= 1e-2)
    worst = max(d / (norm ** 2 * h / 2) for d, h in zip(devs, hs)) if norm > 0 else 0.0
    return CheckReport(
        "generator-limit", f"N={n},h={hs}", worst, 1 + margin,
        bound_ok and monotone and linear_ok and rate_ok and diag_neg,
        details={"h": hs, "deviation": devs, "C": C, "ratios": ratios, "bound_ok": bound_ok,
                 "monotone": monotone, "linear_ok": linear_ok, "rate_ok": rate_ok,
                 "diagonal_negative": diag_neg})
