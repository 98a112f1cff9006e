"""Brute-force ground truth at desk scale.

Discrete time: every path of a controlled chain is enumerated together with
its exact probability. Continuous time has no finite path space, so the only
oracle is the semigroup marginal ``nu^T exp(Tq)`` for a constant generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .core import (
    DiscretePath,
    Distribution,
    GeneratorMatrix,
    StochasticMatrix,
    transition_matrix,
)
from .errors import ScaleTooLarge, ValidationError, ZeroReferenceProbability
from .simulate import DiscreteControl

MAX_PATHS = 10 ** 6


@dataclass(frozen=True)
class WeightedPathSet:
    entries: tuple[tuple[DiscretePath, float], ...]

    def __iter__(self) -> Iterator[tuple[DiscretePath, float]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total_mass(self) -> float:
        return float(sum(p for _, p in self.entries))

    def probability_of(self, states) -> float:
        key = tuple(states)
        for path, p in self.entries:
            if path.states == key:
                return p
        return 0.0


def check_scale(n_states: int, n: int, limit: int = MAX_PATHS) -> None:
    if n_states ** (n + 1) > limit:
        raise ScaleTooLarge(f"{n_states}^{n + 1} paths exceeds the enumeration guard of {limit}")


def enumerate_paths(nu: Distribution, ctrl: DiscreteControl, n: int) -> WeightedPathSet:
    """All paths ``x_0..x_n`` with ``P = nu(x_0) prod_k P_k(x_{k-1}, x_k)``; null paths omitted.

    The control is evaluated afresh on every prefix, so arbitrary history
    dependence is honoured.
    """
    N = nu.n_states
    check_scale(N, n)
    out: list[tuple[DiscretePath, float]] = []

    def grow(prefix: tuple, prob: float):
        k = len(prefix)
        if k == n + 1:
            out.append((DiscretePath(prefix), prob))
            return
        row = ctrl(k, prefix).entries[prefix[-1] - 1]
        for j in range(N):
            if row[j] > 0:
                grow(prefix + (j + 1,), prob * row[j])

    for x0 in range(N):
        if nu.probs[x0] > 0:
            grow((x0 + 1,), float(nu.probs[x0]))
    return WeightedPathSet(tuple(out))


def exact_expectation(pathset: WeightedPathSet, functional: Callable[[DiscretePath], float]) -> float:
    return float(sum(p * functional(path) for path, p in pathset))


def pathwise_likelihood_oracle(path: DiscretePath, nu: Distribution, ctrl: DiscreteControl,
                               P0: StochasticMatrix) -> float:
    """Ratio of finite-dimensional path probabilities, target over reference, by direct products."""
    x = path.states
    num = nu.probs[x[0] - 1]
    den = nu.probs[x[0] - 1]
    for k in range(1, len(x)):
        num *= ctrl(k, x[:k]).entries[x[k - 1] - 1, x[k] - 1]
        den *= P0.entries[x[k - 1] - 1, x[k] - 1]
    if den <= 0:
        raise ZeroReferenceProbability(f"path {x} has zero probability under the reference law")
    return float(num / den)


def ctmc_marginal_oracle(q: GeneratorMatrix, nu: Distribution, T: float) -> Distribution:
    if q.n_states != nu.n_states:
        raise ValidationError("generator and distribution sizes differ")
    p = nu.probs @ transition_matrix(q, T).entries
    return Distribution(p)
