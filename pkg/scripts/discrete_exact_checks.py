"""Exact enumeration checks on random history-dependent discrete controls.

For each random configuration prints the worst pathwise likelihood error,
|E_0[Z_n] - 1|, and the largest change-of-measure discrepancy over indicator
payoffs.
"""

import argparse

import numpy as np

from markov_girsanov import (
    ConstantControl,
    Distribution,
    StepStateTable,
    enumerate_paths,
    exact_expectation,
    likelihood_discrete,
    pathwise_likelihood_oracle,
    validate_stochastic,
)


def random_stochastic(rng, n, zero_prob=0.0):
    m = rng.uniform(0.05, 1.0, size=(n, n))
    if zero_prob:
        mask = rng.random((n, n)) < zero_prob
        mask[np.arange(n), rng.integers(0, n, size=n)] = False
        m[mask] = 0.0
    return validate_stochastic(m / m.sum(axis=1, keepdims=True))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print("N\tn\tpaths\tpathwise_rel\tmean_one\tchange_of_measure")
    for _ in range(args.configs):
        N, n = int(rng.integers(2, 5)), int(rng.integers(1, 6))
        P0 = random_stochastic(rng, N)
        rules = {(k, s): random_stochastic(rng, N, 0.2)
                 for k in range(1, n + 1) for s in range(1, N + 1) if rng.random() < 0.6}
        ctrl = StepStateTable(rules, random_stochastic(rng, N, 0.2))
        nu = Distribution(rng.dirichlet(np.ones(N)))
        ref = enumerate_paths(nu, ConstantControl(P0), n)
        tgt = enumerate_paths(nu, ctrl, n)

        def z(p):
            return likelihood_discrete(p, P0, ctrl).terminal

        rel = max((abs(z(p) - o) / o for p, _ in ref
                   if (o := pathwise_likelihood_oracle(p, nu, ctrl, P0)) > 0), default=0.0)
        mean = abs(exact_expectation(ref, z) - 1.0)
        com = max(abs(exact_expectation(ref, lambda p: z(p) * (p.terminal == j))
                      - exact_expectation(tgt, lambda p: float(p.terminal == j)))
                  for j in range(1, N + 1))
        print(f"{N}\t{n}\t{len(ref)}\t{rel:.2e}\t{mean:.2e}\t{com:.2e}")


if __name__ == "__main__":
    main()
