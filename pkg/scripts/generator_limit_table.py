"""Deviation of (exp(hQ) - I)/h from Q as h shrinks."""

import argparse

import numpy as np

from markov_girsanov import transition_matrix, validate_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--states", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    off = rng.uniform(0.1, 2.0, size=(args.states, args.states))
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(off, -off.sum(axis=1))
    q = validate_generator(off)
    norm = np.abs(off).sum(axis=1).max()
    eye = np.eye(args.states)

    print("h\tmax_deviation\tbound ||Q||^2 h/2\tratio")
    prev = None
    for h in 10.0 ** -np.arange(1, 7):
        dev = np.abs((transition_matrix(q, h).entries - eye) / h - off).max()
        ratio = "" if prev is None else f"{dev / prev:.4f}"
        print(f"{h:.0e}\t{dev:.3e}\t{norm ** 2 * h / 2:.3e}\t{ratio}")
        prev = dev


if __name__ == "__main__":
    main()
