"""Command-line entry point.

    markov-girsanov validate <config>
    markov-girsanov simulate <config> --out <csv> --seed <u64> --samples <n>
    markov-girsanov verify   <config> --suite girsanov|martingale|representation|all
    markov-girsanov estimate <config> --payoff state:1 --seed <u64> --samples <n>

Exit codes: 0 success / all checks pass, 1 validation or check failure,
2 usage, parse or config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import Callable

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, validation_report
from .core import GeneratorMatrix
from .errors import MarkovGirsanovError, ValidationError
from .likelihood import (
    direct_estimate,
    importance_estimate,
    likelihood_ctmc,
    likelihood_discrete,
)
from .oracle import (
    ctmc_marginal_oracle,
    enumerate_paths,
    exact_expectation,
    pathwise_likelihood_oracle,
)
from .representation import discrete_round_trip, extract_jump_coefficients, hadamard_decompose
from .simulate import (
    ConstantControl,
    JumpHistory,
    RateResolver,
    SeededSampler,
    run_samples,
    simulate_ctmc,
    simulate_discrete,
)
from .verify import (
    CheckReport,
    check_discrete_martingale,
    check_dynkin_mc,
    check_generator_limit,
    check_Z_martingale_discrete,
    check_Z_mean_one_mc,
)

log = logging.getLogger("markov_girsanov")

SUITES = ("girsanov", "martingale", "representation")


def fmt(x: float) -> str:
    """Locale-independent shortest round-trip repr (at most 17 significant digits)."""
    return repr(float(x))


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


# --- validate ------------------------------------------------------------------

def cmd_validate(args) -> int:
    results = validation_report(args.config)
    ok = True
    for name, msg in results:
        if msg is None:
            print(f"{name}\tOK")
        else:
            ok = False
            print(f"{name}\tINVALID\t{msg}")
    print(f"summary\t{'VALID' if ok else 'INVALID'}")
    return 0 if ok else 1


# --- simulate ------------------------------------------------------------------

def simulate_rows(cfg: ExperimentConfig, seed: int, samples: int, workers: int = 1) -> list[list[str]]:
    """One row per sample, all paths drawn under the reference law."""
    with_z = cfg.control is not None
    if cfg.discrete:
        ref_ctrl = ConstantControl(cfg.reference)

        def one(s: SeededSampler):
            path = simulate_discrete(cfg.initial, ref_ctrl, cfg.n_steps, s)
            row = [str(s.sample_index), str(path.terminal)]
            if with_z:
                row.append(fmt(likelihood_discrete(path, cfg.claimed_reference, cfg.control).terminal_log))
            return row
    else:
        ref_rates = RateResolver(cfg.reference, None)
        tgt_rates = RateResolver(cfg.claimed_reference, cfg.control)

        def one(s: SeededSampler):
            traj = simulate_ctmc(cfg.initial, cfg.reference, None, cfg.horizon, s, resolver=ref_rates)
            row = [str(s.sample_index), str(traj.terminal_state)]
            if with_z:
                lz = likelihood_ctmc(traj, cfg.claimed_reference, cfg.control, resolver=tgt_rates)
                row.append(fmt(lz.terminal_log))
            row.append(str(traj.n_jumps))
            return row
    return run_samples(one, samples, seed, workers)


def csv_header(cfg: ExperimentConfig) -> list[str]:
    cols = ["sample_index", "terminal_state"]
    if cfg.control is not None:
        cols.append("terminal_log_Z")
    if not cfg.discrete:
        cols.append("n_jumps")
    return cols


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    rows = simulate_rows(cfg, args.seed, args.samples, args.workers)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(cfg))
        w.writerows(rows)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return 0


# --- verify --------------------------------------------------------------------

def _report(name, value, threshold, passed, scale="") -> CheckReport:
    return CheckReport(name, scale, float(value), float(threshold), bool(passed))


def _rel_dev(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def discrete_girsanov_checks(cfg: ExperimentConfig) -> list[CheckReport]:
    tol = cfg.checks.exact_tol
    nu, P0, n = cfg.initial, cfg.reference, cfg.n_steps
    target = cfg.control or ConstantControl(P0)
    ref_paths = enumerate_paths(nu, ConstantControl(P0), n)
    worst = 0.0
    for path, _ in ref_paths:
        engine = likelihood_discrete(path, cfg.claimed_reference, target).terminal
        oracle = pathwise_likelihood_oracle(path, nu, target, P0)
        worst = max(worst, _rel_dev(engine, oracle))
    out = [_report("pathwise-likelihood", worst, tol, worst <= tol, f"paths={len(ref_paths)}")]

    def z(path):
        return likelihood_discrete(path, cfg.claimed_reference, target).terminal

    mean = exact_expectation(ref_paths, z)
    out.append(_report("mean-one-exact", abs(mean - 1.0), tol, abs(mean - 1.0) <= tol))
    tgt_paths = enumerate_paths(nu, target, n)
    dev = 0.0
    for j in range(1, cfg.n_states + 1):
        lhs = exact_expectation(ref_paths, lambda p: z(p) * (p.terminal == j))
        rhs = exact_expectation(tgt_paths, lambda p: float(p.terminal == j))
        dev = max(dev, abs(lhs - rhs))
    out.append(_report("change-of-measure-exact", dev, tol, dev <= tol))
    return out


def discrete_martingale_checks(cfg: ExperimentConfig) -> list[CheckReport]:
    tol = cfg.checks.exact_tol
    nu, P0, n = cfg.initial, cfg.reference, cfg.n_steps
    target = cfg.control or ConstantControl(P0)
    eye = np.eye(cfg.n_states)
    out = []
    for label, law, claim in (("reference", ConstantControl(P0), cfg.claimed_reference),
                              ("target", target, None)):
        worst = max(check_discrete_martingale(nu, law, claim, n, eye[j]).value
                    for j in range(cfg.n_states))
        out.append(_report(f"indicator-martingale-{label}", worst, tol, worst <= tol))
    rep = check_Z_martingale_discrete(nu, target, cfg.claimed_reference, n, tol)
    out.append(_report("Z-martingale-exact", rep.value, tol, rep.passed))
    return out


def discrete_representation_checks(cfg: ExperimentConfig) -> list[CheckReport]:
    target = cfg.control or ConstantControl(cfg.reference)
    rt = discrete_round_trip(cfg.initial, target, cfg.claimed_reference, cfg.n_steps)
    return [
        _report("representation-round-trip", rt.max_deviation, 1e-10, rt.max_deviation <= 1e-10,
                f"atoms={rt.atoms_checked}"),
        _report("recovered-row-sums", rt.max_row_sum_error, 1e-12, rt.max_row_sum_error <= 1e-12),
    ]


def ctmc_girsanov_checks(cfg: ExperimentConfig, workers: int) -> list[CheckReport]:
    c = cfg.checks
    out = []
    rep = check_Z_mean_one_mc(cfg.initial, cfg.reference, cfg.control, cfg.horizon,
                              c.samples, c.seed, c.n_sigma, workers, cfg.claimed_reference)
    rep.name = "Z-mean-one-mc"
    out.append(rep)
    q = cfg.constant_target
    if q is not None:
        truth = ctmc_marginal_oracle(q, cfg.initial, cfg.horizon).probs
        for j in range(cfg.n_states):
            f = np.eye(cfg.n_states)[j]
            est = importance_estimate(f, cfg.initial, cfg.reference, cfg.control, cfg.horizon,
                                      c.samples, c.seed, workers, cfg.claimed_reference)
            err = abs(est.estimate - truth[j])
            out.append(CheckReport(f"importance-P(X_T={j + 1})", "", err, c.n_sigma * est.std_error,
                                   err <= c.n_sigma * est.std_error, std_error=est.std_error))
    return out


def ctmc_martingale_checks(cfg: ExperimentConfig, workers: int) -> list[CheckReport]:
    c = cfg.checks
    out = []
    for j in range(cfg.n_states):
        f = np.eye(cfg.n_states)[j]
        rep = check_dynkin_mc(cfg.reference, cfg.control, cfg.initial, f, cfg.horizon,
                              c.samples, c.seed, n_sigma=c.n_sigma, workers=workers)
        rep.name = f"dynkin-f=e{j + 1}"
        out.append(rep)
    rep = check_generator_limit(cfg.reference, [1e-2, 1e-3, 1e-4])
    out.append(rep)
    return out


def ctmc_representation_checks(cfg: ExperimentConfig) -> list[CheckReport]:
    q0 = cfg.claimed_reference
    rates = RateResolver(q0, cfg.control)
    recon = constraint = consistency = 0.0
    snaps = 0
    for i in range(cfg.checks.trajectories):
        s = SeededSampler(cfg.checks.seed, i)
        traj = simulate_ctmc(cfg.initial, cfg.reference, None, cfg.horizon, s)
        Z = likelihood_ctmc(traj, q0, cfg.control, resolver=rates)
        for snap in extract_jump_coefficients(Z, traj, q0, cfg.control):
            history_q = _rates_at(traj, snap.time, rates)
            K = hadamard_decompose(history_q, q0)
            recon = max(recon, float(np.max(np.abs(K.reconstruct(q0) - history_q.entries))))
            constraint = max(constraint, float(np.max(np.abs(K.row_constraint(q0)))))
            kr = snap.K_row
            if kr is not None:
                mask = ~np.isnan(kr)
                consistency = max(consistency, float(np.max(np.abs(kr[mask] - K.K[snap.state - 1][mask]))))
            snaps += 1
    return [
        _report("hadamard-reconstruction", recon, 1e-12, recon <= 1e-12, f"snapshots={snaps}"),
        _report("hadamard-row-constraint", constraint, 1e-10, constraint <= 1e-10),
        _report("H-over-Z-equals-K", consistency, 1e-12, consistency <= 1e-12),
    ]


def _rates_at(traj, t: float, rates: RateResolver) -> GeneratorMatrix:
    before = tuple((s, j) for s, j in traj.jumps if s < t)
    return rates(JumpHistory(traj.initial_state, before))


def run_suite(cfg: ExperimentConfig, suite: str, workers: int = 1) -> list[CheckReport]:
    names = SUITES if suite == "all" else (suite,)
    out: list[CheckReport] = []
    for name in names:
        if cfg.discrete:
            table: dict[str, Callable[[], list[CheckReport]]] = {
                "girsanov": lambda: discrete_girsanov_checks(cfg),
                "martingale": lambda: discrete_martingale_checks(cfg),
                "representation": lambda: discrete_representation_checks(cfg),
            }
        else:
            table = {
                "girsanov": lambda: ctmc_girsanov_checks(cfg, workers),
                "martingale": lambda: ctmc_martingale_checks(cfg, workers),
                "representation": lambda: ctmc_representation_checks(cfg),
            }
        out.extend(table[name]())
    return out


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    reports = run_suite(cfg, args.suite, args.workers)
    for r in reports:
        print(r.line())
    n_pass = sum(r.passed for r in reports)
    ok = n_pass == len(reports)
    print(f"summary\t{n_pass}/{len(reports)}\t{len(reports)}\t{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# --- estimate ------------------------------------------------------------------

def parse_payoff(spec: str, n_states: int) -> np.ndarray:
    kind, _, body = spec.partition(":")
    if kind == "state":
        j = int(body)
        if not 1 <= j <= n_states:
            raise ValidationError(f"payoff state {j} outside 1..{n_states}")
        return np.eye(n_states)[j - 1]
    if kind == "vector":
        v = np.array([float(x) for x in body.split(",")])
        if v.size != n_states:
            raise ValidationError(f"payoff vector has {v.size} entries, expected {n_states}")
        return v
    raise ValidationError(f"payoff must be 'state:<j>' or 'vector:<v1,...>', got {spec!r}")


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    f = parse_payoff(args.payoff, cfg.n_states)
    if args.samples < 2:
        raise ValidationError("--samples must be at least 2 for a standard error")
    if args.method == "importance":
        est = importance_estimate(f, cfg.initial, cfg.reference, cfg.control, cfg.horizon,
                                  args.samples, args.seed, args.workers)
    else:
        est = direct_estimate(f, cfg.initial, cfg.reference, cfg.control, cfg.horizon,
                              args.samples, args.seed, args.workers)
    print(f"{fmt(est.estimate)},{fmt(est.std_error)},{args.samples},{args.seed}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="markov-girsanov",
                                 description="Change of measure for finite-state Markov chains and jump processes")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="sample under the reference law and write a CSV")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--samples", type=_nonneg, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run exact and Monte Carlo verification suites")
    p.add_argument("config")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", help="estimate a terminal expectation under the target law")
    p.add_argument("config")
    p.add_argument("--payoff", required=True, help="state:<j> or vector:<v1,...,vN>")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--method", choices=("importance", "direct"), default="importance")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_estimate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MarkovGirsanovError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
