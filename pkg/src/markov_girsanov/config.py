"""Experiment configuration files.

A config is one YAML document::

    mode: discrete                 # or ctmc
    state_space: {n_states: 2}
    initial: [1.0, 0.0]
    reference: [[0.5, 0.5], [0.5, 0.5]]      # P0, or q0 when mode is ctmc
    control:                                 # optional; omitted means target = reference
      kind: constant_matrix                  # constant_matrix | quadratic | table
      matrix: [[0.7, 0.3], [0.6, 0.4]]
    horizon: 3                               # steps (discrete) or time (ctmc)
    claimed_reference: [[...]]               # optional, see below
    checks: {exact_tol: 1.0e-12, n_sigma: 4, samples: 20000, seed: 1}

``kind: quadratic`` takes ``a`` and ``b`` vectors. ``kind: table`` takes a
``default`` (itself a constant_matrix or quadratic spec) and ``rules``, each
with optional ``step`` (discrete, 1-based step index) or ``jumps``
(ctmc, jumps so far) and optional ``state`` (the last / current state) plus
the matrix or coefficients. The first matching rule wins, exact keys before
wildcards.

``claimed_reference`` is the reference matrix the likelihood engine and the
martingale compensator are told to use. It defaults to ``reference``; a
different value is how the verifier is shown to catch a mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .core import (
    Distribution,
    GeneratorMatrix,
    StochasticMatrix,
    validate_generator,
    validate_stochastic,
)
from .errors import MarkovGirsanovError, ValidationError
from .quadratic import QuadraticCoefficients, build_quadratic
from .simulate import (
    ConstantCoefficients,
    ConstantControl,
    JumpStateTable,
    StepStateTable,
)


class ConfigError(MarkovGirsanovError):
    """The file cannot be read or does not have the expected structure."""


@dataclass
class Checks:
    exact_tol: float = 1e-12
    n_sigma: float = 4.0
    samples: int = 20000
    seed: int = 1
    trajectories: int = 200


@dataclass
class ExperimentConfig:
    mode: str
    n_states: int
    initial: Distribution
    reference: StochasticMatrix | GeneratorMatrix
    control: Any
    horizon: float
    claimed_reference: StochasticMatrix | GeneratorMatrix
    checks: Checks = field(default_factory=Checks)
    control_kind: str = "none"

    @property
    def discrete(self) -> bool:
        return self.mode == "discrete"

    @property
    def n_steps(self) -> int:
        return int(self.horizon)

    @property
    def constant_target(self):
        """The target law when it does not depend on history, else None."""
        if self.control is None:
            return self.reference
        if isinstance(self.control, ConstantControl):
            return self.control.matrix
        if isinstance(self.control, ConstantCoefficients):
            v = self.control.value
            return v if isinstance(v, GeneratorMatrix) else build_quadratic(self.reference, v)
        return None


def read_raw(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    return raw


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing required key '{key}'")
    return raw[key]


def _matrix(value, what: str) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a numeric matrix") from exc
    if m.ndim != 2:
        raise ConfigError(f"{what}: expected an array of arrays")
    return m


def _vector(value, what: str) -> np.ndarray:
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a numeric vector") from exc
    if v.ndim != 1:
        raise ConfigError(f"{what}: expected a flat array")
    return v


class _Builder:
    """Parses sections in order, collecting validation failures instead of stopping."""

    def __init__(self, raw: dict):
        self.raw = raw
        self.results: list[tuple[str, str | None]] = []

    def item(self, name: str, fn):
        try:
            out = fn()
        except ValidationError as exc:
            self.results.append((name, str(exc)))
            return None
        self.results.append((name, None))
        return out

    def build(self) -> ExperimentConfig | None:
        raw = self.raw
        mode = _require(raw, "mode")
        if mode not in ("discrete", "ctmc"):
            raise ConfigError(f"mode must be 'discrete' or 'ctmc', got {mode!r}")
        ss = _require(raw, "state_space")
        n = ss.get("n_states") if isinstance(ss, dict) else ss
        if not isinstance(n, int) or isinstance(n, bool):
            raise ConfigError("state_space.n_states must be an integer")
        discrete = mode == "discrete"
        horizon = _require(raw, "horizon")
        if not isinstance(horizon, (int, float)) or isinstance(horizon, bool):
            raise ConfigError("horizon must be a number")

        def check_horizon():
            if discrete and (int(horizon) != horizon or horizon < 0):
                raise ValidationError(f"discrete horizon must be a nonnegative integer, got {horizon}")
            if not discrete and not horizon > 0:
                raise ValidationError(f"ctmc horizon must be positive, got {horizon}")
            if n < 2:
                raise ValidationError(f"n_states must be >= 2, got {n}")
            return horizon

        self.item("state_space/horizon", check_horizon)
        nu_raw = _vector(_require(raw, "initial"), "initial")

        def check_nu():
            if nu_raw.size != n:
                raise ValidationError(f"initial has {nu_raw.size} entries, expected {n}")
            return Distribution(nu_raw)

        nu = self.item("initial", check_nu)

        def law(value, what):
            m = _matrix(value, what)
            if m.shape != (n, n):
                raise ValidationError(f"{what} has shape {m.shape}, expected ({n}, {n})")
            if discrete:
                return validate_stochastic(m)
            return validate_generator(m)

        def reference_law(value, what):
            m = _matrix(value, what)
            if m.shape != (n, n):
                raise ValidationError(f"{what} has shape {m.shape}, expected ({n}, {n})")
            if discrete:
                return validate_stochastic(m, require_positive=True)
            return validate_generator(m, require_positive_offdiag=True)

        ref = self.item("reference", lambda: reference_law(_require(raw, "reference"), "reference"))
        claimed = ref
        if "claimed_reference" in raw:
            claimed = self.item("claimed_reference",
                                lambda: reference_law(raw["claimed_reference"], "claimed_reference"))

        ctrl, kind = None, "none"
        spec = raw.get("control")
        if spec is not None:
            if not isinstance(spec, dict) or "kind" not in spec:
                raise ConfigError("control must be a mapping with a 'kind'")
            kind = spec["kind"]

            def leaf(s: dict, where: str):
                if not isinstance(s, dict):
                    raise ConfigError(f"{where}: expected a mapping")
                if "matrix" in s:
                    return law(s["matrix"], f"{where}.matrix")
                if "a" in s and "b" in s:
                    if discrete:
                        raise ValidationError(f"{where}: quadratic coefficients need mode ctmc")
                    c = QuadraticCoefficients(_vector(s["a"], f"{where}.a"), _vector(s["b"], f"{where}.b"))
                    if c.a.size != n:
                        raise ValidationError(f"{where}: coefficients have {c.a.size} entries, expected {n}")
                    if ref is not None:
                        build_quadratic(ref, c)
                    return c
                raise ConfigError(f"{where}: needs 'matrix' or both 'a' and 'b'")

            def build_ctrl():
                if kind in ("constant_matrix", "quadratic"):
                    v = leaf(spec, "control")
                    return ConstantControl(v) if discrete else ConstantCoefficients(v)
                if kind == "table":
                    default = leaf(_require(spec, "default"), "control.default")
                    rules = {}
                    for idx, r in enumerate(spec.get("rules") or []):
                        if not isinstance(r, dict):
                            raise ConfigError(f"control.rules[{idx}]: expected a mapping")
                        counter = r.get("step" if discrete else "jumps")
                        state = r.get("state")
                        if state is not None and not 1 <= int(state) <= n:
                            raise ValidationError(f"control.rules[{idx}]: state {state} outside 1..{n}")
                        key = (None if counter is None else int(counter), None if state is None else int(state))
                        if key not in rules:
                            rules[key] = leaf(r, f"control.rules[{idx}]")
                    return StepStateTable(rules, default) if discrete else JumpStateTable(rules, default)
                raise ConfigError(f"unknown control kind {kind!r}")

            ctrl = self.item("control", build_ctrl)

        chk = raw.get("checks") or {}
        if not isinstance(chk, dict):
            raise ConfigError("checks must be a mapping")
        try:
            checks = Checks(**{k: type(getattr(Checks, k))(v) for k, v in chk.items()})
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad checks section: {exc}") from exc

        if any(msg is not None for _, msg in self.results):
            return None
        return ExperimentConfig(mode, n, nu, ref, ctrl, float(horizon) if not discrete else int(horizon),
                                claimed, checks, kind)


def validation_report(path) -> list[tuple[str, str | None]]:
    """Per-section results; ``None`` message means valid. Raises ConfigError on parse problems."""
    b = _Builder(read_raw(path))
    b.build()
    return b.results


def load_config(path) -> ExperimentConfig:
    b = _Builder(read_raw(path))
    cfg = b.build()
    if cfg is None:
        problems = "; ".join(f"{name}: {msg}" for name, msg in b.results if msg)
        raise ValidationError(problems)
    return cfg
