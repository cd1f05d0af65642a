"""Problem instances and the probabilistic primitives everything else is built on.

A scenario is a finite state grid ``theta_1 < ... < theta_n``, ``m`` signal
realizations, a full-support joint pmf ``f`` (rows are states, columns are
signals) and a strictly increasing bias function ``y``.  Signal columns are
ordered by the posterior mean of the state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    MarginalMismatch,
    NonMonotoneBias,
    NonMonotoneStates,
    ScenarioParseError,
    ShapeMismatch,
    UnorderedSignals,
    ValidationError,
    ZeroColumn,
    ZeroEntry,
)

PROB_TOL = 1e-12
RENORMALIZE_TOL = 1e-9
# relative tolerance for two posterior means to count as tied
TIE_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf over states x signals with cached marginals.

    Entries within ``PROB_TOL`` below zero (solver round-off) are clipped.
    """

    probs: np.ndarray
    row_marginal: np.ndarray = field(init=False)
    col_marginal: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2:
            raise ShapeMismatch("joint distribution must be a matrix", key="joint")
        if not np.all(np.isfinite(p)):
            raise ValidationError("entries must be finite", key="joint")
        if p.min() < -PROB_TOL or p.max() > 1 + PROB_TOL:
            raise ValidationError("entries must lie in [0, 1]", key="joint")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise MarginalMismatch(f"probabilities sum to {total!r}, not 1", key="joint")
        p = np.clip(p, 0.0, 1.0)
        object.__setattr__(self, "probs", _frozen(p))
        object.__setattr__(self, "row_marginal", _frozen(p.sum(axis=1)))
        object.__setattr__(self, "col_marginal", _frozen(p.sum(axis=0)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def conditionals(self) -> np.ndarray:
        """Column-normalized matrix: entry (i, j) is Pr[theta_i | s_j]."""
        if np.any(self.col_marginal <= 0):
            j = int(np.argmin(self.col_marginal))
            raise ZeroColumn(f"signal column {j} has zero probability")
        return self.probs / self.col_marginal

    def product(self) -> JointDistribution:
        """The independent coupling of the two marginals."""
        return JointDistribution(np.outer(self.row_marginal, self.col_marginal))


def as_joint(g) -> JointDistribution:
    return g if isinstance(g, JointDistribution) else JointDistribution(g)


@dataclass(frozen=True, eq=False)
class BiasFunction:
    """Agent's preferred action y(theta_i) on the state grid."""

    values: np.ndarray
    kind: str = "table"
    intercept: float | None = None
    slope: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1:
            raise ShapeMismatch("bias table must be a vector", key="bias")
        if np.any(np.diff(self.values) <= 0):
            raise NonMonotoneBias("bias values must be strictly increasing", key="bias")

    @classmethod
    def affine(cls, states, intercept: float, slope: float) -> BiasFunction:
        if not slope > 0:
            raise NonMonotoneBias("affine slope must be positive", key="bias.affine.slope")
        states = np.asarray(states, dtype=float)
        return cls(intercept + slope * states, kind="affine", intercept=float(intercept), slope=float(slope))

    def to_dict(self) -> dict:
        if self.kind == "affine":
            return {"affine": {"intercept": self.intercept, "slope": self.slope}}
        return {"table": [float(v) for v in self.values]}


@dataclass(frozen=True, eq=False)
class Scenario:
    states: np.ndarray
    joint: JointDistribution
    bias: BiasFunction
    signals: tuple[str, ...] | None = None
    # original column index of each (reordered) signal column
    signal_permutation: tuple[int, ...] | None = None
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen(self.states))

    @property
    def n(self) -> int:
        return self.joint.shape[0]

    @property
    def m(self) -> int:
        return self.joint.shape[1]

    @property
    def f(self) -> np.ndarray:
        return self.joint.probs

    @property
    def y(self) -> np.ndarray:
        return self.bias.values

    @property
    def conflict(self) -> np.ndarray:
        """c(theta_i) = y(theta_i) - theta_i."""
        return self.y - self.states

    @property
    def is_binary(self) -> bool:
        return self.n == 2 and self.m == 2

    def same_instance(self, other: Scenario) -> bool:
        """Exact equality of the numerical primitives."""
        return (
            self.f.shape == other.f.shape
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.f, other.f)
            and np.array_equal(self.y, other.y)
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "states": [float(v) for v in self.states],
            "joint": [[float(v) for v in row] for row in self.f],
            "bias": self.bias.to_dict(),
        }
        if self.signals is not None:
            out["signals"] = list(self.signals)
        if self.name is not None:
            out["name"] = self.name
        return out

    def with_joint(self, probs) -> Scenario:
        return validate_scenario(
            {"states": self.states.tolist(), "joint": np.asarray(probs).tolist(), "bias": self.bias.to_dict()}
        )


def _number_vector(raw, key) -> np.ndarray:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ScenarioParseError("expected a non-empty array of numbers", key=key)
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioParseError("expected numbers", key=key) from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ScenarioParseError("expected a flat array of finite numbers", key=key)
    return arr


def _parse_bias(raw, states) -> BiasFunction:
    if not isinstance(raw, Mapping):
        raise ScenarioParseError('expected {"table": [...]} or {"affine": {...}}', key="bias")
    if "table" in raw:
        values = _number_vector(raw["table"], "bias.table")
        if values.shape[0] != states.shape[0]:
            raise ShapeMismatch(f"has {values.shape[0]} entries for {states.shape[0]} states", key="bias.table")
        return BiasFunction(values)
    if "affine" in raw:
        spec = raw["affine"]
        if not isinstance(spec, Mapping):
            raise ScenarioParseError("expected an object", key="bias.affine")
        for k in ("intercept", "slope"):
            if k not in spec:
                raise ScenarioParseError("missing", key=f"bias.affine.{k}")
            if not isinstance(spec[k], (int, float)) or isinstance(spec[k], bool):
                raise ScenarioParseError("expected a number", key=f"bias.affine.{k}")
        return BiasFunction.affine(states, float(spec["intercept"]), float(spec["slope"]))
    raise ScenarioParseError('expected key "table" or "affine"', key="bias")


def _parse_joint(raw, n) -> np.ndarray:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ScenarioParseError("expected an array of rows", key="joint")
    if len(raw) != n:
        raise ShapeMismatch(f"has {len(raw)} rows for {n} states", key="joint")
    rows = [_number_vector(r, f"joint[{i}]") for i, r in enumerate(raw)]
    m = rows[0].shape[0]
    for i, r in enumerate(rows):
        if r.shape[0] != m:
            raise ShapeMismatch(f"row has {r.shape[0]} entries, expected {m}", key=f"joint[{i}]")
    return np.vstack(rows)


def validate_scenario(raw, relabel: bool = False) -> Scenario:
    """Parse and validate a scenario document (dict, JSON text, or path).

    With ``relabel`` the signal columns are sorted by posterior mean and the
    applied permutation is kept on the result; otherwise unordered signals
    are an error.
    """
    if isinstance(raw, Path):
        raw = raw.read_text()
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(f"invalid JSON ({exc.msg} at line {exc.lineno})", key="<document>") from None
    if not isinstance(raw, Mapping):
        raise ScenarioParseError("scenario must be a JSON object", key="<document>")
    for key in ("states", "joint", "bias"):
        if key not in raw:
            raise ScenarioParseError("missing required key", key=key)

    states = _number_vector(raw["states"], "states")
    n = states.shape[0]
    if n < 2:
        raise ShapeMismatch("need at least two states", key="states")
    if np.any(np.diff(states) <= 0):
        raise NonMonotoneStates("states must be strictly increasing", key="states")

    probs = _parse_joint(raw["joint"], n)
    m = probs.shape[1]
    if m < 2:
        raise ShapeMismatch("need at least two signals", key="joint")
    if np.any(probs < 0):
        i, j = np.argwhere(probs < 0)[0]
        raise ValidationError("negative probability", key=f"joint[{i}][{j}]")
    if np.any(probs < PROB_TOL):
        i, j = np.argwhere(probs < PROB_TOL)[0]
        raise ZeroEntry("full support required (entry is zero)", key=f"joint[{i}][{j}]")
    total = probs.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise MarginalMismatch(f"probabilities sum to {total!r}", key="joint")
    if total != 1.0:
        probs = probs / total

    bias = _parse_bias(raw["bias"], states)

    signals = raw.get("signals")
    if signals is not None:
        if not isinstance(signals, (list, tuple)) or len(signals) != m:
            raise ScenarioParseError(f"expected {m} labels", key="signals")
        signals = tuple(str(s) for s in signals)

    post = (states @ probs) / probs.sum(axis=0)
    scale = max(1.0, float(np.max(np.abs(states))))
    order = np.argsort(post, kind="stable")
    sorted_post = post[order]
    if np.any(np.diff(sorted_post) <= TIE_TOL * scale):
        raise UnorderedSignals("two signals induce the same posterior mean", key="joint")
    permutation = None
    if not np.array_equal(order, np.arange(m)):
        if not relabel:
            raise UnorderedSignals(
                "signal columns must be ordered by increasing posterior mean (enable relabeling to sort them)",
                key="joint",
            )
        probs = probs[:, order]
        permutation = tuple(int(k) for k in order)
        if signals is not None:
            signals = tuple(signals[k] for k in order)

    name = raw.get("name")
    return Scenario(
        states=states,
        joint=JointDistribution(probs),
        bias=bias,
        signals=signals,
        signal_permutation=permutation,
        name=str(name) if name is not None else None,
    )


def load_scenario(path, relabel: bool = False) -> Scenario:
    return validate_scenario(Path(path), relabel=relabel)


def conditional_mean(d, values, j: int) -> float:
    """E_d[values(theta) | s_j]."""
    d = as_joint(d)
    values = np.asarray(values, dtype=float)
    pj = d.col_marginal[j]
    if pj <= 0:
        raise ZeroColumn(f"signal column {j} has zero probability")
    return float(values @ d.probs[:, j] / pj)


def conditional_means(d, values) -> np.ndarray:
    """Vector of E_d[values(theta) | s_j] over all signals."""
    d = as_joint(d)
    return np.asarray(values, dtype=float) @ d.conditionals()


@dataclass(frozen=True)
class ConflictMoments:
    mean_conflict: float
    conditional_conflict: np.ndarray
    cov_c_y: float
    var_y: float


def _cov(p, a, b) -> float:
    return float(p @ (a * b) - (p @ a) * (p @ b))


def conflict_moments(sc: Scenario) -> ConflictMoments:
    p = sc.joint.row_marginal
    c = sc.conflict
    return ConflictMoments(
        mean_conflict=float(p @ c),
        conditional_conflict=conditional_means(sc.joint, c),
        cov_c_y=_cov(p, c, sc.y),
        var_y=_cov(p, sc.y, sc.y),
    )


def state_variance(sc: Scenario) -> float:
    return _cov(sc.joint.row_marginal, sc.states, sc.states)


def posterior_means(sc: Scenario) -> np.ndarray:
    """E_f[theta | s_j] for each signal."""
    return conditional_means(sc.joint, sc.states)


def _check_shape(sc: Scenario, g: JointDistribution):
    if g.shape != sc.joint.shape:
        raise ShapeMismatch(f"beliefs have shape {g.shape}, scenario has {sc.joint.shape}")


def agent_actions(sc: Scenario, g) -> np.ndarray:
    """Actions E_g[y | s_j] of an agent holding beliefs g."""
    g = as_joint(g)
    _check_shape(sc, g)
    return conditional_means(g, sc.y)


def principal_payoff(sc: Scenario, g) -> float:
    """U(g) = -sum_ij f_ij (E_g[y|s_j] - theta_i)^2."""
    x = agent_actions(sc, g)
    return float(-np.sum(sc.f * (x[None, :] - sc.states[:, None]) ** 2))


@dataclass(frozen=True)
class PayoffTerms:
    """Losses whose negated sum is the principal's payoff."""

    residual_uncertainty: float
    mean_bias_sq: float
    excess_variance: float

    @property
    def payoff(self) -> float:
        return -(self.residual_uncertainty + self.mean_bias_sq + self.excess_variance)

    def to_dict(self) -> dict:
        return {
            "residual_uncertainty": self.residual_uncertainty,
            "mean_bias_sq": self.mean_bias_sq,
            "excess_variance": self.excess_variance,
        }


def payoff_terms(sc: Scenario, g) -> PayoffTerms:
    fs = sc.joint.col_marginal
    post = posterior_means(sc)
    residual = float(np.sum(sc.f * (sc.states[:, None] - post[None, :]) ** 2))
    mean_c = conflict_moments(sc).mean_conflict
    gap = agent_actions(sc, g) - post
    excess = float(fs @ (gap - fs @ gap) ** 2)
    return PayoffTerms(residual, mean_c**2, excess)
