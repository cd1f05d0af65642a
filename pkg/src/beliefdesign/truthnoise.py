"""Truth-or-noise information structure on a weighted state grid.

With probability ``rho`` the signal equals the state; otherwise it is an
independent draw from the state distribution.  An agent with confidence
``kappa`` in ``[-rho, 1 - rho]`` behaves as if the truthful branch had
probability ``a = rho + kappa``, so his action after ``s`` is
``a * y(s) + (1 - a) * E[y]``.

Expanding the principal's loss gives

    U(kappa) = -E[c]^2 - Var(theta) - a^2 Var(y) + 2 a rho Cov(y, theta),

a concave quadratic in ``kappa`` maximized at ``kappa = -rho * beta`` with
``beta = Cov(y, c) / Var(y)``, clamped to the admissible interval.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateBias, KappaOutOfRange, NonMonotoneStates, ScenarioParseError, ValidationError
from .model import BiasFunction, Scenario, _number_vector, _parse_bias
from .stochastic_order import Confidence

BETA_TOL = 1e-10


class Regime(str, enum.Enum):
    INTERIOR = "InteriorFOC"
    CLAMPED_LOW = "ClampedLow"
    CLAMPED_HIGH = "ClampedHigh"


@dataclass(frozen=True, eq=False)
class TruthNoiseScenario:
    states: np.ndarray
    weights: np.ndarray
    rho: float
    bias: BiasFunction

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if states.ndim != 1 or states.shape != weights.shape:
            raise ValidationError("states and weights must be vectors of equal length", key="weights")
        if np.any(np.diff(states) <= 0):
            raise NonMonotoneStates("grid must be strictly increasing", key="states")
        if np.any(weights <= 0) or abs(weights.sum() - 1) > 1e-9:
            raise ValidationError("weights must be positive and sum to 1", key="weights")
        if not 0 < self.rho < 1:
            raise ValidationError("rho must lie in (0, 1)", key="rho")
        if self.bias.values.shape != states.shape:
            raise ValidationError("bias table length must match the grid", key="bias")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights / weights.sum())
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def y(self) -> np.ndarray:
        return self.bias.values

    @property
    def conflict(self) -> np.ndarray:
        return self.y - self.states

    @property
    def kappa_range(self) -> tuple[float, float]:
        return -self.rho, 1.0 - self.rho

    def true_joint(self) -> np.ndarray:
        """Joint pmf of (theta, s) on the grid; rows are states."""
        w = self.weights
        return self.rho * np.diag(w) + (1 - self.rho) * np.outer(w, w)

    def to_dict(self) -> dict:
        return {
            "states": [float(v) for v in self.states],
            "weights": [float(v) for v in self.weights],
            "rho": self.rho,
            "bias": self.bias.to_dict(),
        }


def uniform_grid(low: float, high: float, points: int, rho: float, bias: Mapping) -> TruthNoiseScenario:
    """Evenly spaced grid with equal weights."""
    states = np.linspace(low, high, points)
    return TruthNoiseScenario(states, np.full(points, 1.0 / points), rho, _parse_bias(bias, states))


def from_scenario(sc: Scenario, rho: float) -> TruthNoiseScenario:
    """Use a discrete scenario's states, state marginal and bias."""
    return TruthNoiseScenario(sc.states, sc.joint.row_marginal, rho, sc.bias)


def parse_truth_noise(raw: Mapping) -> TruthNoiseScenario:
    """Build from a document with ``rho``, ``bias`` and either ``grid`` or ``states`` (+ ``weights``)."""
    if "rho" not in raw:
        raise ScenarioParseError("missing required key", key="rho")
    rho = raw["rho"]
    if not isinstance(rho, (int, float)) or isinstance(rho, bool):
        raise ScenarioParseError("expected a number", key="rho")
    if "bias" not in raw:
        raise ScenarioParseError("missing required key", key="bias")
    if "grid" in raw:
        spec = raw["grid"].get("uniform") if isinstance(raw["grid"], Mapping) else None
        if not isinstance(spec, Mapping):
            raise ScenarioParseError('expected {"uniform": {"low", "high", "points"}}', key="grid")
        for k in ("low", "high", "points"):
            if k not in spec:
                raise ScenarioParseError("missing", key=f"grid.uniform.{k}")
        return uniform_grid(float(spec["low"]), float(spec["high"]), int(spec["points"]), float(rho), raw["bias"])
    if "states" not in raw:
        raise ScenarioParseError('need "grid" or "states"', key="states")
    states = _number_vector(raw["states"], "states")
    if "weights" in raw:
        weights = _number_vector(raw["weights"], "weights")
    else:
        weights = np.full(states.shape, 1.0 / states.size)
    return TruthNoiseScenario(states, weights, float(rho), _parse_bias(raw["bias"], states))


@dataclass(frozen=True)
class TruthNoiseMoments:
    mean_conflict: float
    var_y: float
    var_theta: float
    cov_y_theta: float
    cov_y_c: float


def moments(tn: TruthNoiseScenario) -> TruthNoiseMoments:
    w, y, th = tn.weights, tn.y, tn.states
    ey, et = w @ y, w @ th
    var_y = float(w @ (y - ey) ** 2)
    cov_yt = float(w @ ((y - ey) * (th - et)))
    return TruthNoiseMoments(
        mean_conflict=float(ey - et),
        var_y=var_y,
        var_theta=float(w @ (th - et) ** 2),
        cov_y_theta=cov_yt,
        cov_y_c=var_y - cov_yt,
    )


def agent_actions(tn: TruthNoiseScenario, kappa: float) -> np.ndarray:
    """Action after each grid signal for an agent with confidence kappa."""
    a = tn.rho + kappa
    return a * tn.y + (1 - a) * (tn.weights @ tn.y)


def belief_variance(tn: TruthNoiseScenario, kappa: float) -> np.ndarray:
    """Var_kappa(y | s) for each grid signal: a (1 - a) (y(s) - E[y])^2 + (1 - a) Var(y).

    It varies with s unless a is 0 or 1, but it enters both sides of every
    incentive constraint for a given signal, so IC depends on beliefs only
    through the preferred actions.
    """
    _check_kappa(tn, kappa)
    a = tn.rho + kappa
    w, y = tn.weights, tn.y
    ey = w @ y
    return a * (1 - a) * (y - ey) ** 2 + (1 - a) * float(w @ (y - ey) ** 2)


def _check_kappa(tn: TruthNoiseScenario, kappa: float):
    lo, hi = tn.kappa_range
    if not lo - 1e-12 <= kappa <= hi + 1e-12:
        raise KappaOutOfRange(f"kappa={kappa} outside [{lo}, {hi}]")


def truth_noise_payoff(tn: TruthNoiseScenario, kappa: float) -> float:
    _check_kappa(tn, kappa)
    mo = moments(tn)
    a = tn.rho + kappa
    return float(-(mo.mean_conflict**2) - mo.var_theta - a * a * mo.var_y + 2 * a * tn.rho * mo.cov_y_theta)


def optimal_kappa(beta: float, rho: float) -> tuple[float, Regime]:
    if beta >= 1:
        return -rho, Regime.CLAMPED_LOW
    if beta <= -(1 - rho) / rho:
        return 1 - rho, Regime.CLAMPED_HIGH
    return -rho * beta, Regime.INTERIOR


@dataclass(frozen=True)
class TruthNoiseSolution:
    beta: float
    kappa_star: float
    payoff: float
    regime: Regime
    classification: Confidence

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "kappa_star": self.kappa_star,
            "payoff": self.payoff,
            "regime": self.regime.value,
            "classification": self.classification.value,
        }


def solve_truth_noise(tn: TruthNoiseScenario) -> TruthNoiseSolution:
    mo = moments(tn)
    if mo.var_y <= 0:
        raise DegenerateBias("Var(y) is zero", key="bias")
    beta = mo.cov_y_c / mo.var_y
    if abs(beta) <= BETA_TOL:
        beta_eff, label = 0.0, Confidence.WELL_CALIBRATED
    else:
        beta_eff = beta
        label = Confidence.UNDERCONFIDENT if beta > 0 else Confidence.OVERCONFIDENT
    kappa, regime = optimal_kappa(beta_eff, tn.rho)
    kappa = kappa + 0.0  # normalize -0.0
    return TruthNoiseSolution(beta, kappa, truth_noise_payoff(tn, kappa), regime, label)


@dataclass(frozen=True, eq=False)
class TruthNoiseTransfers:
    wage: float
    wedge: float
    applies: bool
    kappa: float
    recommendations: np.ndarray
    preferred: np.ndarray
    min_on_path_slack: float
    min_off_path_slack: float
    worst_pair: tuple[int, int] | None

    @property
    def ic_feasible(self) -> bool:
        return min(self.min_on_path_slack, self.min_off_path_slack) >= -1e-9

    def to_dict(self) -> dict:
        return {
            "wage": self.wage,
            "wedge": self.wedge,
            "applies": self.applies,
            "kappa": self.kappa,
            "ic_feasible": self.ic_feasible,
            "min_on_path_slack": self.min_on_path_slack,
            "min_off_path_slack": self.min_off_path_slack,
            "worst_pair": list(self.worst_pair) if self.worst_pair is not None else None,
        }


def truth_noise_ic(tn: TruthNoiseScenario, kappa: float, x, wages):
    """Slacks of the grid incentive constraints for recommendations x(s) paying wages(s).

    Off-path actions pay nothing, so the best off-path deviation is the
    preferred action itself.  Returns (min on-path slack, min off-path slack,
    worst (s, s') pair).
    """
    mu = agent_actions(tn, kappa)
    x = np.asarray(x, dtype=float)
    wages = np.asarray(wages, dtype=float)
    own = wages - (x - mu) ** 2
    # value to type s of mimicking s': wages[s'] - (x[s'] - mu[s])^2
    mimic = wages[None, :] - (x[None, :] - mu[:, None]) ** 2
    slack = own[:, None] - mimic
    np.fill_diagonal(slack, np.inf)
    if slack.size > 1 and np.isfinite(slack).any():
        k = int(np.argmin(slack))
        worst = divmod(k, slack.shape[1])
        on_path = float(slack.flat[k])
    else:
        worst, on_path = None, np.inf
    return on_path, float(own.min()), worst


def truth_noise_transfers(tn: TruthNoiseScenario) -> TruthNoiseTransfers:
    """Flat-wage contract at the optimal confidence with wedge d = -E[c]/2."""
    mo = moments(tn)
    sol = solve_truth_noise(tn)
    d = -mo.mean_conflict / 2
    mu = agent_actions(tn, sol.kappa_star)
    x = mu + d
    wages = np.full(x.shape, d * d)
    on_path, off_path, worst = truth_noise_ic(tn, sol.kappa_star, x, wages)
    return TruthNoiseTransfers(
        wage=d * d,
        wedge=d,
        applies=bool(mo.mean_conflict**2 <= mo.var_y),
        kappa=sol.kappa_star,
        recommendations=x,
        preferred=mu,
        min_on_path_slack=on_path,
        min_off_path_slack=off_path,
        worst_pair=worst,
    )


@dataclass(frozen=True)
class TruthNoiseDelegation:
    delegate: bool
    threshold_rhs: float
    kappa_star: float
    delegation_payoff: float
    centralization_payoff: float
    direct_delegate: bool
    agrees: bool

    def to_dict(self) -> dict:
        return {
            "delegate": self.delegate,
            "threshold_rhs": self.threshold_rhs,
            "kappa_star": self.kappa_star,
            "delegation_payoff": self.delegation_payoff,
            "centralization_payoff": self.centralization_payoff,
            "direct_delegate": self.direct_delegate,
            "agrees": self.agrees,
        }


def truth_noise_delegation(tn: TruthNoiseScenario) -> TruthNoiseDelegation:
    """Threshold rule kappa* >= |E[c]| / sd(y) - rho, cross-checked by direct payoffs."""
    mo = moments(tn)
    if mo.var_y <= 0:
        raise DegenerateBias("Var(y) is zero", key="bias")
    sol = solve_truth_noise(tn)
    rhs = abs(mo.mean_conflict) / np.sqrt(mo.var_y) - tn.rho
    delegate = bool(sol.kappa_star >= rhs)
    central = -mo.var_theta
    direct = bool(sol.payoff >= central)
    return TruthNoiseDelegation(
        delegate=delegate,
        threshold_rhs=float(rhs),
        kappa_star=sol.kappa_star,
        delegation_payoff=sol.payoff,
        centralization_payoff=central,
        direct_delegate=direct,
        agrees=delegate == direct,
    )
