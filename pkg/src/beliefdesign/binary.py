"""Closed-form belief design for two states and two signals.

Every feasible belief is ``f + tau * b b^T`` with ``b = (1, -1)``; ``tau`` is
the agent's level of confidence.  The payoff is strictly concave in ``tau``
so the optimum is the interior first-order solution clamped to the feasible
interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotBinary
from .model import Scenario, principal_payoff
from .stochastic_order import Confidence

EQUALITY_TOL = 1e-10
B_OUTER = np.array([[1.0, -1.0], [-1.0, 1.0]])


def _require_binary(sc: Scenario):
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)


def determinant(sc: Scenario) -> float:
    _require_binary(sc)
    f = sc.f
    return float(f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0])


def beliefs_at(sc: Scenario, tau: float) -> np.ndarray:
    """The 2x2 belief matrix f + tau * b b^T."""
    _require_binary(sc)
    return sc.f + tau * B_OUTER


def tau_bounds(sc: Scenario) -> tuple[float, float]:
    _require_binary(sc)
    f = sc.f
    lower = -min(f[0, 0], 1 - f[0, 1], 1 - f[1, 0], f[1, 1])
    upper = min(1 - f[0, 0], f[0, 1], f[1, 0], 1 - f[1, 1])
    return float(lower), float(upper)


def classify_binary(sc: Scenario, tol: float = EQUALITY_TOL) -> Confidence:
    """Sign of (theta_2 - theta_1) - (y_2 - y_1) decides the optimal agent."""
    _require_binary(sc)
    gap = (sc.states[1] - sc.states[0]) - (sc.y[1] - sc.y[0])
    if abs(gap) <= tol:
        return Confidence.WELL_CALIBRATED
    return Confidence.OVERCONFIDENT if gap > 0 else Confidence.UNDERCONFIDENT


@dataclass(frozen=True)
class BinarySolution:
    tau_lower: float
    tau_upper: float
    tau_star_interior: float
    tau_star: float
    det_f: float
    classification: Confidence
    payoff: float
    clamped: bool

    def to_dict(self) -> dict:
        return {
            "tau_lower": self.tau_lower,
            "tau_upper": self.tau_upper,
            "tau_star_interior": self.tau_star_interior,
            "tau_star": self.tau_star,
            "det_f": self.det_f,
            "classification": self.classification.value,
            "payoff": self.payoff,
            "clamped": self.clamped,
        }


def solve_binary(sc: Scenario) -> BinarySolution:
    lower, upper = tau_bounds(sc)
    det = determinant(sc)
    label = classify_binary(sc)
    if label is Confidence.WELL_CALIBRATED:
        interior = 0.0
    else:
        c = sc.conflict
        interior = float(-(c[1] - c[0]) / (sc.y[1] - sc.y[0]) * det)
    tau = min(max(interior, lower), upper)
    return BinarySolution(
        tau_lower=lower,
        tau_upper=upper,
        tau_star_interior=interior,
        tau_star=tau,
        det_f=det,
        classification=label,
        payoff=principal_payoff(sc, beliefs_at(sc, tau)),
        clamped=tau != interior,
    )
