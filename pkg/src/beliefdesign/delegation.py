"""Delegate to the optimal agent, or centralize and act on the prior?

Centralization yields ``-Var_f(theta)``.  The direct comparison against the
designed agent's payoff is authoritative.  For 2x2 scenarios the closed-form
confidence threshold is also reported; it relies on the optimum being
interior and may disagree when the optimal confidence is clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .binary import determinant, solve_binary
from .design import DesignSolution, SolverConfig, solve_design
from .errors import NotBinary
from .model import Scenario, conflict_moments, posterior_means, state_variance


@dataclass(frozen=True)
class DelegationReport:
    delegate: bool
    delegation_payoff: float
    centralization_payoff: float
    threshold_rhs: float | None = None
    tau_star_interior: float | None = None
    var_signal: float | None = None
    threshold_agrees: bool | None = None
    clamped: bool | None = None

    def to_dict(self) -> dict:
        return {
            "delegate": self.delegate,
            "delegation_payoff": self.delegation_payoff,
            "centralization_payoff": self.centralization_payoff,
            "threshold_rhs": self.threshold_rhs,
            "tau_star_interior": self.tau_star_interior,
            "var_signal": self.var_signal,
            "threshold_agrees": self.threshold_agrees,
            "clamped": self.clamped,
        }


def posterior_mean_variance(sc: Scenario) -> float:
    """Var_f(E_f[theta | s]) computed directly, any shape."""
    fs = sc.joint.col_marginal
    post = posterior_means(sc)
    return float(fs @ (post - fs @ post) ** 2)


def var_signal(sc: Scenario) -> float:
    """Closed form |f|^2 (theta_2 - theta_1)^2 / (f_S(s_1) f_S(s_2)) for 2x2 scenarios."""
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    fs = sc.joint.col_marginal
    det = determinant(sc)
    return float(det**2 / (fs[0] * fs[1]) * (sc.states[1] - sc.states[0]) ** 2)


def delegation_threshold(sc: Scenario) -> float:
    """Smallest optimal confidence for which delegation pays (2x2, interior optimum)."""
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    fs = sc.joint.col_marginal
    det = determinant(sc)
    mean_c = conflict_moments(sc).mean_conflict
    dy = sc.y[1] - sc.y[0]
    dtheta = sc.states[1] - sc.states[0]
    return float(fs[0] * fs[1] * mean_c**2 / (det * dy * dtheta) - det)


def delegation_decision(
    sc: Scenario, design: DesignSolution | None = None, config: SolverConfig = SolverConfig()
) -> DelegationReport:
    """Direct payoff comparison, plus the threshold diagnostic when the scenario is 2x2."""
    if design is None:
        design = solve_design(sc, config)
    central = -state_variance(sc)
    delegate = bool(design.payoff >= central)
    if not sc.is_binary:
        return DelegationReport(delegate=delegate, delegation_payoff=design.payoff, centralization_payoff=central)
    b = design.binary or solve_binary(sc)
    rhs = delegation_threshold(sc)
    return DelegationReport(
        delegate=delegate,
        delegation_payoff=design.payoff,
        centralization_payoff=central,
        threshold_rhs=rhs,
        tau_star_interior=b.tau_star_interior,
        var_signal=var_signal(sc),
        threshold_agrees=bool((b.tau_star_interior >= rhs) == delegate),
        clamped=b.clamped,
    )


def delegation_margin(sc: Scenario, design: DesignSolution) -> float:
    """U(g*) + Var_f(theta); non-negative iff delegation is chosen."""
    return float(design.payoff + state_variance(sc))

