"""Joint belief and contract design for the 2x2 model.

The principal recommends action ``x_i`` after signal ``s_i`` and pays ``w_i``
when it is taken; any other action pays nothing.  With agent preferred
actions ``mu_i = E_tau[y | s_i]`` the four incentive constraints reduce to

    w_2 - w_1 <= x_2^2 - x_1^2 - 2 (x_2 - x_1) mu_1     (signal 1, on path)
    w_1       >= (x_1 - mu_1)^2                          (signal 1, off path)
    w_2 - w_1 >= x_2^2 - x_1^2 - 2 (x_2 - x_1) mu_2     (signal 2, on path)
    w_2       >= (x_2 - mu_2)^2                          (signal 2, off path)

When both off-path constraints bind the principal's problem separates:
beliefs minimize the variance of ``mu - E_f[theta|s]`` (the no-transfer
problem, so its optimal confidence carries over) and each recommendation is
the midpoint ``(E_f[theta|s_i] + mu_i) / 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .binary import beliefs_at, solve_binary
from .errors import HypothesisViolated, NotBinary
from .model import Scenario, conditional_means, conflict_moments, posterior_means

IC_TOL = 1e-9


class Case(str, enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"


@dataclass(frozen=True, eq=False)
class ContractSolution:
    x: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    tau: float
    case_tag: Case
    total_payoff: float
    clamped: bool = False

    @property
    def flat(self) -> bool:
        return bool(abs(self.w[0] - self.w[1]) <= 1e-10)

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "w": [float(v) for v in self.w],
            "mu": [float(v) for v in self.mu],
            "tau": self.tau,
            "case": self.case_tag.value,
            "total_payoff": self.total_payoff,
            "clamped": self.clamped,
            "flat_wages": self.flat,
        }


@dataclass(frozen=True)
class ICReport:
    on_path_1: float
    off_path_1: float
    on_path_2: float
    off_path_2: float
    tolerance: float = IC_TOL

    @property
    def slacks(self) -> tuple[float, float, float, float]:
        return (self.on_path_1, self.off_path_1, self.on_path_2, self.off_path_2)

    @property
    def satisfied(self) -> bool:
        return min(self.slacks) >= -self.tolerance

    @property
    def violations(self) -> list[str]:
        names = ("on_path_1", "off_path_1", "on_path_2", "off_path_2")
        return [k for k, v in zip(names, self.slacks) if v < -self.tolerance]

    def to_dict(self) -> dict:
        return {
            "on_path_1": self.on_path_1,
            "off_path_1": self.off_path_1,
            "on_path_2": self.on_path_2,
            "off_path_2": self.off_path_2,
            "satisfied": self.satisfied,
        }


def verify_ic(sc: Scenario, contract: ContractSolution, tol: float = IC_TOL) -> ICReport:
    """Slack of each incentive constraint (negative means violated).

    The agent's conditional variance is common to both sides of every
    constraint, so only the squared distances to ``mu`` matter.
    """
    x, w, mu = contract.x, contract.w, contract.mu
    return ICReport(
        on_path_1=float((w[0] - (x[0] - mu[0]) ** 2) - (w[1] - (x[1] - mu[0]) ** 2)),
        off_path_1=float(w[0] - (x[0] - mu[0]) ** 2),
        on_path_2=float((w[1] - (x[1] - mu[1]) ** 2) - (w[0] - (x[0] - mu[1]) ** 2)),
        off_path_2=float(w[1] - (x[1] - mu[1]) ** 2),
        tolerance=tol,
    )


def binding_case(x, mu) -> Case:
    mid = 0.5 * (mu[0] + mu[1])
    if x[0] > mid:
        return Case.CASE1
    if x[1] < mid:
        return Case.CASE3
    return Case.CASE2


def minimal_wages(x, mu) -> np.ndarray | None:
    """Cheapest non-negative wages meeting all four constraints, or None.

    The feasible set is defined by lower bounds and bounds on ``w_2 - w_1``,
    so it has a componentwise least element.
    """
    x1, x2 = x
    lo1, lo2 = (x1 - mu[0]) ** 2, (x2 - mu[1]) ** 2
    upper = x2**2 - x1**2 - 2 * (x2 - x1) * mu[0]
    lower = x2**2 - x1**2 - 2 * (x2 - x1) * mu[1]
    if lower > upper + 1e-12:
        return None
    w1 = max(lo1, lo2 - upper)
    w2 = max(lo2, w1 + lower)
    return np.array([w1, w2])


def contract_payoff(sc: Scenario, x, w) -> float:
    """-sum_i f_S(s_i) (E_f[(x_i - theta)^2 | s_i] + w_i)."""
    x = np.asarray(x, dtype=float)
    loss = np.sum(sc.f * (x[None, :] - sc.states[:, None]) ** 2)
    return float(-(loss + sc.joint.col_marginal @ np.asarray(w, dtype=float)))


def transfers_hypothesis(sc: Scenario) -> tuple[float, float]:
    """(|E_f[c]|, posterior-mean spread); transfers are solved when lhs <= rhs."""
    post = posterior_means(sc)
    return abs(conflict_moments(sc).mean_conflict), float(post[1] - post[0])


def solve_with_transfers(sc: Scenario) -> ContractSolution:
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    lhs, rhs = transfers_hypothesis(sc)
    if lhs > rhs:
        raise HypothesisViolated(
            f"|E_f[c]| = {lhs:.6g} exceeds the posterior-mean spread {rhs:.6g}", lhs=lhs, rhs=rhs
        )
    b = solve_binary(sc)
    mu = conditional_means(beliefs_at(sc, b.tau_star), sc.y)
    post = posterior_means(sc)
    x = 0.5 * (post + mu)
    w = 0.25 * (mu - post) ** 2
    case = binding_case(x, mu)
    if case is not Case.CASE2:
        # only reachable with clamped confidence; the off-path-binding solution is not IC here
        raise HypothesisViolated(
            f"optimal recommendations fall in {case.value}, outside the solved regime", lhs=lhs, rhs=rhs
        )
    return ContractSolution(
        x=x, w=w, mu=mu, tau=b.tau_star, case_tag=case, total_payoff=contract_payoff(sc, x, w), clamped=b.clamped
    )


def well_calibrated_benchmark(sc: Scenario) -> ContractSolution:
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    post = posterior_means(sc)
    mu = conditional_means(sc.joint, sc.y)
    x = 0.5 * (post + mu)
    w = 0.25 * conflict_moments(sc).conditional_conflict ** 2
    return ContractSolution(
        x=x, w=w, mu=mu, tau=0.0, case_tag=binding_case(x, mu), total_payoff=contract_payoff(sc, x, w)
    )
