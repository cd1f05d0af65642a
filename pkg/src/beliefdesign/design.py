"""General n x m belief design.

The payoff depends on beliefs only through the agent's actions
``E_g[y | s_j]``, and because signal frequencies are fixed these actions are
linear in ``g``.  The problem is therefore a concave quadratic program over
the transportation polytope of couplings of ``f``'s marginals.

Solution strategy, in order:

1. 2x2 instances use the closed form from :mod:`beliefdesign.binary`.
2. If the expected conflict is constant across signals, ``f`` itself is
   optimal.
3. Otherwise look for weights ``phi`` on the simplex for which the
   constructive transformation ``t_phi`` is feasible; when found it attains
   the unconstrained ideal response and is optimal.
4. Failing that, run pairwise conditional gradient over the polytope.  The
   linear subproblem has a rank-one objective ``y_i * v_j`` and is solved
   exactly by the comonotone (north-west corner) coupling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .binary import BinarySolution, beliefs_at, solve_binary
from .errors import ConvergenceFailure
from .model import (
    JointDistribution,
    PayoffTerms,
    Scenario,
    agent_actions,
    as_joint,
    conflict_moments,
    conditional_means,
    payoff_terms,
    posterior_means,
    principal_payoff,
)
from .stochastic_order import (
    ConfidenceClass,
    TransformationMatrix,
    concordance_compare,
    transformation_increment,
)

SLACK_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    gap_tolerance: float = 1e-8
    max_iterations: int = 100_000
    foc_tolerance: float = 1e-8
    constant_tolerance: float = 1e-10


class Method(str, enum.Enum):
    CLOSED_FORM_BINARY = "ClosedFormBinary"
    T_PHI = "TPhiConstruction"
    FALLBACK_QP = "FallbackQP"


@dataclass(frozen=True, eq=False)
class ResponseDeviation:
    """delta[j] = E_g[y | s_j] - E_f[y | s_j]."""

    delta: np.ndarray

    def to_list(self) -> list:
        return [float(v) for v in self.delta]


@dataclass(frozen=True, eq=False)
class PhiWeights:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 1 or np.any(phi < -1e-12) or abs(phi.sum() - 1) > 1e-9:
            raise ValueError("phi must lie on the probability simplex")
        phi = np.clip(phi, 0, None)
        object.__setattr__(self, "phi", phi / phi.sum())

    @classmethod
    def uniform(cls, size: int) -> PhiWeights:
        return cls(np.full(size, 1.0 / size))


def response_deviation(sc: Scenario, g) -> ResponseDeviation:
    return ResponseDeviation(agent_actions(sc, g) - conditional_means(sc.joint, sc.y))


def ideal_deviation(sc: Scenario) -> ResponseDeviation:
    """Deviation that makes the agent act as if his conflict were constant."""
    cm = conflict_moments(sc)
    return ResponseDeviation(cm.mean_conflict - cm.conditional_conflict)


def conflict_is_constant(sc: Scenario, tol: float = 1e-10) -> bool:
    cm = conflict_moments(sc)
    return bool(np.max(np.abs(cm.conditional_conflict - cm.mean_conflict)) <= tol)


def foc_residual(sc: Scenario, delta: ResponseDeviation) -> float:
    """Largest violation of equal (deviation + conditional conflict) across adjacent signals."""
    level = delta.delta + conflict_moments(sc).conditional_conflict
    return float(np.max(np.abs(np.diff(level))))


def _partial_conflict_sums(sc: Scenario) -> np.ndarray:
    """sum_{j<=l} f_S(s_j) (E_f[c|s_j] - E_f[c]) for l = 1..m-1."""
    cm = conflict_moments(sc)
    terms = sc.joint.col_marginal * (cm.conditional_conflict - cm.mean_conflict)
    return np.cumsum(terms)[:-1]


def construct_t_phi(sc: Scenario, phi: PhiWeights) -> TransformationMatrix:
    sums = _partial_conflict_sums(sc)
    dy = np.diff(sc.y)
    return TransformationMatrix(np.outer(phi.phi / dy, sums))


def _phi_lp(sc: Scenario):
    """Max-min slack of the cell constraints over phi; returns (phi, slack)."""
    n, m = sc.n, sc.m
    f = sc.f.ravel()
    sums = _partial_conflict_sums(sc)
    dy = np.diff(sc.y)
    basis = []
    for k in range(n - 1):
        t = np.zeros((n - 1, m - 1))
        t[k] = sums / dy[k]
        basis.append(transformation_increment(t).ravel())
    E = np.array(basis).T  # (n*m, n-1): cell increments per unit phi_k
    ones = np.ones((n * m, 1))
    # slack <= f + E phi  and  slack <= 1 - f - E phi
    A_ub = np.vstack([np.hstack([-E, ones]), np.hstack([E, ones])])
    b_ub = np.concatenate([f, 1 - f])
    A_eq = np.hstack([np.ones((1, n - 1)), np.zeros((1, 1))])
    c = np.zeros(n)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * (n - 1) + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        return None, -np.inf
    return res.x[:-1], float(res.x[-1])


def feasibility_search(sc: Scenario, tol: float = SLACK_TOL) -> PhiWeights | None:
    """Find phi with t_phi feasible, or None."""
    if conflict_is_constant(sc):
        return PhiWeights.uniform(sc.n - 1)
    phi, slack = _phi_lp(sc)
    if phi is None or slack < -tol:
        return None
    phi = np.clip(phi, 0, None)
    return PhiWeights(phi / phi.sum())


def comonotone_coupling(rows, cols, col_order) -> np.ndarray:
    """North-west corner coupling of ``rows`` with ``cols`` taken in ``col_order``.

    This is the vertex of the transportation polytope that pairs low states
    with the earliest columns of ``col_order``.
    """
    rows = np.asarray(rows, dtype=float)
    cols = np.asarray(cols, dtype=float)
    out = np.zeros((rows.size, cols.size))
    r = rows.copy()
    c = cols[list(col_order)].copy()
    i = j = 0
    while i < rows.size and j < cols.size:
        q = min(r[i], c[j])
        out[i, col_order[j]] += q
        r[i] -= q
        c[j] -= q
        if r[i] <= 0:
            i += 1
        if c[j] <= 0:
            j += 1
    return out


def linear_maximizer(rows, cols, row_scores, col_scores) -> np.ndarray:
    """Exact maximizer of sum_ij row_scores[i] col_scores[j] h[i, j] over couplings.

    ``row_scores`` must be non-decreasing (true for the bias function).
    """
    order = np.argsort(np.asarray(col_scores), kind="stable")
    return comonotone_coupling(rows, cols, order)


@dataclass(frozen=True, eq=False)
class FallbackResult:
    g: np.ndarray
    gap: float
    iterations: int
    active_atoms: int


def maximize_payoff(sc: Scenario, config: SolverConfig = SolverConfig(), start=None) -> FallbackResult:
    """Pairwise conditional gradient for max U(g) over the fixed-marginal polytope.

    ``start`` is any feasible coupling (default: the true distribution).
    Raises ConvergenceFailure if the duality gap is still above tolerance
    after ``config.max_iterations`` steps.
    """
    fs = sc.joint.col_marginal
    rows = sc.joint.row_marginal
    y = sc.y
    post = posterior_means(sc)
    start = sc.f if start is None else as_joint(start).probs

    def actions(g):
        return (y @ g) / fs

    atoms = [np.array(start)]
    atom_actions = [actions(start)]
    weights = [1.0]
    index: dict[tuple, int] = {}
    x = atom_actions[0].copy()
    gap = np.inf
    it = 0
    for it in range(1, config.max_iterations + 1):
        # dU/dx_j = -2 f_S(j) (x_j - post_j); score is minus half of that
        score = fs * (x - post)
        order = tuple(int(k) for k in np.argsort(-(x - post), kind="stable"))
        k_new = index.get(order)
        if k_new is None:
            vertex = comonotone_coupling(rows, fs, order)
            atoms.append(vertex)
            atom_actions.append(actions(vertex))
            weights.append(0.0)
            k_new = len(atoms) - 1
            index[order] = k_new
        a_new = atom_actions[k_new]
        gap = 2.0 * float(score @ (x - a_new))
        if gap <= config.gap_tolerance:
            break
        active = [k for k, w in enumerate(weights) if w > 0]
        k_away = max(active, key=lambda k: float(score @ atom_actions[k]))
        direction = a_new - atom_actions[k_away]
        slope = -2.0 * float(score @ direction)
        curvature = float(fs @ direction**2)
        if curvature <= 0:
            # away atom coincides with the new vertex in action space
            step = weights[k_away]
        else:
            step = min(slope / (2.0 * curvature), weights[k_away])
        weights[k_new] += step
        weights[k_away] -= step
        if weights[k_away] <= 1e-15:
            weights[k_new] += weights[k_away]
            weights[k_away] = 0.0
        x = x + step * direction
        if it % 200 == 0:
            w = np.array(weights)
            x = np.einsum("k,kj->j", w, np.array(atom_actions))
    else:
        raise ConvergenceFailure(gap, it)
    w = np.array(weights)
    g = np.einsum("k,kij->ij", w, np.array(atoms))
    g = np.clip(g, 0.0, None)
    return FallbackResult(g=g, gap=max(gap, 0.0), iterations=it, active_atoms=int(np.count_nonzero(w)))


def duality_gap(sc: Scenario, g) -> float:
    """Frank-Wolfe gap at g; an upper bound on max U - U(g)."""
    g = as_joint(g).probs
    fs = sc.joint.col_marginal
    x = (sc.y @ g) / fs
    r = x - posterior_means(sc)
    vertex = linear_maximizer(sc.joint.row_marginal, fs, sc.y, -r)
    return max(0.0, 2.0 * float((fs * r) @ (x - (sc.y @ vertex) / fs)))


@dataclass(frozen=True, eq=False)
class DesignSolution:
    g_star: JointDistribution
    delta_star: ResponseDeviation
    classification: ConfidenceClass
    payoff_terms: PayoffTerms
    method: Method
    foc_residual: float
    phi: PhiWeights | None = None
    binary: BinarySolution | None = None
    duality_gap: float = 0.0
    iterations: int = 0
    interior: bool = True

    @property
    def payoff(self) -> float:
        return self.payoff_terms.payoff

    def to_dict(self) -> dict:
        out = {
            "method": self.method.value,
            "g_star": [[float(v) for v in row] for row in self.g_star.probs],
            "delta_star": self.delta_star.to_list(),
            "classification": self.classification.to_dict(),
            "payoff": self.payoff,
            "payoff_terms": self.payoff_terms.to_dict(),
            "foc_residual": self.foc_residual,
            "interior": self.interior,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
        }
        if self.phi is not None:
            out["phi"] = [float(v) for v in self.phi.phi]
        if self.binary is not None:
            out["binary"] = self.binary.to_dict()
        return out


def _finish(sc, g, method, config, **extra) -> DesignSolution:
    g = JointDistribution(g)
    delta = response_deviation(sc, g)
    cls = extra.pop("classification", None) or concordance_compare(sc.joint, g)
    foc = foc_residual(sc, delta)
    extra.setdefault("duality_gap", duality_gap(sc, g))
    return DesignSolution(
        g_star=g,
        delta_star=delta,
        classification=cls,
        payoff_terms=payoff_terms(sc, g),
        method=method,
        foc_residual=foc,
        interior=foc <= config.foc_tolerance,
        **extra,
    )


def solve_design(sc: Scenario, config: SolverConfig = SolverConfig()) -> DesignSolution:
    if sc.is_binary:
        b = solve_binary(sc)
        g = beliefs_at(sc, b.tau_star)
        cls = ConfidenceClass(b.classification, TransformationMatrix(np.array([[b.tau_star]])))
        return _finish(sc, g, Method.CLOSED_FORM_BINARY, config, classification=cls, binary=b)

    if conflict_is_constant(sc, config.constant_tolerance):
        return _finish(sc, sc.f.copy(), Method.T_PHI, config, phi=PhiWeights.uniform(sc.n - 1))

    phi = feasibility_search(sc)
    if phi is not None:
        g = construct_t_phi(sc, phi).reconstruct(sc.joint)
        return _finish(sc, np.clip(g, 0.0, None), Method.T_PHI, config, phi=phi)

    res = maximize_payoff(sc, config)
    return _finish(sc, res.g, Method.FALLBACK_QP, config, duality_gap=res.gap, iterations=res.iterations)


def payoff_gain(sc: Scenario, sol: DesignSolution) -> float:
    """U(g*) - U(f)."""
    return sol.payoff - principal_payoff(sc, sc.joint)


def floor_representative(sc: Scenario, g) -> tuple[np.ndarray | None, float]:
    """Among beliefs inducing the same actions as ``g``, one that best clears the independence floor.

    Maximizes the smallest cumulative gap ``G(k, l) - F_Theta(k) F_S(l)`` by
    linear programming.  All such beliefs share ``g``'s payoff, so when ``g``
    is optimal so is the result.  Returns (beliefs, slack); the beliefs weakly
    dominate the independent coupling iff slack >= 0.
    """
    n, m = sc.n, sc.m
    rows, cols = sc.joint.row_marginal, sc.joint.col_marginal
    x = agent_actions(sc, g)
    size = n * m + 1
    # g is flattened row-major; the last variable is the slack
    a_eq, b_eq = [], []
    for i in range(n):
        a = np.zeros(size)
        a[i * m : (i + 1) * m] = 1.0
        a_eq.append(a)
        b_eq.append(rows[i])
    for j in range(m):
        a = np.zeros(size)
        a[j : n * m : m] = sc.y
        a_eq.append(a)
        b_eq.append(cols[j] * x[j])
    # y-weighted column sums pin the columns only up to scale, so fix the column masses too
    for j in range(m - 1):
        a = np.zeros(size)
        a[j : n * m : m] = 1.0
        a_eq.append(a)
        b_eq.append(cols[j])
    floor = np.cumsum(np.cumsum(np.outer(rows, cols), axis=0), axis=1)
    a_ub, b_ub = [], []
    for k in range(n - 1):
        for l in range(m - 1):
            a = np.zeros(size)
            for i in range(k + 1):
                a[i * m : i * m + l + 1] = -1.0
            a[-1] = 1.0
            a_ub.append(a)
            b_ub.append(-floor[k, l])
    c = np.zeros(size)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=b_ub or None,
        A_eq=np.array(a_eq),
        b_eq=b_eq,
        bounds=[(0, None)] * (n * m) + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0:
        return None, -np.inf
    return np.clip(res.x[:-1], 0.0, None).reshape(n, m), float(res.x[-1])
