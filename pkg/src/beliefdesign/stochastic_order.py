"""Concordance order on joint distributions with common marginals.

Any ``g`` with the same marginals as ``f`` can be written ``f + D_n^T t D_m``
where ``D_k`` is the first-difference operator and ``t`` collects the
elementary transformations (2x2 mass shifts between adjacent states and
adjacent signals).  Entry ``t[k, l]`` equals the cumulative difference
``sum_{i<=k, j<=l} (g - f)``, so ``g`` dominates ``f`` in the concordance
order exactly when ``t >= 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import MarginalMismatch, ShapeMismatch
from .model import JointDistribution, as_joint

SIGN_TOL = 1e-10
MARGINAL_TOL = 1e-10


class Confidence(str, enum.Enum):
    WELL_CALIBRATED = "WellCalibrated"
    OVERCONFIDENT = "Overconfident"
    UNDERCONFIDENT = "Underconfident"
    UNRANKED = "Unranked"


def difference_operator(k: int) -> np.ndarray:
    """(k-1) x k matrix mapping x to (x1 - x2, ..., x_{k-1} - x_k)."""
    return np.eye(k - 1, k) - np.eye(k - 1, k, 1)


@dataclass(frozen=True, eq=False)
class TransformationMatrix:
    t: np.ndarray

    def reconstruct(self, f) -> np.ndarray:
        f = as_joint(f)
        n, m = f.shape
        return f.probs + difference_operator(n).T @ self.t @ difference_operator(m)

    def to_list(self) -> list:
        return [[float(v) for v in row] for row in self.t]


def transformation_increment(t: np.ndarray) -> np.ndarray:
    """The cell-wise change ``D_n^T t D_m`` induced by ``t`` (shape n x m)."""
    t = np.asarray(t, dtype=float)
    padded = np.zeros((t.shape[0] + 2, t.shape[1] + 2))
    padded[1:-1, 1:-1] = t
    # t[i,j] - t[i,j-1] - t[i-1,j] + t[i-1,j-1] with zero padding
    return padded[1:, 1:] - padded[1:, :-1] - padded[:-1, 1:] + padded[:-1, :-1]


def _check_common_marginals(f: JointDistribution, g: JointDistribution):
    if f.shape != g.shape:
        raise ShapeMismatch(f"shapes differ: {f.shape} vs {g.shape}")
    row_gap = np.max(np.abs(f.row_marginal - g.row_marginal))
    col_gap = np.max(np.abs(f.col_marginal - g.col_marginal))
    if max(row_gap, col_gap) > MARGINAL_TOL:
        raise MarginalMismatch(f"marginals differ (state {row_gap:.3e}, signal {col_gap:.3e})")


def extract_transformation(f, g) -> TransformationMatrix:
    f, g = as_joint(f), as_joint(g)
    _check_common_marginals(f, g)
    cum = np.cumsum(np.cumsum(g.probs - f.probs, axis=0), axis=1)
    return TransformationMatrix(cum[:-1, :-1].copy())


@dataclass(frozen=True, eq=False)
class ConfidenceClass:
    tag: Confidence
    evidence: TransformationMatrix
    # first cell (row-major) whose sign disagrees with the first nonzero cell
    violation: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        out = {"tag": self.tag.value, "t": self.evidence.to_list()}
        if self.violation is not None:
            out["violation"] = list(self.violation)
        return out


def classify_transformation(t: TransformationMatrix, tol: float = SIGN_TOL) -> ConfidenceClass:
    vals = np.where(np.abs(t.t) < tol, 0.0, t.t)
    signs = np.sign(vals)
    if not signs.any():
        return ConfidenceClass(Confidence.WELL_CALIBRATED, t)
    if np.all(signs >= 0):
        return ConfidenceClass(Confidence.OVERCONFIDENT, t)
    if np.all(signs <= 0):
        return ConfidenceClass(Confidence.UNDERCONFIDENT, t)
    flat = signs.ravel()
    lead = flat[np.flatnonzero(flat)[0]]
    k = int(np.flatnonzero(flat == -lead)[0])
    return ConfidenceClass(Confidence.UNRANKED, t, violation=divmod(k, t.t.shape[1]))


def concordance_compare(f, g, tol: float = SIGN_TOL) -> ConfidenceClass:
    """Classify beliefs ``g`` relative to the true distribution ``f``."""
    return classify_transformation(extract_transformation(f, g), tol)


def dominates(g, f, tol: float = SIGN_TOL) -> bool:
    """True iff g weakly dominates f in the concordance order."""
    f, g = as_joint(f), as_joint(g)
    _check_common_marginals(f, g)
    cum = np.cumsum(np.cumsum(g.probs - f.probs, axis=0), axis=1)
    return bool(np.all(cum >= -tol))


def association_floor_check(f, g, tol: float = SIGN_TOL) -> bool:
    """Does ``g`` dominate the independent coupling of f's marginals?"""
    f, g = as_joint(f), as_joint(g)
    _check_common_marginals(f, g)
    return dominates(g, f.product(), tol)


def pearson_correlation(d, states, signal_scores=None) -> float:
    """Correlation of state and signal score under joint pmf ``d``.

    Signal scores default to the column index.
    """
    d = as_joint(d)
    states = np.asarray(states, dtype=float)
    scores = np.arange(d.shape[1], dtype=float) if signal_scores is None else np.asarray(signal_scores, float)
    pr, pc = d.row_marginal, d.col_marginal
    mt, ms = pr @ states, pc @ scores
    cov = states @ d.probs @ scores - mt * ms
    vt = pr @ states**2 - mt**2
    vs = pc @ scores**2 - ms**2
    return float(cov / np.sqrt(vt * vs))
