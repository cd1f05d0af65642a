"""Brute-force checks of the closed forms and solvers.

Everything here recomputes payoffs from the raw primitives (states, bias,
true joint) instead of calling the solver modules, so agreement is evidence
rather than tautology.  All sampling is seeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotBinary
from .model import Scenario, as_joint
from .truthnoise import TruthNoiseScenario


@dataclass(frozen=True, eq=False)
class OracleResult:
    best_value: float
    best_point: np.ndarray
    resolution: float
    evaluations: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        point = np.asarray(self.best_point)
        return {
            "best_value": self.best_value,
            "best_point": point.tolist() if point.ndim else float(point),
            "resolution": self.resolution,
            "evaluations": self.evaluations,
            **self.extra,
        }


def batch_payoff(f: np.ndarray, states: np.ndarray, y: np.ndarray, beliefs: np.ndarray) -> np.ndarray:
    """Principal's payoff for a stack of belief matrices of shape (B, n, m)."""
    fs = f.sum(axis=0)
    x = np.einsum("i,bij->bj", y, beliefs) / fs
    dev = x[:, None, :] - states[None, :, None]
    return -np.einsum("ij,bij->b", f, dev * dev)


def _payoff(sc: Scenario, g: np.ndarray) -> float:
    return float(batch_payoff(sc.f, sc.states, sc.y, g[None])[0])


def _shard_streams(seed: int, draws: int, shards: int):
    counts = np.full(shards, draws // shards)
    counts[: draws % shards] += 1
    children = np.random.SeedSequence(seed).spawn(shards)
    return [(np.random.default_rng(s), int(k)) for s, k in zip(children, counts) if k > 0]


def _mean_and_se(total: float, total_sq: float, count: int) -> tuple[float, float]:
    mean = total / count
    if count < 2:
        return mean, float("nan")
    var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, float(np.sqrt(var / count))


# -- 2x2 confidence scan ------------------------------------------------------


def scan_tau(sc: Scenario, points: int = 10_001) -> OracleResult:
    """Evaluate the payoff on an even tau grid over the feasible interval."""
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    if points < 3:
        raise ValueError("points must be at least 3")
    f = sc.f
    lo = -min(f[0, 0], f[1, 1], 1 - f[0, 1], 1 - f[1, 0])
    hi = min(f[0, 1], f[1, 0], 1 - f[0, 0], 1 - f[1, 1])
    taus = np.linspace(lo, hi, points)
    pattern = np.array([[1.0, -1.0], [-1.0, 1.0]])
    values = batch_payoff(f, sc.states, sc.y, f[None] + taus[:, None, None] * pattern)
    k = int(np.argmax(values))
    return OracleResult(float(values[k]), np.float64(taus[k]), float(taus[1] - taus[0]), points)


# -- polytope search ----------------------------------------------------------


def _cumulative(g: np.ndarray) -> np.ndarray:
    return np.cumsum(np.cumsum(g, axis=-2), axis=-1)


def _from_cumulative(H: np.ndarray) -> np.ndarray:
    """Invert the double cumulative sum along the last two axes."""
    pad = np.zeros(H.shape[:-2] + (H.shape[-2] + 1, H.shape[-1] + 1))
    pad[..., 1:, 1:] = H
    return pad[..., 1:, 1:] - pad[..., :-1, 1:] - pad[..., 1:, :-1] + pad[..., :-1, :-1]


def _nw_corner(rows: np.ndarray, cols: np.ndarray, row_order, col_order) -> np.ndarray:
    r = rows[row_order].copy()
    c = cols[col_order].copy()
    out = np.zeros((rows.size, cols.size))
    i = j = 0
    while i < r.size and j < c.size:
        q = min(r[i], c[j])
        out[row_order[i], col_order[j]] += q
        r[i] -= q
        c[j] -= q
        if r[i] <= 1e-15:
            i += 1
        if c[j] <= 1e-15:
            j += 1
    return out


def _propose(rng: np.random.Generator, f: np.ndarray, size: int) -> np.ndarray:
    """Mixture of three proposal families, each a candidate belief matrix."""
    n, m = f.shape
    R, C = np.cumsum(f.sum(axis=1)), np.cumsum(f.sum(axis=0))
    F = _cumulative(f)
    low = np.maximum(0.0, R[:, None] + C[None, :] - 1.0)
    high = np.minimum(R[:, None], C[None, :])
    kind = rng.integers(0, 3, size=size)
    out = np.empty((size, n, m))

    # uniform cumulative inside the Frechet box, interior rows/cols only
    H = np.broadcast_to(F, (size, n, m)).copy()
    H[:, :-1, :-1] = rng.uniform(low[:-1, :-1], high[:-1, :-1], size=(size, n - 1, m - 1))
    box = _from_cumulative(H)
    # the same box draw pulled toward f by a random factor
    shrink = rng.uniform(0, 1, size=(size, 1, 1)) ** 2
    pulled = f + shrink * (box - f)

    out[kind == 0] = box[kind == 0]
    out[kind == 1] = pulled[kind == 1]
    rows, cols = f.sum(axis=1), f.sum(axis=0)
    for b in np.flatnonzero(kind == 2):
        vertex = _nw_corner(rows, cols, rng.permutation(n), rng.permutation(m))
        u = rng.uniform() ** 0.5
        out[b] = (1 - u) * f + u * vertex
    return out


def _swap_directions(n: int, m: int) -> np.ndarray:
    """All 2x2 mass swaps (i, i', j, j'); each preserves both marginals."""
    dirs = []
    for i in range(n):
        for i2 in range(i + 1, n):
            for j in range(m):
                for j2 in range(j + 1, m):
                    d = np.zeros((n, m))
                    d[i, j] = d[i2, j2] = 1.0
                    d[i, j2] = d[i2, j] = -1.0
                    dirs.append(d)
    return np.array(dirs)


def _line_search(sc: Scenario, g: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    """Best feasible step along d; returns (step, gain).  Payoff is exactly quadratic in the step."""
    pos, neg = d > 0, d < 0
    hi = np.min(g[neg] / -d[neg]) if neg.any() else np.inf
    lo = -np.min(g[pos] / d[pos]) if pos.any() else -np.inf
    u0 = _payoff(sc, g)
    up, dn = _payoff(sc, g + d), _payoff(sc, g - d)
    a, b = (up - dn) / 2, (up + dn) / 2 - u0
    if b < 0:
        step = float(np.clip(-a / (2 * b), lo, hi))
    else:
        step = hi if a + b * hi >= -(a - b * lo) else lo  # convex or flat: an endpoint
    gain = a * step + b * step * step
    if not np.isfinite(step) or gain <= 0:
        return 0.0, 0.0
    return step, float(gain)


def refine(sc: Scenario, g: np.ndarray, sweeps: int = 500, tol: float = 1e-14) -> tuple[np.ndarray, int, float]:
    """Swap-direction ascent from g; returns (g, evaluations, last sweep gain)."""
    dirs = _swap_directions(sc.n, sc.m)
    g = g.copy()
    evals = 0
    gained = 0.0
    for _ in range(sweeps):
        gained = 0.0
        for d in dirs:
            step, gain = _line_search(sc, g, d)
            evals += 3
            if step:
                g = np.clip(g + step * d, 0.0, None)
                gained += gain
        if gained <= tol:
            break
    return g, evals, gained


def scan_polytope(sc: Scenario, budget: int = 10_000, seed: int = 0, batch: int = 4096) -> OracleResult:
    """Random feasible beliefs (rejection sampled) followed by local refinement of the best one.

    ``best_point`` is the belief matrix.
    """
    rng = np.random.default_rng(seed)
    f = sc.f
    best_value, best_g = _payoff(sc, f), f.copy()
    accepted = 0
    proposed = 0
    while proposed < budget:
        k = min(batch, budget - proposed)
        cand = _propose(rng, f, k)
        proposed += k
        ok = np.all(cand >= 0, axis=(1, 2))
        if not ok.any():
            continue
        cand = cand[ok]
        accepted += cand.shape[0]
        values = batch_payoff(f, sc.states, sc.y, cand)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value, best_g = float(values[i]), cand[i]
    g, evals, last = refine(sc, best_g)
    value = _payoff(sc, g)
    if value < best_value:
        g, value = best_g, best_value
    return OracleResult(
        value, g, float(last), accepted + 1 + evals, extra={"proposed": proposed, "accepted": accepted}
    )


def pairwise_improvement(sc: Scenario) -> OracleResult:
    """Largest gain over U(f) from a single optimally sized 2x2 swap.

    A positive value certifies that f is not optimal and lower-bounds U(g*) - U(f).
    """
    f = sc.f
    best, best_g = 0.0, f.copy()
    dirs = _swap_directions(sc.n, sc.m)
    for d in dirs:
        step, gain = _line_search(sc, f, d)
        if gain > best:
            best, best_g = gain, f + step * d
    return OracleResult(best, best_g, 0.0, 3 * len(dirs))


def simulate_payoff(sc: Scenario, g, draws: int = 1_000_000, seed: int = 0, shards: int = 1) -> dict:
    """Monte Carlo estimate of U(g): draw (theta, s) from f and act on E_g[y | s]."""
    if draws < 1:
        raise ValueError("draws must be positive")
    g = as_joint(g).probs
    f = sc.f
    action = (sc.y @ g) / g.sum(axis=0)
    p = f.ravel() / f.sum()
    total = total_sq = 0.0
    for rng, k in _shard_streams(seed, draws, shards):
        cell = rng.choice(p.size, size=k, p=p)
        i, j = np.divmod(cell, sc.m)
        loss = -((action[j] - sc.states[i]) ** 2)
        total += float(loss.sum())
        total_sq += float((loss * loss).sum())
    est, se = _mean_and_se(total, total_sq, draws)
    return {"estimate": est, "std_error": se, "draws": draws, "seed": seed, "shards": shards}


# -- contracts ----------------------------------------------------------------


def _grid_contract_values(sc: Scenario, tau: float, x1: np.ndarray, x2: np.ndarray):
    """Payoff of each (x1, x2) pair with the cheapest IC wages at confidence tau (-inf if none)."""
    f = sc.f
    g = f + tau * np.array([[1.0, -1.0], [-1.0, 1.0]])
    fs = f.sum(axis=0)
    mu = (sc.y @ g) / g.sum(axis=0)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    upper = X2**2 - X1**2 - 2 * (X2 - X1) * mu[0]
    lower = X2**2 - X1**2 - 2 * (X2 - X1) * mu[1]
    w1 = np.maximum((X1 - mu[0]) ** 2, (X2 - mu[1]) ** 2 - upper)
    w2 = np.maximum((X2 - mu[1]) ** 2, w1 + lower)
    loss1 = np.einsum("i,iab->ab", f[:, 0], (X1[None] - sc.states[:, None, None]) ** 2)
    loss2 = np.einsum("i,iab->ab", f[:, 1], (X2[None] - sc.states[:, None, None]) ** 2)
    value = -(loss1 + loss2 + fs[0] * w1 + fs[1] * w2)
    return np.where(lower <= upper + 1e-12, value, -np.inf), np.stack([w1, w2], axis=-1)


def scan_contracts(sc: Scenario, tau_points: int = 201, x_points: int = 201, zoom: int = 2) -> OracleResult:
    """Grid search over (x1, x2, tau) with minimal IC wages, then ``zoom`` finer passes.

    ``best_point`` is (x1, x2, tau, w1, w2).
    """
    if not sc.is_binary:
        raise NotBinary(sc.joint.shape)
    f = sc.f
    t_lo = -min(f[0, 0], f[1, 1], 1 - f[0, 1], 1 - f[1, 0])
    t_hi = min(f[0, 1], f[1, 0], 1 - f[0, 0], 1 - f[1, 1])
    a = min(sc.states.min(), sc.y.min())
    b = max(sc.states.max(), sc.y.max())
    x_lo, x_hi = np.array([a, a]), np.array([b, b])
    tau_range = (t_lo, t_hi)
    best = (-np.inf, None)
    evals = 0
    res = np.inf
    for _ in range(zoom + 1):
        taus = np.linspace(*tau_range, tau_points)
        x1 = np.linspace(x_lo[0], x_hi[0], x_points)
        x2 = np.linspace(x_lo[1], x_hi[1], x_points)
        for tau in taus:
            values, wages = _grid_contract_values(sc, tau, x1, x2)
            evals += values.size
            k = np.unravel_index(int(np.argmax(values)), values.shape)
            if values[k] > best[0]:
                best = (float(values[k]), np.array([x1[k[0]], x2[k[1]], tau, *wages[k]]))
        res = max(x1[1] - x1[0], x2[1] - x2[0])
        if best[1] is None:
            break
        dx = 2 * res
        dt = 2 * (taus[1] - taus[0])
        x_lo, x_hi = best[1][:2] - dx, best[1][:2] + dx
        tau_range = (max(t_lo, best[1][2] - dt), min(t_hi, best[1][2] + dt))
    point = best[1] if best[1] is not None else np.full(5, np.nan)
    return OracleResult(best[0], point, float(res), evals)


# -- truth or noise -----------------------------------------------------------


def truth_noise_exact(tn: TruthNoiseScenario, kappas) -> np.ndarray:
    """Exact expected payoff by enumerating the joint of (theta, s) on the grid."""
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    w, y, th = tn.weights, tn.y, tn.states
    joint = tn.rho * np.diag(w) + (1 - tn.rho) * np.outer(w, w)
    a = tn.rho + kappas
    x = a[:, None] * y[None, :] + (1 - a[:, None]) * (w @ y)
    dev = x[:, None, :] - th[None, :, None]
    return -np.einsum("ij,kij->k", joint, dev * dev)


def scan_kappa(tn: TruthNoiseScenario, points: int = 10_001) -> OracleResult:
    kappas = np.linspace(-tn.rho, 1 - tn.rho, points)
    values = truth_noise_exact(tn, kappas)
    k = int(np.argmax(values))
    return OracleResult(float(values[k]), np.float64(kappas[k]), float(kappas[1] - kappas[0]), points)


def simulate_truth_noise(
    tn: TruthNoiseScenario, kappa: float, draws: int = 1_000_000, seed: int = 0, shards: int = 1
) -> dict:
    """Monte Carlo payoff of the agent with confidence kappa under the true signal process."""
    w, y, th = tn.weights, tn.y, tn.states
    a = tn.rho + kappa
    action = a * y + (1 - a) * (w @ y)
    total = total_sq = 0.0
    for rng, k in _shard_streams(seed, draws, shards):
        state = rng.choice(w.size, size=k, p=w)
        noise = rng.choice(w.size, size=k, p=w)
        signal = np.where(rng.uniform(size=k) < tn.rho, state, noise)
        loss = -((action[signal] - th[state]) ** 2)
        total += float(loss.sum())
        total_sq += float((loss * loss).sum())
    est, se = _mean_and_se(total, total_sq, draws)
    return {"estimate": est, "std_error": se, "draws": draws, "seed": seed, "shards": shards}


def simulate_belief_variance(tn: TruthNoiseScenario, kappa: float, draws: int = 200_000, seed: int = 0) -> dict:
    """Per-signal sample variance of y under the agent's beliefs, with standard errors."""
    w, y = tn.weights, tn.y
    a = tn.rho + kappa
    rng = np.random.default_rng(seed)
    signal = rng.choice(w.size, size=draws, p=w)
    other = rng.choice(w.size, size=draws, p=w)
    state = np.where(rng.uniform(size=draws) < a, signal, other)
    values = y[state]
    var = np.full(w.size, np.nan)
    se = np.full(w.size, np.nan)
    for s in range(w.size):
        v = values[signal == s]
        if v.size > 2:
            var[s] = v.var(ddof=1)
            # delta-method standard error of a sample variance
            m4 = np.mean((v - v.mean()) ** 4)
            se[s] = np.sqrt(max(m4 - var[s] ** 2, 0.0) / v.size)
    return {"variance": var, "std_error": se}
