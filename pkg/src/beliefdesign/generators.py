"""Random valid scenarios for property tests and sweeps."""

from __future__ import annotations

import numpy as np

from .design import feasibility_search
from .model import Scenario, validate_scenario
from .truthnoise import TruthNoiseScenario


def _increasing(rng: np.random.Generator, k: int, low: float = 0.0, scale: float = 10.0) -> np.ndarray:
    steps = rng.uniform(0.2, 1.0, size=k)
    steps[0] = 0.0
    out = low + np.cumsum(steps)
    return out / out[-1] * scale if out[-1] > 0 else out


def random_joint(rng: np.random.Generator, states, m: int, floor: float = 1e-3) -> np.ndarray:
    """Positive joint with columns sorted by posterior mean."""
    while True:
        p = rng.dirichlet(np.full(len(states) * m, 0.8)).reshape(len(states), m) + floor
        p /= p.sum()
        post = (states @ p) / p.sum(axis=0)
        order = np.argsort(post)
        if np.all(np.diff(post[order]) > 1e-6 * max(1.0, np.abs(states).max())):
            return p[:, order]


def random_scenario(rng: np.random.Generator, n: int, m: int, bias_scale: float = 1.0) -> Scenario:
    """Random states on [0, 10], random increasing bias table, random positive joint."""
    states = _increasing(rng, n)
    y = rng.normal(0, bias_scale) + _increasing(rng, n, scale=rng.uniform(1.0, 20.0))
    probs = random_joint(rng, states, m)
    return validate_scenario({"states": states.tolist(), "joint": probs.tolist(), "bias": {"table": y.tolist()}})


def random_binary(rng: np.random.Generator) -> Scenario:
    return random_scenario(rng, 2, 2)


def small_conflict_scenario(
    rng: np.random.Generator, n: int, m: int, direction: int = -1, max_halvings: int = 60
) -> Scenario:
    """Scenario with c = direction * eps * (theta + offset), eps shrunk until the t^phi design is feasible.

    ``direction = -1`` makes E_f[c | s] strictly decreasing in s, ``+1`` increasing.
    """
    states = _increasing(rng, n)
    probs = random_joint(rng, states, m, floor=0.02)
    offset = rng.uniform(-2.0, 2.0)
    eps = 0.5
    for _ in range(max_halvings):
        y = states + direction * eps * (states + offset)
        sc = validate_scenario({"states": states.tolist(), "joint": probs.tolist(), "bias": {"table": y.tolist()}})
        if feasibility_search(sc) is not None:
            return sc
        eps /= 2
    raise RuntimeError("could not reach the feasible regime")


def random_truth_noise(rng: np.random.Generator, points: int | None = None) -> TruthNoiseScenario:
    from .model import BiasFunction

    k = points if points is not None else int(rng.integers(2, 12))
    states = _increasing(rng, k)
    weights = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k
    y = rng.normal(0, 3) + _increasing(rng, k, scale=rng.uniform(1.0, 25.0))
    return TruthNoiseScenario(states, weights / weights.sum(), float(rng.uniform(0.05, 0.95)), BiasFunction(y))
