"""Truth-or-noise sweep: regimes, threshold-vs-direct delegation, and flat-wage IC by grid size."""

import argparse
import collections

import numpy as np

from beliefdesign.generators import random_truth_noise
from beliefdesign.truthnoise import solve_truth_noise, truth_noise_delegation, truth_noise_transfers


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    by_points = collections.defaultdict(lambda: [0, 0])
    disagreements = collections.Counter()
    for _ in range(args.count):
        points = int(rng.integers(2, 12))
        tn = random_truth_noise(rng, points)
        d = truth_noise_delegation(tn)
        if not d.agrees:
            disagreements[solve_truth_noise(tn).regime.value] += 1
        t = truth_noise_transfers(tn)
        if t.applies:
            by_points[points][0] += 1
            by_points[points][1] += t.ic_feasible
    print("threshold vs direct disagreements by regime:", dict(disagreements) or "none")
    print(f"{'grid points':>12}{'hypothesis holds':>18}{'flat wage IC':>14}")
    for points in sorted(by_points):
        held, ic = by_points[points]
        print(f"{points:>12}{held:>18}{ic:>14}")


if __name__ == "__main__":
    main()
