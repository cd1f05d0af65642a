"""Random sweep over scenario shapes: solver path, classification, and oracle agreement."""

import argparse
import collections
import json

import numpy as np

from beliefdesign.delegation import delegation_decision
from beliefdesign.design import conflict_is_constant, payoff_gain, solve_design
from beliefdesign.generators import random_scenario
from beliefdesign.oracle import pairwise_improvement, scan_polytope


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--max-size", type=int, default=5)
    p.add_argument("--budget", type=int, default=2000, help="oracle samples per instance (0 to skip)")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    methods = collections.Counter()
    tags = collections.Counter()
    zero_excess_nonconstant = 0
    worst_oracle = -np.inf
    min_certified_ratio = np.inf
    delegated = 0
    for _ in range(args.count):
        n, m = rng.integers(2, args.max_size + 1, size=2)
        sc = random_scenario(rng, n, m)
        sol = solve_design(sc)
        methods[sol.method.value] += 1
        tags[sol.classification.tag.value] += 1
        if sol.payoff_terms.excess_variance <= 1e-9 and not conflict_is_constant(sc):
            zero_excess_nonconstant += 1
        margin = pairwise_improvement(sc).best_value
        if margin > 0:
            min_certified_ratio = min(min_certified_ratio, payoff_gain(sc, sol) / margin)
        if args.budget:
            worst_oracle = max(worst_oracle, scan_polytope(sc, args.budget, seed=args.seed).best_value - sol.payoff)
        delegated += delegation_decision(sc, sol).delegate
    print(
        json.dumps(
            {
                "instances": args.count,
                "methods": dict(methods),
                "classification": dict(tags),
                "zero_excess_variance_with_nonconstant_conflict": zero_excess_nonconstant,
                "min_gain_over_certified_margin": min_certified_ratio,
                "max_oracle_minus_solver": worst_oracle,
                "delegated": delegated,
            },
            indent=2,
        )
    )


if __name__ == "__main__":
    main()
