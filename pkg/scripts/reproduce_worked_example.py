"""Reproduce the two-state worked example and compare with the reference numbers."""

from pathlib import Path

from beliefdesign.binary import solve_binary
from beliefdesign.delegation import delegation_decision
from beliefdesign.model import load_scenario, principal_payoff
from beliefdesign.oracle import scan_tau, simulate_payoff
from beliefdesign.binary import beliefs_at

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "worked_example.json"


def main():
    sc = load_scenario(SCENARIO)
    b = solve_binary(sc)
    d = delegation_decision(sc)
    mc = simulate_payoff(sc, beliefs_at(sc, b.tau_star), draws=1_000_000, seed=0)
    rows = [
        ("interior confidence", 0.3, b.tau_star_interior),
        ("upper bound", 0.1, b.tau_upper),
        ("optimal confidence", 0.1, b.tau_star),
        ("delegation payoff", -17.89, d.delegation_payoff),
        ("centralization payoff", -25.0, d.centralization_payoff),
        ("tau-grid argmax", 0.1, float(scan_tau(sc).best_point)),
        ("Monte Carlo payoff", -17.89, mc["estimate"]),
        ("well-calibrated payoff", None, principal_payoff(sc, sc.f)),
    ]
    print(f"{'quantity':<24}{'reference':>12}{'computed':>14}")
    for name, reference, value in rows:
        pub = "" if reference is None else f"{reference:.4g}"
        print(f"{name:<24}{pub:>12}{value:>14.6f}")
    print(f"delegate: {d.delegate}   classification: {b.classification.value}   clamped: {b.clamped}")


if __name__ == "__main__":
    main()
