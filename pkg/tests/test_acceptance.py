"""Acceptance gate: one test per criterion, each recording a pass/fail line."""

import time

import numpy as np
import pytest

from beliefdesign.binary import solve_binary
from beliefdesign.delegation import delegation_decision, posterior_mean_variance, var_signal
from beliefdesign.design import Method, conflict_is_constant, feasibility_search, ideal_deviation, payoff_gain, solve_design
from beliefdesign.errors import HypothesisViolated
from beliefdesign.generators import random_scenario, random_truth_noise, small_conflict_scenario
from beliefdesign.model import conflict_moments
from beliefdesign.oracle import pairwise_improvement, scan_contracts, scan_kappa, scan_polytope, scan_tau, simulate_truth_noise
from beliefdesign.stochastic_order import Confidence
from beliefdesign.transfers import solve_with_transfers, transfers_hypothesis, verify_ic, well_calibrated_benchmark
from beliefdesign.truthnoise import solve_truth_noise, truth_noise_delegation, truth_noise_payoff, truth_noise_transfers

from conftest import THIRD, record_acceptance, scenario


def additive_variant(sc, shift=1.5):
    return scenario(sc.states, sc.f, {"affine": {"intercept": shift, "slope": 1.0}})


def mixed_instances(rng, count, sizes, additive_every=5):
    """Random scenarios with every k-th rebuilt on an additive (constant-conflict) bias."""
    out = []
    for k in range(count):
        n, m = sizes(rng)
        sc = random_scenario(rng, n, m)
        out.append(additive_variant(sc) if k % additive_every == 0 else sc)
    return out


def test_criterion_1_worked_example():
    start = time.perf_counter()
    sc = scenario([0, 10], [[0.4, 0.1], [0.1, 0.4]], {"affine": {"intercept": 3, "slope": THIRD}})
    b = solve_binary(sc)
    d = delegation_decision(sc)
    elapsed = time.perf_counter() - start
    checks = {
        "tau_interior=0.3": abs(b.tau_star_interior - 0.3) <= 1e-12,
        "tau_bar=0.1": abs(b.tau_upper - 0.1) <= 1e-12,
        "tau*=0.1": abs(b.tau_star - 0.1) <= 1e-12,
        "U_D=-17.89": abs(d.delegation_payoff - (-17.89)) <= 0.005,
        "U_C=-25": d.centralization_payoff == -25.0,
        "delegate": d.delegate,
        "runtime<1s": elapsed < 1.0,
    }
    ok = all(checks.values())
    detail = f"tau*_int={b.tau_star_interior:.6g} tau*={b.tau_star:.6g} U_D={d.delegation_payoff:.6f} U_C={d.centralization_payoff} {elapsed * 1e3:.1f} ms"
    if not ok:
        detail += " failed: " + ",".join(k for k, v in checks.items() if not v)
    record_acceptance(1, "worked example reproduction", ok, detail)
    assert ok, detail


def test_criterion_2_binary_trichotomy():
    rng = np.random.default_rng(20)
    start = time.perf_counter()
    wrong_sign = off_grid = 0
    tags = {c: 0 for c in Confidence}
    for k in range(1000):
        sc = random_scenario(rng, 2, 2)
        if k % 10 == 0:
            sc = additive_variant(sc)
        b = solve_binary(sc)
        gap = (sc.states[1] - sc.states[0]) - (sc.y[1] - sc.y[0])
        expected = Confidence.WELL_CALIBRATED if abs(gap) <= 1e-10 else (Confidence.OVERCONFIDENT if gap > 0 else Confidence.UNDERCONFIDENT)
        wrong_sign += b.classification is not expected
        tags[b.classification] += 1
        scan = scan_tau(sc, 10_001)
        off_grid += abs(scan.best_point - b.tau_star) > scan.resolution
    elapsed = time.perf_counter() - start
    ok = wrong_sign == 0 and off_grid == 0 and elapsed < 10
    counts = " ".join(f"{c.value}={n}" for c, n in tags.items() if n)
    detail = f"1000 instances ({counts}); sign mismatches={wrong_sign}, grid mismatches={off_grid}, {elapsed:.2f} s"
    record_acceptance(2, "classification trichotomy + tau-grid oracle", ok, detail)
    assert ok, detail


def test_criterion_3_excess_variance_both_directions():
    rng = np.random.default_rng(30)
    instances = mixed_instances(rng, 200, lambda r: tuple(r.integers(2, 6, size=2)))
    iff_violations = margin_violations = constant = 0
    by_method = {}
    for sc in instances:
        sol = solve_design(sc)
        is_constant = conflict_is_constant(sc)
        constant += is_constant
        zero_excess = sol.payoff_terms.excess_variance <= 1e-9
        if zero_excess != is_constant:
            iff_violations += 1
            by_method[sol.method.value] = by_method.get(sol.method.value, 0) + 1
        if not is_constant:
            margin = pairwise_improvement(sc).best_value
            if not (margin > 0 and payoff_gain(sc, sol) >= margin - 1e-12):
                margin_violations += 1
    ok = iff_violations == 0 and margin_violations == 0
    detail = (
        f"{len(instances)} instances ({constant} constant-conflict); "
        f"'excess_variance(g*)<=1e-9 iff constant' violated on {iff_violations} {by_method}; "
        f"oracle-margin violations={margin_violations}"
    )
    record_acceptance(3, "excess variance vanishes iff constant conflict", ok, detail)
    assert ok, detail


def test_criterion_4_tphi_construction():
    failures = []
    count = 0
    for shape in [(3, 3), (4, 4)]:
        for direction, tag in [(-1, Confidence.OVERCONFIDENT), (1, Confidence.UNDERCONFIDENT)]:
            rng = np.random.default_rng(40 + shape[0] + direction)
            for _ in range(25):
                sc = small_conflict_scenario(rng, *shape, direction=direction)
                count += 1
                cc = conflict_moments(sc).conditional_conflict
                monotone = np.all(np.diff(cc) < 0) if direction < 0 else np.all(np.diff(cc) > 0)
                sol = solve_design(sc)
                err = np.max(np.abs(sol.delta_star.delta - ideal_deviation(sc).delta))
                if feasibility_search(sc) is None or sol.method is not Method.T_PHI or err > 1e-8 or not monotone or sol.classification.tag is not tag:
                    failures.append((shape, direction, sol.method.value, err, sol.classification.tag.value))
    ok = not failures
    detail = f"{count} instances (3x3, 4x4; decreasing and increasing conflict); failures={len(failures)}"
    record_acceptance(4, "t^phi construction", ok, detail)
    assert ok, (detail, failures[:5])


def test_criterion_5_solver_vs_oracle():
    rng = np.random.default_rng(50)
    shapes = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 5), (5, 2), (3, 4), (4, 3), (4, 4), (2, 8), (8, 2), (3, 5)]
    worst_excess = -np.inf
    worst_gap = 0.0
    failures = 0
    methods = {}
    for n, m in shapes:
        for _ in range(2):
            sc = random_scenario(rng, n, m)
            sol = solve_design(sc)
            methods[sol.method.value] = methods.get(sol.method.value, 0) + 1
            scan = scan_polytope(sc, budget=100_000, seed=int(rng.integers(1 << 31)))
            excess = scan.best_value - sol.payoff
            worst_excess = max(worst_excess, excess)
            worst_gap = max(worst_gap, sol.duality_gap)
            failures += excess > 1e-6 or sol.duality_gap > 1e-8
    ok = failures == 0
    detail = f"{2 * len(shapes)} instances {methods}; max(oracle - solver)={worst_excess:.2e}, max gap={worst_gap:.2e}"
    record_acceptance(5, "solver vs oracle (n*m<=16, 1e5 samples)", ok, detail)
    assert ok, detail


def test_criterion_6_transfers():
    rng = np.random.default_rng(60)
    total = 0
    not_flat = ic_fail = oracle_better = bench_flat = unsolved = clamped = 0
    oracle_checked = 0
    while total < 300:
        sc = random_scenario(rng, 2, 2)
        lhs, rhs = transfers_hypothesis(sc)
        if lhs > rhs:
            continue
        total += 1
        ec = conflict_moments(sc).mean_conflict
        clamped += solve_binary(sc).clamped
        try:
            c = solve_with_transfers(sc)
        except HypothesisViolated:
            unsolved += 1
            continue
        if not (np.max(np.abs(c.w - 0.25 * ec**2)) <= 1e-10):
            not_flat += 1
        if min(verify_ic(sc, c).slacks) < -1e-9:
            ic_fail += 1
        if oracle_checked < 60:
            oracle_checked += 1
            scan = scan_contracts(sc, tau_points=41, x_points=81)
            if scan.best_value > c.total_payoff + 1e-9:
                oracle_better += 1
        cc = conflict_moments(sc).conditional_conflict
        bench = well_calibrated_benchmark(sc)
        if abs(cc[0] - cc[1]) > 1e-10 and abs(bench.w[0] - bench.w[1]) <= 1e-12:
            bench_flat += 1
    ok = not (not_flat or ic_fail or oracle_better or bench_flat or unsolved)
    detail = (
        f"{total} in-hypothesis instances ({clamped} with clamped confidence); "
        f"wages != E[c]^2/4: {not_flat}, no Case-2 solution: {unsolved}, IC failures: {ic_fail}, "
        f"grid oracle better: {oracle_better}/{oracle_checked}, flat benchmark wages: {bench_flat}"
    )
    record_acceptance(6, "flat wages and IC", ok, detail)
    assert ok, detail


def test_criterion_7_delegation_threshold():
    rng = np.random.default_rng(70)
    varsig_err = 0.0
    interior_disagree = flagged = unflagged = 0
    for _ in range(1000):
        sc = random_scenario(rng, 2, 2)
        varsig_err = max(varsig_err, abs(var_signal(sc) - posterior_mean_variance(sc)))
        r = delegation_decision(sc)
        if not r.threshold_agrees:
            if r.clamped:
                flagged += 1
            else:
                interior_disagree += 1
    ok = varsig_err <= 1e-10 and interior_disagree == 0 and unflagged == 0
    detail = f"1000 instances; max |Var(s) closed - direct|={varsig_err:.1e}; interior disagreements={interior_disagree}; clamped (flagged) disagreements={flagged}"
    record_acceptance(7, "delegation threshold and signal variance", ok, detail)
    assert ok, detail


def test_criterion_8_truth_noise():
    rng = np.random.default_rng(80)
    grid_miss = 0
    b3_mismatch = 0
    b2_applies = b2_ic_fail = 0
    regimes = {}
    instances = [random_truth_noise(rng) for _ in range(500)]
    for tn in instances:
        sol = solve_truth_noise(tn)
        regimes[sol.regime.value] = regimes.get(sol.regime.value, 0) + 1
        scan = scan_kappa(tn, 10_001)
        grid_miss += abs(scan.best_point - sol.kappa_star) > scan.resolution
        d = truth_noise_delegation(tn)
        b3_mismatch += d.delegate != d.direct_delegate
        t = truth_noise_transfers(tn)
        if t.applies:
            b2_applies += 1
            b2_ic_fail += not t.ic_feasible
    worst_z = 0.0
    for k, tn in enumerate(instances[:5]):
        kappa = float(np.linspace(-tn.rho, 1 - tn.rho, 5)[k % 5])
        mc = simulate_truth_noise(tn, kappa, draws=1_000_000, seed=k)
        worst_z = max(worst_z, abs(mc["estimate"] - truth_noise_payoff(tn, kappa)) / mc["std_error"])
    parts = {
        "kappa grid": grid_miss == 0,
        "U closed form vs MC": worst_z <= 3,
        "threshold == direct delegation": b3_mismatch == 0,
        "flat wage IC": b2_ic_fail == 0,
    }
    ok = all(parts.values())
    detail = (
        f"{len(instances)} grids {regimes}; kappa grid misses={grid_miss}; MC worst |z|={worst_z:.2f}; "
        f"delegation mismatches={b3_mismatch}; flat wage IC failures={b2_ic_fail}/{b2_applies} where the hypothesis holds"
    )
    if not ok:
        detail += "; failing parts: " + ", ".join(k for k, v in parts.items() if not v)
    record_acceptance(8, "truth-or-noise", ok, detail)
    assert ok, detail
