"""Command-line front end.

Every command reads one scenario file (``-`` for stdin) and writes a JSON
report.  Exit codes: 0 success, 1 usage, 2 validation, 3 precondition or
hypothesis violation, 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import enum
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .delegation import delegation_decision
from .design import DesignSolution, SolverConfig, floor_representative, payoff_gain, solve_design
from .errors import BeliefDesignError, PreconditionError, ScenarioParseError, UsageError
from .model import Scenario, principal_payoff, validate_scenario
from .stochastic_order import association_floor_check
from .transfers import solve_with_transfers, transfers_hypothesis, verify_ic, well_calibrated_benchmark
from .truthnoise import (
    TruthNoiseScenario,
    from_scenario,
    parse_truth_noise,
    solve_truth_noise,
    truth_noise_delegation,
    truth_noise_payoff,
    truth_noise_transfers,
)

SCHEMA = "beliefdesign.report/1"
COMMANDS = ("validate", "solve", "classify", "transfers", "delegate", "truth-noise", "oracle", "report")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for validation errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _read_document(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON ({exc.msg} at line {exc.lineno})", key="<document>") from None


def _is_truth_noise_document(doc) -> bool:
    return isinstance(doc, dict) and "rho" in doc and "joint" not in doc


def _truth_noise_from(doc, sc: Scenario | None, rho: float | None) -> TruthNoiseScenario:
    if _is_truth_noise_document(doc):
        if rho is not None:
            doc = {**doc, "rho": rho}
        return parse_truth_noise(doc)
    section = doc.get("truth_noise") if isinstance(doc, dict) else None
    if rho is None:
        if not isinstance(section, dict) or "rho" not in section:
            raise UsageError('truth-noise needs "rho" (in the file, a "truth_noise" section, or --rho)')
        rho = section["rho"]
        if not isinstance(rho, (int, float)) or isinstance(rho, bool):
            raise ScenarioParseError("expected a number", key="truth_noise.rho")
    return from_scenario(sc, float(rho))


def _hash(echo: dict) -> str:
    canonical = json.dumps(echo, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _scenario_echo(sc: Scenario) -> dict:
    echo = sc.to_dict()
    return {
        "sha256": _hash(echo),
        "n": sc.n,
        "m": sc.m,
        "signal_permutation": list(sc.signal_permutation) if sc.signal_permutation else None,
        "echo": echo,
    }


def _truth_noise_echo(tn: TruthNoiseScenario) -> dict:
    echo = tn.to_dict()
    return {"sha256": _hash(echo), "grid_points": int(tn.states.size), "echo": echo}


def _config(args) -> SolverConfig:
    base = args.tolerance
    defaults = SolverConfig()
    return SolverConfig(
        gap_tolerance=args.gap_tolerance or base or defaults.gap_tolerance,
        max_iterations=args.max_iterations or defaults.max_iterations,
        foc_tolerance=args.foc_tolerance or base or defaults.foc_tolerance,
        constant_tolerance=defaults.constant_tolerance,
    )


def _skipped(exc: BeliefDesignError) -> dict:
    return {"skipped": {"error": type(exc).__name__, "message": str(exc)}}


# -- sections -----------------------------------------------------------------


def _design_section(sc: Scenario, sol: DesignSolution) -> dict:
    out = sol.to_dict()
    out["payoff_gain"] = payoff_gain(sc, sol)
    out["well_calibrated_payoff"] = principal_payoff(sc, sc.joint)
    rep, slack = floor_representative(sc, sol.g_star)
    out["association_floor"] = {
        "solver_beliefs": association_floor_check(sc.joint, sol.g_star),
        "representative_slack": slack,
        "representative": rep,
    }
    return out


def _transfers_section(sc: Scenario) -> dict:
    lhs, rhs = transfers_hypothesis(sc)
    contract = solve_with_transfers(sc)
    bench = well_calibrated_benchmark(sc)
    return {
        "hypothesis": {"abs_mean_conflict": lhs, "posterior_spread": rhs, "holds": bool(lhs <= rhs)},
        "contract": contract.to_dict(),
        "ic": verify_ic(sc, contract).to_dict(),
        "benchmark": bench.to_dict(),
        "benchmark_ic": verify_ic(sc, bench).to_dict(),
    }


def _truth_noise_section(tn: TruthNoiseScenario, kappa: float | None) -> dict:
    out = {
        "solution": solve_truth_noise(tn).to_dict(),
        "transfers": truth_noise_transfers(tn).to_dict(),
        "delegation": truth_noise_delegation(tn).to_dict(),
    }
    if kappa is not None:
        out["payoff_at_kappa"] = {"kappa": kappa, "payoff": truth_noise_payoff(tn, kappa)}
    return out


def _oracle_section(sc: Scenario, sol: DesignSolution, args) -> dict:
    out = {}
    scan = oracle.scan_polytope(sc, budget=args.budget, seed=args.seed)
    out["polytope"] = {
        "best_value": scan.best_value,
        "evaluations": scan.evaluations,
        "solver_minus_oracle": sol.payoff - scan.best_value,
        "solver_dominates": bool(sol.payoff >= scan.best_value - 1e-6),
    }
    mc = oracle.simulate_payoff(sc, sol.g_star, draws=args.draws, seed=args.seed, shards=args.shards)
    mc["z_score"] = (mc["estimate"] - sol.payoff) / mc["std_error"] if mc["std_error"] > 0 else 0.0
    out["monte_carlo"] = mc
    pair = oracle.pairwise_improvement(sc)
    out["pairwise"] = {"certified_gain": pair.best_value, "solver_gain": payoff_gain(sc, sol)}
    if sc.is_binary:
        tau = oracle.scan_tau(sc)
        out["tau_scan"] = {
            "best_tau": float(tau.best_point),
            "best_value": tau.best_value,
            "resolution": tau.resolution,
            "tau_delta": float(tau.best_point) - sol.binary.tau_star,
            "value_delta": sol.payoff - tau.best_value,
        }
    return out


def _contract_oracle_section(sc: Scenario) -> dict:
    contract = solve_with_transfers(sc)
    scan = oracle.scan_contracts(sc, tau_points=61, x_points=121)
    return {
        "best_value": scan.best_value,
        "best_point": scan.best_point.tolist(),
        "solver_minus_oracle": contract.total_payoff - scan.best_value,
    }


def _truth_noise_oracle_section(tn: TruthNoiseScenario, args) -> dict:
    sol = solve_truth_noise(tn)
    scan = oracle.scan_kappa(tn)
    mc = oracle.simulate_truth_noise(tn, sol.kappa_star, draws=args.draws, seed=args.seed, shards=args.shards)
    mc["z_score"] = (mc["estimate"] - sol.payoff) / mc["std_error"] if mc["std_error"] > 0 else 0.0
    return {
        "kappa_scan": {
            "best_kappa": float(scan.best_point),
            "resolution": scan.resolution,
            "kappa_delta": float(scan.best_point) - sol.kappa_star,
            "value_delta": sol.payoff - scan.best_value,
        },
        "monte_carlo": mc,
    }


# -- commands -----------------------------------------------------------------


def run(args) -> dict:
    doc = _read_document(args.input)
    report = {"schema": SCHEMA, "tool_version": __version__, "command": args.command}
    config = _config(args)
    report["diagnostics"] = {
        "tolerances": {
            "gap_tolerance": config.gap_tolerance,
            "foc_tolerance": config.foc_tolerance,
            "constant_tolerance": config.constant_tolerance,
        },
        "max_iterations": config.max_iterations,
        "seed": args.seed,
    }
    cmd = args.command

    if _is_truth_noise_document(doc):
        if cmd not in ("validate", "truth-noise", "oracle", "report"):
            raise UsageError(f"'{cmd}' needs a discrete scenario; this file describes a truth-or-noise grid")
        tn = _truth_noise_from(doc, None, args.rho)
        report["scenario"] = _truth_noise_echo(tn)
        if cmd == "validate":
            report["valid"] = True
            return report
        if cmd in ("truth-noise", "report"):
            report["truthnoise"] = _truth_noise_section(tn, args.kappa)
        if cmd == "oracle" or args.oracle_check:
            report["diagnostics"]["oracle"] = {"truthnoise": _truth_noise_oracle_section(tn, args)}
        return report

    sc = validate_scenario(doc, relabel=args.relabel_signals)
    report["scenario"] = _scenario_echo(sc)
    if cmd == "validate":
        report["valid"] = True
        return report

    if cmd == "truth-noise":
        tn = _truth_noise_from(doc, sc, args.rho)
        report["truthnoise"] = _truth_noise_section(tn, args.kappa)
        if args.oracle_check:
            report["diagnostics"]["oracle"] = {"truthnoise": _truth_noise_oracle_section(tn, args)}
        return report

    if cmd == "transfers":
        report["transfers"] = _transfers_section(sc)
        if args.oracle_check:
            report["diagnostics"]["oracle"] = {"contracts": _contract_oracle_section(sc)}
        return report

    sol = solve_design(sc, config)
    report["diagnostics"]["method"] = sol.method.value
    if cmd == "solve":
        report["design"] = _design_section(sc, sol)
    elif cmd == "classify":
        report["classification"] = sol.classification.to_dict()
    elif cmd == "delegate":
        report["delegation"] = delegation_decision(sc, sol, config).to_dict()
    elif cmd == "report":
        report["design"] = _design_section(sc, sol)
        report["delegation"] = delegation_decision(sc, sol, config).to_dict()
        if sc.is_binary:
            try:
                report["transfers"] = _transfers_section(sc)
            except PreconditionError as exc:
                report["transfers"] = _skipped(exc)
        has_rho = args.rho is not None or "truth_noise" in doc
        if has_rho:
            report["truthnoise"] = _truth_noise_section(_truth_noise_from(doc, sc, args.rho), args.kappa)

    if cmd == "oracle" or args.oracle_check:
        checks = _oracle_section(sc, sol, args)
        if sc.is_binary and cmd in ("oracle", "report"):
            try:
                checks["contracts"] = _contract_oracle_section(sc)
            except PreconditionError as exc:
                checks["contracts"] = _skipped(exc)
        report["diagnostics"]["oracle"] = checks
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="scenario JSON file, or - for stdin")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--pretty", action="store_true", help="indent the JSON report")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, help="default for --gap-tolerance and --foc-tolerance")
    common.add_argument("--gap-tolerance", type=float)
    common.add_argument("--foc-tolerance", type=float)
    common.add_argument("--max-iterations", type=int)
    common.add_argument("--relabel-signals", action="store_true", help="sort signal columns by posterior mean")
    common.add_argument("--oracle-check", action="store_true", help="run brute-force checks and embed the deltas")
    common.add_argument("--budget", type=int, default=10_000, help="polytope samples for the oracle")
    common.add_argument("--draws", type=int, default=1_000_000, help="Monte Carlo draws for the oracle")
    common.add_argument("--shards", type=int, default=1, help="independent Monte Carlo streams")
    common.add_argument("--rho", type=float, help="truth-or-noise precision (overrides the file)")
    common.add_argument("--kappa", type=float, help="also evaluate the truth-or-noise payoff at this confidence")

    parser = _Parser(prog="beliefdesign", description="Optimal agent beliefs and their organizational consequences.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "validate": "check a scenario file",
        "solve": "optimal beliefs and payoff decomposition",
        "classify": "confidence class of the optimal agent",
        "transfers": "joint belief and contract design (2x2)",
        "delegate": "delegation versus centralization",
        "truth-noise": "truth-or-noise environment",
        "oracle": "brute-force cross-checks",
        "report": "every applicable section",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _check_args(args):
    for name in ("budget", "draws", "shards", "max_iterations"):
        value = getattr(args, name)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    for name in ("tolerance", "gap_tolerance", "foc_tolerance"):
        value = getattr(args, name)
        if value is not None and not value > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_args(args)
        report = run(args)
    except BeliefDesignError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        if getattr(exc, "key", None) is not None:
            err["key"] = exc.key
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code
    # diagnostics last
    report["diagnostics"] = report.pop("diagnostics")
    text = json.dumps(report, indent=2 if args.pretty else None, default=_jsonable)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0
