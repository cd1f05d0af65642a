import json
import subprocess
import sys
from pathlib import Path

import pytest

from beliefdesign.cli import SCHEMA, main
from beliefdesign.model import load_scenario, validate_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
WORKED = str(SCENARIOS / "worked_example.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip().startswith("{") else err)


def test_solve_worked_example(capsys):
    code, report, _ = run(capsys, "solve", WORKED)
    assert code == 0
    assert report["schema"] == SCHEMA
    b = report["design"]["binary"]
    assert b["tau_star"] == pytest.approx(0.1) and b["tau_star_interior"] == pytest.approx(0.3)
    assert report["design"]["payoff"] == pytest.approx(-17.889, abs=5e-4)
    assert report["scenario"]["n"] == 2 and len(report["scenario"]["sha256"]) == 64


def test_delegate_worked_example(capsys):
    code, report, _ = run(capsys, "delegate", WORKED)
    d = report["delegation"]
    assert code == 0 and d["delegate"]
    assert d["delegation_payoff"] == pytest.approx(-17.889, abs=5e-4)
    assert d["centralization_payoff"] == -25.0


def test_validate_malformed(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"states": [0, 1], "joint": [[0.5, 0.0], [0.1, 0.4]], "bias": {"table": [0, 1]}}))
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 2
    assert err["key"] == "joint[0][1]"


@pytest.mark.parametrize(
    "argv, code",
    [
        (["transfers", str(SCENARIOS / "small_conflict_3x3.json")], 3),
        (["solve", "missing.json"], 1),
        (["truth-noise", str(SCENARIOS / "truth_noise_uniform.json"), "--kappa", "0.9"], 1),
        (["solve", WORKED, "--budget", "0"], 1),
        (["solve", str(SCENARIOS / "truth_noise_uniform.json")], 1),
    ],
)
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_argparse_errors_are_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", WORKED, "--no-such-flag"])
    assert exc.value.code == 1


def test_convergence_failure_exit(capsys, tmp_path):
    import numpy as np

    from beliefdesign.design import conflict_is_constant, feasibility_search
    from beliefdesign.generators import random_scenario

    rng = np.random.default_rng(11)
    while True:
        sc = random_scenario(rng, 3, 3)
        if feasibility_search(sc) is None and not conflict_is_constant(sc):
            break
    path = tmp_path / "hard.json"
    path.write_text(json.dumps(sc.to_dict()))
    code, _, err = run(capsys, "solve", str(path), "--max-iterations", "1", "--gap-tolerance", "1e-14")
    assert code == 4 and err["error"] == "ConvergenceFailure"


def test_echo_round_trip(capsys):
    _, report, _ = run(capsys, "validate", WORKED)
    assert validate_scenario(report["scenario"]["echo"]).same_instance(load_scenario(WORKED))


def test_relabel_flag(capsys, tmp_path):
    path = tmp_path / "swapped.json"
    path.write_text(json.dumps({"states": [0, 10], "joint": [[0.1, 0.4], [0.4, 0.1]], "bias": {"table": [3, 5]}}))
    assert run(capsys, "validate", str(path))[0] == 2
    code, report, _ = run(capsys, "validate", str(path), "--relabel-signals")
    assert code == 0 and report["scenario"]["signal_permutation"] == [1, 0]


def test_report_is_reproducible(capsys):
    argv = ["report", WORKED, "--oracle-check", "--draws", "20000", "--seed", "3"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second
    assert {"design", "delegation", "transfers", "truthnoise"} <= set(first)
    oracle = first["diagnostics"]["oracle"]
    assert oracle["polytope"]["solver_dominates"]
    assert oracle["contracts"]["solver_minus_oracle"] >= -1e-9


def test_truth_noise_file(capsys):
    code, report, _ = run(capsys, "truth-noise", str(SCENARIOS / "truth_noise_uniform.json"), "--kappa", "0")
    assert code == 0
    assert report["truthnoise"]["payoff_at_kappa"]["payoff"] == pytest.approx(-21.6389, abs=1e-4)
    assert report["truthnoise"]["delegation"]["threshold_rhs"] == pytest.approx(-0.3)


def test_output_file_and_pretty(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["classify", WORKED, "--output", str(out), "--pretty"]) == 0
    text = out.read_text()
    assert "\n  " in text
    assert json.loads(text)["classification"]["tag"] == "Overconfident"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "beliefdesign", "classify", WORKED], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["classification"]["tag"] == "Overconfident"
