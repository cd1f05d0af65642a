import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beliefdesign.delegation import (
    delegation_decision,
    delegation_margin,
    delegation_threshold,
    posterior_mean_variance,
    var_signal,
)
from beliefdesign.design import solve_design
from beliefdesign.errors import NotBinary
from beliefdesign.model import conditional_means, state_variance

from conftest import binary_scenarios, scenario, scenarios


def test_worked_example(worked_example):
    r = delegation_decision(worked_example)
    assert r.delegation_payoff == pytest.approx(-17.889, abs=5e-4)
    assert r.centralization_payoff == -25.0
    assert r.delegate
    assert r.clamped
    assert var_signal(worked_example) == pytest.approx(9.0)


def test_unbiased_on_average_delegates_at_any_confidence():
    sc = scenario([0, 10], [[0.4, 0.1], [0.1, 0.4]], [1, 9])
    r = delegation_decision(sc)
    assert r.threshold_rhs == pytest.approx(-0.15)
    assert r.delegate


def test_large_bias_centralizes(worked_example):
    sc = scenario([0, 10], worked_example.f, {"affine": {"intercept": 10, "slope": 1}})
    r = delegation_decision(sc)
    assert not r.delegate
    assert r.delegation_payoff < r.centralization_payoff


def test_var_signal_examples():
    sc = scenario([0, 1], [[0.45, 0.05], [0.05, 0.45]], [0, 1])
    assert var_signal(sc) == pytest.approx(0.16)
    assert var_signal(sc) == pytest.approx(posterior_mean_variance(sc), abs=1e-10)
    near_indep = scenario([0, 1], [[0.2500001, 0.2499999], [0.2499999, 0.2500001]], [0, 1])
    assert var_signal(near_indep) == pytest.approx(0.0, abs=1e-12)


def test_threshold_requires_binary():
    sc = scenario([0, 1, 2], [[0.2, 0.1], [0.1, 0.2], [0.1, 0.3]], [0, 1, 2])
    with pytest.raises(NotBinary):
        var_signal(sc)
    r = delegation_decision(sc)
    assert r.threshold_rhs is None and r.delegate in (True, False)


@given(binary_scenarios())
def test_signal_variance_and_total_variance(sc):
    vs = var_signal(sc)
    assert vs >= 0
    assert vs == pytest.approx(posterior_mean_variance(sc), abs=1e-10)
    cond_var = conditional_means(sc.joint, sc.states**2) - conditional_means(sc.joint, sc.states) ** 2
    assert state_variance(sc) - sc.joint.col_marginal @ cond_var == pytest.approx(vs, abs=1e-10)


@given(binary_scenarios())
def test_threshold_agrees_when_interior(sc):
    r = delegation_decision(sc)
    assert r.centralization_payoff == -state_variance(sc)
    if not r.clamped:
        assert r.threshold_agrees


@given(scenarios(), st.floats(0.0, 5.0))
def test_delegation_monotone_in_mean_conflict(sc, shift):
    # shifting y by a constant moves only E[c]^2; delegation can only get less attractive as it grows
    base = sc.y - sc.joint.row_marginal @ (sc.y - sc.states)
    decisions = []
    for k in np.linspace(0, shift, 6):
        variant = scenario(sc.states, sc.f, base + k)
        decisions.append(delegation_decision(variant).delegate)
    assert decisions == sorted(decisions, reverse=True)


@given(scenarios())
def test_margin_sign(sc):
    sol = solve_design(sc)
    assert (delegation_margin(sc, sol) >= 0) == delegation_decision(sc, sol).delegate
