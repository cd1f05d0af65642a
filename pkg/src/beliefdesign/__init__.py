"""Optimal agent beliefs: confidence design, classification, transfers and delegation."""

from .binary import BinarySolution, solve_binary
from .delegation import DelegationReport, delegation_decision, var_signal
from .design import DesignSolution, Method, SolverConfig, solve_design
from .errors import (
    BeliefDesignError,
    ConvergenceFailure,
    HypothesisViolated,
    NotBinary,
    ValidationError,
)
from .model import JointDistribution, Scenario, load_scenario, principal_payoff, validate_scenario
from .stochastic_order import Confidence, concordance_compare, extract_transformation
from .transfers import ContractSolution, solve_with_transfers
from .truthnoise import TruthNoiseScenario, solve_truth_noise

__version__ = "0.1.0"
