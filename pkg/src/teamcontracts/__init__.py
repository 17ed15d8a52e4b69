"""Contract design for teams of hidden-action agents.

Core entry points:

* model        -- instances, contracts, validation, document formats
* lp           -- the built-in dense simplex engine
* detsolve     -- deterministic optimum, single-agent virtual-cost optimum,
                  equilibrium / best-response / inducibility oracles
* randsolve    -- the linearized randomized-contract relaxation + recovery
* reduction    -- payment splitting, contract lifting, linear contracts,
                  welfare analytics
* bayes        -- discrete-type Bayesian instances, relaxation, affine
                  contracts, brute force, audits
* generators   -- worst-case fixtures and seeded random instances
* cli          -- the command-line frontend
"""

from .model import (
    DeterministicContract,
    Instance,
    ParameterError,
    ParseError,
    RandomizedContract,
    Ratio,
    ValidationError,
    enumerate_profiles,
    parse_instance,
    serialize_instance,
    validate_instance,
)
from .lp import LPModel, LPSolution, PivotLimitError, solve_lp
from .detsolve import (
    best_response_set,
    equilibrium_set,
    inducible_deterministic,
    min_payment_lp,
    solve_deterministic,
    solve_single_agent,
)
from .randsolve import RandLPConfig, RandSolveReport, solve_randomized, verify_randomized
from .reduction import (
    WelfareReport,
    lift_single_to_multi,
    linear_contract,
    split_payment,
    welfare_report,
)
from .bayes import (
    BayesAudit,
    BayesDeterministicContract,
    BayesianInstance,
    BayesRandomizedContract,
    BayesWelfareReport,
    affine_contract,
    bayes_welfare,
    brute_force_bayes_deterministic,
    solve_bayesian_randomized,
    validate_bayesian,
    verify_bayes,
)
from . import generators

__all__ = [
    "BayesAudit",
    "BayesDeterministicContract",
    "BayesRandomizedContract",
    "BayesWelfareReport",
    "BayesianInstance",
    "DeterministicContract",
    "Instance",
    "LPModel",
    "LPSolution",
    "ParameterError",
    "ParseError",
    "PivotLimitError",
    "RandLPConfig",
    "RandSolveReport",
    "RandomizedContract",
    "Ratio",
    "ValidationError",
    "WelfareReport",
    "affine_contract",
    "bayes_welfare",
    "best_response_set",
    "brute_force_bayes_deterministic",
    "enumerate_profiles",
    "equilibrium_set",
    "generators",
    "inducible_deterministic",
    "lift_single_to_multi",
    "linear_contract",
    "min_payment_lp",
    "parse_instance",
    "serialize_instance",
    "solve_bayesian_randomized",
    "solve_deterministic",
    "solve_lp",
    "solve_randomized",
    "solve_single_agent",
    "split_payment",
    "validate_bayesian",
    "validate_instance",
    "verify_bayes",
    "verify_randomized",
    "welfare_report",
]

__version__ = "0.1.0"
