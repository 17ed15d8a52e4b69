"""Bridging multi-agent contracts and single-agent contracts via virtual costs.

Scaling every cost by the number of agents turns a single-agent best
response into a multi-agent equilibrium once the payment is split equally,
so single-agent contracts at virtual scale n lift to multi-agent contracts
of the same value.  The same mechanism powers a simple linear contract
paying each agent r_w / (n (1 + delta)), whose value is at least
delta/(1+delta) times the n(1+delta)-virtual social welfare.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detsolve import DEFAULT_FEAS_TOL, DEFAULT_IC_TOL, best_response_set, equilibrium_set
from .model import DeterministicContract, Instance, ParameterError, Profile


@dataclass(frozen=True)
class WelfareReport:
    """Virtual social welfare across cost scales.

    vsw[alpha] = max_a (F_a . r - alpha c(a)); sw is the scale-1 value;
    beta is the worst cost-to-surplus ratio over profiles with positive
    surplus (math.inf when no profile qualifies but some cost is positive).
    """

    sw: float
    vsw: dict
    beta: float
    argmax: dict


def split_payment(payment: np.ndarray, n: int) -> np.ndarray:
    """Divide an outcome payment equally among n agents."""
    payment = np.asarray(payment, dtype=float)
    if n < 1:
        raise ParameterError("agent count must be positive")
    return np.tile(payment / n, (n, 1))


def lift_single_to_multi(
    inst: Instance,
    profile: Profile,
    payment: np.ndarray,
    ic_tol: float = DEFAULT_IC_TOL,
) -> DeterministicContract:
    """Lift a single-agent contract at virtual scale n to a multi-agent one.

    Requires the profile to be a best response to the payment under costs
    scaled by n; the equal split then makes it an equilibrium, preserving
    the principal's value exactly.
    """
    n = inst.n_agents
    if profile not in best_response_set(inst, payment, n, ic_tol=ic_tol):
        raise ValueError(
            f"profile {inst.profile_label(profile)} is not a best response to the "
            f"payment at virtual cost scale {n}"
        )
    shares = split_payment(payment, n)
    contract = DeterministicContract(profile, shares)
    assert profile in equilibrium_set(inst, shares, ic_tol=ic_tol)
    return contract


def virtual_social_welfare(inst: Instance, alpha: float) -> tuple[float, Profile]:
    """max_a (F_a . r - alpha c(a)) and its first (lex) argmax profile."""
    if alpha < 0:
        raise ParameterError("virtual cost scale must be nonnegative")
    scores = inst.expected_rewards - alpha * inst.profile_costs
    best = int(np.argmax(scores))
    return float(scores[best]), inst.profile_of_index(best)


def linear_contract(
    inst: Instance, delta: float, feas_tol: float = DEFAULT_FEAS_TOL
) -> tuple[DeterministicContract, float]:
    """The share contract p(w) = r_w / (1 + delta), lifted to the agents.

    Picks the principal-best profile among the virtual-scale-n best
    responses (lexicographic ties) and returns the lifted contract along
    with the guarantee delta/(1+delta) * vsw at scale n(1+delta), which the
    contract's value always meets.
    """
    if delta <= 0:
        raise ParameterError("delta must be strictly positive")
    n = inst.n_agents
    payment = inst.rewards / (1.0 + delta)
    responses = best_response_set(inst, payment, n)
    values = inst.f @ (inst.rewards - payment)
    best_profile = None
    best_value = -np.inf
    for profile in sorted(responses):
        v = float(values[inst.profile_index(profile)])
        if v > best_value:
            best_profile, best_value = profile, v
    contract = lift_single_to_multi(inst, best_profile, payment)
    vsw, _ = virtual_social_welfare(inst, n * (1.0 + delta))
    guarantee = delta / (1.0 + delta) * vsw
    assert best_value >= guarantee - feas_tol
    return contract, guarantee


def welfare_report(
    inst: Instance, scales, feas_tol: float = DEFAULT_FEAS_TOL
) -> WelfareReport:
    """Evaluate the virtual social welfare on a grid of cost scales."""
    scales = [float(s) for s in scales]
    if any(s < 0 for s in scales):
        raise ParameterError("scales must be nonnegative")
    vsw, argmax = {}, {}
    for s in scales:
        vsw[s], argmax[s] = virtual_social_welfare(inst, s)
    sw, _ = virtual_social_welfare(inst, 1.0)

    surplus = inst.expected_rewards - inst.profile_costs
    eligible = surplus > feas_tol
    if np.any(eligible):
        beta = float(np.max(inst.profile_costs[eligible] / surplus[eligible]))
    elif float(inst.profile_costs.max()) > 0:
        beta = float("inf")
    else:
        beta = 0.0
    return WelfareReport(sw=sw, vsw=vsw, beta=beta, argmax=argmax)
