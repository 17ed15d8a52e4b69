"""Deterministic contract optimization and brute-force incentive oracles.

Three related problems share the machinery here:

* the multi-agent deterministic optimum: for every profile, a payment LP
  whose rows say no agent gains by a unilateral action deviation;
* the combinatorial single-agent optimum at a virtual cost scale alpha,
  where one agent controls the whole profile and deviations range over all
  profiles;
* exact set oracles (equilibrium sets, best-response sets, inducible sets)
  computed by direct enumeration, used both by the reductions and as test
  oracles for the LP paths.

Membership tests use ic_tol slack so numerically tied profiles stay in.
"""

from __future__ import annotations

import numpy as np

from .lp import INFEASIBLE, LPModel, solve_lp
from .model import DeterministicContract, Instance, Profile, iter_profiles

DEFAULT_IC_TOL = 1e-7
DEFAULT_FEAS_TOL = 1e-7


def deterministic_value(inst: Instance, contract: DeterministicContract) -> float:
    """Principal value sum_w F_a(w) (r_w - sum_i p_i(w)) of a contract."""
    idx = inst.profile_index(contract.profile)
    net = inst.rewards - contract.payments.sum(axis=0)
    return float(inst.f[idx] @ net)


def min_payment_lp(
    inst: Instance, profile: Profile, feas_tol: float = DEFAULT_FEAS_TOL
) -> tuple[np.ndarray, float] | None:
    """Cheapest payments making `profile` an equilibrium, or None.

    Minimizes the expected total payment subject to the per-agent incentive
    rows; infeasibility means the profile is not inducible.  Returns the
    (n_agents, n_outcomes) payment matrix and its expected total.
    """
    n, m = inst.n_agents, inst.n_outcomes
    idx = inst.profile_index(profile)
    f_rec = inst.f[idx]
    model = LPModel(n * m, sense="min")
    obj = np.tile(f_rec, n)
    model.objective = obj
    for i in range(n):
        for dev in range(inst.n_actions[i]):
            diff = f_rec - inst.f[inst.deviation_index(idx, i, dev)]
            coeffs = np.zeros(n * m)
            coeffs[i * m : (i + 1) * m] = diff
            rhs = float(inst.costs[i][profile[i]] - inst.costs[i][dev])
            model.add_constraint(coeffs, ">=", rhs)
    sol = solve_lp(model, feas_tol=feas_tol)
    if sol.status == INFEASIBLE:
        return None
    payments = sol.x.reshape(n, m)
    payments = np.where(payments < 0, 0.0, payments)  # scrub -0 / roundoff
    return payments, float(obj @ sol.x)


def solve_deterministic(
    inst: Instance, feas_tol: float = DEFAULT_FEAS_TOL
) -> tuple[DeterministicContract, float]:
    """Optimal deterministic contract by full profile enumeration.

    Ties break toward the lexicographically smallest profile.  The value is
    never negative: the all-free-action profile with zero payments is always
    an equilibrium.
    """
    best: tuple[float, DeterministicContract] | None = None
    exp_rewards = inst.expected_rewards
    for profile in iter_profiles(inst):
        res = min_payment_lp(inst, profile, feas_tol=feas_tol)
        if res is None:
            continue
        payments, total = res
        value = float(exp_rewards[inst.profile_index(profile)] - total)
        if best is None or value > best[0]:
            best = (value, DeterministicContract(profile, payments))
    assert best is not None, "a valid instance always has an inducible profile"
    return best[1], best[0]


def solve_single_agent(
    inst: Instance, alpha: float, feas_tol: float = DEFAULT_FEAS_TOL
) -> tuple[Profile, np.ndarray, float]:
    """Optimal combinatorial single-agent contract at virtual cost scale alpha.

    One agent chooses the whole profile at cost alpha * c(a); deviations
    range over every profile.  Returns (profile, outcome payments, value),
    ties lexicographic.
    """
    if alpha < 0:
        raise ValueError("virtual cost scale must be nonnegative")
    m = inst.n_outcomes
    costs = inst.profile_costs
    exp_rewards = inst.expected_rewards
    best: tuple[float, Profile, np.ndarray] | None = None
    for profile in iter_profiles(inst):
        idx = inst.profile_index(profile)
        model = LPModel(m, sense="min")
        model.objective = inst.f[idx].copy()
        for dev_idx in range(inst.n_profiles):
            diff = inst.f[idx] - inst.f[dev_idx]
            rhs = alpha * float(costs[idx] - costs[dev_idx])
            model.add_constraint(diff, ">=", rhs)
        sol = solve_lp(model, feas_tol=feas_tol)
        if sol.status == INFEASIBLE:
            continue
        payment = np.where(sol.x < 0, 0.0, sol.x)
        value = float(exp_rewards[idx] - sol.objective)
        if best is None or value > best[0]:
            best = (value, profile, payment)
    assert best is not None, "the all-free profile is always a best response"
    return best[1], best[2], best[0]


def equilibrium_set(
    inst: Instance, payments: np.ndarray, ic_tol: float = DEFAULT_IC_TOL
) -> frozenset[Profile]:
    """Exact equilibrium set of a payment scheme, by enumeration.

    A profile is in the set iff for every agent and every action deviation
    the incentive inequality holds within ic_tol.
    """
    payments = np.asarray(payments, dtype=float)
    if payments.shape != (inst.n_agents, inst.n_outcomes):
        raise ValueError(f"payments must have shape {(inst.n_agents, inst.n_outcomes)}")
    ok = np.ones(inst.n_profiles, dtype=bool)
    ranks = np.arange(inst.n_profiles)
    for i in range(inst.n_agents):
        exp_pay = inst.f @ payments[i]  # per profile
        digits = inst.action_digits(i)
        util = exp_pay - inst.costs[i][digits]
        for dev in range(inst.n_actions[i]):
            dev_ranks = ranks + (dev - digits) * inst.strides[i]
            ok &= util >= util[dev_ranks] - ic_tol
    return frozenset(inst.profile_of_index(int(r)) for r in np.nonzero(ok)[0])


def best_response_set(
    inst: Instance, payment: np.ndarray, alpha: float, ic_tol: float = DEFAULT_IC_TOL
) -> frozenset[Profile]:
    """Profiles maximizing F_a . p - alpha c(a), within ic_tol of the max."""
    payment = np.asarray(payment, dtype=float)
    if payment.shape != (inst.n_outcomes,):
        raise ValueError(f"payment must have shape {(inst.n_outcomes,)}")
    utils = inst.f @ payment - alpha * inst.profile_costs
    cutoff = utils.max() - ic_tol
    return frozenset(inst.profile_of_index(int(r)) for r in np.nonzero(utils >= cutoff)[0])


def inducible_deterministic(
    inst: Instance, feas_tol: float = DEFAULT_FEAS_TOL
) -> frozenset[Profile]:
    """Profiles some deterministic contract can incentivize."""
    return frozenset(
        profile
        for profile in iter_profiles(inst)
        if min_payment_lp(inst, profile, feas_tol=feas_tol) is not None
    )
