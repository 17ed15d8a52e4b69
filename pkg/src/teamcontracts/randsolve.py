"""Randomized contracts via the linearized relaxation with payment recovery.

The quadratic randomized-contract program is linearized by substituting
x[i, a, w] = mu[a] * pi[i, a, w] and adding cap rows x <= M mu[a] so the
division recovering pi is always safe.  The relaxation is solved over the
full profile set (no inducibility filtering), payments are recovered by
x / mu on the support, and the result is audited against the exact
incentive constraints of the original program.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detsolve import solve_deterministic, solve_single_agent
from .lp import OPTIMAL, LPModel, solve_lp
from .model import Instance, RandomizedContract

MU_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class RandLPConfig:
    """Relaxation parameters: payment-mass cap M and tolerances."""

    M: float
    feas_tol: float = 1e-7
    ic_tol: float = 1e-7

    def __post_init__(self):
        if not (np.isfinite(self.M) and self.M > 0):
            raise ValueError(f"payment cap M must be positive and finite, got {self.M}")


@dataclass(frozen=True)
class RandSolveReport:
    """Solve result plus the audits that certify it.

    value_recomputed re-evaluates the recovered contract against the exact
    objective; it matches lp_value up to mass below MU_ZERO_TOL.  The bound
    chain single_agent_virtual <= det_baseline <= lp_value (+tolerances)
    holds whenever M dominates the optimal deterministic payments.
    """

    lp_value: float
    contract: RandomizedContract
    ic_slacks: dict = field(repr=False)
    value_recomputed: float
    det_baseline: float
    single_agent_virtual: float
    config: RandLPConfig

    @property
    def min_ic_slack(self) -> float:
        return min(self.ic_slacks.values())


def _x_index(inst: Instance, i: int, a: int, w: int) -> int:
    return inst.n_profiles + (i * inst.n_profiles + a) * inst.n_outcomes + w


def build_lp_randomized(inst: Instance, cfg: RandLPConfig) -> LPModel:
    """Assemble the relaxation: variables mu(a) and x[i, a, w].

    Rows, in order: one incentive row per (agent, recommended action,
    deviation); one cap row x <= M mu per (agent, profile, outcome); one
    normalization equality row.  All variables are nonnegative.
    """
    n, m, P = inst.n_agents, inst.n_outcomes, inst.n_profiles
    n_vars = P + n * P * m
    model = LPModel(n_vars, sense="max")
    obj = np.zeros(n_vars)
    obj[:P] = inst.expected_rewards
    for i in range(n):
        for a in range(P):
            for w in range(m):
                obj[_x_index(inst, i, a, w)] = -inst.f[a, w]
    model.objective = obj

    ranks = np.arange(P)
    for i in range(n):
        digits = inst.action_digits(i)
        for rec in range(inst.n_actions[i]):
            group = ranks[digits == rec]
            for dev in range(inst.n_actions[i]):
                coeffs = np.zeros(n_vars)
                cost_gap = float(inst.costs[i][dev] - inst.costs[i][rec])
                for a in group:
                    dev_a = inst.deviation_index(int(a), i, dev)
                    coeffs[_x_index(inst, i, int(a), 0) : _x_index(inst, i, int(a), m)] = (
                        inst.f[a] - inst.f[dev_a]
                    )
                    coeffs[a] = cost_gap
                model.add_constraint(coeffs, ">=", 0.0)

    for i in range(n):
        for a in range(P):
            for w in range(m):
                coeffs = np.zeros(n_vars)
                coeffs[_x_index(inst, i, a, w)] = 1.0
                coeffs[a] = -cfg.M
                model.add_constraint(coeffs, "<=", 0.0)

    norm = np.zeros(n_vars)
    norm[:P] = 1.0
    model.add_constraint(norm, "=", 1.0)
    return model


def verify_randomized(
    inst: Instance, contract: RandomizedContract, ic_tol: float = 1e-7
) -> tuple[float, float, dict]:
    """Exact audit of a randomized contract.

    Returns (value, min_slack, slacks) where slacks maps
    (agent, recommended action, deviation) to the incentive slack
    U_i(rec) - U_i(rec -> dev); the contract is incentive compatible iff
    min_slack >= -ic_tol.  The ic_tol argument only labels the audit; the
    slacks themselves are exact.
    """
    del ic_tol  # membership decisions are left to the caller
    mu, pi = contract.mu, contract.pi
    net = inst.rewards[None, :] - pi.sum(axis=0)
    value = float(np.sum(mu * np.sum(inst.f * net, axis=1)))

    slacks: dict = {}
    ranks = np.arange(inst.n_profiles)
    for i in range(inst.n_agents):
        digits = inst.action_digits(i)
        mu_marg = np.bincount(digits, weights=mu, minlength=inst.n_actions[i])
        exp_by_dev = {}
        for dev in range(inst.n_actions[i]):
            dev_ranks = ranks + (dev - digits) * inst.strides[i]
            pay = np.sum(pi[i] * inst.f[dev_ranks], axis=1)  # E[pi | play dev]
            exp_by_dev[dev] = np.bincount(digits, weights=mu * pay, minlength=inst.n_actions[i])
        for rec in range(inst.n_actions[i]):
            truthful = exp_by_dev[rec][rec] - mu_marg[rec] * inst.costs[i][rec]
            for dev in range(inst.n_actions[i]):
                deviating = exp_by_dev[dev][rec] - mu_marg[rec] * inst.costs[i][dev]
                slacks[(i, rec, dev)] = float(truthful - deviating)
    return value, min(slacks.values()), slacks


def solve_randomized(
    inst: Instance,
    cfg: RandLPConfig,
    det_baseline: float | None = None,
) -> RandSolveReport:
    """Solve the relaxation, recover a feasible randomized contract, audit it.

    Recovery divides x by mu wherever mu exceeds MU_ZERO_TOL; the cap rows
    bound x / mu by M so nothing meaningful is lost below the cutoff.
    """
    model = build_lp_randomized(inst, cfg)
    sol = solve_lp(model, feas_tol=cfg.feas_tol)
    if sol.status != OPTIMAL:
        raise RuntimeError(
            f"relaxation reported {sol.status}; valid instances always admit "
            "a feasible point (uniform free recommendation, zero payments)"
        )
    P, n, m = inst.n_profiles, inst.n_agents, inst.n_outcomes
    mu = np.where(sol.x[:P] < 0, 0.0, sol.x[:P])
    x = np.where(sol.x[P:] < 0, 0.0, sol.x[P:]).reshape(n, P, m)
    pi = np.zeros_like(x)
    support = mu > MU_ZERO_TOL
    pi[:, support, :] = x[:, support, :] / mu[None, support, None]
    contract = RandomizedContract(mu, pi)
    value, _, slacks = verify_randomized(inst, contract)
    if det_baseline is None:
        _, det_baseline = solve_deterministic(inst, feas_tol=cfg.feas_tol)
    _, _, single_virtual = solve_single_agent(inst, inst.n_agents, feas_tol=cfg.feas_tol)
    return RandSolveReport(
        lp_value=float(sol.objective),
        contract=contract,
        ic_slacks=slacks,
        value_recomputed=value,
        det_baseline=float(det_baseline),
        single_agent_virtual=float(single_virtual),
        config=cfg,
    )
