"""Discrete-type Bayesian contract design.

Agents privately observe a type that scales (or in general, redefines)
their action costs and possibly the outcome technology; the principal
commits to per-reported-type-profile recommendations and payments.  The
module provides:

* the typed instance with validation and a per-type-profile embedding into
  the non-Bayesian model;
* exhaustive dominant-strategy / individual-rationality / limited-liability
  audits for deterministic and randomized typed contracts;
* the linearized relaxation of the randomized program (auxiliary variables
  replace the inner maxima in the truthfulness rows) with payment recovery;
* the affine construction paying r_w / (n (1 + delta)) minus the other
  agents' reported costs, which is DSIC and IR but may pay negative amounts;
* a capped brute-force solver for the deterministic optimum, with and
  without limited liability.

Type profiles are ranked lexicographically exactly like action profiles;
audits are vectorized over the type-profile axis so desk-scale instances
with many agents (hence huge profile spaces) remain tractable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lp import INFEASIBLE, OPTIMAL, LPModel, solve_lp
from .model import (
    PROB_TOL,
    Instance,
    ParameterError,
    ParseError,
    ValidationError,
    _frozen,
    parse_document,
    _num,
    _parse_agents,
    _parse_outcomes,
    _parse_prob_row,
    _profile_from_names,
    _req,
)
from .randsolve import MU_ZERO_TOL, RandLPConfig


class UnsupportedInstanceError(ValueError):
    """Instance outside the regime an operation is defined for."""


class EnumerationCapError(RuntimeError):
    """Brute force refused: the assignment space exceeds the cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(
            f"brute force needs {required} action assignments, above the cap {cap}"
        )
        self.required = required
        self.cap = cap


def _strides(sizes) -> tuple[int, ...]:
    out = [1] * len(sizes)
    for i in range(len(sizes) - 2, -1, -1):
        out[i] = out[i + 1] * sizes[i + 1]
    return tuple(out)


def _digit_array(i: int, sizes, strides, total: int) -> np.ndarray:
    block = np.repeat(np.arange(sizes[i]), strides[i])
    return np.tile(block, total // (strides[i] * sizes[i]))


@dataclass(frozen=True, eq=False)
class BayesianInstance:
    """A principal-multi-agent problem with privately known discrete types.

    cost_tables[i][t, a] is agent i's cost for action a under its t-th type;
    f_table holds outcome rows per action profile, either shared across type
    profiles (f_type_independent) or per type profile with shape
    (n_type_profiles, n_profiles, n_outcomes).  With single_dimensional set,
    costs factor as type value times base_costs and f must be shared.
    """

    agent_names: tuple[str, ...]
    action_labels: tuple[tuple[str, ...], ...]
    outcome_labels: tuple[str, ...]
    rewards: np.ndarray
    type_labels: tuple[tuple[str, ...], ...]
    type_values: tuple[tuple[float, ...], ...]
    prior: np.ndarray
    cost_tables: tuple[np.ndarray, ...]
    f_table: np.ndarray
    f_type_independent: bool
    single_dimensional: bool
    base_costs: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "rewards", _frozen(self.rewards))
        object.__setattr__(self, "prior", _frozen(self.prior))
        object.__setattr__(self, "cost_tables", tuple(_frozen(c) for c in self.cost_tables))
        object.__setattr__(self, "f_table", _frozen(self.f_table))
        if self.base_costs is not None:
            object.__setattr__(self, "base_costs", tuple(_frozen(c) for c in self.base_costs))
        expect = (
            (self.n_profiles, self.n_outcomes)
            if self.f_type_independent
            else (self.n_type_profiles, self.n_profiles, self.n_outcomes)
        )
        if self.f_table.shape != expect:
            raise ValueError(f"f_table has shape {self.f_table.shape}, expected {expect}")
        if self.prior.shape != (self.n_type_profiles,):
            raise ValueError("prior length does not match the type-profile count")
        for i, table in enumerate(self.cost_tables):
            if table.shape != (len(self.type_values[i]), len(self.action_labels[i])):
                raise ValueError(f"cost table for agent {i} has the wrong shape")

    @property
    def n_agents(self) -> int:
        return len(self.action_labels)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcome_labels)

    @property
    def n_actions(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_labels)

    @property
    def n_types(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.type_values)

    @cached_property
    def n_profiles(self) -> int:
        return int(np.prod(self.n_actions, dtype=np.int64))

    @cached_property
    def n_type_profiles(self) -> int:
        return int(np.prod(self.n_types, dtype=np.int64))

    @cached_property
    def action_strides(self) -> tuple[int, ...]:
        return _strides(self.n_actions)

    @cached_property
    def type_strides(self) -> tuple[int, ...]:
        return _strides(self.n_types)

    def action_digits(self, i: int) -> np.ndarray:
        return _digit_array(i, self.n_actions, self.action_strides, self.n_profiles)

    def type_digits(self, i: int) -> np.ndarray:
        return _digit_array(i, self.n_types, self.type_strides, self.n_type_profiles)

    def type_profile_index(self, types) -> int:
        return int(sum(t * s for t, s in zip(types, self.type_strides)))

    def type_profile_of_index(self, idx: int) -> tuple[int, ...]:
        out = []
        for stride in self.type_strides:
            d, idx = divmod(idx, stride)
            out.append(d)
        return tuple(out)

    def profile_of_index(self, idx: int) -> tuple[int, ...]:
        out = []
        for stride in self.action_strides:
            d, idx = divmod(idx, stride)
            out.append(d)
        return tuple(out)

    def f_rows(self, lam_codes, prof_codes) -> np.ndarray:
        """Outcome rows F_a^lam for paired arrays of profile ranks."""
        if self.f_type_independent:
            return self.f_table[prof_codes]
        return self.f_table[lam_codes, prof_codes]

    def f_for(self, lam_code: int) -> np.ndarray:
        """The (n_profiles, n_outcomes) outcome table under one type profile."""
        return self.f_table if self.f_type_independent else self.f_table[lam_code]


def validate_bayesian(inst: BayesianInstance) -> list[str]:
    """Invariant violations of a Bayesian instance (empty list = valid)."""
    bad: list[str] = []
    if inst.rewards.size and (inst.rewards.min() < 0 or inst.rewards.max() > 1):
        bad.append("a reward lies outside [0, 1]")
    if inst.prior.min(initial=0.0) < 0:
        bad.append("the prior has a negative entry")
    if abs(float(inst.prior.sum()) - 1.0) > PROB_TOL:
        bad.append(f"the prior sums to {inst.prior.sum():.12g}")
    flat = inst.f_table.reshape(-1, inst.n_outcomes)
    sums = flat.sum(axis=1)
    n_bad = int(np.count_nonzero(np.abs(sums - 1.0) > PROB_TOL))
    if n_bad:
        bad.append(f"{n_bad} outcome distribution rows do not sum to 1")
    if flat.size and flat.min() < 0:
        bad.append("an outcome distribution has a negative probability")
    for i, table in enumerate(inst.cost_tables):
        if table.min(initial=0.0) < 0 or table.max(initial=0.0) > 1:
            bad.append(f"agent {i} has a cost outside [0, 1]")
        for t in range(len(inst.type_values[i])):
            if not np.any(table[t] == 0.0):
                bad.append(f"agent {i}, type {inst.type_labels[i][t]}: no zero-cost action")
    if inst.single_dimensional:
        if not inst.f_type_independent:
            bad.append("single_dimensional requires a type-independent outcome table")
        if inst.base_costs is None:
            bad.append("single_dimensional requires base costs")
        else:
            for i, table in enumerate(inst.cost_tables):
                want = np.outer(np.array(inst.type_values[i]), inst.base_costs[i])
                if not np.array_equal(table, want):
                    bad.append(f"agent {i}: costs are not type value times base cost")
    return bad


def instance_for_types(inst: BayesianInstance, types) -> Instance:
    """The non-Bayesian instance induced by fixing a type profile."""
    lam = inst.type_profile_index(types)
    return Instance(
        agent_names=inst.agent_names,
        action_labels=inst.action_labels,
        costs=tuple(inst.cost_tables[i][types[i]] for i in range(inst.n_agents)),
        outcome_labels=inst.outcome_labels,
        rewards=inst.rewards,
        f=np.array(inst.f_for(lam)),
    )


@dataclass(frozen=True, eq=False)
class BayesDeterministicContract:
    """Per-type-profile recommendation and payments.

    actions[lam] is the recommended profile (per-agent action indices) for
    reported type-profile rank lam; payments[lam, i, w] may be negative only
    when limited liability is waived.
    """

    actions: np.ndarray  # (n_type_profiles, n_agents) ints
    payments: np.ndarray  # (n_type_profiles, n_agents, n_outcomes)

    def __post_init__(self):
        object.__setattr__(self, "actions", _frozen(self.actions, dtype=np.int64))
        object.__setattr__(self, "payments", _frozen(self.payments))

    @property
    def respects_ll(self) -> bool:
        return bool(self.payments.min(initial=0.0) >= 0)


@dataclass(frozen=True, eq=False)
class BayesRandomizedContract:
    """Per-type-profile recommendation distribution and payments."""

    mu: np.ndarray  # (n_type_profiles, n_profiles)
    pi: np.ndarray  # (n_type_profiles, n_agents, n_profiles, n_outcomes)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "pi", _frozen(self.pi))
        if self.mu.min(initial=0.0) < -PROB_TOL:
            raise ValueError("mu has negative entries")
        if np.any(np.abs(self.mu.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError("a recommendation distribution does not sum to 1")
        if self.pi.min(initial=0.0) < 0:
            raise ValueError("randomized payments must be nonnegative")


@dataclass(frozen=True, eq=False)
class BayesAudit:
    """Exhaustive slack evaluation of a typed contract.

    dsic_slacks[i] has shape (n_type_profiles, n_types_i, n_actions_i) for
    deterministic contracts (misreport x action deviation) and
    (n_type_profiles, n_types_i) for randomized ones (deviation policies are
    maximized out).  ir_slacks is expected payment minus cost per
    (type profile, agent); ll_min is the smallest payment entry.
    """

    value: float
    dsic_slacks: tuple[np.ndarray, ...]
    ir_slacks: np.ndarray
    ll_min: float

    @property
    def min_dsic_slack(self) -> float:
        return float(min(arr.min() for arr in self.dsic_slacks))

    @property
    def min_ir_slack(self) -> float:
        return float(self.ir_slacks.min())

    def ok(self, require_ll: bool = True, tol: float = 1e-7) -> bool:
        if self.min_dsic_slack < -tol:
            return False
        if require_ll:
            return self.ll_min >= -tol
        return self.min_ir_slack >= -tol


def _verify_deterministic(inst: BayesianInstance, contract: BayesDeterministicContract) -> BayesAudit:
    T, n = inst.n_type_profiles, inst.n_agents
    actions = np.asarray(contract.actions)
    payments = np.asarray(contract.payments)
    if actions.shape != (T, n) or payments.shape != (T, n, inst.n_outcomes):
        raise ValueError("contract arrays do not match the instance dimensions")
    lam = np.arange(T)
    astr = np.array(inst.action_strides, dtype=np.int64)
    acode = actions @ astr
    f_rec = inst.f_rows(lam, acode)
    exp_pay = np.einsum("tw,tnw->tn", f_rec, payments)
    tdigits = [inst.type_digits(i) for i in range(n)]
    cost_rec = np.stack(
        [inst.cost_tables[i][tdigits[i], actions[:, i]] for i in range(n)], axis=1
    )
    value = float(inst.prior @ (f_rec @ inst.rewards - exp_pay.sum(axis=1)))
    truthful = exp_pay - cost_rec

    slack_arrays = []
    for i in range(n):
        k_t, k_a = inst.n_types[i], inst.n_actions[i]
        slacks = np.empty((T, k_t, k_a))
        for rep in range(k_t):
            lam2 = lam + (rep - tdigits[i]) * inst.type_strides[i]
            base2 = acode[lam2]
            rec2 = actions[lam2, i]
            pay2 = payments[lam2, i, :]
            for dev in range(k_a):
                dev_code = base2 + (dev - rec2) * inst.action_strides[i]
                f_dev = inst.f_rows(lam, dev_code)
                dev_util = np.sum(f_dev * pay2, axis=1) - inst.cost_tables[i][tdigits[i], dev]
                slacks[:, rep, dev] = truthful[:, i] - dev_util
        slack_arrays.append(slacks)
    return BayesAudit(
        value=value,
        dsic_slacks=tuple(slack_arrays),
        ir_slacks=truthful,
        ll_min=float(payments.min()),
    )


def _verify_randomized(inst: BayesianInstance, contract: BayesRandomizedContract) -> BayesAudit:
    T, n, P = inst.n_type_profiles, inst.n_agents, inst.n_profiles
    mu, pi = np.asarray(contract.mu), np.asarray(contract.pi)
    if mu.shape != (T, P) or pi.shape != (T, n, P, inst.n_outcomes):
        raise ValueError("contract arrays do not match the instance dimensions")
    adigits = [inst.action_digits(i) for i in range(n)]
    tdigits = [inst.type_digits(i) for i in range(n)]
    ranks = np.arange(P)

    value = 0.0
    for lam in range(T):
        f = inst.f_for(lam)
        net = inst.rewards[None, :] - pi[lam].sum(axis=0)
        value += inst.prior[lam] * float(mu[lam] @ np.sum(f * net, axis=1))

    # ir_slacks doubles as the truthful per-agent utility table; with
    # nonnegative payments it is nonnegative automatically.
    ir = np.empty((T, n))
    slack_arrays = []
    for i in range(n):
        k_t, k_a = inst.n_types[i], inst.n_actions[i]
        slacks = np.empty((T, k_t))
        for lam in range(T):
            f_true = inst.f_for(lam)
            t_true = tdigits[i][lam]
            costs_i = inst.cost_tables[i][t_true]
            truthful = float(
                mu[lam] @ (np.sum(pi[lam, i] * f_true, axis=1) - costs_i[adigits[i]])
            )
            ir[lam, i] = truthful
            for rep in range(k_t):
                lam2 = lam + (rep - t_true) * inst.type_strides[i]
                marg = np.bincount(adigits[i], weights=mu[lam2], minlength=k_a)
                best = np.full(k_a, -np.inf)
                for dev in range(k_a):
                    dev_ranks = ranks + (dev - adigits[i]) * inst.action_strides[i]
                    pay = np.sum(pi[lam2, i] * f_true[dev_ranks], axis=1)
                    grouped = np.bincount(adigits[i], weights=mu[lam2] * pay, minlength=k_a)
                    np.maximum(best, grouped - marg * costs_i[dev], out=best)
                slacks[lam, rep] = truthful - float(best.sum())
        slack_arrays.append(slacks)
    return BayesAudit(
        value=value,
        dsic_slacks=tuple(slack_arrays),
        ir_slacks=ir,
        ll_min=float(pi.min()),
    )


def verify_bayes(
    inst: BayesianInstance,
    contract: BayesDeterministicContract | BayesRandomizedContract,
    require_ll: bool = True,
    tol: float = 1e-7,
) -> BayesAudit:
    """Audit a typed contract: truthfulness, participation, payment signs.

    The audit itself is exhaustive and exact; require_ll and tol only feed
    the BayesAudit.ok convenience predicate.
    """
    del require_ll, tol
    if isinstance(contract, BayesDeterministicContract):
        return _verify_deterministic(inst, contract)
    if isinstance(contract, BayesRandomizedContract):
        return _verify_randomized(inst, contract)
    raise TypeError(f"unknown contract type {type(contract).__name__}")


def affine_contract(inst: BayesianInstance, delta: float) -> BayesDeterministicContract:
    """The reported-cost-sharing contract at aggressiveness delta.

    Per reported type profile, recommends the profile maximizing the
    n(1+delta)-virtual social welfare and pays each agent
    r_w / (n (1 + delta)) minus the sum of the other agents' reported
    costs.  Truthful and individually rational by construction; payments
    may be negative.  Defined only when the outcome table is shared across
    type profiles.
    """
    if delta <= 0:
        raise ParameterError("delta must be strictly positive")
    if not inst.f_type_independent:
        raise UnsupportedInstanceError(
            "the affine construction requires type-independent outcome distributions"
        )
    T, n, P, m = inst.n_type_profiles, inst.n_agents, inst.n_profiles, inst.n_outcomes
    scale = 1.0 / (n * (1.0 + delta))
    base = (inst.f_table @ inst.rewards) * scale
    adigits = [inst.action_digits(i) for i in range(n)]
    tdigits = [inst.type_digits(i) for i in range(n)]
    actions = np.empty((T, n), dtype=np.int64)
    payments = np.empty((T, n, m))
    chunk = max(1, int(4_000_000) // P)
    for start in range(0, T, chunk):
        lam = np.arange(start, min(start + chunk, T))
        total = np.zeros((len(lam), P))
        for i in range(n):
            total += inst.cost_tables[i][tdigits[i][lam]][:, adigits[i]]
        best = np.argmax(base[None, :] - total, axis=1)
        chosen_cost = np.empty((len(lam), n))
        for i in range(n):
            actions[lam, i] = adigits[i][best]
            chosen_cost[:, i] = inst.cost_tables[i][tdigits[i][lam], actions[lam, i]]
        others = chosen_cost.sum(axis=1, keepdims=True) - chosen_cost
        payments[lam] = scale * inst.rewards[None, None, :] - others[:, :, None]
    return BayesDeterministicContract(actions, payments)


def _assignment_value_lp(
    inst: BayesianInstance,
    acodes: tuple[int, ...],
    require_ll: bool,
    feas_tol: float,
) -> tuple[np.ndarray, float] | None:
    """Cheapest truthful payments for a fixed recommendation assignment."""
    T, n, m = inst.n_type_profiles, inst.n_agents, inst.n_outcomes
    n_vars = T * n * m

    def pvar(lam: int, i: int) -> slice:
        start = (lam * n + i) * m
        return slice(start, start + m)

    lam_arr = np.arange(T)
    acode_arr = np.array(acodes, dtype=np.int64)
    f_rec = inst.f_rows(lam_arr, acode_arr)

    model = LPModel(n_vars, sense="min")
    if not require_ll:
        model.lower[:] = -np.inf
    obj = np.zeros(n_vars)
    for lam in range(T):
        for i in range(n):
            obj[pvar(lam, i)] = inst.prior[lam] * f_rec[lam]
    model.objective = obj

    tdigits = [inst.type_digits(i) for i in range(n)]
    for i in range(n):
        for lam in range(T):
            t_true = tdigits[i][lam]
            rec_action = (acodes[lam] // inst.action_strides[i]) % inst.n_actions[i]
            rec_cost = float(inst.cost_tables[i][t_true, rec_action])
            for rep in range(inst.n_types[i]):
                lam2 = lam + (rep - t_true) * inst.type_strides[i]
                base2 = acodes[lam2]
                rec2 = (base2 // inst.action_strides[i]) % inst.n_actions[i]
                for dev in range(inst.n_actions[i]):
                    dev_code = base2 + (dev - rec2) * inst.action_strides[i]
                    f_dev = inst.f_rows(np.array([lam]), np.array([dev_code]))[0]
                    coeffs = np.zeros(n_vars)
                    coeffs[pvar(lam, i)] += f_rec[lam]
                    coeffs[pvar(lam2, i)] -= f_dev
                    rhs = rec_cost - float(inst.cost_tables[i][t_true, dev])
                    model.add_constraint(coeffs, ">=", rhs)
            if not require_ll:
                coeffs = np.zeros(n_vars)
                coeffs[pvar(lam, i)] = f_rec[lam]
                model.add_constraint(coeffs, ">=", rec_cost)
    sol = solve_lp(model, feas_tol=feas_tol)
    if sol.status == INFEASIBLE:
        return None
    assert sol.status == OPTIMAL
    payments = sol.x.reshape(T, n, m)
    if require_ll:
        payments = np.where(payments < 0, 0.0, payments)
    return payments, float(obj @ sol.x)


def brute_force_bayes_deterministic(
    inst: BayesianInstance,
    require_ll: bool = True,
    max_assignments: int = 65536,
    feas_tol: float = 1e-7,
) -> tuple[BayesDeterministicContract, float]:
    """The exact deterministic optimum by enumerating every recommendation map.

    Every function from type profiles to action profiles is tried; for each,
    a payment LP minimizes the expected payout subject to the truthfulness
    rows (plus participation rows when limited liability is waived).
    Refuses instances whose assignment space exceeds max_assignments.
    """
    T = inst.n_type_profiles
    required = inst.n_profiles**T
    if required > max_assignments:
        raise EnumerationCapError(required, max_assignments)
    lam_arr = np.arange(T)
    if inst.f_type_independent:
        reward_by_code = inst.f_table @ inst.rewards
        reward_rows = np.tile(reward_by_code, (T, 1))
    else:
        reward_rows = inst.f_table @ inst.rewards  # (T, P)
    best: tuple[float, BayesDeterministicContract] | None = None
    for acodes in itertools.product(range(inst.n_profiles), repeat=T):
        acode_arr = np.array(acodes, dtype=np.int64)
        exp_reward = float(inst.prior @ reward_rows[lam_arr, acode_arr])
        # Expected payments are nonnegative (by liability or participation),
        # so the expected reward bounds the value; equal bounds cannot beat
        # an earlier incumbent under strict improvement.
        if best is not None and exp_reward <= best[0]:
            continue
        res = _assignment_value_lp(inst, acodes, require_ll, feas_tol)
        if res is None:
            continue
        payments, cost = res
        value = exp_reward - cost
        if best is None or value > best[0]:
            actions = np.empty((T, inst.n_agents), dtype=np.int64)
            for i in range(inst.n_agents):
                actions[:, i] = (acode_arr // inst.action_strides[i]) % inst.n_actions[i]
            best = (value, BayesDeterministicContract(actions, payments))
    assert best is not None, "recommending per-type cheapest actions is always feasible"
    return best[1], best[0]


# ---------------------------------------------------------------------------
# Linearized relaxation of the randomized program
# ---------------------------------------------------------------------------


class _BayesLayout:
    """Variable indexing for the typed relaxation: mu, x, then z blocks."""

    def __init__(self, inst: BayesianInstance):
        T, n, P, m = inst.n_type_profiles, inst.n_agents, inst.n_profiles, inst.n_outcomes
        self.T, self.n, self.P, self.m = T, n, P, m
        self.x_base = T * P
        self.z_base = self.x_base + T * n * P * m
        self.z_offsets = []
        off = self.z_base
        for i in range(n):
            self.z_offsets.append(off)
            off += T * inst.n_types[i] * inst.n_actions[i]
        self.n_vars = off
        self._kt = inst.n_types
        self._ka = inst.n_actions

    def mu(self, lam: int, a: int) -> int:
        return lam * self.P + a

    def x(self, lam: int, i: int, a: int) -> slice:
        start = self.x_base + ((lam * self.n + i) * self.P + a) * self.m
        return slice(start, start + self.m)

    def z(self, i: int, lam: int, rep: int, a_i: int) -> int:
        return self.z_offsets[i] + (lam * self._kt[i] + rep) * self._ka[i] + a_i


def build_lp_bayes_randomized(inst: BayesianInstance, cfg: RandLPConfig) -> tuple[LPModel, _BayesLayout]:
    """Assemble the typed relaxation with auxiliary deviation-value variables.

    For each (agent, true type profile, reported type) the truthfulness row
    bounds the summed truthful utilities below by the summed auxiliary
    variables z, and each z dominates every concrete action deviation's
    payoff; caps x <= M mu keep the payment recovery bounded.
    """
    lay = _BayesLayout(inst)
    T, n, P, m = lay.T, lay.n, lay.P, lay.m
    model = LPModel(lay.n_vars, sense="max")
    for i in range(n):
        for lam in range(T):
            for rep in range(inst.n_types[i]):
                for a_i in range(inst.n_actions[i]):
                    model.lower[lay.z(i, lam, rep, a_i)] = -np.inf

    obj = np.zeros(lay.n_vars)
    lam_arr = np.arange(T)
    for lam in range(T):
        f = inst.f_for(lam)
        obj[lam * P : (lam + 1) * P] = inst.prior[lam] * (f @ inst.rewards)
        for i in range(n):
            for a in range(P):
                obj[lay.x(lam, i, a)] = -inst.prior[lam] * f[a]
    model.objective = obj

    adigits = [inst.action_digits(i) for i in range(n)]
    tdigits = [inst.type_digits(i) for i in range(n)]
    ranks = np.arange(P)

    for i in range(n):
        k_t, k_a = inst.n_types[i], inst.n_actions[i]
        for lam in range(T):
            f_true = inst.f_for(lam)
            t_true = tdigits[i][lam]
            costs_i = inst.cost_tables[i][t_true]
            for rep in range(k_t):
                coeffs = np.zeros(lay.n_vars)
                for a in range(P):
                    coeffs[lay.x(lam, i, a)] += f_true[a]
                    coeffs[lay.mu(lam, a)] -= costs_i[adigits[i][a]]
                for a_i in range(k_a):
                    coeffs[lay.z(i, lam, rep, a_i)] -= 1.0
                model.add_constraint(coeffs, ">=", 0.0)

                lam2 = int(lam + (rep - t_true) * inst.type_strides[i])
                for a_i in range(k_a):
                    group = ranks[adigits[i] == a_i]
                    for dev in range(k_a):
                        coeffs = np.zeros(lay.n_vars)
                        coeffs[lay.z(i, lam, rep, a_i)] = 1.0
                        for a in group:
                            dev_a = int(a + (dev - a_i) * inst.action_strides[i])
                            coeffs[lay.x(lam2, i, int(a))] -= f_true[dev_a]
                            coeffs[lay.mu(lam2, int(a))] += costs_i[dev]
                        model.add_constraint(coeffs, ">=", 0.0)

    for lam in range(T):
        for i in range(n):
            for a in range(P):
                sl = lay.x(lam, i, a)
                for w in range(m):
                    coeffs = np.zeros(lay.n_vars)
                    coeffs[sl.start + w] = 1.0
                    coeffs[lay.mu(lam, a)] = -cfg.M
                    model.add_constraint(coeffs, "<=", 0.0)

    for lam in range(T):
        coeffs = np.zeros(lay.n_vars)
        coeffs[lam * P : (lam + 1) * P] = 1.0
        model.add_constraint(coeffs, "=", 1.0)
    del lam_arr
    return model, lay


def solve_bayesian_randomized(
    inst: BayesianInstance, cfg: RandLPConfig
) -> tuple[BayesRandomizedContract, float]:
    """Solve the typed relaxation and recover a truthful randomized contract.

    Payments are x / mu on each reported profile's support; the cap rows
    guarantee the quotient stays below M, and the recovered contract
    satisfies the exact truthfulness constraints of the original program.
    """
    model, lay = build_lp_bayes_randomized(inst, cfg)
    sol = solve_lp(model, feas_tol=cfg.feas_tol)
    if sol.status != OPTIMAL:
        raise RuntimeError(
            f"typed relaxation reported {sol.status}; truthful zero payments on "
            "free actions are always feasible"
        )
    T, n, P, m = lay.T, lay.n, lay.P, lay.m
    mu = np.where(sol.x[: lay.x_base] < 0, 0.0, sol.x[: lay.x_base]).reshape(T, P)
    x = np.where(sol.x[lay.x_base : lay.z_base] < 0, 0.0, sol.x[lay.x_base : lay.z_base])
    x = x.reshape(T, n, P, m)
    pi = np.zeros_like(x)
    for lam in range(T):
        support = mu[lam] > MU_ZERO_TOL
        pi[lam][:, support, :] = x[lam][:, support, :] / mu[lam][None, support, None]
    return BayesRandomizedContract(mu, pi), float(sol.objective)


@dataclass(frozen=True, eq=False)
class BayesWelfareReport:
    """Virtual social welfare per type profile (on the prior's support).

    support holds the type-profile ranks with positive prior; per_type maps
    each scale to the welfare values over the support, expected to their
    prior expectations; sw is the scale-1 expectation.
    """

    support: np.ndarray
    per_type: dict
    expected: dict
    sw_per_type: np.ndarray
    sw: float


def serialize_bayes_contract(inst: BayesianInstance, contract: BayesDeterministicContract) -> str:
    """Render a typed deterministic contract document.

    Contracts paying negative amounts are flagged explicitly so a reader can
    tell that limited liability was waived.
    """
    rules = []
    for lam in range(inst.n_type_profiles):
        t_digits = inst.type_profile_of_index(lam)
        rules.append(
            {
                "type_profile": [inst.type_labels[i][d] for i, d in enumerate(t_digits)],
                "profile": [
                    inst.action_labels[i][int(a)] for i, a in enumerate(contract.actions[lam])
                ],
                "payments": [[float(p) for p in row] for row in contract.payments[lam]],
            }
        )
    doc = {
        "kind": "bayes_deterministic",
        "allows_negative": not contract.respects_ll,
        "rules": rules,
    }
    return json.dumps(doc, indent=2)


def parse_bayes_contract(text: str, inst: BayesianInstance) -> BayesDeterministicContract:
    """Parse a typed deterministic contract document against an instance."""
    doc = parse_document(text)
    if _req(doc, "kind", "top level") != "bayes_deterministic":
        raise ParseError("kind: expected 'bayes_deterministic'")
    rules = _req(doc, "rules", "top level")
    if not isinstance(rules, list):
        raise ParseError("rules: expected a list")
    T, n, m = inst.n_type_profiles, inst.n_agents, inst.n_outcomes
    actions = np.full((T, n), -1, dtype=np.int64)
    payments = np.zeros((T, n, m))
    for k, entry in enumerate(rules):
        where = f"rules[{k}]"
        t_names = _req(entry, "type_profile", where)
        if not isinstance(t_names, list) or len(t_names) != n:
            raise ParseError(f"{where}: type_profile must list one type per agent")
        digits = []
        for i, nm in enumerate(t_names):
            if str(nm) not in inst.type_labels[i]:
                raise ParseError(f"{where}: unknown type '{nm}' for agent {i}")
            digits.append(inst.type_labels[i].index(str(nm)))
        lam = inst.type_profile_index(digits)
        if actions[lam, 0] >= 0:
            raise ParseError(f"{where}: duplicate rule for this type profile")
        prof = _profile_from_names(_req(entry, "profile", where), inst.action_labels, where)
        actions[lam] = prof
        pay_doc = _req(entry, "payments", where)
        if not isinstance(pay_doc, list) or len(pay_doc) != n:
            raise ParseError(f"{where}.payments: expected one row per agent")
        for i, row in enumerate(pay_doc):
            if not isinstance(row, list) or len(row) != m:
                raise ParseError(f"{where}.payments[{i}]: expected {m} numbers")
            payments[lam, i] = [_num(p, f"{where}.payments[{i}][{w}]") for w, p in enumerate(row)]
    if np.any(actions < 0):
        missing = int(np.count_nonzero(actions[:, 0] < 0))
        raise ValidationError([f"rules: {missing} type profiles have no rule"])
    return BayesDeterministicContract(actions, payments)


def bayes_welfare(inst: BayesianInstance, scales) -> BayesWelfareReport:
    """Evaluate max_a (F_a^lam . r - alpha c^lam(a)) per type profile and scale."""
    scales = [float(s) for s in scales]
    if any(s < 0 for s in scales):
        raise ParameterError("scales must be nonnegative")
    support = np.nonzero(inst.prior > 0)[0]
    adigits = [inst.action_digits(i) for i in range(inst.n_agents)]
    tdigits = [inst.type_digits(i) for i in range(inst.n_agents)]
    rows = {s: np.empty(len(support)) for s in set(scales) | {1.0}}
    weights = inst.prior[support]
    for k, lam in enumerate(support):
        exp_reward = inst.f_for(int(lam)) @ inst.rewards
        cost = np.zeros(inst.n_profiles)
        for i in range(inst.n_agents):
            cost += inst.cost_tables[i][tdigits[i][lam]][adigits[i]]
        for s in rows:
            rows[s][k] = float(np.max(exp_reward - s * cost))
    expected = {s: float(weights @ rows[s]) for s in scales}
    return BayesWelfareReport(
        support=support,
        per_type={s: rows[s] for s in scales},
        expected=expected,
        sw_per_type=rows[1.0],
        sw=float(weights @ rows[1.0]),
    )


# ---------------------------------------------------------------------------
# Bayesian instance documents
# ---------------------------------------------------------------------------


def parse_bayesian_instance(text: str) -> BayesianInstance:
    """Parse a Bayesian instance document (the base format plus types)."""
    doc = parse_document(text)
    if "types" not in doc:
        raise ParseError("top level: Bayesian documents require a 'types' field")
    single = bool(doc.get("single_dimensional", False))
    names, labels, base_costs = _parse_agents(doc, require_cost=single)
    outcome_names, rewards = _parse_outcomes(doc)

    types_doc = _req(doc, "types", "top level")
    if not isinstance(types_doc, list):
        raise ParseError("types: expected a list")
    by_agent = {}
    for k, entry in enumerate(types_doc):
        where = f"types[{k}]"
        agent = str(_req(entry, "agent", where))
        if agent not in names:
            raise ParseError(f"{where}: unknown agent '{agent}'")
        values = _req(entry, "values", where)
        if not isinstance(values, list) or not values:
            raise ParseError(f"{where}.values: expected a nonempty list")
        t_labels = [str(_req(v, "name", f"{where}.values[{j}]")) for j, v in enumerate(values)]
        t_values = [
            _num(_req(v, "value", f"{where}.values[{j}]"), f"{where}.values[{j}].value")
            for j, v in enumerate(values)
        ]
        if len(set(t_labels)) != len(t_labels):
            raise ParseError(f"{where}: duplicate type names")
        by_agent[agent] = (tuple(t_labels), tuple(t_values))
    missing = [nm for nm in names if nm not in by_agent]
    if missing:
        raise ParseError(f"types: missing entries for agents {missing}")
    type_labels = tuple(by_agent[nm][0] for nm in names)
    type_values = tuple(by_agent[nm][1] for nm in names)

    n_types = [len(t) for t in type_labels]
    t_strides = _strides(n_types)
    n_type_profiles = int(np.prod(n_types, dtype=np.int64))

    def type_profile_rank(entry_names, where: str) -> int:
        if not isinstance(entry_names, list) or len(entry_names) != len(names):
            raise ParseError(f"{where}: type_profile must list one type per agent")
        rank = 0
        for i, nm in enumerate(entry_names):
            try:
                rank += type_labels[i].index(str(nm)) * t_strides[i]
            except ValueError:
                raise ParseError(f"{where}: unknown type '{nm}' for agent {i}") from None
        return rank

    prior_doc = _req(doc, "prior", "top level")
    if not isinstance(prior_doc, list):
        raise ParseError("prior: expected a list")
    prior = np.zeros(n_type_profiles)
    seen = set()
    for k, entry in enumerate(prior_doc):
        where = f"prior[{k}]"
        rank = type_profile_rank(_req(entry, "type_profile", where), where)
        if rank in seen:
            raise ParseError(f"{where}: duplicate type profile")
        seen.add(rank)
        prior[rank] = _num(_req(entry, "prob", where), f"{where}.prob")

    sizes = [len(a) for a in labels]
    P = int(np.prod(sizes, dtype=np.int64))
    a_strides = _strides(sizes)
    m = len(outcome_names)
    dists = _req(doc, "distributions", "top level")
    if not isinstance(dists, list) or not dists:
        raise ParseError("distributions: expected a nonempty list")
    typed_rows = ["type_profile" in e for e in dists if isinstance(e, dict)]
    if any(typed_rows) and not all(typed_rows):
        raise ParseError("distributions: mix of typed and untyped rows")
    f_independent = not typed_rows[0]
    if f_independent:
        f = np.full((P, m), np.nan)
    else:
        f = np.full((n_type_profiles, P, m), np.nan)
    for k, entry in enumerate(dists):
        where = f"distributions[{k}]"
        prof = _profile_from_names(_req(entry, "profile", where), labels, where)
        a_rank = sum(a * s for a, s in zip(prof, a_strides))
        row = _parse_prob_row(entry, m, where)
        if f_independent:
            if not np.isnan(f[a_rank]).all():
                raise ParseError(f"{where}: duplicate entry for this profile")
            f[a_rank] = row
        else:
            t_rank = type_profile_rank(_req(entry, "type_profile", where), where)
            if not np.isnan(f[t_rank, a_rank]).all():
                raise ParseError(f"{where}: duplicate entry for this profile")
            f[t_rank, a_rank] = row
    if np.isnan(f).any():
        raise ValidationError(["distributions: table is incomplete"])

    if single:
        cost_tables = tuple(
            np.outer(np.array(type_values[i]), base_costs[i]) for i in range(len(names))
        )
        bc: tuple[np.ndarray, ...] | None = tuple(base_costs)
        if not f_independent:
            raise ValidationError(["single_dimensional requires untyped distributions"])
    else:
        costs_doc = _req(doc, "costs", "top level")
        if not isinstance(costs_doc, list):
            raise ParseError("costs: expected a list")
        cost_arrays = [np.full((n_types[i], len(labels[i])), np.nan) for i in range(len(names))]
        for k, entry in enumerate(costs_doc):
            where = f"costs[{k}]"
            agent = str(_req(entry, "agent", where))
            if agent not in names:
                raise ParseError(f"{where}: unknown agent '{agent}'")
            i = names.index(agent)
            tname = str(_req(entry, "type", where))
            if tname not in type_labels[i]:
                raise ParseError(f"{where}: unknown type '{tname}'")
            aname = str(_req(entry, "action", where))
            if aname not in labels[i]:
                raise ParseError(f"{where}: unknown action '{aname}'")
            cost_arrays[i][type_labels[i].index(tname), labels[i].index(aname)] = _num(
                _req(entry, "cost", where), f"{where}.cost"
            )
        if any(np.isnan(c).any() for c in cost_arrays):
            raise ValidationError(["costs: table is incomplete"])
        cost_tables = tuple(cost_arrays)
        bc = None

    inst = BayesianInstance(
        agent_names=names,
        action_labels=labels,
        outcome_labels=outcome_names,
        rewards=rewards,
        type_labels=type_labels,
        type_values=type_values,
        prior=prior,
        cost_tables=cost_tables,
        f_table=f,
        f_type_independent=f_independent,
        single_dimensional=single,
        base_costs=bc,
    )
    violations = validate_bayesian(inst)
    if violations:
        raise ValidationError(violations)
    return inst


def serialize_bayesian_instance(inst: BayesianInstance) -> str:
    """Render a Bayesian instance document (exact round-trip)."""
    n = inst.n_agents
    doc: dict = {
        "single_dimensional": inst.single_dimensional,
        "agents": [],
        "outcomes": [
            {"name": nm, "reward": float(r)}
            for nm, r in zip(inst.outcome_labels, inst.rewards)
        ],
        "types": [
            {
                "agent": inst.agent_names[i],
                "values": [
                    {"name": nm, "value": float(v)}
                    for nm, v in zip(inst.type_labels[i], inst.type_values[i])
                ],
            }
            for i in range(n)
        ],
    }
    for i in range(n):
        actions = []
        for j, lbl in enumerate(inst.action_labels[i]):
            entry = {"name": lbl}
            if inst.single_dimensional:
                entry["cost"] = float(inst.base_costs[i][j])
            actions.append(entry)
        doc["agents"].append({"name": inst.agent_names[i], "actions": actions})

    def type_profile_names(rank: int) -> list[str]:
        digits = inst.type_profile_of_index(rank)
        return [inst.type_labels[i][d] for i, d in enumerate(digits)]

    def profile_names(rank: int) -> list[str]:
        digits = inst.profile_of_index(rank)
        return [inst.action_labels[i][d] for i, d in enumerate(digits)]

    doc["prior"] = [
        {"type_profile": type_profile_names(int(rank)), "prob": float(inst.prior[rank])}
        for rank in np.nonzero(inst.prior > 0)[0]
    ]
    if inst.f_type_independent:
        doc["distributions"] = [
            {"profile": profile_names(a), "probs": [float(p) for p in inst.f_table[a]]}
            for a in range(inst.n_profiles)
        ]
    else:
        doc["distributions"] = [
            {
                "type_profile": type_profile_names(lam),
                "profile": profile_names(a),
                "probs": [float(p) for p in inst.f_table[lam, a]],
            }
            for lam in range(inst.n_type_profiles)
            for a in range(inst.n_profiles)
        ]
    if not inst.single_dimensional:
        doc["costs"] = [
            {
                "agent": inst.agent_names[i],
                "type": inst.type_labels[i][t],
                "action": inst.action_labels[i][a],
                "cost": float(inst.cost_tables[i][t, a]),
            }
            for i in range(n)
            for t in range(inst.n_types[i])
            for a in range(inst.n_actions[i])
        ]
    return json.dumps(doc, indent=2)


