"""Domain types for hidden-action multi-agent contract problems.

An instance bundles the agents' action sets and costs, the outcome
rewards, and a dense table mapping every joint action profile to a
probability distribution over outcomes.  Everything downstream (the
deterministic / randomized solvers, the virtual-cost reductions, the
Bayesian extension) consumes these types.

Conventions used throughout the package:

* actions and outcomes are referenced by index internally and by label
  in instance documents; index order is the label order in the document;
* action profiles are tuples of per-agent action indices, ordered
  lexicographically (agent 0 most significant); the row index of the
  distribution table ``f`` is the lexicographic rank of the profile;
* probabilities are validated, never silently renormalized.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

PROB_TOL = 1e-9

Profile = tuple[int, ...]


class ParseError(ValueError):
    """Malformed instance/contract document (carries a location hint)."""


class ParameterError(ValueError):
    """An operation parameter outside its documented domain."""


class ValidationError(ValueError):
    """Structurally well-formed document describing an invalid instance."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Instance:
    """A principal-multi-agent problem.

    Fields
    ------
    agent_names:   one display name per agent
    action_labels: per agent, the labels of its actions
    costs:         per agent, array of action costs in [0, 1]
    outcome_labels: labels of the outcomes
    rewards:       array of outcome rewards in [0, 1]
    f:             (n_profiles, n_outcomes) outcome distributions, one row
                   per action profile in lexicographic profile order
    """

    agent_names: tuple[str, ...]
    action_labels: tuple[tuple[str, ...], ...]
    costs: tuple[np.ndarray, ...]
    outcome_labels: tuple[str, ...]
    rewards: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(_frozen(c) for c in self.costs))
        object.__setattr__(self, "rewards", _frozen(self.rewards))
        object.__setattr__(self, "f", _frozen(self.f))
        n_profiles = int(np.prod([len(a) for a in self.action_labels], dtype=np.int64))
        if self.f.shape != (n_profiles, len(self.outcome_labels)):
            raise ValueError(
                f"distribution table has shape {self.f.shape}, "
                f"expected {(n_profiles, len(self.outcome_labels))}"
            )
        if len(self.costs) != len(self.action_labels) or any(
            len(c) != len(a) for c, a in zip(self.costs, self.action_labels)
        ):
            raise ValueError("cost arrays do not match action label lists")

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
    def n_profiles(self) -> int:
        return self.f.shape[0]

    @property
    def max_actions(self) -> int:
        """Largest per-agent action count (a derived statistic only)."""
        return max(self.n_actions)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        """Mixed-radix strides turning a profile into its lexicographic rank."""
        sizes = self.n_actions
        strides = [1] * len(sizes)
        for i in range(len(sizes) - 2, -1, -1):
            strides[i] = strides[i + 1] * sizes[i + 1]
        return tuple(strides)

    @cached_property
    def profile_costs(self) -> np.ndarray:
        """Total cost c(a) = sum_i c_i(a_i) for every profile, lex order."""
        total = np.zeros(self.n_profiles)
        for i in range(self.n_agents):
            total += np.array(self.costs[i])[self.action_digits(i)]
        total.setflags(write=False)
        return total

    @cached_property
    def expected_rewards(self) -> np.ndarray:
        """Expected principal reward F_a . r for every profile, lex order."""
        out = self.f @ self.rewards
        out.setflags(write=False)
        return out

    def action_digits(self, agent: int) -> np.ndarray:
        """Array over profile ranks of the action index played by `agent`."""
        reps_after = self.strides[agent]
        block = np.repeat(np.arange(self.n_actions[agent]), reps_after)
        out = np.tile(block, self.n_profiles // (reps_after * self.n_actions[agent]))
        out.setflags(write=False)
        return out

    def profile_index(self, profile: Sequence[int]) -> int:
        if len(profile) != self.n_agents:
            raise ValueError(f"profile {profile} has wrong length")
        idx = 0
        for i, (a, size) in enumerate(zip(profile, self.n_actions)):
            if not 0 <= a < size:
                raise ValueError(f"action index {a} invalid for agent {i}")
            idx += a * self.strides[i]
        return idx

    def profile_of_index(self, idx: int) -> Profile:
        out = []
        for stride in self.strides:
            d, idx = divmod(idx, stride)
            out.append(d)
        return tuple(out)

    def deviation_index(self, idx: int, agent: int, action: int) -> int:
        """Rank of the profile obtained by switching `agent` to `action`."""
        cur = (idx // self.strides[agent]) % self.n_actions[agent]
        return idx + (action - cur) * self.strides[agent]

    def profile_label(self, profile: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.action_labels[i][a] for i, a in enumerate(profile))


@dataclass(frozen=True, eq=False)
class DeterministicContract:
    """Recommended profile plus per-agent, per-outcome payments (>= 0)."""

    profile: Profile
    payments: np.ndarray  # (n_agents, n_outcomes)

    def __post_init__(self):
        object.__setattr__(self, "profile", tuple(int(a) for a in self.profile))
        object.__setattr__(self, "payments", _frozen(self.payments))
        if np.min(self.payments, initial=0.0) < 0:
            raise ValueError("deterministic contracts require nonnegative payments")


@dataclass(frozen=True, eq=False)
class RandomizedContract:
    """Distribution over recommended profiles with per-recommendation payments.

    ``mu[a]`` is the probability of recommending profile rank ``a`` and
    ``pi[i, a, w]`` the payment to agent ``i`` under recommendation ``a``
    and outcome ``w``.
    """

    mu: np.ndarray  # (n_profiles,)
    pi: np.ndarray  # (n_agents, n_profiles, n_outcomes)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "pi", _frozen(self.pi))
        if self.mu.min(initial=0.0) < -PROB_TOL:
            raise ValueError("mu has negative entries")
        if abs(float(self.mu.sum()) - 1.0) > PROB_TOL:
            raise ValueError(f"mu sums to {self.mu.sum()}, not 1")
        if self.pi.min(initial=0.0) < 0:
            raise ValueError("randomized contracts require nonnegative payments")


Value = float


@dataclass(frozen=True)
class Ratio:
    """A quotient that may degenerate: finite, infinite, or 0/0."""

    kind: str  # "finite" | "infinite" | "indeterminate"
    value: float | None = None

    @staticmethod
    def of(numerator: float, denominator: float, tol: float = 1e-9) -> "Ratio":
        if abs(denominator) <= tol:
            if numerator > tol:
                return Ratio("infinite")
            return Ratio("indeterminate")
        return Ratio("finite", numerator / denominator)

    def __str__(self) -> str:
        if self.kind == "finite":
            return f"{self.value:.9g}"
        return "inf" if self.kind == "infinite" else "0/0"


def enumerate_profiles(inst: Instance) -> list[Profile]:
    """All joint action profiles in lexicographic order, agent 0 first."""
    return list(itertools.product(*(range(k) for k in inst.n_actions)))


def iter_profiles(inst: Instance) -> Iterator[Profile]:
    return itertools.product(*(range(k) for k in inst.n_actions))


def validate_instance(inst: Instance) -> list[str]:
    """Return human-readable invariant violations (empty list = valid)."""
    bad: list[str] = []
    if inst.n_agents < 1:
        bad.append("instance has no agents")
    if inst.n_outcomes < 1:
        bad.append("instance has no outcomes")
    for i, costs in enumerate(inst.costs):
        if len(costs) < 1:
            bad.append(f"agent {i} has no actions")
            continue
        if not np.any(costs == 0.0):
            bad.append(f"agent {i} has no zero-cost action")
        if costs.min() < 0 or costs.max() > 1:
            bad.append(f"agent {i} has a cost outside [0, 1]")
    if inst.rewards.size and (inst.rewards.min() < 0 or inst.rewards.max() > 1):
        bad.append("a reward lies outside [0, 1]")
    row_sums = inst.f.sum(axis=1)
    for idx in np.nonzero(np.abs(row_sums - 1.0) > PROB_TOL)[0]:
        label = inst.profile_label(inst.profile_of_index(int(idx)))
        bad.append(f"distribution for profile {label} sums to {row_sums[idx]:.12g}")
    for idx in np.nonzero(inst.f.min(axis=1) < -0.0)[0]:
        label = inst.profile_label(inst.profile_of_index(int(idx)))
        bad.append(f"distribution for profile {label} has a negative probability")
    return bad


def structurally_equal(a: Instance, b: Instance) -> bool:
    """Exact field-by-field equality (labels and bit-identical numbers)."""
    return (
        a.agent_names == b.agent_names
        and a.action_labels == b.action_labels
        and a.outcome_labels == b.outcome_labels
        and all(np.array_equal(x, y) for x, y in zip(a.costs, b.costs))
        and np.array_equal(a.rewards, b.rewards)
        and np.array_equal(a.f, b.f)
    )


# ---------------------------------------------------------------------------
# Instance document format (JSON): see README for the schema.
# ---------------------------------------------------------------------------


def _req(obj: dict, key: str, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    return obj[key]


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ParseError(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def parse_document(text: str) -> dict:
    """Decode the JSON carrier, mapping syntax errors to ParseError."""
    if not text.strip():
        raise ParseError("empty document")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    return doc


def _parse_agents(doc: dict, require_cost: bool = True):
    agents = _req(doc, "agents", "top level")
    if not isinstance(agents, list) or not agents:
        raise ParseError("agents: expected a nonempty list")
    names, labels, costs = [], [], []
    for i, entry in enumerate(agents):
        where = f"agents[{i}]"
        names.append(str(_req(entry, "name", where)))
        actions = _req(entry, "actions", where)
        if not isinstance(actions, list) or not actions:
            raise ParseError(f"{where}.actions: expected a nonempty list")
        acts, acosts = [], []
        for j, act in enumerate(actions):
            aw = f"{where}.actions[{j}]"
            acts.append(str(_req(act, "name", aw)))
            if require_cost or "cost" in act:
                acosts.append(_num(_req(act, "cost", aw), f"{aw}.cost"))
            else:
                acosts.append(0.0)
        if len(set(acts)) != len(acts):
            raise ParseError(f"{where}: duplicate action names")
        labels.append(tuple(acts))
        costs.append(np.array(acosts))
    if len(set(names)) != len(names):
        raise ParseError("agents: duplicate agent names")
    return tuple(names), tuple(labels), tuple(costs)


def _parse_outcomes(doc: dict):
    outcomes = _req(doc, "outcomes", "top level")
    if not isinstance(outcomes, list) or not outcomes:
        raise ParseError("outcomes: expected a nonempty list")
    names, rewards = [], []
    for i, entry in enumerate(outcomes):
        where = f"outcomes[{i}]"
        names.append(str(_req(entry, "name", where)))
        rewards.append(_num(_req(entry, "reward", where), f"{where}.reward"))
    if len(set(names)) != len(names):
        raise ParseError("outcomes: duplicate outcome names")
    return tuple(names), np.array(rewards)


def _profile_from_names(names, action_labels, where: str) -> Profile:
    if not isinstance(names, list) or len(names) != len(action_labels):
        raise ParseError(f"{where}: profile must list one action per agent")
    out = []
    for i, nm in enumerate(names):
        try:
            out.append(action_labels[i].index(str(nm)))
        except ValueError:
            raise ParseError(f"{where}: unknown action '{nm}' for agent {i}") from None
    return tuple(out)


def _parse_prob_row(entry: dict, m: int, where: str) -> np.ndarray:
    probs = _req(entry, "probs", where)
    if not isinstance(probs, list) or len(probs) != m:
        raise ParseError(f"{where}.probs: expected {m} numbers")
    return np.array([_num(p, f"{where}.probs[{k}]") for k, p in enumerate(probs)])


def parse_instance(text: str) -> Instance:
    """Parse and validate an instance document.

    Raises ParseError for malformed documents and ValidationError (with
    the full violation list) for well-formed but invalid instances.
    """
    doc = parse_document(text)
    if "types" in doc or "prior" in doc:
        raise ParseError("document has Bayesian fields; use bayes.parse_bayesian_instance")
    names, labels, costs = _parse_agents(doc)
    outcome_names, rewards = _parse_outcomes(doc)
    dists = _req(doc, "distributions", "top level")
    if not isinstance(dists, list):
        raise ParseError("distributions: expected a list")

    sizes = [len(a) for a in labels]
    n_profiles = int(np.prod(sizes, dtype=np.int64))
    f = np.full((n_profiles, len(outcome_names)), np.nan)
    strides = [1] * len(sizes)
    for i in range(len(sizes) - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]
    for k, entry in enumerate(dists):
        where = f"distributions[{k}]"
        prof = _profile_from_names(_req(entry, "profile", where), labels, where)
        idx = sum(a * s for a, s in zip(prof, strides))
        if not np.isnan(f[idx]).all():
            raise ParseError(f"{where}: duplicate entry for this profile")
        f[idx] = _parse_prob_row(entry, len(outcome_names), where)

    violations = []
    for idx in np.nonzero(np.isnan(f).any(axis=1))[0]:
        prof = []
        rem = int(idx)
        for s, size in zip(strides, sizes):
            d, rem = divmod(rem, s)
            prof.append(labels[len(prof)][d])
        violations.append(f"distributions: missing entry for profile {tuple(prof)}")
    if violations:
        raise ValidationError(violations)

    inst = Instance(names, labels, costs, outcome_names, rewards, f)
    violations = validate_instance(inst)
    if violations:
        raise ValidationError(violations)
    return inst


def serialize_contract(
    inst: Instance, contract: "DeterministicContract | RandomizedContract"
) -> str:
    """Render a contract document for `inst` (sparse for randomized ones)."""
    if isinstance(contract, DeterministicContract):
        doc = {
            "kind": "deterministic",
            "profile": list(inst.profile_label(contract.profile)),
            "payments": [[float(p) for p in row] for row in contract.payments],
        }
    elif isinstance(contract, RandomizedContract):
        doc = {
            "kind": "randomized",
            "mu": [
                {
                    "profile": list(inst.profile_label(inst.profile_of_index(int(a)))),
                    "prob": float(contract.mu[a]),
                }
                for a in np.nonzero(contract.mu > 0)[0]
            ],
            "pi": [
                {
                    "agent": inst.agent_names[i],
                    "profile": list(inst.profile_label(inst.profile_of_index(int(a)))),
                    "payments": [float(p) for p in contract.pi[i, a]],
                }
                for i in range(inst.n_agents)
                for a in range(inst.n_profiles)
                if np.any(contract.pi[i, a] > 0)
            ],
        }
    else:
        raise TypeError(f"unknown contract type {type(contract).__name__}")
    return json.dumps(doc, indent=2)


def parse_contract(text: str, inst: Instance) -> "DeterministicContract | RandomizedContract":
    """Parse a contract document against an instance (labels must match)."""
    doc = parse_document(text)
    kind = _req(doc, "kind", "top level")
    if kind == "deterministic":
        profile = _profile_from_names(_req(doc, "profile", "top level"), inst.action_labels, "profile")
        pay_doc = _req(doc, "payments", "top level")
        if not isinstance(pay_doc, list) or len(pay_doc) != inst.n_agents:
            raise ParseError("payments: expected one row per agent")
        payments = np.zeros((inst.n_agents, inst.n_outcomes))
        for i, row in enumerate(pay_doc):
            if not isinstance(row, list) or len(row) != inst.n_outcomes:
                raise ParseError(f"payments[{i}]: expected {inst.n_outcomes} numbers")
            payments[i] = [_num(p, f"payments[{i}][{w}]") for w, p in enumerate(row)]
        if payments.min(initial=0.0) < 0:
            raise ValidationError(["payments: negative entry (limited liability)"])
        return DeterministicContract(profile, payments)
    if kind == "randomized":
        mu = np.zeros(inst.n_profiles)
        for k, entry in enumerate(_req(doc, "mu", "top level")):
            where = f"mu[{k}]"
            prof = _profile_from_names(_req(entry, "profile", where), inst.action_labels, where)
            mu[inst.profile_index(prof)] = _num(_req(entry, "prob", where), f"{where}.prob")
        pi = np.zeros((inst.n_agents, inst.n_profiles, inst.n_outcomes))
        for k, entry in enumerate(_req(doc, "pi", "top level")):
            where = f"pi[{k}]"
            agent = str(_req(entry, "agent", where))
            if agent not in inst.agent_names:
                raise ParseError(f"{where}: unknown agent '{agent}'")
            i = inst.agent_names.index(agent)
            prof = _profile_from_names(_req(entry, "profile", where), inst.action_labels, where)
            row = _req(entry, "payments", where)
            if not isinstance(row, list) or len(row) != inst.n_outcomes:
                raise ParseError(f"{where}.payments: expected {inst.n_outcomes} numbers")
            pi[i, inst.profile_index(prof)] = [
                _num(p, f"{where}.payments[{w}]") for w, p in enumerate(row)
            ]
        try:
            return RandomizedContract(mu, pi)
        except ValueError as e:
            raise ValidationError([str(e)]) from None
    raise ParseError(f"kind: unknown contract kind {kind!r}")


def serialize_instance(inst: Instance) -> str:
    """Render an instance back into the document format (exact round-trip)."""
    doc = {
        "agents": [
            {
                "name": inst.agent_names[i],
                "actions": [
                    {"name": lbl, "cost": float(c)}
                    for lbl, c in zip(inst.action_labels[i], inst.costs[i])
                ],
            }
            for i in range(inst.n_agents)
        ],
        "outcomes": [
            {"name": nm, "reward": float(r)}
            for nm, r in zip(inst.outcome_labels, inst.rewards)
        ],
        "distributions": [
            {
                "profile": list(inst.profile_label(prof)),
                "probs": [float(p) for p in inst.f[inst.profile_index(prof)]],
            }
            for prof in enumerate_profiles(inst)
        ],
    }
    return json.dumps(doc, indent=2)
