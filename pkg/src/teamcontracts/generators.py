"""Instance generators: hand-built worst-case fixtures and seeded random draws.

The named fixtures are small instances with known solver values; they double
as regression anchors.  Random generation is reproducible bit-for-bit from
the seed and always yields valid instances (action 0 of every agent has cost
zero, every distribution row is an exact simplex point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bayes import BayesDeterministicContract, BayesianInstance
from .model import Instance, ParameterError, validate_instance


@dataclass(frozen=True)
class GeneratorSpec:
    """A named generator plus its parameters, as used by the CLI."""

    kind: str
    params: dict = field(default_factory=dict)


def gap_instance() -> Instance:
    """Two symmetric agents where only randomization earns positive profit.

    Deterministic optimum is 0 while a simple randomized contract earns 1/15.
    """
    f = np.array(
        [
            [1.0, 0.0],
            [2 / 5, 3 / 5],
            [2 / 5, 3 / 5],
            [0.0, 1.0],
        ]
    )
    return Instance(
        agent_names=("agent1", "agent2"),
        action_labels=(("up", "down"), ("up", "down")),
        costs=(np.array([2 / 5, 0.0]), np.array([2 / 5, 0.0])),
        outcome_labels=("w1", "w2"),
        rewards=np.array([1.0, 0.0]),
        f=f,
    )


def no_supremum_instance() -> Instance:
    """Two agents, four outcomes; the randomized optimum 3/4 is a supremum.

    Contracts of value 3/4 - eps exist for every eps > 0 but the point mass
    needed at exactly 3/4 forces a payment of at least 1/2.
    """
    f = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.5, 0.5],
        ]
    )
    return Instance(
        agent_names=("agent1", "agent2"),
        action_labels=(("up", "down"), ("up", "down")),
        costs=(np.array([0.0, 0.0]), np.array([0.25, 0.0])),
        outcome_labels=("w1", "w2", "w3", "w4"),
        rewards=np.array([0.0, 0.0, 0.0, 1.0]),
        f=f,
    )


def tightness_instance(alpha: float, eps: float) -> Instance:
    """Instance where the n-factor virtual-cost increase is necessary.

    Builds n = ceil(eps^(-1/alpha)) symmetric agents with effort cost
    1/(2 n^(2-alpha)); the high outcome's probability drops linearly in the
    number of shirking agents.  The multi-agent optimum is at most eps/2
    while the single-agent optimum at virtual scale n^(1-alpha) is >= 1/2.
    """
    if alpha <= 0 or eps <= 0:
        raise ParameterError("tightness requires alpha > 0 and eps > 0")
    n = math.ceil(eps ** (-1.0 / alpha))
    cost_up = 1.0 / (2.0 * n ** (2.0 - alpha))
    if cost_up > 1.0:
        raise ParameterError(f"alpha={alpha}, eps={eps} give effort cost {cost_up} > 1")
    n_profiles = 2**n
    shirkers = np.zeros(n_profiles)
    for i in range(n):
        stride = 2 ** (n - 1 - i)
        digit = np.tile(np.repeat(np.arange(2), stride), n_profiles // (2 * stride))
        shirkers += digit
    p_hi = 1.0 - shirkers / n
    f = np.column_stack([p_hi, 1.0 - p_hi])
    return Instance(
        agent_names=tuple(f"agent{i + 1}" for i in range(n)),
        action_labels=tuple(("up", "down") for _ in range(n)),
        costs=tuple(np.array([cost_up, 0.0]) for _ in range(n)),
        outcome_labels=("w1", "w2"),
        rewards=np.array([1.0, 0.0]),
        f=f,
    )


def bayes_gap_instance(alpha: float) -> BayesianInstance:
    """Bayesian instance whose deterministic optimum is 0 under limited
    liability while the 1/alpha-virtual social welfare stays positive.

    Two agents with single-dimensional types 1 and 3/alpha, base effort cost
    alpha/3, independent prior weighting the low-cost type by
    (alpha^2/9) / (1 - alpha/3 + alpha^2/9).
    """
    if not 0 < alpha < 1:
        raise ParameterError("bayes_gap requires alpha in (0, 1)")
    a3 = alpha / 3.0
    z = 1.0 - a3 + alpha * alpha / 9.0
    g_light = (alpha * alpha / 9.0) / z  # weight of the cheap type (value 1)
    g_heavy = (1.0 - a3) / z  # weight of the costly type (value 3/alpha)
    type_values = (1.0, 3.0 / alpha)
    marg = np.array([g_light, g_heavy])
    prior = np.outer(marg, marg).reshape(-1)
    f = np.array(
        [
            [1.0, 0.0],
            [a3, 1.0 - a3],
            [a3, 1.0 - a3],
            [0.0, 1.0],
        ]
    )
    base = np.array([a3, 0.0])
    cost_tables = tuple(np.outer(np.array(type_values), base) for _ in range(2))
    return BayesianInstance(
        agent_names=("agent1", "agent2"),
        action_labels=(("up", "down"), ("up", "down")),
        outcome_labels=("w1", "w2"),
        rewards=np.array([1.0, 0.0]),
        type_labels=(("light", "heavy"), ("light", "heavy")),
        type_values=(type_values, type_values),
        prior=prior,
        cost_tables=cost_tables,
        f_table=f,
        f_type_independent=True,
        single_dimensional=True,
        base_costs=(base, base),
    )


def bayes_tightness_instance(alpha: float, eps: float) -> BayesianInstance:
    """Bayesian instance where even without limited liability no sublinear
    virtual-cost scale recovers the virtual social welfare.

    n = ceil((2/eps)^(2/alpha)) agents succeed only if all exert effort;
    the prior puts mass n^(-alpha/2)/gamma on the all-zero-cost type profile
    and 1/(n*gamma) on each single-high-type profile, gamma = n^(-alpha/2)+1.
    """
    if alpha <= 0 or not 0 < eps < 1:
        raise ParameterError("bayes_tightness requires alpha > 0 and eps in (0, 1)")
    n = math.ceil((2.0 / eps) ** (2.0 / alpha))
    cost_up = 1.0 / (2.0 * n ** (1.0 - alpha))
    if cost_up > 1.0:
        raise ParameterError(f"alpha={alpha}, eps={eps} give effort cost {cost_up} > 1")
    gamma = n ** (-alpha / 2.0) + 1.0
    n_profiles = 2**n
    f = np.zeros((n_profiles, 2))
    f[:, 1] = 1.0
    f[0] = [1.0, 0.0]  # profile rank 0 = everyone plays "up"
    prior = np.zeros(n_profiles)
    prior[0] = n ** (-alpha / 2.0) / gamma
    for i in range(n):
        prior[2 ** (n - 1 - i)] = 1.0 / (n * gamma)  # exactly agent i has type 1
    base = np.array([cost_up, 0.0])
    type_values = (0.0, 1.0)
    cost_tables = tuple(np.outer(np.array(type_values), base) for _ in range(n))
    return BayesianInstance(
        agent_names=tuple(f"agent{i + 1}" for i in range(n)),
        action_labels=tuple(("up", "down") for _ in range(n)),
        outcome_labels=("w1", "w2"),
        rewards=np.array([1.0, 0.0]),
        type_labels=tuple(("zero", "one") for _ in range(n)),
        type_values=tuple(type_values for _ in range(n)),
        prior=prior,
        cost_tables=cost_tables,
        f_table=f,
        f_type_independent=True,
        single_dimensional=True,
        base_costs=tuple(base for _ in range(n)),
    )


def bayes_tightness_reference_contract(inst: BayesianInstance) -> BayesDeterministicContract:
    """Zero-payment witness contract for the bayes_tightness family.

    Recommends effort exactly to the agents whose reported type makes it
    free, so every recommendation costs the truthful reporter nothing; its
    value equals the family's no-liability upper bound.
    """
    actions = np.empty((inst.n_type_profiles, inst.n_agents), dtype=np.int64)
    for i in range(inst.n_agents):
        actions[:, i] = inst.type_digits(i)
    payments = np.zeros((inst.n_type_profiles, inst.n_agents, inst.n_outcomes))
    return BayesDeterministicContract(actions, payments)


def _simplex_rows(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform simplex points via normalized exponentials (stable across
    numpy versions, unlike Generator.dirichlet)."""
    raw = -np.log(1.0 - rng.random(shape))
    return raw / raw.sum(axis=-1, keepdims=True)


def random_instance(
    seed: int,
    n_agents: int = 2,
    n_actions: int = 2,
    n_outcomes: int = 2,
    cost_scale: float = 0.5,
) -> Instance:
    """Seeded random instance; action 0 of every agent is the free action."""
    if n_agents < 1 or n_actions < 1 or n_outcomes < 1:
        raise ParameterError("random instances need at least one agent/action/outcome")
    if not 0 <= cost_scale <= 1:
        raise ParameterError("cost_scale must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    costs = []
    for _ in range(n_agents):
        c = rng.random(n_actions) * cost_scale
        c[0] = 0.0
        costs.append(c)
    n_profiles = n_actions**n_agents
    f = _simplex_rows(rng, (n_profiles, n_outcomes))
    rewards = rng.random(n_outcomes)
    inst = Instance(
        agent_names=tuple(f"agent{i + 1}" for i in range(n_agents)),
        action_labels=tuple(
            tuple(f"a{j}" for j in range(n_actions)) for _ in range(n_agents)
        ),
        costs=tuple(costs),
        outcome_labels=tuple(f"w{k + 1}" for k in range(n_outcomes)),
        rewards=rewards,
        f=f,
    )
    assert not validate_instance(inst)
    return inst


def random_bayes_instance(
    seed: int,
    n_agents: int = 2,
    n_actions: int = 2,
    n_outcomes: int = 2,
    n_types: int | tuple[int, ...] = 2,
    cost_scale: float = 0.5,
    type_dependent_f: bool = False,
) -> BayesianInstance:
    """Seeded random discrete-type Bayesian instance with full-support prior.

    n_types may be a single count or one count per agent.  Every
    (agent, type) pair keeps action 0 free.  With type_dependent_f the
    outcome table is drawn per type profile; otherwise it is shared, which
    is the regime the affine construction requires.
    """
    if isinstance(n_types, int):
        n_types = (n_types,) * n_agents
    else:
        n_types = tuple(int(t) for t in n_types)
    if (
        n_agents < 1
        or n_actions < 1
        or n_outcomes < 1
        or len(n_types) != n_agents
        or min(n_types) < 1
    ):
        raise ParameterError("random Bayesian instances need positive dimensions")
    if not 0 <= cost_scale <= 1:
        raise ParameterError("cost_scale must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    type_values = tuple(
        tuple(sorted(float(v) for v in rng.random(k))) for k in n_types
    )
    cost_tables = []
    for i in range(n_agents):
        table = rng.random((n_types[i], n_actions)) * cost_scale
        table[:, 0] = 0.0
        cost_tables.append(table)
    n_type_profiles = int(np.prod(n_types, dtype=np.int64))
    prior = 0.05 + rng.random(n_type_profiles)
    prior /= prior.sum()
    n_profiles = n_actions**n_agents
    if type_dependent_f:
        f = _simplex_rows(rng, (n_type_profiles, n_profiles, n_outcomes))
    else:
        f = _simplex_rows(rng, (n_profiles, n_outcomes))
    rewards = rng.random(n_outcomes)
    return BayesianInstance(
        agent_names=tuple(f"agent{i + 1}" for i in range(n_agents)),
        action_labels=tuple(
            tuple(f"a{j}" for j in range(n_actions)) for _ in range(n_agents)
        ),
        outcome_labels=tuple(f"w{k + 1}" for k in range(n_outcomes)),
        rewards=rewards,
        type_labels=tuple(
            tuple(f"t{j}" for j in range(k)) for k in n_types
        ),
        type_values=type_values,
        prior=prior,
        cost_tables=tuple(cost_tables),
        f_table=f,
        f_type_independent=not type_dependent_f,
        single_dimensional=False,
        base_costs=None,
    )


_INT_PARAMS = {"seed", "n_agents", "n_actions", "n_outcomes", "n_types"}


def generate(spec: GeneratorSpec) -> Instance | BayesianInstance:
    """Dispatch a GeneratorSpec to the matching constructor."""
    kinds = {
        "gap": gap_instance,
        "no_supremum": no_supremum_instance,
        "tightness": tightness_instance,
        "bayes_gap": bayes_gap_instance,
        "bayes_tightness": bayes_tightness_instance,
        "random": random_instance,
        "bayes_random": random_bayes_instance,
    }
    if spec.kind not in kinds:
        raise ParameterError(f"unknown generator kind '{spec.kind}'")
    params = dict(spec.params)
    for key in _INT_PARAMS & params.keys():
        params[key] = int(params[key])
    try:
        return kinds[spec.kind](**params)
    except TypeError as e:
        raise ParameterError(f"bad parameters for '{spec.kind}': {e}") from None
