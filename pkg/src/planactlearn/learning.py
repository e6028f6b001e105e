"""Model revision: state discovery and the alpha-weighted transition update."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from planactlearn.domain import Action, Histories, State, StateVarSchema, TransitionFn
from planactlearn.errors import InvalidParameter
from planactlearn.perception import PerceptionTable

EXTEND_VARIABLE = "extend-variable"
ADD_BOOLEAN = "add-boolean-variable"


@dataclass(frozen=True)
class LearningParams:
    alpha: float = 0.0
    beta: float = 0.5
    epsilon: float = 0.5
    new_state_strategy: str = EXTEND_VARIABLE

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{name} must be in [0, 1], got {v}")
        if self.new_state_strategy not in (EXTEND_VARIABLE, ADD_BOOLEAN):
            raise InvalidParameter(f"unknown strategy {self.new_state_strategy!r}")


def needs_new_state(max_like: float, max_p_init: float, epsilon: float) -> bool:
    return max_like < (1.0 - epsilon) * max_p_init


def variable_change_counts(gamma: TransitionFn, n_vars: int, a: Action) -> list[int]:
    counts = [0] * n_vars
    for s, act, t in gamma.items():
        if act != a:
            continue
        for i in range(n_vars):
            if s[i] != t[i]:
                counts[i] += 1
    return counts


def select_variable(gamma: TransitionFn, schema: StateVarSchema, s0: State, a: Action) -> int:
    """Variable most often changed by ``a`` across the defined part of gamma.

    Ties go to the lowest index, so an action that changes nothing selects 0.
    """
    counts = variable_change_counts(gamma, len(schema), a)
    return max(range(len(counts)), key=lambda i: (counts[i], -i))


def extend_states(
    schema: StateVarSchema, s0: State, i: int
) -> tuple[StateVarSchema, list[State], State]:
    """Add a fresh value to variable ``i``; returns (schema', S_new, s_new)."""
    new_schema, v_new = schema.with_value(i)
    ranges = [range(c) for c in schema.cardinalities]
    ranges[i] = range(v_new, v_new + 1)
    s_new_set = list(itertools.product(*ranges))
    s_new = s0[:i] + (v_new,) + s0[i + 1 :]
    return new_schema, s_new_set, s_new


def add_boolean_variable(
    schema: StateVarSchema, s0: State
) -> tuple[StateVarSchema, list[State], State]:
    """Add a two-valued variable; existing states take value 0 and S_new value 1."""
    k = len(schema)
    name = f"b{k}"
    while name in schema.names:
        name += "_"
    new_schema = schema.with_variable(name, ["0", "1"])
    s_new_set = [s + (1,) for s in schema.states()]
    return new_schema, s_new_set, tuple(s0) + (1,)


def seed_new_perceptions(
    pt: PerceptionTable, s_new_set: list[State], s_new: State, s0: State, x, i: int
) -> None:
    """Initialize perceptions for S_new.

    ``s_new`` is centred on ``x``. Each sibling copies the mean of the state it
    was cloned from (same values except variable ``i``, which takes s0's
    value) shifted by the offset x - mu(s0).
    """
    x = np.asarray(x, dtype=float)
    offset = x - pt.mean(s0)
    v0 = s0[i]
    refs = [pt.row(u[:i] + (v0,) + u[i + 1 :]) for u in s_new_set]
    mus = pt.means[refs] + offset
    k = s_new_set.index(s_new)
    mus[k] = x
    pt.add_many(s_new_set, mus)


def update_trans(gamma: TransitionFn, hist: Histories, s: State, a: Action, alpha: float) -> bool:
    """Revise gamma(s, a) from the transition history. Returns True on change.

    Scores are alpha * [s' = gamma(s, a)] + (1 - alpha) * #Tr(s, a, s'),
    compared exactly. Ties keep the current successor, otherwise the
    lexicographically smallest. With gamma(s, a) undefined the most frequent
    observed successor is installed, whatever alpha is.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameter(f"alpha must be in [0, 1], got {alpha}")
    outcomes = hist.outcomes(s, a)
    cur = gamma.get(s, a)
    if cur is None:
        if not outcomes:
            return False
        top = max(outcomes.values())
        return gamma.set(s, a, min(t for t, c in outcomes.items() if c == top))
    A = Fraction(alpha)
    scores = {t: (1 - A) * c for t, c in outcomes.items()}
    scores[cur] = scores.get(cur, Fraction(0)) + A
    top = max(scores.values())
    cands = [t for t, v in scores.items() if v == top]
    if cur in cands:
        return False
    return gamma.set(s, a, min(cands))
