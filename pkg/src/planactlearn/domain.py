"""Discrete planning-domain types.

States are tuples of value indices, one per state variable. Value indices are
append-only within a variable, so a state keeps its meaning when the schema
grows.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from planactlearn.errors import InvalidInput, InvalidState
from planactlearn.perception import PerceptionTable

State = tuple[int, ...]
Action = str

SNAPSHOT_FORMAT = "planactlearn.domain/1"


class StateVarSchema:
    """Ordered multi-valued state variables with finite, growable domains."""

    def __init__(self, variables: Iterable[tuple[str, Iterable[str]]]):
        self._names: list[str] = []
        self._values: list[list[str]] = []
        for name, values in variables:
            self._append_variable(name, list(values))
        if not self._names:
            raise InvalidInput("schema needs at least one variable")

    def _append_variable(self, name: str, values: list[str]) -> None:
        if name in self._names:
            raise InvalidInput(f"duplicate state variable {name!r}")
        if not values:
            raise InvalidInput(f"variable {name!r} has an empty domain")
        if len(set(values)) != len(values):
            raise InvalidInput(f"variable {name!r} has duplicate values")
        self._names.append(name)
        self._values.append(values)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self._values)

    def __len__(self) -> int:
        return len(self._names)

    def values(self, i: int) -> tuple[str, ...]:
        return tuple(self._values[i])

    def state_count(self) -> int:
        return math.prod(self.cardinalities)

    def copy(self) -> StateVarSchema:
        return StateVarSchema(zip(self._names, (list(v) for v in self._values)))

    def with_value(self, i: int, value: str | None = None) -> tuple[StateVarSchema, int]:
        """Copy of the schema with one more value in variable ``i``."""
        new = self.copy()
        vals = new._values[i]
        if value is None:
            value = _fresh_value(vals)
        if value in vals:
            raise InvalidInput(f"value {value!r} already in {self._names[i]!r}")
        vals.append(value)
        return new, len(vals) - 1

    def with_variable(self, name: str, values: Iterable[str]) -> StateVarSchema:
        new = self.copy()
        new._append_variable(name, list(values))
        return new

    def normalize(self, state: Iterable[int]) -> State:
        """Validate ``state``; states from before a variable was added get value 0."""
        s = tuple(int(v) for v in state)
        if len(s) > len(self._names):
            raise InvalidState(f"state {s} has too many components")
        s = s + (0,) * (len(self._names) - len(s))
        for i, v in enumerate(s):
            if not 0 <= v < len(self._values[i]):
                raise InvalidState(f"value index {v} out of range for {self._names[i]!r}")
        return s

    def contains(self, state: Iterable[int]) -> bool:
        try:
            self.normalize(state)
        except InvalidState:
            return False
        return True

    def states(self) -> Iterator[State]:
        return itertools.product(*(range(c) for c in self.cardinalities))

    def value_ids(self, state: State) -> tuple[str, ...]:
        return tuple(self._values[i][v] for i, v in enumerate(state))

    def from_value_ids(self, ids: Iterable[str]) -> State:
        ids = list(ids)
        if len(ids) != len(self._names):
            raise InvalidState(f"expected {len(self._names)} values, got {len(ids)}")
        try:
            return tuple(self._values[i].index(v) for i, v in enumerate(ids))
        except ValueError as exc:
            raise InvalidState(f"unknown value in {ids}") from exc

    def label(self, state: State) -> str:
        return "s" + "".join(self.value_ids(state)) if all(
            len(v) == 1 for v in self.value_ids(state)
        ) else "s[" + ",".join(self.value_ids(state)) + "]"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVarSchema):
            return NotImplemented
        return self._names == other._names and self._values == other._values

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}:{len(v)}" for n, v in zip(self._names, self._values))
        return f"StateVarSchema({inner})"


def _fresh_value(existing: list[str]) -> str:
    ints = [int(v) for v in existing if v.lstrip("-").isdigit()]
    candidate = str(max(ints) + 1) if ints else str(len(existing))
    while candidate in existing:
        candidate = candidate + "'"
    return candidate


def state_count(schema: StateVarSchema) -> int:
    return schema.state_count()


class TransitionFn:
    """Partial deterministic map (state, action) -> state with a reverse index."""

    def __init__(self, entries: Iterable[tuple[State, Action, State]] = ()):
        self._succ: dict[State, dict[Action, State]] = {}
        self._pred: dict[State, Counter] = {}
        for s, a, t in entries:
            self.set(s, a, t)

    def get(self, s: State, a: Action) -> State | None:
        row = self._succ.get(s)
        return None if row is None else row.get(a)

    def set(self, s: State, a: Action, t: State) -> bool:
        """Install gamma(s, a) = t. Returns True if the map changed."""
        row = self._succ.setdefault(s, {})
        old = row.get(a)
        if old == t:
            return False
        if old is not None:
            preds = self._pred[old]
            preds[s] -= 1
            if preds[s] == 0:
                del preds[s]
        row[a] = t
        self._pred.setdefault(t, Counter())[s] += 1
        return True

    def successors(self, s: State) -> dict[Action, State]:
        return self._succ.get(s, {})

    def predecessors(self, t: State) -> Iterable[State]:
        return self._pred.get(t, {}).keys()

    def items(self) -> Iterator[tuple[State, Action, State]]:
        for s, row in self._succ.items():
            for a, t in row.items():
                yield s, a, t

    def __len__(self) -> int:
        return sum(len(r) for r in self._succ.values())

    def __contains__(self, key: tuple[State, Action]) -> bool:
        return self.get(*key) is not None

    def copy(self) -> TransitionFn:
        return TransitionFn(self.items())

    def remap(self, fn) -> TransitionFn:
        return TransitionFn((fn(s), a, fn(t)) for s, a, t in self.items())

    def as_dict(self) -> dict[tuple[State, Action], State]:
        return {(s, a): t for s, a, t in self.items()}


def successor(gamma: TransitionFn, s: State, a: Action) -> State | None:
    return gamma.get(s, a)


class Histories:
    """Append-only transition and observation histories.

    Records are kept exactly as appended. Counters used by the learning rules
    are keyed by normalized states so they survive schema growth.
    """

    def __init__(self) -> None:
        self.tr: list[tuple[State, Action, State]] = []
        self.obs: list[tuple[State, np.ndarray]] = []
        self._outcomes: dict[tuple[State, Action], Counter] = {}
        self._last_visit: dict[State, int] = {}
        self._obs_count: Counter = Counter()

    def append_transition(self, s: State, a: Action, s2: State) -> None:
        self.tr.append((s, a, s2))
        self._outcomes.setdefault((s, a), Counter())[s2] += 1
        t = len(self.tr)
        self._last_visit[s] = max(self._last_visit.get(s, 0), t - 1)
        self._last_visit[s2] = t

    def append_observation(self, s: State, x) -> None:
        x = np.array(x, dtype=float)
        x.setflags(write=False)
        self.obs.append((s, x))
        self._obs_count[s] += 1

    def count(self, s: State, a: Action, s2: State) -> int:
        c = self._outcomes.get((s, a))
        return 0 if c is None else c[s2]

    def outcomes(self, s: State, a: Action) -> Counter:
        return self._outcomes.get((s, a), Counter())

    def tried(self, s: State, a: Action) -> int:
        c = self._outcomes.get((s, a))
        return 0 if c is None else sum(c.values())

    def last_visit(self, s: State) -> int | None:
        return self._last_visit.get(s)

    def observations_of(self, s: State) -> list[np.ndarray]:
        return [x for t, x in self.obs if t == s]

    def observation_count(self, s: State) -> int:
        return self._obs_count[s]

    def remap(self, fn) -> None:
        """Re-key the lookup counters after states gained a variable."""
        self._outcomes = {
            (fn(s), a): Counter({fn(t): n for t, n in c.items()})
            for (s, a), c in self._outcomes.items()
        }
        self._last_visit = {fn(s): t for s, t in self._last_visit.items()}
        self._obs_count = Counter({fn(s): n for s, n in self._obs_count.items()})


def append_transition(hist: Histories, rec: tuple[State, Action, State]) -> Histories:
    hist.append_transition(*rec)
    return hist


def append_observation(hist: Histories, rec: tuple[State, object]) -> Histories:
    hist.append_observation(*rec)
    return hist


@dataclass
class ExtendedDomain:
    """Schema, actions, transition function, and one perception per state."""

    schema: StateVarSchema
    actions: tuple[Action, ...]
    gamma: TransitionFn
    perception: PerceptionTable

    def __post_init__(self) -> None:
        if len(set(self.actions)) != len(self.actions) or not self.actions:
            raise InvalidInput("actions must be unique and non-empty")
        self.actions = tuple(self.actions)

    @property
    def n_states(self) -> int:
        return self.schema.state_count()

    def states(self) -> Iterator[State]:
        return self.schema.states()

    def check(self) -> None:
        """Raise InvalidState if gamma or the perception table disagree with the schema."""
        for s, a, t in self.gamma.items():
            if a not in self.actions:
                raise InvalidState(f"unknown action {a!r} in transition")
            self.schema.normalize(s)
            self.schema.normalize(t)
        if len(self.perception) != self.n_states:
            raise InvalidState(
                f"{len(self.perception)} perceptions for {self.n_states} states"
            )

    def copy(self) -> ExtendedDomain:
        return ExtendedDomain(
            self.schema.copy(), self.actions, self.gamma.copy(), self.perception.copy()
        )

    def to_dict(self) -> dict:
        ids = self.schema.value_ids
        pt = self.perception
        return {
            "format": SNAPSHOT_FORMAT,
            "schema": [
                {"name": n, "values": list(self.schema.values(i))}
                for i, n in enumerate(self.schema.names)
            ],
            "actions": list(self.actions),
            "transitions": [
                {"state": list(ids(s)), "action": a, "next": list(ids(t))}
                for s, a, t in sorted(self.gamma.items())
            ],
            "perception": {
                "dim": pt.n,
                "p_init_sigma": pt.p_init_sigma.tolist(),
                "sigma_floor": pt.sigma_floor,
                "states": [
                    {
                        "state": list(ids(s)),
                        "mu": g.mu.tolist(),
                        "sigma": g.sigma.tolist(),
                        "count": g.count,
                    }
                    for s, g in sorted(pt.items())
                ],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExtendedDomain:
        if data.get("format") != SNAPSHOT_FORMAT:
            raise InvalidInput(f"unsupported snapshot format {data.get('format')!r}")
        schema = StateVarSchema((v["name"], v["values"]) for v in data["schema"])
        gamma = TransitionFn(
            (schema.from_value_ids(e["state"]), e["action"], schema.from_value_ids(e["next"]))
            for e in data["transitions"]
        )
        p = data["perception"]
        pt = PerceptionTable(
            p["dim"], np.array(p["p_init_sigma"], dtype=float), sigma_floor=p["sigma_floor"]
        )
        for rec in p["states"]:
            pt.add(
                schema.from_value_ids(rec["state"]),
                np.array(rec["mu"], dtype=float),
                np.array(rec["sigma"], dtype=float),
                count=rec["count"],
                floor=False,
            )
        dom = cls(schema, tuple(data["actions"]), gamma, pt)
        dom.check()
        return dom

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> ExtendedDomain:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class PlanningProblem:
    domain: ExtendedDomain
    current: State
    goals: frozenset[State] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self.goals = frozenset(self.goals)
        if not self.goals:
            raise InvalidInput("planning problem needs at least one goal")
        self.current = self.domain.schema.normalize(self.current)
        for g in self.goals:
            self.domain.schema.normalize(g)

    def solved(self) -> bool:
        return self.current in self.goals
