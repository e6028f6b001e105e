"""Ready-made domains and worlds for the bundled experiments."""
from __future__ import annotations

import numpy as np

from planactlearn import learning
from planactlearn.domain import ExtendedDomain, State, StateVarSchema, TransitionFn
from planactlearn.perception import PerceptionTable
from planactlearn.world import MOVES, Building, NoiseModel, World, generate_building, wall

EXAMPLE1_SIGMA = 0.1
SCRATCH_SIGMA = 0.1

# Fig. 1(a): the four rooms with every inter-room move; self-loops are left undefined.
EXAMPLE1_EDGES = [
    ((0, 0), "e", (1, 0)),
    ((0, 0), "n", (0, 1)),
    ((0, 1), "e", (1, 1)),
    ((0, 1), "s", (0, 0)),
    ((1, 0), "w", (0, 0)),
    ((1, 0), "n", (1, 1)),
    ((1, 1), "w", (0, 1)),
    ((1, 1), "s", (1, 0)),
]

# Fig. 2 edges that change the state, excluding those leaving the goal.
FIG2_EDGES = {
    ((0, 0), "e", (1, 0)),
    ((0, 0), "n", (0, 1)),
    ((0, 1), "s", (0, 0)),
    ((1, 0), "e", (2, 0)),
    ((1, 0), "w", (0, 0)),
    ((2, 0), "w", (1, 0)),
    ((2, 0), "n", (2, 1)),
    ((2, 1), "w", (1, 1)),
    ((2, 1), "s", (2, 0)),
}

EXAMPLE1_START: State = (0, 0)
EXAMPLE1_GOAL: State = (1, 1)


def room_schema(width: int, height: int) -> StateVarSchema:
    return StateVarSchema(
        [("i", [str(v) for v in range(1, width + 1)]), ("j", [str(v) for v in range(1, height + 1)])]
    )


def room_mean(s: State) -> np.ndarray:
    return np.array([s[0] + 0.5, s[1] + 0.5])


def example1_domain(sigma: float = EXAMPLE1_SIGMA) -> ExtendedDomain:
    """The 2x2 room model: mu = (i - 0.5, j - 0.5), Sigma = sigma * I."""
    schema = room_schema(2, 2)
    pt = PerceptionTable(2, sigma * np.eye(2))
    for s in schema.states():
        pt.add(s, room_mean(s))
    return ExtendedDomain(schema, tuple(MOVES), TransitionFn(EXAMPLE1_EDGES), pt)


def fig1c_building() -> Building:
    """3x2 rooms; walls west and south of room (2, 2)."""
    return Building(3, 2, frozenset({wall((1, 2), (2, 2)), wall((2, 1), (2, 2))}))


def example1_world(noise_var: float | None = None) -> World:
    noise = None if noise_var is None else NoiseModel.isotropic(noise_var)
    return World(fig1c_building(), noise)


def fig2_domain(sigma: float = EXAMPLE1_SIGMA) -> ExtendedDomain:
    """The revised six-state model, with perfect perceptions for rooms it names."""
    schema = StateVarSchema([("i", ["1", "2", "3"]), ("j", ["1", "2"])])
    pt = PerceptionTable(2, sigma * np.eye(2))
    for s in schema.states():
        pt.add(s, room_mean(s))
    edges = list(FIG2_EDGES) + [((1, 1), "w", (0, 1)), ((1, 1), "s", (1, 0))]
    return ExtendedDomain(schema, tuple(MOVES), TransitionFn(edges), pt)


def single_room_domain(noise_var: float, sigma: float | None = None) -> tuple[ExtendedDomain, World]:
    """A one-room building and a one-state model that predicts it exactly."""
    world = World(Building(1, 1), NoiseModel.isotropic(noise_var))
    schema = StateVarSchema([("room", ["1"])])
    pt = PerceptionTable(2, (noise_var if sigma is None else sigma) * np.eye(2))
    pt.add((0,), np.array([0.5, 0.5]))
    gamma = TransitionFn(((0,), a, (0,)) for a in MOVES)
    return ExtendedDomain(schema, tuple(MOVES), gamma, pt), world


def scratch_domain(goal_mean, start_mean=(0.5, 0.5), sigma: float = SCRATCH_SIGMA, actions=tuple(MOVES)):
    """Two states, s0 and g0, one variable, no transitions."""
    schema = StateVarSchema([("s", ["0", "g0"])])
    pt = PerceptionTable(2, sigma * np.eye(2))
    pt.add((0,), np.asarray(start_mean, dtype=float))
    pt.add((1,), np.asarray(goal_mean, dtype=float))
    return ExtendedDomain(schema, tuple(actions), TransitionFn(), pt), (0,), (1,)


def goal_state(domain: ExtendedDomain, mean, epsilon: float, current: State) -> tuple[State, bool]:
    """State standing for the goal perception ``mean``.

    An existing state is reused when it explains ``mean`` above the
    state-creation threshold; otherwise variable 0 gains a value seeded at
    ``mean``. Returns (state, created).
    """
    pt = domain.perception
    mean = np.asarray(mean, dtype=float)
    lp = pt.logpdf_all(mean)
    k = int(np.argmax(lp))
    if not learning.needs_new_state(float(np.exp(lp[k])), pt.p_init_peak(), epsilon):
        return pt.states[k], False
    schema, s_new_set, s_new = learning.extend_states(domain.schema, current, 0)
    domain.schema = schema
    learning.seed_new_perceptions(pt, s_new_set, s_new, current, mean, 0)
    return s_new, True


def scratch_world(size: int = 5, wall_density: float = 0.3, seed: int = 0, noise_var: float | None = None) -> World:
    building = generate_building(size, size, wall_density=wall_density, seed=seed)
    noise = None if noise_var is None else NoiseModel.isotropic(noise_var)
    return World(building, noise)


def packs_world(size: int = 10, packs: int = 5, wall_density: float = 0.3, seed: int = 0, noise_var: float | None = None) -> World:
    building = generate_building(size, size, wall_density=wall_density, packs=packs, seed=seed)
    noise = None if noise_var is None else NoiseModel.isotropic(noise_var)
    return World(building, noise)


def packs_domain(packs: int = 5, sigma: float = SCRATCH_SIGMA, actions=None) -> ExtendedDomain:
    """Room variables with one value each, plus a carried-pack counter.

    pick/drop move the counter; every state of the initial model perceives
    the start room.
    """
    schema = StateVarSchema(
        [("rx", ["1"]), ("ry", ["1"]), ("carry", [str(k) for k in range(packs + 1)])]
    )
    pt = PerceptionTable(2, sigma * np.eye(2))
    for s in schema.states():
        pt.add(s, np.array([0.5, 0.5]))
    edges = []
    for k in range(packs):
        edges.append(((0, 0, k), "pick", (0, 0, k + 1)))
        edges.append(((0, 0, k + 1), "drop", (0, 0, k)))
    actions = tuple(MOVES) + ("pick", "drop") if actions is None else tuple(actions)
    return ExtendedDomain(schema, actions, TransitionFn(edges), pt)
