"""Experiment suites: seeded batch execution over a parameter grid."""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from planactlearn.coherence import percent_learned
from planactlearn.errors import InvalidParameter, InvariantViolation, UndefinedMetric
from planactlearn.harness import fixtures
from planactlearn.learning import LearningParams
from planactlearn.pal import PAL, RunConfig
from planactlearn.world import Building, NoiseModel, World, generate_building

EXAMPLE1 = "example1-sweep"
SCRATCH = "from-scratch-5x5"
SCALABILITY = "scalability-packs"
CUSTOM = "custom"
SUITES = (EXAMPLE1, SCRATCH, SCALABILITY, CUSTOM)

WORKERS_ENV = "PAL_WORKERS"
GRID = (0.0, 0.5, 1.0)

# Per-suite defaults; ExperimentSpec fields left as None fall back to these.
DEFAULTS = {
    EXAMPLE1: dict(max_steps=100, checkpoint_interval=25, goals=1, size=None, packs=0, argmax="auto"),
    SCRATCH: dict(max_steps=200, checkpoint_interval=25, goals=10, size=5, packs=0, argmax="auto"),
    SCALABILITY: dict(
        max_steps=50_000, checkpoint_interval=None, goals=None, size=10, packs=5, argmax="exact"
    ),
    CUSTOM: dict(max_steps=200, checkpoint_interval=25, goals=10, size=5, packs=0, argmax="auto"),
}
SCALABILITY_MAX_STATES = 100_000
MAX_IDLE_GOALS = 1000
PACKS_SIGMA = 0.001


@dataclass
class ExperimentSpec:
    suite: str = EXAMPLE1
    alphas: tuple = GRID
    betas: tuple = GRID
    epsilons: tuple = GRID
    reps: int = 10
    seed: int = 0
    max_steps: int | None = None
    argmax: str | None = None
    exact_limit: int | None = None
    checkpoint_interval: int | None = None
    divergence_walks: int = 100
    divergence_walk_length: int = 30
    goals: int | None = None
    size: int | None = None
    wall_density: float = 0.3
    packs: int | None = None
    noise_var: float | None = None
    max_states: int | None = None
    building: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise InvalidParameter(f"unknown suite {self.suite!r}")
        if self.reps < 1:
            raise InvalidParameter("reps must be >= 1")
        self.alphas, self.betas, self.epsilons = (
            tuple(float(v) for v in vals) for vals in (self.alphas, self.betas, self.epsilons)
        )
        for v in self.alphas + self.betas + self.epsilons:
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"grid value {v} outside [0, 1]")
        if not (self.alphas and self.betas and self.epsilons):
            raise InvalidParameter("parameter grid is empty")

    def default(self, name: str):
        v = getattr(self, name)
        return DEFAULTS[self.suite][name] if v is None else v

    def cells(self) -> list[tuple[float, float, float]]:
        return list(itertools.product(self.alphas, self.betas, self.epsilons))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AggregateRow:
    alpha: float
    beta: float
    epsilon: float
    states: float
    lrn: float
    goal_pct: float
    runs: int
    loop_seconds: dict = field(default_factory=dict)


def _q(v: float) -> int:
    return int(round(v * 1000))


def derive_seed(master: int, suite: str, rep: int, cell: tuple | None = None) -> int:
    """Seed for one run; depends only on its own coordinates, not on execution order."""
    key = [master, SUITES.index(suite), rep]
    if cell is not None:
        key += [1] + [_q(v) for v in cell]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _noise(spec: ExperimentSpec) -> NoiseModel | None:
    return None if spec.noise_var is None else NoiseModel.isotropic(spec.noise_var)


def _world(spec: ExperimentSpec, rep: int) -> World:
    if spec.suite == EXAMPLE1:
        return World(fixtures.fig1c_building(), _noise(spec))
    if spec.building is not None:
        return World(Building.load(spec.building), _noise(spec))
    size = spec.default("size")
    bseed = derive_seed(spec.seed, spec.suite, rep)
    b = generate_building(size, size, spec.wall_density, packs=spec.default("packs"), seed=bseed)
    return World(b, _noise(spec))


def goal_means(world: World, count: int, seed: int) -> list[np.ndarray]:
    """Room centres drawn uniformly, excluding the start room."""
    start = world.building.cell_of(world.start)
    cells = [c for c in world.building.cells() if c != start]
    if not cells:
        raise InvalidParameter("building has no room besides the start")
    rng = np.random.default_rng(seed)
    return [Building.center(cells[int(k)]) for k in rng.integers(len(cells), size=count)]


def _config(spec: ExperimentSpec, params: LearningParams, seed: int) -> RunConfig:
    max_states = spec.max_states
    if max_states is None and spec.suite == SCALABILITY:
        max_states = SCALABILITY_MAX_STATES
    kw = {}
    if spec.exact_limit is not None:
        kw["exact_limit"] = spec.exact_limit
    return RunConfig(
        params=params,
        max_steps=spec.default("max_steps"),
        checkpoint_interval=spec.default("checkpoint_interval"),
        seed=seed,
        argmax=spec.default("argmax"),
        divergence_walks=spec.divergence_walks,
        divergence_walk_length=spec.divergence_walk_length,
        divergence_seed=derive_seed(spec.seed, spec.suite, rep=10_000),
        max_states=max_states,
        **kw,
    )


def _example1(spec, params, seed):
    world = _world(spec, 0)
    agent = PAL(
        fixtures.example1_domain(),
        world,
        fixtures.EXAMPLE1_START,
        [fixtures.EXAMPLE1_GOAL],
        _config(spec, params, seed),
    )
    out = agent.run()
    agent.finish()
    return agent, 1, int(out.goal_reached)


def _goal_chain(spec, params, seed, rep):
    world = _world(spec, rep)
    n_goals = spec.default("goals")
    cfg = _config(spec, params, seed)
    gseed = derive_seed(spec.seed, spec.suite, rep) + 1
    if spec.suite == SCALABILITY:
        dom = fixtures.packs_domain(len(world.building.packs), sigma=PACKS_SIGMA, actions=world.actions)
        start = (0,) * len(dom.schema)
        gm = goal_means(world, 1, gseed)[0]
        agent = PAL(dom, world, start, [start], cfg)
        g, _ = fixtures.goal_state(dom, gm, params.epsilon, agent.current)
        agent.set_goals([g])
        rng = np.random.default_rng(gseed)
    else:
        means = goal_means(world, n_goals, gseed)
        dom, s0, g0 = fixtures.scratch_domain(means[0], world.start, actions=world.actions)
        agent = PAL(dom, world, s0, [g0], cfg)
    attempted = reached = idle = 0
    budget = cfg.max_steps
    while True:
        if spec.suite == SCALABILITY:
            out = agent.run(budget - agent.steps)
            attempted += 1
            reached += int(out.goal_reached)
            idle = idle + 1 if out.steps_used == 0 else 0
            if not agent.budget_left(budget) or idle >= MAX_IDLE_GOALS:
                break
            if n_goals is not None and attempted >= n_goals:
                break
            gm = goal_means(world, 1, int(rng.integers(2**32)))[0]
        else:
            out = agent.run(budget)
            attempted += 1
            reached += int(out.goal_reached)
            if attempted >= n_goals:
                break
            gm = means[attempted]
        g, _ = fixtures.goal_state(agent.domain, gm, params.epsilon, agent.current)
        agent.set_goals([g])
    agent.finish()
    return agent, attempted, reached


def run_one(spec: ExperimentSpec, cell: tuple, rep: int) -> dict:
    """Execute one (cell, repetition) and return its raw log record."""
    alpha, beta, epsilon = cell
    params = LearningParams(alpha, beta, epsilon)
    seed = derive_seed(spec.seed, spec.suite, rep, cell)
    rec = {
        "suite": spec.suite,
        "alpha": alpha,
        "beta": beta,
        "epsilon": epsilon,
        "rep": rep,
        "seed": seed,
    }
    try:
        if spec.suite == EXAMPLE1:
            agent, attempted, reached = _example1(spec, params, seed)
        else:
            agent, attempted, reached = _goal_chain(spec, params, seed, rep)
    except InvariantViolation as exc:
        rec.update(error=str(exc), goal_reached=False, loop_times=[])
        return rec
    cps = agent.checkpoints
    try:
        lrn = percent_learned(cps[0].divergence, cps[-1].divergence) if cps else None
    except UndefinedMetric:
        lrn = None
    rec.update(
        error=None,
        goal_reached=reached == attempted,
        goals_attempted=attempted,
        goals_reached=reached,
        steps=agent.steps,
        initial_states=agent.initial_state_count,
        final_states=agent.domain.n_states,
        lrn=lrn,
        trace={
            "step": [c.step for c in cps],
            "n_states": [c.n_states for c in cps],
            "divergence": [c.divergence for c in cps],
            "stderr": [c.stderr for c in cps],
        },
        loop_times=[[n, t] for n, t in agent.loop_times],
    )
    return rec


def _task(args):
    return run_one(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameter(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidParameter(f"{WORKERS_ENV} must be >= 1")
    return n


def run_suite(spec: ExperimentSpec, workers: int | None = None) -> tuple[list[AggregateRow], list[dict]]:
    """Run every grid cell and repetition; returns (aggregates, raw records in grid order)."""
    tasks = [(spec, cell, rep) for cell in spec.cells() for rep in range(spec.reps)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_task, tasks))
    else:
        records = [_task(t) for t in tasks]
    return aggregate(records), records


def bucket(n_states: int) -> int:
    """Power-of-two |S| bucket lower bound."""
    return 1 << (max(int(n_states), 1).bit_length() - 1)


def aggregate(records: list[dict]) -> list[AggregateRow]:
    cells: dict[tuple, list[dict]] = {}
    for r in records:
        cells.setdefault((r["alpha"], r["beta"], r["epsilon"]), []).append(r)
    rows = []
    for (a, b, e), rs in cells.items():
        ok = [r for r in rs if r.get("error") is None]
        lrns = [r["lrn"] for r in ok if r.get("lrn") is not None]
        times: dict[int, list[float]] = {}
        for r in rs:
            for n, t in r.get("loop_times", []):
                times.setdefault(bucket(n), []).append(t)
        rows.append(
            AggregateRow(
                a,
                b,
                e,
                float(np.mean([r["final_states"] for r in ok])) if ok else float("nan"),
                float(np.mean(lrns)) if lrns else float("nan"),
                100.0 * sum(bool(r["goal_reached"]) for r in rs) / len(rs),
                len(rs),
                {k: float(np.mean(v)) for k, v in sorted(times.items())},
            )
        )
    return rows


def output_dir(spec: ExperimentSpec) -> Path | None:
    return None if spec.out is None else Path(spec.out)
