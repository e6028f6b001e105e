"""The plan-act-learn loop."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from planactlearn import learning
from planactlearn.coherence import DEFAULT_WALK_LENGTH, DEFAULT_WALKS, estimate_divergence
from planactlearn.domain import ExtendedDomain, Histories, PlanningProblem, State
from planactlearn.errors import InvalidParameter, InvalidState, InvariantViolation
from planactlearn.learning import LearningParams
from planactlearn.perception import EXACT_ARGMAX_LIMIT, max_likelihood_state, update_perception
from planactlearn.planner import EXPLORATORY, Policy, plan
from planactlearn.world import World


@dataclass
class RunConfig:
    params: LearningParams = field(default_factory=LearningParams)
    max_steps: int = 100
    checkpoint_interval: int | None = None
    seed: int = 0
    argmax: str = "auto"
    exact_limit: int = EXACT_ARGMAX_LIMIT
    divergence_walks: int = DEFAULT_WALKS
    divergence_walk_length: int = DEFAULT_WALK_LENGTH
    divergence_seed: int | None = None
    max_states: int | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise InvalidParameter("max_steps must be >= 1")
        if self.checkpoint_interval is not None and self.checkpoint_interval < 1:
            raise InvalidParameter("checkpoint_interval must be >= 1")
        if self.argmax not in ("auto", "exact", "greedy"):
            raise InvalidParameter(f"unknown argmax mode {self.argmax!r}")

    @property
    def estimator_seed(self) -> int:
        if self.divergence_seed is not None:
            return self.divergence_seed
        return int(np.random.SeedSequence([self.seed, 7]).generate_state(1)[0])


@dataclass
class StepEvent:
    step: int
    action: str
    x: list[float]
    state: tuple
    predicted: tuple | None
    new_state: bool
    gamma_changed: bool
    n_states: int
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "action": self.action,
            "x": self.x,
            "state": list(self.state),
            "predicted": None if self.predicted is None else list(self.predicted),
            "new_state": self.new_state,
            "gamma_changed": self.gamma_changed,
            "n_states": self.n_states,
            "seconds": self.seconds,
        }


@dataclass
class Checkpoint:
    step: int
    n_states: int
    divergence: float
    stderr: float


@dataclass
class RunOutcome:
    goal_reached: bool
    steps_used: int
    final_state_count: int
    checkpoints: list[Checkpoint]
    loop_times: list[tuple[int, float]]
    replans: int


class PAL:
    """One agent: an evolving extended domain acting in one world."""

    def __init__(
        self,
        domain: ExtendedDomain,
        world: World,
        current: State,
        goals,
        config: RunConfig | None = None,
        clock=time.perf_counter,
    ):
        self.domain = domain
        self.world = world
        self.config = config or RunConfig()
        self.params = self.config.params
        self.hist = Histories()
        self.current = domain.schema.normalize(current)
        self.goals = frozenset(domain.schema.normalize(g) for g in goals)
        self.initial_state_count = domain.n_states
        world_ss, explore_ss = np.random.SeedSequence(self.config.seed).spawn(2)
        self.world_rng = np.random.default_rng(world_ss)
        self.explore_rng = np.random.default_rng(explore_ss)
        self.pose = world.initial_pose()
        self.steps = 0
        self.previous_action: str | None = None
        self.events: list[StepEvent] = []
        self.loop_times: list[tuple[int, float]] = []
        self.checkpoints: list[Checkpoint] = []
        self.replans = 0
        self._stale = False
        self._clock = clock
        self._peak = domain.perception.p_init_peak()
        domain.check()

    @property
    def problem(self) -> PlanningProblem:
        return PlanningProblem(self.domain, self.current, self.goals)

    def at_goal(self) -> bool:
        return self.current in self.goals

    def set_goals(self, goals) -> None:
        self.goals = frozenset(self.domain.schema.normalize(g) for g in goals)

    def plan(self) -> Policy:
        self.replans += 1
        self._stale = False
        return plan(self.problem, self.hist, self.explore_rng, self.previous_action)

    def checkpoint(self) -> Checkpoint:
        est = estimate_divergence(
            self.domain,
            self.world,
            self.config.divergence_walks,
            self.config.divergence_walk_length,
            self.config.estimator_seed,
        )
        cp = Checkpoint(self.steps, self.domain.n_states, est.value, est.stderr)
        self.checkpoints.append(cp)
        return cp

    def _maybe_checkpoint(self) -> None:
        ci = self.config.checkpoint_interval
        if ci is None:
            return
        if not self.checkpoints or (self.steps % ci == 0 and self.checkpoints[-1].step != self.steps):
            self.checkpoint()

    def finish(self) -> None:
        """Record the closing checkpoint if the last one is stale."""
        if self.config.checkpoint_interval is not None and (
            not self.checkpoints or self.checkpoints[-1].step != self.steps
        ):
            self.checkpoint()

    def _grow(self, x) -> State:
        """Add S_new around observation ``x`` and return s_new."""
        dom = self.domain
        s0 = self.current
        a = self.previous_action
        if self.params.new_state_strategy == learning.ADD_BOOLEAN:
            schema, s_new_set, s_new = learning.add_boolean_variable(dom.schema, s0)

            def pad(s):
                return schema.normalize(s)

            dom.gamma = dom.gamma.remap(pad)
            dom.perception.remap(pad)
            self.hist.remap(pad)
            self.goals = frozenset(pad(g) for g in self.goals)
            s0 = pad(s0)
            self.current = s0
            i = len(schema) - 1
        else:
            i = learning.select_variable(dom.gamma, dom.schema, s0, a)
            schema, s_new_set, s_new = learning.extend_states(dom.schema, s0, i)
        dom.schema = schema
        learning.seed_new_perceptions(dom.perception, s_new_set, s_new, s0, x, i)
        return s_new

    def step(self, policy: Policy) -> StepEvent:
        """Execute pi(s0) once and apply every learning rule to the outcome."""
        if self._stale:
            raise InvariantViolation("policy executed after gamma changed without replanning")
        s0 = self.current
        a = policy.get(s0)
        if a is None:
            raise InvalidState(f"policy undefined at {s0}")
        dom = self.domain
        predicted = dom.gamma.get(s0, a)
        self.pose, x = self.world.act(self.pose, a, self.world_rng)
        self.previous_action = a
        try:
            s1, like = max_likelihood_state(
                dom.perception,
                dom.gamma,
                x,
                predicted if predicted is not None else s0,
                dom.schema.cardinalities,
                self.config.argmax,
                self.config.exact_limit,
            )
        except InvalidState as exc:
            raise InvariantViolation(str(exc)) from exc
        new_state = learning.needs_new_state(like, self._peak, self.params.epsilon)
        if new_state:
            s1 = self._grow(x)
            s0 = self.current
        self.hist.append_transition(s0, a, s1)
        self.hist.append_observation(s1, x)
        changed = learning.update_trans(dom.gamma, self.hist, s0, a, self.params.alpha)
        if s1 not in dom.perception:
            raise InvariantViolation(f"state {s1} has no perception")
        update_perception(dom.perception, s1, x, dom.perception.count(s1) + 1, self.params.beta)
        self.current = s1
        self.steps += 1
        self._stale = changed or new_state
        ev = StepEvent(
            self.steps, a, [float(v) for v in x], s1, predicted, new_state, changed, dom.n_states
        )
        self.events.append(ev)
        return ev

    def budget_left(self, budget: int) -> bool:
        if self.steps >= budget:
            return False
        cap = self.config.max_states
        return cap is None or self.domain.n_states < cap

    def run(self, max_steps: int | None = None) -> RunOutcome:
        """Plan, act and learn until a goal is perceived or the step budget runs out."""
        budget = self.steps + (max_steps if max_steps is not None else self.config.max_steps)
        start_steps = self.steps
        self._maybe_checkpoint()
        while not self.at_goal() and self.budget_left(budget):
            t0 = self._clock()
            policy = self.plan()
            t_plan = self._clock() - t0
            while policy.get(self.current) is not None and self.budget_left(budget):
                n = self.domain.n_states
                t1 = self._clock()
                ev = self.step(policy)
                ev.seconds = self._clock() - t1 + t_plan
                t_plan = 0.0
                self.loop_times.append((n, ev.seconds))
                self._maybe_checkpoint()
                if ev.gamma_changed or ev.new_state or policy.kind == EXPLORATORY:
                    break
        return RunOutcome(
            self.at_goal(),
            self.steps - start_steps,
            self.domain.n_states,
            list(self.checkpoints),
            list(self.loop_times),
            self.replans,
        )


def run(problem: PlanningProblem, world: World, config: RunConfig | None = None) -> tuple[RunOutcome, PAL]:
    agent = PAL(problem.domain, world, problem.current, problem.goals, config)
    outcome = agent.run()
    agent.finish()
    outcome.checkpoints = list(agent.checkpoints)
    return outcome, agent
