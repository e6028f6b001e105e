"""A* planning over the abstract domain, and the exploration fallback."""
from __future__ import annotations

import heapq
import math
import itertools
from dataclasses import dataclass, field

import numpy as np

from planactlearn.domain import Action, Histories, PlanningProblem, State

GOAL_DIRECTED = "goal-directed"
EXPLORATORY = "exploratory"


@dataclass
class Policy:
    actions: dict[State, Action] = field(default_factory=dict)
    kind: str = GOAL_DIRECTED

    def get(self, s: State) -> Action | None:
        return self.actions.get(s)

    def __len__(self) -> int:
        return len(self.actions)


def edge_scale(gamma, pt) -> float:
    """Longest mean-to-mean distance over gamma edges (0 if there are none).

    Dividing Euclidean distances by this keeps the heuristic consistent
    under unit edge costs.
    """
    row = pt.row
    pairs = [(row(s), row(t)) for s, _, t in gamma.items() if s != t]
    if not pairs:
        return 0.0
    idx = np.array(pairs, dtype=np.intp)
    mu = pt.means
    d = np.linalg.norm(mu[idx[:, 0]] - mu[idx[:, 1]], axis=1)
    return float(d.max())


def astar(gamma, actions, start: State, goals, heuristic) -> list[tuple[State, Action]] | None:
    """Minimum-hop path as (state, action) pairs, or None if no goal is reachable."""
    goals = frozenset(goals)
    if start in goals:
        return []
    tie = itertools.count()
    g = {start: 0}
    parent: dict[State, tuple[State, Action]] = {}
    heap = [(heuristic(start), next(tie), start)]
    closed = set()
    while heap:
        _, _, s = heapq.heappop(heap)
        if s in closed:
            continue
        if s in goals:
            path = []
            while s != start:
                prev, a = parent[s]
                path.append((prev, a))
                s = prev
            return path[::-1]
        closed.add(s)
        succ = gamma.successors(s)
        for a in actions:
            t = succ.get(a)
            if t is None or t in closed:
                continue
            ng = g[s] + 1
            if ng < g.get(t, ng + 1):
                g[t] = ng
                parent[t] = (s, a)
                heapq.heappush(heap, (ng + heuristic(t), next(tie), t))
    return None


def path_to_policy(path: list[tuple[State, Action]]) -> dict[State, Action]:
    out: dict[State, Action] = {}
    for s, a in path:
        out.setdefault(s, a)
    return out


def euclidean_heuristic(pt, goals, scale: float):
    if scale <= 0:
        return lambda s: 0.0
    G = [tuple(float(v) for v in pt.mean(g)) for g in goals]
    mu, row = pt.means, pt.row

    def h(s: State) -> float:
        p = mu[row(s)].tolist()
        return min(math.dist(p, g) for g in G) / scale

    return h


def plan(
    problem: PlanningProblem,
    histories: Histories | None = None,
    rng: np.random.Generator | None = None,
    previous_action: Action | None = None,
) -> Policy:
    dom = problem.domain
    scale = edge_scale(dom.gamma, dom.perception)
    h = euclidean_heuristic(dom.perception, problem.goals, scale)
    path = astar(dom.gamma, dom.actions, problem.current, problem.goals, h)
    if path is not None:
        return Policy(path_to_policy(path), GOAL_DIRECTED)
    return explore(dom, histories or Histories(), problem.current, rng, previous_action)


def _frontier_step(domain, histories: Histories, current: State) -> Action | None:
    """First action of a shortest gamma path to a state with an unexplored action."""
    actions = domain.actions
    gamma = domain.gamma

    def open_at(s):
        succ = gamma.successors(s)
        return any(a not in succ or histories.tried(s, a) == 0 for a in actions)

    first: dict[State, Action] = {current: None}
    frontier = [current]
    while frontier:
        nxt = []
        for s in frontier:
            succ = gamma.successors(s)
            for a in actions:
                t = succ.get(a)
                if t is None or t in first:
                    continue
                first[t] = a if s == current else first[s]
                if open_at(t):
                    return first[t]
                nxt.append(t)
        frontier = nxt
    return None


def explore(
    domain,
    histories: Histories,
    current: State,
    rng: np.random.Generator | None = None,
    previous_action: Action | None = None,
) -> Policy:
    """One-step exploratory policy.

    Preference order: gamma undefined at ``current``, never tried from
    ``current``, first step toward the nearest state with such an action,
    least recently visited predicted successor. The last tier skips the
    previous action when anything else is available; remaining ties are
    broken with ``rng``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    succ = domain.gamma.successors(current)
    tier = [a for a in domain.actions if a not in succ]
    if not tier:
        tier = [a for a in domain.actions if histories.tried(current, a) == 0]
    if not tier:
        a = _frontier_step(domain, histories, current)
        if a is not None:
            return Policy({current: a}, EXPLORATORY)
        acts = [a for a in domain.actions if a != previous_action] or list(domain.actions)

        def recency(a):
            t = histories.last_visit(succ[a])
            return -1 if t is None else t

        best = min(recency(a) for a in acts)
        tier = [a for a in acts if recency(a) == best]
    a = tier[int(rng.integers(len(tier)))] if len(tier) > 1 else tier[0]
    return Policy({current: a}, EXPLORATORY)
