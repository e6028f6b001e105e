from collections import deque

import numpy as np
import pytest

from planactlearn.domain import ExtendedDomain, Histories, PlanningProblem, StateVarSchema, TransitionFn
from planactlearn.perception import PerceptionTable
from planactlearn.planner import (
    EXPLORATORY,
    GOAL_DIRECTED,
    astar,
    edge_scale,
    euclidean_heuristic,
    explore,
    plan,
)


def bfs_length(gamma, actions, start, goals):
    if start in goals:
        return 0
    seen = {start}
    q = deque([(start, 0)])
    while q:
        s, d = q.popleft()
        for a in actions:
            t = gamma.get(s, a)
            if t is None or t in seen:
                continue
            if t in goals:
                return d + 1
            seen.add(t)
            q.append((t, d + 1))
    return None


def test_example1_two_step_plan(ex1):
    pol = plan(PlanningProblem(ex1, (0, 0), {(1, 1)}))
    assert pol.kind == GOAL_DIRECTED
    first = pol.get((0, 0))
    assert first in ("e", "n")
    mid = ex1.gamma.get((0, 0), first)
    assert ex1.gamma.get(mid, pol.get(mid)) == (1, 1)


def test_goal_unreachable_after_walls(ex1):
    ex1.gamma.set((0, 1), "e", (0, 1))
    ex1.gamma.set((1, 0), "n", (1, 0))
    h = Histories()
    pol = plan(PlanningProblem(ex1, (1, 0), {(1, 1)}), h, np.random.default_rng(0))
    assert pol.kind == EXPLORATORY
    assert len(pol) == 1


def test_start_in_goal_gives_empty_path(ex1):
    assert astar(ex1.gamma, ex1.actions, (1, 1), {(1, 1)}, lambda s: 0.0) == []


def random_domain(rng, n):
    schema = StateVarSchema([("s", [str(k) for k in range(n)])])
    pts = rng.uniform(0, 20, size=(n, 2))
    pt = PerceptionTable(2, np.eye(2))
    for k in range(n):
        pt.add((k,), pts[k])
    gamma = TransitionFn()
    actions = ("a", "b", "c")
    for k in range(n):
        for a in actions:
            if rng.random() < 0.5:
                gamma.set((k,), a, (int(rng.integers(n)),))
    return ExtendedDomain(schema, actions, gamma, pt)


def test_astar_matches_bfs(rng):
    for trial in range(100):
        n = int(rng.integers(2, 400)) if trial % 10 else 10_000
        dom = random_domain(rng, n)
        start = (int(rng.integers(n)),)
        goals = {(int(rng.integers(n)),) for _ in range(int(rng.integers(1, 3)))}
        h = euclidean_heuristic(dom.perception, goals, edge_scale(dom.gamma, dom.perception))
        path = astar(dom.gamma, dom.actions, start, goals, h)
        expected = bfs_length(dom.gamma, dom.actions, start, goals)
        assert (None if path is None else len(path)) == expected
        if path:
            s = start
            for state, a in path:
                assert state == s
                s = dom.gamma.get(s, a)
            assert s in goals


def test_heuristic_is_consistent(rng):
    dom = random_domain(rng, 60)
    goals = {(3,)}
    h = euclidean_heuristic(dom.perception, goals, edge_scale(dom.gamma, dom.perception))
    for s, _, t in dom.gamma.items():
        assert h(s) <= 1.0 + h(t) + 1e-12
    assert h((3,)) == 0.0


def test_explore_prefers_undefined_then_untried(ex1):
    h = Histories()
    pol = explore(ex1, h, (0, 0), np.random.default_rng(0))
    assert pol.get((0, 0)) in ("s", "w")
    for a in ("s", "w"):
        ex1.gamma.set((0, 0), a, (0, 0))
    h.append_transition((0, 0), "s", (0, 0))
    h.append_transition((0, 0), "w", (0, 0))
    assert explore(ex1, h, (0, 0), np.random.default_rng(0)).get((0, 0)) in ("e", "n")


def test_explore_heads_for_frontier():
    schema = StateVarSchema([("s", ["0", "1", "2"])])
    pt = PerceptionTable(2, np.eye(2))
    for k in range(3):
        pt.add((k,), np.array([k, 0.0]))
    gamma = TransitionFn([((0,), "e", (1,)), ((0,), "w", (0,)), ((1,), "w", (0,)), ((1,), "e", (2,))])
    dom = ExtendedDomain(schema, ("e", "w"), gamma, pt)
    h = Histories()
    for s, a, t in gamma.items():
        h.append_transition(s, a, t)
    # (2,) has no outgoing transitions, so from (0,) the way there starts with e
    assert explore(dom, h, (0,), np.random.default_rng(0), previous_action="e").get((0,)) == "e"


def test_explore_is_seeded(ex1):
    for a in ex1.actions:
        ex1.gamma.set((0, 0), a, (0, 0))
    picks = [explore(ex1, Histories(), (0, 0), np.random.default_rng(7)).get((0, 0)) for _ in range(3)]
    assert len(set(picks)) == 1
