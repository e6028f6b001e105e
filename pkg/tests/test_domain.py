import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planactlearn.domain import (
    ExtendedDomain,
    Histories,
    PlanningProblem,
    StateVarSchema,
    TransitionFn,
    append_observation,
    append_transition,
    state_count,
    successor,
)
from planactlearn.errors import InvalidInput, InvalidState


@pytest.mark.parametrize(
    "cards, expected",
    [((2, 2), 4), ((3,), 3), ((1, 1, 6), 6), ((3, 2), 6)],
)
def test_state_count(cards, expected):
    schema = StateVarSchema((f"v{i}", [str(k) for k in range(c)]) for i, c in enumerate(cards))
    assert state_count(schema) == expected
    assert len(list(schema.states())) == expected


def test_schema_rejects_bad_input():
    with pytest.raises(InvalidInput):
        StateVarSchema([])
    with pytest.raises(InvalidInput):
        StateVarSchema([("i", [])])
    with pytest.raises(InvalidInput):
        StateVarSchema([("i", ["1"]), ("i", ["2"])])


def test_with_value_keeps_old_indices():
    schema = StateVarSchema([("i", ["1", "2"]), ("j", ["1", "2"])])
    grown, v = schema.with_value(0)
    assert v == 2
    assert grown.values(0) == ("1", "2", "3")
    assert schema.cardinalities == (2, 2)
    assert grown.value_ids((1, 0)) == schema.value_ids((1, 0))


def test_normalize_pads_new_variables():
    schema = StateVarSchema([("i", ["1", "2"])]).with_variable("b", ["0", "1"])
    assert schema.normalize((1,)) == (1, 0)
    with pytest.raises(InvalidState):
        schema.normalize((2, 0))
    with pytest.raises(InvalidState):
        schema.normalize((0, 0, 0))


def test_example1_successor(ex1):
    assert successor(ex1.gamma, (0, 0), "e") == (1, 0)
    assert successor(ex1.gamma, (0, 0), "w") is None


def test_transition_fn_set_reports_change():
    g = TransitionFn()
    assert g.set((0,), "a", (1,))
    assert not g.set((0,), "a", (1,))
    assert g.set((0,), "a", (0,))
    assert list(g.predecessors((0,))) == [(0,)]
    assert list(g.predecessors((1,))) == []
    assert len(g) == 1


def test_histories_bookkeeping():
    h = Histories()
    h.append_transition((0,), "a", (1,))
    h.append_transition((0,), "a", (1,))
    h.append_transition((0,), "a", (0,))
    h.append_observation((1,), np.array([1.0, 2.0]))
    assert h.count((0,), "a", (1,)) == 2
    assert h.tried((0,), "a") == 3
    assert h.tried((1,), "a") == 0
    assert h.observation_count((1,)) == 1
    assert len(h.tr) == 3 and len(h.obs) == 1


def test_observation_is_copied():
    h = Histories()
    x = np.array([1.0, 2.0])
    append_observation(h, ((0,), x))
    x[0] = 99.0
    assert h.observations_of((0,))[0][0] == 1.0
    append_transition(h, ((0,), "a", (0,)))
    assert h.tr == [((0,), "a", (0,))]


def test_snapshot_round_trip(ex1, tmp_path):
    p = tmp_path / "d.json"
    ex1.save(p)
    back = ExtendedDomain.load(p)
    assert back.schema == ex1.schema
    assert sorted(back.gamma.items()) == sorted(ex1.gamma.items())
    for s, g in ex1.perception.items():
        h = back.perception[s]
        assert np.array_equal(g.mu, h.mu) and np.array_equal(g.sigma, h.sigma)
    assert json.loads(p.read_text()) == back.to_dict()


def test_snapshot_rejects_unknown_format(ex1):
    data = ex1.to_dict()
    data["format"] = "other/9"
    with pytest.raises(InvalidInput):
        ExtendedDomain.from_dict(data)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=2))
def test_snapshot_floats_exact(mu):
    schema = StateVarSchema([("s", ["a"])])
    from planactlearn.perception import PerceptionTable

    pt = PerceptionTable(2, 0.1 * np.eye(2))
    pt.add((0,), np.array(mu))
    dom = ExtendedDomain(schema, ("n",), TransitionFn(), pt)
    back = ExtendedDomain.from_dict(json.loads(json.dumps(dom.to_dict())))
    assert np.array_equal(back.perception.mean((0,)), pt.mean((0,)))


def test_planning_problem_validation(ex1):
    with pytest.raises(InvalidInput):
        PlanningProblem(ex1, (0, 0), frozenset())
    p = PlanningProblem(ex1, (1, 1), {(1, 1)})
    assert p.solved()
