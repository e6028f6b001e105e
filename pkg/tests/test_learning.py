import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planactlearn import learning
from planactlearn.domain import Histories, StateVarSchema, TransitionFn
from planactlearn.errors import InvalidParameter
from planactlearn.learning import (
    LearningParams,
    add_boolean_variable,
    extend_states,
    needs_new_state,
    seed_new_perceptions,
    select_variable,
    update_trans,
)


@pytest.mark.parametrize(
    "like, peak, eps, expected",
    [(0.0, 1.0, 1.0, False), (0.5, 1.0, 0.0, True), (0.6, 1.0, 0.5, False), (0.49, 1.0, 0.5, True)],
)
def test_needs_new_state(like, peak, eps, expected):
    assert needs_new_state(like, peak, eps) is expected


@pytest.mark.parametrize("field", ["alpha", "beta", "epsilon"])
def test_params_validated(field):
    with pytest.raises(InvalidParameter):
        LearningParams(**{field: 1.5})
    with pytest.raises(InvalidParameter):
        LearningParams(new_state_strategy="merge")


def test_select_variable_example1(ex1):
    assert select_variable(ex1.gamma, ex1.schema, (1, 0), "e") == 0
    assert select_variable(ex1.gamma, ex1.schema, (1, 0), "n") == 1


def test_select_variable_noop_action():
    schema = StateVarSchema([("i", ["1", "2"]), ("j", ["1", "2"])])
    gamma = TransitionFn((s, "a", s) for s in schema.states())
    assert select_variable(gamma, schema, (0, 0), "a") == 0
    assert select_variable(TransitionFn(), schema, (0, 0), "a") == 0


def test_select_variable_pick_changes_pack_count():
    schema = StateVarSchema([("rx", ["1", "2"]), ("ry", ["1"]), ("carry", ["0", "1", "2"])])
    gamma = TransitionFn()
    for x in range(2):
        for k in range(2):
            gamma.set((x, 0, k), "pick", (x, 0, k + 1))
        gamma.set((x, 0, 2), "pick", (x, 0, 2))
    gamma.set((0, 0, 0), "e", (1, 0, 0))
    assert select_variable(gamma, schema, (0, 0, 0), "pick") == 2


def brute_force_eq1(states, gamma, n_vars, a):
    best, best_i = -1, 0
    for i in range(n_vars):
        c = sum(1 for s in states if gamma.get(s, a) is not None and gamma.get(s, a)[i] != s[i])
        if c > best:
            best, best_i = c, i
    return best_i


def test_select_variable_matches_brute_force(rng):
    for _ in range(100):
        n_vars = int(rng.integers(1, 4))
        cards = [int(rng.integers(1, 5)) for _ in range(n_vars)]
        schema = StateVarSchema((f"v{i}", [str(k) for k in range(c)]) for i, c in enumerate(cards))
        states = list(schema.states())
        assert len(states) <= 100
        gamma = TransitionFn()
        for s in states:
            for a in ("a", "b"):
                if rng.random() < 0.6:
                    gamma.set(s, a, states[int(rng.integers(len(states)))])
        for a in ("a", "b"):
            s0 = states[int(rng.integers(len(states)))]
            assert select_variable(gamma, schema, s0, a) == brute_force_eq1(states, gamma, n_vars, a)


def test_extend_states_example1(ex1):
    schema, s_new_set, s_new = extend_states(ex1.schema, (1, 0), 0)
    assert sorted(s_new_set) == [(2, 0), (2, 1)]
    assert s_new == (2, 0)
    assert schema.state_count() == 6
    assert schema.label((2, 1)) == "s32"


@pytest.mark.parametrize("cards, i", [((1,), 0), ((2, 2), 1), ((3, 2, 4), 2), ((3, 2, 4), 0)])
def test_extend_states_growth_factor(cards, i):
    schema = StateVarSchema((f"v{k}", [str(v) for v in range(c)]) for k, c in enumerate(cards))
    before = schema.state_count()
    new, s_new_set, s_new = extend_states(schema, (0,) * len(cards), i)
    assert new.state_count() * cards[i] == before * (cards[i] + 1)
    assert len(s_new_set) == before // cards[i]
    assert s_new in s_new_set
    assert all(s[i] == cards[i] for s in s_new_set)


def test_add_boolean_variable(ex1):
    schema, s_new_set, s_new = add_boolean_variable(ex1.schema, (1, 0))
    assert len(s_new_set) == 4 and schema.state_count() == 8
    assert s_new == (1, 0, 1)


def test_seed_new_perceptions(ex1):
    pt = ex1.perception
    schema, s_new_set, s_new = extend_states(ex1.schema, (1, 0), 0)
    x = np.array([2.52, 0.47])
    seed_new_perceptions(pt, s_new_set, s_new, (1, 0), x, 0)
    assert np.array_equal(pt.mean((2, 0)), x)
    # sibling (2,1) copies (1,1) shifted by x - mu(1,0)
    assert np.allclose(pt.mean((2, 1)), pt.mean((1, 1)) + x - pt.mean((1, 0)))
    assert np.array_equal(pt[(2, 1)].sigma, pt.p_init_sigma)


def hist_with(s, a, outcomes):
    h = Histories()
    for t in outcomes:
        h.append_transition(s, a, t)
    return h


def test_update_trans_step9_table():
    gamma = TransitionFn([((1, 0), "n", (1, 1))])
    h = hist_with((1, 0), "n", [(1, 0)])
    assert update_trans(gamma, h, (1, 0), "n", 0.4)
    assert gamma.get((1, 0), "n") == (1, 0)


def test_update_trans_alpha_one_never_changes_defined():
    gamma = TransitionFn([((0,), "a", (1,))])
    h = hist_with((0,), "a", [(0,)] * 50)
    assert not update_trans(gamma, h, (0,), "a", 1.0)
    assert gamma.get((0,), "a") == (1,)


def test_update_trans_undefined_installs_observation():
    for alpha in (0.0, 0.5, 1.0):
        gamma = TransitionFn()
        h = hist_with((0,), "a", [(2,)])
        assert update_trans(gamma, h, (0,), "a", alpha)
        assert gamma.get((0,), "a") == (2,)


def test_update_trans_ties_go_to_smallest():
    gamma = TransitionFn()
    h = hist_with((0,), "a", [(3,), (1,), (2,), (1,), (3,)])
    update_trans(gamma, h, (0,), "a", 0.0)
    assert gamma.get((0,), "a") == (1,)


def flip_expected(alpha: float, k: int) -> bool:
    return Fraction(alpha) < Fraction(k, k + 1)


@settings(max_examples=1000, deadline=None)
@given(
    st.one_of(
        st.floats(0.0, 1.0, allow_nan=False),
        st.integers(1, 30).map(lambda k: k / (k + 1)),
        st.sampled_from([0.0, 0.5, 1.0]),
    ),
    st.integers(1, 30),
    st.lists(st.integers(2, 6), max_size=10),
)
def test_flip_law(alpha, k, noise):
    """k contrary records flip gamma(s, a) iff alpha < k/(k+1); other outcomes stay below k."""
    cur, alt = (0,), (1,)
    others = [n for n in noise if noise.count(n) < k]
    gamma = TransitionFn([((9,), "a", cur)])
    h = hist_with((9,), "a", [alt] * k + [(n,) for n in others])
    changed = update_trans(gamma, h, (9,), "a", alpha)
    assert changed == flip_expected(alpha, k)
    assert gamma.get((9,), "a") == (alt if changed else cur)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 1.0), st.lists(st.integers(0, 4), min_size=1, max_size=25), st.integers(0, 4))
def test_update_trans_matches_eq3(alpha, outcomes, cur):
    gamma = TransitionFn([((9,), "a", (cur,))])
    h = hist_with((9,), "a", [(o,) for o in outcomes])
    update_trans(gamma, h, (9,), "a", alpha)
    A = Fraction(alpha)
    score = {t: A * (t == cur) + (1 - A) * outcomes.count(t) for t in set(outcomes) | {cur}}
    top = max(score.values())
    assert score[gamma.get((9,), "a")[0]] == top
    if score[cur] == top:
        assert gamma.get((9,), "a") == (cur,)
