import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halldecomp.decomp import post_alldiff_bc, post_alldiff_rc, post_bi_clique
from halldecomp.engine import (
    Branching,
    Change,
    DomainState,
    Engine,
    EngineUsageError,
    Fixpoint,
    PruneResult,
    SolveStatus,
    format_domain,
)
from halldecomp.propagators import NotEqual

from conftest import HALL_PAIR, domains_of, make_vars, random_domains


def test_new_int_basics():
    eng = Engine()
    x = eng.new_int(1, 1)
    b = eng.new_bool()
    assert eng.is_fixed(x) and eng.value(x) == 1
    assert eng.domain_values(b) == [0, 1]
    with pytest.raises(EngineUsageError):
        eng.new_int(3, 2)


def test_new_int_then_occurrence_bound():
    eng = Engine()
    n14 = eng.new_int(2, 20)
    assert eng.prune(n14, Change.tighten_lb(3)) is PruneResult.CHANGED
    assert (eng.lb[n14], eng.ub[n14]) == (3, 20)


def test_prune_examples():
    eng = Engine()
    x = eng.new_int(1, 4, True)
    assert eng.prune(x, Change.remove(1)) is PruneResult.CHANGED
    assert eng.domain_values(x) == [2, 3, 4]

    y = eng.new_int(3, 4)
    assert eng.prune(y, Change.tighten_ub(5)) is PruneResult.UNCHANGED

    z = eng.new_int(2, 2)
    assert eng.prune(z, Change.remove(2)) is PruneResult.CONFLICT
    # sticky until pop
    assert eng.failed
    assert eng.prune(y, Change.assign(3)) is PruneResult.CONFLICT
    assert eng.propagate() is Fixpoint.CONFLICT


def test_conflict_cleared_by_pop():
    eng = Engine()
    z = eng.new_int(2, 3)
    eng.push()
    eng.prune(z, Change.assign(2))
    assert eng.prune(z, Change.remove(2)) is PruneResult.CONFLICT
    eng.pop()
    assert not eng.failed
    assert eng.domain_values(z) == [2, 3]


def test_interior_removal_on_bounds_var_is_ignored():
    eng = Engine()
    x = eng.new_int(1, 5)
    assert eng.prune(x, Change.remove(3)) is PruneResult.UNCHANGED
    assert eng.domain_values(x) == [1, 2, 3, 4, 5]
    assert eng.prune(x, Change.remove(5)) is PruneResult.CHANGED
    assert eng.ub[x] == 4


def test_value_set_bounds_skip_holes():
    eng = Engine()
    x = eng.new_from_values([1, 4, 7])
    eng.prune(x, Change.tighten_lb(2))
    assert (eng.lb[x], eng.ub[x]) == (4, 7)
    eng.prune(x, Change.remove(7))
    assert eng.domain_values(x) == [4]


def test_pop_at_root():
    with pytest.raises(EngineUsageError):
        Engine().pop()


def test_push_assign_pop_identical():
    eng = Engine()
    x = eng.new_from_values([1, 3, 4, 9])
    before = eng.snapshot()
    eng.push()
    eng.prune(x, Change.assign(3))
    eng.pop()
    assert eng.snapshot() == before


def test_nested_push_pop():
    eng = Engine()
    xs = [eng.new_int(1, 5, True) for _ in range(3)]
    root = eng.snapshot()
    for i, x in enumerate(xs):
        eng.push()
        eng.prune(x, Change.assign(i + 1))
    assert eng.level == 3
    for _ in range(3):
        eng.pop()
    assert eng.snapshot() == root and eng.level == 0


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_trail_exactness(data):
    eng = Engine()
    xs = [eng.new_int(0, 6, data.draw(st.booleans())) for _ in range(4)]
    eng.push()
    eng.prune(xs[0], Change.remove(3))
    snap = eng.snapshot()
    eng.push()
    ops = data.draw(st.lists(st.tuples(st.integers(0, 3), st.sampled_from("remove lb ub assign".split()), st.integers(-1, 7)), max_size=12))
    for i, kind, v in ops:
        eng.prune(xs[i], Change(kind, v))
    eng.pop()
    assert eng.snapshot() == snap
    entries = eng.trail_entries()
    assert all(e.level == 1 for e in entries)


def test_domain_state_invariants():
    with pytest.raises(ValueError):
        DomainState(0, 3, 2)
    with pytest.raises(ValueError):
        DomainState(0, 1, 3, frozenset({2, 3}))
    assert DomainState(0, 1, 3).size == 3
    assert DomainState(0, 1, 3, frozenset({1, 3})).as_set() == {1, 3}


def test_format_domain():
    assert format_domain([1, 2, 3, 5]) == "{1..3,5}"
    assert format_domain([]) == "{}"
    assert format_domain([4]) == "{4}"


def test_hall_pair_fixpoint_rc():
    eng, xs = make_vars(HALL_PAIR)
    post_alldiff_rc(eng, xs)
    assert eng.propagate() is Fixpoint.FIXPOINT
    # the full fixpoint also uses the Hall interval [2,2] created by X2 = 2
    assert domains_of(eng, xs) == [{3, 4}, {2}, {3, 4}, {5}, {1}]


def test_hall_pair_rc_drops_34_before_2():
    eng, xs = make_vars(HALL_PAIR, trace=True)
    post_alldiff_rc(eng, xs)
    eng.propagate()
    x4 = [(old, new) for name, old, new in eng.trace if name == "X4"]
    # X4 loses 3 and 4 (Hall interval [3,4]) before losing 2
    assert x4[-1][1] == (5, 5)


def test_hall_pair_fixpoint_bc():
    eng, xs = make_vars(HALL_PAIR, values=False)
    post_alldiff_bc(eng, xs)
    assert eng.propagate() is Fixpoint.FIXPOINT
    assert domains_of(eng, xs) == [{3, 4}, {2}, {3, 4}, {5}, {1}]


def test_php6_root_conflict():
    eng, xs = make_vars([set(range(1, 6))] * 6)
    post_alldiff_rc(eng, xs)
    assert eng.propagate() is Fixpoint.CONFLICT


def test_solve_php5_hi_and_bi():
    eng, xs = make_vars([set(range(1, 5))] * 5)
    post_alldiff_rc(eng, xs)
    r = eng.solve(xs)
    assert r.status is SolveStatus.UNSAT and r.stats.backtracks == 0

    eng, xs = make_vars([set(range(1, 5))] * 5)
    post_bi_clique(eng, xs)
    r = eng.solve(xs, Branching.LEX)
    assert r.status is SolveStatus.UNSAT
    # golden value under Lex branching, values ascending: 4! - 1
    assert r.stats.backtracks == 23


def test_solve_restores_level_and_finds_solution():
    eng, xs = make_vars([{1, 2, 3}] * 3)
    post_alldiff_rc(eng, xs)
    eng.propagate()
    before = eng.snapshot()
    r = eng.solve(xs, Branching.MIN_DOMAIN)
    assert r.status is SolveStatus.SAT
    assert sorted(r.assignment.values()) == [1, 2, 3]
    assert eng.snapshot() == before and eng.level == 0


def test_solve_limits_return_unknown():
    eng, xs = make_vars([set(range(1, 7))] * 7)
    post_bi_clique(eng, xs)
    r = eng.solve(xs, node_limit=5)
    assert r.status is SolveStatus.UNKNOWN and r.stats.nodes == 5
    r = eng.solve(xs, time_limit=0.0)
    assert r.status is SolveStatus.UNKNOWN


def test_not_equal_only_on_fixed():
    eng = Engine()
    x, y = eng.new_int(1, 2), eng.new_int(1, 2)
    eng.post(NotEqual(x, y))
    eng.propagate()
    assert eng.domain_values(y) == [1, 2]
    eng.prune(x, Change.assign(1))
    eng.propagate()
    assert eng.domain_values(y) == [2]


def _dive(eng, xs):
    """Assign the smallest value of the first unfixed variable until done or failed."""
    eng.propagate()
    while not eng.failed:
        free = [x for x in xs if not eng.is_fixed(x)]
        if not free:
            break
        eng.push()
        eng.prune(free[0], Change.assign(eng.lb[free[0]]))
        eng.propagate()


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_wake_budget_down_one_branch(n):
    d = n
    rng = random.Random(n)
    cases = [[set(range(1, d + 1))] * n] + [random_domains(rng, n, d) for _ in range(5)]
    for doms in cases:
        eng, xs = make_vars(doms)
        post_alldiff_rc(eng, xs)
        _dive(eng, xs)
        w = eng.wakeups
        assert w["channel_interval"] <= 2 * n * d ** 3
        assert w["sum_bool"] <= 2 * n * d ** 2
