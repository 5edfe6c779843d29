import random

import pytest

from degem import (
    Graph,
    InputError,
    degeneracy,
    forward_plan,
    greedy_color,
    max_forward_degree,
    random_degenerate,
    split,
)


def path(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def two_coloring(h):
    d, order = degeneracy(h)
    return greedy_color(h, order)


def test_split_path_single_layer():
    # path, d = 1: no vertex reaches degree 4, so one layer per color class
    h = path(8)
    part = split(h, two_coloring(h), 1)
    assert part.k == 1
    assert sum(len(v) for v in part.layers.values()) == 8
    part.check(h, 1)


def test_split_star_two_layers():
    # K_{1,20}, d = 1: the center has degree 20 >= 4, so it forms layer two
    h = Graph(21, [(0, i) for i in range(1, 21)])
    part = split(h, two_coloring(h), 1)
    assert part.k == 2
    center_layer = part.layer_of[0]
    assert center_layer[0] == 1
    assert part.u_sizes == (21, 1)
    part.check(h, 1)


def test_split_empty_graph():
    h = Graph(9)
    part = split(h, [0] * 9, 1)
    assert part.k == 1
    assert len(part.layers[(0, 0)]) == 9


def test_split_rejects_improper_coloring():
    h = path(4)
    with pytest.raises(InputError):
        split(h, [0, 0, 1, 0], 1)


def test_split_invariants_random_corpus():
    rng = random.Random(0)
    for trial in range(25):
        n = rng.randrange(10, 400)
        d = rng.randrange(1, 6)
        h = random_degenerate(n, d, trial)
        dd, order = degeneracy(h)
        coloring = greedy_color(h, order)
        part = split(h, coloring, max(dd, 1))
        part.check(h, max(dd, 1))
        for a in range(len(part.u_sizes) - 1):
            assert 2 * part.u_sizes[a + 1] <= part.u_sizes[a]


def test_forward_plan_shapes():
    h = Graph(3, [(0, 1), (1, 2)])
    part = split(h, two_coloring(h), 1)
    plan = forward_plan(h, part, 4)
    dummies = set(plan.dummy_ids())
    for v in range(3):
        assert len(plan.e_x[v]) == 4
        pad = plan.e_x[v][len(plan.forward[v]):]
        assert all(u in dummies for u in pad)
    # isolated vertex: all dummies
    h2 = Graph(2)
    part2 = split(h2, [0, 0], 1)
    plan2 = forward_plan(h2, part2, 3)
    assert plan2.e_x[0] == tuple(plan2.dummy_ids())


def test_forward_plan_strictly_later_and_bound():
    rng = random.Random(1)
    for trial in range(15):
        h = random_degenerate(rng.randrange(20, 120), 2, 500 + trial)
        d, order = degeneracy(h)
        coloring = greedy_color(h, order)
        part = split(h, coloring, max(d, 1))
        mf = max_forward_degree(h, part)
        assert mf <= 4 * max(d, 1)
        plan = forward_plan(h, part, mf)
        rank = {p: i for i, p in enumerate(part.pairs())}
        for v in range(h.n):
            rv = rank[part.layer_of[v]]
            for u in plan.forward[v]:
                assert rank[part.layer_of[u]] > rv
                assert h.has_edge(u, v)


def test_forward_plan_too_small_pad():
    h = Graph(3, [(0, 1), (0, 2)])
    part = split(h, two_coloring(h), 1)
    need = max_forward_degree(h, part)
    if need > 0:
        with pytest.raises(InputError):
            forward_plan(h, part, need - 1)


def test_forward_plan_deterministic():
    h = random_degenerate(50, 2, 9)
    d, order = degeneracy(h)
    coloring = greedy_color(h, order)
    part = split(h, coloring, 2)
    a = forward_plan(h, part, 8)
    b = forward_plan(h, part, 8)
    assert a.e_x == b.e_x
