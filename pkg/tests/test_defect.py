import math
import random

import pytest

from degem import (
    BudgetExceeded,
    DefectParams,
    Graph,
    InputError,
    count_low_codegree,
    defect,
    moment_exact,
    moment_sampled,
    random_graph,
)
from degem.defect import bound_holds, measure_moment, EvalSettings
from degem.graph import as_mask

from oracle import adj_sets, defect_oracle, graph_edges, moment_oracle, random_instance


def lib_graph(n, edges):
    return Graph(n, edges)


def test_defect_examples():
    # |N| = 10 >= theta = 5 -> 0
    g = Graph(12, [(0, v) for v in range(2, 12)])
    assert defect(g, 5, (0,), g.full_mask) == 0.0
    # |N| = 2 < theta = 6 -> 3
    g = Graph(4, [(0, 2), (0, 3)])
    assert defect(g, 6, (0,), g.full_mask) == 3.0
    # empty neighborhood -> +inf
    assert defect(g, 4, (1,), g.full_mask) == math.inf


def test_defect_monotonicity_random():
    rng = random.Random(0)
    for trial in range(200):
        n, edges, d, s, theta, irng = random_instance(trial, n_max=15)
        g = lib_graph(n, edges)
        adj = adj_sets(n, edges)
        q = tuple(irng.randrange(n) for _ in range(d))
        extra = tuple(irng.randrange(n) for _ in range(irng.randrange(0, 3)))
        t_small = [v for v in range(n) if irng.random() < 0.6]
        t_big = sorted(set(t_small) | {v for v in range(n) if irng.random() < 0.3})
        theta_hi = theta + irng.uniform(0, 3)
        if not t_small:
            continue
        w = defect(g, theta, q, t_big)
        w_prime = defect(g, theta_hi, q + extra, t_small)
        assert w <= w_prime or (math.isinf(w) and math.isinf(w_prime))
        assert w == defect_oracle(adj, theta, q, set(t_big))


def test_moment_exact_matches_oracle():
    for trial in range(60):
        n, edges, d, s, theta, irng = random_instance(trial + 1000)
        g = lib_graph(n, edges)
        adj = adj_sets(n, edges)
        factors = []
        for _ in range(d):
            f = {v for v in range(n) if irng.random() < 0.7} or {0}
            factors.append(f)
        t = {v for v in range(n) if irng.random() < 0.8} or {1}
        got = moment_exact(g, DefectParams(theta, s, d), factors, t)
        want = moment_oracle(adj, theta, s, factors, t)
        if math.isinf(want):
            assert math.isinf(got.value)
            assert got.infinite_hits > 0
        else:
            assert got.value == pytest.approx(want, abs=1e-12)
            assert got.infinite_hits == 0
        assert got.mode == "exact"


def test_moment_exact_trivial_cases():
    # plenty of common neighbors everywhere -> all defects zero
    g = Graph(8, [(u, v) for u in range(8) for v in range(u + 1, 8)])
    res = moment_exact(g, DefectParams(3, 2, 2), [g.full_mask] * 2, g.full_mask)
    assert res.value == 0.0
    # singleton product: the moment is that tuple's defect
    g2 = Graph(4, [(0, 2), (0, 3)])
    res2 = moment_exact(g2, DefectParams(6, 1, 1), [{0}], g2.full_mask)
    assert res2.value == defect(g2, 6, (0,), g2.full_mask) == 3.0


def test_moment_s0_convention():
    # s = 0 counts nonzero defects, never infinity, even on empty neighborhoods
    g = Graph(3, [(0, 1)])
    res = moment_exact(g, DefectParams(1, 0, 2), [g.full_mask] * 2, g.full_mask)
    assert res.value <= 1.0
    assert res.infinite_hits == 0
    assert not math.isinf(res.value)


def test_moment_budget():
    g = random_graph(30, 0.5, 1)
    with pytest.raises(BudgetExceeded):
        moment_exact(g, DefectParams(2, 1, 3), [g.full_mask] * 3, g.full_mask, budget=100)


def test_moment_sampled_degenerate_and_zero():
    g = Graph(8, [(u, v) for u in range(8) for v in range(u + 1, 8)])
    res = moment_sampled(g, DefectParams(3, 2, 2), [g.full_mask] * 2, g.full_mask, 50, 9)
    assert res.value == 0.0 and res.std_error == 0.0
    one = moment_sampled(g, DefectParams(3, 2, 2), [g.full_mask] * 2, g.full_mask, 1, 9)
    assert one.sample_count == 1


def test_moment_sampled_tracks_exact():
    g = random_graph(20, 0.5, 21)
    params = DefectParams(3.0, 2, 2)
    exact = moment_exact(g, params, [g.full_mask] * 2, g.full_mask)
    assert not math.isinf(exact.value)
    # pool 50 independent sampled estimates; the average should sit within
    # three pooled standard errors of the exact value
    estimates = []
    for i in range(50):
        r = moment_sampled(g, params, [g.full_mask] * 2, g.full_mask, 400, 1000 + i)
        assert not math.isinf(r.value)
        estimates.append(r.value)
    mean = sum(estimates) / len(estimates)
    var = sum((x - mean) ** 2 for x in estimates) / (len(estimates) - 1)
    pooled = math.sqrt(var / len(estimates))
    assert abs(mean - exact.value) <= 3 * max(pooled, 1e-12)


def test_moment_sampled_deterministic():
    g = random_graph(20, 0.5, 2)
    params = DefectParams(3.0, 1, 2)
    a = moment_sampled(g, params, [g.full_mask] * 2, g.full_mask, 100, 5)
    b = moment_sampled(g, params, [g.full_mask] * 2, g.full_mask, 100, 5)
    assert a.value == b.value and a.std_error == b.std_error


def test_count_low_codegree_examples():
    # complete bipartite host: every pair has the whole other side in common
    edges = [(u, v) for u in range(4) for v in range(4, 10)]
    g = Graph(10, edges)
    v1 = as_mask(range(4), 10)
    v2 = as_mask(range(4, 10), 10)
    assert count_low_codegree(g, DefectParams(6, 2, 2), v1, v2) == 0
    # empty host: every tuple is bad
    empty = Graph(10)
    assert count_low_codegree(empty, DefectParams(1, 2, 2), v1, v2) == 4**2
    with pytest.raises(InputError):
        count_low_codegree(empty, DefectParams(1, 0, 2), v1, v2)


def test_count_low_codegree_strictly_below_moment():
    # the moment strictly dominates the count whenever any bad tuple exists
    rng = random.Random(3)
    checked = 0
    for trial in range(100):
        n = rng.randrange(8, 19)
        g = random_graph(n, rng.uniform(0.3, 0.8), trial)
        v1 = {v for v in range(n) if rng.random() < 0.7} or {0}
        v2 = {v for v in range(n) if rng.random() < 0.7} or {1}
        d, s = 2, 4
        theta = rng.uniform(1, n)
        params = DefectParams(theta, s, d)
        res = moment_exact(g, params, [v1] * d, v2)
        if math.isinf(res.value):
            continue
        count = count_low_codegree(g, params, v1, v2)
        if count:
            checked += 1
            assert count < res.value
    assert checked > 3


def test_bound_holds_semantics():
    from degem.defect import MomentResult

    assert bound_holds(MomentResult(0.5, "exact"), 0.5)
    assert not bound_holds(MomentResult(0.6, "exact"), 0.5)
    assert bound_holds(MomentResult(0.4, "sampled", 100, 0.01), 0.5)
    assert not bound_holds(MomentResult(0.49, "sampled", 100, 0.01), 0.5)
    assert not bound_holds(MomentResult(math.inf, "sampled", 100, math.inf, 3), 1e9)


def test_measure_moment_switches_modes():
    g = random_graph(30, 0.5, 4)
    s = EvalSettings(exact_cutoff=100, samples=50)
    small = measure_moment(g, 2.0, 1, [{0, 1, 2}] * 2, g.full_mask, s, 1)
    assert small.mode == "exact"
    big = measure_moment(g, 2.0, 1, [g.full_mask] * 2, g.full_mask, s, 1)
    assert big.mode == "sampled" and big.sample_count == 50
