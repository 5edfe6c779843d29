import math

import pytest

from degem import (
    ChainSchedule,
    DrcParams,
    EvalSettings,
    Graph,
    InputError,
    TwoColoring,
    as_mask,
    defect_transfer_check,
    drc_bipartite,
    drc_chain,
    drc_general,
    drc_mutual,
    drc_pair,
    random_bipartite,
    random_coloring,
    random_graph,
    reverify,
)


def complete_bipartite(n1, n2):
    return Graph(n1 + n2, [(u, n1 + v) for u in range(n1) for v in range(n2)])


def sides(n1, n2):
    return as_mask(range(n1), n1 + n2), as_mask(range(n1, n1 + n2), n1 + n2)


def mono_coloring(m):
    red = Graph(m, [(u, v) for u in range(m) for v in range(u + 1, m)])
    return TwoColoring(m, red)


FAST = EvalSettings(exact_cutoff=100_000, samples=2000)


def test_bipartite_complete_first_draw():
    g = complete_bipartite(30, 40)
    v1, v2 = sides(30, 40)
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=1.0, theta=2.0,
                  max_restarts=5, settings=FAST)
    out = drc_bipartite(g, v1, v2, p, 1)
    assert out.ok and out.restarts == 0
    assert out.sets[0] == v2
    assert all(rec["passed"] for rec in out.stats["guarantees"])


def test_bipartite_empty_graph_fails_without_error():
    g = Graph(20)
    v1, v2 = sides(10, 10)
    p = DrcParams(d=1, s=1, t=1, eta=0.5, eps=0.5, alpha=0.5, theta=2.0,
                  max_restarts=3, settings=FAST)
    out = drc_bipartite(g, v1, v2, p, 1)
    assert not out.ok
    assert out.stats["exhausted"]


def test_bipartite_theta_cap_checked():
    g = complete_bipartite(10, 10)
    v1, v2 = sides(10, 10)
    p = DrcParams(d=2, s=1, t=2, eta=0.1, eps=0.5, alpha=0.5, theta=5.0,
                  max_restarts=3, settings=FAST)
    with pytest.raises(InputError):
        drc_bipartite(g, v1, v2, p, 1)


def test_bipartite_spec_instance():
    g = random_bipartite(2000, 2000, 0.5, 42)
    v1, v2 = sides(2000, 2000)
    alpha = 0.49
    p = DrcParams(d=2, s=1, t=2, eta=0.25, eps=0.5, alpha=alpha,
                  theta=0.25 * alpha**2 * 2000, max_restarts=100,
                  settings=EvalSettings(exact_cutoff=300_000, samples=3000))
    out = drc_bipartite(g, v1, v2, p, 7)
    assert out.ok and out.restarts < 100
    assert reverify(g, out, v1, v2)


def test_general_complete_and_density_error():
    g = random_graph(60, 1.0, 0)
    half = as_mask(range(30), 60)
    rest = g.full_mask & ~half
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=1.0, theta=3.0,
                  max_restarts=5, settings=FAST)
    out = drc_general(g, half, rest, p, 2)
    assert out.ok and out.restarts == 0
    sparse = random_graph(60, 0.2, 1)
    with pytest.raises(InputError):
        drc_general(sparse, half, rest, p, 2)


def test_general_random_instance():
    g = random_bipartite(1500, 1500, 0.55, 6)
    v1, v2 = sides(1500, 1500)
    p = DrcParams(d=2, s=1, t=2, eta=0.25, eps=0.5, alpha=0.5,
                  theta=0.25 * 0.25 * 1500, max_restarts=100, settings=FAST)
    out = drc_general(g, v1, v2, p, 5)
    assert out.ok
    assert reverify(g, out, v1, v2)


def test_seed_determinism():
    g = random_bipartite(500, 500, 0.5, 9)
    v1, v2 = sides(500, 500)
    p = DrcParams(d=2, s=1, t=2, eta=0.3, eps=0.5, alpha=0.45,
                  theta=0.3 * 0.45**2 * 500, max_restarts=50, settings=FAST)
    a = drc_bipartite(g, v1, v2, p, 31)
    b = drc_bipartite(g, v1, v2, p, 31)
    assert a.to_json() == b.to_json()


# ---------------------------------------------------------------------------


def test_transfer_complete_host():
    g = complete_bipartite(12, 12)
    v1, v2 = sides(12, 12)
    rep = defect_transfer_check(g, v2, v1, d=1, t=1, s=2, theta=3.0,
                                trials=200, seed=3)
    assert rep.lhs_mean == 0.0 and rep.rhs == 0.0


def test_transfer_singleton():
    g = Graph(5, [(0, 2), (0, 3), (1, 0)])
    a2 = {0}
    v1 = {1, 2, 3, 4}
    rep = defect_transfer_check(g, a2, v1, d=1, t=1, s=1, theta=5.0,
                                trials=50, seed=1)
    # both sides equal the transferred defect of the single tuple (0, 0)
    assert rep.lhs_mean == pytest.approx(rep.rhs)


def test_transfer_statistical_identity():
    # dense enough that no transferred neighborhood comes up empty
    g = random_graph(16, 0.85, 13)
    rep = defect_transfer_check(g, as_mask(range(8), 16), as_mask(range(8, 16), 16),
                                d=1, t=1, s=2, theta=3.0, trials=10_000, seed=5)
    assert not math.isinf(rep.rhs) and rep.infinite_trials == 0
    tol = 3 * max(rep.lhs_std_error, 1e-12)
    assert abs(rep.lhs_mean - rep.rhs) <= tol


# ---------------------------------------------------------------------------


def test_pair_complete_bipartite():
    g = complete_bipartite(40, 40)
    v1, v2 = sides(40, 40)
    p = DrcParams(d=2, s=2, t=2, eta=1.0 / 16, eps=0.5, alpha=1.0,
                  theta=0.5 * (1 / 16) * 40, max_restarts=10, settings=FAST)
    out = drc_pair(g, v1, v2, p, 1)
    assert out.ok
    assert out.sets[0] == v1 and out.sets[1] == v2


def test_pair_spec_instance():
    g = random_bipartite(1000, 1000, 0.6, 11)
    v1, v2 = sides(1000, 1000)
    alpha = 0.5
    eta = alpha**4 / 16
    p = DrcParams(d=2, s=4, t=4, eta=eta, eps=0.5, alpha=alpha,
                  theta=0.5 * eta * alpha**6 * 1000, max_restarts=200,
                  settings=FAST)
    out = drc_pair(g, v1, v2, p, 3)
    assert out.ok and out.restarts < 200
    assert all(rec["passed"] for rec in out.stats["guarantees"])
    assert reverify(g, out, v1, v2)


def test_pair_alpha_above_min_degree_errors():
    g = random_bipartite(200, 200, 0.5, 2)
    v1, v2 = sides(200, 200)
    p = DrcParams(d=2, s=2, t=2, eta=0.9**4 / 16, eps=0.5, alpha=0.9,
                  theta=0.001, max_restarts=5, settings=FAST)
    with pytest.raises(InputError):
        drc_pair(g, v1, v2, p, 1)


# ---------------------------------------------------------------------------


def test_chain_monochromatic():
    col = mono_coloring(120)
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=0.5, theta=0.2,
                  max_restarts=10, settings=FAST)
    out = drc_chain(col, 2, p, 1)
    assert out.ok and out.color == "red"
    assert all(rec["passed"] for rec in out.stats["guarantees"])


def test_chain_random_instance():
    col = random_coloring(4000, 5)
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=0.5, theta=7.0,
                  max_restarts=40, settings=FAST)
    out = drc_chain(col, 2, p, 9)
    assert out.ok
    a, b = out.sets
    assert a & ~b == 0  # nesting
    floor = 2.0 ** (-2 * 3) * 4000
    assert a.bit_count() >= floor and b.bit_count() >= floor


def test_chain_r1_returns_single_drc_set():
    col = random_coloring(900, 3)
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=0.5, theta=10.0,
                  max_restarts=20, settings=FAST)
    out = drc_chain(col, 1, p, 2)
    assert out.ok and len(out.sets) == 1
    assert 0 < out.sets[0].bit_count() < 900


def test_chain_theta_cap():
    col = random_coloring(100, 1)
    p = DrcParams(d=2, s=1, t=2, eta=0.5, eps=0.5, alpha=0.5, theta=50.0,
                  max_restarts=5, settings=FAST)
    with pytest.raises(InputError):
        drc_chain(col, 2, p, 1)


# ---------------------------------------------------------------------------


def test_mutual_monochromatic():
    col = mono_coloring(200)
    p = DrcParams(d=2, s=1, t=1, eta=1.0, eps=0.5, alpha=0.5, theta=4.0,
                  xi=0.3, max_restarts=20, settings=FAST)
    out = drc_mutual(col, 2, p, 1)
    assert out.ok and out.color == "red"
    for rec in out.stats["guarantees"]:
        if rec["kind"] == "moment":
            assert rec["value"] == 0.0


def test_mutual_random_instance():
    col = random_coloring(3000, 21)
    p = DrcParams(d=2, s=1, t=1, eta=0.25, eps=0.5, alpha=0.5, theta=8.0,
                  xi=0.4, max_restarts=40,
                  settings=EvalSettings(exact_cutoff=100_000, samples=2500))
    out = drc_mutual(col, 2, p, 17)
    assert out.ok
    assert len(out.sets) == 2
    for m in out.sets:
        assert m.bit_count() >= 8
    recs = {rec["name"]: rec for rec in out.stats["guarantees"]}
    assert recs["final_mu_0"]["passed"] and recs["final_mu_1"]["passed"]
    # events were measured each accepted round
    assert len(out.stats["rounds"]) == 2
    # determinism
    again = drc_mutual(col, 2, p, 17)
    assert again.to_json() == out.to_json()


def test_mutual_theta_preconditions():
    col = random_coloring(50, 2)
    p = DrcParams(d=2, s=1, t=1, eta=0.5, eps=0.5, alpha=0.5, theta=60.0,
                  xi=0.4, max_restarts=5, settings=FAST)
    with pytest.raises(InputError):
        drc_mutual(col, 2, p, 1)
    p2 = DrcParams(d=2, s=1, t=1, eta=0.5, eps=0.5, alpha=0.5, theta=30.0,
                   xi=0.4, max_restarts=5, settings=FAST)
    with pytest.raises(InputError):
        drc_mutual(col, 2, p2, 1)  # 30 > xi^2 m = 8


def test_chain_schedule_invariant():
    sched = ChainSchedule.compute(d=2, t=2, r=3, xi=0.25, n=1000)
    sched.check()
    assert sched.t_rounds[0] == 8**4 * 4
    assert sched.theta0 == 0.25 * 1000 and sched.theta1 == 0.0625 * 1000


def test_outcome_stats_rederivable():
    # re-evaluating each recorded guarantee from (graph, witness, sets)
    # reproduces the stored numbers exactly
    g = random_bipartite(800, 800, 0.5, 14)
    v1, v2 = sides(800, 800)
    p = DrcParams(d=2, s=1, t=2, eta=0.3, eps=0.5, alpha=0.45,
                  theta=0.3 * 0.45**2 * 800, max_restarts=50,
                  settings=EvalSettings(exact_cutoff=1000, samples=500))
    out = drc_general(g, v1, v2, p, 8)
    assert out.ok
    mom = next(r for r in out.stats["guarantees"] if r["kind"] == "moment")
    assert mom["moment"]["mode"] == "sampled"  # cutoff forced sampling
    assert reverify(g, out, v1, v2)
