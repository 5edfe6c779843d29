import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degem import (
    Graph,
    InputError,
    TwoColoring,
    bipartition,
    common_neighbors,
    degeneracy,
    greedy_color,
    mask_to_list,
    min_degree_subgraph,
    random_bipartite,
    random_coloring,
    random_degenerate,
    random_graph,
)
from degem.graph import (
    format_coloring,
    format_edge_list,
    nth_set_bit,
    parse_coloring,
    parse_edge_list,
)

from oracle import degeneracy_oracle, graph_edges


def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


def path(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete(n):
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def star(leaves):
    return Graph(leaves + 1, [(0, i + 1) for i in range(leaves)])


def cube():
    edges = []
    for u in range(8):
        for b in range(3):
            v = u ^ (1 << b)
            if u < v:
                edges.append((u, v))
    return Graph(8, edges)


def test_graph_invariants():
    g = random_graph(40, 0.4, 7)
    assert g.edge_count == sum(g.degree(v) for v in range(g.n)) // 2
    for u, v in g.edges():
        assert g.has_edge(v, u)
    for v in range(g.n):
        assert not g.has_edge(v, v)


def test_graph_rejects_bad_edges():
    with pytest.raises(InputError):
        Graph(3, [(0, 3)])
    with pytest.raises(InputError):
        Graph(3, [(1, 1)])


def test_common_neighbors_triangle():
    g = triangle()
    assert mask_to_list(common_neighbors(g, (0, 1), g.full_mask)) == [2]


def test_common_neighbors_empty_tuple_convention():
    g = path(5)
    t = 0b10110
    assert common_neighbors(g, (), t) == t


def test_common_neighbors_path():
    # path 0-1-2-3: the only mutual neighbor of 0 and 2 is 1
    g = path(4)
    assert mask_to_list(common_neighbors(g, (0, 2), g.full_mask)) == [1]


def test_common_neighbors_subtuple_monotone():
    g = random_graph(30, 0.5, 3)
    rng = random.Random(5)
    for _ in range(50):
        q = tuple(rng.randrange(30) for _ in range(3))
        sub = q[:2]
        big = common_neighbors(g, q, g.full_mask)
        small = common_neighbors(g, sub, g.full_mask)
        assert big & ~small == 0


def test_degeneracy_examples():
    assert degeneracy(complete(4))[0] == 3
    assert degeneracy(star(5))[0] == 1
    assert degeneracy(cube())[0] == 3  # min and max degree of Q_3 are both 3


def test_degeneracy_ordering_property():
    g = random_graph(60, 0.3, 11)
    d, order = degeneracy(g)
    pos = {v: i for i, v in enumerate(order)}
    residual = []
    for i, v in enumerate(order):
        later = sum(1 for u in mask_to_list(g.adj[v]) if pos[u] > i)
        residual.append(later)
        assert later <= d
    # peeling witness: the suffix from the max-residual vertex has min degree d
    i = max(range(len(order)), key=lambda i: residual[i])
    suffix = sum(1 << v for v in order[i:])
    assert min((g.adj[v] & suffix).bit_count() for v in order[i:]) == residual[i] == d


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 14), st.floats(0.1, 0.9), st.integers(0, 10**6))
def test_degeneracy_matches_oracle(n, p, seed):
    g = random_graph(n, p, seed)
    assert degeneracy(g)[0] == degeneracy_oracle(n, graph_edges(g))


def test_greedy_color_examples():
    g = complete(4)
    colors = greedy_color(g, degeneracy(g)[1])
    assert len(set(colors)) == 4
    c6 = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
    colors = greedy_color(c6, degeneracy(c6)[1])
    assert len(set(colors)) == 2


def test_greedy_color_degenerate_bound():
    g = random_degenerate(150, 2, 9)
    d, order = degeneracy(g)
    colors = greedy_color(g, order)
    assert max(colors) + 1 <= d + 1 <= 3
    for u, v in g.edges():
        assert colors[u] != colors[v]


def test_random_graph_extremes():
    assert random_graph(10, 0, 1).edge_count == 0
    assert random_graph(10, 1, 1).edge_count == 45


def test_random_graph_deterministic():
    a = random_graph(50, 0.37, 123)
    b = random_graph(50, 0.37, 123)
    assert a.adj == b.adj
    c = random_graph(50, 0.37, 124)
    assert a.adj != c.adj


def test_random_degenerate_certified():
    g = random_degenerate(100, 2, 5)
    assert degeneracy(g)[0] <= 2


def test_two_coloring_partition():
    col = random_coloring(60, 8)
    blue = col.blue()
    rng = random.Random(2)
    for _ in range(1000):
        u, v = rng.sample(range(60), 2)
        assert col.red.has_edge(u, v) != blue.has_edge(u, v)
    assert col.color_of(0, 1) in ("red", "blue")


def test_min_degree_subgraph_examples():
    assert min_degree_subgraph(complete(5), 4) == 0b11111
    assert min_degree_subgraph(star(5), 2) == 0


def test_min_degree_subgraph_dense_random():
    # at density ~alpha the whole graph typically clears alpha*n/2 already
    alpha = 0.5
    g = random_graph(400, alpha, 17)
    core = min_degree_subgraph(g, alpha * g.n / 2)
    assert core
    members = mask_to_list(core)
    assert min((g.adj[v] & core).bit_count() for v in members) >= alpha * g.n / 2


def test_min_degree_subgraph_induced_property():
    g = random_graph(80, 0.2, 4)
    core = min_degree_subgraph(g, 10)
    for v in mask_to_list(core):
        assert (g.adj[v] & core).bit_count() >= 10


def test_bipartition():
    g = random_bipartite(10, 12, 0.5, 3)
    a, b = bipartition(g)
    for u, v in g.edges():
        assert ((a >> u) & 1) != ((a >> v) & 1)
    with pytest.raises(InputError):
        bipartition(triangle())


def test_nth_set_bit():
    mask = (1 << 3) | (1 << 70) | (1 << 200)
    assert nth_set_bit(mask, 0) == 3
    assert nth_set_bit(mask, 1) == 70
    assert nth_set_bit(mask, 2) == 200
    with pytest.raises(IndexError):
        nth_set_bit(mask, 3)


def test_edge_list_roundtrip():
    g = random_graph(25, 0.3, 77)
    text = format_edge_list(g)
    g2 = parse_edge_list(io.StringIO(text))
    assert g2.adj == g.adj
    col = random_coloring(20, 5)
    col2 = parse_coloring(io.StringIO(format_coloring(col)))
    assert col2.red.adj == col.red.adj


def test_edge_list_comments_and_errors():
    g = parse_edge_list(["# header", "3 2", "0 1  # an edge", "1 2"])
    assert g.edge_count == 2
    with pytest.raises(InputError):
        parse_edge_list(["3 5", "0 1"])
    with pytest.raises(InputError):
        parse_coloring(["3 1", "0 1"])
