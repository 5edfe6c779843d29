"""Bitset-backed simple graphs and the primitives everything else consumes.

Adjacency is stored as one Python int per vertex, used as an n-bit row, so
the common-neighborhood kernel is a chain of word-wise ANDs. Vertex sets
travel as the same kind of int mask; ``as_mask`` accepts iterables of ids
wherever that is more convenient. Ordered vertex tuples are plain Python
tuples (repetitions allowed).

All randomized operations take an explicit 64-bit seed and draw from
``random.Random`` (the stdlib Mersenne Twister); equal seeds reproduce
equal outputs bit for bit. ``derive_seed`` gives a stable way to fork
per-restart or per-stage child seeds.
"""

from __future__ import annotations

import random
from typing import Iterable, Iterator, Sequence

MASK64 = (1 << 64) - 1

VertexTuple = Sequence[int]


class InputError(ValueError):
    """Bad argument or malformed input (CLI exit code 2)."""


class BudgetExceeded(RuntimeError):
    """An exact enumeration would exceed the configured budget."""


def derive_seed(seed: int, *indices: int) -> int:
    """Mix a seed with stage/restart indices via splitmix64 steps."""
    x = seed & MASK64
    for idx in indices:
        x = (x + 0x9E3779B97F4A7C15 + (idx & MASK64)) & MASK64
        z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        x = z ^ (z >> 31)
    return x


# ---------------------------------------------------------------------------
# mask helpers


def as_mask(vs: int | Iterable[int], n: int) -> int:
    """Normalize a vertex set (mask or iterable of ids) to an int mask."""
    if isinstance(vs, int):
        if vs < 0 or vs >> n:
            raise InputError(f"mask has bits outside [0, {n})")
        return vs
    mask = 0
    for v in vs:
        if not 0 <= v < n:
            raise InputError(f"vertex id {v} out of range [0, {n})")
        mask |= 1 << v
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def mask_to_list(mask: int) -> list[int]:
    return list(iter_bits(mask))


def nth_set_bit(mask: int, idx: int) -> int:
    """Return the position of the idx-th set bit (0-based, ascending)."""
    pos = 0
    while True:
        word = mask & MASK64
        c = word.bit_count()
        if idx < c:
            while True:
                b = word & -word
                if idx == 0:
                    return pos + b.bit_length() - 1
                idx -= 1
                word ^= b
        idx -= c
        mask >>= 64
        pos += 64
        if not mask:
            raise IndexError("not enough set bits")


def random_bit(mask: int, rng: random.Random) -> int:
    """Uniform random element of a nonempty mask."""
    k = mask.bit_count()
    if k == 0:
        raise IndexError("empty mask")
    return nth_set_bit(mask, rng.randrange(k))


# ---------------------------------------------------------------------------
# graphs


class Graph:
    """Immutable simple undirected graph on vertices 0..n-1."""

    __slots__ = ("n", "adj", "edge_count")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise InputError("vertex count must be non-negative")
        adj = [0] * n
        count = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) out of range [0, {n})")
            if u == v:
                raise InputError(f"self-loop at {u}")
            if not (adj[u] >> v) & 1:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
                count += 1
        self.n = n
        self.adj = adj
        self.edge_count = count

    @classmethod
    def from_rows(cls, rows: Sequence[int]) -> "Graph":
        """Build from trusted symmetric adjacency rows (no validation)."""
        g = cls.__new__(cls)
        g.n = len(rows)
        g.adj = list(rows)
        g.edge_count = sum(r.bit_count() for r in rows) // 2
        return g

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adj[u] >> v) & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in iter_bits(self.adj[u] >> (u + 1)):
                yield u, v + u + 1

    def complement(self) -> "Graph":
        full = self.full_mask
        return Graph.from_rows(
            [(full & ~self.adj[v]) & ~(1 << v) for v in range(self.n)]
        )

    def density(self) -> float:
        pairs = self.n * (self.n - 1) // 2
        return self.edge_count / pairs if pairs else 0.0

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"


class TwoColoring:
    """Red/blue edge coloring of the complete graph K_m.

    Only the red graph is stored; blue is its complement within K_m.
    """

    __slots__ = ("m", "red")

    def __init__(self, m: int, red: Graph):
        if red.n != m:
            raise InputError("red graph must live on the coloring's m vertices")
        self.m = m
        self.red = red

    def blue(self) -> Graph:
        return self.red.complement()

    def subgraph(self, color: str) -> Graph:
        if color == "red":
            return self.red
        if color == "blue":
            return self.blue()
        raise InputError(f"unknown color {color!r}")

    def color_of(self, u: int, v: int) -> str:
        if u == v:
            raise InputError("no color on a non-edge (u == v)")
        return "red" if self.red.has_edge(u, v) else "blue"


# ---------------------------------------------------------------------------
# core operations


def common_neighbors(g: Graph, q: VertexTuple, t: int | Iterable[int]) -> int:
    """Mask of vertices in t adjacent to every entry of q.

    An empty tuple returns t itself (the N(empty; T) = T convention; the
    source material never evaluates this case).
    """
    mask = as_mask(t, g.n)
    for v in q:
        if not 0 <= v < g.n:
            raise InputError(f"vertex id {v} out of range [0, {g.n})")
        mask &= g.adj[v]
    return mask


def codegree(g: Graph, q: VertexTuple, t_mask: int) -> int:
    """|N(q; t)| for a pre-validated tuple; the hot inner kernel."""
    for v in q:
        t_mask &= g.adj[v]
    return t_mask.bit_count()


def degeneracy(g: Graph) -> tuple[int, list[int]]:
    """Exact degeneracy and a peeling order.

    Repeatedly removes a minimum-degree vertex (ties by lowest id); the
    returned d is the largest residual degree seen at removal time, and in
    the returned order each vertex has at most d neighbors later on.
    """
    import heapq

    n = g.n
    remaining = g.full_mask
    deg = [g.degree(v) for v in range(n)]
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    order: list[int] = []
    d = 0
    while heap:
        dv, v = heapq.heappop(heap)
        if not (remaining >> v) & 1 or dv != deg[v]:
            continue
        d = max(d, dv)
        order.append(v)
        remaining ^= 1 << v
        for u in iter_bits(g.adj[v] & remaining):
            deg[u] -= 1
            heapq.heappush(heap, (deg[u], u))
    return d, order


def greedy_color(g: Graph, ordering: Sequence[int]) -> list[int]:
    """Proper coloring, greedy in reverse peeling order.

    With a degeneracy ordering of a d-degenerate graph this uses at most
    d+1 colors, since each vertex sees only its later neighbors colored.
    """
    if sorted(ordering) != list(range(g.n)):
        raise InputError("ordering must be a permutation of the vertices")
    color = [-1] * g.n
    for v in reversed(ordering):
        used = {color[u] for u in iter_bits(g.adj[v]) if color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return color


def min_degree_subgraph(g: Graph, threshold: float) -> int:
    """Mask of the maximal induced subgraph with min degree >= threshold.

    Peels vertices of current degree below the threshold until none remain;
    may return the empty mask.
    """
    if threshold < 0:
        raise InputError("threshold must be non-negative")
    remaining = g.full_mask
    queue = [v for v in range(g.n) if (g.adj[v] & remaining).bit_count() < threshold]
    while queue:
        nxt: list[int] = []
        for v in queue:
            if not (remaining >> v) & 1:
                continue
            if (g.adj[v] & remaining).bit_count() < threshold:
                remaining ^= 1 << v
                for u in iter_bits(g.adj[v] & remaining):
                    if (g.adj[u] & remaining).bit_count() < threshold:
                        nxt.append(u)
        queue = nxt
    return remaining


def bipartition(g: Graph) -> tuple[int, int]:
    """Proper 2-coloring as a pair of masks; InputError on an odd cycle."""
    side = [-1] * g.n
    for root in range(g.n):
        if side[root] >= 0:
            continue
        side[root] = 0
        stack = [root]
        while stack:
            v = stack.pop()
            for u in iter_bits(g.adj[v]):
                if side[u] < 0:
                    side[u] = 1 - side[v]
                    stack.append(u)
                elif side[u] == side[v]:
                    raise InputError("graph is not bipartite")
    a = sum(1 << v for v in range(g.n) if side[v] == 0)
    return a, g.full_mask & ~a


# ---------------------------------------------------------------------------
# random generation

_DENSE_LIMIT = 6000  # above this the O(n^2) byte-matrix path is not worth it


def _dense_random_rows(n: int, p: float, rng: random.Random) -> list[int]:
    import numpy as np

    nbytes = 4 * n * n
    u = np.frombuffer(rng.randbytes(nbytes), dtype=np.uint32).reshape(n, n)
    m = (u < int(p * 2**32)).astype(np.uint8)
    m = np.triu(m, 1)
    m = m | m.T
    packed = np.packbits(m, axis=1, bitorder="little")
    return [int.from_bytes(packed[i].tobytes(), "little") for i in range(n)]


def random_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p), deterministic for a given seed."""
    if not 0 <= p <= 1:
        raise InputError("edge probability must lie in [0, 1]")
    rng = random.Random(seed)
    if p == 0:
        return Graph(n)
    if p == 1:
        full = (1 << n) - 1
        return Graph.from_rows([full & ~(1 << v) for v in range(n)])
    if n <= _DENSE_LIMIT:
        return Graph.from_rows(_dense_random_rows(n, p, rng))
    edges = [
        (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p
    ]
    return Graph(n, edges)


def random_bipartite(n1: int, n2: int, p: float, seed: int) -> Graph:
    """Random bipartite graph; side one is 0..n1-1, side two is n1..n1+n2-1."""
    if not 0 <= p <= 1:
        raise InputError("edge probability must lie in [0, 1]")
    rng = random.Random(seed)
    n = n1 + n2
    rows = [0] * n
    for u in range(n1):
        r = 0
        for j in range(n2):
            if rng.random() < p:
                r |= 1 << j
        rows[u] = r << n1
        for j in iter_bits(r):
            rows[n1 + j] |= 1 << u
    return Graph.from_rows(rows)


def random_coloring(m: int, seed: int) -> TwoColoring:
    """Uniform red/blue coloring of K_m (red is G(m, 1/2))."""
    return TwoColoring(m, random_graph(m, 0.5, seed))


def random_degenerate(n: int, d: int, seed: int) -> Graph:
    """Incremental back-edge model: vertex v joins to min(d, v) earlier
    vertices chosen uniformly, so the result is d-degenerate by construction."""
    if d < 0:
        raise InputError("d must be non-negative")
    rng = random.Random(seed)
    edges = []
    for v in range(1, n):
        for u in rng.sample(range(v), min(d, v)):
            edges.append((u, v))
    return Graph(n, edges)


# ---------------------------------------------------------------------------
# edge-list text format

# First data line "n m", then m lines "u v", 0-indexed; '#' starts a comment.
# A coloring file carries a "complete m" header and then the red edge list.


def _data_lines(lines: Iterable[str]) -> Iterator[list[str]]:
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def parse_edge_list(lines: Iterable[str]) -> Graph:
    it = _data_lines(lines)
    try:
        header = next(it)
    except StopIteration:
        raise InputError("empty edge-list input") from None
    if len(header) != 2:
        raise InputError("edge-list header must be 'n m'")
    n, m = int(header[0]), int(header[1])
    edges = []
    for tok in it:
        if len(tok) != 2:
            raise InputError(f"bad edge line: {' '.join(tok)}")
        edges.append((int(tok[0]), int(tok[1])))
    if len(edges) != m:
        raise InputError(f"header promised {m} edges, found {len(edges)}")
    return Graph(n, edges)


def format_edge_list(g: Graph) -> str:
    out = [f"{g.n} {g.edge_count}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def parse_coloring(lines: Iterable[str]) -> TwoColoring:
    rows = list(_data_lines(lines))
    if not rows or rows[0][0] != "complete" or len(rows[0]) != 2:
        raise InputError("coloring input must start with 'complete m'")
    m = int(rows[0][1])
    red = parse_edge_list(" ".join(tok) for tok in rows[1:])
    if red.n != m:
        raise InputError("red edge list does not match the declared m")
    return TwoColoring(m, red)


def format_coloring(c: TwoColoring) -> str:
    return f"complete {c.m}\n" + format_edge_list(c.red)


def read_edge_list(path: str) -> Graph:
    with open(path) as fh:
        return parse_edge_list(fh)


def write_edge_list(g: Graph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_edge_list(g))


def read_coloring(path: str) -> TwoColoring:
    with open(path) as fh:
        return parse_coloring(fh)


def write_coloring(c: TwoColoring, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(format_coloring(c))
