"""Layer decomposition of the pattern graph and forward-tuple planning.

A d-degenerate pattern splits into layers W_1, ..., W_k by repeatedly
peeling off the vertices of degree below 4d (the survivors form the next
core), then refining each layer by the color classes of a proper coloring.
The embedder consumes the (layer, color) pairs in reverse lexicographic
order; each vertex's forward neighborhood points into strictly later
pairs and is padded to a fixed arity with dummy ids that stand for
universal host vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .graph import Graph, InputError, iter_bits


def check_proper(h: Graph, coloring: Sequence[int]) -> int:
    """Validate a proper coloring; returns the number of colors used."""
    if len(coloring) != h.n:
        raise InputError("coloring must assign a color to every vertex")
    for u, v in h.edges():
        if coloring[u] == coloring[v]:
            raise InputError(f"coloring is not proper on edge ({u},{v})")
    return max(coloring, default=-1) + 1


@dataclass
class LayeredPartition:
    """Pattern layers W_i^(j), 0-indexed in both coordinates.

    ``u_sizes`` records the peeling cores |U_1|, ..., |U_k| so the halving
    property is checkable after the fact.
    """

    n: int
    k: int
    r: int
    layers: dict[tuple[int, int], tuple[int, ...]]
    layer_of: tuple[tuple[int, int], ...]
    u_sizes: tuple[int, ...]

    def pairs(self) -> list[tuple[int, int]]:
        """All (layer, color) pairs in lexicographic order."""
        return [(i, j) for i in range(self.k) for j in range(self.r)]

    def layer_sizes(self) -> dict[tuple[int, int], int]:
        return {p: len(vs) for p, vs in self.layers.items()}

    def check(self, h: Graph, d: int) -> None:
        """Assert the decomposition conclusions (valid for n >= 2)."""
        seen: set[int] = set()
        for vs in self.layers.values():
            for v in vs:
                assert v not in seen, "layers overlap"
                seen.add(v)
        assert len(seen) == self.n, "layers do not cover the vertex set"
        if self.n >= 2:
            assert self.k <= math.log2(self.n), "too many layers"
        for (i, j), vs in self.layers.items():
            assert len(vs) <= 2 ** (-i) * self.n, f"layer ({i},{j}) too large"
        for j in range(self.r):
            union = 0
            for i in range(self.k):
                for v in self.layers[(i, j)]:
                    union |= 1 << v
            for v in iter_bits(union):
                assert not (h.adj[v] & union), f"color class {j} not independent"
        tail = 0
        for i in range(self.k - 1, -1, -1):
            level = 0
            for j in range(self.r):
                for v in self.layers[(i, j)]:
                    level |= 1 << v
            tail |= level
            for v in iter_bits(level):
                assert (h.adj[v] & tail).bit_count() <= 4 * d, (
                    f"vertex {v} has more than 4d neighbors in its tail"
                )
        for a in range(len(self.u_sizes) - 1):
            assert 2 * self.u_sizes[a + 1] <= self.u_sizes[a], "core halving failed"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "r": self.r,
            "layer_sizes": {f"{i},{j}": len(vs) for (i, j), vs in self.layers.items()},
            "layer_of": [list(p) for p in self.layer_of],
            "u_sizes": list(self.u_sizes),
        }


def split(h: Graph, coloring: Sequence[int], d: int) -> LayeredPartition:
    """Peel the pattern into layers and refine them by color class."""
    if d < 1:
        raise InputError("d must be at least 1")
    r = check_proper(h, coloring)
    r = max(r, 1)
    cores = []
    u = h.full_mask
    while u:
        cores.append(u)
        nxt = 0
        for v in iter_bits(u):
            if (h.adj[v] & u).bit_count() >= 4 * d:
                nxt |= 1 << v
        if nxt == u:
            raise InputError("peeling stalled; the graph is not d-degenerate")
        u = nxt
    if not cores:
        cores = [0]
    k = len(cores)
    layers: dict[tuple[int, int], list[int]] = {
        (i, j): [] for i in range(k) for j in range(r)
    }
    layer_of: list[tuple[int, int]] = [(-1, -1)] * h.n
    for i in range(k):
        shell = cores[i] & ~(cores[i + 1] if i + 1 < k else 0)
        for v in iter_bits(shell):
            layers[(i, coloring[v])].append(v)
            layer_of[v] = (i, coloring[v])
    return LayeredPartition(
        n=h.n,
        k=k,
        r=r,
        layers={p: tuple(vs) for p, vs in layers.items()},
        layer_of=tuple(layer_of),
        u_sizes=tuple(m.bit_count() for m in cores),
    )


@dataclass
class ForwardPlan:
    """Per-vertex forward tuples, padded to arity d_pad with dummy ids.

    Dummy ids are n, n+1, ..., n+d_pad-1; they form an artificial final
    pattern layer whose host-side counterparts are universal, so padding
    never invents pattern edges. ``forward`` holds the unpadded forward
    neighborhoods, ordered by (target pair, vertex id) for reproducibility.
    """

    n: int
    d_pad: int
    forward: tuple[tuple[int, ...], ...]
    e_x: tuple[tuple[int, ...], ...]

    @property
    def dummy_count(self) -> int:
        return self.d_pad

    def dummy_ids(self) -> range:
        return range(self.n, self.n + self.d_pad)

    def is_dummy(self, v: int) -> bool:
        return v >= self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d_pad": self.d_pad,
            "forward": [list(t) for t in self.forward],
        }


def max_forward_degree(h: Graph, partition: LayeredPartition) -> int:
    """Largest forward-neighborhood size under the pair ordering."""
    rank = {p: idx for idx, p in enumerate(partition.pairs())}
    best = 0
    for v in range(h.n):
        rv = rank[partition.layer_of[v]]
        best = max(best, sum(1 for u in iter_bits(h.adj[v]) if rank[partition.layer_of[u]] > rv))
    return best


def forward_plan(h: Graph, partition: LayeredPartition, d_pad: int) -> ForwardPlan:
    """Build padded forward tuples for every pattern vertex.

    Requires d_pad >= every forward degree (4d always suffices); raises
    InputError otherwise.
    """
    if d_pad < 0:
        raise InputError("d_pad must be non-negative")
    rank = {p: idx for idx, p in enumerate(partition.pairs())}
    dummies = tuple(range(h.n, h.n + d_pad))
    fwd: list[tuple[int, ...]] = []
    ex: list[tuple[int, ...]] = []
    for v in range(h.n):
        rv = rank[partition.layer_of[v]]
        later = [u for u in iter_bits(h.adj[v]) if rank[partition.layer_of[u]] > rv]
        later.sort(key=lambda u: (rank[partition.layer_of[u]], u))
        if len(later) > d_pad:
            raise InputError(
                f"vertex {v} has {len(later)} forward neighbors; d_pad={d_pad} too small"
            )
        fwd.append(tuple(later))
        ex.append(tuple(later) + dummies[: d_pad - len(later)])
    return ForwardPlan(n=h.n, d_pad=d_pad, forward=tuple(fwd), e_x=tuple(ex))
