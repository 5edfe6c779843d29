"""The layered random-greedy embedder and its certificates.

Pattern vertices go in one (layer, class) pair at a time, pairs in
reverse lexicographic order. Within a pair, vertices are sorted by
decreasing defect of their already-embedded forward images and each is
placed uniformly at random among the unused common neighbors, provided at
least half of that neighborhood is still free (step 3-3); an empty
neighborhood (3-1) or a mostly-used one (3-2) keeps the process total but
marks the run failed. The per-layer certificate (defect-power sums below
half the layer threshold) implies after the fact that only 3-3 ever
fired, and the failure-probability formula turns a measured moment into a
diagnostic bound.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field

from .decompose import ForwardPlan, LayeredPartition
from .defect import defect_of_count
from .drc import DrcOutcome, DrcParams, drc_bipartite
from .graph import (
    Graph,
    InputError,
    as_mask,
    common_neighbors,
    derive_seed,
    mask_to_list,
    random_bit,
)


@dataclass
class EmbedPlan:
    """Everything one embedding run needs.

    ``targets`` maps each (layer, class) pair to a host-vertex mask;
    ``thetas[i]`` is the defect threshold shared by layer i's pairs. Host
    dummies are virtual: ids host.n, host.n+1, ... stand for universal
    vertices and never appear inside target masks.
    """

    host: Graph
    pattern: Graph
    partition: LayeredPartition
    forward: ForwardPlan
    targets: dict[tuple[int, int], int]
    thetas: list[float]

    def pair_order(self) -> list[tuple[int, int]]:
        return self.partition.pairs()

    def nonempty_pairs(self) -> list[tuple[int, int]]:
        return [p for p in self.pair_order() if self.partition.layers[p]]

    @property
    def gamma(self) -> float:
        """max(1, |V_i^(j)| / theta_i) over all pairs but the final one."""
        best = 1.0
        for (i, j) in self.nonempty_pairs()[:-1]:
            best = max(best, self.targets.get((i, j), 0).bit_count() / self.thetas[i])
        return best

    def validate(self, strict: bool = True) -> None:
        part = self.partition
        if len(self.thetas) != part.k:
            raise InputError("need one theta per layer")
        if any(t <= 0 for t in self.thetas):
            raise InputError("thetas must be positive")
        seen = 0
        for p in self.pair_order():
            m = self.targets.get(p, 0)
            if m >> self.host.n:
                raise InputError("target mask outside the host")
            if m & seen:
                raise InputError("target sets must be pairwise disjoint")
            seen |= m
        pairs = self.nonempty_pairs()
        for p in pairs:
            if part.layers[p] and not self.targets.get(p, 0):
                raise InputError(f"pair {p} has pattern vertices but no target set")
        if strict and pairs:
            last = pairs[-1]
            for (i, j) in pairs[:-1]:
                w = len(part.layers[(i, j)])
                if self.thetas[i] < 2 * w:
                    raise InputError(
                        f"theta_{i} = {self.thetas[i]} below 2|W_{i}^({j})| = {2 * w}"
                    )
            if self.targets[last].bit_count() < 2 * len(part.layers[last]):
                raise InputError("final target smaller than twice its pattern layer")

    def to_dict(self) -> dict:
        return {
            "thetas": list(self.thetas),
            "targets": {f"{i},{j}": mask_to_list(m) for (i, j), m in self.targets.items()},
            "partition": self.partition.to_dict(),
            "forward": self.forward.to_dict(),
        }


@dataclass
class EmbedState:
    """Trace of one run: the map, per-vertex defects, layer sums, step log."""

    psi: dict[int, int]
    used: int
    omega: dict[int, float]
    lam: dict[tuple[int, int], float]
    steps: dict[int, str]
    queries: list[tuple[tuple[int, int], tuple[int, ...]]]
    success: bool
    first_failure: int | None
    seed: int

    def embedding(self, n_pattern: int) -> dict[int, int]:
        return {x: v for x, v in self.psi.items() if x < n_pattern}

    def recompute_lambda(self, plan: EmbedPlan, s: int) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for p, vs in plan.partition.layers.items():
            out[p] = sum(self.omega[x] ** s for x in vs if x in self.omega)
        return out

    def to_dict(self) -> dict:
        return {
            "psi": {str(x): v for x, v in sorted(self.psi.items())},
            "omega": {str(x): w for x, w in sorted(self.omega.items())},
            "lambda": {f"{i},{j}": v for (i, j), v in self.lam.items()},
            "steps": {str(x): s for x, s in sorted(self.steps.items())},
            "success": self.success,
            "first_failure": self.first_failure,
            "seed": self.seed,
        }


def random_greedy_embed(g: Graph, plan: EmbedPlan, seed: int,
                        strict: bool = True) -> EmbedState:
    """Run the random-greedy process once; the trace reports success iff
    every placement fired step 3-3 (or belonged to the initial layer).

    The process stays total after a 3-1/3-2 firing, as the analysis has
    it, so completed traces remain comparable to the certificate.
    """
    plan.validate(strict=strict)
    part, fwd = plan.partition, plan.forward
    rng = random.Random(seed)
    psi: dict[int, int] = {}
    used = 0
    omega: dict[int, float] = {}
    lam: dict[tuple[int, int], float] = {p: 0.0 for p in part.pairs()}
    steps: dict[int, str] = {}
    queries: list[tuple[tuple[int, int], tuple[int, ...]]] = []
    first_failure: int | None = None
    pairs = plan.nonempty_pairs()
    order = list(reversed(pairs))
    exponent = 2 * max(fwd.d_pad, 1)

    if fwd.dummy_count:
        # the padded variant: map the artificial pattern layer onto the
        # virtual universal host vertices, uniformly and independently
        for idx, x in enumerate(fwd.dummy_ids()):
            psi[x] = g.n + rng.randrange(fwd.dummy_count)
            steps[x] = "1"
    elif order:
        top = order[0]
        w = list(part.layers[top])
        vmask = plan.targets[top]
        pool = mask_to_list(vmask)
        if len(pool) < len(w):
            raise InputError("final target too small for an injection")
        for x, img in zip(w, rng.sample(pool, len(w))):
            psi[x] = img
            used |= 1 << img
            steps[x] = "1"
            omega[x] = 0.0
        order = order[1:]

    for (i, j) in order:
        vmask = plan.targets[(i, j)]
        theta = plan.thetas[i]
        layer = part.layers[(i, j)]
        nbhd: dict[int, int] = {}
        for x in layer:
            mask = vmask
            imgs = []
            for y in fwd.e_x[x]:
                img = psi[y]
                if img < g.n:  # virtual host dummies are universal
                    mask &= g.adj[img]
                    imgs.append(img)
            nbhd[x] = mask
            omega[x] = defect_of_count(mask.bit_count(), theta)
            lam[(i, j)] += omega[x] ** exponent if omega[x] != math.inf else math.inf
            queries.append(((i, j), tuple(imgs)))
        for x in sorted(layer, key=lambda x: (-omega[x], x)):
            nb = nbhd[x]
            avail = nb & ~used
            cnt, acnt = nb.bit_count(), avail.bit_count()
            if cnt == 0:
                pick = random_bit(vmask, rng)
                steps[x] = "3-1"
                if first_failure is None:
                    first_failure = x
            elif acnt < cnt / 2:
                pick = random_bit(nb, rng)
                steps[x] = "3-2"
                if first_failure is None:
                    first_failure = x
            else:
                pick = random_bit(avail, rng)
                steps[x] = "3-3"
            psi[x] = pick
            used |= 1 << pick

    return EmbedState(
        psi=psi, used=used, omega=omega, lam=lam, steps=steps, queries=queries,
        success=first_failure is None, first_failure=first_failure, seed=seed,
    )


def certificate_check(state: EmbedState, plan: EmbedPlan, s: int) -> dict[tuple[int, int], bool]:
    """Per-pair success certificate: sum of omega^s at most theta_i / 2.

    Requires theta_i >= 2 |W_i^(j)| on every pair but the last; when every
    pair passes, the trace must contain no 3-1/3-2 firing (asserted).
    """
    part = plan.partition
    pairs = plan.nonempty_pairs()
    for (i, j) in pairs[:-1]:
        if plan.thetas[i] < 2 * len(part.layers[(i, j)]):
            raise InputError("certificate needs theta_i >= 2|W_i^(j)|")
    out: dict[tuple[int, int], bool] = {}
    for (i, j) in pairs:
        total = 0.0
        for x in part.layers[(i, j)]:
            w = state.omega.get(x, 0.0)
            total = math.inf if w == math.inf else total + w**s
        out[(i, j)] = total <= plan.thetas[i] / 2
    if all(out.values()):
        assert state.success, "certificate passed on a run that fired 3-1/3-2"
    return out


def failure_bound(plan: EmbedPlan, mu_4d: float) -> float:
    """The diagnostic bound 2^(2d+2) gamma^(2d) mu_(4d) sum |W|/theta over
    all pairs but the final one (whose defects vanish identically)."""
    d = max(plan.forward.d_pad, 1)
    gamma = plan.gamma
    total = 0.0
    for (i, j) in plan.nonempty_pairs()[:-1]:
        total += len(plan.partition.layers[(i, j)]) / plan.thetas[i]
    return 2.0 ** (2 * d + 2) * gamma ** (2 * d) * mu_4d * total


def verify_embedding(h: Graph, g: Graph, mapping: dict[int, int]
                     ) -> tuple[bool, tuple[str, int, int] | None]:
    """Injective homomorphism check; returns the first violation if any."""
    if len(mapping) != h.n or set(mapping) != set(range(h.n)):
        raise InputError("mapping must be total on the pattern's vertices")
    seen: dict[int, int] = {}
    for x in range(h.n):
        img = mapping[x]
        if not 0 <= img < g.n:
            raise InputError(f"image {img} outside the host")
        if img in seen:
            return False, ("injective", seen[img], x)
        seen[img] = x
    for u, v in h.edges():
        if not g.has_edge(mapping[u], mapping[v]):
            return False, ("edge", u, v)
    return True, None


# ---------------------------------------------------------------------------
# the one-side-bounded embedder


@dataclass
class OneSideResult:
    ok: bool
    mapping: dict[int, int] | None
    sum_defect: float
    restarts: int
    drc: DrcOutcome
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "mapping": {str(x): v for x, v in sorted((self.mapping or {}).items())},
            "sum_defect": self.sum_defect,
            "restarts": self.restarts,
            "drc": self.drc.to_dict(),
            "stats": self.stats,
        }


def embed_one_side_bounded(
    g: Graph, v1, v2, h: Graph, w1, w2, eps: float, p: DrcParams, seed: int
) -> OneSideResult:
    """Embed a bipartite pattern whose first side has degrees at most d.

    First a DRC round with t = 2, s = 1 carves A out of the second host
    side; random injections of the pattern's second side into A are drawn
    until the total defect of the forward tuples is at most |W1| (the
    first-moment existence argument); the first side then extends greedily
    in decreasing defect order, which the defect budget keeps feasible.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    v1m, v2m = as_mask(v1, g.n), as_mask(v2, g.n)
    if v1m & v2m:
        raise InputError("host sides must be disjoint")
    w1l = sorted(mask_to_list(as_mask(w1, h.n)))
    w2l = sorted(mask_to_list(as_mask(w2, h.n)))
    if set(w1l) & set(w2l) or len(w1l) + len(w2l) != h.n:
        raise InputError("w1, w2 must partition the pattern's vertices")
    d = p.d
    if len(w2l) < d:
        raise InputError("second pattern side smaller than d")
    w2set = set(w2l)
    for u, v in h.edges():
        if (u in w2set) == (v in w2set):
            raise InputError("pattern has an edge inside one side")
    for x in w1l:
        if h.degree(x) > d:
            raise InputError(f"vertex {x} exceeds the degree bound d = {d}")
    n1, n2 = len(w1l), len(w2l)
    if v1m.bit_count() < (1 + eps) * p.alpha ** (-d) * n1 - 1e-9:
        raise InputError("|v1| below (1+eps) alpha^-d |W1|")
    if v2m.bit_count() < ((1 + eps) / eps) ** (1 / d) * p.alpha**-2 * n2 - 1e-9:
        raise InputError("|v2| below ((1+eps)/eps)^(1/d) alpha^-2 |W2|")
    ff = 1.0
    for a in range(d):
        ff *= n2 - a
    if n2**d / ff > 1 + eps + 1e-9:
        raise InputError("|W2|^d over the falling factorial exceeds 1 + eps")

    theta = float(n1)
    drc_params = dataclasses.replace(
        p, t=2, s=1, theta=theta, eta=1 / (1 + eps), eps=eps / (1 + eps)
    )
    out = drc_bipartite(g, v1m, v2m, drc_params, derive_seed(seed, 1))
    if not out.ok:
        return OneSideResult(False, None, math.inf, 0, out,
                             {"stage": "drc", "reason": "drc exhausted"})
    a_mask = out.sets[0]
    a_list = mask_to_list(a_mask)
    if len(a_list) < n2:
        return OneSideResult(False, None, math.inf, 0, out,
                             {"stage": "drc", "reason": "A smaller than W2"})

    e_v = {x: tuple(sorted(u for u in mask_to_list(h.adj[x]))) for x in w1l}
    best = math.inf
    for attempt in range(p.max_restarts):
        rng = random.Random(derive_seed(seed, 2, attempt))
        images = rng.sample(a_list, n2)
        phi = dict(zip(w2l, images))
        total = 0.0
        omega: dict[int, float] = {}
        for x in w1l:
            mask = v1m
            for y in e_v[x]:
                mask &= g.adj[phi[y]]
            w = defect_of_count(mask.bit_count(), theta)
            omega[x] = w
            total = math.inf if w == math.inf else total + w
            if total > n1:
                break
        best = min(best, total)
        if total > n1:
            continue

        used = 0
        mapping = dict(phi)
        ordered = sorted(w1l, key=lambda x: (-omega[x], x))
        feasible = True
        for step, x in enumerate(ordered, start=1):
            mask = v1m
            for y in e_v[x]:
                mask &= g.adj[phi[y]]
            if omega[x] != 0:
                assert mask.bit_count() >= step, (
                    "extension ran out of room despite the defect budget"
                )
            avail = mask & ~used
            if not avail:
                feasible = False
                break
            pick = avail & -avail  # smallest free common neighbor
            img = pick.bit_length() - 1
            mapping[x] = img
            used |= pick
        if not feasible:
            continue
        ok, violation = verify_embedding(h, g, mapping)
        assert ok, f"one-side embedding failed verification: {violation}"
        return OneSideResult(True, mapping, total, attempt, out,
                             {"sum_bound": n1})
    return OneSideResult(False, None, best, p.max_restarts, out,
                         {"stage": "injection", "best_sum": best,
                          "sum_bound": n1})
