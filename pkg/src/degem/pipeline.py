"""End-to-end pipelines: density embedding and monochromatic search.

Both pipelines chain the stage operations with seeded retries at every
level and report what each stage measured; a success always carries a
verified embedding. The asymptotic parameter prescriptions behind the
stages are far out of reach at desk scale, so the configuration exposes
every knob, derives workable defaults from the instance (layer sizes
drive the certificate threshold, expected set sizes drive the mutual-DRC
threshold), and records the choices in the result for replay.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field

from .decompose import LayeredPartition, forward_plan, max_forward_degree, split
from .defect import EvalSettings
from .drc import DrcParams, drc_mutual, drc_pair
from .embed import EmbedPlan, certificate_check, random_greedy_embed, verify_embedding
from .graph import (
    Graph,
    InputError,
    TwoColoring,
    as_mask,
    bipartition,
    degeneracy,
    derive_seed,
    greedy_color,
    iter_bits,
    mask_to_list,
    min_degree_subgraph,
)
from .prune import PartitionParams, e1_tuple_check, random_partition, remove_concentrated


@dataclass(frozen=True)
class PipelineConfig:
    """Desk-scale pipeline parameters; None means derive from the instance."""

    d: int | None = None
    r: int | None = None
    s: int = 1
    t: int = 1
    eta: float = 0.25
    xi: float = 0.35
    alpha: float = 0.45
    theta: float | None = None
    theta_part: float | None = None
    eps_prime: float = 0.05
    e1_tolerance: float = 0.35
    e1_samples: int = 2000
    exact_cutoff: int = 200_000
    samples: int = 3000
    drc_arity_cap: int = 4
    partition_arity: int = 2
    prune_arity: int = 1
    embed_retries: int = 20
    partition_retries: int = 5
    partition_restarts: int = 30
    drc_retries: int = 3
    stage_restarts: int = 60
    fallback_max: int = 8
    size_safety: float = 1.2
    p_schedule: tuple[float, ...] | str | None = None

    def settings(self) -> EvalSettings:
        return EvalSettings(exact_cutoff=self.exact_cutoff, samples=self.samples)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.p_schedule is not None:
            d["p_schedule"] = list(self.p_schedule)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        if kwargs.get("p_schedule") is not None:
            kwargs["p_schedule"] = tuple(kwargs["p_schedule"])
        return cls(**kwargs)


@dataclass
class PipelineResult:
    ok: bool
    color: str | None
    mapping: dict[int, int] | None
    stages: list[dict]
    seed: int
    config: dict
    certificate: dict | None = None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "color": self.color,
            "mapping": {str(x): v for x, v in sorted((self.mapping or {}).items())},
            "stages": self.stages,
            "seed": self.seed,
            "config": self.config,
            "certificate": self.certificate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def geometric_schedule(k: int, d: int) -> tuple[float, ...]:
    """The geometric layer schedule p_i ~ 2^(-i/(80d)), normalized to sum 1."""
    raw = [2.0 ** (-(i + 1) / (80 * d)) for i in range(k)]
    total = sum(raw)
    return tuple(x / total for x in raw)


def _prepare_pattern(
    h: Graph, cfg: PipelineConfig, coloring: list[int] | None = None
) -> tuple[int, int, LayeredPartition, "object", int]:
    """Degeneracy check, coloring, split, forward plan; returns
    (d, d_pad, partition, plan, r)."""
    d_h, ordering = degeneracy(h)
    d = cfg.d if cfg.d is not None else max(d_h, 1)
    if d_h > d:
        raise InputError(f"pattern degeneracy {d_h} exceeds the declared d = {d}")
    if coloring is None:
        coloring = greedy_color(h, ordering)
    part = split(h, coloring, d)
    d_pad = max_forward_degree(h, part)
    fwd = forward_plan(h, part, d_pad)
    return d, d_pad, part, fwd, part.r


def _auto_theta_part(part: LayeredPartition, p_sched: tuple[float, ...], r: int) -> float:
    """Smallest theta making theta_i = p_i theta / (2r) >= 2 |W_i^(j)| hold."""
    need = 1.0
    for (i, j), vs in part.layers.items():
        if vs:
            need = max(need, 4 * r * len(vs) / p_sched[i])
    return need


def _pair_classes_to_sets(part: LayeredPartition, set_sizes: list[int]) -> list[int]:
    """Permutation sending pattern class j to a host set, larger classes
    to larger sets."""
    r = part.r
    class_size = [
        sum(len(part.layers[(i, j)]) for i in range(part.k)) for j in range(r)
    ]
    classes = sorted(range(r), key=lambda j: (-class_size[j], j))
    hosts = sorted(range(len(set_sizes)), key=lambda j: (-set_sizes[j], j))
    perm = [0] * r
    for c, hst in zip(classes, hosts):
        perm[c] = hst
    return perm


def _embed_rounds(
    gcol: Graph,
    h: Graph,
    part: LayeredPartition,
    fwd,
    parents: list[int],
    cells: dict[tuple[int, int], int],
    perm: list[int],
    pparams: PartitionParams,
    cfg: PipelineConfig,
    seed: int,
    stages: list[dict],
) -> tuple[dict[int, int] | None, dict | None, bool]:
    """Run the embedder with seed retries; returns (mapping, certificate,
    want_new_partition)."""
    r = part.r
    targets = {
        (i, j): cells.get((i, perm[j]), 0) for i in range(part.k) for j in range(r)
    }
    thetas = [pparams.theta_i(i, r) for i in range(part.k)]
    plan = EmbedPlan(
        host=gcol, pattern=h, partition=part, forward=fwd, targets=targets,
        thetas=thetas,
    )
    try:
        plan.validate(strict=True)
    except InputError as exc:
        stages.append({"stage": "plan", "ok": False, "error": str(exc)})
        return None, None, True
    for attempt in range(cfg.embed_retries):
        state = random_greedy_embed(gcol, plan, derive_seed(seed, attempt))
        if state.success:
            mapping = state.embedding(h.n)
            ok, violation = verify_embedding(h, gcol, mapping)
            assert ok, f"greedy success failed verification: {violation}"
            cert = {
                f"{i},{j}": passed
                for (i, j), passed in certificate_check(
                    state, plan, 2 * max(fwd.d_pad, 1)
                ).items()
            }
            stages.append({"stage": "embed", "ok": True, "attempts": attempt + 1})
            return mapping, cert, False
        # lazy E1 enforcement on the tuples this run actually queried
        for (i, j), tup in state.queries:
            if not tup:
                continue
            cell = targets[(i, j)]
            parent = parents[perm[j]]
            if not e1_tuple_check(gcol, tup, parent, cell, pparams.q_i(i, r)):
                stages.append(
                    {"stage": "embed", "ok": False, "attempts": attempt + 1,
                     "e1_violation": {"pair": [i, j], "tuple": list(tup)}}
                )
                return None, None, True
    stages.append({"stage": "embed", "ok": False, "attempts": cfg.embed_retries})
    return None, None, False


# ---------------------------------------------------------------------------
# bipartite density pipeline


def embed_bipartite_pipeline(
    g: Graph, h: Graph, cfg: PipelineConfig, seed: int
) -> PipelineResult:
    """Embed a d-degenerate bipartite pattern into a dense host.

    Stages: min-degree core, random balanced bipartition, two-set DRC,
    random partition (r = 2 with the factor-free moment bound), layer
    decomposition of the pattern, random-greedy embedding. Every stage
    retries on derived seeds within its budget; the report names the
    first stage whose budget ran out.
    """
    if h.n > g.n:
        raise InputError("pattern has more vertices than the host")
    side_a, _ = bipartition(h)
    h_coloring = [0 if (side_a >> v) & 1 else 1 for v in range(h.n)]
    d, d_pad, part, fwd, r = _prepare_pattern(h, cfg, h_coloring)
    d_arity = max(1, min(d_pad, cfg.drc_arity_cap))
    stages: list[dict] = []
    cfg_dict = cfg.to_dict()

    core = min_degree_subgraph(g, cfg.alpha * g.n / 2)
    core_list = mask_to_list(core)
    stages.append({"stage": "min_degree", "ok": bool(core), "size": len(core_list)})
    if len(core_list) < 4 * h.n:
        return PipelineResult(False, None, None, stages, seed, cfg_dict)

    p_sched = cfg.p_schedule or geometric_schedule(part.k, d)
    theta_part = cfg.theta_part or _auto_theta_part(part, p_sched, r)
    settings = cfg.settings()

    for outer in range(cfg.drc_retries):
        rng = random.Random(derive_seed(seed, 1, outer))
        shuffled = core_list[:]
        rng.shuffle(shuffled)
        half = len(shuffled) // 2
        v1 = sum(1 << v for v in shuffled[:half])
        v2 = sum(1 << v for v in shuffled[half:2 * half])
        side = half
        mindeg = min(
            min((g.adj[v] & v2).bit_count() for v in iter_bits(v1)),
            min((g.adj[v] & v1).bit_count() for v in iter_bits(v2)),
        )
        alpha2 = mindeg / side
        stages.append({"stage": "bipartition", "ok": True, "attempt": outer,
                       "side": side, "alpha": alpha2})
        if alpha2 <= 0:
            continue

        eta = min(cfg.eta, alpha2 ** (2 * d_arity) / 16)
        theta = 0.5 * eta * alpha2 ** (d_arity + cfg.t) * side
        params = DrcParams(
            d=d_arity, s=cfg.s, t=cfg.t, eta=eta, alpha=alpha2, theta=theta,
            max_restarts=cfg.stage_restarts, settings=settings,
        )
        pair_out = drc_pair(g, v1, v2, params, derive_seed(seed, 2, outer))
        stages.append({"stage": "drc_pair", "ok": pair_out.ok,
                       "restarts": pair_out.restarts,
                       "sizes": [m.bit_count() for m in pair_out.sets]})
        if not pair_out.ok:
            continue
        parents = list(pair_out.sets)

        pparams = PartitionParams(
            p=tuple(p_sched), theta=theta_part, s=cfg.s, d=d_arity,
            eps=min(m.bit_count() for m in parents) / g.n,
            eps_prime=cfg.eps_prime, e1_tolerance=cfg.e1_tolerance,
            max_restarts=cfg.partition_restarts, e1_samples=cfg.e1_samples,
            settings=settings,
        )
        for p_try in range(cfg.partition_retries):
            pout = random_partition(
                g, parents, part.k, pparams, derive_seed(seed, 3, outer, p_try)
            )
            stages.append({"stage": "partition", "ok": pout.ok,
                           "restarts": pout.restart_index})
            if not pout.ok:
                continue
            perm = _pair_classes_to_sets(part, [m.bit_count() for m in parents])
            mapping, cert, renew = _embed_rounds(
                g, h, part, fwd, parents, pout.sets, perm, pparams, cfg,
                derive_seed(seed, 4, outer, p_try), stages,
            )
            if mapping is not None:
                return PipelineResult(
                    True, None, mapping, stages, seed, cfg_dict, certificate=cert
                )
            if not renew:
                break
    return PipelineResult(False, None, None, stages, seed, cfg_dict)


# ---------------------------------------------------------------------------
# monochromatic pipeline


def _auto_theta_mutual(m: int, alpha: float, d_arity: int, t: int, r: int,
                       xi: float) -> float:
    """Half the codegree a d-tuple typically has inside the smallest set
    the chain and rounds are expected to leave standing."""
    shrink = 2.0 ** (-(2 * (r - 1) * (t + 1) + (r - 1) * t))
    guess = 0.5 * alpha**d_arity * m * shrink
    return max(1.0, min(guess, xi * xi * m))


def find_monochromatic(
    coloring: TwoColoring,
    h: Graph,
    cfg: PipelineConfig,
    seed: int,
    h_coloring: list[int] | None = None,
) -> PipelineResult:
    """Find a monochromatic copy of the pattern in a 2-colored complete host.

    Stages: mutual DRC (picks the color), concentration pruning, random
    partition, decomposition of the pattern, random-greedy embedding in
    the winning color. For patterns up to ``fallback_max`` vertices an
    exhaustive backtracking search backstops the randomized pipeline, as
    a last stage flagged in the report.
    """
    m = coloring.m
    if h.n > m:
        raise InputError("pattern has more vertices than the host")
    d, d_pad, part, fwd, r = _prepare_pattern(h, cfg, h_coloring)
    d_arity = max(1, min(d_pad, cfg.drc_arity_cap))
    stages: list[dict] = []
    cfg_dict = cfg.to_dict()

    p_sched = cfg.p_schedule or geometric_schedule(part.k, d)
    theta_part = cfg.theta_part or _auto_theta_part(part, p_sched, r)
    theta_mut = cfg.theta or _auto_theta_mutual(m, 0.5, d_arity, cfg.t, r, cfg.xi)
    settings = cfg.settings()
    prune_d = max(1, min(cfg.prune_arity, d_arity))
    prune_s = max(cfg.s, 4 * prune_d)

    for outer in range(cfg.drc_retries):
        params = DrcParams(
            d=d_arity, s=cfg.s, t=cfg.t, eta=cfg.eta, xi=cfg.xi, theta=theta_mut,
            max_restarts=cfg.stage_restarts, settings=settings,
        )
        mut = drc_mutual(coloring, r, params, derive_seed(seed, 1, outer))
        stages.append({"stage": "drc_mutual", "ok": mut.ok, "color": mut.color,
                       "sizes": [m_.bit_count() for m_ in mut.sets],
                       "restarts": mut.restarts})
        if not mut.ok:
            continue
        gcol = coloring.subgraph(mut.color)

        try:
            pruned = remove_concentrated(
                gcol, mut.sets, prune_d, prune_s, theta_mut,
                settings=settings, seed=derive_seed(seed, 2, outer),
            )
        except InputError as exc:
            stages.append({"stage": "prune", "ok": False, "error": str(exc)})
            continue
        stages.append({"stage": "prune", "ok": pruned.ok,
                       "removed": pruned.removed_mask.bit_count(),
                       "sizes": [m_.bit_count() for m_ in pruned.kept]})
        if not pruned.ok:
            continue
        parents = pruned.kept

        pparams = PartitionParams(
            p=tuple(p_sched), theta=theta_part, s=cfg.s, d=d_arity,
            eps=min(m_.bit_count() for m_ in parents) / m,
            eps_prime=cfg.eps_prime, e1_tolerance=cfg.e1_tolerance,
            max_restarts=cfg.partition_restarts, e1_samples=cfg.e1_samples,
            settings=settings,
        )
        for p_try in range(cfg.partition_retries):
            pout = random_partition(
                gcol, parents, part.k, pparams, derive_seed(seed, 3, outer, p_try)
            )
            stages.append({"stage": "partition", "ok": pout.ok,
                           "restarts": pout.restart_index})
            if not pout.ok:
                continue
            perm = _pair_classes_to_sets(part, [m_.bit_count() for m_ in parents])
            mapping, cert, renew = _embed_rounds(
                gcol, h, part, fwd, parents, pout.sets, perm, pparams, cfg,
                derive_seed(seed, 4, outer, p_try), stages,
            )
            if mapping is not None:
                return PipelineResult(
                    True, mut.color, mapping, stages, seed, cfg_dict,
                    certificate=cert,
                )
            if not renew:
                break

    if h.n <= cfg.fallback_max:
        for color in ("red", "blue"):
            gcol = coloring.subgraph(color)
            found = brute_force_embed(gcol, h, budget=500_000)
            if found is not None:
                ok, violation = verify_embedding(h, gcol, found)
                assert ok, f"fallback embedding failed verification: {violation}"
                stages.append({"stage": "fallback", "ok": True, "color": color})
                return PipelineResult(True, color, found, stages, seed, cfg_dict)
        stages.append({"stage": "fallback", "ok": False})
    return PipelineResult(False, None, None, stages, seed, cfg_dict)


# ---------------------------------------------------------------------------
# the independent containment oracle


def brute_force_embed(g: Graph, h: Graph, budget: int = 200_000
                      ) -> dict[int, int] | None:
    """Backtracking subgraph search; None when no embedding was found
    within the budget (see brute_force_contains for the tri-state view)."""
    found, _ = _backtrack(g, h, budget)
    return found


def brute_force_contains(g: Graph, h: Graph, budget: int = 200_000
                         ) -> bool | None:
    """True/False when the search settles the question, None on budget
    exhaustion ("unknown")."""
    found, exhausted = _backtrack(g, h, budget)
    if found is not None:
        return True
    return None if exhausted else False


def _backtrack(g: Graph, h: Graph, budget: int
               ) -> tuple[dict[int, int] | None, bool]:
    if h.n == 0:
        return {}, False
    if h.n > g.n:
        return None, False
    # order pattern vertices by connectivity to the already-ordered prefix
    order: list[int] = []
    placed: set[int] = set()
    while len(order) < h.n:
        best, best_key = -1, (-1, -1)
        for v in range(h.n):
            if v in placed:
                continue
            back = (h.adj[v] & sum(1 << u for u in placed)).bit_count() if placed else 0
            key = (back, h.degree(v))
            if key > best_key:
                best, best_key = v, key
        order.append(best)
        placed.add(best)
    hdeg = [h.degree(v) for v in range(h.n)]
    mapping: dict[int, int] = {}
    used = 0
    expansions = 0

    def rec(idx: int) -> bool | None:
        nonlocal used, expansions
        if idx == h.n:
            return True
        x = order[idx]
        cand = g.full_mask & ~used
        for u in mapping:
            if (h.adj[x] >> u) & 1:
                cand &= g.adj[mapping[u]]
        mask = cand
        while mask:
            b = mask & -mask
            mask ^= b
            img = b.bit_length() - 1
            if g.degree(img) < hdeg[x]:
                continue
            expansions += 1
            if expansions > budget:
                return None
            mapping[x] = img
            used |= b
            sub = rec(idx + 1)
            if sub:
                return True
            del mapping[x]
            used ^= b
            if sub is None:
                return None
        return False

    result = rec(0)
    if result:
        return dict(mapping), False
    return None, result is None
