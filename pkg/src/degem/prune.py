"""Concentration pruning and the random split into per-layer host sets.

``remove_concentrated`` drops every vertex whose defect mass, summed over
the tuples containing it, crowds past the |A|^(d-5/8) watermark, then
re-measures the promised floors on what is left. ``random_partition``
colors the vertices with (layer, color-class) labels independently and
redraws until the three proof events hold: sampled neighborhood halving
(E1), moment bounds against the parent sets (E2, with the factor-free
form when r = 2), and the size window (E3).

E1 quantifies over every tuple in the asymptotic argument, which is both
exponential to check and false pointwise at desk sizes, so acceptance is
a sampled failure *rate* against ``e1_tolerance`` (0.01 by default) and
the measured rate is always reported; the embedder re-checks the tuples
it actually queries via ``e1_tuple_check``, the lazy half of the
enforcement.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
from dataclasses import dataclass, field

from .defect import (
    EvalSettings,
    MomentResult,
    bound_holds,
    defect_of_count,
    defect_term,
    guarantee,
    measure_moment,
)
from .graph import (
    Graph,
    InputError,
    as_mask,
    derive_seed,
    mask_to_list,
)

_TOL = 1e-9


# ---------------------------------------------------------------------------
# per-vertex defect mass


def _exact_vertex_sums(g: Graph, members: list[int], d: int, s: int,
                       theta: float, target: int) -> dict[int, float]:
    """One pass over all d-tuples of ``members``, scattering each term onto
    the distinct vertices of the tuple."""
    sums = {v: 0.0 for v in members}
    adj = g.adj

    def rec(depth: int, mask: int, picked: tuple[int, ...]) -> None:
        if depth == d:
            term = defect_term(mask.bit_count(), theta, s)
            if term:
                for v in set(picked):
                    sums[v] += term
            return
        for v in members:
            rec(depth + 1, mask & adj[v], picked + (v,))

    rec(0, target, ())
    return sums


def _sampled_vertex_sum(g: Graph, v: int, members: list[int], d: int, s: int,
                        theta: float, target: int, samples: int,
                        rng: random.Random) -> float:
    """Estimate of the defect mass on tuples containing v.

    Decomposes by the first position where v occurs: the p-th piece draws
    earlier coordinates from members minus v and later ones from members,
    an unbiased stratification with no double counting.
    """
    m = len(members)
    others = [u for u in members if u != v]
    total = 0.0
    adj = g.adj
    per_piece = max(1, samples // d)
    for pos in range(d):
        domain = (m - 1) ** pos * m ** (d - 1 - pos)
        if domain == 0:
            continue
        acc = 0.0
        for _ in range(per_piece):
            mask = target & adj[v]
            for _ in range(pos):
                mask &= adj[others[rng.randrange(len(others))]]
            for _ in range(d - 1 - pos):
                mask &= adj[members[rng.randrange(m)]]
            term = defect_term(mask.bit_count(), theta, s)
            if term == math.inf:
                return math.inf
            acc += term
        total += domain * acc / per_piece
    return total


def vertex_defect_sums(g: Graph, pool: int, d: int, s: int, theta: float,
                       target: int, settings: EvalSettings, seed: int,
                       ) -> tuple[dict[int, float], str]:
    """Defect mass per vertex of ``pool`` over tuples in pool^d against
    ``target``; exact below the cutoff, stratified sampling above it."""
    members = mask_to_list(pool)
    if d == 0 or not members:
        return {v: 0.0 for v in members}, "exact"
    if len(members) ** d <= settings.exact_cutoff:
        return _exact_vertex_sums(g, members, d, s, theta, target), "exact"
    rng = random.Random(seed)
    return (
        {
            v: _sampled_vertex_sum(
                g, v, members, d, s, theta, target, settings.samples, rng
            )
            for v in members
        },
        "sampled",
    )


@dataclass
class PruneOutcome:
    ok: bool
    kept: list[int]
    removed_mask: int
    stats: dict
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "kept": [mask_to_list(m) for m in self.kept],
            "removed": mask_to_list(self.removed_mask),
            "stats": self.stats,
            "params": self.params,
        }


def remove_concentrated(
    g: Graph,
    sets,
    d: int,
    s: int,
    theta: float,
    settings: EvalSettings | None = None,
    seed: int = 0,
    assume_low_defect: bool = False,
) -> PruneOutcome:
    """Strip out vertices carrying concentrated defect mass.

    For each set index i, removes from every set the vertices v of the
    complementary union with per-vertex mass >= |A_{-i}|^(d - 5/8); the
    returned outcome measures the surviving sizes against the
    2^(-1/(2d)) |A_i| floor and the surviving per-vertex mass against
    2 |B_{-i}|^(d - 5/8). A failed size floor is reported, not raised: it
    signals the low-moment precondition did not actually hold.

    Requires s >= 4d; the moment precondition mu < 1 is measured unless
    ``assume_low_defect`` is set.
    """
    if settings is None:
        settings = EvalSettings()
    if s < 4 * d:
        raise InputError("s must be at least 4d")
    masks = [as_mask(a, g.n) for a in sets]
    if any(m == 0 for m in masks):
        raise InputError("input sets must be nonempty")
    r = len(masks)

    def complement_union(ms, i):
        u = 0
        for j, mm in enumerate(ms):
            if j != i:
                u |= mm
        return u

    premoments = []
    if not assume_low_defect and r > 1:
        for i in range(r):
            other = complement_union(masks, i)
            mr = measure_moment(g, theta, s, [other] * d, masks[i], settings,
                                derive_seed(seed, 3, i))
            premoments.append(mr.to_dict())
            if not (mr.value < 1 or (mr.mode == "sampled" and bound_holds(mr, 1.0))):
                raise InputError(
                    f"measured moment into set {i} is not below 1; "
                    "pruning hypotheses do not hold"
                )

    removed = 0
    thresholds = []
    modes = []
    for i in range(r):
        other = complement_union(masks, i)
        if not other:
            thresholds.append(0.0)
            modes.append("exact")
            continue
        watermark = other.bit_count() ** (d - 5 / 8)
        thresholds.append(watermark)
        sums, mode = vertex_defect_sums(
            g, other, d, s, theta, masks[i], settings, derive_seed(seed, 5, i)
        )
        modes.append(mode)
        for v, mass in sums.items():
            if mass >= watermark:
                removed |= 1 << v

    kept = [m & ~removed for m in masks]
    per_set = []
    ok = True
    floor_factor = 2.0 ** (-1 / (2 * d))
    for i in range(r):
        floor = floor_factor * masks[i].bit_count()
        size_ok = kept[i].bit_count() >= floor - _TOL
        rec = {
            "index": i,
            "size": kept[i].bit_count(),
            "size_floor": floor,
            "size_ok": size_ok,
            "mode": modes[i],
        }
        other = complement_union(kept, i)
        if other and kept[i]:
            cap = 2 * other.bit_count() ** (d - 5 / 8)
            sums, mode = vertex_defect_sums(
                g, other, d, s, theta, kept[i], settings, derive_seed(seed, 9, i)
            )
            worst = max(sums.values(), default=0.0)
            rec.update(
                {"max_vertex_mass": worst, "mass_cap": cap,
                 "mass_ok": worst <= cap, "post_mode": mode}
            )
            ok = ok and rec["mass_ok"]
        ok = ok and size_ok
        per_set.append(rec)
    stats = {
        "per_set": per_set,
        "removed": removed.bit_count(),
        "thresholds": thresholds,
        "premoments": premoments,
    }
    return PruneOutcome(
        ok=ok, kept=kept, removed_mask=removed, stats=stats,
        params={"d": d, "s": s, "theta": theta, "seed": seed},
    )


# ---------------------------------------------------------------------------
# random partition


@dataclass(frozen=True)
class PartitionParams:
    """Layer probabilities and thresholds for the random split.

    theta_i = p_i * theta / (2r) is always recomputed from here, never
    stored separately. The asymptotic hypothesis p_i >= m^(-1/(10d)) is
    documentation only; the restart loop verifies conclusions instead.
    """

    p: tuple[float, ...]
    theta: float
    s: int
    d: int
    eps: float = 0.1
    eps_prime: float = 0.05
    e1_tolerance: float = 0.01
    max_restarts: int = 50
    e1_samples: int = 100_000
    e2_combo_cap: int = 64
    settings: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        if not self.p or any(x <= 0 for x in self.p):
            raise InputError("layer probabilities must be positive")
        if sum(self.p) > 1 + _TOL:
            raise InputError("layer probabilities must sum to at most 1")
        if self.theta <= 0:
            raise InputError("theta must be positive")
        if not 0 <= self.e1_tolerance < 1:
            raise InputError("e1_tolerance must lie in [0, 1)")

    @property
    def k(self) -> int:
        return len(self.p)

    def theta_i(self, i: int, r: int) -> float:
        return self.p[i] * self.theta / (2 * r)

    def q_i(self, i: int, r: int) -> float:
        return self.p[i] / r

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["p"] = list(self.p)
        d["settings"] = self.settings.to_dict()
        return d


@dataclass
class PartitionOutcome:
    ok: bool
    n: int
    r: int
    sets: dict[tuple[int, int], int]
    stats: dict
    seed: int
    restart_index: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n": self.n,
            "r": self.r,
            "sets": {f"{i},{j}": mask_to_list(m) for (i, j), m in self.sets.items()},
            "stats": self.stats,
            "seed": self.seed,
            "restart_index": self.restart_index,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def e1_tuple_check(g: Graph, q, parent: int, cell: int, q_i: float) -> bool:
    """The halving event for one tuple: |N(Q; cell)| >= q_i |N(Q; parent)| / 2."""
    pm, cm = parent, cell
    for v in q:
        pm &= g.adj[v]
        cm &= g.adj[v]
    return cm.bit_count() >= 0.5 * q_i * pm.bit_count() - _TOL


def random_partition(
    g: Graph, sets, k: int, params: PartitionParams, seed: int
) -> PartitionOutcome:
    """Independent per-vertex (layer, class) coloring of the pruned sets,
    redrawn until the three proof events pass.

    Vertices are visited in ascending id with one uniform draw each, so
    an accepted draw replays exactly from (seed, restart_index). Each
    sampled E1 tuple that passes also gets the defect-domination
    assertion omega_{theta_i}(Q; cell) <= omega_theta(Q; parent).
    """
    if k != params.k:
        raise InputError("k disagrees with the probability schedule")
    masks = [as_mask(b, g.n) for b in sets]
    r = len(masks)
    if r < 1 or any(m == 0 for m in masks):
        raise InputError("need at least one nonempty set")
    union = 0
    for m in masks:
        union |= m
    union_list = mask_to_list(union)
    theta = params.theta

    def others(ms, j):
        u = 0
        for jj, mm in enumerate(ms):
            if jj != j:
                u |= mm
        return u

    # parent moments feed the E2 right-hand sides; computed once
    parent_moments: list[MomentResult | None] = []
    factor = 4.0 if r == 2 else 4.0 * r**params.d * params.eps ** (-params.d)
    for j in range(r):
        om = others(masks, j)
        if om:
            parent_moments.append(
                measure_moment(g, theta, params.s, [om] * params.d, masks[j],
                               params.settings, derive_seed(seed, 1, j))
            )
        else:
            parent_moments.append(None)

    pair_list = [(i, j) for i in range(k) for j in range(r)]
    bins = []
    acc = 0.0
    for i in range(k):
        for _ in range(r):
            acc += params.q_i(i, r)
            bins.append(acc)

    last_stats: dict = {}
    for restart in range(params.max_restarts):
        rng = random.Random(derive_seed(seed, 17, restart))
        cells = {p: 0 for p in pair_list}
        for v in union_list:
            u = rng.random()
            idx = 0
            while idx < len(bins) and u >= bins[idx]:
                idx += 1
            if idx == len(bins):
                continue  # leftover probability mass: vertex stays unused
            i, j = pair_list[idx]
            if (masks[j] >> v) & 1:
                cells[(i, j)] |= 1 << v

        # E3 first: cheap, and E2's derivation leans on it
        e3 = []
        for (i, j), cell in cells.items():
            q = params.q_i(i, r)
            lo = 2.0 ** (-1 / (2 * params.d)) * q * masks[j].bit_count()
            hi = 2.0 * q * masks[j].bit_count()
            size = cell.bit_count()
            e3.append({"pair": [i, j], "size": size, "lo": lo, "hi": hi,
                       "passed": lo - _TOL <= size <= hi + _TOL})
        if not all(rec["passed"] for rec in e3):
            last_stats = {"restart": restart, "e3": e3, "failed": "E3"}
            continue

        e1 = []
        e1_ok = True
        srng = random.Random(derive_seed(seed, 18, restart))
        for (i, j), cell in cells.items():
            om = others(masks, j)
            if not om:
                continue
            pool = mask_to_list(om)
            q = params.q_i(i, r)
            theta_cell = params.theta_i(i, r)
            failures = 0
            for _ in range(params.e1_samples):
                pm, cm = masks[j], cell
                for _ in range(params.d):
                    row = g.adj[pool[srng.randrange(len(pool))]]
                    pm &= row
                    cm &= row
                pc, cc = pm.bit_count(), cm.bit_count()
                if cc < 0.5 * q * pc - _TOL:
                    failures += 1
                    continue
                w_parent = defect_of_count(pc, theta)
                w_cell = defect_of_count(cc, theta_cell)
                assert w_cell <= w_parent, (
                    "defect domination violated on an E1-passing tuple"
                )
            rate = failures / params.e1_samples
            e1.append({"pair": [i, j], "sampled": params.e1_samples,
                       "failures": failures, "rate": rate,
                       "passed": rate <= params.e1_tolerance})
            if rate > params.e1_tolerance:
                e1_ok = False
                break
        if not e1_ok:
            last_stats = {"restart": restart, "e1": e1, "failed": "E1"}
            continue

        e2 = []
        e2_ok = True
        combo_idx = 0
        for j in range(r):
            pm = parent_moments[j]
            if pm is None:
                continue
            if pm.value != math.inf:
                rhs = max(params.eps_prime, factor * pm.value)
            else:
                rhs = math.inf
            other_js = [jj for jj in range(r) if jj != j]
            combos = list(_index_combos(k, other_js, params.d))
            if len(combos) > params.e2_combo_cap:
                crng = random.Random(derive_seed(seed, 23, restart, j))
                combos = [combos[crng.randrange(len(combos))]
                          for _ in range(params.e2_combo_cap)]
            for combo in combos:
                factors = [cells[pair] for pair in combo]
                if any(f == 0 for f in factors):
                    combo_idx += 1
                    continue
                mr = measure_moment(
                    g, theta, params.s, factors, masks[j], params.settings,
                    derive_seed(seed, 19, restart, combo_idx),
                )
                passed = math.isinf(rhs) or bound_holds(mr, rhs)
                e2.append(
                    {"target_class": j, "factors": [list(c) for c in combo],
                     "value": mr.value, "rhs": rhs, "mode": mr.mode,
                     "passed": passed}
                )
                combo_idx += 1
                if not passed:
                    e2_ok = False
                    break
            if not e2_ok:
                break
        if not e2_ok:
            last_stats = {"restart": restart, "e2_failures":
                          [rec for rec in e2 if not rec["passed"]], "failed": "E2"}
            continue

        # structural conclusions on the accepted draw
        flat = list(cells.values())
        for a in range(len(flat)):
            for b in range(a + 1, len(flat)):
                assert flat[a] & flat[b] == 0, "cells are not disjoint"
        for (i, j), cell in cells.items():
            assert cell & ~masks[j] == 0, "cell escapes its parent set"

        stats = {
            "restart": restart,
            "e1": e1,
            "e2_checked": len(e2),
            "e3": e3,
            "parent_moments": [
                pm.to_dict() if pm is not None else None for pm in parent_moments
            ],
            "theta_i": [params.theta_i(i, r) for i in range(k)],
        }
        return PartitionOutcome(
            ok=True, n=g.n, r=r, sets=cells, stats=stats, seed=seed,
            restart_index=restart, params=params.to_dict(),
        )
    last_stats["exhausted"] = True
    return PartitionOutcome(
        ok=False, n=g.n, r=r, sets={}, stats=last_stats, seed=seed,
        restart_index=params.max_restarts, params=params.to_dict(),
    )


def _index_combos(k: int, other_js: list[int], d: int):
    """All d-tuples of (layer, class) pairs avoiding the target class."""
    pairs = [(i, j) for i in range(k) for j in other_js]
    if d == 0:
        yield ()
        return
    idx = [0] * d
    while True:
        yield tuple(pairs[x] for x in idx)
        pos = d - 1
        while pos >= 0:
            idx[pos] += 1
            if idx[pos] < len(pairs):
                break
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return
