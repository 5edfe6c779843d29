"""Dependent random choice, in every shape the construction needs.

Each procedure realizes a positive-probability existence argument as a
Las Vegas loop: draw the random tuple, measure the claimed guarantees
directly (exact enumeration below a cutoff, sampling with a 3-sigma
margin above it), and redraw until everything holds or the restart budget
runs out. A failed budget is data, not an exception: the outcome carries
the best attempt's statistics for diagnosis.

Outcomes record their witnesses and per-guarantee evaluation seeds, so
every reported number can be re-derived from (graph, witness, sets); see
``reverify``.
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
    guarantee,
    measure_moment,
)
from .graph import (
    Graph,
    InputError,
    TwoColoring,
    as_mask,
    common_neighbors,
    derive_seed,
    mask_to_list,
)

_TOL = 1e-9


@dataclass(frozen=True)
class DrcParams:
    """Knobs shared by the DRC family.

    d is the tuple arity the guarantees quantify over, t the length of the
    selector tuple X, s the moment order; eta/eps/alpha/theta parametrize
    the bounds, xi is the mutual-variant decay rate.
    """

    d: int = 2
    s: int = 1
    t: int = 2
    eta: float = 0.25
    eps: float = 0.5
    alpha: float = 0.5
    theta: float = 1.0
    xi: float = 0.25
    max_restarts: int = 100
    settings: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        if self.t < self.s:
            raise InputError("t must be at least s")
        if self.d < 1 or self.s < 0 or self.t < 0:
            raise InputError("bad arity/order parameters")
        if not 0 < self.eps < 1:
            raise InputError("eps must lie in (0, 1)")
        if self.alpha > 1 or self.alpha <= 0:
            raise InputError("alpha must lie in (0, 1]")
        if self.theta <= 0 or self.eta <= 0:
            raise InputError("theta and eta must be positive")
        if not 0 < self.xi < 1:
            raise InputError("xi must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["settings"] = self.settings.to_dict()
        return d


@dataclass
class DrcOutcome:
    """Result of one DRC procedure, successful or not."""

    op: str
    ok: bool
    n: int
    sets: list[int]
    witness: list[tuple[int, ...]]
    stats: dict
    restarts: int
    seed: int
    color: str | None = None
    params: dict = field(default_factory=dict)

    def set_lists(self) -> list[list[int]]:
        return [mask_to_list(m) for m in self.sets]

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "ok": self.ok,
            "n": self.n,
            "color": self.color,
            "sets": self.set_lists(),
            "witness": [list(x) for x in self.witness],
            "stats": self.stats,
            "restarts": self.restarts,
            "seed": self.seed,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def cross_edges(g: Graph, xm: int, ym: int) -> int:
    """Ordered cross-pair count e(X, Y) = |{(x, y): x in X, y in Y, xy edge}|."""
    total = 0
    m = xm
    while m:
        b = m & -m
        total += (g.adj[b.bit_length() - 1] & ym).bit_count()
        m ^= b
    return total


def _size_guarantee(name: str, size: int, bound: float) -> dict:
    return guarantee(name, "size", size, bound, size >= bound - _TOL)


def _moment_guarantee(
    name: str, g: Graph, theta: float, s: int, factors, target, p: DrcParams, seed: int
) -> dict:
    mr = measure_moment(g, theta, s, factors, target, p.settings, seed)
    bound = _moment_bounds[name]
    return guarantee(name, "moment", mr, bound, bound_holds(mr, bound))


_moment_bounds: dict[str, float] = {}  # filled per call site via _bound()


def _bound(name: str, value: float) -> str:
    _moment_bounds[name] = value
    return name


def _pick(rng: random.Random, items: list[int], t: int) -> tuple[int, ...]:
    return tuple(items[rng.randrange(len(items))] for _ in range(t))


def _best_attempt(best: dict | None, cand: dict) -> dict:
    if best is None:
        return cand
    if cand["passed_count"] > best["passed_count"]:
        return cand
    if cand["passed_count"] == best["passed_count"] and cand["size"] > best["size"]:
        return cand
    return best


def _single_set_drc(
    op: str,
    g: Graph,
    v1,
    v2,
    p: DrcParams,
    seed: int,
    size_bound: float,
    moment_bound: float,
) -> DrcOutcome:
    """Shared body of the one-set variants: draw X in v1^t, take A = N(X; v2),
    verify the size and moment guarantees, restart until both hold."""
    v1m, v2m = as_mask(v1, g.n), as_mask(v2, g.n)
    v1l = mask_to_list(v1m)
    if not v1l or not v2m:
        raise InputError("both vertex sets must be nonempty")
    if p.theta > p.eta * p.alpha**p.d * len(v1l) + _TOL:
        raise InputError("theta exceeds eta * alpha^d * |v1|")
    best = None
    for attempt in range(p.max_restarts):
        rng = random.Random(derive_seed(seed, attempt))
        x = _pick(rng, v1l, p.t)
        a = common_neighbors(g, x, v2m)
        size = a.bit_count()
        recs = [_size_guarantee("set_size", size, size_bound)]
        if size:
            mr = measure_moment(
                g, p.theta, p.s, [a] * p.d, v1m, p.settings, derive_seed(seed, attempt, 1)
            )
            recs.append(
                guarantee("moment", "moment", mr, moment_bound, bound_holds(mr, moment_bound))
            )
        else:
            recs.append(guarantee("moment", "moment", math.inf, moment_bound, False))
        passed = sum(r["passed"] for r in recs)
        cand = {
            "attempt": attempt,
            "size": size,
            "passed_count": passed,
            "guarantees": recs,
            "set": a,
            "x": x,
        }
        if passed == len(recs):
            return DrcOutcome(
                op=op,
                ok=True,
                n=g.n,
                sets=[a],
                witness=[x],
                stats={"guarantees": recs, "attempt": attempt},
                restarts=attempt,
                seed=seed,
                params=p.to_dict(),
            )
        best = _best_attempt(best, cand)
    return DrcOutcome(
        op=op,
        ok=False,
        n=g.n,
        sets=[best["set"]],
        witness=[best["x"]],
        stats={"guarantees": best["guarantees"], "attempt": best["attempt"], "exhausted": True},
        restarts=p.max_restarts,
        seed=seed,
        params=p.to_dict(),
    )


def drc_bipartite(g: Graph, v1, v2, p: DrcParams, seed: int) -> DrcOutcome:
    """One-round DRC between two sides of declared density >= alpha.

    Returns A = N(X; v2) for a uniform X in v1^t with |A| >= eps^(1/d) *
    alpha^t * |v2| and s-th defect moment of A^d into v1 at most
    eta^t / (1 - eps), restarting until both measured guarantees hold.
    """
    v2_size = as_mask(v2, g.n).bit_count()
    size_bound = p.eps ** (1 / p.d) * p.alpha**p.t * v2_size
    moment_bound = p.eta**p.t / (1 - p.eps)
    return _single_set_drc("drc_bipartite", g, v1, v2, p, seed, size_bound, moment_bound)


def drc_general(g: Graph, v1, v2, p: DrcParams, seed: int) -> DrcOutcome:
    """Expectation-flavored DRC: |A| >= alpha^t |v2| / 2 and moment <= 2 eta^t.

    Unlike the bipartite form, the density precondition e(v1, v2) >=
    alpha |v1| |v2| is enforced here (InputError on violation).
    """
    v1m, v2m = as_mask(v1, g.n), as_mask(v2, g.n)
    s1, s2 = v1m.bit_count(), v2m.bit_count()
    if cross_edges(g, v1m, v2m) < p.alpha * s1 * s2 - _TOL:
        raise InputError("pair density below the declared alpha")
    size_bound = 0.5 * p.alpha**p.t * s2
    moment_bound = 2 * p.eta**p.t
    return _single_set_drc("drc_general", g, v1, v2, p, seed, size_bound, moment_bound)


# ---------------------------------------------------------------------------
# defect transfer


@dataclass
class TransferReport:
    """Empirical left side vs exact right side of the transfer identity
    E[mu_{s,theta}(A2^d; N(X; V1))] = mu_{s,theta}(A2^(d+t); V1)."""

    lhs_mean: float
    lhs_std_error: float
    rhs: float
    gap: float
    trials: int
    infinite_trials: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def defect_transfer_check(
    g: Graph, a2, v1, d: int, t: int, s: int, theta: float, trials: int, seed: int
) -> TransferReport:
    from .defect import DefectParams, moment_exact

    a2m, v1m = as_mask(a2, g.n), as_mask(v1, g.n)
    a2l = mask_to_list(a2m)
    if not a2l:
        raise InputError("a2 must be nonempty")
    rhs = moment_exact(g, DefectParams(theta, s, d + t), [a2m] * (d + t), v1m).value
    rng = random.Random(seed)
    mean = 0.0
    m2 = 0.0
    inf_trials = 0
    k = 0
    for _ in range(trials):
        x = _pick(rng, a2l, t)
        a1 = common_neighbors(g, x, v1m)
        val = moment_exact(g, DefectParams(theta, s, d), [a2m] * d, a1).value if a1 else math.inf
        if val == math.inf:
            inf_trials += 1
            continue
        k += 1
        delta = val - mean
        mean += delta / k
        m2 += delta * (val - mean)
    if inf_trials:
        return TransferReport(math.inf, math.inf, rhs, math.nan, trials, inf_trials)
    stderr = math.sqrt(m2 / (k - 1) / k) if k > 1 else 0.0
    gap = abs(mean - rhs) if rhs != math.inf else math.inf
    return TransferReport(mean, stderr, rhs, gap, trials, 0)


# ---------------------------------------------------------------------------
# two-set DRC


def drc_pair(g: Graph, v1, v2, p: DrcParams, seed: int) -> DrcOutcome:
    """Mutually small defects between two equal sides of min degree alpha*m.

    Two stages, as in the proof: first a (d+t)-arity DRC inside v2, then
    A1 = N(X; v1) for X drawn from A2, restarted until all four measured
    guarantees hold (both sizes >= alpha^t m / 4, both d-arity moments
    <= 2 eta^(t/2)).
    """
    v1m, v2m = as_mask(v1, g.n), as_mask(v2, g.n)
    v1l, v2l = mask_to_list(v1m), mask_to_list(v2m)
    m = len(v1l)
    if m == 0 or len(v2l) != m:
        raise InputError("v1 and v2 must be nonempty and of equal size")
    mindeg = min(
        min((g.adj[v] & v2m).bit_count() for v in v1l),
        min((g.adj[v] & v1m).bit_count() for v in v2l),
    )
    if mindeg < p.alpha * m - _TOL:
        raise InputError("cross min degree below alpha * m")
    if p.eta > p.alpha ** (2 * p.d) / 16 + _TOL:
        raise InputError("eta exceeds alpha^(2d) / 16")
    if p.theta > 0.5 * p.eta * p.alpha ** (p.d + p.t) * m + _TOL:
        raise InputError("theta exceeds eta * alpha^(d+t) * m / 2")

    size_bound = 0.25 * p.alpha**p.t * m
    moment_bound = 2 * p.eta ** (p.t / 2)
    stage1 = dataclasses.replace(p, d=p.d + p.t)
    block = max(1, p.max_restarts // 4)
    attempts = 0
    best = None
    stage1_runs = 0
    while attempts < p.max_restarts:
        out2 = drc_general(g, v1m, v2m, stage1, derive_seed(seed, 11, stage1_runs))
        stage1_runs += 1
        if not out2.ok:
            attempts += block
            continue
        a2 = out2.sets[0]
        a2l = mask_to_list(a2)
        for _ in range(block):
            if attempts >= p.max_restarts:
                break
            rng = random.Random(derive_seed(seed, 13, attempts))
            x2 = _pick(rng, a2l, p.t)
            a1 = common_neighbors(g, x2, v1m)
            eseed = derive_seed(seed, 13, attempts, 1)
            recs = [
                _size_guarantee("a1_size", a1.bit_count(), size_bound),
                _size_guarantee("a2_size", a2.bit_count(), size_bound),
            ]
            if a1:
                mr12 = measure_moment(g, p.theta, p.s, [a1] * p.d, a2, p.settings, eseed)
                mr21 = measure_moment(
                    g, p.theta, p.s, [a2] * p.d, a1, p.settings, derive_seed(eseed, 1)
                )
                recs.append(
                    guarantee("mu_a1_into_a2", "moment", mr12, moment_bound,
                              bound_holds(mr12, moment_bound))
                )
                recs.append(
                    guarantee("mu_a2_into_a1", "moment", mr21, moment_bound,
                              bound_holds(mr21, moment_bound))
                )
            else:
                recs.append(guarantee("mu_a1_into_a2", "moment", math.inf, moment_bound, False))
                recs.append(guarantee("mu_a2_into_a1", "moment", math.inf, moment_bound, False))
            passed = sum(r["passed"] for r in recs)
            cand = {
                "attempt": attempts,
                "size": a1.bit_count(),
                "passed_count": passed,
                "guarantees": recs,
                "sets": [a1, a2],
                "witness": [tuple(out2.witness[0]), x2],
                "stage1": out2.stats,
            }
            if passed == len(recs):
                return DrcOutcome(
                    op="drc_pair",
                    ok=True,
                    n=g.n,
                    sets=[a1, a2],
                    witness=cand["witness"],
                    stats={
                        "guarantees": recs,
                        "attempt": attempts,
                        "stage1": out2.stats,
                        "stage1_runs": stage1_runs,
                    },
                    restarts=attempts,
                    seed=seed,
                    params=p.to_dict(),
                )
            best = _best_attempt(best, cand)
            attempts += 1
    stats = {"exhausted": True, "stage1_runs": stage1_runs}
    sets: list[int] = []
    witness: list[tuple[int, ...]] = []
    if best is not None:
        stats.update({"guarantees": best["guarantees"], "attempt": best["attempt"]})
        sets, witness = best["sets"], best["witness"]
    return DrcOutcome(
        op="drc_pair", ok=False, n=g.n, sets=sets, witness=witness,
        stats=stats, restarts=attempts, seed=seed, params=p.to_dict(),
    )


# ---------------------------------------------------------------------------
# color-descent chain


def _majority_color(coloring: TwoColoring, mask: int) -> tuple[str, int]:
    """Denser color inside the set (ties go red); returns ordered pair count."""
    red_cross = cross_edges(coloring.red, mask, mask)
    size = mask.bit_count()
    total = size * (size - 1)
    blue_cross = total - red_cross
    if red_cross >= blue_cross:
        return "red", red_cross
    return "blue", blue_cross


def chain_size_floor(m: int, t: int, r: int) -> float:
    return 2.0 ** (-2 * (t + 1) * (r - 1)) * m


def drc_chain(coloring: TwoColoring, r: int, p: DrcParams, seed: int) -> DrcOutcome:
    """Nested same-colored sets A_1 c= ... c= A_r with small one-directional
    defect moments, via 2(r-1) majority-color DRC descents and pigeonhole.

    The degenerate r = 1 case returns a single drc_general set in the
    majority color of the whole host.
    """
    if r < 1:
        raise InputError("r must be at least 1")
    m = coloring.m
    if p.theta > p.eta * 2.0 ** (-p.d - 2 * (p.t + 1) * (r - 1)) * m + _TOL:
        raise InputError("theta exceeds eta * 2^(-d - 2(t+1)(r-1)) * m")
    graphs = {"red": coloring.red, "blue": coloring.blue()}
    steps_needed = 1 if r == 1 else 2 * (r - 1)
    moment_bound = 2 * p.eta**p.t
    size_floor = chain_size_floor(m, p.t, r)
    full = coloring.red.full_mask

    last_stats: dict = {}
    for outer in range(p.max_restarts):
        labeled: list[tuple[int, str]] = [(full, "red")]
        steps: list[dict] = []
        failed_step = None
        for step in range(steps_needed):
            cur = labeled[-1][0]
            color, cross = _majority_color(coloring, cur)
            size = cur.bit_count()
            alpha_step = cross / (size * size) if size else 0.0
            if alpha_step <= 0 or p.theta > p.eta * alpha_step**p.d * size + _TOL:
                failed_step = step
                steps.append({"step": step, "color": color, "error": "theta precondition"})
                break
            sp = dataclasses.replace(p, alpha=alpha_step)
            out = drc_general(
                graphs[color], cur, cur, sp, derive_seed(seed, outer, step)
            )
            steps.append(
                {
                    "step": step,
                    "color": color,
                    "alpha": alpha_step,
                    "size": out.sets[0].bit_count() if out.sets else 0,
                    "restarts": out.restarts,
                    "witness": [list(x) for x in out.witness],
                    "guarantees": out.stats.get("guarantees", []),
                }
            )
            if not out.ok:
                failed_step = step
                break
            labeled.append((out.sets[0], color))
        if failed_step is not None:
            last_stats = {"steps": steps, "failed_step": failed_step}
            continue

        if r == 1:
            # degenerate case: the single majority-color DRC set
            chosen = [1]
            color = labeled[1][1]
        else:
            by_color: dict[str, list[int]] = {"red": [], "blue": []}
            for idx, (_, c) in enumerate(labeled):
                by_color[c].append(idx)
            color = "red" if len(by_color["red"]) >= r else "blue"
            chosen = sorted(by_color[color])[:r]  # r largest sets (earliest produced)
        chain = [labeled[idx][0] for idx in sorted(chosen, reverse=True)]  # ascending

        gcol = graphs[color]
        recs = []
        for a, mask in enumerate(chain):
            floor = size_floor if r > 1 else 0.5 * steps[0]["alpha"] ** p.t * m
            recs.append(_size_guarantee(f"size_{a}", mask.bit_count(), floor))
        for a in range(r - 1):
            mr = measure_moment(
                gcol, p.theta, p.s, [chain[a]] * p.d, chain[a + 1],
                p.settings, derive_seed(seed, outer, 100 + a),
            )
            recs.append(
                guarantee(f"mu_{a}_into_{a + 1}", "moment", mr, moment_bound,
                          bound_holds(mr, moment_bound))
            )
        stats = {"steps": steps, "selected": chosen, "guarantees": recs}
        if all(rec["passed"] for rec in recs):
            for a in range(r - 1):
                assert chain[a] & ~chain[a + 1] == 0, "chain nesting broken"
            return DrcOutcome(
                op="drc_chain", ok=True, n=m, sets=chain,
                witness=[tuple(x) for st in steps for x in st.get("witness", [])],
                stats=stats, restarts=outer, seed=seed, color=color,
                params=p.to_dict(),
            )
        last_stats = stats
    last_stats["exhausted"] = True
    return DrcOutcome(
        op="drc_chain", ok=False, n=m, sets=[], witness=[], stats=last_stats,
        restarts=p.max_restarts, seed=seed, params=p.to_dict(),
    )


# ---------------------------------------------------------------------------
# mutual DRC


@dataclass
class ChainSchedule:
    """The proof's round schedule, computed for reference and reporting.

    The prescribed tuple lengths are astronomically infeasible at desk
    scale, so runs use the caller's flat t; the schedule documents what
    the asymptotic argument would have used.
    """

    r: int
    d: int
    t: int
    xi: float
    n: int
    t_rounds: tuple[int, ...]
    d_rounds: tuple[int, ...]
    theta0: float
    theta1: float
    xi0: float

    @classmethod
    def compute(cls, d: int, t: int, r: int, xi: float, n: int) -> "ChainSchedule":
        t_rounds = tuple(8 ** (r + 1 - i) * (d + t) for i in range(r + 1))
        d_rounds = tuple(d + sum(t_rounds[i + 1:]) for i in range(r + 1))
        return cls(
            r=r, d=d, t=t, xi=xi, n=n,
            t_rounds=t_rounds, d_rounds=d_rounds,
            theta0=xi * n, theta1=xi * xi * n,
            xi0=2.0 ** (-20 * t_rounds[0] * r),
        )

    def check(self) -> None:
        for i in range(1, self.r):
            assert self.t_rounds[i] / 6 >= self.d_rounds[i] >= self.t_rounds[i + 1]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def drc_mutual(
    coloring: TwoColoring,
    r: int,
    p: DrcParams,
    seed: int,
    size_targets=None,
) -> DrcOutcome:
    """r sets with mutually small defect moments in one color.

    Runs the chain (with s = 0), then r refinement rounds; round i draws
    X in A_i^t, intersects every other set with N(X), and redraws until
    the four proof events hold by direct measurement:

      E1  size floors (theta/xi pending, theta finished),
      E2  zero-order chain defects mu_0 <= xi^(t/2) along the nesting,
      E3  mutual defects mu_s <= xi^t for finished sets,
      E4  the round's total defect budget against the pre-round sets.

    Thresholds are anchored at the caller's theta (theta0 = theta / xi,
    theta1 = theta) since the proof's xi n / xi^2 n floors are out of
    reach at desk scale; the paper schedule is still computed and reported.

    ``size_targets`` (ascending, one per set) adds caller floors on the
    final sizes: chains whose sets look too small to survive the rounds
    are redrawn early, and the final verification enforces the floors.
    """
    if r < 1:
        raise InputError("r must be at least 1")
    m = coloring.m
    if size_targets is not None and len(size_targets) != r:
        raise InputError("need one size target per set")
    targets = list(size_targets) if size_targets is not None else [0.0] * r
    if p.theta > m:
        raise InputError("theta cannot exceed the host size")
    if p.theta > p.xi**2 * m + _TOL:
        raise InputError("theta exceeds xi^2 * m (schedule relation)")
    theta1 = p.theta
    theta0 = p.theta / p.xi
    schedule = ChainSchedule.compute(p.d, p.t, r, p.xi, m)
    chain_eta = max(p.eta, theta0 * 2.0 ** (p.d + 2 * (p.t + 1) * (r - 1)) / m)
    chain_params = dataclasses.replace(p, s=0, theta=theta0, eta=chain_eta)
    chain_bound = p.xi ** (p.t / 2)
    mutual_bound = p.xi**p.t

    outer_budget = 4
    last_stats: dict = {"schedule": schedule.to_dict()}
    for outer in range(outer_budget):
        chain_out = None
        chain_recs: list[dict] = []
        for c_try in range(p.max_restarts):
            cand = drc_chain(coloring, r, chain_params, derive_seed(seed, outer, 7, c_try))
            if not cand.ok:
                continue
            # each set loses about t halvings per refinement round it is
            # not the source of; redraw early when a target looks hopeless
            # (the filter relaxes after half the budget, floors still bind)
            if c_try < p.max_restarts // 2:
                shrink = 2.0 ** (p.t * (r - 1))
                if any(cand.sets[j].bit_count() < targets[j] * shrink
                       for j in range(r)):
                    continue
            gcol = coloring.subgraph(cand.color)
            chain_recs = []
            for a in range(r - 1):
                mr = measure_moment(
                    gcol, theta0, 0, [cand.sets[a]] * p.d, cand.sets[a + 1],
                    p.settings, derive_seed(seed, outer, 8, c_try, a),
                )
                chain_recs.append(
                    guarantee(f"chain_mu0_{a}", "moment", mr, chain_bound,
                              bound_holds(mr, chain_bound))
                )
            if all(rec["passed"] for rec in chain_recs):
                chain_out = cand
                break
        if chain_out is None:
            last_stats.update({"stage": "chain", "chain_guarantees": chain_recs})
            continue

        gcol = coloring.subgraph(chain_out.color)
        sets = list(chain_out.sets)
        rounds: list[dict] = []
        witness: list[tuple[int, ...]] = []
        failed = None
        for ri in range(r):
            src_list = mask_to_list(sets[ri])
            pre_sizes = [s.bit_count() for s in sets]
            done = False
            for attempt in range(p.max_restarts):
                rng = random.Random(derive_seed(seed, outer, 20 + ri, attempt))
                x = _pick(rng, src_list, p.t)
                nx = common_neighbors(gcol, x, gcol.full_mask)
                new = [sets[j] if j == ri else sets[j] & nx for j in range(r)]
                recs = []
                for j in range(r):
                    floor = theta0 if j >= ri else theta1
                    recs.append(_size_guarantee(f"E1_size_{j}", new[j].bit_count(), floor))
                eseed = derive_seed(seed, outer, 40 + ri, attempt)
                for j in range(ri, r - 1):
                    if new[j] and new[j + 1]:
                        mr = measure_moment(
                            gcol, theta0, 0, [new[j]] * p.d, new[j + 1],
                            p.settings, derive_seed(eseed, j),
                        )
                        recs.append(
                            guarantee(f"E2_chain_{j}", "moment", mr, chain_bound,
                                      bound_holds(mr, chain_bound))
                        )
                    else:
                        recs.append(guarantee(f"E2_chain_{j}", "moment", math.inf,
                                              chain_bound, False))
                for j in range(ri):
                    other = 0
                    for jj in range(r):
                        if jj != j:
                            other |= new[jj]
                    if other and new[j]:
                        mr = measure_moment(
                            gcol, theta1, p.s, [other] * p.d, new[j],
                            p.settings, derive_seed(eseed, 100 + j),
                        )
                        recs.append(
                            guarantee(f"E3_mutual_{j}", "moment", mr, mutual_bound,
                                      bound_holds(mr, mutual_bound))
                        )
                    else:
                        recs.append(guarantee(f"E3_mutual_{j}", "moment", math.inf,
                                              mutual_bound, False))
                other = 0
                pre_other = 0
                for jj in range(r):
                    if jj != ri:
                        other |= new[jj]
                        pre_other |= sets[jj]
                if other and new[ri]:
                    ratio = (pre_other.bit_count() / other.bit_count()) ** p.d
                    e4_bound = 4 * ratio * p.xi**p.t
                    mr = measure_moment(
                        gcol, theta1, p.s, [other] * p.d, new[ri],
                        p.settings, derive_seed(eseed, 200),
                    )
                    recs.append(
                        guarantee("E4_budget", "moment", mr, e4_bound,
                                  bound_holds(mr, e4_bound))
                    )
                elif r == 1:
                    pass  # no other sets; E4 vacuous
                else:
                    recs.append(guarantee("E4_budget", "moment", math.inf, 0.0, False))
                if all(rec["passed"] for rec in recs):
                    sets = new
                    witness.append(x)
                    rounds.append(
                        {"round": ri, "attempt": attempt, "pre_sizes": pre_sizes,
                         "sizes": [s.bit_count() for s in sets], "events": recs}
                    )
                    done = True
                    break
                failed = {
                    "round": ri,
                    "attempt": attempt,
                    "failed_event": next(rec["name"] for rec in recs if not rec["passed"]),
                    "events": recs,
                }
            if not done:
                break
        if failed is not None and len(rounds) < r:
            last_stats.update(
                {"stage": "rounds", "failure": failed, "rounds": rounds,
                 "chain": chain_out.to_dict()}
            )
            continue

        final: list[dict] = []
        for j in range(r):
            floor = max(theta1, targets[j])
            final.append(_size_guarantee(f"final_size_{j}", sets[j].bit_count(), floor))
        for j in range(r):
            other = 0
            for jj in range(r):
                if jj != j:
                    other |= sets[jj]
            if r == 1:
                break
            mr = measure_moment(
                gcol, theta1, p.s, [other] * p.d, sets[j],
                p.settings, derive_seed(seed, outer, 90, j),
            )
            final.append(
                guarantee(f"final_mu_{j}", "moment", mr, mutual_bound,
                          bound_holds(mr, mutual_bound))
            )
        stats = {
            "schedule": schedule.to_dict(),
            "chain": chain_out.to_dict(),
            "rounds": rounds,
            "guarantees": final,
            "theta0": theta0,
            "theta1": theta1,
            "outer": outer,
        }
        if all(rec["passed"] for rec in final):
            return DrcOutcome(
                op="drc_mutual", ok=True, n=m, sets=sets, witness=witness,
                stats=stats, restarts=outer, seed=seed, color=chain_out.color,
                params=p.to_dict(),
            )
        last_stats = stats
    last_stats["exhausted"] = True
    return DrcOutcome(
        op="drc_mutual", ok=False, n=m, sets=[], witness=[], stats=last_stats,
        restarts=outer_budget, seed=seed, params=p.to_dict(),
    )


# ---------------------------------------------------------------------------
# re-derivation of recorded guarantees


def _recheck_moment(g: Graph, rec: dict, theta: float, s: int, factors, target) -> bool:
    mom = rec.get("moment")
    if mom is None:
        return True
    from .defect import DefectParams, moment_exact, moment_sampled, product_size

    if mom["mode"] == "exact":
        fresh = moment_exact(g, DefectParams(theta, s, len(factors)), factors, target,
                             budget=max(product_size(g, factors), 1))
    else:
        fresh = moment_sampled(
            g, DefectParams(theta, s, len(factors)), factors, target,
            mom["sample_count"], mom["eval_seed"],
        )
    return fresh.value == mom["value"] or (
        math.isinf(fresh.value) and math.isinf(mom["value"])
    )


def reverify(g: Graph, outcome: DrcOutcome, v1, v2) -> bool:
    """Re-derive a one-set or pair outcome's guarantees from its witness.

    Checks that the stored sets equal N(witness) again and that every
    recorded moment reproduces exactly under its recorded evaluation seed.
    """
    v1m, v2m = as_mask(v1, g.n), as_mask(v2, g.n)
    p = outcome.params
    theta, s, d = p["theta"], p["s"], p["d"]
    if outcome.op in ("drc_bipartite", "drc_general"):
        a = common_neighbors(g, outcome.witness[0], v2m)
        if a != outcome.sets[0]:
            return False
        for rec in outcome.stats["guarantees"]:
            if rec["kind"] == "size" and rec["value"] != a.bit_count():
                return False
            if rec["kind"] == "moment" and a:
                if not _recheck_moment(g, rec, theta, s, [a] * d, v1m):
                    return False
        return True
    if outcome.op == "drc_pair":
        x1, x2 = outcome.witness
        a2 = common_neighbors(g, x1, v2m)
        a1 = common_neighbors(g, x2, v1m)
        if [a1, a2] != outcome.sets:
            return False
        for rec in outcome.stats["guarantees"]:
            if rec["name"] == "a1_size" and rec["value"] != a1.bit_count():
                return False
            if rec["name"] == "a2_size" and rec["value"] != a2.bit_count():
                return False
            if rec["name"] == "mu_a1_into_a2":
                if not _recheck_moment(g, rec, theta, s, [a1] * d, a2):
                    return False
            if rec["name"] == "mu_a2_into_a1":
                if not _recheck_moment(g, rec, theta, s, [a2] * d, a1):
                    return False
        return True
    raise InputError(f"reverify does not handle op {outcome.op!r}")
