"""The threshold defect function, its moments, and guarantee checks.

The defect of a tuple Q in a set T penalizes scarce common neighborhoods:
0 when |N(Q;T)| clears the threshold, threshold/|N(Q;T)| when it does not,
and +inf when the neighborhood is empty (the source analysis divides by
|N(Q;T)| and elsewhere excludes the empty case by finiteness; a
distinguished infinity keeps moments honest instead of crashing).

Moments average defect^s over a product set of tuples, including tuples
that repeat a vertex across factors. The s = 0 moment is the indicator of
a nonzero defect, so 0^0 never arises.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .graph import BudgetExceeded, Graph, InputError, as_mask, derive_seed, mask_to_list

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class DefectParams:
    """Threshold, moment order, and tuple arity."""

    theta: float
    s: int
    d: int

    def __post_init__(self):
        if self.theta <= 0:
            raise InputError("theta must be positive")
        if self.s < 0:
            raise InputError("s must be non-negative")
        if self.d < 1:
            raise InputError("d must be at least 1")


@dataclass
class MomentResult:
    """An exact or sampled moment value.

    ``infinite_hits`` counts enumerated/sampled tuples contributing an
    infinite term, i.e. tuples with an empty common neighborhood when
    s >= 1. For s = 0 every term is 0 or 1, so it stays 0 and the value is
    finite; the invariant value == +inf iff infinite_hits > 0 holds.
    """

    value: float
    mode: str  # "exact" | "sampled"
    sample_count: int = 0
    std_error: float = 0.0
    infinite_hits: int = 0
    eval_seed: int | None = None

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "mode": self.mode,
            "sample_count": self.sample_count,
            "std_error": self.std_error,
            "infinite_hits": self.infinite_hits,
        }
        if self.eval_seed is not None:
            d["eval_seed"] = self.eval_seed
        return d


def defect_of_count(count: int, theta: float) -> float:
    if count >= theta:
        return 0.0
    if count == 0:
        return math.inf
    return theta / count


def defect_term(count: int, theta: float, s: int) -> float:
    """defect^s with the s = 0 indicator convention."""
    if s == 0:
        return 1.0 if count < theta else 0.0
    if count >= theta:
        return 0.0
    if count == 0:
        return math.inf
    return (theta / count) ** s


def defect(g: Graph, theta: float, q, t) -> float:
    """Threshold defect of the tuple q in the set t."""
    if theta <= 0:
        raise InputError("theta must be positive")
    mask = as_mask(t, g.n)
    for v in q:
        if not 0 <= v < g.n:
            raise InputError(f"vertex id {v} out of range")
        mask &= g.adj[v]
    return defect_of_count(mask.bit_count(), theta)


def _factor_lists(g: Graph, factors) -> list[list[int]]:
    lists = []
    for f in factors:
        vs = mask_to_list(as_mask(f, g.n))
        if not vs:
            raise InputError("moment over an empty factor is undefined")
        lists.append(vs)
    return lists


def product_size(g: Graph, factors) -> int:
    size = 1
    for f in factors:
        size *= as_mask(f, g.n).bit_count()
    return size


def moment_exact(
    g: Graph,
    params: DefectParams,
    factors,
    t,
    budget: int = DEFAULT_BUDGET,
) -> MomentResult:
    """Full-enumeration moment over the product of the d factors.

    Refuses (BudgetExceeded) when the product set has more than ``budget``
    tuples; use moment_sampled instead above that.
    """
    if len(factors) != params.d:
        raise InputError(f"expected {params.d} factors, got {len(factors)}")
    lists = _factor_lists(g, factors)
    total = 1
    for vs in lists:
        total *= len(vs)
    if total > budget:
        raise BudgetExceeded(
            f"{total} tuples exceed the budget of {budget}; use moment_sampled"
        )
    tmask = as_mask(t, g.n)
    theta, s = params.theta, params.s
    adj = g.adj
    acc = 0.0
    inf_hits = 0
    last = len(lists) - 1

    def rec(depth: int, mask: int) -> None:
        nonlocal acc, inf_hits
        row = lists[depth]
        if depth == last:
            for v in row:
                cnt = (mask & adj[v]).bit_count()
                term = defect_term(cnt, theta, s)
                if term == math.inf:
                    inf_hits += 1
                else:
                    acc += term
        else:
            for v in row:
                rec(depth + 1, mask & adj[v])

    rec(0, tmask)
    value = math.inf if inf_hits else acc / total
    return MomentResult(value=value, mode="exact", infinite_hits=inf_hits)


def moment_sampled(
    g: Graph,
    params: DefectParams,
    factors,
    t,
    samples: int,
    seed: int,
) -> MomentResult:
    """Unbiased Monte-Carlo moment estimate.

    Draws uniform independent tuples with replacement; the standard error
    is the sample standard deviation over sqrt(samples). Any sampled tuple
    with an infinite term makes the estimate +inf.
    """
    if samples < 1:
        raise InputError("samples must be at least 1")
    if len(factors) != params.d:
        raise InputError(f"expected {params.d} factors, got {len(factors)}")
    lists = _factor_lists(g, factors)
    tmask = as_mask(t, g.n)
    theta, s = params.theta, params.s
    adj = g.adj
    rng = random.Random(seed)
    mean = 0.0
    m2 = 0.0
    inf_hits = 0
    for k in range(1, samples + 1):
        mask = tmask
        for vs in lists:
            mask &= adj[vs[rng.randrange(len(vs))]]
        term = defect_term(mask.bit_count(), theta, s)
        if term == math.inf:
            inf_hits += 1
            continue
        delta = term - mean
        mean += delta / k
        m2 += delta * (term - mean)
    if inf_hits:
        return MomentResult(
            value=math.inf,
            mode="sampled",
            sample_count=samples,
            std_error=math.inf,
            infinite_hits=inf_hits,
            eval_seed=seed,
        )
    stderr = math.sqrt(m2 / (samples - 1) / samples) if samples > 1 else 0.0
    return MomentResult(
        value=mean,
        mode="sampled",
        sample_count=samples,
        std_error=stderr,
        eval_seed=seed,
    )


def count_low_codegree(g: Graph, params: DefectParams, v1, v2) -> int:
    """Number of d-tuples in v1^d with fewer than theta/|v1|^(d/s) common
    neighbors in v2 (the quantity the moment strictly dominates)."""
    if params.s < 1:
        raise InputError("s must be at least 1 here")
    vs = mask_to_list(as_mask(v1, g.n))
    if not vs:
        return 0
    tmask = as_mask(v2, g.n)
    thresh = params.theta / len(vs) ** (params.d / params.s)
    adj = g.adj
    last = params.d - 1
    count = 0

    def rec(depth: int, mask: int) -> None:
        nonlocal count
        if depth == last:
            for v in vs:
                if (mask & adj[v]).bit_count() < thresh:
                    count += 1
        else:
            for v in vs:
                rec(depth + 1, mask & adj[v])

    rec(0, tmask)
    return count


# ---------------------------------------------------------------------------
# guarantee checking shared by the DRC / pruning / pipeline layers


@dataclass
class EvalSettings:
    """How measured guarantees get evaluated.

    Products up to ``exact_cutoff`` tuples are enumerated exactly; larger
    ones are sampled with ``samples`` draws and a 3-sigma safety margin on
    bound checks. Distinct from the moment_exact budget: these checks sit
    inside restart loops and must stay cheap.
    """

    exact_cutoff: int = 200_000
    samples: int = 3000

    def to_dict(self) -> dict:
        return {"exact_cutoff": self.exact_cutoff, "samples": self.samples}


def measure_moment(
    g: Graph,
    theta: float,
    s: int,
    factors,
    t,
    settings: EvalSettings,
    seed: int,
) -> MomentResult:
    params = DefectParams(theta=theta, s=s, d=len(factors))
    if product_size(g, factors) <= settings.exact_cutoff:
        return moment_exact(g, params, factors, t, budget=settings.exact_cutoff)
    return moment_sampled(g, params, factors, t, settings.samples, seed)


def bound_holds(result: MomentResult, bound: float) -> bool:
    """Conservative acceptance: exact values compare directly; sampled
    values must clear the bound by three standard errors."""
    if result.value == math.inf:
        return False
    if result.mode == "exact":
        return result.value <= bound
    return result.value + 3 * result.std_error <= bound


def guarantee(
    name: str, kind: str, value, bound: float, passed: bool, **extra
) -> dict:
    """Uniform record for a measured guarantee inside outcome stats."""
    rec = {"name": name, "kind": kind, "bound": bound, "passed": bool(passed)}
    if isinstance(value, MomentResult):
        rec["moment"] = value.to_dict()
        rec["value"] = value.value
    else:
        rec["value"] = value
    rec.update(extra)
    return rec
