"""Command-line front end.

Subcommands: gen, decompose, moment, drc, partition, embed, ramsey,
verify. Reports are JSON with the seed and effective configuration
embedded, so any run replays byte for byte from its own output. Exit
codes: 0 success, 1 structured failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import (
    BudgetExceeded,
    DefectParams,
    DrcParams,
    Graph,
    InputError,
    PartitionParams,
    PipelineConfig,
    as_mask,
    degeneracy,
    drc_bipartite,
    drc_chain,
    drc_general,
    drc_mutual,
    drc_pair,
    embed_bipartite_pipeline,
    find_monochromatic,
    forward_plan,
    greedy_color,
    max_forward_degree,
    moment_exact,
    moment_sampled,
    random_coloring,
    random_degenerate,
    random_graph,
    random_partition,
    read_coloring,
    read_edge_list,
    split,
    verify_embedding,
    write_coloring,
    write_edge_list,
)
from .graph import format_coloring, format_edge_list, mask_to_list


def _emit(args, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for key, value in sorted(payload.items()):
            print(f"{key}: {value}")


def _parse_set(spec: str, n: int) -> int:
    """Vertex-set syntax: 'all', 'a-b' (inclusive range), or 'v1,v2,...'."""
    if spec == "all":
        return (1 << n) - 1
    if "-" in spec and "," not in spec:
        lo, hi = spec.split("-", 1)
        return as_mask(range(int(lo), int(hi) + 1), n)
    return as_mask((int(tok) for tok in spec.split(",") if tok), n)


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return PipelineConfig.from_dict(json.load(fh))
    return PipelineConfig()


def cmd_gen(args) -> int:
    if args.kind == "graph":
        g = random_graph(args.n, args.p, args.seed)
        text = format_edge_list(g)
    elif args.kind == "degenerate":
        g = random_degenerate(args.n, args.d, args.seed)
        text = format_edge_list(g)
    else:
        text = format_coloring(random_coloring(args.n, args.seed))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_decompose(args) -> int:
    h = read_edge_list(args.graph)
    d, ordering = degeneracy(h)
    d = max(args.d or d, 1)
    coloring = greedy_color(h, ordering)
    part = split(h, coloring, d)
    fwd = forward_plan(h, part, max_forward_degree(h, part))
    _emit(args, {"d": d, "seed": args.seed, "partition": part.to_dict(),
                 "forward": fwd.to_dict()})
    return 0


def cmd_moment(args) -> int:
    g = read_edge_list(args.graph)
    factors = [_parse_set(s, g.n) for s in args.factors.split(";")]
    t = _parse_set(args.target, g.n)
    params = DefectParams(theta=args.theta, s=args.s, d=len(factors))
    if args.samples:
        mr = moment_sampled(g, params, factors, t, args.samples, args.seed)
    else:
        try:
            mr = moment_exact(g, params, factors, t)
        except BudgetExceeded as exc:
            raise InputError(str(exc)) from exc
    _emit(args, {"moment": mr.to_dict(), "theta": args.theta, "s": args.s,
                 "seed": args.seed})
    return 0


def cmd_drc(args) -> int:
    params = DrcParams(
        d=args.d, s=args.s, t=args.t, eta=args.eta, eps=args.eps,
        alpha=args.alpha, theta=args.theta, xi=args.xi,
        max_restarts=args.max_restarts,
    )
    if args.mode in ("bipartite", "general", "pair"):
        g = read_edge_list(args.graph)
        v1 = _parse_set(args.v1, g.n)
        v2 = _parse_set(args.v2, g.n)
        fn = {"bipartite": drc_bipartite, "general": drc_general,
              "pair": drc_pair}[args.mode]
        out = fn(g, v1, v2, params, args.seed)
    else:
        coloring = read_coloring(args.graph)
        fn = {"chain": drc_chain, "mutual": drc_mutual}[args.mode]
        out = fn(coloring, args.r, params, args.seed)
    _emit(args, out.to_dict())
    return 0 if out.ok else 1


def cmd_partition(args) -> int:
    g = read_edge_list(args.graph)
    with open(args.sets) as fh:
        payload = json.load(fh)
    sets = [as_mask(vs, g.n) for vs in payload["sets"]]
    p = tuple(float(x) for x in args.p.split(","))
    params = PartitionParams(
        p=p, theta=args.theta, s=args.s, d=args.d,
        e1_tolerance=args.e1_tolerance, e1_samples=args.e1_samples,
        max_restarts=args.max_restarts,
    )
    out = random_partition(g, sets, len(p), params, args.seed)
    _emit(args, out.to_dict())
    return 0 if out.ok else 1


def cmd_embed(args) -> int:
    g = read_edge_list(args.host)
    h = read_edge_list(args.pattern)
    cfg = _load_config(args)
    result = embed_bipartite_pipeline(g, h, cfg, args.seed)
    _emit(args, result.to_dict())
    return 0 if result.ok else 1


def cmd_ramsey(args) -> int:
    coloring = read_coloring(args.host)
    h = read_edge_list(args.pattern)
    cfg = _load_config(args)
    successes = 0
    last = None
    for trial in range(args.trials):
        last = find_monochromatic(coloring, h, cfg, args.seed + trial)
        successes += last.ok
    payload = last.to_dict()
    if args.trials > 1:
        payload["trials"] = args.trials
        payload["successes"] = successes
    _emit(args, payload)
    return 0 if last.ok else 1


def cmd_verify(args) -> int:
    h = read_edge_list(args.pattern)
    with open(args.map) as fh:
        payload = json.load(fh)
    mapping = {int(k): int(v) for k, v in payload["mapping"].items()}
    mapping = {x: v for x, v in mapping.items() if x < h.n}
    if args.host.endswith(".coloring") or args.color:
        coloring = read_coloring(args.host)
        g = coloring.subgraph(args.color or payload.get("color", "red"))
    else:
        g = read_edge_list(args.host)
    ok, violation = verify_embedding(h, g, mapping)
    _emit(args, {"ok": ok, "violation": list(violation) if violation else None})
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="degem")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, config=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--trials", type=int, default=1)
        if config:
            p.add_argument("--config", help="JSON file mirroring PipelineConfig")

    p = sub.add_parser("gen", help="random graphs and colorings")
    p.add_argument("kind", choices=("graph", "degenerate", "coloring"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("decompose", help="layer decomposition of a pattern")
    p.add_argument("graph")
    p.add_argument("--d", type=int)
    common(p)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("moment", help="defect moments, exact or sampled")
    p.add_argument("graph")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--factors", required=True,
                   help="semicolon-separated vertex sets (all | a-b | v1,v2,...)")
    p.add_argument("--target", default="all")
    p.add_argument("--samples", type=int, default=0,
                   help="0 means exact enumeration")
    common(p)
    p.set_defaults(fn=cmd_moment)

    p = sub.add_parser("drc", help="dependent random choice variants")
    p.add_argument("mode", choices=("bipartite", "general", "pair", "chain", "mutual"))
    p.add_argument("graph", help="edge list, or a coloring file for chain/mutual")
    p.add_argument("--v1", default="all")
    p.add_argument("--v2", default="all")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=0.25)
    p.add_argument("--max-restarts", type=int, default=100)
    common(p)
    p.set_defaults(fn=cmd_drc)

    p = sub.add_parser("partition", help="random split of host sets")
    p.add_argument("graph")
    p.add_argument("sets", help="JSON file with a 'sets' list of vertex lists")
    p.add_argument("--p", required=True, help="comma-separated layer probabilities")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--e1-tolerance", type=float, default=0.01)
    p.add_argument("--e1-samples", type=int, default=100_000)
    p.add_argument("--max-restarts", type=int, default=50)
    common(p)
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("embed", help="bipartite density pipeline")
    p.add_argument("--host", required=True)
    p.add_argument("--pattern", required=True)
    common(p, config=True)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("ramsey", help="monochromatic pattern search")
    p.add_argument("--host", required=True, help="coloring file")
    p.add_argument("--pattern", required=True)
    common(p, config=True)
    p.set_defaults(fn=cmd_ramsey)

    p = sub.add_parser("verify", help="re-check a serialized embedding")
    p.add_argument("--host", required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--map", required=True, help="JSON report with a 'mapping' field")
    p.add_argument("--color", choices=("red", "blue"))
    common(p)
    p.set_defaults(fn=cmd_verify)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
