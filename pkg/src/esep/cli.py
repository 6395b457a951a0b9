"""Command-line entry point.

One executable, one subcommand per capability.  Node indices are 1-based
in text interfaces and 0-based in JSON payloads.  Exit codes: 0 success,
1 domain error (bad graph, infeasible query), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .graphs import (
    Dmg,
    GraphFormatError,
    format_graph_text,
    graph_to_json_dict,
    load_graph_file,
)

log = logging.getLogger("esep")


def _parse_node_list(text: str, d: int) -> frozenset[int]:
    """Comma-separated 1-based indices; empty string means the empty set."""
    text = text.strip()
    if not text:
        return frozenset()
    out = set()
    for part in text.split(","):
        try:
            v = int(part) - 1
        except ValueError:
            raise GraphFormatError(f"bad node index {part!r}") from None
        if not 0 <= v < d:
            raise GraphFormatError(f"node index {part} out of range for d={d}")
        out.add(v)
    return frozenset(out)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _write_graph(path: str, g: Dmg, as_json: bool) -> None:
    p = Path(path)
    if as_json or p.suffix == ".json":
        p.write_text(json.dumps(graph_to_json_dict(g), indent=2) + "\n")
    else:
        p.write_text(format_graph_text(g))


def cmd_sep(args) -> int:
    from .separation import open_walk_witness

    g = load_graph_file(args.graph)
    a = _parse_node_list(args.a, g.d)
    b = _parse_node_list(args.b, g.d)
    c = _parse_node_list(args.c, g.d)
    walk = open_walk_witness(g, a, b, c, args.criterion)
    separated = walk is None
    payload = {
        "criterion": args.criterion,
        "a": sorted(a),
        "b": sorted(b),
        "c": sorted(c),
        "separated": separated,
    }
    lines = ["separated" if separated else "connected"]
    if args.witness and walk is not None:
        payload["witness"] = {"nodes": list(walk.nodes), "edges": list(walk.edges)}
        lines.append(f"witness: {walk}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_lift(args) -> int:
    g = load_graph_file(args.graph)
    lifted = g.lift().graph
    text = (
        f"# lifted graph: nodes 1..{g.d} are past copies, {g.d + 1}..{2 * g.d} future copies\n"
        + format_graph_text(lifted)
    )
    if args.out:
        _write_graph(args.out, lifted, args.json)
    _emit(args, graph_to_json_dict(lifted), text.rstrip("\n"))
    return 0


def cmd_project(args) -> int:
    g = load_graph_file(args.graph)
    keep = _parse_node_list(args.keep, g.d)
    projected, relabel = g.latent_projection(keep)
    if args.out:
        _write_graph(args.out, projected, args.json)
    payload = {
        "graph": graph_to_json_dict(projected),
        "relabel": {str(k): v for k, v in sorted(relabel.items())},
    }
    legend = ", ".join(f"{k + 1}->{v + 1}" for k, v in sorted(relabel.items()))
    _emit(args, payload, f"# kept nodes: {legend}\n" + format_graph_text(projected).rstrip("\n"))
    return 0


def cmd_acyclify(args) -> int:
    g = load_graph_file(args.graph)
    acyclic = g.acyclify()
    if args.out:
        _write_graph(args.out, acyclic, args.json)
    _emit(args, graph_to_json_dict(acyclic), format_graph_text(acyclic).rstrip("\n"))
    return 0


def cmd_model(args) -> int:
    from .independence import AXIOMS, check_axiom, fingerprint

    g = load_graph_file(args.graph)
    fp = fingerprint(g, args.criterion)
    payload: dict = {"fingerprint": fp.to_hex()}
    lines = [fp.to_hex()]
    if args.axioms:
        payload["axioms"] = {}
        for axiom in AXIOMS:
            cex = check_axiom(fp, axiom)
            payload["axioms"][axiom] = (
                None if cex is None else {k: sorted(v) for k, v in cex.assignment.items()}
            )
            lines.append(f"{axiom}: {'holds' if cex is None else str(cex)}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_equiv(args) -> int:
    from .independence import expand_cond, fingerprint, mask_to_set

    g1 = load_graph_file(args.g1)
    g2 = load_graph_file(args.g2)
    if g1.d != g2.d:
        raise GraphFormatError(f"node count mismatch: {g1.d} vs {g2.d}")
    fp1 = fingerprint(g1, args.criterion)
    fp2 = fingerprint(g2, args.criterion)
    payload: dict = {"equivalent": fp1 == fp2}
    text = "equivalent" if fp1 == fp2 else "not equivalent"
    if fp1 != fp2:
        diff = fp1.bits ^ fp2.bits
        idx = (diff & -diff).bit_length() - 1
        half = 1 << (g1.d - 1)
        pair, code = divmod(idx, half)
        a, b = divmod(pair, g1.d)
        c = sorted(mask_to_set(expand_cond(code, a)))
        payload["witness_triple"] = {"a": a, "b": b, "c": c}
        text += f"\nwitness triple: a={a + 1}, b={b + 1}, c={[v + 1 for v in c]}"
    _emit(args, payload, text)
    return 0


def cmd_greatest(args) -> int:
    from .equivalence import class_of, greatest_element_dg

    g = load_graph_file(args.graph)
    if args.enumerate:
        cls = class_of(g, criterion="e")
        if cls.greatest is None:
            _emit(args, {"greatest": None, "class_size": len(cls.members)}, "no greatest element")
            return 0
        top = cls.members[cls.greatest]
        payload = {"greatest": graph_to_json_dict(top), "class_size": len(cls.members)}
    else:
        top = greatest_element_dg(g)
        payload = {"greatest": graph_to_json_dict(top)}
    if args.out:
        _write_graph(args.out, top, args.json)
    _emit(args, payload, format_graph_text(top).rstrip("\n"))
    return 0


def cmd_enumerate(args) -> int:
    import os

    from .enumeration import code_to_graph, run_verification

    workers = args.workers or int(os.environ.get("ESEP_WORKERS", "0"))
    if workers:
        import numba

        numba.set_num_threads(workers)
    report = run_verification(
        args.d,
        args.kind,
        args.criterion,
        out_dir=args.out,
        max_slot_bits=args.max_slot_bits,
        progress=not args.json,
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(include_meta=False))
        (out / "report_meta.json").write_text(report.to_json(include_meta=True))
        for k, failure in enumerate(report.failures):
            stanzas = "".join(
                format_graph_text(code_to_graph(c, args.d, args.kind))
                for c in failure.member_codes
            )
            (out / f"failure_{k:04d}.txt").write_text(stanzas)
    _emit(args, report.to_json_dict(include_meta=True), report.summary())
    return 0


def cmd_discover(args) -> int:
    from .discovery import QueryRecord, ct_pc, graph_oracle

    if args.oracle == "graph":
        if not args.truth:
            raise GraphFormatError("--truth FILE is required with --oracle graph")
        truth = load_graph_file(args.truth)
        d = truth.d
        oracle = graph_oracle(truth)
    else:
        from .sde import PathBundle, data_oracle

        if not args.paths:
            raise GraphFormatError("--paths FILE is required with --oracle data")
        if args.seed is None:
            raise GraphFormatError("--seed is required with --oracle data")
        bundle = PathBundle.load(args.paths)
        d = bundle.d
        oracle = data_oracle(bundle, s=args.s, h=args.h, alpha=args.alpha, perm_seed=args.seed)
    records: list[QueryRecord] = []
    result = ct_pc(d, oracle, log=records)
    if args.out:
        _write_graph(args.out, result, args.json)
    payload = {
        "graph": graph_to_json_dict(result),
        "queries": [
            {"i": r.i, "j": r.j, "K": list(r.k), "accepted": r.accepted} for r in records
        ],
    }
    if args.log:
        Path(args.log).write_text(json.dumps(payload["queries"], indent=2) + "\n")
    _emit(args, payload, format_graph_text(result).rstrip("\n"))
    return 0


def cmd_simulate(args) -> int:
    from .sde import sample_params, simulate

    adjacency = load_graph_file(args.adjacency)
    params = sample_params(adjacency, seed=args.seed)
    bundle = simulate(
        params, n_paths=args.paths, n_steps=args.steps, horizon=args.horizon,
        seed=args.seed + 1,
    )
    bundle.save(args.out)
    payload = {
        "out": args.out,
        "d": bundle.d,
        "n_paths": bundle.n_paths,
        "n_steps": bundle.n_steps,
        "T": bundle.horizon,
        "seed": bundle.seed,
    }
    _emit(args, payload, f"wrote {args.out} ({bundle.n_paths} paths, {bundle.n_steps} steps)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esep", description=__doc__)
    parser.add_argument("--version", action="version", version=f"esep {__version__}")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("sep", cmd_sep, help="separation query on a graph")
    p.add_argument("--criterion", choices=["d", "sigma", "e"], required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--a", required=True, help="comma-separated 1-based nodes")
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--witness", action="store_true", help="print one open walk when connected")

    p = add("lift", cmd_lift, help="past/future lifted graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")

    p = add("project", cmd_project, help="latent projection onto a node subset")
    p.add_argument("--graph", required=True)
    p.add_argument("--keep", required=True, help="comma-separated 1-based observed nodes")
    p.add_argument("--out")

    p = add("acyclify", cmd_acyclify, help="acyclic surrogate of a directed graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")

    p = add("model", cmd_model, help="independence-model fingerprint")
    p.add_argument("--graph", required=True)
    p.add_argument("--criterion", choices=["d", "sigma", "e"], default="e")
    p.add_argument("--axioms", action="store_true", help="also check closure properties")

    p = add("equiv", cmd_equiv, help="Markov equivalence of two graphs")
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--criterion", choices=["d", "sigma", "e"], default="e")

    p = add("greatest", cmd_greatest, help="greatest element of an equivalence class")
    p.add_argument("--graph", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--construct", action="store_true",
                      help="closed-form construction (directed graphs; default)")
    mode.add_argument("--enumerate", action="store_true",
                      help="materialize the class and scan it")
    p.add_argument("--out")

    p = add("enumerate", cmd_enumerate, help="exhaustive class sweep and greatest-element check")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kind", choices=["dg", "dmg"], required=True)
    p.add_argument("--criterion", choices=["e", "sigma"], default="e")
    p.add_argument("--workers", type=int, help="kernel thread count")
    p.add_argument("--out", help="directory for report, failures and resume shards")
    p.add_argument("--max-slot-bits", type=int, default=22)

    p = add("discover", cmd_discover, help="constraint-based structure discovery")
    p.add_argument("--oracle", choices=["graph", "data"], required=True)
    p.add_argument("--truth", help="ground-truth graph file (graph oracle)")
    p.add_argument("--paths", help="path bundle file (data oracle)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--seed", type=int, help="seed for the data oracle's permutations")
    p.add_argument("--out", help="write the discovered graph here")
    p.add_argument("--log", help="write the oracle query log here")

    p = add("simulate", cmd_simulate, help="simulate the linear benchmark system")
    p.add_argument("--adjacency", required=True)
    p.add_argument("--paths", type=int, default=400)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    try:
        return args.func(args)
    except (GraphFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
