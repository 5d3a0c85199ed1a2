"""Command-line front end: ``tsvft <subcommand> ...``.

Exit codes: 0 ok, 1 rejected structure or repair counterexample, 2 parse
error, 3 precondition error, 4 ILP timeout (status NA), 5 infeasible plan,
6 cost overflow in the heuristic.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import fixtures, ilpgen, mcmfgen
from .flow import CostOverflowError
from .mcmfgen import HeuristicConfig, HeuristicError
from .planner import PlanInfeasible, instance_from_dict, plan, plan_fixed_k
from .relgraph import GraphError, graph_from_dict, split, split_to_dot, to_dot
from .structure import StructureError, exhaustive_injection, metrics, sampled_injection, structure_from_dict, verify
from .synth import SynthError, SynthParams, dumps, parse_area, synth_instance
from .tolerance import max_tolerant_faults
from .yieldmodel import YieldError

EXIT_OK, EXIT_REJECT, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NA, EXIT_INFEASIBLE, EXIT_OVERFLOW = range(7)

log = logging.getLogger("tsvft")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_json(path: str) -> tuple[dict, str]:
    """Parsed JSON and the sha256 of the raw bytes."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}", EXIT_PARSE) from None
    except UnicodeDecodeError:
        raise CliError(f"{path}: not UTF-8 text", EXIT_PARSE) from None
    if not isinstance(data, dict):
        raise CliError(f"{path}: top-level JSON value must be an object", EXIT_PARSE)
    return data, hashlib.sha256(raw).hexdigest()


def load_graph_arg(arg: str):
    """A graph file, or ``fixture:NAME`` for a bundled example."""
    if arg.startswith("fixture:"):
        name = arg.split(":", 1)[1]
        if name not in fixtures.GRAPHS:
            raise CliError(f"unknown fixture {name!r}; have {', '.join(sorted(fixtures.GRAPHS))}", EXIT_PARSE)
        return fixtures.GRAPHS[name](), f"fixture:{name}"
    data, digest = _read_json(arg)
    try:
        return graph_from_dict(data), digest
    except GraphError as exc:
        raise CliError(f"{arg}: {exc}", EXIT_PARSE) from None


def load_structure_arg(arg: str):
    data, digest = _read_json(arg)
    try:
        return structure_from_dict(data), digest
    except StructureError as exc:
        raise CliError(f"{arg}: {exc}", EXIT_PARSE) from None


def _emit(report: dict, args) -> None:
    if not getattr(args, "timing", True):
        report.pop("timing", None)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    sys.stdout.write(text)


def _report(args, inputs: dict, config: dict, outputs: dict, seconds: float) -> dict:
    rep = {
        "command": args.command,
        "inputs": inputs,
        "config": config,
        "outputs": outputs,
        "timing": {"wall_seconds": round(seconds, 4)},
    }
    if args.echo_argv:
        rep["argv"] = sys.argv[1:]
    return rep


def _check_ids(st, g) -> None:
    known = set(g.vertices)
    unknown = sorted({v for ps in st.paths.values() for p in ps for v in p} - known)
    if unknown:
        raise CliError(f"structure references TSVs missing from the graph: {', '.join(unknown[:5])}",
                       EXIT_PRECONDITION)


# --------------------------------------------------------------------------
# subcommands


def cmd_ktol(args) -> int:
    g, _ = load_graph_arg(args.graph)
    rep = max_tolerant_faults(g)
    sys.stdout.write(json.dumps(rep.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    g, digest = load_graph_arg(args.graph)
    t0 = time.perf_counter()
    K = max_tolerant_faults(g).k
    if args.k is not None:
        if args.k < 1:
            raise CliError("--k must be at least 1", EXIT_PRECONDITION)
        if args.k > K:
            raise CliError(f"requested k={args.k} exceeds the group's tolerance K={K}", EXIT_PRECONDITION)
        k = args.k
    else:
        k = K if args.kcap is None else min(K, args.kcap)
    if k < 1:
        raise CliError("group tolerates no faults (K=0); nothing to generate", EXIT_PRECONDITION)
    config = {"method": args.method, "k": k, "seed": args.seed, "c": args.c,
              "threshold": args.threshold, "timeout": args.timeout, "kcap": args.kcap}
    if args.lp:
        Path(args.lp).write_text(ilpgen.write_lp(ilpgen.build_adaptive_model(split(g), k)))
    status = "Optimal"
    if args.method == "ilp":
        out = ilpgen.solve_adaptive(g, k, args.timeout)
        status = "NA" if out.status == ilpgen.TIMEOUT else out.status
        st = out.structure
    else:
        cfg = HeuristicConfig(c=args.c, perturb_threshold=args.threshold, seed=args.seed)
        try:
            st = mcmfgen.generate(g, k, cfg)
        except CostOverflowError as exc:
            raise CliError(str(exc), EXIT_OVERFLOW) from None
        status = "Heuristic"
    seconds = time.perf_counter() - t0
    outputs = {"K": K, "status": status}
    if st is not None:
        mt = metrics(st, g)
        outputs["metrics"] = {"max_mux_ports": mt.max_mux_ports, "used_stsvs": mt.used_stsvs,
                              "max_indegree": mt.max_indegree}
        if args.out:
            Path(args.out).write_text(json.dumps(st.to_dict(), indent=2) + "\n")
            outputs["structure"] = args.out
        if args.dot:
            Path(args.dot).write_text(to_dot(g, st.connections))
    elif args.dot:
        Path(args.dot).write_text(to_dot(g))
    _emit(_report(args, {"graph": digest}, config, outputs, seconds), args)
    if status == "NA":
        return EXIT_NA
    if st is None:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_split(args) -> int:
    g, _ = load_graph_arg(args.graph)
    sys.stdout.write(split_to_dot(split(g)))
    return EXIT_OK


def cmd_plan(args) -> int:
    data, digest = _read_json(args.instance)
    params = data.setdefault("params", {})
    for key, val in (("target_yield", args.target), ("p", args.p), ("kcap", args.kcap),
                     ("method", args.method), ("timeout", args.timeout), ("yield_mode", args.yield_mode),
                     ("samples", args.samples)):
        if val is not None:
            params[key] = val
    if args.no_kcap:
        params["kcap"] = None
    try:
        inst = instance_from_dict(data)
    except (GraphError, YieldError, ValueError) as exc:
        raise CliError(f"{args.instance}: {exc}", EXIT_PARSE) from None
    t0 = time.perf_counter()
    config = {"mode": "adaptive" if args.baseline_k is None else f"fixed-k{args.baseline_k}",
              "target_yield": inst.target_yield, "p": inst.yield_params.p, "kcap": inst.kcap,
              "method": inst.method, "margin_um": inst.margin, "yield_mode": inst.yield_params.mode}
    try:
        res = plan(inst) if args.baseline_k is None else plan_fixed_k(inst, args.baseline_k)
    except PlanInfeasible as exc:
        outputs = {"status": "Infeasible", **exc.to_dict()}
        _emit(_report(args, {"instance": digest}, config, outputs, time.perf_counter() - t0), args)
        return EXIT_INFEASIBLE
    except CostOverflowError as exc:
        raise CliError(str(exc), EXIT_OVERFLOW) from None
    seconds = time.perf_counter() - t0
    if args.out:
        Path(args.out).write_text(json.dumps(res.to_dict(timing=False), indent=2) + "\n")
    outputs = {"status": "Planned", **res.totals(), "iterations": res.iterations,
               "groups": [{"id": gr.gid, "size": len(gr.f_tsvs), "k_used": gr.k_used,
                           "s_tsvs": len(gr.s_tsvs), "engine": gr.engine} for gr in res.groups]}
    if args.out:
        outputs["plan"] = args.out
    rep = _report(args, {"instance": digest}, config, outputs, seconds)
    rep["timing"].update({k: round(v, 4) for k, v in res.timing.items()})
    _emit(rep, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    g, gd = load_graph_arg(args.graph)
    st, sd = load_structure_arg(args.structure)
    _check_ids(st, g)
    k = st.k if args.k is None else args.k
    diag = verify(st, g, k)
    out = {"accepted": diag.ok, **diag.to_dict()}
    if diag.ok:
        out["metrics"] = {k: v for k, v in metrics(st, g).to_dict().items() if k.startswith(("max", "used"))}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK if diag.ok else EXIT_REJECT


def cmd_inject(args) -> int:
    g, _ = load_graph_arg(args.graph)
    st, _ = load_structure_arg(args.structure)
    _check_ids(st, g)
    up_to = st.k if args.up_to is None else args.up_to
    if args.samples:
        rep = sampled_injection(st, g, up_to, args.samples, args.seed)
    else:
        rep = exhaustive_injection(st, g, up_to)
    sys.stdout.write(json.dumps(rep.to_dict(), indent=2) + "\n")
    return EXIT_OK if rep.counterexample is None else EXIT_REJECT


def cmd_synth(args) -> int:
    try:
        w, h = parse_area(args.area)
        sp = SynthParams(args.n_ftsv, w, h, bbox_scale=args.bbox_scale, site_pitch=args.site_pitch,
                         seed=args.seed, p=args.p, target_yield=args.target, kcap=args.kcap)
        text = dumps(synth_instance(sp))
    except SynthError as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from None
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import BenchConfig, run_bench

    cfg = BenchConfig(out_dir=Path(args.out_dir), count=args.count, n_min=args.n_min, n_max=args.n_max,
                      seed=args.seed, workers=args.workers, sweep_n=args.sweep_n, plots=not args.no_plots)
    summary = run_bench(cfg)
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsvft", description="Fault-tolerant TSV structure synthesis and planning.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def reporting(p):
        p.add_argument("--report", help="also write the JSON report here")
        p.add_argument("--no-timing", dest="timing", action="store_false",
                       help="omit wall-clock fields so reports are byte-stable")
        p.add_argument("--echo-argv", action="store_true", help="record argv in the report")

    p = sub.add_parser("ktol", help="maximum tolerant faults K and Nd per f-TSV")
    p.add_argument("graph", help="graph JSON or fixture:NAME")
    p.set_defaults(func=cmd_ktol)

    p = sub.add_parser("gen", help="generate a K-fault tolerance structure")
    p.add_argument("graph")
    p.add_argument("--method", choices=("ilp", "mcmf"), default="mcmf")
    p.add_argument("--k", type=int)
    p.add_argument("--kcap", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=int, default=3, help="congestion cost base")
    p.add_argument("--threshold", type=int, default=50, help="perturbation stall limit")
    p.add_argument("--timeout", type=float, default=ilpgen.DEFAULT_TIMEOUT, help="ILP time limit in seconds")
    p.add_argument("--out", help="structure JSON output")
    p.add_argument("--lp", help="write the ILP model in LP format")
    p.add_argument("--dot", help="write the graph with structure connections in DOT")
    reporting(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", help="print the vertex-split graph in DOT")
    p.add_argument("graph")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("plan", help="yield-driven TSV grouping and structure synthesis")
    p.add_argument("instance")
    p.add_argument("--baseline-k", type=int, help="run the fixed-k baseline instead")
    p.add_argument("--target", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--kcap", type=int)
    p.add_argument("--no-kcap", action="store_true", help="use each group's full K")
    p.add_argument("--method", choices=("ilp", "mcmf"))
    p.add_argument("--timeout", type=float)
    p.add_argument("--yield-mode", choices=("binomial", "exact", "montecarlo"),
                   help="group yield model used while planning")
    p.add_argument("--samples", type=int, help="Monte Carlo samples per group")
    p.add_argument("--out", help="PlanResult JSON output")
    reporting(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="check a structure against a graph")
    p.add_argument("graph")
    p.add_argument("structure")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("inject", help="fault injection against a structure")
    p.add_argument("graph")
    p.add_argument("structure")
    p.add_argument("--up-to", type=int)
    p.add_argument("--samples", type=int, default=0, help="sample patterns instead of enumerating")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("synth", help="write a synthetic planning instance")
    p.add_argument("--n-ftsv", type=int, required=True)
    p.add_argument("--area", required=True, help="WxH in micrometers")
    p.add_argument("--bbox-scale", type=float, default=1.0)
    p.add_argument("--site-pitch", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.001)
    p.add_argument("--target", type=float, default=0.997)
    p.add_argument("--kcap", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="comparison matrix and target-yield sweep with figures")
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--n-min", type=int, default=50)
    p.add_argument("--n-max", type=int, default=600)
    p.add_argument("--sweep-n", type=int, default=200, help="f-TSVs in the target-yield sweep instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help="defaults to $TSVTOL_WORKERS or 1")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not hasattr(args, "echo_argv"):
        args.echo_argv = False
    try:
        return args.func(args)
    except CliError as exc:
        print(f"tsvft {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, HeuristicError) as exc:
        print(f"tsvft {args.command}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
