"""Command line interface.

Subcommands: build, verify, route, simulate, analyze, report. Exit codes:
0 success / checks passed, 1 a verification or build check failed,
2 usage error, 3 runtime error. Every subcommand echoes its resolved
configuration into its JSON output; pass --no-timestamp for byte-stable
output across runs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from datetime import datetime, timezone

import numpy as np

from .distbuild import VerificationPolicy, orchestrate_build
from .graph import GraphError, WeightedGraph, edge_statistics, parse_graph
from .metrics import (
    SystemObservation,
    anonymity_degree,
    attack_cost_report,
    chernoff_tail_bound,
    confinement_bound,
    hidden_state_probability,
    max_unmonitored_bound,
    monitor_count_estimate,
    path_probability,
    prob_route_monitored,
    rbc_table,
)
from .routing import MonitorSet, plan_route, simulate_traffic
from .trees import build_overlay, read_overlay, write_overlay
from .verify import (
    cut_approximation_check,
    mixing_cover_test,
    negative_correlation_test,
    parallel_cover_test,
    spectral_approximation_check,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


# -- serialization helpers ----------------------------------------------------


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _config_echo(args) -> dict:
    skip = {"func"}
    return {
        k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip
    }


def _flatten(doc, prefix=""):
    rows = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            rows.extend(_flatten(doc[k], f"{prefix}{k}." if prefix else f"{k}."))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            rows.extend(_flatten(v, f"{prefix}{i}."))
    else:
        rows.append((prefix.rstrip("."), doc))
    return rows


_USE_OUT = object()


def _emit(doc: dict, args, path=_USE_OUT) -> None:
    """Write the report to ``path`` (default --out, then stdout)."""
    doc = dict(doc)
    doc["config"] = _config_echo(args)
    if not args.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in _flatten(doc):
            writer.writerow([key, value])
        text = buf.getvalue()
    else:
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    target = args.out if path is _USE_OUT else path
    if target:
        with open(target, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- input helpers --------------------------------------------------------------


def _load_graph(args) -> WeightedGraph:
    if not args.graph:
        raise UsageError("--graph is required")
    with open(args.graph) as fh:
        return parse_graph(fh.read())


def _load_overlay(args, g: WeightedGraph):
    if not getattr(args, "overlay", None):
        raise UsageError("--overlay is required")
    return read_overlay(args.overlay, g)


def _parse_vertex_file(path, n):
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                v = int(line)
            except ValueError:
                raise GraphError(f"malformed vertex at line {lineno} of {path}") from None
            if not 0 <= v < n:
                raise GraphError(f"vertex {v} out of range at line {lineno} of {path}")
            out.append(v)
    return out


def _monitor_set(args, n) -> MonitorSet:
    random_m = getattr(args, "random_monitors", None)
    selector = getattr(args, "monitors", None)
    if random_m is not None and selector is not None:
        raise UsageError("give either --monitors or --random-monitors, not both")
    if random_m is not None:
        return MonitorSet.random(n, random_m, seed=args.seed)
    if selector is None:
        raise UsageError("monitors required: --monitors all|none|PATH or --random-monitors M")
    if selector == "all":
        return MonitorSet.from_vertices(n, range(n))
    if selector == "none":
        return MonitorSet.from_vertices(n, ())
    return MonitorSet.from_vertices(n, _parse_vertex_file(selector, n))


def _flows(args, n):
    path = getattr(args, "flows", None)
    source = getattr(args, "source", None)
    dest = getattr(args, "dest", None)
    if path:
        flows = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise GraphError(f"malformed flow at line {lineno}: expected 's t'")
                flows.append((int(parts[0]), int(parts[1])))
        if not flows:
            raise GraphError("flows file contains no flows")
        return flows
    if source is None or dest is None:
        raise UsageError("give --flows FILE or both --source and --dest")
    return [(source, dest)]


# -- subcommands -------------------------------------------------------------------


def cmd_build(args) -> int:
    g = _load_graph(args)
    if not g.is_connected:
        raise GraphError("graph not connected")
    if not args.out:
        raise UsageError("--out is required (overlay file path)")
    if (args.k is None) == (not args.distributed):
        raise UsageError("give exactly one of --k or --distributed")
    doc = {"kind": "build", "n": g.n, "base_edges": g.m}
    if args.k is not None:
        overlay = build_overlay(g, args.k, seed=args.seed, weight_mode=args.weight_mode)
        exit_code = EXIT_OK
        doc.update(k=args.k, succeeded=True)
    else:
        policy = VerificationPolicy(method=args.verification, cap_factor=args.cap_factor)
        result = orchestrate_build(
            g,
            seed=args.seed,
            workers=args.workers,
            weight_mode=args.weight_mode,
            policy=policy,
        )
        overlay = result.overlay
        exit_code = EXIT_OK if result.succeeded else EXIT_CHECK_FAILED
        doc.update(
            k=result.total_trees,
            succeeded=result.succeeded,
            workers=result.worker_count,
            round_cap=result.round_cap,
            rounds=[_jsonable(r) for r in result.rounds],
        )
    write_overlay(overlay, args.out)
    doc.update(
        overlay_file=args.out,
        distinct_edges=overlay.distinct_edge_count,
        average_degree=overlay.average_degree(),
        weight_mode=overlay.weight_mode,
    )
    _emit(doc, args, path=args.log)
    return exit_code


def cmd_verify(args) -> int:
    g = _load_graph(args)
    o = _load_overlay(args, g)
    selected = {
        "mixing": args.mixing,
        "parallel_cover": args.parallel_cover,
        "spectral": args.spectral,
        "cuts": args.cuts,
        "correlation": args.correlation,
    }
    if not any(selected.values()):
        raise UsageError(
            "select at least one check: --mixing --parallel-cover --spectral --cuts --correlation"
        )
    checks = {}
    if selected["mixing"]:
        checks["mixing"] = mixing_cover_test(
            o,
            seed=args.seed,
            cap_factor=args.cap_factor,
            weighted=args.weighted,
            accumulate_neighbors=args.accumulate_neighbors,
        )
    if selected["parallel_cover"]:
        checks["parallel_cover"] = parallel_cover_test(
            o, walk_count=args.walk_count, walk_length=args.walk_length, seed=args.seed
        )
    if selected["spectral"]:
        checks["spectral"] = spectral_approximation_check(
            g, o, epsilon=args.epsilon, probes=args.probes, seed=args.seed
        )
    if selected["cuts"]:
        alpha = args.alpha
        if alpha is None:
            # theorem-guided default: alpha = 8 / average inclusion probability + 1
            alpha = 8.0 / edge_statistics(g).average_probability + 1.0
        checks["cuts"] = cut_approximation_check(g, o, alpha=alpha, max_n=args.max_n)
    if selected["correlation"]:
        checks["correlation"] = negative_correlation_test(
            g, samples=args.samples, seed=args.seed
        )

    passed = {}
    for name, report in checks.items():
        ok = report.success if hasattr(report, "success") else report.passed
        passed[name] = bool(ok)
        print(f"{name}: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    all_passed = all(passed.values())
    doc = {
        "kind": "verify",
        "checks": {name: _jsonable(report) for name, report in checks.items()},
        "passed": passed,
        "all_passed": all_passed,
    }
    _emit(doc, args)
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def cmd_route(args) -> int:
    g = _load_graph(args)
    o = _load_overlay(args, g)
    if args.source is None or args.dest is None:
        raise UsageError("--source and --dest are required")
    plan = plan_route(
        o,
        args.source,
        args.dest,
        args.r,
        mode=args.mode,
        revisit_policy=args.revisit,
        seed=args.seed,
        log_base=args.log_base,
        p_extend=args.p_extend,
    )
    doc = {
        "kind": "route",
        "plan": _jsonable(plan),
        "digest": plan.digest(),
        "walk_hops": plan.walk_hops,
        "splice_hops": plan.splice_hops,
        "delivered": plan.splice[-1] == args.dest if plan.splice else False,
    }
    _emit(doc, args)
    return EXIT_OK


def _run_simulation(args, o):
    flows = _flows(args, o.n)
    monitors = _monitor_set(args, o.n)
    trace = simulate_traffic(
        o,
        flows,
        monitors,
        r=args.r,
        trials=args.trials,
        mode=args.mode,
        revisit_policy=args.revisit,
        seed=args.seed,
        p_extend=args.p_extend,
        log_base=args.log_base,
    )
    return flows, monitors, trace


def _trace_summary(trace) -> dict:
    return {
        "trials": trace.trials,
        "monitored_count": trace.monitored_count,
        "fraction": trace.fraction,
        "wilson_low": trace.wilson_low,
        "wilson_high": trace.wilson_high,
        "monitor_count": trace.monitor_count,
        "r": trace.r,
        "segment_hops": trace.segment_hops,
        "mode": trace.mode,
        "revisit_policy": trace.revisit_policy,
        "flow_count": trace.flow_count,
    }


def cmd_simulate(args) -> int:
    g = _load_graph(args)
    o = _load_overlay(args, g)
    _, _, trace = _run_simulation(args, o)
    if args.trace:
        with open(args.trace, "w") as fh:
            for digest, monitored, first_idx in trace.records:
                fh.write(
                    json.dumps(
                        {
                            "plan": digest,
                            "monitored": monitored,
                            "first_monitor_hop": first_idx,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    doc = {"kind": "simulate", **_trace_summary(trace)}
    _emit(doc, args)
    return EXIT_OK


def cmd_analyze(args) -> int:
    g = _load_graph(args)
    o = _load_overlay(args, g)
    flows, monitors, trace = _run_simulation(args, o)
    n = o.n
    l = trace.segment_hops
    segments = args.r + 1
    total_hops = segments * l
    C = monitors.oblivious_count
    m_count = monitors.count
    beta = C / n

    analytic = None
    if total_hops < n:
        analytic = prob_route_monitored(n, C, segments, l)

    chernoff = None
    if m_count > 0:
        mu = total_hops * m_count / n
        try:
            chernoff = _jsonable(chernoff_tail_bound(n, C, total_hops, mu))
        except GraphError:
            chernoff = None

    capacity = max_unmonitored_bound(n, l, args.target)
    n_mix = args.n_mix if args.n_mix is not None else n
    path_p = path_probability(n, n_mix)
    hidden = hidden_state_probability(
        SystemObservation(n_nodes=n, n_mix=n_mix, n_messages=args.messages)
    )
    anonymity = {
        "monitor_identification_prob_monitors": (1.0 / m_count) if m_count else None,
        "monitor_identification_prob_all": 1.0 / n,
        "uniform_degree": (
            anonymity_degree([1.0 / m_count] * m_count).degree if m_count >= 2 else None
        ),
    }
    attack = attack_cost_report(o, attackers=max(1, m_count))

    source = flows[0][0]
    table = rbc_table(o, source, total_hops)
    others = np.ones(n, dtype=bool)
    others[source] = False
    dvals = table.delta[others]
    rbc_summary = {
        "source": source,
        "hops": total_hops,
        "delta_min": float(dvals.min()),
        "delta_max": float(dvals.max()),
        "delta_mean": float(dvals.mean()),
        "delta_cv": float(dvals.std() / dvals.mean()) if dvals.mean() > 0 else None,
    }
    if args.rbc_csv:
        with open(args.rbc_csv, "w") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["vertex", "delta"])
            for v in range(n):
                writer.writerow([v, repr(float(table.delta[v]))])
    if args.curve_csv and total_hops < n:
        with open(args.curve_csv, "w") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["oblivious_count", "monitored_probability"])
            for c in range(n + 1):
                writer.writerow([c, repr(prob_route_monitored(n, c, segments, l))])

    doc = {
        "kind": "analyze",
        "n": n,
        "monitors": m_count,
        "oblivious": C,
        "beta": beta,
        "segment_hops": l,
        "segments": segments,
        "total_hops": total_hops,
        "monitored_prob_analytic": analytic,
        "monte_carlo": _trace_summary(trace),
        "confinement_bound": confinement_bound(beta, total_hops) if total_hops >= 1 else None,
        "chernoff": chernoff,
        "max_unmonitored": _jsonable(capacity),
        "monitor_count_estimate": monitor_count_estimate(n, l),
        "anonymity": anonymity,
        "path_probability": path_p,
        "hidden_state": _jsonable(hidden),
        "attack_cost": _jsonable(attack),
        "rbc": rbc_summary,
    }
    _emit(doc, args)
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.inputs:
        raise UsageError("--inputs requires at least one JSON report")
    sections = {}
    for path in args.inputs:
        with open(path) as fh:
            content = json.load(fh)
        key = content.get("kind", "section")
        name = key
        i = 1
        while name in sections:
            i += 1
            name = f"{key}_{i}"
        sections[name] = content
    doc = {"kind": "combined_report", "sections": sections}
    _emit(doc, args)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expanderlay",
        description="Build, verify and analyze tree-union expander overlays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--graph", metavar="PATH", help="base graph edge list")
    common.add_argument("--out", metavar="PATH", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument(
        "--no-timestamp", action="store_true", help="omit timestamps for stable bytes"
    )
    common.add_argument("--verbose", action="store_true")

    route_opts = argparse.ArgumentParser(add_help=False)
    route_opts.add_argument("--overlay", metavar="PATH", help="overlay file")
    route_opts.add_argument("--r", type=int, default=1, help="intermediate destinations")
    route_opts.add_argument("--mode", choices=("incremental", "loose"), default="incremental")
    route_opts.add_argument(
        "--revisit", choices=("free", "non-revisiting"), default="free"
    )
    route_opts.add_argument("--p-extend", type=float, default=0.25)
    route_opts.add_argument("--log-base", type=float, default=None)

    sim_opts = argparse.ArgumentParser(add_help=False)
    sim_opts.add_argument("--flows", metavar="PATH", help="flow file of 's t' lines")
    sim_opts.add_argument("--source", type=int)
    sim_opts.add_argument("--dest", type=int)
    sim_opts.add_argument(
        "--monitors", metavar="WHICH", help="'all', 'none', or a vertex file"
    )
    sim_opts.add_argument("--random-monitors", type=int, metavar="M")
    sim_opts.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("build", parents=[common], help="construct an overlay")
    p.add_argument("--k", type=int, help="number of trees to union")
    p.add_argument("--distributed", action="store_true", help="doubling construction")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--weight-mode", choices=("plain", "resistance-scaled"), default="plain"
    )
    p.add_argument("--cap-factor", type=float, default=10.0)
    p.add_argument("--verification", choices=("mixing", "parallel"), default="mixing")
    p.add_argument("--log", metavar="PATH", help="build log JSON (default stdout)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", parents=[common], help="run overlay checks")
    p.add_argument("--overlay", metavar="PATH", required=True)
    p.add_argument("--mixing", action="store_true")
    p.add_argument("--parallel-cover", action="store_true")
    p.add_argument("--spectral", action="store_true")
    p.add_argument("--cuts", action="store_true")
    p.add_argument("--correlation", action="store_true")
    p.add_argument("--cap-factor", type=float, default=10.0)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--accumulate-neighbors", action="store_true")
    p.add_argument("--walk-count", type=int, default=None)
    p.add_argument("--walk-length", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-n", type=int, default=20)
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("route", parents=[common, route_opts], help="plan one route")
    p.add_argument("--source", type=int)
    p.add_argument("--dest", type=int)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser(
        "simulate", parents=[common, route_opts, sim_opts], help="run traffic trials"
    )
    p.add_argument("--trace", metavar="PATH", help="JSONL trial records")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "analyze",
        parents=[common, route_opts, sim_opts],
        help="full metric report for a monitoring scenario",
    )
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--messages", type=int, default=1)
    p.add_argument("--n-mix", type=int, default=None)
    p.add_argument("--rbc-csv", metavar="PATH")
    p.add_argument("--curve-csv", metavar="PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[common], help="combine JSON reports")
    p.add_argument("--inputs", nargs="+", metavar="PATH")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
