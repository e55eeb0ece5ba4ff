"""Command-line front end, JSON file formats, and the scaling benchmark.

Three document kinds travel through the CLI, all UTF-8 JSON:

* network documents::

    {"name": ..., "variables": [{"name": ..., "states": [...]}, ...],
     "cpts": [{"variable": ..., "parents": [...], "table": [[...], ...]}, ...]}

  CPT table rows are row-major over the parents as listed (last parent
  varies fastest); columns follow the child's state list.

* query documents: ``{"mode": "map"|"strong"|"weak"|"maximum"|"threshold"|
  "quantify"|"partition", "hypothesis": [...], "evidence": {var: state},
  "focus": [...], "k": int, "h_star": {var: state}, "s": number or exact
  fraction string such as "3/16", "candidates": [...]}`` with the
  mode-specific fields required.

* report documents: the query echoed back plus the result fields, the tool
  version, and elapsed milliseconds.  Keys keep a fixed order and floats
  are emitted with 17 significant digits, so two runs of the same query
  produce byte-identical reports except for the elapsed field.

Exit codes: 0 success, 1 usage or parse error, 2 invalid network,
3 infeasible query (zero-probability conditioning), 4 capacity guard
exceeded.  Diagnostics go to stderr; reports go to the output path (or
stdout when no path applies).
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .compiler import build_amajsat_instance, compile_network, parse_formula
from .errors import (
    CapacityError,
    DocumentError,
    InfeasibleQueryError,
    InvalidQueryError,
    MapIndepError,
    NetworkValidationError,
)
from .independence import (
    IndependenceReport,
    maximum_map_independence,
    relevance_partition,
    strong_map_independence,
    threshold_map_independence,
    weak_map_independence,
)
from .inference import DEFAULT_GUARD, MapResult, map_solve
from .model import Cpt, Network, QueryPartition, Variable, validate_network

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_NETWORK = 2
EXIT_INFEASIBLE = 3
EXIT_CAPACITY = 4

QUERY_MODES = ("map", "strong", "weak", "maximum", "threshold", "quantify", "partition")


# ---------------------------------------------------------------------------
# JSON emission
#
# json.dump renders floats with the shortest round-tripping repr; reports
# pin 17 significant digits instead, so the writer below is used for every
# document this tool produces.


def _emit(value: Any, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = ",\n".join(f"{inner}{json.dumps(str(k))}: {_emit(v, indent + 1)}" for k, v in value.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = ",\n".join(f"{inner}{_emit(v, indent + 1)}" for v in value)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, Fraction):
        return json.dumps(f"{value.numerator}/{value.denominator}")
    if value is None:
        return "null"
    return json.dumps(value)


def emit_json(value: Any) -> str:
    return _emit(value) + "\n"


# ---------------------------------------------------------------------------
# network documents


def network_to_document(net: Network) -> dict:
    return {
        "name": net.name,
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "cpts": [
            {"variable": c.child, "parents": list(c.parents), "table": [list(r) for r in c.rows]}
            for c in net.cpts
        ],
    }


def network_from_document(doc: Any) -> Network:
    if not isinstance(doc, Mapping):
        raise DocumentError("network document must be a JSON object")
    try:
        name = doc["name"]
        variables = tuple(
            Variable(str(v["name"]), tuple(str(s) for s in v["states"]))
            for v in doc["variables"]
        )
        cpts = tuple(
            Cpt(
                str(c["variable"]),
                tuple(str(p) for p in c["parents"]),
                tuple(tuple(float(x) for x in row) for row in c["table"]),
            )
            for c in doc["cpts"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed network document: {exc}") from exc
    return Network(name=str(name), variables=variables, cpts=cpts)


def load_network(path: str | Path, validate: bool = True) -> Network:
    """Read and (by default) re-validate a network document."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    net = network_from_document(doc)
    if validate:
        violations = validate_network(net)
        if violations:
            raise NetworkValidationError(violations)
    return net


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(emit_json(network_to_document(net)), encoding="utf-8")


# ---------------------------------------------------------------------------
# query documents


def parse_threshold(value: Any) -> float | Fraction:
    """Numbers pass through; strings like "3/16" parse as exact fractions."""
    if isinstance(value, bool):
        raise DocumentError("threshold s must be a number or fraction string")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise DocumentError(f"bad fraction string {value!r}") from exc
    raise DocumentError("threshold s must be a number or fraction string")


def load_query(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(doc, Mapping):
        raise DocumentError("query document must be a JSON object")
    mode = doc.get("mode")
    if mode not in QUERY_MODES:
        raise DocumentError(f"mode must be one of {QUERY_MODES}, got {mode!r}")
    required = {
        "map": ("hypothesis",),
        "strong": ("hypothesis", "focus"),
        "weak": ("hypothesis", "focus"),
        "quantify": ("hypothesis", "focus"),
        "maximum": ("hypothesis", "focus", "k"),
        "threshold": ("hypothesis", "focus", "h_star", "s"),
        "partition": ("hypothesis", "candidates"),
    }[mode]
    missing = [f for f in required if f not in doc]
    if missing:
        raise DocumentError(f"mode {mode!r} requires fields {missing}")
    return dict(doc)


def _str_list(value: Any, what: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise DocumentError(f"{what} must be a list of strings")
    return list(value)


def _assignment(value: Any, what: str) -> dict[str, str]:
    if value is None:
        return {}
    if not isinstance(value, Mapping) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in value.items()
    ):
        raise DocumentError(f"{what} must map variable names to state names")
    return dict(value)


# ---------------------------------------------------------------------------
# report documents


def _assignment_doc(a: Mapping[str, str] | None) -> Any:
    return None if a is None else dict(a)


def _independence_result(report: IndependenceReport, table: bool) -> dict:
    out: dict[str, Any] = {
        "mode": report.mode,
        "verdict": report.verdict,
        "witness": _assignment_doc(report.witness),
        "counterexample": _assignment_doc(report.counterexample),
    }
    if report.mode == "maximum":
        out["subset"] = list(report.subset) if report.subset is not None else None
    if report.mode == "threshold":
        out["min_joint"] = report.min_joint
    out["ties_encountered"] = report.ties_encountered
    out["warning"] = report.warning
    out["skipped"] = [dict(a) for a in report.skipped]
    if report.metrics is not None:
        out["metrics"] = {
            "mass": report.metrics.mass,
            "proportion": report.metrics.proportion,
            "mean_hamming": report.metrics.mean_hamming,
            "hamming_weighting": "uniform",
        }
    if table and report.per_assignment is not None:
        out["per_assignment"] = [
            {
                "assignment": dict(row.assignment),
                "map": _assignment_doc(row.map_assignment),
                "h_star_joint": row.h_star_joint,
            }
            for row in report.per_assignment
        ]
    return out


def _map_result(result: MapResult) -> dict:
    return {
        "mode": "map",
        "assignment": dict(result.assignment),
        "joint_probability": result.joint_probability,
        "posterior": result.posterior,
        "tie": result.tie,
        "runner_up_gap": result.runner_up_gap,
    }


def make_report(network: Network, query: Mapping[str, Any], result: dict, elapsed_s: float) -> dict:
    return {
        "version": __version__,
        "network": network.name,
        "query": dict(query),
        "result": result,
        "elapsed_ms": elapsed_s * 1000.0,
    }


def _write_report(doc: dict, path: str | None) -> None:
    text = emit_json(doc)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# benchmark


def bench(
    net: Network,
    hypothesis: list[str],
    evidence: Mapping[str, str],
    r_max: int,
    trials: int = 3,
    *,
    guard: int = DEFAULT_GUARD,
) -> dict:
    """Median strong-sweep wall time against growing focus sets.

    The focus for size k is the first k intermediate variables in
    declaration order; short-circuiting is disabled so every run pays for
    the full sweep of Omega(R).  Rows past the enumeration guard are
    dropped and noted.
    """
    taken = set(hypothesis) | set(evidence)
    intermediates = [v for v in net.names if v not in taken]
    if not 1 <= r_max <= len(intermediates):
        raise InvalidQueryError(f"rmax must be between 1 and {len(intermediates)}, got {r_max}")
    rows = []
    truncated = None
    for k in range(1, r_max + 1):
        focus = tuple(intermediates[:k])
        partition = QueryPartition(evidence=dict(evidence), hypothesis=tuple(hypothesis), focus=focus)
        try:
            times = []
            for _ in range(max(1, trials)):
                t0 = time.perf_counter()
                strong_map_independence(net, partition, guard=guard, short_circuit=False)
                times.append(time.perf_counter() - t0)
        except CapacityError as exc:
            truncated = f"stopped at |R|={k}: {exc}"
            break
        rows.append({
            "r_size": k,
            "omega": math.prod(net.cardinality(v) for v in focus),
            "median_seconds": statistics.median(times),
        })
    return {"rows": rows, "trials": max(1, trials), "truncated": truncated}


# ---------------------------------------------------------------------------
# subcommands


def _parse_evidence(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    out: dict[str, str] = {}
    for piece in text.split(","):
        if "=" not in piece:
            raise InvalidQueryError(f"evidence must be VAR=STATE pairs, got {piece!r}")
        var, state = piece.split("=", 1)
        out[var.strip()] = state.strip()
    return out


def _parse_names(text: str | None) -> list[str]:
    if not text:
        return []
    return [piece.strip() for piece in text.split(",") if piece.strip()]


def _cmd_validate(args) -> int:
    net = load_network(args.network, validate=False)
    violations = validate_network(net)
    if violations:
        for v in violations:
            print(f"{v.code}: {v.where}: {v.message}", file=sys.stderr)
        return EXIT_INVALID_NETWORK
    print(f"{net.name}: valid ({len(net.variables)} variables)")
    return EXIT_OK


def _cmd_map(args) -> int:
    net = load_network(args.network)
    hypothesis = _parse_names(args.hypothesis)
    evidence = _parse_evidence(args.evidence)
    t0 = time.perf_counter()
    result = map_solve(net, hypothesis, evidence, method=args.method)
    query = {"mode": "map", "hypothesis": hypothesis, "evidence": evidence}
    _write_report(make_report(net, query, _map_result(result), time.perf_counter() - t0), None)
    return EXIT_OK


def _cmd_query(args) -> int:
    net = load_network(args.network)
    query = load_query(args.query)
    mode = query["mode"]
    common = dict(workers=max(1, args.parallel))
    table_limit = args.table_limit

    t0 = time.perf_counter()
    if mode == "map":
        result_doc = _map_result(
            map_solve(net, _str_list(query["hypothesis"], "hypothesis"), _assignment(query.get("evidence"), "evidence"))
        )
    elif mode in ("strong", "weak", "quantify", "threshold"):
        partition = QueryPartition(
            evidence=_assignment(query.get("evidence"), "evidence"),
            hypothesis=tuple(_str_list(query["hypothesis"], "hypothesis")),
            focus=tuple(_str_list(query["focus"], "focus")),
        )
        if mode == "strong":
            report = strong_map_independence(
                net, partition, table_limit=table_limit, strict_zeros=args.strict_zeros, **common
            )
        elif mode == "weak":
            report = weak_map_independence(
                net, partition, table_limit=table_limit, strict_zeros=args.strict_zeros, **common
            )
        elif mode == "quantify":
            report = strong_map_independence(
                net, partition, table_limit=table_limit, strict_zeros=args.strict_zeros,
                short_circuit=False, with_metrics=True, **common
            )
            report = _relabel(report, "quantify")
        else:
            report = threshold_map_independence(
                net,
                _assignment(query["h_star"], "h_star"),
                partition,
                parse_threshold(query["s"]),
                table_limit=table_limit,
                **common,
            )
        result_doc = _independence_result(report, table=table_limit is not None)
    elif mode == "maximum":
        partition = QueryPartition(
            evidence=_assignment(query.get("evidence"), "evidence"),
            hypothesis=tuple(_str_list(query["hypothesis"], "hypothesis")),
            focus=tuple(_str_list(query["focus"], "focus")),
        )
        k = query["k"]
        if not isinstance(k, int) or isinstance(k, bool):
            raise DocumentError("k must be an integer")
        report = maximum_map_independence(net, partition, k, strict_zeros=args.strict_zeros, **common)
        result_doc = _independence_result(report, table=False)
    elif mode == "partition":
        parts = relevance_partition(
            net,
            _assignment(query.get("evidence"), "evidence"),
            _str_list(query["hypothesis"], "hypothesis"),
            _str_list(query["candidates"], "candidates"),
            strict_zeros=args.strict_zeros,
        )
        result_doc = {
            "mode": "partition",
            "relevant": list(parts.relevant),
            "irrelevant": list(parts.irrelevant),
            "justification": {
                var: {
                    "map_independent": finding.map_independent,
                    "counterexample": _assignment_doc(finding.counterexample),
                }
                for var, finding in parts.justification.items()
            },
        }
    else:  # pragma: no cover - modes are validated by load_query
        raise DocumentError(f"unhandled mode {mode!r}")

    _write_report(make_report(net, query, result_doc, time.perf_counter() - t0), args.output)
    return EXIT_OK


def _relabel(report: IndependenceReport, mode: str) -> IndependenceReport:
    return replace(report, mode=mode)


def _cmd_compile(args) -> int:
    ast = parse_formula(args.formula)
    a_set = _parse_names(args.aset)
    if a_set:
        instance = build_amajsat_instance(ast, a_set)
    else:
        instance = compile_network(ast)
    if args.emit_query and instance.query is None:
        raise InvalidQueryError("--emit-query requires --aset")
    doc = network_to_document(instance.network)
    if args.out:
        Path(args.out).write_text(emit_json(doc), encoding="utf-8")
    else:
        sys.stdout.write(emit_json(doc))
    if args.emit_query:
        q = instance.query
        query_doc = {
            "mode": "threshold",
            "hypothesis": [instance.phi_node],
            "evidence": dict(q.evidence),
            "focus": list(q.focus),
            "h_star": dict(q.h_star),
            "s": q.s,
        }
        Path(args.emit_query).write_text(emit_json(query_doc), encoding="utf-8")
    return EXIT_OK


def _cmd_bench(args) -> int:
    net = load_network(args.network)
    hypothesis = _parse_names(args.hypothesis)
    evidence = _parse_evidence(args.evidence)
    t0 = time.perf_counter()
    table = bench(net, hypothesis, evidence, args.rmax, args.trials)
    query = {
        "mode": "bench",
        "hypothesis": hypothesis,
        "evidence": evidence,
        "rmax": args.rmax,
        "trials": table["trials"],
    }
    doc = make_report(net, query, table, time.perf_counter() - t0)
    _write_report(doc, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapindep",
        description="Exact inference and MAP-independence analysis for discrete Bayesian networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network document against every invariant")
    p.add_argument("--network", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("map", help="most probable explanation for a hypothesis set")
    p.add_argument("--network", required=True)
    p.add_argument("--hypothesis", required=True, help="comma-separated variable names")
    p.add_argument("--evidence", default="", help="comma-separated VAR=STATE pairs")
    p.add_argument("--method", choices=("ve", "brute"), default="ve")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("query", help="run a query document and write a report")
    p.add_argument("--network", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--table-limit", type=int, default=None, metavar="M")
    p.add_argument("--strict-zeros", action="store_true")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("compile", help="compile a propositional formula into a network")
    p.add_argument("--formula", required=True)
    p.add_argument("--aset", default="", help="comma-separated formula variables for the threshold query")
    p.add_argument("--out", default=None)
    p.add_argument("--emit-query", default=None, metavar="Q")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("bench", help="strong-sweep scaling against growing focus sets")
    p.add_argument("--network", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--evidence", default="")
    p.add_argument("--rmax", type=int, required=True)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_bench)
    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, dispatch, and translate errors into exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except NetworkValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_NETWORK
    except InfeasibleQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except MapIndepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
