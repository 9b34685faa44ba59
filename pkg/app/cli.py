"""
Command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 usage or parse error, 3 capability or numerical diagnostic.
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from app.utils.asymptotics import asymptotic_law
from app.utils.constant_c import (
    A1Convention,
    SConvention,
    constant_direct,
    constant_extracted,
    equal_drift_D_closed,
    printed_constant_comparison,
)
from app.utils.drift_partition import DriftVector, StartVector, stable_partition
from app.utils.errors import InvalidInputError, WeylExitError
from app.utils.mc_collision import SimConfig, timed_run, write_manifest
from app.utils.numerics import QuadratureSpec, Scheme
from app.utils.parsing import format_number, parse_grid
from app.utils.schemas import SCHEMAS, schema_for, write_schemas
from app.utils.settings import THREADS_ENV, configure_logging, get_config
from app.utils.tail_methods import tail_by_method, tail_grid
from app.utils.verification import SUITES, run_suite, write_reports

logger = logging.getLogger()

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAPABILITY = 0, 1, 2, 3
TAIL_METHODS = ["km", "exact", "prop", "proposition", "closed2", "mc", "asymptotic"]


def rounded(value: Any) -> Any:
    """Round every float in a JSON-like value to 12 significant digits."""
    if isinstance(value, float):
        return float(format_number(value))
    if isinstance(value, dict):
        return {k: rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [rounded(v) for v in value]
    return value


def to_csv(rows: List[Dict[str, Any]]) -> str:
    """CSV text of flat rows; list cells are joined by spaces and nested objects are JSON-encoded."""
    columns = list(dict.fromkeys(key for row in rows for key in row))
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        cells = {}
        for key, value in row.items():
            if isinstance(value, (list, tuple)):
                cells[key] = " ".join(format_number(v) if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, dict):
                cells[key] = json.dumps(value, sort_keys=True)
            elif isinstance(value, float):
                cells[key] = format_number(value)
            else:
                cells[key] = value
        writer.writerow(cells)
    return buffer.getvalue()


def emit(payload: Any, fmt: str, stream=None):
    """Print a payload as JSON or CSV, newline-terminated."""
    stream = stream or sys.stdout
    if fmt == "csv":
        rows = payload if isinstance(payload, list) else [payload]
        stream.write(to_csv(rows))
    else:
        stream.write(json.dumps(rounded(payload), sort_keys=False) + "\n")


def quadrature_spec(args) -> QuadratureSpec:
    """Quadrature settings from the configuration and the --quad-* options."""
    return QuadratureSpec.from_config(
        truncation=args.quad_truncation, points_per_dim=args.quad_points, scheme=args.quad_scheme
    )


def sim_config(args) -> SimConfig:
    """Simulation configuration from the configuration and the --mc-* options."""
    return SimConfig.from_config(
        dt=args.mc_dt,
        replicas=args.mc_replicas,
        seed=args.seed,
        bridge_correction=False if args.mc_no_bridge else None,
    )


def cmd_partition(args):
    """Stable partition and strong representation."""
    return stable_partition(DriftVector.parse(args.drifts)).to_json()


def cmd_law(args):
    """gamma, alpha and the h descriptor."""
    return asymptotic_law(DriftVector.parse(args.drifts)).to_json()


def cmd_tail(args):
    """One estimate, or one row per time of --t-grid."""
    x, a = StartVector.parse(args.x), DriftVector.parse(args.drifts)
    spec, sim = quadrature_spec(args), sim_config(args)
    if args.t_grid:
        if args.method == "asymptotic":
            raise InvalidInputError("the asymptotic method takes a single --t")
        return [e.to_json() for e in tail_grid(x, a, parse_grid(args.t_grid), args.method, spec, sim)]
    if args.t is None:
        raise InvalidInputError("either --t or --t-grid is required")
    return tail_by_method(x, a, args.t, args.method, spec, sim, args.constant).to_json()


def cmd_constant(args):
    """Direct constant (with the printed comparison for 2,0,3) or extraction from tail values."""
    a = DriftVector.parse(args.drifts)
    spec = quadrature_spec(args)
    if args.method == "direct":
        report = constant_direct(a, spec=spec, a1_convention=args.a1_convention, s_convention=args.s_convention)
        payload = report.to_json()
        if all(float(u) == float(v) for u, v in zip(a.values, a.values[1:])):
            payload["d_closed"] = equal_drift_D_closed(a.n)
        if [float(v) for v in a.values] == [2.0, 0.0, 3.0]:
            payload["printed_comparison"] = printed_constant_comparison(report)
        return payload
    if not (args.x and args.t_grid):
        raise InvalidInputError("--method extract needs --x and --t-grid")
    x = StartVector.parse(args.x)
    report = constant_extracted(x, a, t_grid=parse_grid(args.t_grid), oracle=args.oracle, spec=spec)
    payload = report.to_json()
    if [float(v) for v in a.values] == [2.0, 0.0, 3.0]:
        payload["printed_comparison"] = printed_constant_comparison(report)
    return payload


def cmd_verify(args):
    """Run acceptance suites; the exit code reports failures."""
    results = run_suite(args.suite)
    if args.report_dir:
        write_reports(results, args.report_dir)
    return [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]


def cmd_schema(args):
    """Print one JSON schema, or write all of them to a directory."""
    if args.write:
        write_schemas(args.write)
        return {"written": sorted(SCHEMAS), "directory": args.write}
    return schema_for(args.name)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json", help="output format")
    common.add_argument("--manifest", help="write a run manifest to this path")
    common.add_argument("--threads", type=int, help="worker count (default from {} or the config)".format(THREADS_ENV))
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--log-level", help="logging level")

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--quad-truncation", type=float, help="half-width L of the integration box")
    numeric.add_argument("--quad-points", type=int, help="nodes per dimension (>= 8)")
    numeric.add_argument("--quad-scheme", choices=[s.value for s in Scheme], help="quadrature rule")
    numeric.add_argument(
        "--mc-dt", type=float, help="Monte Carlo time step (default min(1e-3, t/1e4); about 0.05 for t in the hundreds)"
    )
    numeric.add_argument("--mc-replicas", type=int, help="Monte Carlo replicas")
    numeric.add_argument("--mc-no-bridge", action="store_true", help="disable the bridge crossing correction")

    parser = argparse.ArgumentParser(
        prog="weyl-exit", description="Collision-time asymptotics of drifted Brownian motions."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", parents=[common], help="stable partition of a drift vector")
    p.add_argument("--drifts", required=True)
    p.set_defaults(handler=cmd_partition)

    p = sub.add_parser("law", parents=[common], help="gamma, alpha and h")
    p.add_argument("--drifts", required=True)
    p.set_defaults(handler=cmd_law)

    p = sub.add_parser("tail", parents=[common, numeric], help="survival probability P_x(tau > t)")
    p.add_argument("--x", required=True)
    p.add_argument("--drifts", required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--t-grid")
    p.add_argument("--method", choices=TAIL_METHODS, default="exact")
    p.add_argument("--constant", type=float, help="C for the asymptotic method")
    p.set_defaults(handler=cmd_tail)

    p = sub.add_parser("constant", parents=[common, numeric], help="the constant C")
    p.add_argument("--drifts", required=True)
    p.add_argument("--method", choices=["direct", "extract"], default="direct")
    p.add_argument("--x")
    p.add_argument("--t-grid")
    p.add_argument("--oracle", choices=TAIL_METHODS, default="exact")
    p.add_argument("--a1-convention", choices=[c.value for c in A1Convention], default=A1Convention.MEAN.value)
    p.add_argument("--s-convention", choices=[c.value for c in SConvention], default=SConvention.GRAM.value)
    p.set_defaults(handler=cmd_constant)

    p = sub.add_parser("verify", parents=[common], help="acceptance suites")
    p.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    p.add_argument("--report-dir", help="directory for CSV/JSON reports")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("schema", parents=[common], help="JSON schemas of the outputs")
    p.add_argument("--name", choices=sorted(SCHEMAS), default="partition")
    p.add_argument("--write", help="write all schemas to this directory")
    p.set_defaults(handler=cmd_schema)
    return parser


def main(argv: Optional[List[str]] = None, stream=None) -> int:
    """
    Run one command.

    :param argv: Arguments without the program name (defaults to sys.argv).
    :param stream: Output stream (defaults to stdout).
    :return: Exit code.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    configure_logging(args.log_level)
    if args.threads:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        config = {"args": _plain(vars(args)), "config": get_config()}
        payload, manifest = timed_run(argv, config, lambda: args.handler(args))
    except InvalidInputError as e:
        sys.stderr.write("error: {}\n".format(e))
        return EXIT_USAGE
    except WeylExitError as e:
        sys.stderr.write("{}: {}\n".format(type(e).__name__, e))
        return EXIT_CAPABILITY
    emit(payload, args.format, stream)
    if args.manifest:
        write_manifest(manifest, args.manifest)
    if args.command == "verify" and not all(r["passed"] for r in payload):
        failing = [r["name"] for r in payload if not r["passed"]]
        sys.stderr.write("verification failed: {}\n".format(", ".join(failing)))
        return EXIT_VERIFY
    return EXIT_OK


def _plain(values: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in values.items() if not callable(v)}


if __name__ == "__main__":
    sys.exit(main())
