"""Command-line front end.

Subcommands: ``analyze``, ``curve``, ``simulate``, ``paper-example``, ``fpk1d``.
Exit status is 0 on success, 1 for invalid input or a failed hard gate and 2
when a simulation diverges.
"""
import argparse
import dataclasses
import io
import json
import math
import sys

from . import __version__, cgf_bounds, lingauss, paper_example, report, scalar_fpk
from .config import DEFAULT_TOLERANCES, load
from .errors import DriftBoundError, NotEllipticError, ParseError, SimConfigError, UnstableError

EXIT_OK, EXIT_INVALID, EXIT_UNSTABLE = 0, 1, 2

CURVE_HEADER = ("theta", "K", "eps", "eps_asymptotic")
FPK_HEADER = ("x", "p_star", "p", "r", "psi")


def fmt(v):
    """Six significant digits for human-readable output."""
    if isinstance(v, bool) or v is None:
        return str(v).lower() if isinstance(v, bool) else "null"
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(fmt(x) for x in v) + "]"
    return str(v)


def text_lines(doc, prefix=""):
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from text_lines(v, key + ".")
        else:
            yield f"{key}: {fmt(v)}"


def render(doc, as_json):
    doc = report.jsonable(doc)
    if as_json:
        # repr of a float is the shortest string that round-trips exactly
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    return "\n".join(text_lines(doc)) + "\n"


def emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_csv(header, rows, out=None):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else repr(float(v)) for v in row) + "\n")
    emit(buf.getvalue(), out)


def _with_tol(cfg, tol):
    if tol is not None:
        cfg.tolerances = {k: tol for k in DEFAULT_TOLERANCES}
    return cfg


def _analyze(cfg):
    if cfg.kind == "linear":
        return report.linear_report(cfg)
    try:
        return report.scalar_report(cfg)
    except DriftBoundError as exc:
        return report.invalid_scalar_report(cfg, exc)


def _status(doc):
    return EXIT_OK if doc.get("status") == "ok" else EXIT_INVALID


def cmd_analyze(args):
    cfg = _with_tol(load(args.config), args.tol)
    doc = _analyze(cfg)
    doc["provenance"]["seed"] = args.seed
    emit(render(doc, args.json), args.out)
    return _status(doc)


def curve_rows(sys_, points):
    """Rows of the small-gain curve plus the operating point, sorted by theta.

    Returns ``(rows, marker)``; ``marker`` is ``None`` when ``K`` is not
    defined or lies beyond the curve.
    """
    cgf = lingauss.gaussian_cgf(sys_)
    if cgf.degenerate:
        return None, None
    grid = cgf_bounds.default_theta_grid(cgf, points)
    rows = [(p.theta, p.K_coord, p.eps_coord) for p in cgf_bounds.small_gain_curve(cgf, grid)]
    marker = None
    try:
        _, _, K = lingauss.ellipticity_constants(sys_)
    except NotEllipticError:
        K = None
    if K is not None and 2.0 * K < cgf.theta_star:
        b = cgf_bounds.kl_upper_bound(cgf, K)
        marker = (b.theta_K, K, b.kl_bound)
        rows.append(marker)
        rows.sort(key=lambda r: r[0])
    out = []
    for t, k, e in rows:
        asym = 0.0 if k == 0.0 else cgf_bounds.asymptotic_bound(cgf, k)
        out.append((t, k, e, asym))
    return out, marker


def cmd_curve(args):
    cfg = load(args.config)
    if cfg.kind != "linear":
        raise ParseError("kind: curve needs a linear configuration")
    gates = report.linear_gates(cfg.A, cfg.B, cfg.N)
    if any(gates[g] == report.FAIL for g in report.HARD_GATES):
        sys.stderr.write("invalid system: " + ", ".join(g for g in report.HARD_GATES if gates[g] == report.FAIL) + "\n")
        return EXIT_INVALID
    sys_ = lingauss.build_system(cfg.A, cfg.B, cfg.N)
    rows, marker = curve_rows(sys_, args.points)
    if rows is None:
        write_csv(CURVE_HEADER + ("flag",), [(0.0, 0.0, 0.0, 0.0, "degenerate")], args.out)
        return EXIT_OK
    write_csv(CURVE_HEADER, rows, args.out)
    if args.out:
        if marker is None:
            sys.stdout.write("operating point: unavailable (K >= theta_star/2 or not elliptic)\n")
        else:
            sys.stdout.write(f"operating point: theta={fmt(marker[0])} K={fmt(marker[1])} eps={fmt(marker[2])}\n")
    return EXIT_OK


def cmd_simulate(args):
    cfg = _with_tol(load(args.config), args.tol)
    doc = _analyze(cfg)
    sim_cfg = cfg.sim_config(args.seed, args.trajectories, args.steps)
    sim_cfg = dataclasses.replace(sim_cfg, n_batches=min(sim_cfg.n_batches, sim_cfg.n_trajectories))
    doc["command"] = "simulate"
    doc["provenance"]["seed"] = sim_cfg.seed
    code = _status(doc)
    if code == EXIT_OK:
        try:
            doc["simulation"] = report.simulation_section(cfg, sim_cfg)
        except UnstableError as exc:
            doc["status"] = "unstable"
            doc["simulation"] = {"error": str(exc)}
            code = EXIT_UNSTABLE
        except SimConfigError as exc:
            doc["status"] = "invalid"
            doc["simulation"] = {"error": str(exc)}
            code = EXIT_INVALID
    emit(render(doc, args.json), args.out)
    return code


def cmd_paper_example(args):
    checks = paper_example.reproduce(args.tol)
    if args.json:
        doc = {
            "command": "paper-example",
            "checks": {
                c.name: {
                    "value": c.value,
                    "expected": c.expected,
                    "tol": c.tol,
                    "deviation": c.deviation,
                    "passed": c.passed,
                }
                for c in checks
            },
            "all_passed": all(c.passed for c in checks),
            "provenance": {"tool": "driftbound", "version": __version__, "seed": None, "tol": args.tol},
        }
        emit(render(doc, True), args.out)
    else:
        lines = [c.line() for c in checks]
        lines.append(f"{sum(c.passed for c in checks)}/{len(checks)} quantities within tolerance")
        emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_fpk1d(args):
    cfg = _with_tol(load(args.config), args.tol)
    if cfg.kind != "scalar":
        raise ParseError("kind: fpk1d needs a scalar configuration")
    try:
        tables = report.scalar_tables(cfg)
    except DriftBoundError as exc:
        doc = report.invalid_scalar_report(cfg, exc)
        doc["command"] = "fpk1d"
        sys.stdout.write(render(doc, args.json))
        return EXIT_INVALID
    doc = report.scalar_report(cfg, tables)
    doc["command"] = "fpk1d"
    model, grid, p_star, p, _ = tables
    r, psi = scalar_fpk.log_ratio_and_psi(p, p_star, model.g_coeffs)
    if args.out:
        rows = zip(p.x, p_star.p, p.p, r, psi)
        write_csv(FPK_HEADER, rows, args.out)
        doc["csv"] = args.out
    sys.stdout.write(render(doc, args.json))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="driftbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"driftbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="JSON system configuration")
        p.add_argument("--out", help="write the main output to this path")
        p.add_argument("--json", action="store_true", help="machine-readable JSON report")
        p.add_argument("--tol", type=float, help="override every tolerance with this value")
        p.add_argument("--seed", type=int, help="random seed")
        return p

    p = common(sub.add_parser("analyze", help="exact analysis and entropy bound"))
    p.set_defaults(func=cmd_analyze)
    p = common(sub.add_parser("curve", help="small-gain curve as CSV"))
    p.add_argument("--points", type=int, default=256, help="number of theta grid points")
    p.set_defaults(func=cmd_curve)
    p = common(sub.add_parser("simulate", help="analysis plus Monte Carlo cross-check"))
    p.add_argument("--trajectories", type=int, help="number of independent trajectories")
    p.add_argument("--steps", type=int, help="total Euler steps per trajectory, burn-in included")
    p.set_defaults(func=cmd_simulate)
    p = common(sub.add_parser("paper-example", help="reproduce the 4x4 benchmark"), config=False)
    p.set_defaults(func=cmd_paper_example)
    p = common(sub.add_parser("fpk1d", help="1-D stationary densities and entropy chain"))
    p.set_defaults(func=cmd_fpk1d)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "points", 2) < 2:
        sys.stderr.write("error: --points must be at least 2\n")
        return EXIT_INVALID
    if args.tol is not None and not (math.isfinite(args.tol) and args.tol > 0.0):
        sys.stderr.write("error: --tol must be positive\n")
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except UnstableError as exc:
        sys.stderr.write(f"unstable: {exc}\n")
        return EXIT_UNSTABLE
    except DriftBoundError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
