"""
Command-line front end.

    nodal-bubbles verify --dim N | --range LO..HI [--json PATH]
    nodal-bubbles critical --dim N [--c-n VALUE]
    nodal-bubbles landscape --dim N --mesh K --out PATH
    nodal-bubbles profile --dim N --which 1|2 [--eps E] --grid SxR --out PATH
    nodal-bubbles pde --dim N --which 1|2 --eps-start A --eps-end B --steps K --grid SxR --out PATH

Exit codes: 0 success, 1 mathematical failure, 2 usage error, 3 I/O error.
"""

import argparse
import logging
import os
import sys
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import reduced_energy as re_
from .boundary_profile import (ProfileSpec, ansatz_field, big_m, boundary_touch_latitudes, classify_boundary,
                               little_m, nodal_contours, phi_field, profile_scale)
from .critical_finder import find_critical_rhos, find_rho0, locate_critical_points
from .errors import DomainError, ReductionError
from .fields import parse_grid, write_field_csv, write_json, write_sidecar
from .inequality_auditor import ReportFormat, audit_dimension, audit_range, emit_report
from .pde_validator import Branch, continue_in_epsilon, extract_diagnostics, ladder_records, resolving_grid
from .reduced_energy import ReducedConfig
from .settings import LOG_FORMAT, ToolkitSettings, load_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MATH = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    """Invalid command-line arguments."""


def _dimension(value: int) -> int:
    if value < 3:
        raise UsageError(f"--dim must be at least 3, got {value}")
    return value


def _dimension_range(text: str) -> Tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(".."))
    except ValueError:
        raise UsageError(f"--range must look like 3..20, got {text!r}")
    if not 3 <= lo <= hi:
        raise UsageError(f"--range needs 3 <= LO <= HI, got {text!r}")
    return lo, hi


def _grid(text: Optional[str], settings: ToolkitSettings) -> Tuple[int, int]:
    if text is None:
        return settings.grid
    try:
        n_s, n_r = parse_grid(text)
    except DomainError as e:
        raise UsageError(str(e))
    if n_s % 2 == 0 or n_s < 17 or n_r < 16:
        raise UsageError(f"--grid needs an odd S >= 17 and R >= 16, got {text!r}")
    return n_s, n_r


def _branch(which: int) -> Branch:
    return Branch.RHO1 if which == 1 else Branch.RHO2


def _stem(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root


def _arguments(args: argparse.Namespace) -> dict:
    return {key: value for key, value in sorted(vars(args).items()) if key != "handler"}


def _g6(value: float) -> str:
    return f"{value:.6g}"


# ---- commands ----

def cmd_verify(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    if args.dim is not None:
        report = audit_dimension(_dimension(args.dim), mesh=settings.audit_mesh, guard=settings.guard_offset)
    else:
        lo, hi = _dimension_range(args.range) if args.range else settings.dimension_range
        report = audit_range(lo, hi, mesh=settings.audit_mesh, guard=settings.guard_offset,
                             workers=args.workers or settings.workers)

    sys.stdout.write(emit_report(report, ReportFormat.TEXT).decode("utf-8"))
    if args.json:
        started = time.time()
        with open(args.json, "wb") as f:
            f.write(emit_report(report, ReportFormat.JSON))
        write_sidecar(args.json, _arguments(args), started)
        logger.info(f"Wrote verification report to {args.json}")
    for check in report.failed():
        logger.error(f"N={check.dimension}: check {check.name} failed (margin {check.margin}, {check.note})")
    return EXIT_OK if report.all_passed else EXIT_MATH


def cmd_critical(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    N = _dimension(args.dim)
    if args.c_n is not None and not args.c_n > 0:
        raise UsageError(f"--c-n must be positive, got {args.c_n}")
    cfg = ReducedConfig(dimension=N, c_n=args.c_n if args.c_n is not None else 1.0)
    summary = locate_critical_points(N, cfg, tol=settings.root_tol, guard=settings.guard_offset,
                                     scan_mesh=settings.scan_mesh)

    print(f"N = {N}, c_N = {_g6(cfg.c_n)}, rho_0 = {_g6(summary.rho0)}, chi sign changes = {summary.sign_changes}")
    print(f"{'which':<8} {'rho':>12} {'lambda':>12} {'mu':>12} {'morse':>5} {'degree':>6} {'margin':>12}  boundary")
    notes = []
    for record in summary.records:
        boundary = classify_boundary(record.rho, N)
        notes.extend(boundary.notes)
        print(f"{record.which.value:<8} {_g6(record.rho):>12} {_g6(record.lam):>12} {_g6(record.mu):>12} "
              f"{record.morse_index:>5} {record.degree:>+6d} {_g6(record.nondegeneracy_margin):>12}  {boundary.kind.value}")
    for note in notes:
        print(f"note: {note}")
    return EXIT_OK


def landscape_rows(N: int, mesh: int, guard: float, c_n: float = 1.0) -> List[Tuple[float, ...]]:
    rho0 = find_rho0(N)
    cfg = ReducedConfig(dimension=N, c_n=c_n)
    rows = []
    for rho in np.linspace(rho0 + guard, 1.0 - guard, mesh):
        rho = float(rho)
        rows.append((rho, re_.little_f(rho, cfg), re_.chi(rho, N), little_m(rho, N), big_m(rho, N),
                     re_.capital_lambda(rho, N)))
    return rows


def cmd_landscape(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    N = _dimension(args.dim)
    mesh = args.mesh or settings.audit_mesh
    if mesh < 2:
        raise UsageError(f"--mesh must be at least 2, got {mesh}")
    started = time.time()
    rows = landscape_rows(N, mesh, settings.guard_offset)
    lines = ["rho,f,chi,m,M,Lambda"] + [",".join(f"{value:.17g}" for value in row) for row in rows]
    folder = os.path.dirname(args.out)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    write_sidecar(args.out, _arguments(args), started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_profile(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    N = _dimension(args.dim)
    grid = _grid(args.grid, settings)
    started = time.time()
    rho = find_critical_rhos(N, tol=settings.root_tol, guard=settings.guard_offset)[_branch(args.which).index]
    spec = ProfileSpec.at(rho, N)
    boundary = classify_boundary(rho, N)

    field = phi_field(spec, grid)
    contours = nodal_contours(field)
    write_field_csv(field, args.out)
    write_sidecar(args.out, _arguments(args), started, {"rho": rho})
    contour_path = _stem(args.out) + ".contours.json"
    write_json(contours, contour_path)
    write_sidecar(contour_path, _arguments(args), started)

    print(f"N = {N}, rho_{args.which} = {_g6(rho)}: {boundary.kind.value} "
          f"(m = {_g6(boundary.m_value)}, M = {_g6(boundary.big_m_value)})")
    if boundary.zero_latitudes:
        print("zero latitudes: " + ", ".join(_g6(x) for x in boundary.zero_latitudes))
    h = max(field.spacing)
    touches = boundary_touch_latitudes(contours, 2 * h)
    print(f"nodal set: {len(contours)} polylines, boundary contacts at "
          + (", ".join(_g6(x) for x in touches) if touches else "none"))
    for note in boundary.notes:
        print(f"note: {note}")

    if args.eps is not None:
        cfg = ReducedConfig(dimension=N, c_n=args.c_n if args.c_n is not None else re_.bubble_energy_constant(N))
        ansatz = ansatz_field(spec, args.eps, cfg, grid)
        ansatz_path = _stem(args.out) + ".ansatz.csv"
        write_field_csv(ansatz, ansatz_path)
        write_sidecar(ansatz_path, _arguments(args), started, {"profile_scale": profile_scale(spec, args.eps, cfg)})
        print(f"ansatz at eps = {_g6(args.eps)} written to {ansatz_path}")
    return EXIT_OK


def cmd_pde(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    N = _dimension(args.dim)
    n_s, n_r = _grid(args.grid, settings)
    eps_start = args.eps_start if args.eps_start is not None else settings.eps_start
    eps_end = args.eps_end if args.eps_end is not None else settings.eps_end
    steps = args.steps if args.steps is not None else settings.eps_steps
    if not eps_start > eps_end > 0 or steps < 2:
        raise UsageError(f"need --eps-start > --eps-end > 0 and --steps >= 2, got {eps_start}, {eps_end}, {steps}")

    started = time.time()
    branch = _branch(args.which)
    grid = resolving_grid(branch, eps_end, N, (n_s, n_r), c_n=args.c_n)
    results = continue_in_epsilon(eps_start, eps_end, steps, branch, N, grid,
                                  tol=args.tol or settings.newton_tol,
                                  max_iter=args.max_iter or settings.newton_max_iter,
                                  max_backtracks=settings.max_backtracks, c_n=args.c_n)
    records = ladder_records(results, N)
    write_json(records, args.out)
    write_sidecar(args.out, _arguments(args), started)
    final_path = _stem(args.out) + ".final.csv"
    write_field_csv(results[-1].field, final_path)
    write_sidecar(final_path, _arguments(args), started, {"epsilon": results[-1].epsilon})

    rho = find_critical_rhos(N)[branch.index]
    print(f"N = {N}, branch {branch.value}: {len(results)} rungs converged, predicted rho = {_g6(rho)}")
    print(f"{'eps':>10} {'rho_hat':>10} {'height':>10} {'energy':>12} {'iters':>5}  boundary signs")
    for result in results:
        diag = extract_diagnostics(result, N)
        height = "-" if diag.height_scaling is None else _g6(diag.height_scaling)
        signs = "".join("+" if s > 0 else "-" if s < 0 else "0" for s in diag.sign_pattern)
        print(f"{_g6(diag.epsilon):>10} {_g6(diag.rho_hat):>10} {height:>10} {_g6(diag.energy):>12} "
              f"{diag.iterations:>5}  {signs}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodal-bubbles", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help="YAML file with default settings")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="audit the inequalities per dimension")
    target = verify.add_mutually_exclusive_group()
    target.add_argument("--dim", type=int)
    target.add_argument("--range", help="dimension range LO..HI")
    verify.add_argument("--json", help="write the report as JSON")
    verify.add_argument("--workers", type=int, help="processes for a range sweep")
    verify.set_defaults(handler=cmd_verify)

    critical = commands.add_parser("critical", help="critical points of the reduced energy")
    critical.add_argument("--dim", type=int, required=True)
    critical.add_argument("--c-n", type=float, dest="c_n")
    critical.set_defaults(handler=cmd_critical)

    landscape = commands.add_parser("landscape", help="tables of f, chi, m, M, Lambda over rho")
    landscape.add_argument("--dim", type=int, required=True)
    landscape.add_argument("--mesh", type=int)
    landscape.add_argument("--out", required=True)
    landscape.set_defaults(handler=cmd_landscape)

    profile = commands.add_parser("profile", help="limit profile, nodal set and boundary classification")
    profile.add_argument("--dim", type=int, required=True)
    profile.add_argument("--which", type=int, choices=(1, 2), required=True)
    profile.add_argument("--eps", type=float)
    profile.add_argument("--c-n", type=float, dest="c_n")
    profile.add_argument("--grid")
    profile.add_argument("--out", required=True)
    profile.set_defaults(handler=cmd_profile)

    pde = commands.add_parser("pde", help="Newton continuation of the PDE in eps")
    pde.add_argument("--dim", type=int, required=True)
    pde.add_argument("--which", type=int, choices=(1, 2), required=True)
    pde.add_argument("--eps-start", type=float, dest="eps_start")
    pde.add_argument("--eps-end", type=float, dest="eps_end")
    pde.add_argument("--steps", type=int)
    pde.add_argument("--tol", type=float)
    pde.add_argument("--max-iter", type=int, dest="max_iter")
    pde.add_argument("--c-n", type=float, dest="c_n")
    pde.add_argument("--grid")
    pde.add_argument("--out", required=True)
    pde.set_defaults(handler=cmd_pde)
    return parser


def configure_logging(level: str):
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        settings = load_settings(args.config)
    except DomainError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Cannot read configuration: {e}")
        return EXIT_IO
    configure_logging("DEBUG" if args.verbose else settings.log_level)

    try:
        return args.handler(args, settings)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except ReductionError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_MATH
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
