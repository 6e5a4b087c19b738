"""Command-line front end.

Exit status is 0 when every check passes, 1 when a theorem check fails and
2 for usage or numerical errors. JSON output carries ``"schema": 1``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .ball import SCAN_CHECKS, SCAN_COLUMNS, ratio_gap_checks, scan, spectral_pair
from .chiti import (MultipleCrossings, chiti_crossing, chiti_inequality_residual,
                    radial_measure, v1_volume_profile)
from .domain import (ball_for, domain_pair, gap_bound, ppw_check, solve_dirichlet, study)
from .mesh import SphericalDomainMesh, make_domain, spherical_to_cartesian
from .perturbation import perturbation_report
from .profile import (build_profile, p_structure_check, q_bounds_check, riccati_residuals)
from .radial import BallSpec
from .rearrangement import (DomainMeasure, decreasing_rearrangement, increasing_rearrangement,
                            isoperimetric_check_s2)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class Failure(Exception):
    """Numerical failure to be reported with exit status 2."""


def _dimension(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("n must be at least 2")
    return n


def _radius(text: str) -> float:
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < t < math.pi:
        raise argparse.ArgumentTypeError("theta1 must lie in (0, pi)")
    return t


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:count' -> count equispaced points, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if count < 2 or not 0 < start < stop < math.pi:
        raise argparse.ArgumentTypeError("need 0 < start < stop < pi and count >= 2")
    return np.linspace(start, stop, count)


def parse_corners(text: str) -> np.ndarray:
    """'theta,phi;theta,phi;...' in radians -> unit vectors."""
    try:
        pairs = [tuple(float(x) for x in item.split(",")) for item in text.split(";") if item]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad corner list {text!r}") from None
    if len(pairs) < 3 or any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError("need at least three theta,phi pairs")
    arr = np.array(pairs)
    return spherical_to_cartesian(arr[:, 0], arr[:, 1])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump(payload: dict) -> str:
    return json.dumps({"schema": SCHEMA, **payload}, indent=2, sort_keys=True,
                      default=_jsonable) + "\n"


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands

def cmd_ball(args) -> int:
    pair = spectral_pair(BallSpec(args.n, args.theta1))
    checks = ratio_gap_checks(pair)
    _emit(args, _dump({"n": args.n, "theta1": args.theta1, "lambda1": pair.lambda1,
                       "lambda2": pair.lambda2, "ratio": pair.ratio, "checks": checks}))
    return EXIT_OK if checks["passed"] else EXIT_FAIL


def cmd_scan(args) -> int:
    # the other checks hold only for some n and are opt-in
    checks = args.check or ["ratio-increasing", "t2-lambda1-decreasing"]
    table = scan(args.n, args.grid, checks, slack=args.slack)
    if args.format == "csv":
        _emit(args, table.to_csv())
    else:
        rows = [dict(zip(SCAN_COLUMNS, map(float, r))) for r in table.rows]
        _emit(args, _dump({"n": args.n, "rows": rows, "verdicts": table.verdicts}))
    failed = [k for k, v in table.verdicts.items() if not v["passed"]]
    for name in failed:
        print(f"check {name} failed at {table.verdicts[name]['first_violation']}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_perturb(args) -> int:
    rep = perturbation_report(BallSpec(args.n, args.theta1), args.step, args.richardson)
    checks = {
        "fd_agreement_1": abs(rep.d_lambda1_dc - rep.fd1) < args.tol,
        "fd_agreement_2": abs(rep.d_lambda2_dc - rep.fd2) < args.tol,
        "forms_agree": abs(rep.d_lambda1_dc - rep.d_lambda1_dc_raw) < 1e-8,
        "lambda1_decreasing": rep.d_lambda1_dc < 0,
    }
    if args.n == 2:
        checks["lambda2_increasing"] = rep.d_lambda2_dc > 0
    _emit(args, _dump({**rep.as_dict(), "checks": checks}))
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def cmd_profile(args) -> int:
    prof = build_profile(BallSpec(args.n, args.theta1), args.points)
    p_check, q_check = p_structure_check(prof), q_bounds_check(prof)
    rp, rq = riccati_residuals(prof)
    passed = p_check["passed"] and q_check["passed"] and max(rp, rq) < 1e-6
    if args.format == "csv":
        _emit(args, prof.to_csv())
    else:
        _emit(args, _dump({"n": args.n, "theta1": args.theta1, "lambda1": prof.lambda1,
                           "lambda2": prof.lambda2, "g_theta1": prof.g_theta1,
                           "riccati_residuals": {"p": rp, "q": rq},
                           "p_structure": p_check, "q_bounds": q_check, "passed": passed}))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_rearrange(args) -> int:
    if args.mesh:
        mesh = SphericalDomainMesh.from_text(Path(args.mesh).read_text(encoding="utf-8"))
        iso = isoperimetric_check_s2(mesh)
        _emit(args, _dump(iso))
        return EXIT_OK if iso["defect"] >= -args.tol else EXIT_FAIL
    text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text(encoding="utf-8")
    dm = DomainMeasure.from_csv(text)
    profile = increasing_rearrangement(dm) if args.increasing else decreasing_rearrangement(dm)
    _emit(args, profile.to_csv())
    return EXIT_OK


def _mesh_from_args(args, h=None) -> SphericalDomainMesh:
    h = h or args.h
    if args.mesh:
        return SphericalDomainMesh.from_text(Path(args.mesh).read_text(encoding="utf-8"))
    params = _domain_params(args)
    return make_domain(args.kind, h, check_hemisphere=not args.exploratory, **params)


def _domain_params(args) -> dict:
    if args.kind == "cap":
        return {"theta1": args.theta1}
    if args.kind == "perturbed_cap":
        return {"theta1": args.theta1, "amplitude": args.amplitude,
                "wavenumber": args.wavenumber}
    if args.corners is None:
        raise Failure("geodesic_polygon needs --corners")
    return {"corners": args.corners}


def cmd_chiti(args) -> int:
    if args.kind == "ball":
        spec = BallSpec(args.n, args.theta1)
        dm = radial_measure(spec)
        lam = None
    else:
        spectrum = solve_dirichlet(_mesh_from_args(args))
        spec = ball_for(spectrum).spec
        dm = spectrum.u1_level_measure()
        lam = spectrum.lambda1
    v = v1_volume_profile(spec)
    try:
        rep = chiti_crossing(dm, spec, slack=args.slack, v=v)
    except MultipleCrossings as exc:
        rep = exc.report
    ineq = chiti_inequality_residual(dm, spec, lambda1=lam, v=v)
    if args.format == "csv":
        _emit(args, rep.to_csv())
        print(json.dumps({"schema": SCHEMA, **rep.verdict_dict()}, sort_keys=True),
              file=sys.stderr)
    else:
        _emit(args, _dump({"theta1_ball": spec.theta1, "v1_residual": v.residual,
                           "max_inequality_violation": ineq.max_violation,
                           **rep.verdict_dict()}))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_domain(args) -> int:
    mesh = _mesh_from_args(args)
    spectrum = solve_dirichlet(mesh)
    gap = gap_bound(spectrum)
    ppw = ppw_check(mesh, spectrum)
    _emit(args, _dump({"lambda1": spectrum.lambda1, "lambda2": spectrum.lambda2,
                       "mesh_h": spectrum.mesh_h, "bound": gap.bound,
                       "ppw_margins": ppw.margins, "y0": gap.center.y0,
                       "gap": gap.as_dict()}))
    return EXIT_OK


def cmd_ppw(args) -> int:
    if args.mesh:
        raise Failure("ppw needs a generated domain (--kind) to build the 2h comparison mesh")
    (fine, sf), (coarse, sc) = domain_pair(args.kind, args.h, **_domain_params(args))
    pf, pc = ppw_check(fine, sf), ppw_check(coarse, sc)
    verdicts = {}
    for key in pf.margins:
        st = study(pf.margins[key], pc.margins[key])
        tol = 3 * st.error_estimate
        state = "strict" if st.fine > tol else ("tight" if st.fine >= -tol else "violated")
        verdicts[key] = {"margin": st.fine, "error_estimate": st.error_estimate, "verdict": state}
    _emit(args, _dump({**pf.as_dict(), "verdicts": verdicts, "h": args.h}))
    return EXIT_FAIL if any(v["verdict"] == "violated" for v in verdicts.values()) else EXIT_OK


def cmd_verify_all(args) -> int:
    numbers = args.criteria or None
    results = acceptance.run_all(fail_fast=not args.keep_going, numbers=numbers,
                                 echo=lambda line: print(line, file=sys.stderr))
    summary = {"criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                             "failures": r.failures} for r in results],
               "passed": all(r.passed for r in results)}
    failed = next((r for r in results if not r.passed), None)
    if failed:
        summary["first_failure"] = f"criterion {failed.number}: {failed.failures[0]}"
    _emit(args, _dump(summary))
    return EXIT_OK if summary["passed"] else EXIT_FAIL


# ---------------------------------------------------------------- parser

def _add_domain_args(p, *, with_ball=False):
    kinds = ["cap", "perturbed_cap", "geodesic_polygon"] + (["ball"] if with_ball else [])
    p.add_argument("--kind", choices=kinds, default="cap")
    p.add_argument("--theta1", type=_radius, default=1.0)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--wavenumber", type=int, default=2)
    p.add_argument("--corners", type=parse_corners,
                   help="polygon corners as 'theta,phi;theta,phi;...' (radians)")
    p.add_argument("--h", type=_positive, default=acceptance.MESH_H, help="target edge length")
    p.add_argument("--mesh", help="read the mesh from a text file instead")
    p.add_argument("--exploratory", action="store_true",
                   help="skip the hemisphere check when building the mesh")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sphereppw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write output here instead of stdout")
        return p

    p = command("ball", cmd_ball, "first two eigenvalues of one cap")
    p.add_argument("--n", type=_dimension, required=True)
    p.add_argument("--theta1", type=_radius, required=True)

    p = command("scan", cmd_scan, "eigenvalues over a grid of cap radii")
    p.add_argument("--n", type=_dimension, required=True)
    p.add_argument("--grid", type=parse_grid, required=True, help="start:stop:count")
    p.add_argument("--check", action="append", choices=sorted(SCAN_CHECKS))
    p.add_argument("--slack", type=float, default=1e-9)
    p.add_argument("--format", choices=["csv", "json"], default="json")

    p = command("perturb", cmd_perturb, "dilation derivatives against finite differences")
    p.add_argument("--n", type=_dimension, required=True)
    p.add_argument("--theta1", type=_radius, required=True)
    p.add_argument("--step", type=_positive, default=1e-4)
    p.add_argument("--richardson", action="store_true")
    p.add_argument("--tol", type=_positive, default=1e-5)

    p = command("profile", cmd_profile, "ratio profile p, q, g, B of a cap")
    p.add_argument("--n", type=_dimension, required=True)
    p.add_argument("--theta1", type=_radius, required=True)
    p.add_argument("--points", type=int, default=801)
    p.add_argument("--format", choices=["csv", "json"], default="json")

    p = command("rearrange", cmd_rearrange, "rearrange value,measure CSV or test a mesh")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--input", help="CSV of value,measure rows ('-' for stdin)")
    group.add_argument("--mesh", help="mesh file for the isoperimetric check")
    p.add_argument("--increasing", action="store_true")
    p.add_argument("--tol", type=float, default=1e-10)

    p = command("chiti", cmd_chiti, "one-crossing comparison with the equal-lambda1 cap")
    _add_domain_args(p, with_ball=True)
    p.add_argument("--n", type=_dimension, default=2, help="dimension for --kind ball")
    p.add_argument("--slack", type=float, default=1e-6)
    p.add_argument("--format", choices=["csv", "json"], default="json")

    p = command("domain", cmd_domain, "eigenpairs, center of mass and gap bound of a domain")
    _add_domain_args(p)

    p = command("ppw", cmd_ppw, "PPW and gap inequalities with mesh-error verdicts")
    _add_domain_args(p)

    p = command("verify-all", cmd_verify_all, "run the acceptance criteria")
    p.add_argument("--criteria", type=int, nargs="*", choices=range(1, 11))
    p.add_argument("--keep-going", action="store_true", help="do not stop at the first failure")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "kind", None) == "ball" and args.mesh:
        parser.error("--mesh cannot be combined with --kind ball")
    try:
        return args.func(args)
    except (Failure, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"sphereppw {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        code = EXIT_OK
    sys.exit(code)
