"""Command-line interface.

Commands: check, spectrum, heat, heat-fit, zeta, weyl, resolvent-scan,
resolvent-fit, solve, examples. The positional problem argument is a path to
a "bcp-1" JSON file or the name of a builtin example. Exit codes: 0 success,
1 domain failure (non-elliptic, non-symmetric, undefined zeta, window too
small, malformed problem file), 2 usage errors (bad flags, missing files,
unknown names). All output is byte-deterministic: fixed key order, repr
floats, trailing newline, no timestamps.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Dict, Optional

import numpy as np

from . import asymptotics, builtins as builtin_problems, ellipticity, spectra
from .errors import (CertificateError, DomainError, IntegrationError,
                     NearSingularResolvent, NotElliptic, NotSymmetric,
                     ProblemFormatError, WindowTooSmall, ZetaUndefined)
from .fileio import (cache_lookup, cache_store, dumps_json, emit_problem,
                     load_problem, spectrum_csv, table_csv)
from .graphs import canonical_hash, self_adjointness_report


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _load_target(name: str):
    if name in builtin_problems.BUILDERS:
        return builtin_problems.build(name)
    if not os.path.exists(name):
        raise UsageError(f"no such file or builtin: {name}")
    return load_problem(name)


def _parse_grid(text: str, what: str, log: bool) -> np.ndarray:
    parts = text.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3 or n < 2 or not (hi > lo):
            raise ValueError
    except (ValueError, IndexError):
        raise UsageError(f"bad {what} '{text}': expected LO:HI:N with LO < HI, N >= 2")
    if log:
        if lo <= 0:
            raise UsageError(f"bad {what} '{text}': endpoints must be positive")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _parse_complex(text: str, what: str) -> complex:
    try:
        parts = text.split(",")
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"bad {what} '{text}': expected RE or RE,IM")


def _parse_phi(text: Optional[str], problem) -> Optional[Dict[str, float]]:
    if text is None:
        return None
    phi: Dict[str, float] = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"bad --phi entry '{item}': expected EDGE=WEIGHT")
        eid, _, wtext = item.partition("=")
        try:
            w = float(wtext)
        except ValueError:
            raise UsageError(f"bad --phi weight '{wtext}'")
        if eid not in {e.id for e in problem.graph.edges}:
            raise UsageError(f"--phi names unknown edge '{eid}'")
        phi[eid] = w
    return phi


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _get_spectrum(problem, lam_hi: float, args) -> spectra.Spectrum:
    """Spectrum through the on-disk cache: reuse a covering window, extend a
    smaller one (never truncate), recompute on corruption."""
    force = bool(getattr(args, "force_numeric", False))
    params = {"oversample": spectra.DEFAULT_OVERSAMPLE, "force_numeric": force,
              "mult_threshold": spectra.MULT_THRESHOLD}
    cache_dir = getattr(args, "cache_dir", None)
    pdigest = canonical_hash(problem)
    cached = None
    if cache_dir:
        cached = cache_lookup(cache_dir, problem, pdigest, params)
    if cached is not None and cached.window[1] >= lam_hi * (1.0 - 1e-12):
        return cached
    target = lam_hi if cached is None else max(lam_hi, cached.window[1])
    spec = spectra.eigenvalues(problem, target, force_numeric=force)
    if cache_dir:
        cache_store(cache_dir, spec, params)
    return spec


def _default_window(problem, n_eigs: float) -> float:
    L = problem.graph.total_length
    return (n_eigs * math.pi / L) ** problem.order


def _spectrum_json(spec: spectra.Spectrum) -> dict:
    return {
        "problem_digest": spec.digest,
        "window": [spec.window[0], spec.window[1]],
        "eigenvalues": [[lam, int(q)] for lam, q in spec.eigenvalues],
        "certificate": spec.certificate,
        "order": spec.order,
        "total_length": spec.total_length,
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    problem = _load_target(args.problem)
    verdict = ellipticity.check(problem, n_arc_samples=args.sector_samples,
                                threshold=args.sigma_threshold)
    report = {
        "problem_digest": canonical_hash(problem),
        "ellipticity": verdict.to_json(),
        "self_adjointness": self_adjointness_report(problem),
    }
    _emit(args, dumps_json(report))
    return 0 if verdict.elliptic else 1


def cmd_spectrum(args) -> int:
    problem = _load_target(args.problem)
    if args.lambda_max is None and args.max_eig is None:
        raise UsageError("spectrum needs --lambda-max or --max-eig")
    if args.max_eig is not None:
        lam_hi = _default_window(problem, args.max_eig + 8)
        spec = _get_spectrum(problem, lam_hi, args)
        for _ in range(3):
            if spec.count >= args.max_eig:
                break
            lam_hi *= 4.0
            spec = _get_spectrum(problem, lam_hi, args)
        kept, total = [], 0
        for lam, q in spec.eigenvalues:
            if total >= args.max_eig:
                break
            kept.append((lam, q))
            total += q
        spec = spectra.Spectrum(spec.digest, kept, spec.window, spec.certificate,
                                spec.params, spec.order, spec.total_length,
                                spec.problem)
        lam_cut = None
    else:
        spec = _get_spectrum(problem, args.lambda_max, args)
        lam_cut = args.lambda_max
    if args.format == "json":
        shown = spec if lam_cut is None else spec.truncated(lam_cut)
        _emit(args, dumps_json(_spectrum_json(shown)))
    else:
        _emit(args, spectrum_csv(spec, lam_cut))
    return 0


def cmd_heat(args) -> int:
    problem = _load_target(args.problem)
    ts = _parse_grid(args.t_grid, "--t-grid", log=True)
    phi = _parse_phi(args.phi, problem)
    lam_hi = args.lambda_max if args.lambda_max else max(100.0, 16.0 / ts[0])
    spec = _get_spectrum(problem, lam_hi, args)
    trace = asymptotics.heat_trace(spec, ts, phi=phi)
    rows = [(t, v, b) for t, v, b in zip(trace.ts, trace.values, trace.tail_bounds)]
    _emit(args, table_csv(["t", "value", "tail_bound"], rows))
    return 0


def cmd_heat_fit(args) -> int:
    problem = _load_target(args.problem)
    lam_hi = args.lambda_max if args.lambda_max else _default_window(problem, 120)
    spec = _get_spectrum(problem, lam_hi, args)
    fit = asymptotics.fit_heat_invariants(spec, n_terms=args.terms)
    _emit(args, dumps_json({
        "exponents": list(fit.exponents),
        "coefficients": list(fit.coefficients),
        "alphas": list(fit.alphas),
        "residual": fit.residual,
        "misfit": fit.misfit,
        "cond": fit.cond,
        "t_window": [fit.window[0], fit.window[1]],
    }))
    return 0


def cmd_zeta(args) -> int:
    problem = _load_target(args.problem)
    s = _parse_complex(args.s, "--s")
    lam_hi = args.lambda_max if args.lambda_max else 1e4
    spec = _get_spectrum(problem, lam_hi, args)
    value = asymptotics.zeta(spec, s, method=args.method)
    _emit(args, dumps_json({
        "s": [s.real, s.imag],
        "value": [value.real, value.imag],
        "poles": asymptotics.zeta_poles(spec),
        "method": args.method,
    }))
    return 0


def cmd_weyl(args) -> int:
    problem = _load_target(args.problem)
    lam_hi = args.lambda_max if args.lambda_max else _default_window(problem, 240)
    spec = _get_spectrum(problem, lam_hi, args)
    fit = asymptotics.weyl_fit(spec)
    _emit(args, dumps_json({"exponent": fit.exponent, "constant": fit.constant,
                            "offset": fit.offset,
                            "exponent_stderr": fit.exponent_stderr,
                            "constant_stderr": fit.constant_stderr,
                            "n_used": fit.n_used}))
    return 0


def cmd_resolvent_scan(args) -> int:
    problem = _load_target(args.problem)
    radii = 10.0 ** _parse_grid(args.decades, "--decades", log=False)
    theta = math.radians(args.ray_deg)
    lam_hi = args.lambda_max if args.lambda_max else 450.0
    spec = _get_spectrum(problem, lam_hi, args)
    phi = _parse_phi(args.phi, problem)
    rows = []
    for R in radii:
        lam = R * complex(math.cos(theta), math.sin(theta))
        norm = spectra.resolvent_norm(spec, lam)
        tr = asymptotics.resolvent_trace(spec, lam, n_power=args.N, phi=phi)
        rows.append((R, norm, R * norm, tr.value.real, tr.value.imag,
                     tr.tail_bound))
    _emit(args, table_csv(["abs_lambda", "norm", "abs_lambda_times_norm",
                           "trace_re", "trace_im", "trace_tail"], rows))
    return 0


def cmd_resolvent_fit(args) -> int:
    problem = _load_target(args.problem)
    radii = 10.0 ** _parse_grid(args.decades, "--decades", log=False)
    lam_hi = args.lambda_max if args.lambda_max else 450.0
    spec = _get_spectrum(problem, lam_hi, args)
    fit = asymptotics.fit_resolvent_coeffs(
        spec, n_power=args.N, ray_arg=math.radians(args.ray_deg), radii=radii,
        n_terms=args.terms)
    coeffs = [[complex(c).real, complex(c).imag] for c in fit.coefficients]
    _emit(args, dumps_json({
        "n_power": args.N,
        "ray_deg": args.ray_deg,
        "exponents": list(fit.exponents),
        "coefficients": coeffs,
        "residual": fit.residual,
        "misfit": fit.misfit,
        "cond": fit.cond,
    }))
    return 0


def _load_rhs(path: str, problem):
    if not os.path.exists(path):
        raise UsageError(f"no such rhs file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError([f"rhs: not valid JSON: {exc}"])
    if not isinstance(data, dict) or set(data) != {"edges"} \
            or not isinstance(data["edges"], dict):
        raise ProblemFormatError(["rhs: expected an object {\"edges\": {...}}"])
    r = problem.rank
    rhs = {}
    for eid, samples in data["edges"].items():
        errs = []
        arr = np.zeros((len(samples) if isinstance(samples, list) else 0, r),
                       dtype=complex)
        if not isinstance(samples, list) or len(samples) < 9:
            raise ProblemFormatError([f"rhs.edges.{eid}: expected >= 9 samples"])
        for i, sample in enumerate(samples):
            if not isinstance(sample, list) or len(sample) != r:
                errs.append(f"rhs.edges.{eid}[{i}]: expected {r} complex pairs")
                continue
            for j, pair in enumerate(sample):
                if (isinstance(pair, list) and len(pair) == 2
                        and all(isinstance(v, (int, float))
                                and not isinstance(v, bool) for v in pair)):
                    arr[i, j] = complex(pair[0], pair[1])
                else:
                    errs.append(f"rhs.edges.{eid}[{i}][{j}]: complex pair expected")
        if errs:
            raise ProblemFormatError(errs)
        rhs[eid] = arr
    return rhs


def cmd_solve(args) -> int:
    problem = _load_target(args.problem)
    lam = _parse_complex(args.lam, "--lambda")
    rhs = _load_rhs(args.rhs, problem)
    result = spectra.solve_resolvent(problem, lam, rhs,
                                     sigma_threshold=args.sigma_threshold)
    if args.format == "csv":
        rows = []
        for e in problem.graph.edges:
            xs, u = result.xs[e.id], result.u[e.id]
            for i in range(len(xs)):
                for c in range(problem.rank):
                    rows.append((e.id, xs[i], c, u[i, c].real, u[i, c].imag))
        text = "edge,x,component,u_re,u_im\n" + "".join(
            f"{eid},{format(x, '.16e')},{c},{format(re, '.16e')},"
            f"{format(im, '.16e')}\n" for eid, x, c, re, im in rows)
        _emit(args, text)
    else:
        edges = {}
        for e in problem.graph.edges:
            u = result.u[e.id]
            edges[e.id] = {
                "x": [float(x) for x in result.xs[e.id]],
                "u": [[[u[i, c].real, u[i, c].imag]
                       for c in range(problem.rank)]
                      for i in range(u.shape[0])],
            }
        _emit(args, dumps_json({
            "lambda": [lam.real, lam.imag],
            "coupling_residual": result.coupling_residual,
            "interior_residual": result.interior_residual,
            "edges": edges,
        }))
    return 0


def cmd_examples(args) -> int:
    if args.action == "list":
        lines = [f"{name}  {builtin_problems.DESCRIPTIONS[name]}"
                 for name in builtin_problems.BUILDERS]
        _emit(args, "\n".join(lines) + "\n")
        return 0
    # emit
    if not args.name:
        raise UsageError("examples emit needs a builtin name")
    if args.name not in builtin_problems.BUILDERS:
        raise UsageError(f"unknown builtin: {args.name}")
    problem = builtin_problems.build(args.name)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    ppath = os.path.join(out_dir, args.name + ".json")
    opath = os.path.join(out_dir, args.name + ".oracle.json")
    with open(ppath, "w", encoding="utf-8") as fh:
        fh.write(emit_problem(problem))
    with open(opath, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(builtin_problems.oracle(args.name)))
    sys.stdout.write(f"wrote {ppath}\nwrote {opath}\n")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sp, cache=True, out=True):
    if cache:
        sp.add_argument("--cache-dir", default=None,
                        help="spectrum cache directory (no caching if omitted)")
        sp.add_argument("--force-numeric", action="store_true",
                        help="build fundamental systems by adaptive integration")
    if out:
        sp.add_argument("--out", default=None, help="write output to a file")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qgspectra",
        description="Boundary contact problems on metric graphs: ellipticity, "
                    "spectra, traces, and spectral asymptotics.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="ellipticity and symmetry report")
    sp.add_argument("problem")
    sp.add_argument("--sector-samples", type=int, default=64)
    sp.add_argument("--sigma-threshold", type=float, default=1e-8)
    _add_common(sp, cache=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("spectrum", help="certified eigenvalue table")
    sp.add_argument("problem")
    sp.add_argument("--lambda-max", type=float, default=None)
    sp.add_argument("--max-eig", type=int, default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("heat", help="heat trace on a time grid")
    sp.add_argument("problem")
    sp.add_argument("--t-grid", default="1e-3:1e-1:30", metavar="LO:HI:N")
    sp.add_argument("--phi", default=None, metavar="E1=W1,E2=W2")
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_heat)

    sp = sub.add_parser("heat-fit", help="small-time heat invariants")
    sp.add_argument("problem")
    sp.add_argument("--terms", type=int, default=4)
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_heat_fit)

    sp = sub.add_parser("zeta", help="spectral zeta value and pole chart")
    sp.add_argument("problem")
    sp.add_argument("--s", required=True, metavar="RE[,IM]")
    sp.add_argument("--method", choices=["auto", "direct", "split"],
                    default="auto")
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_zeta)

    sp = sub.add_parser("weyl", help="counting-function power-law fit")
    sp.add_argument("problem")
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_weyl)

    sp = sub.add_parser("resolvent-scan",
                        help="resolvent norm and trace along a ray")
    sp.add_argument("problem")
    sp.add_argument("--ray-deg", type=float, default=135.0)
    sp.add_argument("--decades", default="2:6:5", metavar="LO:HI:N")
    sp.add_argument("--N", type=int, default=1, help="resolvent power")
    sp.add_argument("--phi", default=None, metavar="E1=W1,E2=W2")
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_resolvent_scan)

    sp = sub.add_parser("resolvent-fit",
                        help="large-parameter trace expansion coefficients")
    sp.add_argument("problem")
    sp.add_argument("--ray-deg", type=float, default=135.0)
    sp.add_argument("--decades", default="2:4:30", metavar="LO:HI:N")
    sp.add_argument("--N", type=int, default=1, help="resolvent power")
    sp.add_argument("--terms", type=int, default=4)
    sp.add_argument("--lambda-max", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_resolvent_fit)

    sp = sub.add_parser("solve", help="solve (A - lambda) u = f")
    sp.add_argument("problem")
    sp.add_argument("--lambda", dest="lam", required=True, metavar="RE[,IM]")
    sp.add_argument("--rhs", required=True, help="JSON file with edge samples")
    sp.add_argument("--sigma-threshold", type=float, default=1e-8)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    _add_common(sp, cache=False)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("examples", help="list or emit builtin problems")
    sp.add_argument("action", choices=["list", "emit"])
    sp.add_argument("name", nargs="?", default=None)
    sp.add_argument("--out-dir", default=None)
    sp.set_defaults(func=cmd_examples)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProblemFormatError as exc:
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        return 1
    except (NotElliptic, NotSymmetric, ZetaUndefined, WindowTooSmall,
            NearSingularResolvent, CertificateError, IntegrationError,
            DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
