"""Problem files, canonical serialization, CSV tables, and the spectrum cache.

Problem files are JSON under schema "bcp-1": order, fiber_rank, edges
(coefficients as ascending-power arrays of r x r matrices, complex numbers
always [re, im] pairs), vertices (endpoints {edge,end,weight}, conditions
{rows, blocks M_0..M_{m-1}}), sector in degrees. Parsing is strict: unknown
keys are rejected and every error names the offending field. All emission is
byte-deterministic (fixed key order, repr floats, no timestamps).
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import tempfile
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ProblemFormatError
from .graphs import (BoundaryContactProblem, CouplingCondition, Edge,
                     EdgeOperator, Endpoint, MetricGraph, Sector, Vertex,
                     validate)
from .spectra import Spectrum

SCHEMA = "bcp-1"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _need_keys(node: dict, where: str, required: Sequence[str],
               errs: List[str]) -> bool:
    ok = True
    if not isinstance(node, dict):
        errs.append(f"{where}: expected an object")
        return False
    for k in required:
        if k not in node:
            errs.append(f"{where}.{k}: missing")
            ok = False
    for k in node:
        if k not in required:
            errs.append(f"{where}.{k}: unknown key")
            ok = False
    return ok


def _complex_of(node, where: str, errs: List[str]) -> complex:
    if (isinstance(node, list) and len(node) == 2
            and all(_is_number(v) for v in node)):
        return complex(node[0], node[1])
    errs.append(f"{where}: complex pair expected (got {json.dumps(node)})")
    return 0j


def _matrix_of(node, where: str, rows: int, cols: int,
               errs: List[str]) -> np.ndarray:
    out = np.zeros((rows, cols), dtype=complex)
    if not isinstance(node, list) or len(node) != rows:
        errs.append(f"{where}: expected {rows} rows")
        return out
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != cols:
            errs.append(f"{where}[{i}]: expected {cols} columns")
            continue
        for j, entry in enumerate(row):
            out[i, j] = _complex_of(entry, f"{where}[{i}][{j}]", errs)
    return out


def problem_from_dict(data) -> BoundaryContactProblem:
    errs: List[str] = []
    if not _need_keys(data, "$", ["schema", "order", "fiber_rank", "edges",
                                  "vertices", "sector"], errs):
        raise ProblemFormatError(errs)
    if data["schema"] != SCHEMA:
        errs.append(f"$.schema: expected '{SCHEMA}', got {data['schema']!r}")
    order = data["order"]
    if not isinstance(order, int) or order <= 0 or order % 2 != 0:
        errs.append("$.order: expected a positive even integer")
        order = 2
    rank = data["fiber_rank"]
    if not isinstance(rank, int) or rank < 1:
        errs.append("$.fiber_rank: expected an integer >= 1")
        rank = 1

    edges, operators = [], {}
    if not isinstance(data["edges"], list) or not data["edges"]:
        errs.append("$.edges: expected a nonempty list")
    else:
        for i, enode in enumerate(data["edges"]):
            where = f"$.edges[{i}]"
            if not _need_keys(enode, where, ["id", "length", "coefficients"], errs):
                continue
            eid = enode["id"]
            if not isinstance(eid, str) or not eid:
                errs.append(f"{where}.id: expected a nonempty string")
                continue
            if not _is_number(enode["length"]) or not (enode["length"] > 0) \
                    or not math.isfinite(enode["length"]):
                errs.append(f"{where}.length: expected a finite positive number")
                continue
            cnode = enode["coefficients"]
            if not isinstance(cnode, list) or len(cnode) != order + 1:
                errs.append(f"{where}.coefficients: expected {order + 1} "
                            f"entries (a_0 .. a_{order})")
                continue
            coeffs = []
            for k, knode in enumerate(cnode):
                kwhere = f"{where}.coefficients[{k}]"
                if not isinstance(knode, list) or not knode:
                    errs.append(f"{kwhere}: expected a nonempty list of "
                                "ascending-power matrices")
                    coeffs.append(np.zeros((1, rank, rank), dtype=complex))
                    continue
                powers = [_matrix_of(p, f"{kwhere}[{p_i}]", rank, rank, errs)
                          for p_i, p in enumerate(knode)]
                coeffs.append(np.stack(powers, axis=0))
            edges.append(Edge(eid, float(enode["length"])))
            operators[eid] = EdgeOperator(order=order, rank=rank, coeffs=coeffs)

    edge_ids = {e.id for e in edges}
    vertices, couplings = [], {}
    if not isinstance(data["vertices"], list) or not data["vertices"]:
        errs.append("$.vertices: expected a nonempty list")
    else:
        for i, vnode in enumerate(data["vertices"]):
            where = f"$.vertices[{i}]"
            if not _need_keys(vnode, where, ["id", "endpoints", "conditions"], errs):
                continue
            vid = vnode["id"]
            if not isinstance(vid, str) or not vid:
                errs.append(f"{where}.id: expected a nonempty string")
                continue
            eps = []
            if not isinstance(vnode["endpoints"], list) or not vnode["endpoints"]:
                errs.append(f"{where}.endpoints: expected a nonempty list")
                continue
            for j, pnode in enumerate(vnode["endpoints"]):
                pwhere = f"{where}.endpoints[{j}]"
                if not _need_keys(pnode, pwhere, ["edge", "end", "weight"], errs):
                    continue
                if pnode["edge"] not in edge_ids:
                    errs.append(f"{pwhere}.edge: unknown edge {pnode['edge']!r}")
                    continue
                if pnode["end"] not in ("left", "right"):
                    errs.append(f"{pwhere}.end: expected 'left' or 'right', "
                                f"got {pnode['end']!r}")
                    continue
                if not _is_number(pnode["weight"]) or not (pnode["weight"] > 0):
                    errs.append(f"{pwhere}.weight: expected a positive number")
                    continue
                eps.append(Endpoint(pnode["edge"], pnode["end"],
                                    float(pnode["weight"])))
            cnode = vnode["conditions"]
            cwhere = f"{where}.conditions"
            if not _need_keys(cnode, cwhere, ["rows", "blocks"], errs):
                continue
            rows = cnode["rows"]
            if not isinstance(rows, int) or rows < 0:
                errs.append(f"{cwhere}.rows: expected a nonnegative integer")
                continue
            if not isinstance(cnode["blocks"], list) or len(cnode["blocks"]) != order:
                errs.append(f"{cwhere}.blocks: expected {order} blocks "
                            "(M_0 .. M_{order-1})")
                continue
            d_cols = len(eps) * rank
            blocks = [_matrix_of(b, f"{cwhere}.blocks[{k}]", rows, d_cols, errs)
                      for k, b in enumerate(cnode["blocks"])]
            vertices.append(Vertex(vid, eps))
            couplings[vid] = CouplingCondition(rows=rows, blocks=blocks)

    snode = data["sector"]
    center, half = math.pi, math.pi / 2
    if _need_keys(snode, "$.sector", ["center_arg_deg", "half_angle_deg"], errs):
        if not _is_number(snode["center_arg_deg"]):
            errs.append("$.sector.center_arg_deg: expected a number")
        elif not _is_number(snode["half_angle_deg"]) or \
                not (0 < snode["half_angle_deg"] <= 180):
            errs.append("$.sector.half_angle_deg: expected a number in (0, 180]")
        else:
            center = math.radians(snode["center_arg_deg"])
            half = math.radians(snode["half_angle_deg"])

    if errs:
        raise ProblemFormatError(errs)

    problem = BoundaryContactProblem(
        graph=MetricGraph(edges=edges, vertices=vertices),
        operators=operators, couplings=couplings,
        sector=Sector(center_arg=center, half_angle=half))
    report = validate(problem)
    if not report.ok:
        raise ProblemFormatError(report.errors)
    return problem


def parse_problem(text: str) -> BoundaryContactProblem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError([f"not valid JSON: {exc}"]) from exc
    return problem_from_dict(data)


def load_problem(path: str) -> BoundaryContactProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read())


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _pair(z: complex) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _matrix_out(mat: np.ndarray) -> list:
    return [[_pair(mat[i, j]) for j in range(mat.shape[1])]
            for i in range(mat.shape[0])]


def problem_to_dict(problem: BoundaryContactProblem) -> dict:
    out = {
        "schema": SCHEMA,
        "order": int(problem.order),
        "fiber_rank": int(problem.rank),
        "edges": [],
        "vertices": [],
        "sector": {
            "center_arg_deg": math.degrees(problem.sector.center_arg),
            "half_angle_deg": math.degrees(problem.sector.half_angle),
        },
    }
    for e in problem.graph.edges:
        op = problem.operator(e.id)
        out["edges"].append({
            "id": e.id,
            "length": float(e.length),
            "coefficients": [[_matrix_out(op.coeffs[k][p])
                              for p in range(op.coeffs[k].shape[0])]
                             for k in range(problem.order + 1)],
        })
    for v in problem.graph.vertices:
        cond = problem.coupling(v.id)
        out["vertices"].append({
            "id": v.id,
            "endpoints": [{"edge": p.edge, "end": p.end,
                           "weight": float(p.weight)} for p in v.endpoints],
            "conditions": {"rows": int(cond.rows),
                           "blocks": [_matrix_out(b) for b in cond.blocks]},
        })
    return out


def emit_problem(problem: BoundaryContactProblem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"


def canonical_problem_text(problem: BoundaryContactProblem) -> str:
    return json.dumps(problem_to_dict(problem), sort_keys=True,
                      separators=(",", ":"))


def dumps_json(obj) -> str:
    """Deterministic JSON for CLI artifacts: sorted keys, repr floats."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".16e")


def table_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def spectrum_csv(spectrum: Spectrum, lam_hi: Optional[float] = None) -> str:
    rows = []
    k = 0
    for lam, q in spectrum.eigenvalues:
        if lam_hi is not None and lam > lam_hi:
            continue
        k += 1
        rows.append((k, lam, q))
    return table_csv(["k", "lambda", "multiplicity"], rows)


# ---------------------------------------------------------------------------
# spectrum cache
# ---------------------------------------------------------------------------

def digest_of_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def params_digest(params: dict) -> str:
    return digest_of_text(json.dumps(_plain(params), sort_keys=True,
                                     separators=(",", ":")))


def _cache_paths(cache_dir: str, pdigest: str, qdigest: str) -> Tuple[str, str]:
    base = os.path.join(cache_dir, pdigest)
    return os.path.join(base, qdigest + ".json"), os.path.join(base, qdigest + ".csv")


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_store(cache_dir: str, spectrum: Spectrum, params: dict) -> None:
    jpath, cpath = _cache_paths(cache_dir, spectrum.digest, params_digest(params))
    payload = {
        "problem_digest": spectrum.digest,
        "params": _plain(params),
        "window": [spectrum.window[0], spectrum.window[1]],
        "eigenvalues": [[lam, int(q)] for lam, q in spectrum.eigenvalues],
        "certificate": _plain(spectrum.certificate),
        "order": spectrum.order,
        "total_length": spectrum.total_length,
    }
    _atomic_write(jpath, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _atomic_write(cpath, spectrum_csv(spectrum))


def cache_lookup(cache_dir: str, problem: BoundaryContactProblem,
                 pdigest: str, params: dict) -> Optional[Spectrum]:
    """Returns the cached spectrum whatever its window (caller decides whether
    it covers the request); corrupt entries are dropped with a warning."""
    jpath, _ = _cache_paths(cache_dir, pdigest, params_digest(params))
    if not os.path.exists(jpath):
        return None
    try:
        with open(jpath, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload["problem_digest"] != pdigest:
            raise ValueError("problem digest mismatch")
        if payload["params"] != _plain(params):
            raise ValueError("params mismatch")
        eigs = [(float(l), int(q)) for l, q in payload["eigenvalues"]]
        window = (float(payload["window"][0]), float(payload["window"][1]))
        return Spectrum(digest=pdigest, eigenvalues=eigs, window=window,
                        certificate=payload["certificate"],
                        params=dict(params), order=int(payload["order"]),
                        total_length=float(payload["total_length"]),
                        problem=problem)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"warning: ignoring corrupt cache entry {jpath}: {exc}",
              file=sys.stderr)
        return None
