"""Data model for boundary contact problems on metric graphs.

A problem is the pair (A, C): a differential operator of even order m acting
edge-wise on a metric graph, together with per-vertex coupling conditions
Sum_k M_{v,k} J_k(v) = 0 on the inward jets J_k at the edge ends meeting v,
restricted to a closed sector of spectral parameters.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

_EPS = 1e-12

LEFT = "left"
RIGHT = "right"


@dataclass
class Edge:
    id: str
    length: float


@dataclass
class Endpoint:
    edge: str
    end: str          # "left" | "right"
    weight: float = 1.0

    def key(self) -> Tuple[str, str]:
        return (self.edge, self.end)


@dataclass
class Vertex:
    id: str
    endpoints: List[Endpoint]

    @property
    def degree(self) -> int:
        return len(self.endpoints)


@dataclass
class MetricGraph:
    edges: List[Edge]
    vertices: List[Vertex]

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(f"no edge {edge_id!r}")

    def vertex(self, vertex_id: str) -> Vertex:
        for v in self.vertices:
            if v.id == vertex_id:
                return v
        raise KeyError(f"no vertex {vertex_id!r}")

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))


class EdgeOperator:
    """A u = Sum_{k=0..m} a_k(x) (d/dx)^k u on one edge, plain d/dx powers.

    coeffs[k] is an array of shape (n_powers, r, r): the matrix polynomial
    a_k(x) = Sum_p coeffs[k][p] x^p in ascending powers.
    """

    def __init__(self, order: int, rank: int, coeffs: Sequence[np.ndarray]):
        if order <= 0 or order % 2 != 0:
            raise ValueError("operator order must be a positive even integer")
        if rank < 1:
            raise ValueError("fiber rank must be >= 1")
        if len(coeffs) != order + 1:
            raise ValueError(f"need coefficients a_0..a_{order}")
        self.order = order
        self.rank = rank
        self.coeffs = []
        for k, c in enumerate(coeffs):
            c = np.asarray(c, dtype=complex)
            if c.ndim == 0:
                c = c.reshape(1, 1, 1)
            elif c.ndim == 1:          # list of scalar powers, rank 1
                c = c.reshape(-1, 1, 1)
            elif c.ndim == 2:          # single matrix, constant in x
                c = c.reshape(1, *c.shape)
            if c.shape[1:] != (rank, rank):
                raise ValueError(f"a_{k} has shape {c.shape[1:]}, expected ({rank},{rank})")
            self.coeffs.append(c)

    @classmethod
    def constant(cls, coeffs: Sequence, rank: int = 1) -> "EdgeOperator":
        """Build from constant scalar/matrix coefficients [a_0, ..., a_m]."""
        order = len(coeffs) - 1
        cs = []
        for c in coeffs:
            a = np.asarray(c, dtype=complex)
            if a.ndim == 0:
                a = a * np.eye(rank)
            cs.append(a.reshape(1, rank, rank))
        return cls(order, rank, cs)

    def coeff_at(self, k: int, x: float) -> np.ndarray:
        """a_k(x) as an (r, r) matrix."""
        c = self.coeffs[k]
        powers = x ** np.arange(c.shape[0])
        return np.tensordot(powers, c, axes=(0, 0))

    @property
    def is_x_dependent(self) -> bool:
        return any(c.shape[0] > 1 for c in self.coeffs)

    def leading_at(self, x: float) -> np.ndarray:
        return self.coeff_at(self.order, x)


@dataclass
class CouplingCondition:
    """Sum_k blocks[k] @ J_k = 0 on the inward jets at one vertex."""
    rows: int
    blocks: List[np.ndarray]   # m blocks, each (rows, d_v * r)

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=complex) for b in self.blocks]

    def stacked(self) -> np.ndarray:
        return np.hstack(self.blocks)


@dataclass
class Sector:
    """Lambda = { rho e^{i phi} : rho >= 0, |phi - center_arg| <= half_angle }."""
    center_arg: float
    half_angle: float

    def __post_init__(self):
        if not (0.0 < self.half_angle <= math.pi):
            raise ValueError("sector half-angle must lie in (0, pi]")

    def contains(self, z: complex) -> bool:
        if z == 0:
            return True
        d = (np.angle(z) - self.center_arg) % (2 * math.pi)
        if d > math.pi:
            d -= 2 * math.pi
        return abs(d) <= self.half_angle

    def arc(self, n: int) -> np.ndarray:
        """n unit-modulus sector points, uniform in argument, endpoints included."""
        args = np.linspace(self.center_arg - self.half_angle,
                           self.center_arg + self.half_angle, n)
        return np.exp(1j * args)


class BoundaryContactProblem:
    def __init__(self, graph: MetricGraph, operators: Dict[str, EdgeOperator],
                 couplings: Dict[str, CouplingCondition], sector: Sector):
        self.graph = graph
        self.operators = operators
        self.couplings = couplings
        self.sector = sector
        orders = {op.order for op in operators.values()}
        ranks = {op.rank for op in operators.values()}
        if len(orders) > 1 or len(ranks) > 1:
            raise ValueError("all edges must share one operator order and fiber rank")
        self.order = orders.pop() if orders else 0
        self.rank = ranks.pop() if ranks else 1
        # endpoint -> (vertex id, slot in its endpoint list); duplicates surface in validate()
        self._owner: Dict[Tuple[str, str], Tuple[str, int]] = {}
        for v in graph.vertices:
            for q, p in enumerate(v.endpoints):
                self._owner.setdefault(p.key(), (v.id, q))

    def operator(self, edge_id: str) -> EdgeOperator:
        return self.operators[edge_id]

    def coupling(self, vertex_id: str) -> CouplingCondition:
        return self.couplings[vertex_id]

    def endpoint_owner(self, edge_id: str, end: str) -> Tuple[str, int]:
        return self._owner[(edge_id, end)]

    @property
    def total_rows(self) -> int:
        return sum(c.rows for c in self.couplings.values())

    def row_offset(self, vertex_id: str) -> int:
        off = 0
        for v in self.graph.vertices:
            if v.id == vertex_id:
                return off
            off += self.couplings[v.id].rows
        raise KeyError(vertex_id)


@dataclass
class ValidationReport:
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(problem: BoundaryContactProblem) -> ValidationReport:
    """Check the Def.-2.1-shaped invariants; errors for violations, warnings
    for non-square row counts."""
    rep = ValidationReport()
    g = problem.graph
    m, r = problem.order, problem.rank

    if m <= 0 or m % 2 != 0:
        rep.errors.append(f"operator order {m} is not a positive even integer")

    edge_ids = [e.id for e in g.edges]
    if len(set(edge_ids)) != len(edge_ids):
        rep.errors.append("duplicate edge ids")
    for e in g.edges:
        if not (math.isfinite(e.length) and e.length > 0):
            rep.errors.append(f"edge {e.id}: nonpositive or non-finite length {e.length}")
        if e.id not in problem.operators:
            rep.errors.append(f"edge {e.id}: no operator attached")

    # the covering must partition the set of edge ends
    seen: Dict[Tuple[str, str], str] = {}
    for v in g.vertices:
        if v.degree < 1:
            rep.errors.append(f"vertex {v.id}: empty endpoint list")
        for p in v.endpoints:
            if p.end not in (LEFT, RIGHT):
                rep.errors.append(f"vertex {v.id}: endpoint end {p.end!r} not left/right")
                continue
            if p.edge not in set(edge_ids):
                rep.errors.append(f"vertex {v.id}: endpoint references unknown edge {p.edge!r}")
                continue
            if p.key() in seen:
                rep.errors.append(
                    f"endpoint multiply covered: ({p.edge},{p.end}) in vertices "
                    f"{seen[p.key()]} and {v.id}")
            seen[p.key()] = v.id
            if not (math.isfinite(p.weight) and p.weight > 0):
                rep.errors.append(f"vertex {v.id}: nonpositive weight at ({p.edge},{p.end})")
    for e in g.edges:
        for end in (LEFT, RIGHT):
            if (e.id, end) not in seen:
                rep.errors.append(f"endpoint uncovered: ({e.id},{end}) belongs to no vertex")

    for eid, op in problem.operators.items():
        if op.order != m or op.rank != r:
            rep.errors.append(f"edge {eid}: operator order/rank differ from the rest")
        try:
            ell = g.edge(eid).length
        except KeyError:
            rep.errors.append(f"operator attached to unknown edge {eid!r}")
            continue
        for c in op.coeffs:
            if not np.all(np.isfinite(c)):
                rep.errors.append(f"edge {eid}: non-finite operator coefficient")
        xs = np.linspace(0.0, ell, 9)
        for x in xs:
            am = op.leading_at(x)
            degenerate = (not np.all(np.isfinite(am))) or np.linalg.cond(am) > 1e12
            if degenerate:
                rep.errors.append(f"edge {eid}: degenerate leading coefficient near x={x:.6g}")
                break

    for v in g.vertices:
        cond = problem.couplings.get(v.id)
        if cond is None:
            rep.errors.append(f"vertex {v.id}: no coupling condition")
            continue
        width = v.degree * r
        if len(cond.blocks) != m:
            rep.errors.append(f"vertex {v.id}: expected {m} blocks M_0..M_{m-1}, "
                              f"got {len(cond.blocks)}")
            continue
        bad_shape = False
        for k, b in enumerate(cond.blocks):
            if b.shape != (cond.rows, width):
                rep.errors.append(f"vertex {v.id}: block M_{k} has shape {b.shape}, "
                                  f"expected ({cond.rows},{width})")
                bad_shape = True
        if bad_shape:
            continue
        if cond.rows > 0:
            stacked = cond.stacked()
            if np.linalg.matrix_rank(stacked, tol=1e-10 * max(1.0, np.abs(stacked).max())) < cond.rows:
                rep.errors.append(f"vertex {v.id}: coupling rows are linearly dependent")
        expected = (m // 2) * v.degree * r
        if cond.rows != expected:
            rep.warnings.append(f"non-square: expected {expected} rows, got {cond.rows} "
                                f"at vertex {v.id}")
    return rep


def push_forward(problem: BoundaryContactProblem, vertex_id: str,
                 jets: Dict[Tuple[str, str], np.ndarray]) -> np.ndarray:
    """Assemble raw one-sided endpoint jets into the m x (d_v * r) fiber jet
    matrix over a vertex, in the inward convention (right ends get (-1)^k)."""
    v = problem.graph.vertex(vertex_id)
    m, r = problem.order, problem.rank
    out = np.zeros((m, v.degree * r), dtype=complex)
    signs_right = np.array([(-1.0) ** k for k in range(m)])
    for q, p in enumerate(v.endpoints):
        if p.key() not in jets:
            raise ValueError(f"incomplete fiber data: no jets for ({p.edge},{p.end})")
        j = np.asarray(jets[p.key()], dtype=complex).reshape(m, r)
        if p.end == RIGHT:
            j = j * signs_right[:, None]
        out[:, q * r:(q + 1) * r] = j
    return out


def pull_back(problem: BoundaryContactProblem, vertex_id: str,
              fiber: np.ndarray) -> Dict[Tuple[str, str], np.ndarray]:
    """Inverse of push_forward: fiber jet matrix back to raw endpoint jets."""
    v = problem.graph.vertex(vertex_id)
    m, r = problem.order, problem.rank
    fiber = np.asarray(fiber, dtype=complex).reshape(m, v.degree * r)
    signs_right = np.array([(-1.0) ** k for k in range(m)])
    out = {}
    for q, p in enumerate(v.endpoints):
        j = fiber[:, q * r:(q + 1) * r].copy()
        if p.end == RIGHT:
            j = j * signs_right[:, None]
        out[p.key()] = j
    return out


def fiber_inner(problem: BoundaryContactProblem, vertex_id: str,
                u: np.ndarray, v: np.ndarray) -> complex:
    """Weighted fiber pairing <u, v> = Sum_p w_p u_p conj(v_p) on the vertex
    fiber C^{d_v * r} (one value per endpoint component)."""
    vert = problem.graph.vertex(vertex_id)
    r = problem.rank
    want = vert.degree * r
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    if u.size != want or v.size != want:
        raise ValueError(f"fiber vectors over vertex {vertex_id!r} must have "
                         f"{want} entries (degree {vert.degree} x rank {r}); "
                         f"got {u.size} and {v.size}")
    acc = 0.0 + 0.0j
    for q, p in enumerate(vert.endpoints):
        acc += p.weight * np.vdot(v[q * r:(q + 1) * r], u[q * r:(q + 1) * r])
    return complex(acc)


def apply_coupling(problem: BoundaryContactProblem, vertex_id: str,
                   fiber_jets: np.ndarray) -> np.ndarray:
    """Residual Sum_k M_{v,k} J_k for fiber jets shaped (m, d_v * r)."""
    cond = problem.coupling(vertex_id)
    v = problem.graph.vertex(vertex_id)
    m, r = problem.order, problem.rank
    fiber_jets = np.asarray(fiber_jets, dtype=complex)
    if fiber_jets.shape != (m, v.degree * r):
        raise ValueError(f"fiber jets shaped {fiber_jets.shape}, "
                         f"expected ({m},{v.degree * r})")
    res = np.zeros(cond.rows, dtype=complex)
    for k in range(m):
        res += cond.blocks[k] @ fiber_jets[k]
    return res


# ---------------------------------------------------------------------------
# self-adjointness
# ---------------------------------------------------------------------------

def _is_minus_laplacian_like(op: EdgeOperator) -> bool:
    """m = 2, a_2 == -Id constant, a_1 == 0, a_0 real."""
    if op.order != 2:
        return False
    a2 = op.coeffs[2]
    if a2.shape[0] != 1 or not np.allclose(a2[0], -np.eye(op.rank), atol=_EPS):
        return False
    if np.abs(op.coeffs[1]).max() > _EPS:
        return False
    if np.abs(op.coeffs[0].imag).max() > _EPS:
        return False
    return True


def _trig_basis(ell: float, n_funcs: int):
    """Real trig family on [0, ell]: 1, cos(pi x/ell), sin(pi x/ell), cos(2..), ...
    Returns a list of (value_fn, jet_fn) where jet_fn(x, k) is the k-th derivative."""
    funcs = []

    def make(kind, omega):
        if kind == "const":
            return (lambda x: np.ones_like(x),
                    lambda x, k: np.ones_like(np.asarray(x, float)) if k == 0
                    else np.zeros_like(np.asarray(x, float)))
        if kind == "cos":
            def jet(x, k, w=omega):
                x = np.asarray(x, float)
                # d^k cos(wx) = w^k cos(wx + k pi/2)
                return w ** k * np.cos(w * x + k * math.pi / 2)
            return (lambda x, w=omega: np.cos(w * x), jet)

        def jet(x, k, w=omega):
            x = np.asarray(x, float)
            return w ** k * np.sin(w * x + k * math.pi / 2)
        return (lambda x, w=omega: np.sin(w * x), jet)

    funcs.append(make("const", 0.0))
    n = 1
    while len(funcs) < n_funcs:
        w = n * math.pi / ell
        funcs.append(make("cos", w))
        if len(funcs) < n_funcs:
            funcs.append(make("sin", w))
        n += 1
    return funcs


def _admissible_basis(problem: BoundaryContactProblem, n_funcs_per_edge: int):
    """Trig-polynomial functions on the graph satisfying every coupling row,
    together with Gauss-Legendre quadrature data per edge.

    Returns (edges, nullspace, quad) where quad[eid] = (nodes, weights) and the
    columns of nullspace are admissible coefficient vectors over the product
    basis (edges x trig functions x fiber components)."""
    g = problem.graph
    m, r = problem.order, problem.rank
    basis = {e.id: _trig_basis(e.length, n_funcs_per_edge) for e in g.edges}
    n_per_edge = n_funcs_per_edge * r
    n_total = n_per_edge * len(g.edges)
    col_of = {e.id: i * n_per_edge for i, e in enumerate(g.edges)}

    rows = []
    for v in g.vertices:
        cond = problem.coupling(v.id)
        block = np.zeros((cond.rows, n_total), dtype=complex)
        for q, p in enumerate(v.endpoints):
            ell = g.edge(p.edge).length
            x0 = 0.0 if p.end == LEFT else ell
            for b, (_, jet) in enumerate(basis[p.edge]):
                jets = np.array([jet(x0, k) for k in range(m)], dtype=complex)
                if p.end == RIGHT:
                    jets *= np.array([(-1.0) ** k for k in range(m)])
                for s in range(r):
                    col = col_of[p.edge] + b * r + s
                    for k in range(m):
                        block[:, col] += cond.blocks[k][:, q * r + s] * jets[k]
        rows.append(block)
    constraint = np.vstack(rows) if rows else np.zeros((0, n_total))

    u, sv, vh = np.linalg.svd(constraint)
    tol = max(constraint.shape) * (sv[0] if sv.size else 0.0) * 1e-12
    rank = int(np.sum(sv > tol))
    nullspace = vh[rank:].conj().T   # (n_total, n_null)

    nodes, weights = np.polynomial.legendre.leggauss(48)
    quad = {}
    for e in g.edges:
        x = 0.5 * e.length * (nodes + 1.0)
        w = 0.5 * e.length * weights
        quad[e.id] = (x, w)
    return basis, col_of, nullspace, quad


def _graph_values(problem, basis, col_of, coeffs, quad, derivative=0):
    """Per-edge sampled values of the k-th derivative of a basis combination."""
    r = problem.rank
    out = {}
    for e in problem.graph.edges:
        x, _ = quad[e.id]
        vals = np.zeros((len(x), r), dtype=complex)
        for b, (_, jet) in enumerate(basis[e.id]):
            fb = jet(x, derivative)
            for s in range(r):
                c = coeffs[col_of[e.id] + b * r + s]
                if c != 0:
                    vals[:, s] += c * fb
        out[e.id] = vals
    return out


def _apply_operator_samples(problem, basis, col_of, coeffs, quad):
    """Samples of A u on the quadrature grid for a basis combination."""
    m, r = problem.order, problem.rank
    out = {}
    for e in problem.graph.edges:
        x, _ = quad[e.id]
        op = problem.operator(e.id)
        acc = np.zeros((len(x), r), dtype=complex)
        for k in range(m + 1):
            uk = np.zeros((len(x), r), dtype=complex)
            for b, (_, jet) in enumerate(basis[e.id]):
                fb = jet(x, k)
                for s in range(r):
                    c = coeffs[col_of[e.id] + b * r + s]
                    if c != 0:
                        uk[:, s] += c * fb
            ak = op.coeffs[k]
            # a_k(x) @ u^(k)(x), vectorized over the grid
            akx = np.tensordot(x[:, None] ** np.arange(ak.shape[0])[None, :], ak, axes=(1, 0))
            acc += np.einsum("xij,xj->xi", akx, uk)
        out[e.id] = acc
    return out


def _l2_inner(problem, quad, u_vals, v_vals) -> complex:
    acc = 0.0 + 0.0j
    for e in problem.graph.edges:
        _, w = quad[e.id]
        acc += np.sum(w[:, None] * u_vals[e.id] * np.conj(v_vals[e.id]))
    return complex(acc)


def self_adjointness_report(problem: BoundaryContactProblem, tol: float = 1e-8,
                            n_pairs: int = 50, seed: int = 1729) -> dict:
    """Decide symmetry of the realization.

    For m = 2 with A = -d^2/dx^2 + real potential the classical vertex algebra
    applies: rows (P, Q) on (J_0, J_1) are symmetric iff rank [P|Q] = R_v =
    d_v r and P W Q* = Q W P* with W = diag(weights). Anything else falls back
    to a numerical Green-identity defect over pseudo-random admissible
    trig-polynomial pairs.
    """
    m, r = problem.order, problem.rank
    algebraic = all(_is_minus_laplacian_like(op) for op in problem.operators.values())

    if algebraic:
        symmetric = True
        for v in problem.graph.vertices:
            cond = problem.coupling(v.id)
            if cond.rows != v.degree * r:
                symmetric = False
                break
            P, Q = cond.blocks[0], cond.blocks[1]
            pq = np.hstack([P, Q])
            if np.linalg.matrix_rank(pq, tol=1e-10 * max(1.0, np.abs(pq).max())) < cond.rows:
                symmetric = False
                break
            w = np.repeat([p.weight for p in v.endpoints], r)
            W = np.diag(w)
            lhs = P @ W @ Q.conj().T
            rhs = Q @ W @ P.conj().T
            scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1.0)
            if np.abs(lhs - rhs).max() > tol * scale:
                symmetric = False
                break
        method = "vertex-algebra"
        defect = None
    else:
        method = "green-defect"
        symmetric, defect = _green_defect(problem, tol, n_pairs, seed)

    positive = _positive_hint(problem)
    rep = {"symmetric": bool(symmetric), "positive_hint": bool(positive), "method": method}
    if defect is not None:
        rep["defect"] = defect
    return rep


def _green_defect(problem, tol, n_pairs, seed):
    basis, col_of, ns, quad = _admissible_basis(problem, max(2 * problem.order, 8))
    if ns.shape[1] == 0:
        return True, 0.0    # only u = 0 is admissible; vacuously symmetric
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        cu = ns @ (rng.standard_normal(ns.shape[1]) + 1j * rng.standard_normal(ns.shape[1]))
        cv = ns @ (rng.standard_normal(ns.shape[1]) + 1j * rng.standard_normal(ns.shape[1]))
        u = _graph_values(problem, basis, col_of, cu, quad)
        v = _graph_values(problem, basis, col_of, cv, quad)
        au = _apply_operator_samples(problem, basis, col_of, cu, quad)
        av = _apply_operator_samples(problem, basis, col_of, cv, quad)
        nu = math.sqrt(abs(_l2_inner(problem, quad, u, u)))
        nv = math.sqrt(abs(_l2_inner(problem, quad, v, v)))
        d = abs(_l2_inner(problem, quad, au, v) - _l2_inner(problem, quad, u, av))
        worst = max(worst, d / max(nu * nv, _EPS))
    return worst <= tol, worst


def _positive_hint(problem) -> bool:
    """Rayleigh-quotient hint: min eig of the (Hermitian part of the) form
    <A u, u> on a constrained trig basis is >= -tolerance."""
    basis, col_of, ns, quad = _admissible_basis(problem, max(2 * problem.order, 8))
    if ns.shape[1] == 0:
        return True
    n = ns.shape[1]
    F = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    cols_vals = []
    cols_op = []
    for i in range(n):
        cols_vals.append(_graph_values(problem, basis, col_of, ns[:, i], quad))
        cols_op.append(_apply_operator_samples(problem, basis, col_of, ns[:, i], quad))
    for i in range(n):
        for j in range(n):
            F[i, j] = _l2_inner(problem, quad, cols_op[i], cols_vals[j])
            M[i, j] = _l2_inner(problem, quad, cols_vals[i], cols_vals[j])
    Fh = 0.5 * (F + F.conj().T)
    try:
        import scipy.linalg as sla
        ev = sla.eigh(Fh, 0.5 * (M + M.conj().T), eigvals_only=True)
    except Exception:
        return False
    scale = max(1.0, float(np.abs(Fh).max()))
    return bool(ev.min() >= -1e-8 * scale)


def canonical_hash(problem: BoundaryContactProblem) -> str:
    """SHA-256 of the canonical serialization (sorted keys, repr floats)."""
    from .fileio import canonical_problem_text
    text = canonical_problem_text(problem)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
