"""Parameter-ellipticity of (A, C) in a sector.

Interior part: eigenvalues of the principal symbol a_m(x) (i xi)^m must avoid
the sector. Boundary part: per vertex, the Lopatinsky matrix (coupling rows
applied to a basis of decaying solutions of the frozen symbol ODE on the
half-line) must stay uniformly invertible over the unit arc of the sector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .graphs import LEFT, BoundaryContactProblem

CLUSTER_TOL = 1e-7
SIGMA_THRESHOLD = 1e-8
ARC_SAMPLES = 64


@dataclass
class ExponentSplit:
    """Characteristic exponents mu of det(Sum_k A_k mu^k - lambda) = 0,
    split by the sign of Re mu; multiplicities from clustering."""
    stable: List[Tuple[complex, int]]
    unstable: List[Tuple[complex, int]]
    neutral: List[Tuple[complex, int]]

    @property
    def m_minus(self) -> int:
        return sum(q for _, q in self.stable)

    @property
    def total(self) -> int:
        return (sum(q for _, q in self.stable) + sum(q for _, q in self.unstable)
                + sum(q for _, q in self.neutral))


def _cluster_roots(roots: np.ndarray, rel_tol: float) -> List[Tuple[complex, int]]:
    scale = max(float(np.abs(roots).max()), 1e-300)
    tol = rel_tol * scale
    order = np.argsort(roots.real + 1e-9 * roots.imag)
    roots = roots[order]
    clusters: List[List[complex]] = []
    for z in roots:
        for c in clusters:
            if abs(z - np.mean(c)) <= tol:
                c.append(z)
                break
        else:
            clusters.append([z])
    return [(complex(np.mean(c)), len(c)) for c in clusters]


def characteristic_exponents(coeffs_mu: Sequence[np.ndarray], lam: complex,
                             cluster_tol: float = CLUSTER_TOL) -> ExponentSplit:
    """Roots of det(Sum_k A_k mu^k - lambda I).

    coeffs_mu = [A_0, ..., A_m] are the mu-coefficients of the (frozen)
    principal symbol polynomial; for graphs only A_m = a_m is nonzero and
    the tangential covariable is absent. Point checks for a general base pass
    the eta-evaluated coefficients instead.
    """
    coeffs = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coeffs_mu]
    m = len(coeffs) - 1
    r = coeffs[0].shape[0]
    shifted = [c.copy() for c in coeffs]
    shifted[0] = shifted[0] - lam * np.eye(r)

    if r == 1:
        poly = np.array([shifted[k][0, 0] for k in range(m, -1, -1)])
        roots = np.roots(poly)
    else:
        am_inv = np.linalg.inv(shifted[m])
        comp = np.zeros((m * r, m * r), dtype=complex)
        for k in range(m - 1):
            comp[k * r:(k + 1) * r, (k + 1) * r:(k + 2) * r] = np.eye(r)
        for k in range(m):
            comp[(m - 1) * r:, k * r:(k + 1) * r] = -am_inv @ shifted[k]
        roots = np.linalg.eigvals(comp)

    scale = max(float(np.abs(roots).max()), 1e-300)
    clusters = _cluster_roots(roots, cluster_tol)
    stable, unstable, neutral = [], [], []
    for mu, q in clusters:
        if mu.real < -cluster_tol * scale:
            stable.append((mu, q))
        elif mu.real > cluster_tol * scale:
            unstable.append((mu, q))
        else:
            neutral.append((mu, q))
    return ExponentSplit(stable=stable, unstable=unstable, neutral=neutral)


def interior_check(problem: BoundaryContactProblem, n_x_samples: int = 8) -> dict:
    """Principal symbol a_m(x) (i xi)^m must have no eigenvalue in the sector,
    for every edge, sample point, and xi in {+1, -1} (homogeneity)."""
    m = problem.order
    sector = problem.sector
    for e in problem.graph.edges:
        op = problem.operator(e.id)
        xs = np.linspace(0.0, e.length, n_x_samples + 2)
        for x in xs:
            am = op.leading_at(x)
            if not np.all(np.isfinite(am)) or np.linalg.cond(am) > 1e12:
                raise DomainError(f"degenerate leading coefficient on edge {e.id} at x={x:.6g}")
            for xi in (1.0, -1.0):
                symbol = am * (1j * xi) ** m
                for ev in np.linalg.eigvals(symbol):
                    if sector.contains(complex(ev)):
                        return {"ok": False,
                                "witness": {"edge": e.id, "x": float(x), "xi": xi,
                                            "eigenvalue": [float(ev.real), float(ev.imag)]}}
    return {"ok": True}


# ---------------------------------------------------------------------------
# decaying solution basis and the Lopatinsky matrix
# ---------------------------------------------------------------------------

class _HalfLineSolution:
    """u(x) = Sum_terms x^p e^{mu x} v on the inward half-line."""

    def __init__(self, mu: complex, terms: List[Tuple[int, np.ndarray]]):
        self.mu = mu
        self.terms = terms

    def jet(self, k: int, r: int) -> np.ndarray:
        """(d/dx)^k u at x = 0."""
        out = np.zeros(r, dtype=complex)
        for p, v in self.terms:
            if k >= p:
                out += math.comb(k, p) * math.factorial(p) * self.mu ** (k - p) * v
        return out


def stable_solution_basis(a_m: np.ndarray, m: int, lam: complex,
                          cluster_tol: float = CLUSTER_TOL) -> List[_HalfLineSolution]:
    """Basis of the decaying-solution space of a_m u^(m) = lambda u on R_+.

    Requires no neutral exponents; raises DomainError otherwise.
    """
    a_m = np.atleast_2d(np.asarray(a_m, dtype=complex))
    r = a_m.shape[0]
    coeffs = [np.zeros((r, r), dtype=complex) for _ in range(m)] + [a_m]
    split = characteristic_exponents(coeffs, lam, cluster_tol)
    if split.neutral:
        raise DomainError(f"neutral exponent: not parameter-elliptic at lambda={lam}")
    sols: List[_HalfLineSolution] = []
    for mu, q in split.stable:
        if r == 1:
            for p in range(q):
                sols.append(_HalfLineSolution(mu, [(p, np.array([1.0 + 0j]))]))
            continue
        B = a_m * mu ** m - lam * np.eye(r)
        u, sv, vh = np.linalg.svd(B)
        tol = max(sv[0], 1.0) * 1e-8
        kdim = int(np.sum(sv <= tol))
        kernel = vh[r - kdim:].conj().T if kdim else np.zeros((r, 0))
        for j in range(min(kdim, q)):
            sols.append(_HalfLineSolution(mu, [(0, kernel[:, j].copy())]))
        missing = q - kdim
        # genuine Jordan block of the symbol: complete with x e^{mu x} chains
        for j in range(missing):
            v = kernel[:, j % max(kdim, 1)]
            rhs = -m * mu ** (m - 1) * (a_m @ v)
            w, *_ = np.linalg.lstsq(B, rhs, rcond=None)
            resid = np.linalg.norm(B @ w - rhs)
            if resid > 1e-6 * max(1.0, np.linalg.norm(rhs)):
                raise DomainError(
                    f"unresolvable symbol degeneracy at lambda={lam} (chain residual {resid:.2e})")
            sols.append(_HalfLineSolution(mu, [(1, v.copy()), (0, w)]))
    return sols


def lopatinsky_matrix(problem: BoundaryContactProblem, vertex_id: str,
                      lam: complex) -> np.ndarray:
    """Coupling rows applied to the decaying half-line solutions of each
    channel (edge end) at the vertex, frozen at the endpoint. Returns the
    R_v x (total stable dimension) matrix; rectangular shape means the
    structural part of the Lopatinsky condition already fails."""
    v = problem.graph.vertex(vertex_id)
    cond = problem.coupling(vertex_id)
    m, r = problem.order, problem.rank
    cols = []
    for q, p in enumerate(v.endpoints):
        edge = problem.graph.edge(p.edge)
        op = problem.operator(p.edge)
        x0 = 0.0 if p.end == LEFT else edge.length
        a_m = op.leading_at(x0)
        for sol in stable_solution_basis(a_m, m, lam):
            col = np.zeros(cond.rows, dtype=complex)
            for k in range(m):
                col += cond.blocks[k][:, q * r:(q + 1) * r] @ sol.jet(k, r)
            cols.append(col)
    if not cols:
        return np.zeros((cond.rows, 0), dtype=complex)
    return np.stack(cols, axis=1)


def vertex_check(problem: BoundaryContactProblem, vertex_id: str,
                 n_samples: int = ARC_SAMPLES) -> dict:
    """Minimum normalized singular value of the Lopatinsky matrix over the
    unit arc of the sector."""
    arc = problem.sector.arc(n_samples)
    min_sigma = math.inf
    max_sigma = 0.0
    argmin = None
    counts = []
    structural = None
    neutral_witness = None
    for lam in arc:
        lam = complex(lam)
        try:
            L = lopatinsky_matrix(problem, vertex_id, lam)
        except DomainError as err:
            min_sigma, argmin = 0.0, lam
            neutral_witness = str(err)
            counts.append(-1)
            continue
        counts.append(L.shape[1])
        if L.shape[0] != L.shape[1]:
            structural = {"rows": int(L.shape[0]), "stable_dim": int(L.shape[1]),
                          "lambda": [lam.real, lam.imag]}
            min_sigma, argmin = 0.0, lam
            continue
        if L.shape[0] == 0:
            continue
        sv = np.linalg.svd(L, compute_uv=False)
        sig = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
        max_sigma = max(max_sigma, sig)
        if sig < min_sigma:
            min_sigma, argmin = sig, lam
    if min_sigma is math.inf:
        min_sigma, argmin = 1.0, complex(arc[0])
    out = {"id": vertex_id, "min_sigma": float(min_sigma),
           "max_sigma": float(max_sigma),
           "argmin_lambda": [argmin.real, argmin.imag],
           "stable_counts": sorted(set(counts))}
    if structural is not None:
        out["structural_mismatch"] = structural
    if neutral_witness is not None:
        out["neutral"] = neutral_witness
    return out


@dataclass
class EllipticityVerdict:
    elliptic: bool
    interior: dict
    vertices: List[dict]
    sampling: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"interior": self.interior, "vertices": self.vertices,
                "elliptic": self.elliptic, "sampling": self.sampling}


def check(problem: BoundaryContactProblem, n_arc_samples: int = ARC_SAMPLES,
          n_x_samples: int = 8, threshold: float = SIGMA_THRESHOLD) -> EllipticityVerdict:
    """Full parameter-ellipticity verdict: interior symbol plus every vertex."""
    interior = interior_check(problem, n_x_samples)
    vertices = []
    ok = interior["ok"]
    for v in problem.graph.vertices:
        rep = vertex_check(problem, v.id, n_arc_samples)
        vertices.append(rep)
        if rep["min_sigma"] <= threshold:
            ok = False
    return EllipticityVerdict(
        elliptic=bool(ok), interior=interior, vertices=vertices,
        sampling={"n": int(n_arc_samples), "threshold": float(threshold)})
