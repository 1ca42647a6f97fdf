"""Spectra and resolvents of the realization A_C.

Per-edge fundamental systems (closed-form modal exponentials for constant
coefficients, adaptive RK for x-dependent ones) with per-solution scaling
exponents for overflow control; the secular matrix G(lambda) of all coupling
rows; eigenvalue sweeps with golden-section refinement, SVD multiplicities
and argument-principle completeness certificates; direct (A - lambda)u = f
solves by propagation of an augmented companion system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import rk
from .errors import (CertificateError, DomainError, IntegrationError,
                     NearSingularResolvent, NotElliptic, NotSymmetric,
                     WindowTooSmall)
from .graphs import (LEFT, RIGHT, BoundaryContactProblem, canonical_hash,
                     self_adjointness_report, validate)

MULT_THRESHOLD = 1e-6          # normalized singular values below this count as null
GOLDEN_REL_TOL = 1e-12
DEFAULT_OVERSAMPLE = 8.0
STEP_BOUND_C = 0.5             # numeric step <= C / (1 + |lambda|^{1/m})
_MODAL_COND_LIMIT = 1e8


def _companion(op, lam: complex, x: float) -> np.ndarray:
    """First-order companion matrix of (A - lambda) u = 0 at position x."""
    m, r = op.order, op.rank
    n = m * r
    B = np.zeros((n, n), dtype=complex)
    for k in range(m - 1):
        B[k * r:(k + 1) * r, (k + 1) * r:(k + 2) * r] = np.eye(r)
    am_inv = np.linalg.inv(op.coeff_at(m, x))
    rhs_row = B[(m - 1) * r:, :]
    for k in range(m):
        ak = op.coeff_at(k, x)
        if k == 0:
            ak = ak - lam * np.eye(r)
        rhs_row[:, k * r:(k + 1) * r] = -am_inv @ ak
    return B


def _jet_signs(m: int, r: int) -> np.ndarray:
    return np.repeat([(-1.0) ** k for k in range(m)], r)


class FundamentalSystem:
    """Identity-normalized basis solutions on one edge at one lambda.

    Solution i has left-end jets e_i; the raw right-end jets are stored as
    right_raw_stored[:, i] * exp(right_scales[i]).
    """

    def __init__(self, edge_id, lam, op, length, mode, right_raw_stored,
                 right_scales, modal=None):
        self.edge_id = edge_id
        self.lam = lam
        self.op = op
        self.length = length
        self.order = op.order
        self.rank = op.rank
        self.n = op.order * op.rank
        self.mode = mode                       # "modal" | "expm" | "numeric"
        self.right_raw_stored = right_raw_stored
        self.right_scales = right_scales
        self.modal = modal                     # (mu, V, W) eigendata of the companion

    def right_inward_stored(self) -> np.ndarray:
        return _jet_signs(self.order, self.rank)[:, None] * self.right_raw_stored

    def values_at(self, xs: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        """True solution values u(x) (shape (len(xs), r)) of sum_i coeffs_i y_i."""
        xs = np.asarray(xs, dtype=float)
        c = np.asarray(coeffs, dtype=complex)
        r = self.rank
        if self.mode == "modal":
            mu, V, W = self.modal
            beta = W @ c
            E = np.exp(np.outer(xs, mu))
            return (E * beta[None, :]) @ V[:r, :].T
        if self.mode == "expm":
            B = _companion(self.op, self.lam, 0.0)
            out = np.zeros((len(xs), r), dtype=complex)
            for j, x in enumerate(xs):
                out[j] = (scipy.linalg.expm(B * x) @ c)[:r]
            return out
        return self._values_numeric(xs, c)

    def _values_numeric(self, xs, c):
        r = self.rank
        order = np.argsort(xs)
        out = np.zeros((len(xs), r), dtype=complex)
        y = c.astype(complex)
        log_scale = 0.0
        x_cur = 0.0
        max_step = STEP_BOUND_C / (1.0 + abs(self.lam) ** (1.0 / self.order))

        x_dep = self.op.is_x_dependent
        if x_dep:
            def f(x, state):
                return _companion(self.op, self.lam, x) @ state
        else:
            B0 = _companion(self.op, self.lam, 0.0)

        for idx in order:
            x_t = float(xs[idx])
            if x_t > x_cur:
                nrm = np.linalg.norm(y)
                if nrm > math.e:
                    y = y / nrm
                    log_scale += math.log(nrm)
                if x_dep:
                    y = rk.integrate(f, x_cur, x_t, y, rtol=1e-10,
                                     max_step=max_step)
                else:
                    y = rk.integrate_linear_constant(B0, x_cur, x_t, y,
                                                     rtol=1e-10,
                                                     max_step=max_step)
                x_cur = x_t
            if log_scale > 700.0:
                raise DomainError("solution magnitude overflows on edge "
                                  f"{self.edge_id}; use scaled interfaces")
            out[idx] = y[:r] * math.exp(log_scale)
        return out


def fundamental_system(problem: BoundaryContactProblem, edge_id: str, lam: complex,
                       force_numeric: bool = False) -> FundamentalSystem:
    op = problem.operator(edge_id)
    ell = problem.graph.edge(edge_id).length
    n = op.order * op.rank
    lam = complex(lam)

    if not force_numeric and not op.is_x_dependent:
        B = _companion(op, lam, 0.0)
        mu, V = np.linalg.eig(B)
        condV = np.linalg.cond(V)
        if np.isfinite(condV) and condV < _MODAL_COND_LIMIT:
            W = np.linalg.inv(V)
            # a-priori per-column bound on the modal growth, then rebase to the
            # measured jet norm: near-defective points (lambda ~ 0) the bound
            # overshoots by orders of magnitude through mode cancellation, and
            # an overshot scale would fake a vanishing secular column
            absW = np.abs(W)
            logw = np.where(absW > 0, np.log(np.where(absW > 0, absW, 1.0)), -np.inf)
            logv = np.log(np.maximum(np.abs(V).max(axis=0), 1e-300))
            scales = np.max(mu.real[:, None] * ell + logw + logv[:, None], axis=0)
            # W_ji e^{mu_j l - s_i} assembled in log space so nothing overflows
            mag = np.exp(logw + mu.real[:, None] * ell - scales[None, :])
            phase = np.exp(1j * mu.imag * ell)[:, None]
            dirW = np.where(absW > 0, W / np.where(absW > 0, absW, 1.0), 0.0)
            right = V @ (dirW * mag * phase)
            nu = np.linalg.norm(right, axis=0)
            safe = nu > 0
            right = np.where(safe[None, :], right / np.where(safe, nu, 1.0), right)
            scales = scales + np.where(safe, np.log(np.where(safe, nu, 1.0)), 0.0)
            return FundamentalSystem(edge_id, lam, op, ell, "modal", right, scales,
                                     modal=(mu, V, W))
        # defective companion (e.g. lambda at a symbol degeneracy): matrix exponential
        right = scipy.linalg.expm(B * ell)
        return FundamentalSystem(edge_id, lam, op, ell, "expm", right, np.zeros(n))

    scales = np.zeros(n)
    max_step = STEP_BOUND_C / (1.0 + abs(lam) ** (1.0 / op.order))

    def on_step(x, Y):
        norms = np.linalg.norm(Y, axis=0)
        mask = norms > math.e
        if mask.any():
            Y = Y.copy()
            Y[:, mask] /= norms[mask]
            scales[mask] += np.log(norms[mask])
            return Y
        return Y

    if op.is_x_dependent:
        def f(x, Y):
            return _companion(op, lam, x) @ Y

        Y = rk.integrate(f, 0.0, ell, np.eye(n, dtype=complex), rtol=1e-10,
                         max_step=max_step, on_step=on_step)
    else:
        B0 = _companion(op, lam, 0.0)
        Y = rk.integrate_linear_constant(B0, 0.0, ell, np.eye(n, dtype=complex),
                                         rtol=1e-10, max_step=max_step,
                                         on_step=on_step)
    return FundamentalSystem(edge_id, lam, op, ell, "numeric", Y, scales.copy())


# ---------------------------------------------------------------------------
# secular matrix
# ---------------------------------------------------------------------------

@dataclass
class SecularMatrix:
    lam: complex
    stored: np.ndarray            # true G = diag(e^{row_scales}) @ stored @ diag(e^{col_scales})
    col_scales: np.ndarray
    row_scales: np.ndarray
    col_edges: List[Tuple[str, int]]
    systems: Dict[str, FundamentalSystem]

    def sigma_values(self) -> np.ndarray:
        # row and column scales are already factored out of `stored`
        # (two-sided equilibration), so a genuinely tiny singular value (an
        # eigenfunction hitting every condition) must stay tiny while the
        # rest stay O(1)
        return np.linalg.svd(self.stored, compute_uv=False)

    def sigma_min_hat(self) -> float:
        sv = self.sigma_values()
        return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0

    def slogdet(self) -> Tuple[complex, float]:
        """(unit-modulus phase, log|det|) of the true matrix."""
        sign, logabs = np.linalg.slogdet(self.stored)
        return sign, float(logabs + self.col_scales.sum() + self.row_scales.sum())

    def null_coefficients(self, threshold: float = MULT_THRESHOLD) -> np.ndarray:
        """Columns are true coefficient vectors spanning ker G (unnormalized)."""
        u, sv, vh = np.linalg.svd(self.stored)
        nulls = [i for i in range(len(sv)) if sv[i] < threshold * sv[0]]
        vecs = [vh[i].conj() * np.exp(-self.col_scales) for i in nulls]
        return np.stack(vecs, axis=1) if vecs else np.zeros((self.stored.shape[1], 0))


def _assemble_secular(problem, systems: Dict[str, FundamentalSystem], lam) -> SecularMatrix:
    m, r = problem.order, problem.rank
    n = m * r
    g = problem.graph
    n_rows = problem.total_rows
    col0 = {}
    col_edges = []
    for i, e in enumerate(g.edges):
        col0[e.id] = i * n
        col_edges.extend((e.id, j) for j in range(n))
    n_cols = n * len(g.edges)
    col_scales = np.zeros(n_cols)
    for e in g.edges:
        fs = systems[e.id]
        col_scales[col0[e.id]:col0[e.id] + n] = np.maximum(fs.right_scales, 0.0)

    G = np.zeros((n_rows, n_cols), dtype=complex)
    row0 = 0
    for v in g.vertices:
        cond = problem.coupling(v.id)
        rows = slice(row0, row0 + cond.rows)
        for q, p in enumerate(v.endpoints):
            fs = systems[p.edge]
            base = col0[p.edge]
            if p.end == LEFT:
                # left jets are the identity basis
                for i in range(n):
                    k, s = divmod(i, r)
                    G[rows, base + i] += (cond.blocks[k][:, q * r + s]
                                          * math.exp(-col_scales[base + i]))
            else:
                jin = fs.right_inward_stored()
                for i in range(n):
                    fac = math.exp(fs.right_scales[i] - col_scales[base + i])
                    acc = np.zeros(cond.rows, dtype=complex)
                    for k in range(m):
                        acc += cond.blocks[k][:, q * r:(q + 1) * r] @ jin[k * r:(k + 1) * r, i]
                    G[rows, base + i] += fac * acc
        row0 += cond.rows
    row_norm = np.max(np.abs(G), axis=1)
    safe = row_norm > 0
    row_scales = np.where(safe, np.log(np.where(safe, row_norm, 1.0)), 0.0)
    G = G / np.where(safe, row_norm, 1.0)[:, None]
    return SecularMatrix(lam=lam, stored=G, col_scales=col_scales,
                         row_scales=row_scales, col_edges=col_edges,
                         systems=systems)


def secular_matrix(problem: BoundaryContactProblem, lam: complex,
                   force_numeric: bool = False) -> SecularMatrix:
    lam = complex(lam)
    systems = {e.id: fundamental_system(problem, e.id, lam, force_numeric)
               for e in problem.graph.edges}
    return _assemble_secular(problem, systems, lam)


def multiplicity(problem: BoundaryContactProblem, lam: complex,
                 force_numeric: bool = False,
                 threshold: float = MULT_THRESHOLD) -> int:
    """Number of secular singular values below threshold * sigma_max.

    The secular matrix is stored in two-sided equilibrated form (row and
    column scales factored out), so away from an eigenvalue every singular
    value stays O(1) even at large |lambda| or deep in a spectral gap, and
    at an eigenvalue exactly the null directions collapse.
    """
    sv = secular_matrix(problem, lam, force_numeric).sigma_values()
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv < threshold * sv[0]))


# ---------------------------------------------------------------------------
# eigenvalue sweep
# ---------------------------------------------------------------------------

def _golden_min(f, a: float, b: float, rel_tol: float = GOLDEN_REL_TOL,
                max_iter: int = 200) -> Tuple[float, float]:
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rel_tol * max(1.0, abs(a), abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    xm = 0.5 * (a + b)
    return xm, min(fc, fd)


@dataclass
class Spectrum:
    digest: str
    eigenvalues: List[Tuple[float, int]]
    window: Tuple[float, float]
    certificate: List[dict]
    params: dict
    order: int
    total_length: float
    problem: Optional[BoundaryContactProblem] = field(default=None, repr=False)

    def flat(self) -> np.ndarray:
        if not self.eigenvalues:
            return np.zeros(0)
        return np.repeat([l for l, _ in self.eigenvalues],
                         [q for _, q in self.eigenvalues]).astype(float)

    @property
    def count(self) -> int:
        return int(sum(q for _, q in self.eigenvalues))

    def truncated(self, lam_hi: float) -> "Spectrum":
        eigs = [(l, q) for l, q in self.eigenvalues if l <= lam_hi]
        return Spectrum(self.digest, eigs, (self.window[0], min(self.window[1], lam_hi)),
                        [c for c in self.certificate if c["a"] < lam_hi],
                        self.params, self.order, self.total_length, self.problem)


def default_lambda_lo(problem: BoundaryContactProblem) -> float:
    strength = 0.0
    for v in problem.graph.vertices:
        M0 = problem.coupling(v.id).blocks[0]
        if M0.size:
            strength = max(strength, float(np.linalg.norm(M0, 2)))
    return -((1.0 + strength) ** 2)


def _local_minima(xs, ys, trigger=0.9):
    out = []
    for i in range(len(xs)):
        left = ys[i - 1] if i > 0 else math.inf
        right = ys[i + 1] if i + 1 < len(xs) else math.inf
        if ys[i] <= left and ys[i] <= right and ys[i] < trigger:
            a = xs[i - 1] if i > 0 else xs[i]
            b = xs[i + 1] if i + 1 < len(xs) else xs[i]
            if a < b:
                out.append((a, b))
    return out


def _collect_candidates(problem, lam_a, lam_b, dk, force_numeric, mult_threshold):
    """Locate sigma_min valleys in [lam_a, lam_b]; returns refined eigenvalues."""
    m = problem.order

    def sig_of_lam(lam):
        return secular_matrix(problem, lam, force_numeric).sigma_min_hat()

    found = []

    if lam_a < 0:
        neg_hi = min(0.0, lam_b)
        grid = np.linspace(lam_a, neg_hi, 65)
        vals = [sig_of_lam(x) for x in grid]
        for a, b in _local_minima(grid, vals):
            lam_star, sig = _golden_min(sig_of_lam, a, b)
            if sig < mult_threshold:
                found.append(lam_star)

    if lam_b > 0:
        k_a = max(0.0, lam_a) ** (1.0 / m) if lam_a > 0 else 0.0
        k_b = lam_b ** (1.0 / m)
        n_pts = max(8, int(math.ceil((k_b - k_a) / dk)) + 1)
        grid = np.linspace(k_a, k_b, n_pts)
        vals = [sig_of_lam(k ** m) for k in grid]
        for a, b in _local_minima(grid, vals):
            k_star, sig = _golden_min(lambda k: sig_of_lam(k ** m), a, b)
            if sig < mult_threshold:
                found.append(k_star ** m)
    return found


def _merge_eigs(lams: Sequence[float], scale: float) -> List[float]:
    out: List[float] = []
    for lam in sorted(lams):
        if out and abs(lam - out[-1]) <= 1e-9 * max(1.0, abs(lam), scale):
            continue
        out.append(lam)
    return out


def _logdet(problem, z, force_numeric) -> Tuple[float, float]:
    sign, logabs = secular_matrix(problem, z, force_numeric).slogdet()
    return float(np.angle(sign)), float(logabs)


def _wrap(d):
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def winding_count(problem, a, b, h, force_numeric=False, max_pts=6000) -> Optional[int]:
    """Argument-principle count of det G zeros inside the rectangle
    [a,b] x [-h,h], by adaptive tracking of the complex logarithm along the
    boundary.

    A segment's phase increment is only accepted after evaluating its
    midpoint: both halves must show a small wrapped phase step and a small
    log-magnitude step. Endpoint-only tests are unsound -- a segment passing
    symmetrically under a zero advances by nearly a full turn while its
    endpoint phases and magnitudes agree -- but the midpoint of such a
    segment sits under the zero and exposes the hidden half-turn."""
    budget = [max_pts]

    def ld(z):
        if budget[0] <= 0:
            raise _WindingBudget()
        budget[0] -= 1
        return _logdet(problem, z, force_numeric)

    def segment(z0, l0, z1, l1, depth):
        zm = 0.5 * (z0 + z1)
        lm = ld(zm)
        d0 = _wrap(lm[0] - l0[0])
        d1 = _wrap(l1[0] - lm[0])
        if (abs(d0) <= 0.5 * math.pi and abs(d1) <= 0.5 * math.pi
                and abs(lm[1] - l0[1]) <= 1.0 and abs(l1[1] - lm[1]) <= 1.0):
            return d0 + d1
        if depth <= 0:
            raise _WindingBudget()
        return (segment(z0, l0, zm, lm, depth - 1)
                + segment(zm, lm, z1, l1, depth - 1))

    corners = [complex(a, -h), complex(b, -h), complex(b, h), complex(a, h)]
    pts: List[complex] = []
    for i in range(4):
        z0, z1 = corners[i], corners[(i + 1) % 4]
        for t in np.linspace(0.0, 1.0, 9)[:-1]:
            pts.append(z0 + t * (z1 - z0))
    try:
        logs = [ld(z) for z in pts]
        total = 0.0
        for i in range(len(pts)):
            j = (i + 1) % len(pts)
            total += segment(pts[i], logs[i], pts[j], logs[j], 48)
    except _WindingBudget:
        return None
    w = total / (2.0 * math.pi)
    wi = round(w)
    if abs(w - wi) <= 1e-6:
        return int(wi)
    return None


class _WindingBudget(Exception):
    pass


def eigenvalues(problem: BoundaryContactProblem, lam_hi: float,
                lam_lo: Optional[float] = None,
                oversample: float = DEFAULT_OVERSAMPLE,
                force_numeric: bool = False,
                mult_threshold: float = MULT_THRESHOLD,
                certify: bool = True, max_retries: int = 3,
                skip_admissibility: bool = False) -> Spectrum:
    """Sweep [lam_lo, lam_hi] for eigenvalues of a symmetric elliptic problem."""
    if not math.isfinite(lam_hi):
        raise DomainError("lambda window must be finite")
    if not skip_admissibility:
        rep = validate(problem)
        if not rep.ok:
            raise DomainError("invalid problem: " + "; ".join(rep.errors))
        from . import ellipticity as ell
        verdict = ell.check(problem)
        if not verdict.elliptic:
            raise NotElliptic("problem is not parameter-elliptic in its sector")
        sa = self_adjointness_report(problem)
        if not sa["symmetric"]:
            raise NotSymmetric("non-symmetric problem: eigenvalue sweep rejected")

    m = problem.order
    L = problem.graph.total_length
    if lam_lo is None:
        lam_lo = default_lambda_lo(problem)
    if lam_lo >= lam_hi:
        raise DomainError("need lam_lo < lam_hi")
    dk = math.pi / (L * oversample)

    lams = _collect_candidates(problem, lam_lo, lam_hi, dk, force_numeric, mult_threshold)
    lams = _merge_eigs(lams, abs(lam_hi))
    # Weyl sanity bound: the secular singular value at distance ~e^{-k ell}
    # from an eigenvalue sinks below double-precision noise once k ell is
    # large (only operators of order >= 4 have decaying real-axis modes), and
    # detection then returns noise minima everywhere. Catch that saturation
    # instead of emitting garbage.
    n_weyl = L * max(lam_hi, 0.0) ** (1.0 / m) / math.pi
    if len(lams) > 3 * n_weyl + 12 * len(problem.graph.edges) + 12:
        raise CertificateError(
            f"eigenvalue detection saturated: {len(lams)} candidates against a "
            f"Weyl estimate of {n_weyl:.0f}; the window end {lam_hi:g} is past "
            "the double-precision envelope for this operator (reduce lambda_hi)")
    eigs = [(lam, multiplicity(problem, lam, force_numeric, mult_threshold))
            for lam in lams]
    eigs = [(lam, q) for lam, q in eigs if q >= 1]

    # nudge the certified window off any eigenvalue sitting on its edge
    scale = max(1.0, abs(lam_hi))
    lo_cert, hi_cert = lam_lo, lam_hi
    for lam, _ in eigs:
        if abs(lam - hi_cert) < 1e-6 * scale:
            hi_cert = lam - 1e-5 * scale
        if abs(lam - lo_cert) < 1e-6 * scale:
            lo_cert = lam - 1e-5 * scale
    eigs = [(lam, q) for lam, q in eigs if lo_cert < lam < hi_cert]

    certificate = []
    if certify:
        eigs, certificate = _certify(problem, eigs, lo_cert, hi_cert, dk,
                                     force_numeric, mult_threshold, max_retries)

    params = {"oversample": oversample, "force_numeric": bool(force_numeric),
              "mult_threshold": mult_threshold, "golden_rel_tol": GOLDEN_REL_TOL,
              "certified": bool(certify)}
    return Spectrum(digest=canonical_hash(problem), eigenvalues=eigs,
                    window=(lo_cert, hi_cert), certificate=certificate,
                    params=params, order=m, total_length=L, problem=problem)


def _certify(problem, eigs, lo, hi, dk, force_numeric, mult_threshold, max_retries):
    """Blockwise contour counts; refine the sweep on mismatch."""
    block_size = 6
    certificate = []
    eigs = sorted(eigs)
    idx = 0
    boundaries = [lo]
    while idx < len(eigs):
        j = min(idx + block_size, len(eigs))
        if j < len(eigs):
            boundaries.append(0.5 * (eigs[j - 1][0] + eigs[j][0]))
        idx = j
    boundaries.append(hi)

    for bi in range(len(boundaries) - 1):
        a, b = boundaries[bi], boundaries[bi + 1]
        if b <= a:
            continue
        inside = [(l, q) for l, q in eigs if a < l <= b] if bi < len(boundaries) - 2 \
            else [(l, q) for l, q in eigs if a < l < b]
        expected = sum(q for _, q in inside)
        count = None
        attempt = 0
        while attempt <= max_retries:
            h = 0.5 * (b - a)
            count = winding_count(problem, a, b, h, force_numeric)
            if count is None:
                count = winding_count(problem, a, b, 1.37 * h, force_numeric)
            if count == expected:
                break
            # missed or spurious roots: re-sweep this block on a finer grid
            attempt += 1
            fresh = _collect_candidates(problem, a, b, dk / 4 ** attempt,
                                        force_numeric, mult_threshold)
            known = [l for l, _ in eigs if a < l < b]
            merged = _merge_eigs(known + fresh, abs(hi))
            block = [(lam, multiplicity(problem, lam, force_numeric, mult_threshold))
                     for lam in merged]
            block = [(l, q) for l, q in block if q >= 1]
            eigs = sorted([(l, q) for l, q in eigs if not (a < l < b)] + block)
            inside = [(l, q) for l, q in eigs if a < l <= b]
            expected = sum(q for _, q in inside)
        if count != expected:
            raise CertificateError(f"possible missed eigenvalue in [{a:.8g},{b:.8g}] "
                                   f"(contour count {count}, found {expected})")
        certificate.append({"a": float(a), "b": float(b), "count": int(count),
                            "expected": int(expected)})
    return sorted(eigs), certificate


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------

def resolvent_norm(spectrum: Spectrum, lam: complex) -> float:
    """1 / dist(lambda, computed spectrum united with the uncertified tails
    (-inf, lam_lo] and [lam_hi, inf))."""
    lam = complex(lam)
    lo, hi = spectrum.window
    dists = [abs(lam - l) for l, _ in spectrum.eigenvalues]
    d_right = abs(lam.imag) if lam.real >= hi else abs(lam - hi)
    d_left = abs(lam.imag) if lam.real <= lo else abs(lam - lo)
    d = min(dists + [d_right, d_left])
    if d <= 0.0:
        if abs(lam.imag) == 0.0 and (lam.real >= hi or lam.real <= lo):
            raise WindowTooSmall(f"window too small: lambda={lam} in the uncertain tail")
        raise NearSingularResolvent(f"lambda={lam} is in the computed spectrum")
    return 1.0 / d


@dataclass
class SolveResult:
    xs: Dict[str, np.ndarray]
    u: Dict[str, np.ndarray]                  # per edge, (n_samples, r)
    coupling_residual: float
    interior_residual: float


def _fd_weights(offsets: np.ndarray, deriv: int) -> np.ndarray:
    """Finite-difference weights on the given integer offsets (unit spacing)."""
    n = len(offsets)
    V = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(V, rhs)


def solve_resolvent(problem: BoundaryContactProblem, lam: complex,
                    rhs: Dict[str, np.ndarray],
                    sigma_threshold: float = 1e-8) -> SolveResult:
    """Solve (A - lambda) u = f with the coupling conditions, f sampled on a
    uniform per-edge grid. Particular solution by propagating the augmented
    companion system, correction through the secular matrix."""
    lam = complex(lam)
    m, r = problem.order, problem.rank
    n = m * r
    g = problem.graph

    xs_of, f_of = {}, {}
    for e in g.edges:
        if e.id not in rhs:
            raise DomainError(f"missing right-hand side samples for edge {e.id}")
        fv = np.asarray(rhs[e.id], dtype=complex)
        if fv.ndim == 1:
            fv = fv[:, None]
        if fv.shape[1] != r or fv.shape[0] < max(9, 2 * m + 3):
            raise DomainError(f"edge {e.id}: rhs must be (n_samples >= 9, rank) shaped")
        f_of[e.id] = fv
        xs_of[e.id] = np.linspace(0.0, e.length, fv.shape[0])

    # per edge: propagate S' = [[B, F],[0,0]] S, S(0) = I, with column rescaling
    states, scale_hist, systems, M_of = {}, {}, {}, {}
    for e in g.edges:
        op = problem.operator(e.id)
        xs = xs_of[e.id]
        fv = f_of[e.id]
        am_inv_f = np.zeros((len(xs), r), dtype=complex)
        for i, x in enumerate(xs):
            am_inv_f[i] = np.linalg.inv(op.coeff_at(m, x)) @ fv[i]

        def forcing(x, xs=xs, vals=am_inv_f):
            # sliding 8-point Lagrange interpolation of a_m^{-1} f between
            # the sample nodes (order h^8, so the rhs representation is not
            # the accuracy bottleneck of the solve)
            npt = min(8, len(xs))
            i = min(max(int(np.searchsorted(xs, x) - 1), 0), len(xs) - 2)
            lo = max(0, min(i - (npt // 2 - 1), len(xs) - npt))
            pts = xs[lo:lo + npt]
            out = np.zeros(vals.shape[1], dtype=complex)
            for a in range(npt):
                w = 1.0
                for bidx in range(npt):
                    if bidx != a:
                        w *= (x - pts[bidx]) / (pts[a] - pts[bidx])
                out += w * vals[lo + a]
            return out

        aug = np.zeros((n + 1, n + 1), dtype=complex)
        x_dep = op.is_x_dependent
        if not x_dep:
            aug[:n, :n] = _companion(op, lam, 0.0)

        def M(x, op=op, forcing=forcing, aug=aug):
            if x_dep:
                aug[:n, :n] = _companion(op, lam, x)
            aug[(m - 1) * r:n, n] = forcing(x)
            return aug

        M_of[e.id] = M

        scales = np.zeros(n + 1)
        max_step = STEP_BOUND_C / (1.0 + abs(lam) ** (1.0 / m))

        def f_ode(x, S):
            return M(x) @ S

        def on_step(x, S):
            norms = np.linalg.norm(S, axis=0)
            mask = norms > math.e
            if mask.any():
                S = S.copy()
                S[:, mask] /= norms[mask]
                scales[mask] += np.log(norms[mask])
                return S
            return S

        S = np.eye(n + 1, dtype=complex)
        hist = [(S.copy(), scales.copy())]
        for i in range(len(xs) - 1):
            S = rk.integrate(f_ode, xs[i], xs[i + 1], S, rtol=1e-13,
                             max_step=max_step, on_step=on_step)
            hist.append((S.copy(), scales.copy()))
        states[e.id] = hist
        scale_hist[e.id] = scales.copy()
        fs = FundamentalSystem(e.id, lam, op, e.length, "numeric",
                               S[:n, :n], scales[:n].copy())
        systems[e.id] = fs

    sec = _assemble_secular(problem, systems, lam)
    if sec.sigma_min_hat() < sigma_threshold:
        raise NearSingularResolvent(f"near-singular resolvent at lambda={lam}")

    # particular-solution jets at both ends (true values); the column scale
    # cancels in the ratio, so never exponentiate it
    def particular_state(eid, idx):
        S, sc = states[eid][idx]
        w = S[n, n]
        if abs(w) < 1e-250:
            raise IntegrationError("augmented forcing column degenerated")
        return S[:n, n] / w

    rows_rhs = np.zeros(problem.total_rows, dtype=complex)
    row0 = 0
    signs = _jet_signs(m, r)
    for v in g.vertices:
        cond = problem.coupling(v.id)
        for q, p in enumerate(v.endpoints):
            idx = 0 if p.end == LEFT else len(xs_of[p.edge]) - 1
            jets = particular_state(p.edge, idx)
            if p.end == RIGHT:
                jets = jets * signs
            for k in range(m):
                rows_rhs[row0:row0 + cond.rows] += (
                    cond.blocks[k][:, q * r:(q + 1) * r] @ jets[k * r:(k + 1) * r])
        row0 += cond.rows
    beta, *_ = np.linalg.lstsq(sec.stored, -rows_rhs * np.exp(-sec.row_scales),
                               rcond=None)

    u_of = {}
    col0 = 0
    for e in g.edges:
        xs = xs_of[e.id]
        vals = np.zeros((len(xs), r), dtype=complex)
        for i in range(len(xs)):
            S, sc = states[e.id][i]
            yp = particular_state(e.id, i)
            vals[i] = yp[:r]
            for j in range(n):
                fac = beta[col0 + j] * np.exp(sc[j] - sec.col_scales[col0 + j])
                vals[i] += fac * S[:r, j]
        u_of[e.id] = vals
        col0 += n

    # residual report
    coup_res = _coupling_residual(problem, systems, states, beta, sec, u_of, xs_of)
    int_res = _interior_residual(problem, lam, states, M_of, beta, sec, f_of, xs_of)
    return SolveResult(xs=xs_of, u=u_of, coupling_residual=coup_res,
                       interior_residual=int_res)


def _coupling_residual(problem, systems, states, beta, sec, u_of, xs_of):
    m, r = problem.order, problem.rank
    n = m * r
    g = problem.graph
    signs = _jet_signs(m, r)
    worst = 0.0
    col0_of = {e.id: i * n for i, e in enumerate(g.edges)}
    for v in g.vertices:
        cond = problem.coupling(v.id)
        res = np.zeros(cond.rows, dtype=complex)
        scale = 0.0
        for q, p in enumerate(v.endpoints):
            idx = 0 if p.end == LEFT else len(xs_of[p.edge]) - 1
            S, sc = states[p.edge][idx]
            jets = S[:n, n] / S[n, n]
            col0 = col0_of[p.edge]
            for j in range(n):
                jets = jets + beta[col0 + j] * np.exp(sc[j] - sec.col_scales[col0 + j]) * S[:n, j]
            if p.end == RIGHT:
                jets = jets * signs
            scale = max(scale, float(np.abs(jets).max()))
            for k in range(m):
                res += cond.blocks[k][:, q * r:(q + 1) * r] @ jets[k * r:(k + 1) * r]
        worst = max(worst, float(np.abs(res).max()) / max(scale, 1.0))
    return worst


def _interior_residual(problem, lam, states, M_of, beta, sec, f_of, xs_of):
    """max |A u - lambda u - f| / scale at interior check points.

    Orders 0..m-1 come from the propagated jets; only the top derivative is
    reconstructed, by an order-8 finite difference of the (m-1)-jet over a
    stencil of width ~0.1 wavelengths, each stencil value obtained by a short
    hop integration of the combined (particular + beta . homogeneous) jet
    vector from the nearest sample node."""
    m, r = problem.order, problem.rank
    n = m * r
    offsets = np.arange(-4.0, 5.0)
    w_fd = _fd_weights(offsets, 1)
    max_step = STEP_BOUND_C / (1.0 + abs(lam) ** (1.0 / m))
    worst_num, worst_den = 0.0, 1e-300
    col0 = 0
    for e in problem.graph.edges:
        op = problem.operator(e.id)
        xs, fv = xs_of[e.id], f_of[e.id]
        hist = states[e.id]
        M = M_of[e.id]

        k_eff = 1.0 + abs(lam) ** (1.0 / m)
        am = max(float(np.abs(op.coeff_at(m, x)).max()) for x in xs[::8])
        for k in range(m):
            ak = max(float(np.abs(op.coeff_at(k, x)).max()) for x in xs[::8])
            if ak > 0:
                k_eff = max(k_eff, (ak / am) ** (1.0 / (m - k)))
        delta = min(0.12 / k_eff, e.length / 40.0)

        def combined(idx, col0=col0, hist=hist):
            S, sc = hist[idx]
            y = S[:n, n] / S[n, n]
            for j in range(n):
                y = y + (beta[col0 + j]
                         * np.exp(sc[j] - sec.col_scales[col0 + j]) * S[:n, j])
            return y

        def stencil_jets(xc, xs=xs, M=M, combined=combined):
            # all stencil values hop from one shared source state so that the
            # base propagation error is common mode and cancels in the
            # finite difference
            targets = xc + offsets * delta
            js = int(np.clip(np.searchsorted(xs, targets[0]) - 1,
                             0, len(xs) - 1))
            y = np.concatenate([combined(js), [1.0 + 0.0j]])
            xcur = float(xs[js])
            out = []
            for xt in targets:
                if xt - xcur > 1e-14 * e.length:
                    y = rk.integrate(lambda t, z: M(t) @ z, xcur, xt, y,
                                     rtol=1e-13, max_step=max_step)
                    xcur = float(xt)
                out.append(y[:n].copy())
            return out

        lo_x, hi_x = 4.0 * delta, e.length - 4.0 * delta
        checks = [i for i in np.unique(
                      np.round(np.linspace(1, len(xs) - 2, 5)).astype(int))
                  if lo_x <= xs[i] <= hi_x]
        for i in checks:
            xc = float(xs[i])
            sj = stencil_jets(xc)
            jc = sj[len(offsets) // 2]
            top = np.zeros(r, dtype=complex)
            for s in range(len(offsets)):
                top += w_fd[s] * sj[s][(m - 1) * r: m * r]
            top /= delta
            acc = op.coeff_at(m, xc) @ top
            den = float(np.abs(acc).max())
            for k in range(m):
                tk = op.coeff_at(k, xc) @ jc[k * r:(k + 1) * r]
                acc += tk
                den = max(den, float(np.abs(tk).max()))
            resid = acc - lam * jc[:r] - fv[i]
            den = max(den, float(np.abs(fv[i]).max()),
                      abs(lam) * float(np.abs(jc[:r]).max()))
            worst_num = max(worst_num, float(np.abs(resid).max()))
            worst_den = max(worst_den, den)
        col0 += n
    return worst_num / worst_den


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

def eigenfunction_edge_masses(problem: BoundaryContactProblem, lam_k: float,
                              force_numeric: bool = False,
                              threshold: float = MULT_THRESHOLD) -> Dict[str, float]:
    """L2 mass per edge of the orthonormalized eigenspace at lam_k; the values
    sum to the multiplicity."""
    sec = secular_matrix(problem, lam_k, force_numeric)
    coeffs = sec.null_coefficients(threshold)
    q = coeffs.shape[1]
    if q == 0:
        return {e.id: 0.0 for e in problem.graph.edges}
    m = problem.order
    g = problem.graph

    per_edge_vals = {}
    quads = {}
    for i, e in enumerate(g.edges):
        fs = sec.systems[e.id]
        k_scale = abs(lam_k) ** (1.0 / m) if lam_k != 0 else 0.0
        n_nodes = int(min(2048, max(48, 8 + 4 * math.ceil(k_scale * e.length))))
        nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
        x = 0.5 * e.length * (nodes + 1.0)
        w = 0.5 * e.length * weights
        quads[e.id] = w
        block = coeffs[i * fs.n:(i + 1) * fs.n, :]
        vals = np.stack([fs.values_at(x, block[:, j]) for j in range(q)], axis=2)
        per_edge_vals[e.id] = vals              # (n_nodes, r, q)

    gram = np.zeros((q, q), dtype=complex)
    for e in g.edges:
        vals, w = per_edge_vals[e.id], quads[e.id]
        gram += np.einsum("xri,xrj,x->ij", np.conj(vals), vals, w)
    evals, evecs = np.linalg.eigh(gram)
    keep = evals > 1e-12 * evals.max()
    T = evecs[:, keep] / np.sqrt(evals[keep])[None, :]

    masses = {}
    for e in g.edges:
        vals, w = per_edge_vals[e.id], quads[e.id]
        psi = np.einsum("xrq,qj->xrj", vals, T)
        masses[e.id] = float(np.einsum("xrj,xrj,x->", np.conj(psi), psi, w).real)
    return masses
