"""Trace asymptotics on top of a computed Spectrum: heat traces with tail
bounds, heat-invariant fits, resolvent traces along rays, zeta continuation
with poles/residues, and Weyl-law fits.

Everything beyond the certified window uses one flat-index tail model
lambda_j ~ (a j + b)^m with a = pi/L fixed by the Weyl density and b the
mean level offset; sums over the model tail are completed with midpoint
Euler-Maclaurin corrections, whose exact small-t expansion feeds the zeta
continuation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special

from .errors import DomainError, WindowTooSmall, ZetaUndefined
from .spectra import Spectrum, eigenfunction_edge_masses

TAIL_FRACTION_LIMIT = 0.01      # raw heat trace refuses windows worse than this
FIT_COND_LIMIT = 1e10
_QUAD_TOL = 1e-11


# ---------------------------------------------------------------------------
# flat-index tail model
# ---------------------------------------------------------------------------

@dataclass
class FlatIndexModel:
    a: float          # k-density slope, pi / L_total
    b: float          # mean level offset
    count: int        # eigenvalues computed (with multiplicity)
    cut: float        # c = a (K + 1/2) + b, the tail starting abscissa
    sum0: float
    sum1: float
    sum2: float
    mismatch: float   # max |x_j - (a j + b)| over the last fitted points

    def x_next(self, j: int) -> float:
        return self.a * j + self.b


def flat_index_model(spectrum: Spectrum) -> FlatIndexModel:
    flat = np.sort(spectrum.flat())
    K = len(flat)
    if K < 8:
        raise WindowTooSmall("too few eigenvalues to model the spectral tail "
                             f"(have {K}, need >= 8)")
    m = spectrum.order
    x = np.sign(flat) * np.abs(flat) ** (1.0 / m)
    j = np.arange(1, K + 1, dtype=float)
    a = math.pi / spectrum.total_length
    top = slice(K // 2, K)
    b = float(np.mean(x[top] - a * j[top]))
    mismatch = float(np.max(np.abs(x[-10:] - (a * j[-10:] + b))))
    c = a * (K + 0.5) + b
    return FlatIndexModel(a=a, b=b, count=K, cut=c,
                          sum0=float(K), sum1=float(flat.sum()),
                          sum2=float((flat ** 2).sum()), mismatch=mismatch)


def _model_of(spectrum: Spectrum) -> FlatIndexModel:
    cache = spectrum.__dict__.setdefault("_asym_cache", {})
    if "model" not in cache:
        cache["model"] = flat_index_model(spectrum)
    return cache["model"]


# ---------------------------------------------------------------------------
# heat trace
# ---------------------------------------------------------------------------

@dataclass
class HeatTrace:
    ts: np.ndarray
    values: np.ndarray
    tail_bounds: np.ndarray
    phi: Optional[Dict[str, float]] = None


def _phi_weights(spectrum: Spectrum, phi: Dict[str, float]) -> np.ndarray:
    """Weight sum_e phi_e * mass_e for each distinct eigenvalue block."""
    if spectrum.problem is None:
        raise DomainError("phi weighting needs the originating problem attached")
    cache = spectrum.__dict__.setdefault("_mass_cache", {})
    out = np.zeros(len(spectrum.eigenvalues))
    for i, (lam, _) in enumerate(spectrum.eigenvalues):
        if lam not in cache:
            cache[lam] = eigenfunction_edge_masses(
                spectrum.problem, lam,
                force_numeric=spectrum.params.get("force_numeric", False))
        masses = cache[lam]
        out[i] = sum(phi.get(e, 0.0) * masses[e] for e in masses)
    return out


def _block_weights(spectrum, phi):
    if phi is None:
        return np.array([float(q) for _, q in spectrum.eigenvalues])
    return _phi_weights(spectrum, phi)


def heat_trace(spectrum: Spectrum, ts: Sequence[float],
               phi: Optional[Dict[str, float]] = None,
               tail_fraction: float = TAIL_FRACTION_LIMIT) -> HeatTrace:
    """Truncated heat trace over the certified window, with the tail bound
    (L/(m pi)) t^{-1/m} Gamma_up(1/m, t lam_hi) + 2 exp(-t lam_hi). Raises
    WindowTooSmall when the bound exceeds tail_fraction of the value."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts <= 0):
        raise DomainError("heat trace needs t > 0")
    lams = np.array([l for l, _ in spectrum.eigenvalues])
    w = _block_weights(spectrum, phi)
    values = np.array([float(np.sum(w * np.exp(-t * lams))) for t in ts])

    m = spectrum.order
    lam_hi = spectrum.window[1]
    L = spectrum.total_length
    gam = scipy.special.gamma(1.0 / m)
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    bounds = np.array([
        scale * ((L / (m * math.pi)) * t ** (-1.0 / m)
                 * scipy.special.gammaincc(1.0 / m, t * lam_hi) * gam
                 + 2.0 * math.exp(-t * lam_hi))
        for t in ts])
    bad = bounds > tail_fraction * np.maximum(np.abs(values), 1e-300)
    if np.any(bad):
        t_bad = ts[np.argmax(bad)]
        raise WindowTooSmall(
            f"window too small: heat tail bound exceeds {tail_fraction:.0%} "
            f"of the trace at t={t_bad:.6g}; extend lambda_hi")
    return HeatTrace(ts=ts, values=values, tail_bounds=bounds, phi=dict(phi) if phi else None)


def _heat_tail_model(model: FlatIndexModel, m: int, t: float) -> float:
    """Euler-Maclaurin completion of sum_{j>K} exp(-t (a j + b)^m)."""
    a, c = model.a, model.cut
    if m == 2:
        integral = math.sqrt(math.pi) * math.erfc(math.sqrt(t) * c) / (2.0 * a * math.sqrt(t))
    else:
        integral, _ = scipy.integrate.quad(
            lambda x: math.exp(-t * (a * x + model.b) ** m),
            model.count + 0.5, np.inf, epsabs=1e-14, epsrel=1e-12)
    damp = math.exp(-t * c ** m)
    fp = -t * m * a * c ** (m - 1) * damp
    fppp = (-t * m * (m - 1) * (m - 2) * a ** 3 * c ** (m - 3)
            + 3.0 * t ** 2 * m ** 2 * (m - 1) * a ** 3 * c ** (2 * m - 3)
            - t ** 3 * m ** 3 * a ** 3 * c ** (3 * m - 3)) * damp
    return integral + fp / 24.0 - 7.0 * fppp / 5760.0


def completed_heat_trace(spectrum: Spectrum, ts: Sequence[float]) -> np.ndarray:
    """Truncated sum plus the model tail; accurate at small t far beyond the
    window, used for fitting and zeta work (values, not bounds)."""
    ts = np.asarray(ts, dtype=float)
    lams = np.array([l for l, _ in spectrum.eigenvalues])
    w = np.array([float(q) for _, q in spectrum.eigenvalues])
    model = _model_of(spectrum)
    m = spectrum.order
    return np.array([float(np.sum(w * np.exp(-t * lams)))
                     + _heat_tail_model(model, m, t) for t in ts])


@dataclass
class AsymptoticFit:
    """Expansion-coefficient fit.

    `misfit` is the worst pointwise deviation of the fitted model over the
    window; `residual` is the coefficient-scale uncertainty it induces
    (misfit amplified by the design conditioning) — coefficient shifts under
    reasonable window changes stay within a few `residual`.
    """
    exponents: List[float]
    coefficients: np.ndarray
    residual: float
    cond: float
    window: Tuple[float, float]
    misfit: float = 0.0

    @property
    def alphas(self) -> np.ndarray:
        return self.coefficients


def _default_heat_grid(spectrum: Spectrum, n: int = 60) -> np.ndarray:
    lam_hi = spectrum.window[1]
    t_min = 10.0 / lam_hi
    t_max = min(0.08, t_min * 10 ** 2.5)
    if t_max <= t_min:
        t_max = 4.0 * t_min
    return np.geomspace(t_min, t_max, n)


def fit_heat_invariants(spectrum: Spectrum, ts: Optional[Sequence[float]] = None,
                        n_terms: int = 4, completed: bool = True) -> AsymptoticFit:
    """Least squares of t^{1/m} T(t) against powers u^j, u = t^{1/m}; the
    coefficient of u^j is the heat invariant alpha_j (exponent (j-1)/m)."""
    if ts is None:
        ts = _default_heat_grid(spectrum)
    ts = np.asarray(ts, dtype=float)
    m = spectrum.order
    if completed:
        vals = completed_heat_trace(spectrum, ts)
    else:
        vals = heat_trace(spectrum, ts).values
    u = ts ** (1.0 / m)
    z = u * vals
    A = np.vander(u, n_terms, increasing=True)
    norms = np.linalg.norm(A, axis=0)
    cond = float(np.linalg.cond(A / norms[None, :]))
    if cond > FIT_COND_LIMIT:
        raise DomainError(f"heat fit design matrix too ill-conditioned "
                          f"(cond {cond:.3g} > {FIT_COND_LIMIT:.0e}); "
                          "reduce n_terms or widen the t window")
    coef, res, *_ = np.linalg.lstsq(A / norms[None, :], z, rcond=None)
    coef = coef / norms
    misfit = float(np.max(np.abs(A @ coef - z)))
    resid = misfit * cond + 2e-12 * float(np.max(np.abs(coef)))
    return AsymptoticFit(exponents=[(j - 1) / m for j in range(n_terms)],
                         coefficients=coef, residual=resid, cond=cond,
                         window=(float(ts.min()), float(ts.max())),
                         misfit=misfit)


# ---------------------------------------------------------------------------
# resolvent trace
# ---------------------------------------------------------------------------

@dataclass
class ResolventTraceValue:
    value: complex
    tail: complex
    tail_bound: float


def _tail_f(model: FlatIndexModel, m: int, lam: complex, N: int):
    a, b = model.a, model.b

    def g(x):
        return (a * x + b) ** m

    def f(x):
        return (g(x) - lam) ** (-N)

    def fp(x):
        u = a * x + b
        return -N * (g(x) - lam) ** (-N - 1) * m * a * u ** (m - 1)

    def fppp(x):
        u = a * x + b
        G = g(x) - lam
        d1 = m * a * u ** (m - 1)
        d2 = m * (m - 1) * a ** 2 * u ** (m - 2)
        d3 = m * (m - 1) * (m - 2) * a ** 3 * u ** (m - 3)
        return (-N * (N + 1) * (N + 2) * G ** (-N - 3) * d1 ** 3
                + 3.0 * N * (N + 1) * G ** (-N - 2) * d1 * d2
                - N * G ** (-N - 1) * d3)
    return f, fp, fppp


def resolvent_trace(spectrum: Spectrum, lam: complex, n_power: int = 1,
                    phi: Optional[Dict[str, float]] = None) -> ResolventTraceValue:
    """Tr phi (A - lambda)^{-N} = direct sum over the computed spectrum plus
    the Euler-Maclaurin completion of the flat-index tail model."""
    lam = complex(lam)
    N = int(n_power)
    if N < 1:
        raise DomainError("n_power must be a positive integer")
    model = _model_of(spectrum)
    m = spectrum.order
    if N == 1 and m <= 1:
        raise DomainError("trace of order N=1 needs m >= 2 in dimension one")

    lams = np.array([l for l, _ in spectrum.eigenvalues])
    w = _block_weights(spectrum, phi)
    if np.any(np.abs(lams - lam) == 0.0):
        raise DomainError(f"lambda={lam} lies in the computed spectrum")
    direct = complex(np.sum(w * (lams - lam) ** (-float(N))))

    cut_lam = model.cut ** m
    if lam.imag == 0.0 and lam.real >= cut_lam:
        raise DomainError("lambda overlaps the uncomputed spectral tail; "
                          "extend the window")
    f, fp, fppp = _tail_f(model, m, lam, N)
    x0 = model.count + 0.5
    re, _ = scipy.integrate.quad(lambda x: f(x).real, x0, np.inf,
                                 epsabs=1e-13, epsrel=1e-12, limit=200)
    im, _ = scipy.integrate.quad(lambda x: f(x).imag, x0, np.inf,
                                 epsabs=1e-13, epsrel=1e-12, limit=200)
    tail = complex(re, im) + fp(x0) / 24.0 - 7.0 * fppp(x0) / 5760.0
    if phi is not None:
        L = spectrum.total_length
        phibar = sum(phi.get(e.id, 0.0) * e.length
                     for e in spectrum.problem.graph.edges) / L
        tail *= phibar
    bound = model.mismatch / model.a * abs(f(x0))
    return ResolventTraceValue(value=direct + tail, tail=tail, tail_bound=float(bound))


def fit_resolvent_coeffs(spectrum: Spectrum, n_power: int = 1,
                         ray_arg: float = math.pi,
                         radii: Optional[Sequence[float]] = None,
                         n_terms: int = 4,
                         phi: Optional[Dict[str, float]] = None) -> AsymptoticFit:
    """Fit Tr phi (A - lambda)^{-N} along the ray lambda = R e^{i theta}
    against powers R^{(1-j)/m - N}; coefficient j is c_j(theta)."""
    if radii is None:
        radii = np.geomspace(1e2, 1e4, 30)
    radii = np.asarray(radii, dtype=float)
    m = spectrum.order
    N = int(n_power)
    direction = complex(math.cos(ray_arg), math.sin(ray_arg))
    vals = np.array([resolvent_trace(spectrum, R * direction, N, phi=phi).value
                     for R in radii])
    # normalize: F = trace * R^{N - 1/m} is a polynomial in w = R^{-1/m}
    F = vals * radii ** (N - 1.0 / m)
    uw = radii ** (-1.0 / m)
    A = np.vander(uw, n_terms, increasing=True)
    norms = np.linalg.norm(A, axis=0)
    cond = float(np.linalg.cond(A / norms[None, :]))
    if cond > FIT_COND_LIMIT:
        raise DomainError(f"resolvent fit too ill-conditioned (cond {cond:.3g})")
    sol, *_ = np.linalg.lstsq(A / norms[None, :], F, rcond=None)
    coef = sol / norms
    misfit = float(np.max(np.abs(A @ coef - F)))
    resid = misfit * cond + 2e-12 * float(np.max(np.abs(coef)))
    if np.max(np.abs(coef.imag)) < 1e-9 * max(1.0, np.max(np.abs(coef.real))):
        coef = coef.real
    return AsymptoticFit(exponents=[(1 - j) / m - N for j in range(n_terms)],
                         coefficients=coef, residual=resid, cond=cond,
                         window=(float(radii.min()), float(radii.max())),
                         misfit=misfit)


# ---------------------------------------------------------------------------
# zeta
# ---------------------------------------------------------------------------

def _betas(spectrum: Spectrum) -> Tuple[float, float, float, float]:
    """Exact small-t expansion coefficients of the completed heat trace:
    T~(t) = alpha0 t^{-1/m} + beta0 + beta1 t + beta2 t^2 + O(t^3)."""
    model = _model_of(spectrum)
    m = spectrum.order
    a, c = model.a, model.cut
    alpha0 = scipy.special.gamma(1.0 + 1.0 / m) / a
    C3 = m * (m - 1) * (m - 2)
    beta0 = model.sum0 - c / a
    beta1 = (-model.sum1 + c ** (m + 1) / ((m + 1) * a)
             - m * a * c ** (m - 1) / 24.0
             + 7.0 * C3 * a ** 3 * c ** (m - 3) / 5760.0)
    beta2 = (model.sum2 / 2.0 - c ** (2 * m + 1) / (2.0 * (2 * m + 1) * a)
             + m * a * c ** (2 * m - 1) / 24.0
             - 7.0 * (C3 + 3 * m ** 2 * (m - 1)) * a ** 3 * c ** (2 * m - 3) / 5760.0)
    return alpha0, beta0, beta1, beta2


def _require_positive(spectrum: Spectrum) -> np.ndarray:
    lams = np.sort(spectrum.flat())
    if len(lams) == 0:
        raise ZetaUndefined("zeta undefined: the spectrum window contains no eigenvalues")
    if lams[0] <= 0:
        raise ZetaUndefined(
            f"zeta undefined: spectrum contains a non-positive eigenvalue "
            f"({lams[0]:.6g}); the spectral zeta function requires a strictly "
            f"positive spectrum (zero modes must be absent)")
    return lams


def _hurwitz_em(sigma: complex, q: float) -> complex:
    """Hurwitz zeta sum_{j>=0} (q+j)^{-sigma} by Euler-Maclaurin continuation."""
    M = max(0, int(math.ceil(50.0 - q)))
    head = sum((q + j) ** (-sigma) for j in range(M))
    Q = q + M
    val = head + Q ** (1.0 - sigma) / (sigma - 1.0) + 0.5 * Q ** (-sigma)
    bern = [(1.0 / 6, 2), (-1.0 / 30, 4), (1.0 / 42, 6), (-1.0 / 30, 8)]
    for B, k in bern:
        prod = 1.0 + 0.0j
        for l in range(k - 1):
            prod *= sigma + l
        val += (B / math.factorial(k)) * prod * Q ** (-sigma - k + 1)
    return val


def zeta_poles(spectrum: Spectrum, n_terms: int = 4) -> List[Dict[str, float]]:
    """Poles s_j = (1-j)/m of the continued zeta with residues alpha_j /
    Gamma(s_j); in the completed model only s = 1/m has nonzero residue."""
    _require_positive(spectrum)
    model = _model_of(spectrum)
    m = spectrum.order
    out = []
    for j in range(n_terms):
        s_j = (1.0 - j) / m
        residue = 1.0 / (m * model.a) if j == 0 else 0.0
        out.append({"s": s_j, "residue": residue})
    return out


def _i_infty(lams: np.ndarray, mults: np.ndarray, s: complex) -> complex:
    """sum_k m_k int_1^inf t^{s-1} e^{-lam_k t} dt by Gauss-Laguerre."""
    nodes, weights = np.polynomial.laguerre.laggauss(80)
    total = 0.0 + 0.0j
    for lam, q in zip(lams, mults):
        if lam >= 40.0:
            break
        vals = (1.0 + nodes / lam) ** (s - 1.0)
        total += q * math.exp(-lam) / lam * np.dot(weights, vals)
    return total


def zeta(spectrum: Spectrum, s: complex, method: str = "auto") -> complex:
    """Spectral zeta continuation. 'direct' = sum plus Hurwitz tail (needs
    Re(ms) > 1), 'split' = Mellin split at t = 1 with the exact model
    expansion subtracted, and nonpositive integers use the limit formula."""
    lams = _require_positive(spectrum)
    mults = np.array([q for _, q in spectrum.eigenvalues], dtype=float)
    block_lams = np.array([l for l, _ in spectrum.eigenvalues])
    s = complex(s)
    m = spectrum.order
    model = _model_of(spectrum)
    alpha0, beta0, beta1, beta2 = _betas(spectrum)

    if abs(s - 1.0 / m) < 1e-9:
        raise ZetaUndefined(f"pole of the zeta function at s = 1/{m}")
    near_int = (abs(s.imag) < 1e-12 and abs(s.real - round(s.real)) < 1e-9
                and round(s.real) <= 0)

    if method not in ("auto", "direct", "split"):
        raise DomainError(f"unknown zeta method '{method}'")
    if method == "auto":
        if near_int:
            n = int(-round(s.real))
            betas = [beta0, beta1, beta2]
            if n >= len(betas):
                raise DomainError(f"zeta limit values supported down to s = -2, got {s}")
            return complex((-1.0) ** n * math.factorial(n) * betas[n])
        method = "direct" if s.real * m > 1.2 and s.real >= 2.5 else "split"

    if method == "direct":
        if (m * s).real <= 1.05:
            raise DomainError("direct zeta summation diverges for Re(ms) <= 1; "
                              "use the split method")
        head = complex(np.sum(mults * block_lams ** (-s)))
        q0 = model.count + 1 + model.b / model.a
        tail = model.a ** (-m * s) * _hurwitz_em(m * s, q0)
        return head + tail

    # split Mellin at t = 1
    if near_int:
        raise DomainError("use method='auto' for nonpositive integer s (limit formula)")

    def completed(t: float) -> float:
        return float(np.sum(mults * np.exp(-t * block_lams))) + \
            _heat_tail_model(model, m, t)

    def subtracted(t: float) -> float:
        return (completed(t) - alpha0 * t ** (-1.0 / m)
                - beta0 - beta1 * t - beta2 * t * t)

    def integrand(tau: float, part: int) -> float:
        t = tau ** m
        w = m * tau ** (m * s - 1.0) * subtracted(t)
        return w.real if part == 0 else w.imag

    re, _ = scipy.integrate.quad(integrand, 0.0, 1.0, args=(0,),
                                 epsabs=_QUAD_TOL, epsrel=1e-12, limit=300)
    if abs(s.imag) > 0:
        im, _ = scipy.integrate.quad(integrand, 0.0, 1.0, args=(1,),
                                     epsabs=_QUAD_TOL, epsrel=1e-12, limit=300)
    else:
        im = 0.0
    i0 = complex(re, im)
    poles = (alpha0 / (s - 1.0 / m) + beta0 / s + beta1 / (s + 1.0)
             + beta2 / (s + 2.0))
    iinf = _i_infty(block_lams, mults, s)
    return (i0 + poles + iinf) / scipy.special.gamma(s)


# ---------------------------------------------------------------------------
# Weyl fit
# ---------------------------------------------------------------------------

@dataclass
class WeylFit:
    exponent: float
    constant: float
    offset: float
    n_used: int
    exponent_stderr: float
    constant_stderr: float


def weyl_fit(spectrum: Spectrum, min_count: int = 200) -> WeylFit:
    """Fit lambda_j ~ C (j + delta)^p over the top half of the positive
    spectrum; Weyl's law predicts p = m and C = (pi/L)^m in dimension one.

    The counting function is a staircase, and fitting raw flat-indexed
    eigenvalues against their index leaks the staircase structure (doubled
    circle levels, interleaved star families) into the constant at the
    few-percent level even hundreds of levels up. The unbiased unfolding
    uses one point per distinct level at the midpoint of its jump: ordinate
    y_i = (count strictly below) + mult_i / 2, abscissa t_i =
    lambda_i^(1/p). For arithmetic staircases this is exactly linear, t =
    a (y + delta), whatever the plateau widths. The exponent is profiled:
    each candidate p costs one weighted linear regression (weight mult_i),
    scored by the scale-free normalized misfit 1 - R^2 (the raw SSE is not
    comparable across p because t changes scale with p); then C = a^p and
    delta = c / a. Standard errors are the linear-regression ones at the
    optimal p (constant via the delta method, exponent from the profile
    curvature)."""
    levels = [(lam, q) for lam, q in spectrum.eigenvalues if lam > 0]
    K = sum(q for _, q in levels)
    if K < min_count:
        raise WindowTooSmall(f"need at least {min_count} positive eigenvalues "
                             f"for a Weyl fit, have {K}")
    ys, lams, wts = [], [], []
    cum = 0
    for lam, q in levels:
        ys.append(cum + 0.5 * q)
        lams.append(lam)
        wts.append(float(q))
        cum += q
    ys = np.asarray(ys)
    lams = np.asarray(lams)
    wts = np.sqrt(np.asarray(wts))
    top = ys >= 0.5 * K          # top half by counting index
    ys, lams, wts = ys[top], lams[top], wts[top]
    n = len(ys)
    A = np.stack([ys, np.ones(n)], axis=1) * wts[:, None]

    w2 = wts ** 2

    def regress(p: float):
        t = lams ** (1.0 / p)
        target = t * wts
        sol, *_ = np.linalg.lstsq(A, target, rcond=None)
        r = A @ sol - target
        sse = float(r @ r)
        tbar = float(w2 @ t) / float(w2.sum())
        tvar = float(np.sum((wts * (t - tbar)) ** 2))
        return sol, sse, sse / max(tvar, 1e-300)

    # the profile is needle-sharp at the true exponent with a slowly varying
    # tail, so bracket by grid scan before polishing locally
    grid = np.linspace(0.5, 12.0, 116)
    qs = [regress(p)[2] for p in grid]
    i = int(np.argmin(qs))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = scipy.optimize.minimize_scalar(lambda p: regress(p)[2],
                                         bounds=(lo, hi), method="bounded",
                                         options={"xatol": 1e-10})
    p = float(res.x)
    (a, c), sse, q = regress(p)
    s2 = sse / max(n - 3, 1)
    cov = s2 * np.linalg.inv(A.T @ A)
    constant = float(a ** p)
    constant_stderr = float(abs(p) * abs(a) ** (p - 1.0)
                            * math.sqrt(max(cov[0, 0], 0.0)))
    # profile curvature of the normalized misfit: var(p) ~ 2 (q/dof) / q''(p)
    h = max(1e-4, 1e-4 * p)
    d2 = (regress(p + h)[2] - 2.0 * q + regress(p - h)[2]) / (h * h)
    exponent_stderr = (float(math.sqrt(2.0 * (q / max(n - 3, 1)) / d2))
                       if d2 > 0 else 0.0)
    return WeylFit(exponent=p, constant=constant, offset=float(c / a),
                   n_used=n, exponent_stderr=exponent_stderr,
                   constant_stderr=constant_stderr)
