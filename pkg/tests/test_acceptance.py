"""Acceptance suite: one test per criterion, at the pinned tolerances, each
registering a single pass/fail summary line. Every criterion also carries a
60-second budget, asserted on the in-test computation time."""
from __future__ import annotations

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import qgspectra as qg
from qgspectra.builtins import build

ELLIPTIC_BUILTINS = ["interval-dirichlet", "interval-neumann",
                     "star3-kirchhoff", "star3-delta", "circle-glued",
                     "beam-clamped"]


def _closed(checks):
    """All checks hold; detail shows the worst item."""
    worst = max(checks, key=lambda c: c[1])
    ok = all(c[2] for c in checks)
    return ok, f"worst {worst[0]}={worst[1]:.3g}"


def test_criterion_1_ellipticity(acceptance):
    t0 = time.perf_counter()
    checks = []
    for nm in ELLIPTIC_BUILTINS:
        verdict = qg.check(build(nm))
        sig = min(v["min_sigma"] for v in verdict.to_json()["vertices"])
        checks.append((f"{nm} 1/min_sigma", 1.0 / sig,
                       verdict.elliptic and sig > 1e-2))
    bad = qg.check(build("transmission-bad"))
    worst_bad = max(v["max_sigma"] for v in bad.to_json()["vertices"]
                    if v["max_sigma"] < 1e-2)
    checks.append(("transmission-bad max_sigma", worst_bad,
                   (not bad.elliptic) and worst_bad < 1e-10))
    # Kirchhoff star, degree 3: |det Lopatinsky| = 3 on the unit circle
    p3 = build("star3-kirchhoff")
    center = next(v.id for v in p3.graph.vertices if v.degree == 3)
    sec = p3.sector
    dets = []
    for frac in np.linspace(-1.0, 1.0, 9):
        lam = np.exp(1j * (sec.center_arg + frac * sec.half_angle))
        dets.append(abs(np.linalg.det(qg.lopatinsky_matrix(p3, center, lam))))
    det_err = max(abs(d - 3.0) for d in dets)
    checks.append(("kirchhoff |det|-3", det_err, det_err < 1e-10))
    secs = time.perf_counter() - t0
    ok, detail = _closed(checks)
    acceptance(1, "ellipticity", ok and secs <= 60,
               detail + f"; |det| err {det_err:.2e}", secs)
    assert ok
    assert secs <= 60


def test_criterion_2_spectra(acceptance, p_dirichlet, p_star3,
                             sp_dirichlet, sp_star3, sp_circle, sp_neumann,
                             sp_delta, sp_beam, sp_split):
    t0 = time.perf_counter()
    flat = sp_dirichlet.flat()
    closed_err = max(abs(flat[k - 1] - k * k) for k in range(1, 21))

    numeric = qg.eigenvalues(p_dirichlet, 420.0, force_numeric=True,
                             certify=False)
    nflat = numeric.flat()
    assert len(nflat) >= 20
    numeric_err = max(abs(nflat[k - 1] - k * k) for k in range(1, 21))

    # star3 pattern (pi/2)^2, pi^2 (x2), (3pi/2)^2, (2pi)^2 (x2), ...
    want = []
    j = 1
    while len(want) < 12:
        want.append(((j - 0.5) * math.pi) ** 2)
        want.append((j * math.pi) ** 2)
        want.append((j * math.pi) ** 2)
        j += 1
    s3flat = sp_star3.flat()
    star_err = max(abs(a - b) / b for a, b in zip(s3flat[:12], want[:12]))
    mults = [qg.multiplicity(p_star3, (n * math.pi) ** 2) for n in (1, 2, 3)]

    # circle: {0} u {(n pi)^2 x 2}
    circ = sp_circle.eigenvalues
    circ_ok = abs(circ[0][0]) < 1e-8 and circ[0][1] == 1
    circ_err = 0.0
    for n, (lam, q) in enumerate(circ[1:13], start=1):
        circ_err = max(circ_err, abs(lam - (n * math.pi) ** 2) / (n * math.pi) ** 2)
        circ_ok = circ_ok and q == 2

    cert_exact = all(w["count"] == w["expected"]
                     for sp in (sp_dirichlet, sp_star3, sp_circle, sp_neumann,
                                sp_delta, sp_beam, sp_split)
                     for w in sp.certificate)
    secs = time.perf_counter() - t0
    ok = (closed_err < 1e-8 and numeric_err < 1e-6 and star_err < 1e-8
          and mults == [2, 2, 2] and circ_ok and circ_err < 1e-8
          and cert_exact and secs <= 60)
    acceptance(2, "spectra", ok,
               f"closed {closed_err:.1e}, numeric {numeric_err:.1e}, "
               f"star3 {star_err:.1e} mults {mults}, circle {circ_err:.1e}, "
               f"certificates exact: {cert_exact}", secs)
    assert ok


def test_criterion_3_resolvent_norm(acceptance, sp_dirichlet):
    t0 = time.perf_counter()
    ray = np.exp(3j * math.pi / 4.0)
    vals = {}
    for r in [1e2, 1e3, 1e4, 1e5, 1e6]:
        vals[r] = r * qg.resolvent_norm(sp_dirichlet, r * ray)
    err = max(abs(v - math.sqrt(2.0)) for v in vals.values())
    secs = time.perf_counter() - t0
    ok = err <= 0.01 and secs <= 60
    acceptance(3, "resolvent norm on the 3pi/4 ray", ok,
               f"max deviation from sqrt(2): {err:.2e} over |lambda| "
               f"1e2..1e6", secs)
    assert ok


def test_criterion_4_resolvent_trace(acceptance, sp_dirichlet):
    t0 = time.perf_counter()
    trace_err = 0.0
    for s in (1.0, 10.0, 100.0):
        got = qg.resolvent_trace(sp_dirichlet, -s).value
        want = math.pi / math.tanh(math.pi * math.sqrt(s)) / (2 * math.sqrt(s)) \
            - 1.0 / (2 * s)
        trace_err = max(trace_err, abs(got - want))

    fit = qg.fit_resolvent_coeffs(sp_dirichlet, n_power=1, ray_arg=math.pi)
    c0_err = abs(fit.coefficients[0] - math.pi / 2.0)
    c1_err = abs(fit.coefficients[1] - (-0.5))

    # d/dlambda Tr R^N = N Tr R^{N+1}
    lam, h = -25.0, 1e-3
    lhs = (qg.resolvent_trace(sp_dirichlet, lam + h).value
           - qg.resolvent_trace(sp_dirichlet, lam - h).value) / (2 * h)
    rhs = qg.resolvent_trace(sp_dirichlet, lam, n_power=2).value
    deriv_err = abs(lhs - rhs) / abs(rhs)
    secs = time.perf_counter() - t0
    ok = (trace_err < 1e-8 and c0_err < 1e-3 and c1_err < 1e-3
          and deriv_err < 1e-6 and secs <= 60)
    acceptance(4, "resolvent trace", ok,
               f"N=1 err {trace_err:.1e}; c0 err {c0_err:.1e}, c1 err "
               f"{c1_err:.1e}; derivative {deriv_err:.1e}", secs)
    assert ok


def test_criterion_5_heat_invariants(acceptance, sp_dirichlet, sp_neumann,
                                     sp_star3, sp_delta, sp_circle, sp_beam,
                                     sp_split):
    t0 = time.perf_counter()
    alpha0_err = 0.0
    for sp in (sp_dirichlet, sp_neumann, sp_star3, sp_delta, sp_circle):
        fit = qg.fit_heat_invariants(sp)
        want = sp.total_length / math.sqrt(4 * math.pi)
        alpha0_err = max(alpha0_err, abs(fit.coefficients[0] - want))
    # order 4: the alpha0 constant generalizes to Gamma(1 + 1/m) L / pi,
    # of which L / sqrt(4 pi) is the m = 2 case (see decisions ledger)
    beam_fit = qg.fit_heat_invariants(sp_beam, n_terms=2,
                                      ts=np.geomspace(3e-5, 3e-4, 30))
    beam_want = math.gamma(1.25) * sp_beam.total_length / math.pi
    beam_err = abs(beam_fit.coefficients[0] - beam_want)

    a1 = {"dirichlet": (sp_dirichlet, -0.5), "neumann": (sp_neumann, +0.5),
          "star3": (sp_star3, -1.0)}
    alpha1_err = max(abs(qg.fit_heat_invariants(sp).coefficients[1] - want)
                     for sp, want in a1.values())

    ts = np.geomspace(1e-3, 1e-1, 12)
    eids = [e.id for e in sp_split.problem.graph.edges]
    half = qg.heat_trace(sp_split, ts, phi={eids[0]: 1.0, eids[1]: 0.0},
                         tail_fraction=1.0).values
    full = qg.heat_trace(sp_split, ts, tail_fraction=1.0).values
    phi_err = float(np.max(np.abs(half - 0.5 * full)))
    secs = time.perf_counter() - t0
    ok = (alpha0_err < 1e-3 and beam_err < 1e-3 and alpha1_err < 1e-2
          and phi_err < 1e-8 and secs <= 60)
    acceptance(5, "heat invariants", ok,
               f"alpha0 err {alpha0_err:.1e} (beam {beam_err:.1e}); alpha1 "
               f"err {alpha1_err:.1e}; half-interval phi {phi_err:.1e}", secs)
    assert ok


def test_criterion_6_zeta(acceptance, sp_dirichlet, sp_star3):
    t0 = time.perf_counter()
    z0_err = abs(qg.zeta(sp_dirichlet, 0.0) - (-0.5))
    poles = qg.zeta_poles(sp_dirichlet)
    res_half = next(p["residue"] for p in poles if abs(p["s"] - 0.5) < 1e-9)
    res_err = abs(res_half - 0.5)
    z2_err = abs(qg.zeta(sp_dirichlet, 2.0) - math.pi ** 4 / 90.0)
    zm1_err = abs(qg.zeta(sp_dirichlet, -1.0))
    cross_err = abs(qg.zeta(sp_star3, 0.0).real
                    - qg.fit_heat_invariants(sp_star3).coefficients[1])
    secs = time.perf_counter() - t0
    ok = (z0_err < 1e-4 and res_err < 1e-3 and z2_err < 1e-6
          and zm1_err < 1e-3 and cross_err < 1e-3 and secs <= 60)
    acceptance(6, "zeta continuation", ok,
               f"zeta(0) err {z0_err:.1e}; residue(1/2) err {res_err:.1e}; "
               f"zeta(2) err {z2_err:.1e}; zeta(-1) err {zm1_err:.1e}; "
               f"star3 zeta(0)-alpha1 {cross_err:.1e}", secs)
    assert ok


def test_criterion_7_weyl(acceptance, sp_dirichlet, sp_neumann, sp_star3,
                          sp_circle):
    t0 = time.perf_counter()
    targets = [(sp_dirichlet, 1.0), (sp_neumann, 1.0),
               (sp_star3, (math.pi / 3.0) ** 2),
               (sp_circle, (math.pi / 2.0) ** 2)]
    exp_err, const_err = 0.0, 0.0
    for sp, c_want in targets:
        fit = qg.weyl_fit(sp)
        exp_err = max(exp_err, abs(fit.exponent - 2.0))
        const_err = max(const_err, abs(fit.constant - c_want) / c_want)
    secs = time.perf_counter() - t0
    ok = exp_err <= 0.01 and const_err <= 0.02 and secs <= 60
    acceptance(7, "Weyl law", ok,
               f"exponent err {exp_err:.1e}; constant rel err {const_err:.1e}",
               secs)
    assert ok


def test_criterion_8_property_suites(acceptance, p_dirichlet, p_star3,
                                     p_beam, sp_dirichlet):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)

    # coupling-row gauge invariance: left-multiplying every condition's
    # blocks by one invertible matrix per vertex must not move the spectrum
    base = qg.eigenvalues(p_star3, 2.1e3)
    gauged_conds = {}
    for v in p_star3.graph.vertices:
        cond = p_star3.coupling(v.id)
        G = (np.eye(cond.rows) + 0.3 * rng.standard_normal((cond.rows, cond.rows))
             + 0.2j * rng.standard_normal((cond.rows, cond.rows)))
        gauged_conds[v.id] = qg.CouplingCondition(
            rows=cond.rows, blocks=[G @ b for b in cond.blocks])
    gauged_problem = qg.BoundaryContactProblem(
        graph=p_star3.graph, operators=p_star3.operators,
        couplings=gauged_conds, sector=p_star3.sector)
    gauged = qg.eigenvalues(gauged_problem, 2.1e3, skip_admissibility=True)
    gauge_ok = len(base.eigenvalues) == len(gauged.eigenvalues)
    gauge_err = max(abs(a - b) / max(1.0, abs(b)) for (a, qa), (b, qb)
                    in zip(gauged.eigenvalues, base.eigenvalues)) \
        if gauge_ok else math.inf
    gauge_ok = gauge_ok and gauge_err < 1e-9 and \
        [q for _, q in gauged.eigenvalues] == [q for _, q in base.eigenvalues]

    # anisotropic homogeneity of the characteristic exponents (principal
    # symbol): mu(c^m lambda) = c mu(lambda)
    hom_err = 0.0
    for p, lam in [(p_dirichlet, 3.0 + 2.0j), (p_beam, -7.0 + 5.0j)]:
        op = p.operator(p.graph.edges[0].id)
        m = op.order
        principal = [np.zeros_like(op.coeffs[0][0])] * m + [op.coeffs[m][0]]
        c = 1.7
        base_mu = qg.characteristic_exponents(principal, lam)
        scaled_mu = qg.characteristic_exponents(principal, (c ** m) * lam)
        key = lambda z: (z.real, z.imag)
        for attr in ("stable", "unstable"):
            got = sorted((mu for mu, _ in getattr(scaled_mu, attr)), key=key)
            want = sorted((c * mu for mu, _ in getattr(base_mu, attr)), key=key)
            hom_err = max(hom_err, max(abs(g - w) for g, w in zip(got, want)))

    # lower-order coefficients must not enter the exponent data at all
    withpot = qg.BoundaryContactProblem(
        graph=p_dirichlet.graph,
        operators={e.id: qg.EdgeOperator(
            order=2, rank=1,
            coeffs=[np.array([[[7.5 + 0j]]]), np.array([[[-2.0 + 1.0j]]]),
                    p_dirichlet.operator(e.id).coeffs[2]])
            for e in p_dirichlet.graph.edges},
        couplings=p_dirichlet.couplings, sector=p_dirichlet.sector)
    v0 = qg.check(p_dirichlet).to_json()
    v1 = qg.check(withpot).to_json()
    strip = lambda j: json.dumps({"vertices": j["vertices"]}, sort_keys=True)
    bit_identical = strip(v0) == strip(v1)

    # push-forward: bit-exact jet round trip, weighted norm preserved
    rt_err, norm_err = 0.0, 0.0
    for v in p_star3.graph.vertices:
        jets = {(ep.edge, ep.end): rng.standard_normal((2, 1))
                + 1j * rng.standard_normal((2, 1)) for ep in v.endpoints}
        y = qg.push_forward(p_star3, v.id, jets)
        back = qg.pull_back(p_star3, v.id, y)
        rt_err = max(rt_err, max(float(np.linalg.norm(back[k] - jets[k]))
                                 for k in jets))
        val = y[0, :]
        want = sum(ep.weight * abs(val[q]) ** 2
                   for q, ep in enumerate(v.endpoints))
        norm_err = max(norm_err,
                       abs(qg.fiber_inner(p_star3, v.id, val, val) - want))
    pf_err = max(rt_err, norm_err)

    # solve residuals
    solve_worst = 0.0
    for p, lam in [(p_dirichlet, 7.3), (p_dirichlet, 120.0 + 40.0j),
                   (p_star3, 33.0 + 9.0j), (p_beam, 460.0 + 70.0j)]:
        rhs = {}
        for e in p.graph.edges:
            xs = np.linspace(0.0, e.length, 41)
            rhs[e.id] = np.sin(1.7 * xs) + 0.3 * np.cos(0.9 * xs)
        sol = qg.solve_resolvent(p, lam, rhs)
        solve_worst = max(solve_worst, sol.coupling_residual,
                          sol.interior_residual)

    # byte-deterministic CLI
    def run(*args):
        r = subprocess.run([sys.executable, "-m", "qgspectra", *args],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        return r.stdout
    cli_ok = all(run(*a) == run(*a) for a in
                 [("check", "star3-kirchhoff"),
                  ("spectrum", "interval-dirichlet", "--max-eig", "8")])

    secs = time.perf_counter() - t0
    ok = (gauge_ok and hom_err < 1e-10 and bit_identical and rt_err == 0.0
          and norm_err < 1e-12 and solve_worst <= 1e-8 and cli_ok
          and secs <= 60)
    acceptance(8, "property suites", ok,
               f"gauge {gauge_err:.1e}; homogeneity {hom_err:.1e}; "
               f"lower-order bit-identical: {bit_identical}; push-forward "
               f"{pf_err:.1e}; solve {solve_worst:.1e}; CLI deterministic: "
               f"{cli_ok}", secs)
    assert ok
