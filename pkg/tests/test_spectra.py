"""Spectral solver unit tests: secular matrix, sweeps, winding counts,
resolvent solves, and conformance against the builtin closed-form oracles."""
from __future__ import annotations

import math

import numpy as np
import pytest

import qgspectra as qg
from qgspectra import builtins
from qgspectra.errors import DomainError, NearSingularResolvent, WindowTooSmall


# ---------------------------------------------------------------------------
# secular matrix and multiplicity
# ---------------------------------------------------------------------------

def test_multiplicity_simple_and_double(p_dirichlet, p_circle, p_star3):
    assert qg.multiplicity(p_dirichlet, 4.0) == 1
    assert qg.multiplicity(p_dirichlet, 2.5) == 0
    assert qg.multiplicity(p_circle, math.pi ** 2) == 2
    assert qg.multiplicity(p_circle, 0.0) == 1
    assert qg.multiplicity(p_star3, math.pi ** 2) == 2
    assert qg.multiplicity(p_star3, (0.5 * math.pi) ** 2) == 1


def test_secular_well_scaled_at_huge_lambda(p_dirichlet, p_beam):
    # equilibrated secular matrix: slogdet stays finite and sigma_min_hat
    # stays O(1) deep into the spectrum and far from any eigenvalue
    for p, lam in ((p_dirichlet, 1.0e8 + 4321.7), (p_beam, 3.3e7)):
        sec = qg.secular_matrix(p, lam)
        s, logdet = sec.slogdet()
        assert math.isfinite(logdet)
        assert abs(s) == pytest.approx(1.0, abs=1e-12)
        assert math.isfinite(sec.sigma_min_hat())


def test_secular_sigma_collapses_only_at_eigenvalue(p_dirichlet):
    on = qg.secular_matrix(p_dirichlet, 9.0).sigma_min_hat()
    off = qg.secular_matrix(p_dirichlet, 9.5).sigma_min_hat()
    assert on < 1e-10
    assert off > 1e-3


# ---------------------------------------------------------------------------
# winding counts
# ---------------------------------------------------------------------------

def test_winding_count_boxes(p_dirichlet, p_circle):
    assert qg.winding_count(p_dirichlet, 0.5, 1.5, 1.0) == 1
    assert qg.winding_count(p_dirichlet, 1.5, 3.9, 1.0) == 0
    assert qg.winding_count(p_dirichlet, 0.5, 4.5, 1.0) == 2
    # doubles are counted with multiplicity
    pi2 = math.pi ** 2
    assert qg.winding_count(p_circle, pi2 - 1.0, pi2 + 1.0, 1.0) == 2


# ---------------------------------------------------------------------------
# sweeps and certificates
# ---------------------------------------------------------------------------

def test_small_window_dirichlet_closed_form(p_dirichlet):
    sp = qg.eigenvalues(p_dirichlet, 30.0)
    got = sp.flat()
    want = np.array([1.0, 4.0, 9.0, 16.0, 25.0])
    assert got.shape == want.shape
    assert np.max(np.abs(got - want)) < 1e-9


def test_small_window_forced_numeric(p_dirichlet):
    sp = qg.eigenvalues(p_dirichlet, 30.0, force_numeric=True, certify=False)
    want = np.array([1.0, 4.0, 9.0, 16.0, 25.0])
    assert np.max(np.abs(sp.flat() - want)) < 1e-6


def test_certificate_windows_partition_and_count(p_dirichlet):
    sp = qg.eigenvalues(p_dirichlet, 30.0)
    cert = sp.certificate
    assert cert, "certified sweep must produce contour windows"
    for w in cert:
        assert w["count"] == w["expected"]
    # windows tile the sweep interval
    for prev, nxt in zip(cert, cert[1:]):
        assert nxt["a"] == pytest.approx(prev["b"])
    assert cert[0]["a"] <= 1.0
    assert cert[-1]["b"] >= 25.0


def test_spectrum_truncated_and_flat(sp_dirichlet):
    assert len(sp_dirichlet.flat()) == sp_dirichlet.count
    tr = sp_dirichlet.truncated(100.0)
    assert [l for l, _ in tr.eigenvalues] == [
        l for l, _ in sp_dirichlet.eigenvalues if l <= 100.0]
    assert tr.window[1] == 100.0


def test_infinite_window_rejected(p_dirichlet):
    with pytest.raises(DomainError):
        qg.eigenvalues(p_dirichlet, math.inf)


# ---------------------------------------------------------------------------
# resolvent norm / solve
# ---------------------------------------------------------------------------

def test_resolvent_norm_distance_model(p_dirichlet):
    sp = qg.eigenvalues(p_dirichlet, 30.0)
    # interior point: nearest eigenvalue is 4 (dist 1.5 to 2.5)
    assert qg.resolvent_norm(sp, 2.5) == pytest.approx(1.0 / 1.5, rel=1e-9)
    # complex point above the tail: distance is the imaginary part
    assert qg.resolvent_norm(sp, 100.0 + 2.0j) == pytest.approx(0.5, rel=1e-9)


def test_resolvent_norm_error_paths(p_dirichlet):
    sp = qg.eigenvalues(p_dirichlet, 30.0)
    lam0 = sp.eigenvalues[0][0]
    with pytest.raises(NearSingularResolvent):
        qg.resolvent_norm(sp, lam0)
    with pytest.raises(WindowTooSmall):
        qg.resolvent_norm(sp, 1.0e4)       # real axis, uncertified tail


def test_solve_resolvent_analytic_interval(p_dirichlet):
    # -u'' - lam u = sin(3x) with u(0) = u(pi) = 0  =>  u = sin(3x)/(9 - lam)
    xs = np.linspace(0.0, math.pi, 61)
    for lam in (2.0, 2.0 + 1.0j):
        res = qg.solve_resolvent(p_dirichlet, lam, {"e1": np.sin(3 * xs)})
        want = np.sin(3 * res.xs["e1"]) / (9.0 - lam)
        err = np.max(np.abs(res.u["e1"][:, 0] - want))
        assert err < 1e-8
        assert res.coupling_residual < 1e-8
        assert res.interior_residual < 1e-8


def test_solve_resolvent_missing_edge(p_star3):
    with pytest.raises(DomainError):
        qg.solve_resolvent(p_star3, 1.0 + 1.0j, {"e1": np.zeros(11)})


def test_solve_resolvent_near_eigenvalue_raises(p_dirichlet):
    xs = np.linspace(0.0, math.pi, 41)
    with pytest.raises(NearSingularResolvent):
        qg.solve_resolvent(p_dirichlet, 4.0, {"e1": np.sin(1.3 * xs)})


# ---------------------------------------------------------------------------
# eigenfunction edge masses
# ---------------------------------------------------------------------------

def test_edge_masses_interval(p_dirichlet):
    masses = qg.eigenfunction_edge_masses(p_dirichlet, 1.0)
    assert masses == pytest.approx({"e1": 1.0}, abs=1e-9)


def test_edge_masses_split_interval(p_split):
    # sin(2x) on [0, pi] cut at pi/2: equal mass on the two halves
    masses = qg.eigenfunction_edge_masses(p_split, 4.0)
    assert masses["e1"] == pytest.approx(0.5, abs=1e-9)
    assert masses["e2"] == pytest.approx(0.5, abs=1e-9)


def test_edge_masses_sum_to_multiplicity(p_star3):
    masses = qg.eigenfunction_edge_masses(p_star3, math.pi ** 2)
    assert sum(masses.values()) == pytest.approx(2.0, abs=1e-8)
    # the double (n pi)^2 family is supported symmetrically on the star
    vals = sorted(masses.values())
    assert vals == pytest.approx([2.0 / 3.0] * 3, abs=1e-6)


def test_edge_masses_off_eigenvalue(p_dirichlet):
    masses = qg.eigenfunction_edge_masses(p_dirichlet, 2.5)
    assert masses == {"e1": 0.0}


# ---------------------------------------------------------------------------
# builtin oracle conformance
# ---------------------------------------------------------------------------

def test_oracle_interval_dirichlet(sp_dirichlet):
    want = builtins.oracle("interval-dirichlet")["first_eigenvalues"]
    got = sp_dirichlet.flat()[:len(want)]
    assert np.max(np.abs(got - np.array(want))) < 1e-8


def test_oracle_interval_neumann(sp_neumann):
    want = builtins.oracle("interval-neumann")["first_eigenvalues"]
    got = sp_neumann.flat()[:len(want)]
    assert np.max(np.abs(got - np.array(want))) < 1e-8


def test_oracle_star3_kirchhoff(sp_star3):
    want = builtins.oracle("star3-kirchhoff")["first_eigenvalues"]
    got = sp_star3.eigenvalues[:len(want)]
    for (lam, q), (lam_o, q_o) in zip(got, want):
        assert lam == pytest.approx(lam_o, abs=1e-8)
        assert q == q_o


def test_oracle_circle_glued(sp_circle):
    want = builtins.oracle("circle-glued")["first_eigenvalues"]
    got = sp_circle.eigenvalues[:len(want)]
    for (lam, q), (lam_o, q_o) in zip(got, want):
        assert lam == pytest.approx(lam_o, abs=1e-8)
        assert q == q_o


def test_oracle_beam_clamped(sp_beam):
    want = builtins.oracle("beam-clamped")["first_eigenvalues"]
    got = sp_beam.flat()[:len(want)]
    # order-4 secular entries grow like e^{k l}; roundoff amplification puts
    # the realistic accuracy for the 6th level (k ~ 20) near 1e-8 relative
    assert np.max(np.abs(got / np.array(want) - 1.0)) < 1e-7


def test_oracle_star3_delta_roots(sp_delta):
    # simple eigenvalues solve tan k = -3k / alpha (alpha = 1); check the
    # first few simple levels satisfy the transcendental equation
    simple = [l for l, q in sp_delta.eigenvalues if q == 1][:5]
    assert len(simple) == 5
    for lam in simple:
        k = math.sqrt(lam)
        assert abs(math.tan(k) + 3.0 * k) < 1e-6 * (1 + 9.0 * k * k)


def test_all_spectra_certified_exact(sp_dirichlet, sp_neumann, sp_star3,
                                     sp_delta, sp_circle, sp_beam, sp_split):
    for sp in (sp_dirichlet, sp_neumann, sp_star3, sp_delta, sp_circle,
               sp_beam, sp_split):
        assert all(w["count"] == w["expected"] for w in sp.certificate)
