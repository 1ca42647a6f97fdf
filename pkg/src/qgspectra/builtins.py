"""Builtin example problems with closed-form oracle data.

Each builder returns a fresh BoundaryContactProblem; ORACLES carries the
closed-form facts (secular equations, first eigenvalues, expansion
coefficients) that the acceptance suite checks against and that the CLI
writes out as sidecar files next to emitted problem JSON.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from .graphs import (LEFT, RIGHT, BoundaryContactProblem, CouplingCondition,
                     Edge, EdgeOperator, Endpoint, MetricGraph, Sector, Vertex)


def _laplace_op() -> EdgeOperator:
    # A = -d^2/dx^2: a_0 = 0, a_1 = 0, a_2 = -1
    return EdgeOperator.constant([0.0, 0.0, -1.0])


def _sector_left() -> Sector:
    return Sector(center_arg=math.pi, half_angle=math.pi / 2)


def _blocks(*mats) -> List[np.ndarray]:
    return [np.asarray(mk, dtype=complex) for mk in mats]


def interval_dirichlet() -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", math.pi)],
        vertices=[Vertex("v0", [Endpoint("e1", LEFT)]),
                  Vertex("v1", [Endpoint("e1", RIGHT)])])
    dirichlet = CouplingCondition(rows=1, blocks=_blocks([[1.0]], [[0.0]]))
    return BoundaryContactProblem(
        graph=g, operators={"e1": _laplace_op()},
        couplings={"v0": dirichlet, "v1": dirichlet},
        sector=_sector_left())


def interval_neumann() -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", math.pi)],
        vertices=[Vertex("v0", [Endpoint("e1", LEFT)]),
                  Vertex("v1", [Endpoint("e1", RIGHT)])])
    neumann = CouplingCondition(rows=1, blocks=_blocks([[0.0]], [[1.0]]))
    return BoundaryContactProblem(
        graph=g, operators={"e1": _laplace_op()},
        couplings={"v0": neumann, "v1": neumann},
        sector=_sector_left())


def _star3(center_m0_last_row) -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", 1.0), Edge("e2", 1.0), Edge("e3", 1.0)],
        vertices=[
            Vertex("c", [Endpoint("e1", LEFT), Endpoint("e2", LEFT),
                         Endpoint("e3", LEFT)]),
            Vertex("v1", [Endpoint("e1", RIGHT)]),
            Vertex("v2", [Endpoint("e2", RIGHT)]),
            Vertex("v3", [Endpoint("e3", RIGHT)])])
    center = CouplingCondition(rows=3, blocks=_blocks(
        [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], center_m0_last_row],
        [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    dirichlet = CouplingCondition(rows=1, blocks=_blocks([[1.0]], [[0.0]]))
    op = _laplace_op()
    return BoundaryContactProblem(
        graph=g, operators={e: op for e in ("e1", "e2", "e3")},
        couplings={"c": center, "v1": dirichlet, "v2": dirichlet,
                   "v3": dirichlet},
        sector=_sector_left())


def star3_kirchhoff() -> BoundaryContactProblem:
    return _star3([0.0, 0.0, 0.0])


def star3_delta(alpha: float = 1.0) -> BoundaryContactProblem:
    # sum of inward derivatives = alpha * u(center); continuity rows make
    # "-alpha u_1" an equivalent way to write the vertex value term
    return _star3([-float(alpha), 0.0, 0.0])


def circle_glued() -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", 1.0), Edge("e2", 1.0)],
        vertices=[
            Vertex("a", [Endpoint("e1", LEFT), Endpoint("e2", RIGHT)]),
            Vertex("b", [Endpoint("e1", RIGHT), Endpoint("e2", LEFT)])])
    kirchhoff2 = CouplingCondition(rows=2, blocks=_blocks(
        [[1.0, -1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]))
    op = _laplace_op()
    return BoundaryContactProblem(
        graph=g, operators={"e1": op, "e2": op},
        couplings={"a": kirchhoff2, "b": kirchhoff2},
        sector=_sector_left())


def transmission_bad() -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", 1.0), Edge("e2", 1.0)],
        vertices=[
            Vertex("v0", [Endpoint("e1", LEFT)]),
            Vertex("c", [Endpoint("e1", RIGHT), Endpoint("e2", LEFT)]),
            Vertex("v1", [Endpoint("e2", RIGHT)])])
    dirichlet = CouplingCondition(rows=1, blocks=_blocks([[1.0]], [[0.0]]))
    # value continuity paired with equality of INWARD derivatives: on a
    # straight transmission joint this kills no oscillation direction and the
    # Lopatinsky determinant vanishes identically
    bad = CouplingCondition(rows=2, blocks=_blocks(
        [[1.0, -1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, -1.0]]))
    op = _laplace_op()
    return BoundaryContactProblem(
        graph=g, operators={"e1": op, "e2": op},
        couplings={"v0": dirichlet, "c": bad, "v1": dirichlet},
        sector=_sector_left())


def beam_clamped() -> BoundaryContactProblem:
    g = MetricGraph(
        edges=[Edge("e1", 1.0)],
        vertices=[Vertex("v0", [Endpoint("e1", LEFT)]),
                  Vertex("v1", [Endpoint("e1", RIGHT)])])
    op = EdgeOperator.constant([0.0, 0.0, 0.0, 0.0, 1.0])   # A = +d^4/dx^4
    clamped = CouplingCondition(rows=2, blocks=_blocks(
        [[1.0], [0.0]], [[0.0], [1.0]], [[0.0], [0.0]], [[0.0], [0.0]]))
    return BoundaryContactProblem(
        graph=g, operators={"e1": op},
        couplings={"v0": clamped, "v1": clamped},
        sector=_sector_left())


def interval_dirichlet_split() -> BoundaryContactProblem:
    """The Dirichlet interval cut at pi/2 into two edges joined by a
    Kirchhoff vertex: same spectrum, each eigenfunction carrying exactly
    half its mass per edge. Not a named builtin; used for localized traces."""
    g = MetricGraph(
        edges=[Edge("e1", math.pi / 2), Edge("e2", math.pi / 2)],
        vertices=[
            Vertex("v0", [Endpoint("e1", LEFT)]),
            Vertex("c", [Endpoint("e1", RIGHT), Endpoint("e2", LEFT)]),
            Vertex("v1", [Endpoint("e2", RIGHT)])])
    dirichlet = CouplingCondition(rows=1, blocks=_blocks([[1.0]], [[0.0]]))
    kirchhoff2 = CouplingCondition(rows=2, blocks=_blocks(
        [[1.0, -1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]))
    op = _laplace_op()
    return BoundaryContactProblem(
        graph=g, operators={"e1": op, "e2": op},
        couplings={"v0": dirichlet, "c": kirchhoff2, "v1": dirichlet},
        sector=_sector_left())


def _beam_roots(n: int) -> List[float]:
    """First n roots of cos(k) cosh(k) = 1 (clamped-clamped beam), k > 0."""
    def f(x):
        return math.cos(x) * math.cosh(x) - 1.0

    roots = []
    while len(roots) < n:
        # roots sit near (j + 1/2) pi; cosh >> 1 makes the sign follow cos
        j = len(roots) + 1
        a, b = (j + 0.25) * math.pi, (j + 0.75) * math.pi
        fa = f(a)
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        roots.append(0.5 * (a + b))
    return roots


BUILDERS: Dict[str, Callable[[], BoundaryContactProblem]] = {
    "interval-dirichlet": interval_dirichlet,
    "interval-neumann": interval_neumann,
    "star3-kirchhoff": star3_kirchhoff,
    "star3-delta": star3_delta,
    "circle-glued": circle_glued,
    "transmission-bad": transmission_bad,
    "beam-clamped": beam_clamped,
}

DESCRIPTIONS: Dict[str, str] = {
    "interval-dirichlet": "-u'' on [0, pi], u = 0 at both ends",
    "interval-neumann": "-u'' on [0, pi], u' = 0 (inward) at both ends",
    "star3-kirchhoff": "three unit edges, Dirichlet leaves, continuity + "
                       "current conservation at the center",
    "star3-delta": "star3 with a delta coupling of strength alpha = 1 at "
                   "the center",
    "circle-glued": "two unit intervals glued at both endpoint pairs into "
                    "a circle of circumference 2",
    "transmission-bad": "transmission rows that equate inward derivatives; "
                        "fails the ellipticity check by construction",
    "beam-clamped": "+u'''' on [0, 1], clamped (u = u' = 0) at both ends",
}


def build(name: str, **kwargs) -> BoundaryContactProblem:
    if name not in BUILDERS:
        raise KeyError(f"unknown builtin '{name}'; known: "
                       + ", ".join(sorted(BUILDERS)))
    return BUILDERS[name](**kwargs)


def oracle(name: str) -> dict:
    """Closed-form sidecar data for a builtin."""
    if name == "interval-dirichlet":
        return {
            "spectrum": "lambda_k = k^2, k = 1, 2, ...",
            "first_eigenvalues": [float(k * k) for k in range(1, 13)],
            "heat_alpha0": math.pi / math.sqrt(4 * math.pi),
            "heat_alpha1": -0.5,
            "zeta_at_0": -0.5,
            "zeta_residue_at_half": 0.5,
            "zeta_at_2": math.pi ** 4 / 90.0,
            "weyl_exponent": 2.0,
            "weyl_constant": 1.0,
            "resolvent_trace_N1": "pi*coth(pi*sqrt(s))/(2*sqrt(s)) - 1/(2*s) at lambda = -s",
        }
    if name == "interval-neumann":
        return {
            "spectrum": "lambda = 0 and k^2, k = 1, 2, ...",
            "first_eigenvalues": [0.0] + [float(k * k) for k in range(1, 12)],
            "heat_alpha0": math.pi / math.sqrt(4 * math.pi),
            "heat_alpha1": 0.5,
            "weyl_exponent": 2.0,
            "weyl_constant": 1.0,
            "zeta_defined": False,
        }
    if name == "star3-kirchhoff":
        ks = []
        n = 1
        while len(ks) < 12:
            ks.append(((n - 0.5) * math.pi, 1))
            ks.append((n * math.pi, 2))
            n += 1
        return {
            "spectrum": "k = (n - 1/2) pi simple (cos k = 0) and k = n pi "
                        "double (sin k = 0); lambda = k^2",
            "first_eigenvalues": [[k * k, q] for k, q in ks[:8]],
            "heat_alpha0": 3.0 / math.sqrt(4 * math.pi),
            "heat_alpha1": -1.0,
            "weyl_exponent": 2.0,
            "weyl_constant": (math.pi / 3.0) ** 2,
        }
    if name == "star3-delta":
        return {
            "spectrum": "sin k = 0 double, plus simple roots of "
                        "tan k = -3k/alpha; lambda = k^2",
            "alpha": 1.0,
            "heat_alpha0": 3.0 / math.sqrt(4 * math.pi),
        }
    if name == "circle-glued":
        return {
            "spectrum": "0 simple, (n pi)^2 double",
            "first_eigenvalues": [[0.0, 1]] + [[(n * math.pi) ** 2, 2]
                                               for n in range(1, 6)],
            "heat_alpha0": 2.0 / math.sqrt(4 * math.pi),
            "heat_alpha1": 0.0,
            "weyl_exponent": 2.0,
            "weyl_constant": (math.pi / 2.0) ** 2,
        }
    if name == "transmission-bad":
        return {
            "elliptic": False,
            "note": "Lopatinsky determinant vanishes identically on the arc",
        }
    if name == "beam-clamped":
        roots = _beam_roots(6)
        return {
            "spectrum": "lambda = k^4 with cos(k) cosh(k) = 1, k > 0",
            "first_k": roots,
            "first_eigenvalues": [k ** 4 for k in roots],
            "heat_alpha0": (1.0 / math.pi) * math.gamma(1.25),
        }
    raise KeyError(f"unknown builtin '{name}'")
