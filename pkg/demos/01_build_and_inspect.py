"""Build a boundary contact problem from scratch and inspect its structure.

A three-edge star with Dirichlet leaves and Kirchhoff matching at the hub:
continuity of the value across the hub plus conservation of the inward
first-derivative current. We assemble it directly from the data model,
validate it, serialize it, and look at the jet conventions.
"""
import math

import numpy as np

import qgspectra as qg

# --- assemble the graph: three unit edges meeting at a hub -----------------
graph = qg.MetricGraph(
    edges=[qg.Edge("e1", 1.0), qg.Edge("e2", 1.0), qg.Edge("e3", 1.0)],
    vertices=[
        qg.Vertex("hub", [qg.Endpoint("e1", qg.LEFT),
                          qg.Endpoint("e2", qg.LEFT),
                          qg.Endpoint("e3", qg.LEFT)]),
        qg.Vertex("v1", [qg.Endpoint("e1", qg.RIGHT)]),
        qg.Vertex("v2", [qg.Endpoint("e2", qg.RIGHT)]),
        qg.Vertex("v3", [qg.Endpoint("e3", qg.RIGHT)]),
    ])

# --- the edge operator: -u'' (order 2, scalar fiber) ------------------------
# coefficients are ascending-power lists per derivative order; each entry is
# an r x r matrix, here 1 x 1 constants.
minus_laplace = qg.EdgeOperator(
    order=2,
    rank=1,
    coeffs=[[np.array([[0.0]])],      # zeroth derivative: 0
            [np.array([[0.0]])],      # first derivative: 0
            [np.array([[-1.0]])]])    # second derivative: -1  =>  -u''

# --- coupling blocks --------------------------------------------------------
# Kirchhoff hub (degree 3): two continuity rows and one current row.
# Block M_k multiplies the k-th inward jet of the fiber stack (u_e1,u_e2,u_e3).
hub = qg.CouplingCondition(
    rows=3,
    blocks=[np.array([[1.0, -1.0, 0.0],
                      [0.0, 1.0, -1.0],
                      [0.0, 0.0, 0.0]]),      # M_0: values agree
            np.array([[0.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0],
                      [1.0, 1.0, 1.0]])])     # M_1: inward derivatives sum to 0
leaf = qg.CouplingCondition(rows=1, blocks=[np.array([[1.0]]),
                                            np.array([[0.0]])])

problem = qg.BoundaryContactProblem(
    graph=graph,
    operators={eid: minus_laplace for eid in ("e1", "e2", "e3")},
    couplings={"hub": hub, "v1": leaf, "v2": leaf, "v3": leaf},
    # sector around the negative real axis (radians in memory, degrees on disk)
    sector=qg.Sector(center_arg=math.pi, half_angle=math.pi / 2))

report = qg.validate(problem)
print("validation ok:", report.ok)
print("canonical hash:", qg.canonical_hash(problem))
sa = qg.self_adjointness_report(problem)
print("symmetric coupling:", sa["symmetric"], "| positive hint:", sa["positive_hint"])

# --- jet conventions ---------------------------------------------------------
# push_forward assembles raw one-sided endpoint jets (value, derivative, ...)
# into the vertex fiber jet matrix used by the coupling rows. At a RIGHT end
# the k-th jet entry picks up (-1)^k: "inward" reverses the orientation.
jet = np.array([2.0, -3.0])               # (u, u') in the edge coordinate
left_fiber = qg.push_forward(problem, "hub", {("e1", qg.LEFT): jet,
                                              ("e2", qg.LEFT): jet,
                                              ("e3", qg.LEFT): jet})
right_fiber = qg.push_forward(problem, "v1", {("e1", qg.RIGHT): jet})
print("\nfiber jets at the hub (left ends, unchanged):\n", left_fiber.real)
print("fiber jets at leaf v1 (right end, derivative sign flipped):\n",
      right_fiber.real)
round_trip = qg.pull_back(problem, "v1", right_fiber)[("e1", qg.RIGHT)]
print("pull_back(push_forward(jet)) == jet:", np.array_equal(round_trip, jet))
# the hub residual of these jets: values agree (rows 0-1) but the current
# row sums three inward derivatives of -3 each
print("hub coupling residual:", qg.apply_coupling(problem, "hub", left_fiber).real)

# --- the same problem ships as a builtin -------------------------------------
builtin = qg.build("star3-kirchhoff")
print("\nmatches the star3-kirchhoff builtin:",
      qg.canonical_hash(problem) == qg.canonical_hash(builtin))

# --- serialize, reload, and compare ------------------------------------------
text = qg.emit_problem(problem)
again = qg.parse_problem(text)
print("serialize -> parse round trip preserves the hash:",
      qg.canonical_hash(again) == qg.canonical_hash(problem))
print("\nfirst lines of the problem file:")
print("\n".join(text.splitlines()[:6]))
