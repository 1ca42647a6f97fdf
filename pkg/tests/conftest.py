"""Shared fixtures: each builtin's spectrum is computed once per session at a
window sized for the most demanding consumer, and the acceptance tests
register one summary line per criterion that is printed after the run."""
from __future__ import annotations

from typing import List, Tuple

import pytest

import qgspectra as qg
from qgspectra.builtins import build, interval_dirichlet_split

_ACCEPTANCE: List[Tuple[int, str, bool, str, float]] = []


@pytest.fixture
def acceptance():
    def record(num: int, name: str, ok: bool, detail: str, seconds: float):
        _ACCEPTANCE.append((num, name, bool(ok), detail, float(seconds)))
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail, secs in sorted(_ACCEPTANCE):
        terminalreporter.write_line(
            f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} "
            f"[{secs:.1f}s] {detail}")


@pytest.fixture(scope="session")
def p_dirichlet():
    return build("interval-dirichlet")


@pytest.fixture(scope="session")
def p_neumann():
    return build("interval-neumann")


@pytest.fixture(scope="session")
def p_star3():
    return build("star3-kirchhoff")


@pytest.fixture(scope="session")
def p_delta():
    return build("star3-delta")


@pytest.fixture(scope="session")
def p_circle():
    return build("circle-glued")


@pytest.fixture(scope="session")
def p_beam():
    return build("beam-clamped")


@pytest.fixture(scope="session")
def p_split():
    return interval_dirichlet_split()


@pytest.fixture(scope="session")
def sp_dirichlet(p_dirichlet):
    return qg.eigenvalues(p_dirichlet, 1.4e5)


@pytest.fixture(scope="session")
def sp_neumann(p_neumann):
    return qg.eigenvalues(p_neumann, 1.4e5)


@pytest.fixture(scope="session")
def sp_star3(p_star3):
    return qg.eigenvalues(p_star3, 4.6e4)


@pytest.fixture(scope="session")
def sp_delta(p_delta):
    return qg.eigenvalues(p_delta, 4.6e4)


@pytest.fixture(scope="session")
def sp_circle(p_circle):
    return qg.eigenvalues(p_circle, 1.05e5)


@pytest.fixture(scope="session")
def sp_beam(p_beam):
    # past ~5.5e5 the order-4 secular columns decay below double precision;
    # this window holds exactly the first 8 beam eigenvalues
    return qg.eigenvalues(p_beam, 5.5e5)


@pytest.fixture(scope="session")
def sp_split(p_split):
    return qg.eigenvalues(p_split, 1.6e4)
