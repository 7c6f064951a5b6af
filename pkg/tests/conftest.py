from __future__ import annotations

import numpy as np
import pytest

from multiqida import exact, layers, qmi, reference
from multiqida.lattice import LatticeSpec, build_heisenberg

SYSTEMS = {
    "3x3": LatticeSpec(3, 3),
    "2x6": LatticeSpec(2, 6),
    "3x4": LatticeSpec(3, 4),
    "3x4_h2": LatticeSpec(3, 4, h=2.0),
    "3x4_delta2_3": LatticeSpec(3, 4, delta=2 / 3),
    "3x4_delta1_10": LatticeSpec(3, 4, delta=0.1),
}

# 2x6 needs its first three selected bands merged into one layer
MERGES = {"2x6": [[0, 1, 2]]}

# acceptance outcomes collected by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record_acceptance(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[c]
        ok = all(e[0] for e in entries)
        detail = "; ".join(d for _, d in entries)
        terminalreporter.write_line(f"criterion {c:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def hamiltonians():
    return {k: build_heisenberg(s) for k, s in SYSTEMS.items()}


@pytest.fixture(scope="session")
def exact_refs(hamiltonians):
    return {k: reference.reference_state(h, "exact") for k, h in hamiltonians.items()}


@pytest.fixture(scope="session")
def exact_ground(hamiltonians):
    return {k: exact.exact_ground_state(h) for k, h in hamiltonians.items()}


@pytest.fixture(scope="session")
def plans(exact_refs):
    out = {}
    for k, ref in exact_refs.items():
        plan = layers.build_layers(qmi.qmi_matrix(ref.state))
        if k in MERGES:
            plan = layers.merge_layers(plan, MERGES[k])
        out[k] = plan
    return out


def random_state(n, rng, complex_=True):
    psi = rng.standard_normal(2**n) + (1j * rng.standard_normal(2**n) if complex_ else 0)
    return psi / np.linalg.norm(psi)
