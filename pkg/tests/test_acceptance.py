"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that the session summary prints under
"acceptance criteria". Target energies and counts are fixed constants; the
oracles (dense diagonalisation, finite differences) are independent of the
code paths being checked.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from multiqida import metrics, mps, qmi, reference, vqe
from multiqida import statevector as sv
from multiqida.ansatz import cnot_count, compose
from multiqida.lattice import neel_energy

from conftest import SYSTEMS, random_state, record_acceptance

GOLDEN = Path(__file__).parent / "golden"

E_EXACT = {
    "3x3": -4.749327,
    "2x6": -6.603472,
    "3x4": -6.691680,
    "3x4_h2": -9.508473,
    "3x4_delta2_3": -5.338751,
    "3x4_delta1_10": -4.272670,
}
E_NEEL = {"3x3": -3.00, "2x6": -4.00, "3x4": -4.25}

CNOTS = {
    "LADDER4": {"3x3": 32, "2x6": 44, "3x4": 44, "3x4_h2": 44, "3x4_delta2_3": 44, "3x4_delta1_10": 44},
    "LADDER5": {"3x3": 40, "2x6": 55, "3x4": 55, "3x4_h2": 55, "3x4_delta2_3": 55, "3x4_delta1_10": 55},
    "LADDER6": {"3x4": 66, "3x4_delta2_3": 66},
    "QIDA_CX": {"3x3": 32, "2x6": 48, "3x4": 52, "3x4_h2": 50, "3x4_delta2_3": 52, "3x4_delta1_10": 46},
    "QIDA_SO4": {"3x3": 40, "2x6": 54, "3x4": 56, "3x4_h2": 54, "3x4_delta2_3": 56, "3x4_delta1_10": 54},
}

N_SEEDS = 10
VQE_BUDGET_S = 30 * 60


def test_criterion_01_exact_energies(exact_ground):
    worst = 0.0
    for name, target in E_EXACT.items():
        e, _ = exact_ground[name]
        worst = max(worst, abs(e - target))
    record_acceptance(1, worst <= 1e-5, f"max |E - E_table| = {worst:.2e} (tol 1e-5)")
    assert worst <= 1e-5


def test_criterion_02_neel_energies():
    ok = all(neel_energy(SYSTEMS[k]) == v for k, v in E_NEEL.items())
    # the field and anisotropy leave the Neel energy of the 3x4 lattice at -4.25
    ok &= all(neel_energy(SYSTEMS[k]) == -4.25 for k in ("3x4_h2", "3x4_delta2_3", "3x4_delta1_10"))
    record_acceptance(2, ok, "Neel energies -3.00 / -4.00 / -4.25 exact")
    assert ok


def test_criterion_03_dmrg_matches_exact(hamiltonians, exact_ground):
    worst_e, worst_ov, worst_t = 0.0, 0.0, 0.0
    for name, h in hamiltonians.items():
        if h.n_qubits != 12:
            continue
        e0, psi0 = exact_ground[name]
        t = time.perf_counter()
        res = mps.dmrg(mps.build_mpo(h), chi=64, sweeps=30, seed=0)
        elapsed = time.perf_counter() - t
        overlap = abs(np.vdot(psi0, mps.mps_to_dense(res.state))) ** 2
        worst_e = max(worst_e, abs(res.energy - e0))
        worst_ov = max(worst_ov, 1 - overlap)
        worst_t = max(worst_t, elapsed)
    ok = worst_e <= 1e-6 and worst_ov <= 1e-5 and worst_t < 60
    record_acceptance(3, ok, f"max |E_dmrg - E_exact| = {worst_e:.1e}, max 1-overlap = {worst_ov:.1e}, "
                             f"slowest {worst_t:.1f}s")
    assert ok


def test_criterion_04_qmi_dmrg_vs_dense(hamiltonians, exact_refs):
    h = hamiltonians["3x3"]
    dm = reference.reference_state(h, "dmrg", chi=64)
    q_mps = qmi.qmi_matrix(dm.state)
    q_dense = qmi.qmi_matrix(exact_refs["3x3"].state)
    diff = np.abs(q_mps.values - q_dense.values).max()
    ok = diff <= 1e-6
    for m in (q_mps, q_dense):
        v, s = m.values, m.single_entropies
        off = ~np.eye(m.n, dtype=bool)
        ok &= bool(np.array_equal(v, v.T)) and bool(np.all(np.diag(v) == 0))
        ok &= bool(np.all(v[off] >= 0)) and bool(np.all(v[off] <= 2 * np.minimum.outer(s, s)[off] + 1e-9))
    record_acceptance(4, ok, f"3x3 max |I_mps - I_dense| = {diff:.1e}; symmetric, zero diagonal, bounded")
    assert ok


def test_criterion_05_layer_plans(plans):
    mismatched = []
    for name, plan in plans.items():
        golden = (GOLDEN / f"layers_{name}.txt").read_text()
        if plan.to_text() != golden:
            mismatched.append(name)
    third = set(plans["3x4"].qida_layers[2])
    regression = {(4, 5), (5, 9)} <= third
    ok = not mismatched and regression
    record_acceptance(5, ok, f"{len(plans) - len(mismatched)}/{len(plans)} plans byte-identical to golden files; "
                             f"3x4 layer 3 holds [4,5] and [5,9]: {regression}")
    assert ok, mismatched


def test_criterion_06_cnot_counts(plans):
    wrong = []
    cells = 0
    for kind, row in CNOTS.items():
        for name, want in row.items():
            cells += 1
            got = cnot_count(compose(kind, plans[name], SYSTEMS[name].n_sites))
            if got != want:
                wrong.append(f"{kind}/{name}: {got} != {want}")
    # every filled cell of the CNOT table: 14 ladder entries and 12 QIDA entries
    ok = not wrong and cells == 26
    record_acceptance(6, ok, f"{cells - len(wrong)}/{cells} CNOT cells reproduced")
    assert ok, wrong


def test_criterion_07_identity_suite(plans, hamiltonians):
    rng = np.random.default_rng(2024)
    so4_err = np.abs(sv.so4_unitary(np.zeros(6)) - np.eye(4)).max()
    worst = 0.0
    cx = compose("QIDA_CX", plans["3x4"])
    for k in range(1, cx.n_layers):
        sub = vqe.layer_subcircuit(cx, k)
        for _ in range(100):
            psi = random_state(12, rng)
            worst = max(worst, np.abs(sv.run_circuit(sub, np.zeros(sub.n_params), psi) - psi).max())
    # appending a zero layer to a randomly parameterised prefix leaves the energy unchanged
    h = hamiltonians["3x4"]
    append_err = 0.0
    for kind in ("QIDA_CX", "QIDA_SO4"):
        c = compose(kind, plans["3x4"])
        for k in range(1, c.n_layers):
            x = rng.uniform(0, 2 * np.pi, c.param_slices[k - 1][1])
            before = sv.expectation(h, sv.run_circuit(c.truncated(k), x))
            after = sv.expectation(h, sv.run_circuit(c.truncated(k + 1), np.concatenate([x, np.zeros(
                c.param_slices[k][1] - c.param_slices[k][0])])))
            append_err = max(append_err, abs(after - before))
    ok = so4_err <= 1e-10 and worst <= 1e-10 and append_err <= 1e-9
    record_acceptance(7, ok, f"SO4(0) err {so4_err:.1e}, V-shape identity err {worst:.1e} over "
                             f"{100 * (cx.n_layers - 1)} states, zero-layer energy shift {append_err:.1e}")
    assert ok


def test_criterion_08_gradient_check(plans, hamiltonians):
    h = hamiltonians["3x3"]
    c = compose("QIDA_SO4", plans["3x3"])
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(0, 2 * np.pi, c.n_params)
        _, g = sv.energy_and_gradient(h, c, x)
        fd = np.empty(c.n_params)
        for k in range(c.n_params):
            d = np.zeros(c.n_params)
            d[k] = 1e-5
            fd[k] = (sv.expectation(h, sv.run_circuit(c, x + d)) - sv.expectation(h, sv.run_circuit(c, x - d))) / 2e-5
        worst = max(worst, np.abs(g - fd).max())
    ok = worst <= 1e-6
    record_acceptance(8, ok, f"max |grad - central FD| = {worst:.1e} over 20 points x {c.n_params} params")
    assert ok


@pytest.fixture(scope="module")
def vqe_batches(plans, hamiltonians, exact_ground):
    h = hamiltonians["3x4"]
    e_exact = exact_ground["3x4"][0]
    e_neel = neel_energy(SYSTEMS["3x4"])
    out = {}
    t = time.perf_counter()
    for kind in ("QIDA_SO4", "QIDA_CX", "LADDER5"):
        job = vqe.make_job(h, kind, plans["3x4"], lattice="3x4", e_exact=e_exact, e_neel=e_neel)
        recs = vqe.batch_runs(job, N_SEEDS, base_seed=0)
        out[kind] = (recs, metrics.summarize_records(recs)[0])
    return out, time.perf_counter() - t, e_exact


@pytest.mark.slow
def test_criterion_09_vqe_statistics(vqe_batches):
    batches, elapsed, _ = vqe_batches
    so4, cx, lad = batches["QIDA_SO4"][1], batches["QIDA_CX"][1], batches["LADDER5"][1]
    checks = {
        "a": so4.AQE_avg >= 93 and so4.AQE_best >= 94.5,
        "b": cx.AQE_avg >= 91.5,
        "c": lad.AQE_avg <= 90 and so4.RQE_avg - lad.RQE_avg >= 10,
        "d": cx.MED <= 0.05,
        "time": elapsed < VQE_BUDGET_S,
    }
    for key, ok in checks.items():
        record_acceptance(9, ok, f"({key}) {'ok' if ok else 'violated'}")
    record_acceptance(9, True, f"SO4 AQE avg/best {so4.AQE_avg:.2f}/{so4.AQE_best:.2f}, CX AQE avg {cx.AQE_avg:.2f} "
                               f"MED {cx.MED:.2g}, L5 AQE avg {lad.AQE_avg:.2f}, RQE gap "
                               f"{so4.RQE_avg - lad.RQE_avg:.1f}, {elapsed / 60:.1f} min")
    assert all(checks.values()), checks


@pytest.mark.slow
def test_criterion_10_variational_bound(vqe_batches):
    batches, _, e_exact = vqe_batches
    energies = np.concatenate([r.energies for recs, _ in batches.values() for r in recs])
    violations = int(np.sum(energies < e_exact - 1e-9))
    ok = violations == 0 and np.all(np.isfinite(energies))
    record_acceptance(10, ok, f"{violations} violations over {energies.size} recorded energies "
                              f"(min - E_exact = {energies.min() - e_exact:.2e})")
    assert ok


def test_criterion_11_metric_identities(vqe_batches):
    batches, _, e_exact = vqe_batches
    e_neel = neel_energy(SYSTEMS["3x4"])
    worst = max(abs(s.MAED - s.MED * 100 / abs(e_exact)) for _, s in batches.values())
    exact_ok = metrics.rqe(e_exact, e_exact, e_neel) == 100 and metrics.rqe(e_neel, e_exact, e_neel) == 0
    ok = worst <= 1e-9 and exact_ok
    record_acceptance(11, ok, f"max |MAED - MED*100/|E_exact|| = {worst:.1e}; rqe(E_exact)=100, rqe(E_neel)=0: "
                              f"{exact_ok}")
    assert ok
