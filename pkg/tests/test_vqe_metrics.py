import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiqida import metrics, vqe
from multiqida.ansatz import compose
from multiqida.lattice import LatticeSpec, PauliHamiltonian, PauliString, build_heisenberg, neel_bits, neel_energy
from multiqida.layers import LayerPlan, ladder_layer
from multiqida.statevector import AnsatzCircuit, Gate, basis_state, expectation, run_circuit


def test_single_qubit_vqe():
    h = PauliHamiltonian(1, [PauliString(1.0, "Z")])
    c = AnsatzCircuit(1, [Gate("RY", (0,), (0,))], [0], [(0, 1)], 1)
    res = vqe.vqe(h, c, [0.1])
    assert res.energy == pytest.approx(-1, abs=1e-8)
    assert math.cos(res.params[0]) == pytest.approx(-1, abs=1e-8)
    assert res.trajectory[0] == pytest.approx(math.cos(0.1))
    assert res.trajectory[-1] == res.energy


def test_zero_parameter_circuit():
    h = build_heisenberg(LatticeSpec(1, 2))
    res = vqe.vqe(h, AnsatzCircuit(2), [])
    assert res.energy == pytest.approx(0.25) and res.nit == 0


def test_single_so4_reaches_singlet():
    h = build_heisenberg(LatticeSpec(1, 2))
    c = compose("QIDA_SO4", LayerPlan(2, [[(0, 1)]], []))
    res = vqe.vqe(h, c, np.full(6, 0.3), initial=basis_state([0, 1]))
    assert res.energy == pytest.approx(np.linalg.eigvalsh(h.to_dense())[0], abs=1e-6)


def test_active_slice_leaves_others_fixed():
    h = build_heisenberg(LatticeSpec(1, 3))
    c = compose("LADDER2", n=3)
    x0 = np.linspace(0.1, 0.9, c.n_params)
    res = vqe.vqe(h, c, x0, active=(3, 6))
    assert np.array_equal(res.params[:3], x0[:3]) and np.array_equal(res.params[6:], x0[6:])
    assert res.energy <= res.trajectory[0] + 1e-12


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        vqe.OptimizerConfig(gtol=0)
    with pytest.raises(ValueError):
        vqe.OptimizerConfig(method="COBYLA")
    with pytest.raises(ValueError):
        vqe.OptimizerConfig(initial_state="plus")


@pytest.fixture(scope="module")
def small_system():
    spec = LatticeSpec(2, 3)
    h = build_heisenberg(spec)
    plan = LayerPlan(6, [[(0, 3), (2, 5)], [(1, 4)], [(0, 1), (4, 5)]], [ladder_layer(6)])
    e0 = float(np.linalg.eigvalsh(h.to_dense().real)[0])
    return spec, h, plan, e0


@pytest.mark.parametrize("kind", ["QIDA_CX", "QIDA_SO4"])
def test_iterative_record_structure(small_system, kind):
    spec, h, plan, e0 = small_system
    c = compose(kind, plan)
    rec = vqe.iterative_layered_vqe(h, c, seed=3)
    labels = [p[0] for p in rec.phases]
    assert labels == ["L1", "L2a", "L2b", "L3a", "L3b", "L4a", "L4b"]
    assert rec.energy == rec.energies[-1]
    assert min(rec.energies) >= e0 - 1e-9
    assert len(rec.params) == c.n_params
    # appending a zero layer does not move the energy: each phase (a) starts where the previous phase ended
    for prev, cur in zip(rec.phases[:-1], rec.phases[1:]):
        assert rec.energies[cur[1]] == pytest.approx(rec.energies[prev[2]], abs=1e-9)
    # incumbent never increases inside a phase
    for _, a, b in rec.phases:
        seg = rec.energies[a:b + 1]
        assert all(y <= x + 1e-12 for x, y in zip(seg, seg[1:]))
    assert rec.energy == pytest.approx(expectation(h, run_circuit(c, np.array(rec.params))), abs=1e-10)


def test_single_layer_plan_is_plain_vqe(small_system):
    _, h, _, _ = small_system
    c = compose("QIDA_SO4", LayerPlan(6, [[(0, 1), (2, 3), (4, 5)]], []))
    rec = vqe.iterative_layered_vqe(h, c, seed=1)
    assert [p[0] for p in rec.phases] == ["L1"]


def test_batch_determinism_and_seeds(small_system):
    spec, h, plan, e0 = small_system
    job = vqe.make_job(h, "QIDA_CX", plan, lattice=spec.label, e_exact=e0, e_neel=neel_energy(spec))
    a = vqe.batch_runs(job, 2, base_seed=10)
    b = vqe.batch_runs(job, 2, base_seed=10)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    assert [r.seed for r in a] == [10, 11]
    single = vqe.batch_runs(job, 1, base_seed=11)[0]
    assert single.energy == a[1].energy
    with pytest.raises(ValueError):
        vqe.batch_runs(job, 0)


def test_batch_parallel_matches_serial(small_system):
    spec, h, plan, e0 = small_system
    job = vqe.make_job(h, "LADDER2", plan, e_exact=e0, e_neel=neel_energy(spec))
    serial = vqe.batch_runs(job, 2, 5, threads=1)
    parallel = vqe.batch_runs(job, 2, 5, threads=2)
    assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]


def test_neel_initial_state(small_system):
    spec, h, plan, _ = small_system
    cfg = vqe.OptimizerConfig(initial_state="neel")
    job = vqe.make_job(h, "QIDA_SO4", plan, cfg, neel_bits(spec))
    assert job.initial[int("".join(map(str, neel_bits(spec))), 2)] == 1
    with pytest.raises(ValueError):
        vqe.make_job(h, "QIDA_SO4", plan, cfg)


def test_record_json_roundtrip(small_system):
    _, h, plan, _ = small_system
    rec = vqe.iterative_layered_vqe(h, compose("QIDA_SO4", plan), seed=0)
    back = vqe.VqeRunRecord.from_json(rec.to_json())
    assert back == rec
    rows = list(rec.trajectory_rows())
    assert len(rows) == len(rec.energies)
    with pytest.raises(ValueError):
        vqe.VqeRunRecord.from_json('{"seed": 1}')


def test_numerical_failure_is_recorded(small_system, monkeypatch):
    _, h, plan, _ = small_system
    monkeypatch.setattr(vqe, "energy_and_gradient", lambda *a: (float("nan"), np.zeros(1)))
    job = vqe.make_job(h, "QIDA_SO4", plan)
    rec = vqe.batch_runs(job, 1)[0]
    assert rec.status == "failed" and not rec.ok


# metrics ------------------------------------------------------------------

def test_aqe_rqe_examples():
    assert metrics.aqe(-6.691680, -6.691680) == 100
    assert metrics.aqe(0.0, -6.691680) == 0
    assert metrics.aqe(-6.362179, -6.691680) == pytest.approx(95.08, abs=0.005)
    assert metrics.rqe(-4.25, -6.691680, -4.25) == 0
    assert metrics.rqe(-6.691680, -6.691680, -4.25) == 100
    assert metrics.rqe(-6.362179, -6.691680, -4.25) == pytest.approx(86.51, abs=0.005)
    with pytest.raises(ZeroDivisionError):
        metrics.aqe(-1.0, 0.0)
    with pytest.raises(ZeroDivisionError):
        metrics.rqe(-1.0, -2.0, -2.0)


def test_deviation_kernel():
    assert metrics.deviation_metrics([1, 3], 1) == 1.0
    assert metrics.deviation_metrics([2, 2, 2], 2) == 0
    with pytest.raises(ValueError):
        metrics.deviation_metrics([], 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-6.69, -4.3), min_size=1, max_size=20))
def test_summary_invariants(energies):
    s = metrics.summarize(energies, -6.691680, -4.25)
    assert s.E_best <= s.E_avg + 1e-12
    assert s.AQE_best >= s.AQE_avg - 1e-9
    assert min(s.MED, s.MAED, s.MRED) >= 0
    assert s.MAED == pytest.approx(s.MED * 100 / 6.691680, abs=1e-9)


def test_summary_csv_columns():
    s = metrics.summarize([-6.0, -6.1], -6.691680, -4.25, "3x4", "QIDA_CX", 52)
    header = metrics.summary_csv([s]).splitlines()[0].split(",")
    assert header[:11] == ["Lattice", "Ansatz", "E_avg", "E_best", "AQE_avg", "RQE_avg", "AQE_best", "RQE_best",
                           "MED", "MAED", "MRED"]
