"""Single VQE optimisations and the iterative layer-by-layer routine."""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzKind, compose, cnot_count
from .statevector import AnsatzCircuit, Gate, basis_state, energy_and_gradient, run_circuit, zero_state

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "BFGS"
    gtol: float = 1e-6
    maxiter: int = 10000
    relax_maxiter: int | None = None
    initial_state: str = "zeros"

    def __post_init__(self):
        if self.method.upper() != "BFGS":
            raise ValueError(f"only BFGS is supported, got {self.method!r}")
        if not self.gtol > 0:
            raise ValueError("gtol must be positive")
        if self.maxiter < 1 or (self.relax_maxiter is not None and self.relax_maxiter < 1):
            raise ValueError("iteration caps must be positive")
        if self.initial_state not in ("zeros", "neel"):
            raise ValueError(f"initial_state must be 'zeros' or 'neel', got {self.initial_state!r}")


def initial_state(n: int, choice: str = "zeros", neel_bits=None) -> np.ndarray:
    if choice == "zeros":
        return zero_state(n)
    if choice == "neel":
        if neel_bits is None:
            raise ValueError("the Neel initial state needs the lattice sublattice bits")
        return basis_state(neel_bits)
    raise ValueError(f"unknown initial state {choice!r}")


@dataclass
class VqeResult:
    energy: float
    params: np.ndarray
    trajectory: list[float]
    nit: int
    nfev: int
    success: bool
    message: str


def vqe(h, circuit: AnsatzCircuit, init_params, config: OptimizerConfig = OptimizerConfig(),
        active: tuple[int, int] | None = None, initial: np.ndarray | None = None,
        maxiter: int | None = None) -> VqeResult:
    """BFGS minimisation of the circuit energy with adjoint gradients.

    ``active`` restricts the optimisation to a parameter range; the others stay
    at their ``init_params`` values. The trajectory holds the starting energy
    followed by one entry per optimizer iteration.
    """
    x0 = np.array(init_params, dtype=float)
    if x0.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {x0.shape}")
    lo, hi = active if active is not None else (0, circuit.n_params)
    if not 0 <= lo <= hi <= circuit.n_params:
        raise ValueError(f"bad active range {active}")

    full = x0.copy()
    counter = {"nfev": 0}

    def fun(sub):
        full[lo:hi] = sub
        e, g = energy_and_gradient(h, circuit, full, initial)
        counter["nfev"] += 1
        if not np.isfinite(e) or not np.all(np.isfinite(g)):
            raise NumericalFailure(f"non-finite energy or gradient at evaluation {counter['nfev']}")
        return e, g[lo:hi]

    e0 = fun(x0[lo:hi])[0]
    trajectory = [e0]
    if hi == lo:
        return VqeResult(e0, x0, trajectory, 0, counter["nfev"], True, "no free parameters")

    def callback(intermediate_result):
        trajectory.append(float(intermediate_result.fun))

    res = minimize(fun, x0[lo:hi], jac=True, method="BFGS", callback=callback,
                   options={"gtol": config.gtol, "maxiter": maxiter or config.maxiter})
    out = x0.copy()
    out[lo:hi] = res.x
    energy = float(res.fun)
    if energy > e0 + 1e-12:
        # never hand back something worse than the starting point
        energy, out = e0, x0.copy()
    if trajectory[-1] != energy:
        trajectory.append(energy)
    return VqeResult(energy, out, trajectory, int(res.nit), counter["nfev"], bool(res.success),
                     str(res.message))


def layer_subcircuit(circuit: AnsatzCircuit, k: int) -> AnsatzCircuit:
    """Layer ``k`` alone, its parameter slots shifted to start at zero."""
    lo, hi = circuit.param_slices[k]
    gates = [Gate(g.kind, g.qubits, tuple(s - lo for s in g.slots)) for g in circuit.layer_gates(k)]
    return AnsatzCircuit(circuit.n_qubits, gates, [0], [(0, hi - lo)], hi - lo, circuit.kind)


def layer_rng(seed: int, layer: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(layer)]))


@dataclass
class VqeRunRecord:
    run_id: int
    seed: int
    ansatz: str
    lattice: str
    energy: float
    params: list[float]
    energies: list[float] = field(default_factory=list)
    phases: list[list] = field(default_factory=list)  # [label, first, last] trajectory indices
    nit: int = 0
    nfev: int = 0
    cnots: int = 0
    e_exact: float | None = None
    e_neel: float | None = None
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> VqeRunRecord:
        data = json.loads(line)
        missing = {"run_id", "seed", "ansatz", "lattice", "energy"} - data.keys()
        if missing:
            raise ValueError(f"record missing fields {sorted(missing)}")
        return cls(**data)

    def trajectory_rows(self):
        for label, first, last in self.phases:
            for it in range(first, last + 1):
                yield self.run_id, it, self.energies[it], label


class _Recorder:
    def __init__(self):
        self.energies: list[float] = []
        self.phases: list[list] = []
        self.nit = 0
        self.nfev = 0

    def add(self, label: str, res: VqeResult):
        first = len(self.energies)
        self.energies.extend(float(e) for e in res.trajectory)
        self.phases.append([label, first, len(self.energies) - 1])
        self.nit += res.nit
        self.nfev += res.nfev


def iterative_layered_vqe(h, circuit: AnsatzCircuit, seed: int, config: OptimizerConfig = OptimizerConfig(),
                          initial: np.ndarray | None = None, run_id: int = 0, lattice: str = "",
                          e_exact: float | None = None, e_neel: float | None = None) -> VqeRunRecord:
    """Grow the circuit one layer at a time.

    Layer 1 starts from uniform angles in [0, 2pi) and is optimised alone.
    Each later layer starts at zero (the identity), is optimised with the
    earlier parameters frozen, and then everything is relaxed together.
    """
    if circuit.n_layers < 1:
        raise ValueError("circuit has no layers")
    psi0 = zero_state(circuit.n_qubits) if initial is None else initial
    rec = _Recorder()
    lo, hi = circuit.param_slices[0]
    params = layer_rng(seed, 0).uniform(0, TWO_PI, hi - lo)
    first = circuit.truncated(1)
    res = vqe(h, first, params, config, initial=psi0)
    rec.add("L1", res)
    params = res.params
    for k in range(1, circuit.n_layers):
        lo, hi = circuit.param_slices[k]
        # frozen prefix: simulate it once and optimise the new layer on top of it
        prefix = run_circuit(circuit.truncated(k), params, psi0)
        res = vqe(h, layer_subcircuit(circuit, k), np.zeros(hi - lo), config, initial=prefix)
        rec.add(f"L{k + 1}a", res)
        params = np.concatenate([params, res.params])
        res = vqe(h, circuit.truncated(k + 1), params, config, initial=psi0, maxiter=config.relax_maxiter)
        rec.add(f"L{k + 1}b", res)
        params = res.params
    return VqeRunRecord(run_id, int(seed), circuit.kind, lattice, float(rec.energies[-1]), params.tolist(),
                        rec.energies, rec.phases, rec.nit, rec.nfev, cnot_count(circuit), e_exact, e_neel)


def plain_vqe_run(h, circuit: AnsatzCircuit, seed: int, config: OptimizerConfig = OptimizerConfig(),
                  initial: np.ndarray | None = None, run_id: int = 0, lattice: str = "",
                  e_exact: float | None = None, e_neel: float | None = None) -> VqeRunRecord:
    """One VQE over all parameters from a uniform random start (the ladder baseline)."""
    params = layer_rng(seed, 0).uniform(0, TWO_PI, circuit.n_params)
    res = vqe(h, circuit, params, config, initial=initial)
    rec = _Recorder()
    rec.add("full", res)
    return VqeRunRecord(run_id, int(seed), circuit.kind, lattice, float(res.energy), res.params.tolist(),
                        rec.energies, rec.phases, rec.nit, rec.nfev, cnot_count(circuit), e_exact, e_neel)


@dataclass
class BatchJob:
    """Everything a worker needs to run one seed; picklable."""

    h: object
    circuit: AnsatzCircuit
    config: OptimizerConfig
    initial: np.ndarray | None
    layered: bool
    lattice: str = ""
    e_exact: float | None = None
    e_neel: float | None = None


def _run_one(job: BatchJob, run_id: int, seed: int) -> VqeRunRecord:
    fn = iterative_layered_vqe if job.layered else plain_vqe_run
    try:
        return fn(job.h, job.circuit, seed, job.config, job.initial, run_id, job.lattice, job.e_exact, job.e_neel)
    except NumericalFailure as exc:
        log.warning("run %d (seed %d) failed: %s", run_id, seed, exc)
        return VqeRunRecord(run_id, seed, job.circuit.kind, job.lattice, float("nan"), [], cnots=cnot_count(job.circuit),
                            e_exact=job.e_exact, e_neel=job.e_neel, status="failed", message=str(exc))


def _limit_blas_threads():
    # one BLAS thread per worker process, otherwise workers oversubscribe the cores
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")


def batch_runs(job: BatchJob, n_runs: int, base_seed: int = 0, threads: int = 1) -> list[VqeRunRecord]:
    """Independent runs with seeds ``base_seed + k``; failures are recorded, not raised."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    seeds = [base_seed + k for k in range(n_runs)]
    if threads <= 1 or n_runs == 1:
        return [_run_one(job, k, s) for k, s in enumerate(seeds)]
    with ProcessPoolExecutor(max_workers=threads, initializer=_limit_blas_threads) as pool:
        futures = [pool.submit(_run_one, job, k, s) for k, s in enumerate(seeds)]
        return [f.result() for f in futures]


def make_job(h, kind, plan=None, config: OptimizerConfig = OptimizerConfig(), neel_bits=None,
             lattice: str = "", e_exact: float | None = None, e_neel: float | None = None) -> BatchJob:
    kind = AnsatzKind.parse(kind) if isinstance(kind, str) else kind
    circuit = compose(kind, plan, h.n_qubits)
    psi0 = initial_state(h.n_qubits, config.initial_state, neel_bits)
    return BatchJob(h, circuit, config, psi0, kind.is_qida, lattice, e_exact, e_neel)
