"""Dense statevector simulation for layered ansatz circuits.

Qubit 0 is the most significant bit of the amplitude index. Rotations follow
``R_a(t) = exp(-i t sigma_a / 2)``. States are plain numpy vectors of length
``2**n``; they stay real (float64) as long as every gate and the Hamiltonian
are real, which is the case for Ry/CNOT/SO(4) circuits on Heisenberg models.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

GATE_KINDS = ("RX", "RY", "RZ", "CNOT", "SO4")
_N_SLOTS = {"RX": 1, "RY": 1, "RZ": 1, "CNOT": 0, "SO4": 6}
_N_QUBITS = {"RX": 1, "RY": 1, "RZ": 1, "CNOT": 2, "SO4": 2}

FSWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]],
    dtype=float,
)

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
_CNOT_REV = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=float)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    slots: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _N_QUBITS[self.kind]:
            raise ValueError(f"{self.kind} acts on {_N_QUBITS[self.kind]} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.qubits}")
        if len(self.slots) != _N_SLOTS[self.kind]:
            raise ValueError(f"{self.kind} takes {_N_SLOTS[self.kind]} parameter(s), got {len(self.slots)}")


@dataclass
class AnsatzCircuit:
    """Parameterised gate list plus per-layer bookkeeping.

    ``layer_boundaries[k]`` is the index of the first gate of layer ``k`` and
    ``param_slices[k]`` the half-open parameter range owned by that layer.
    """

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    layer_boundaries: list[int] = field(default_factory=list)
    param_slices: list[tuple[int, int]] = field(default_factory=list)
    n_params: int = 0
    kind: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        used = np.zeros(self.n_params, dtype=bool)
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")
            for s in g.slots:
                if not 0 <= s < self.n_params:
                    raise ValueError(f"parameter slot {s} out of range for {self.n_params} parameters")
                used[s] = True
        if not used.all():
            raise ValueError(f"unused parameter slots: {np.flatnonzero(~used).tolist()}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_boundaries)

    def layer_gates(self, k: int) -> list[Gate]:
        stop = self.layer_boundaries[k + 1] if k + 1 < self.n_layers else len(self.gates)
        return self.gates[self.layer_boundaries[k] : stop]

    def truncated(self, n_layers: int) -> AnsatzCircuit:
        """Circuit made of the first ``n_layers`` layers only."""
        stop = self.layer_boundaries[n_layers] if n_layers < self.n_layers else len(self.gates)
        n_params = self.param_slices[n_layers - 1][1] if n_layers else 0
        return AnsatzCircuit(
            self.n_qubits,
            self.gates[:stop],
            self.layer_boundaries[:n_layers],
            self.param_slices[:n_layers],
            n_params,
            self.kind,
        )

    def is_real(self) -> bool:
        return all(g.kind in ("RY", "CNOT", "SO4") for g in self.gates)


# ---------------------------------------------------------------------------
# elementary matrices


def rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]])


def rz(t: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]])


_PAULI = {
    "RX": np.array([[0, 1], [1, 0]], dtype=complex),
    "RY": np.array([[0, -1j], [1j, 0]]),
    "RZ": np.array([[1, 0], [0, -1]], dtype=complex),
}
_ROT = {"RX": rx, "RY": ry, "RZ": rz}


def _rotation_and_derivative(kind: str, t: float) -> tuple[np.ndarray, np.ndarray]:
    if kind == "RY":
        c, s = np.cos(t / 2), np.sin(t / 2)
        return np.array([[c, -s], [s, c]]), 0.5 * np.array([[-s, -c], [c, -s]])
    u = _ROT[kind](t)
    return u, -0.5j * _PAULI[kind] @ u


def _su2(alpha: float, theta: float, beta: float) -> np.ndarray:
    return rz(alpha) @ ry(theta) @ rz(beta)


def _su2_derivatives(alpha: float, theta: float, beta: float) -> list[np.ndarray]:
    za, zb, yt = rz(alpha), rz(beta), ry(theta)
    dz = lambda u: -0.5j * _PAULI["RZ"] @ u  # noqa: E731
    _, dyt = _rotation_and_derivative("RY", theta)
    return [dz(za) @ yt @ zb, za @ dyt @ zb, za @ yt @ dz(zb)]


# Fixed half of the SO(4) circuit: S on both wires, R = Ry(pi/2) on wire 1,
# then CNOT with control 1 / target 0. Conjugating A (x) B by it lands in SO(4).
_S = rz(np.pi / 2)
_R = ry(np.pi / 2)
_MAGIC = _CNOT_REV @ np.kron(_S, _R @ _S)
_MAGIC_DAG = _MAGIC.conj().T


def so4_unitary(params) -> np.ndarray:
    """Real 4x4 orthogonal gate ``Q^dag (A (x) B) Q`` from six angles.

    ``params = (alpha1, theta1, beta1, alpha2, theta2, beta2)`` with
    ``A = Rz(alpha1) Ry(theta1) Rz(beta1)`` on the first qubit and ``B`` likewise
    on the second. All-zero angles give the identity.
    """
    p = np.asarray(params, dtype=float)
    u = _MAGIC_DAG @ np.kron(_su2(*p[:3]), _su2(*p[3:])) @ _MAGIC
    return u.real.copy()


def so4_derivatives(params) -> tuple[np.ndarray, list[np.ndarray]]:
    p = np.asarray(params, dtype=float)
    a, b = _su2(*p[:3]), _su2(*p[3:])
    da, db = _su2_derivatives(*p[:3]), _su2_derivatives(*p[3:])
    u = (_MAGIC_DAG @ np.kron(a, b) @ _MAGIC).real
    grads = [(_MAGIC_DAG @ np.kron(d, b) @ _MAGIC).real for d in da]
    grads += [(_MAGIC_DAG @ np.kron(a, d) @ _MAGIC).real for d in db]
    return u, grads


def so4_gate_sequence(params) -> list[tuple[str, tuple[int, ...], float | None]]:
    """The 12 one-qubit + 2 CNOT decomposition of :func:`so4_unitary`, in time order."""
    a1, t1, b1, a2, t2, b2 = (float(x) for x in params)
    hp = np.pi / 2
    return [
        ("RZ", (0,), hp),
        ("RZ", (1,), hp),
        ("RY", (1,), hp),
        ("CNOT", (1, 0), None),
        ("RZ", (0,), b1),
        ("RY", (0,), t1),
        ("RZ", (0,), a1),
        ("RZ", (1,), b2),
        ("RY", (1,), t2),
        ("RZ", (1,), a2),
        ("CNOT", (1, 0), None),
        ("RY", (1,), -hp),
        ("RZ", (1,), -hp),
        ("RZ", (0,), -hp),
    ]


def sequence_unitary(seq) -> np.ndarray:
    """Multiply out a two-qubit gate sequence (used to cross-check SO(4) gates)."""
    u = np.eye(4, dtype=complex)
    for kind, qubits, angle in seq:
        if kind == "CNOT":
            g = _CNOT if qubits == (0, 1) else _CNOT_REV
        else:
            m = _ROT[kind](angle)
            g = np.kron(m, np.eye(2)) if qubits == (0,) else np.kron(np.eye(2), m)
        u = g @ u
    return u


# ---------------------------------------------------------------------------
# state manipulation


def zero_state(n: int, dtype=float) -> np.ndarray:
    psi = np.zeros(2**n, dtype=dtype)
    psi[0] = 1
    return psi


def basis_state(bits) -> np.ndarray:
    bits = list(bits)
    psi = np.zeros(2 ** len(bits))
    psi[int("".join(str(b) for b in bits), 2) if bits else 0] = 1
    return psi


def n_qubits_of(state: np.ndarray) -> int:
    n = int(round(np.log2(state.size)))
    if 2**n != state.size:
        raise ValueError(f"state length {state.size} is not a power of two")
    return n


def apply_1q(state: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    v = state.reshape(2**q, 2, 2 ** (n - q - 1))
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    v[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return state


def apply_2q(state: np.ndarray, u: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    """Apply a 4x4 matrix whose first tensor factor acts on ``q0``."""
    if q0 > q1:
        u = u.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        q0, q1 = q1, q0
    v = state.reshape(2**q0, 2, 2 ** (q1 - q0 - 1), 2, 2 ** (n - q1 - 1))
    out = np.einsum("ijkl,xkylz->xiyjz", u.reshape(2, 2, 2, 2), v, optimize=False)
    state[:] = out.reshape(-1)
    return state


@lru_cache(maxsize=None)
def _cnot_slices(n: int, c: int, t: int):
    idx0 = [slice(None)] * n
    idx1 = [slice(None)] * n
    idx0[c] = idx1[c] = 1
    idx0[t], idx1[t] = 0, 1
    return tuple(idx0), tuple(idx1)


def apply_cnot(state: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    v = state.reshape((2,) * n)
    i0, i1 = _cnot_slices(n, c, t)
    tmp = v[i0].copy()
    v[i0] = v[i1]
    v[i1] = tmp
    return state


def _check_qubits(gate: Gate, n: int) -> None:
    if any(q < 0 or q >= n for q in gate.qubits):
        raise ValueError(f"gate {gate} addresses a qubit outside 0..{n - 1}")


def _gate_matrix(gate: Gate, params) -> np.ndarray | None:
    if gate.kind == "CNOT":
        return None
    if gate.kind == "SO4":
        return so4_unitary([params[s] for s in gate.slots])
    return _ROT[gate.kind](params[gate.slots[0]])


def _promote(state: np.ndarray, gate: Gate) -> np.ndarray:
    if gate.kind in ("RX", "RZ") and not np.iscomplexobj(state):
        return state.astype(complex)
    return state


def apply_gate(state: np.ndarray, gate: Gate, params=()) -> np.ndarray:
    """Apply ``gate`` to ``state`` in place (a complex copy is returned if promotion is needed)."""
    n = n_qubits_of(state)
    _check_qubits(gate, n)
    state = _promote(state, gate)
    if gate.kind == "CNOT":
        return apply_cnot(state, gate.qubits[0], gate.qubits[1], n)
    u = _gate_matrix(gate, params)
    if gate.kind == "SO4":
        return apply_2q(state, u, gate.qubits[0], gate.qubits[1], n)
    if np.isrealobj(state):
        u = u.real
    return apply_1q(state, u, gate.qubits[0], n)


def run_circuit(circuit: AnsatzCircuit, params, initial: np.ndarray | None = None) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    if initial is None:
        initial = zero_state(circuit.n_qubits)
    if initial.size != 2**circuit.n_qubits:
        raise ValueError("initial state does not match circuit width")
    state = np.array(initial, copy=True)
    for g in circuit.gates:
        state = apply_gate(state, g, params)
    return state


# ---------------------------------------------------------------------------
# Pauli sums


class CompiledPauliSum:
    """Matrix-free action of a Pauli sum, terms grouped by their bit-flip mask.

    For each flip mask ``x`` the group acts as ``(H psi)[a] = d_x[a] * psi[a ^ x]``
    where ``d_x`` collects coefficients and phases of every string with that mask.
    """

    def __init__(self, n: int, masks: list[int], diagonals: list[np.ndarray]):
        self.n = n
        self.masks = masks
        self.diagonals = diagonals
        idx = np.arange(2**n)
        self._perms = [None if m == 0 else idx ^ m for m in masks]
        self.is_real = all(np.isrealobj(d) for d in diagonals)

    @classmethod
    def from_hamiltonian(cls, h) -> CompiledPauliSum:
        n = h.n_qubits
        idx = np.arange(2**n)
        groups: dict[int, np.ndarray] = {}
        for term in h.terms:
            xmask = zmask = 0
            n_y = 0
            for q, p in enumerate(term.ops):
                bit = 1 << (n - 1 - q)
                if p in "XY":
                    xmask |= bit
                if p in "ZY":
                    zmask |= bit
                n_y += p == "Y"
            # P|b> = i^nY (-1)^{popcount(b & zmask)} |b ^ xmask>, evaluated at b = a ^ xmask
            b = idx ^ xmask
            parity = np.zeros(idx.size, dtype=np.int64)
            m = b & zmask
            while np.any(m):
                parity ^= m & 1
                m >>= 1
            phase = (1j**n_y) * (1 - 2 * parity)
            groups[xmask] = groups.get(xmask, 0) + term.coefficient * phase
        masks, diagonals = [], []
        for xmask, d in sorted(groups.items()):
            d = np.asarray(d, dtype=complex)
            if np.allclose(d.imag, 0, atol=1e-15):
                d = d.real.copy()
            masks.append(xmask)
            diagonals.append(d)
        return cls(n, masks, diagonals)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        dtype = np.result_type(psi.dtype, *(d.dtype for d in self.diagonals)) if self.diagonals else psi.dtype
        out = np.zeros(psi.shape, dtype=dtype)
        for d, perm in zip(self.diagonals, self._perms):
            if perm is None:
                out += d * psi
            else:
                out += d * psi[perm]
        return out

    def diagonal(self) -> np.ndarray:
        for m, d in zip(self.masks, self.diagonals):
            if m == 0:
                return np.real_if_close(d)
        return np.zeros(2**self.n)


def apply_hamiltonian(h, state: np.ndarray) -> np.ndarray:
    return h.compiled().apply(state)


def expectation(h, state: np.ndarray) -> float:
    if state.size != 2**h.n_qubits:
        raise ValueError(f"state of length {state.size} does not match {h.n_qubits} qubits")
    return float(np.vdot(state, h.compiled().apply(state)).real)


# ---------------------------------------------------------------------------
# adjoint differentiation


def energy_and_gradient(h, circuit: AnsatzCircuit, params, initial: np.ndarray | None = None):
    """Energy and exact gradient by one forward and one reverse sweep.

    The reverse sweep keeps ``phi`` (state before the current gate) and
    ``lam`` (``H`` applied to the final state, propagated backwards). Each
    parameter contributes ``2 Re <lam| dU phi>``, evaluated through the small
    ``G[a, b] = sum_r conj(lam[a, r]) phi[b, r]`` block of the acted-on qubits.
    """
    params = np.asarray(params, dtype=float)
    phi = run_circuit(circuit, params, initial)
    lam = h.compiled().apply(phi)
    energy = float(np.vdot(phi, lam).real)
    grad = np.zeros(circuit.n_params)
    n = circuit.n_qubits
    for g in reversed(circuit.gates):
        if g.kind == "CNOT":
            c, t = g.qubits
            apply_cnot(phi, c, t, n)
            apply_cnot(lam, c, t, n)
            continue
        if g.kind == "SO4":
            u, du = so4_derivatives([params[s] for s in g.slots])
            ut = u.T.copy()
            apply_2q(phi, ut, g.qubits[0], g.qubits[1], n)
            blk = _block_2q(lam, phi, g.qubits[0], g.qubits[1], n)
            for s, d in zip(g.slots, du):
                grad[s] += 2 * np.real(np.sum(d * blk))
            apply_2q(lam, ut, g.qubits[0], g.qubits[1], n)
            continue
        u, du = _rotation_and_derivative(g.kind, params[g.slots[0]])
        ud = u.conj().T
        if np.isrealobj(phi):
            ud, du = ud.real, du.real
        q = g.qubits[0]
        apply_1q(phi, ud, q, n)
        blk = _block_1q(lam, phi, q, n)
        grad[g.slots[0]] += 2 * np.real(np.sum(du * blk))
        apply_1q(lam, ud, q, n)
    return energy, grad


def gradient(h, circuit: AnsatzCircuit, params, initial: np.ndarray | None = None) -> np.ndarray:
    return energy_and_gradient(h, circuit, params, initial)[1]


def _block_1q(lam: np.ndarray, phi: np.ndarray, q: int, n: int) -> np.ndarray:
    lv = lam.reshape(2**q, 2, -1)
    pv = phi.reshape(2**q, 2, -1)
    return np.einsum("iaj,ibj->ab", lv.conj(), pv)


def _block_2q(lam: np.ndarray, phi: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    swap = q0 > q1
    a, b = (q1, q0) if swap else (q0, q1)
    shape = (2**a, 2, 2 ** (b - a - 1), 2, 2 ** (n - b - 1))
    blk = np.einsum("xiyjz,xkylz->ijkl", lam.reshape(shape).conj(), phi.reshape(shape))
    if swap:
        blk = blk.transpose(1, 0, 3, 2)
    return blk.reshape(4, 4)
