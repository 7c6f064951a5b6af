"""Heisenberg Hamiltonians on open-boundary rectangular lattices.

Sites are labelled row-major (``site = r * cols + c``) and spin-up is the
``|0>`` computational state (eigenvalue +1 of Z).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from functools import reduce

import numpy as np

PAULI_LABELS = "IXYZ"

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int
    J: float = 1.0
    h: float = 0.0
    delta: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"lattice dimensions must be positive, got {self.rows}x{self.cols}")
        if self.rows * self.cols < 2:
            raise ValueError("lattice needs at least two sites")
        if self.boundary != "open":
            raise ValueError(f"only open boundaries are supported, got {self.boundary!r}")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    @property
    def label(self) -> str:
        parts = [f"{self.rows}x{self.cols}"]
        if self.h != 0:
            parts.append(f"h={self.h:g}")
        if self.delta != 1:
            parts.append(f"delta={self.delta:.6g}")
        return ",".join(parts)

    def site(self, r: int, c: int) -> int:
        return r * self.cols + c

    def key(self) -> str:
        """Stable hash used for on-disk caches."""
        payload = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PauliString:
    coefficient: float
    ops: str

    def __post_init__(self):
        if any(p not in PAULI_LABELS for p in self.ops):
            raise ValueError(f"invalid Pauli label in {self.ops!r}")
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, p in enumerate(self.ops) if p != "I")

    @classmethod
    def from_sites(cls, coefficient: float, n: int, sites: dict[int, str]) -> PauliString:
        ops = ["I"] * n
        for q, p in sites.items():
            ops[q] = p
        return cls(float(coefficient), "".join(ops))

    def to_dense(self) -> np.ndarray:
        return self.coefficient * reduce(np.kron, (_PAULI_MATRICES[p] for p in self.ops))


@dataclass
class PauliHamiltonian:
    n_qubits: int
    terms: list[PauliString] = field(default_factory=list)

    def __post_init__(self):
        merged: dict[str, float] = {}
        for t in self.terms:
            if len(t.ops) != self.n_qubits:
                raise ValueError(f"term {t.ops!r} does not act on {self.n_qubits} qubits")
            merged[t.ops] = merged.get(t.ops, 0.0) + t.coefficient
        self.terms = [PauliString(c, ops) for ops, c in merged.items()]
        self._compiled = None

    def __len__(self) -> int:
        return len(self.terms)

    def compiled(self):
        """Matrix-free kernel for this Hamiltonian (built once, then cached)."""
        if self._compiled is None:
            from .statevector import CompiledPauliSum

            self._compiled = CompiledPauliSum.from_hamiltonian(self)
        return self._compiled

    def to_dense(self) -> np.ndarray:
        """Dense matrix via explicit Kronecker products. Only for small test systems."""
        if self.n_qubits > 12:
            raise ValueError("refusing to build a dense matrix above 12 qubits")
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.to_dense()
        return out


def lattice_edges(spec: LatticeSpec) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds ``(i, j)`` with ``i < j``, horizontal bonds first per site."""
    edges = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            s = spec.site(r, c)
            if c + 1 < spec.cols:
                edges.append((s, s + 1))
            if r + 1 < spec.rows:
                edges.append((s, s + spec.cols))
    return edges


def build_heisenberg(spec: LatticeSpec) -> PauliHamiltonian:
    """H = J/4 sum_<ij> [delta (XX + YY) + ZZ] - h/2 sum_i Z_i."""
    n = spec.n_sites
    terms = []
    for i, j in lattice_edges(spec):
        terms.append(PauliString.from_sites(spec.J / 4 * spec.delta, n, {i: "X", j: "X"}))
        terms.append(PauliString.from_sites(spec.J / 4 * spec.delta, n, {i: "Y", j: "Y"}))
        terms.append(PauliString.from_sites(spec.J / 4, n, {i: "Z", j: "Z"}))
    if spec.h != 0:
        for i in range(n):
            terms.append(PauliString.from_sites(-spec.h / 2, n, {i: "Z"}))
    return PauliHamiltonian(n, terms)


def neel_bits(spec: LatticeSpec) -> list[int]:
    """Checkerboard occupation: 0 (up) on even sublattice, 1 (down) on odd."""
    return [(r + c) % 2 for r in range(spec.rows) for c in range(spec.cols)]


def neel_energy(spec: LatticeSpec) -> float:
    """Energy of the checkerboard product state.

    Every bond is antiparallel (ZZ = -1, XX/YY vanish on a basis state) and the
    field couples to the sublattice imbalance.
    """
    bits = neel_bits(spec)
    n_up = bits.count(0)
    n_down = len(bits) - n_up
    return -spec.J / 4 * len(lattice_edges(spec)) - spec.h / 2 * (n_up - n_down)
