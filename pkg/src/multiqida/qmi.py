"""Von Neumann entropies and pairwise quantum mutual information (log base 2)."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .mps import MpsState, mps_pair_rdms
from .reference import dense_rdm, rdm_single_from_pair


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-sum(l log2 l) over the eigenvalues of ``rho``; eigenvalues in [-1e-12, 0) count as zero."""
    rho = np.asarray(rho)
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-6:
        raise ValueError(f"density matrix trace {tr:.8f} deviates from 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -1e-12:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


@dataclass
class QmiMatrix:
    """Symmetric matrix of raw mutual information ``I_ij = S_i + S_j - S_ij``."""

    values: np.ndarray
    single_entropies: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def normalized(self) -> np.ndarray:
        """Entries divided by the largest one (all zero stays all zero)."""
        top = self.values.max()
        return self.values / top if top > 0 else self.values.copy()

    def to_csv(self, path: str | Path, normalized: bool = False) -> None:
        write_matrix_csv(path, self.normalized() if normalized else self.values)

    @classmethod
    def from_csv(cls, path: str | Path) -> QmiMatrix:
        return cls(read_matrix_csv(path))


def _pair_rdms(state):
    if isinstance(state, MpsState):
        return mps_pair_rdms(state)
    psi = np.asarray(state)
    n = int(round(np.log2(psi.size)))
    nrm = np.vdot(psi, psi).real
    return {(i, j): dense_rdm(psi, [i, j]) / nrm for i, j in combinations(range(n), 2)}


def qmi_matrix(state) -> QmiMatrix:
    """Pairwise mutual information of a dense state vector or an MPS."""
    pairs = _pair_rdms(state)
    n = 1 + max(j for _, j in pairs) if pairs else 0
    if n < 2:
        raise ValueError("need at least two sites")
    singles = {}
    for (i, j), rho in pairs.items():
        if i not in singles:
            singles[i] = von_neumann_entropy(rdm_single_from_pair(rho, 0))
        if j not in singles:
            singles[j] = von_neumann_entropy(rdm_single_from_pair(rho, 1))
    s1 = np.array([singles[q] for q in range(n)])
    values = np.zeros((n, n))
    for (i, j), rho in pairs.items():
        v = s1[i] + s1[j] - von_neumann_entropy(rho)
        values[i, j] = values[j, i] = max(v, 0.0) if v > -1e-12 else v
    return QmiMatrix(values, s1)


def write_matrix_csv(path: str | Path, mat: np.ndarray) -> None:
    """First line holds ``n``, then ``n`` comma-separated rows."""
    n = mat.shape[0]
    lines = [str(n)] + [",".join(repr(float(x)) for x in row) for row in mat]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    n = int(lines[0])
    mat = np.array([[float(x) for x in ln.split(",")] for ln in lines[1 : n + 1]])
    if mat.shape != (n, n):
        raise ValueError(f"{path}: expected {n}x{n} matrix, got {mat.shape}")
    return mat
