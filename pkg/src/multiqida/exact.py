"""Exact diagonalisation of Pauli-sum Hamiltonians (the reference oracle)."""
from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as sla

MAX_EXACT_QUBITS = 14
DENSE_BELOW = 10


class DimensionError(ValueError):
    pass


def _operator(h):
    kernel = h.compiled()
    dim = 2**h.n_qubits
    dtype = float if kernel.is_real else complex
    return sla.LinearOperator((dim, dim), matvec=kernel.apply, dtype=dtype)


def low_spectrum(h, k: int = 1, max_qubits: int = MAX_EXACT_QUBITS, tol: float = 1e-12):
    """Lowest ``k`` eigenpairs, sorted ascending. Columns of the second output are eigenvectors."""
    n = h.n_qubits
    if n > max_qubits:
        raise DimensionError(f"{n} qubits exceeds the exact-diagonalisation cap of {max_qubits}")
    dim = 2**n
    if n < DENSE_BELOW or k >= dim - 1:
        mat = h.to_dense()
        if np.allclose(mat.imag, 0):
            mat = mat.real
        w, v = np.linalg.eigh(mat)
        return w[:k], v[:, :k]
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(dim)
    w, v = sla.eigsh(_operator(h), k=k, which="SA", tol=tol, v0=v0, ncv=max(2 * k + 1, 40))
    order = np.argsort(w)
    return w[order], v[:, order]


def exact_ground_state(h, max_qubits: int = MAX_EXACT_QUBITS) -> tuple[float, np.ndarray]:
    """Ground energy and a unit-norm ground vector; raises if the residual exceeds 1e-8."""
    w, v = low_spectrum(h, 1, max_qubits=max_qubits)
    e, psi = float(w[0]), v[:, 0]
    psi = psi / np.linalg.norm(psi)
    res = np.linalg.norm(h.compiled().apply(psi) - e * psi)
    if res > 1e-8:
        raise RuntimeError(f"eigensolver residual {res:.2e} above 1e-8")
    return e, psi


def ground_manifold(h, degeneracy_tol: float = 1e-4, k: int = 4, max_qubits: int = MAX_EXACT_QUBITS):
    """Eigenpairs whose energies lie within ``degeneracy_tol`` of the ground energy."""
    w, v = low_spectrum(h, min(k, 2**h.n_qubits), max_qubits=max_qubits)
    keep = w - w[0] <= degeneracy_tol
    if keep.all() and k < 2**h.n_qubits:
        return ground_manifold(h, degeneracy_tol, 2 * k, max_qubits)
    return w[keep], v[:, keep]
