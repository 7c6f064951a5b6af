"""Reference ground states used to build QMI maps.

Two backends: exact diagonalisation and DMRG. With the exact backend a
quasi-degenerate ground manifold is resolved to its least-entangled member
(lowest summed single-site entropy), which is the state a finite-bond DMRG
run settles into and the one whose correlations are physically meaningful.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import exact
from .mps import MpsState, build_mpo, dmrg, mps_rdm_pair, mps_to_dense

log = logging.getLogger(__name__)

DEFAULT_DEGENERACY_TOL = 1e-4


def rdm_single_from_pair(rho_ij: np.ndarray, keep: int) -> np.ndarray:
    """Trace one qubit out of a 4x4 pair RDM; ``keep`` is 0 (first) or 1 (second)."""
    t = rho_ij.reshape(2, 2, 2, 2)
    return np.einsum("ajbj->ab", t) if keep == 0 else np.einsum("iaib->ab", t)


def dense_rdm(psi: np.ndarray, keep) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` onto the qubits in ``keep`` (in the given order)."""
    n = int(round(np.log2(psi.size)))
    keep = list(keep)
    rest = [q for q in range(n) if q not in keep]
    t = np.transpose(psi.reshape((2,) * n), keep + rest).reshape(2 ** len(keep), -1)
    return t @ t.conj().T


def rdm_pair(state, i: int, j: int) -> np.ndarray:
    """Two-site RDM of a dense vector or an MPS, ordered ``(s_i s_j)``."""
    if i == j:
        raise ValueError("rdm_pair needs two distinct sites")
    if isinstance(state, MpsState):
        return mps_rdm_pair(state, i, j)
    n = int(round(np.log2(state.size)))
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sites ({i}, {j}) out of range for {n} qubits")
    rho = dense_rdm(np.asarray(state), [i, j])
    return rho / np.trace(rho).real


def _single_site_entropy_sum(psi: np.ndarray) -> float:
    from .qmi import von_neumann_entropy

    n = int(round(np.log2(psi.size)))
    return sum(von_neumann_entropy(dense_rdm(psi, [q])) for q in range(n))


def least_entangled(vectors: np.ndarray, seed: int = 0) -> np.ndarray:
    """Unit real combination of the columns of ``vectors`` minimising summed single-site entropy."""
    k = vectors.shape[1]
    if k == 1:
        return vectors[:, 0]
    if np.iscomplexobj(vectors) and not np.allclose(vectors.imag, 0):
        raise NotImplementedError("least-entangled selection only handles real manifolds")
    vectors = vectors.real

    def combo(c):
        c = np.asarray(c) / np.linalg.norm(c)
        return vectors @ c

    def cost(c):
        return _single_site_entropy_sum(combo(c))

    if k == 2:
        grid = np.linspace(0, np.pi, 181, endpoint=False)
        vals = [cost([np.cos(a), np.sin(a)]) for a in grid]
        a0 = grid[int(np.argmin(vals))]
        res = minimize(lambda a: cost([np.cos(a[0]), np.sin(a[0])]), [a0], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14})
        best = [np.cos(res.x[0]), np.sin(res.x[0])]
    else:
        rng = np.random.default_rng(seed)
        starts = list(np.eye(k)) + [rng.standard_normal(k) for _ in range(4 * k)]
        results = [minimize(cost, s, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
                   for s in starts]
        best = min(results, key=lambda r: r.fun).x
    psi = combo(best)
    # fix the sign so the largest-magnitude amplitude is positive
    psi = psi * np.sign(psi[np.argmax(np.abs(psi))])
    return psi


@dataclass
class Reference:
    """A reference state plus how it was obtained."""

    state: np.ndarray | MpsState
    energy: float
    backend: str
    manifold_dim: int = 1
    converged: bool = True


def reference_state(
    h,
    backend: str = "auto",
    chi: int = 64,
    sweeps: int = 30,
    tol: float = 1e-10,
    seed: int = 0,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> Reference:
    """Ground state for QMI construction.

    ``backend="auto"`` uses exact diagonalisation up to 12 qubits and DMRG
    beyond that.
    """
    if backend == "auto":
        backend = "exact" if h.n_qubits <= 12 else "dmrg"
    if backend == "exact":
        w, v = exact.ground_manifold(h, degeneracy_tol)
        psi = least_entangled(v) if v.shape[1] > 1 else v[:, 0]
        psi = psi / np.linalg.norm(psi)
        energy = float(np.vdot(psi, h.compiled().apply(psi)).real)
        if v.shape[1] > 1:
            log.info("ground manifold of dimension %d (spread %.2e); using least-entangled member",
                     v.shape[1], w[-1] - w[0])
        return Reference(psi, energy, "exact", v.shape[1])
    if backend == "dmrg":
        res = dmrg(build_mpo(h), chi=chi, sweeps=sweeps, tol=tol, seed=seed)
        return Reference(res.state, res.energy, "dmrg", 1, res.converged)
    raise ValueError(f"unknown reference backend {backend!r}")


# ---------------------------------------------------------------------------
# on-disk cache: one JSON header line, then raw little-endian amplitudes


def save_state(path: str | Path, psi: np.ndarray, meta: dict) -> None:
    psi = np.ascontiguousarray(psi, dtype="<c16")
    header = dict(meta, n_amplitudes=int(psi.size), dtype="complex128")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(psi.tobytes())


def load_state(path: str | Path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        psi = np.frombuffer(fh.read(), dtype="<c16")
    if psi.size != header["n_amplitudes"]:
        raise ValueError(f"{path}: expected {header['n_amplitudes']} amplitudes, found {psi.size}")
    if np.allclose(psi.imag, 0):
        psi = psi.real.copy()
    return psi, header


def cached_reference(spec, h, cache_dir: str | Path | None, **kwargs) -> Reference:
    """``reference_state`` with an optional cache keyed by the lattice spec and backend options."""
    if cache_dir is None:
        return reference_state(h, **kwargs)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    opts = json.dumps(kwargs, sort_keys=True, default=str)
    key = hashlib.sha256((spec.key() + opts).encode()).hexdigest()[:20]
    path = cache_dir / f"ref_{key}.bin"
    if path.exists():
        psi, meta = load_state(path)
        return Reference(psi, meta["energy"], meta["backend"], meta.get("manifold_dim", 1),
                         meta.get("converged", True))
    ref = reference_state(h, **kwargs)
    dense = ref.state if isinstance(ref.state, np.ndarray) else mps_to_dense(ref.state)
    save_state(path, dense, {"energy": ref.energy, "backend": ref.backend, "spec": spec.key(),
                             "manifold_dim": ref.manifold_dim, "converged": ref.converged})
    return ref
