"""Matrix product states, MPOs and a two-site DMRG sweep.

Conventions: MPS tensors have shape ``(D_left, 2, D_right)``; MPO tensors have
shape ``(w_left, w_right, out, in)``. Sites are in the same order as the qubit
labels, with site 0 the most significant bit of a dense amplitude index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as sla

log = logging.getLogger(__name__)

SVD_CUTOFF = 1e-12

_I2 = np.eye(2)
_REAL_OPS = {
    "I": _I2,
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "iY": np.array([[0.0, 1.0], [-1.0, 0.0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


@dataclass
class MpsState:
    tensors: list[np.ndarray]
    center: int | None = None

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> MpsState:
        return MpsState([t.copy() for t in self.tensors], self.center)

    def validate(self) -> None:
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("open-boundary MPS needs unit outer bonds")
        for k, (a, b) in enumerate(zip(self.tensors, self.tensors[1:])):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond {k} mismatch: {a.shape} vs {b.shape}")

    def norm(self) -> float:
        env = np.ones((1, 1))
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a, a.conj())
        return float(np.sqrt(abs(env[0, 0])))

    def normalize(self) -> MpsState:
        nrm = self.norm()
        self.tensors[0] = self.tensors[0] / nrm
        return self


@dataclass
class MpoOperator:
    tensors: list[np.ndarray] = field(default_factory=list)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [w.shape[1] for w in self.tensors[:-1]]


# ---------------------------------------------------------------------------
# construction and conversion


def product_mps(bits) -> MpsState:
    tensors = []
    for b in bits:
        t = np.zeros((1, 2, 1))
        t[0, int(b), 0] = 1.0
        tensors.append(t)
    return MpsState(tensors, 0)


def random_mps(n: int, chi: int, rng: np.random.Generator) -> MpsState:
    dims = [1] + [min(chi, 2 ** min(k, n - k)) for k in range(1, n)] + [1]
    tensors = [rng.standard_normal((dims[k], 2, dims[k + 1])) for k in range(n)]
    mps = MpsState(tensors)
    right_canonicalize(mps)
    return mps.normalize()


def right_canonicalize(mps: MpsState) -> MpsState:
    """Bring every site but the first into right-canonical form (centre at 0)."""
    for k in range(mps.n_sites - 1, 0, -1):
        a = mps.tensors[k]
        dl, d, dr = a.shape
        q, r = np.linalg.qr(a.reshape(dl, d * dr).T)
        mps.tensors[k] = q.T.reshape(-1, d, dr)
        mps.tensors[k - 1] = np.tensordot(mps.tensors[k - 1], r.T, axes=([2], [0]))
    mps.center = 0
    return mps


def mps_to_dense(mps: MpsState, max_qubits: int = 14) -> np.ndarray:
    if mps.n_sites > max_qubits:
        raise ValueError(f"{mps.n_sites} sites exceeds the dense cap of {max_qubits}")
    psi = mps.tensors[0]
    for a in mps.tensors[1:]:
        psi = np.tensordot(psi, a, axes=([psi.ndim - 1], [0]))
    return psi.reshape(-1)


def dense_to_mps(psi: np.ndarray, chi: int | None = None) -> MpsState:
    """Left-canonical MPS by successive SVDs (exact when ``chi`` is None)."""
    n = int(round(np.log2(psi.size)))
    tensors = []
    rest = psi.reshape(1, -1)
    for k in range(n - 1):
        dl = rest.shape[0]
        u, s, vh = np.linalg.svd(rest.reshape(dl * 2, -1), full_matrices=False)
        keep = max(1, int(np.sum(s > SVD_CUTOFF)))
        if chi is not None:
            keep = min(keep, chi)
        tensors.append(u[:, :keep].reshape(dl, 2, keep))
        rest = s[:keep, None] * vh[:keep]
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MpsState(tensors, n - 1)


def _op_representation(term):
    """Per-site matrices and a scalar such that ``coef * prod(ops)`` equals the term.

    Y is rewritten as ``-i * (iY)`` so that even numbers of Y stay real.
    """
    coef = complex(term.coefficient)
    ops = {}
    for q, p in enumerate(term.ops):
        if p == "I":
            continue
        if p == "Y":
            coef *= -1j
            ops[q] = "iY"
        else:
            ops[q] = p
    return coef, ops


def build_mpo(h) -> MpoOperator:
    """MPO by a left-to-right finite automaton.

    Bond states are ``start``, ``done`` and one open channel per (site, operator)
    for two-site terms that have started but not yet closed. Terms acting on
    more than two sites are rejected.
    """
    n = h.n_qubits
    reps = [_op_representation(t) for t in h.terms]
    is_real = all(abs(c.imag) < 1e-15 for c, _ in reps)
    if not is_real:
        # fall back to genuine Y matrices with the original coefficients
        reps = [(complex(t.coefficient), {q: p for q, p in enumerate(t.ops) if p != "I"}) for t in h.terms]
    dtype = float if is_real else complex

    onsite = [[] for _ in range(n)]
    pair_terms = []
    for (coef, ops), term in zip(reps, h.terms):
        sites = sorted(ops)
        if len(sites) > 2:
            raise ValueError(f"term {term.ops} acts on {len(sites)} sites; at most 2 supported")
        if len(sites) == 0:
            onsite[0].append((coef, _I2))
        elif len(sites) == 1:
            onsite[sites[0]].append((coef, _REAL_OPS[ops[sites[0]]]))
        else:
            i, j = sites
            pair_terms.append((i, ops[i], j, ops[j], coef))

    # channels alive on bond k|k+1: (i, op) with i <= k < j for some term
    channels = []
    for k in range(n - 1):
        alive = sorted({(i, a) for i, a, j, _, _ in pair_terms if i <= k < j})
        channels.append(["start", "done"] + alive)

    def idx(bond_states, key):
        return bond_states.index(key)

    tensors = []
    for k in range(n):
        left = ["start"] if k == 0 else channels[k - 1]
        right = ["done"] if k == n - 1 else channels[k]
        w = np.zeros((len(left), len(right), 2, 2), dtype=dtype)
        if "start" in right:
            w[idx(left, "start"), idx(right, "start")] = _I2
        if "done" in left:
            w[idx(left, "done"), idx(right, "done")] = _I2
        for coef, op in onsite[k]:
            w[idx(left, "start"), idx(right, "done")] += (coef if not is_real else coef.real) * op
        for chan in right[2:] if k < n - 1 else []:
            i, a = chan
            if i == k:
                w[idx(left, "start"), idx(right, chan)] = _REAL_OPS[a]
            else:
                w[idx(left, chan), idx(right, chan)] = _I2
        for i, a, j, b, coef in pair_terms:
            if j == k:
                c = coef.real if is_real else coef
                w[idx(left, (i, a)), idx(right, "done")] += c * _REAL_OPS[b]
        tensors.append(w)
    return MpoOperator(tensors)


def mpo_to_dense(mpo: MpoOperator) -> np.ndarray:
    t = mpo.tensors[0][0]  # (wr, out, in)
    dim = 2
    for w in mpo.tensors[1:]:
        t = np.einsum("aij,abkl->bikjl", t, w).reshape(w.shape[1], dim * 2, dim * 2)
        dim *= 2
    return t[0]


def mpo_expectation(mpo: MpoOperator, mps: MpsState) -> float:
    env = np.ones((1, 1, 1))
    for a, w in zip(mps.tensors, mpo.tensors):
        env = _extend_left(env, a, w)
    return float(np.real(env[0, 0, 0])) / mps.norm() ** 2


def _extend_left(env, a, w):
    # env (a, w, a*) -> (c, v, c*)
    t = np.tensordot(env, a, axes=([0], [0]))  # (w, a*, s, c)
    t = np.tensordot(t, w, axes=([0, 2], [0, 3]))  # (a*, c, v, s')
    t = np.tensordot(t, a.conj(), axes=([0, 3], [0, 1]))  # (c, v, c*)
    return t


def _extend_right(env, a, w):
    # env (c, v, c*) -> (a, w, a*)
    t = np.tensordot(a, env, axes=([2], [0]))  # (a, s, v, c*)
    t = np.tensordot(t, w, axes=([1, 2], [3, 1]))  # (a, c*, w, s')
    t = np.tensordot(t, a.conj(), axes=([1, 3], [2, 1]))  # (a, w, a*)
    return t


# ---------------------------------------------------------------------------
# DMRG


@dataclass
class DmrgResult:
    energy: float
    state: MpsState
    converged: bool
    sweep_energies: list[float]
    truncation_errors: list[float]


def _two_site_matvec(left, w1, w2, right):
    def matvec(x, shape):
        t = x.reshape(shape)
        # environments are (ket, w, bra); the output is indexed by bra legs
        t = np.tensordot(left, t, axes=([0], [0]))  # (w, b, s1, s2, c)
        t = np.tensordot(t, w1, axes=([0, 2], [0, 3]))  # (b, s2, c, v, s1')
        t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))  # (b, c, s1', x, s2')
        t = np.tensordot(t, right, axes=([1, 3], [0, 1]))  # (b, s1', s2', b')
        return t.reshape(-1)

    return matvec


def _lowest_eigpair(matvec, shape, v0, dtype, eig_tol):
    dim = int(np.prod(shape))
    if dim <= 256:
        mat = np.empty((dim, dim), dtype=dtype)
        eye = np.eye(dim, dtype=dtype)
        for c in range(dim):
            mat[:, c] = matvec(eye[:, c], shape)
        mat = 0.5 * (mat + mat.conj().T)
        w, v = np.linalg.eigh(mat)
        return float(w[0]), v[:, 0]
    op = sla.LinearOperator((dim, dim), matvec=lambda x: matvec(x, shape), dtype=dtype)
    w, v = sla.eigsh(op, k=1, which="SA", v0=v0.reshape(-1), tol=eig_tol, ncv=min(dim, 30))
    return float(w[0]), v[:, 0]


def _split(theta, chi, direction):
    dl, d1, d2, dr = theta.shape
    u, s, vh = np.linalg.svd(theta.reshape(dl * d1, d2 * dr), full_matrices=False)
    keep = max(1, min(chi, int(np.sum(s > SVD_CUTOFF))))
    trunc = float(np.sum(s[keep:] ** 2))
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    s = s / np.linalg.norm(s)
    if direction == "right":
        a = u.reshape(dl, d1, keep)
        b = (s[:, None] * vh).reshape(keep, d2, dr)
    else:
        a = (u * s[None, :]).reshape(dl, d1, keep)
        b = vh.reshape(keep, d2, dr)
    return a, b, trunc


def dmrg(
    mpo: MpoOperator,
    chi: int,
    sweeps: int = 20,
    tol: float = 1e-10,
    seed: int = 0,
    init: MpsState | None = None,
    eig_tol: float = 1e-13,
) -> DmrgResult:
    """Two-site DMRG with SVD truncation to at most ``chi`` states.

    Starts from a random MPS with bond dimension ``min(chi, 8)`` unless
    ``init`` is given. A sweep is a left-to-right pass followed by a
    right-to-left pass; iteration stops once the energy changes by less than
    ``tol`` between sweeps. Running out of sweeps is reported through
    ``converged=False`` rather than an exception.
    """
    if chi < 1 or sweeps < 1:
        raise ValueError("chi and sweeps must be positive")
    n = mpo.n_sites
    dtype = np.result_type(*(w.dtype for w in mpo.tensors))
    if init is None:
        mps = random_mps(n, min(chi, 8), np.random.default_rng(seed))
    else:
        mps = right_canonicalize(init.copy()).normalize()
    mps.tensors = [t.astype(dtype) for t in mps.tensors]

    if n == 1:
        mat = mpo.tensors[0][0, 0]
        w, v = np.linalg.eigh(mat)
        state = MpsState([v[:, 0].reshape(1, 2, 1)], 0)
        return DmrgResult(float(w[0]), state, True, [float(w[0])], [0.0])

    left = [None] * (n + 1)
    right = [None] * (n + 1)
    left[0] = np.ones((1, 1, 1), dtype=dtype)
    right[n] = np.ones((1, 1, 1), dtype=dtype)
    for k in range(n - 1, 0, -1):
        right[k] = _extend_right(right[k + 1], mps.tensors[k], mpo.tensors[k])

    energies: list[float] = []
    truncs: list[float] = []
    energy = np.inf
    converged = False
    for sweep in range(sweeps):
        sweep_trunc = 0.0
        order = [(k, "right") for k in range(n - 1)] + [(k, "left") for k in range(n - 2, -1, -1)]
        for k, direction in order:
            theta = np.tensordot(mps.tensors[k], mps.tensors[k + 1], axes=([2], [0]))
            matvec = _two_site_matvec(left[k], mpo.tensors[k], mpo.tensors[k + 1], right[k + 2])
            energy, vec = _lowest_eigpair(matvec, theta.shape, theta, dtype, eig_tol)
            a, b, trunc = _split(vec.reshape(theta.shape), chi, direction)
            sweep_trunc = max(sweep_trunc, trunc)
            mps.tensors[k], mps.tensors[k + 1] = a, b
            if direction == "right":
                left[k + 1] = _extend_left(left[k], a, mpo.tensors[k])
            else:
                right[k + 1] = _extend_right(right[k + 2], b, mpo.tensors[k + 1])
        mps.center = 0
        energies.append(energy)
        truncs.append(sweep_trunc)
        log.debug("dmrg sweep %d: E=%.12f trunc=%.2e", sweep, energy, sweep_trunc)
        if len(energies) > 1 and abs(energies[-2] - energies[-1]) < tol:
            converged = True
            break
    if not converged:
        log.warning("dmrg did not reach tol=%g in %d sweeps", tol, sweeps)
    final = mpo_expectation(mpo, mps)
    return DmrgResult(final, mps, converged, energies, truncs)


# ---------------------------------------------------------------------------
# reduced density matrices


def _environments(mps: MpsState):
    n = mps.n_sites
    left = [np.ones((1, 1))]
    for a in mps.tensors:
        left.append(np.einsum("ab,asc,bsd->cd", left[-1], a, a.conj()))
    right = [None] * (n + 1)
    right[n] = np.ones((1, 1))
    for k in range(n - 1, -1, -1):
        a = mps.tensors[k]
        right[k] = np.einsum("asc,bsd,cd->ab", a, a.conj(), right[k + 1])
    return left, right


def mps_pair_rdms(mps: MpsState) -> dict[tuple[int, int], np.ndarray]:
    """All two-site RDMs ``rho_ij`` (i < j) by direct network contraction.

    Index order of each 4x4 matrix is ``(s_i s_j, s_i' s_j')``.
    """
    n = mps.n_sites
    left, right = _environments(mps)
    norm = float(np.real(left[n][0, 0]))
    out = {}
    for i in range(n):
        a = mps.tensors[i]
        # t[s, s', c, c*]: site i left open
        t = np.einsum("ab,asc,btd->stcd", left[i], a, a.conj())
        for j in range(i + 1, n):
            b = mps.tensors[j]
            rho = np.einsum("stcd,cue,dvf,ef->usvt", t, b, b.conj(), right[j + 1])
            # rho[u, s, v, t] with (s,u) kets (i,j), (t,v) bras -> reorder
            rho = rho.transpose(1, 0, 3, 2).reshape(4, 4) / norm
            out[(i, j)] = rho
            t = np.einsum("stcd,cue,duf->stef", t, b, b.conj())
    return out


def mps_rdm_pair(mps: MpsState, i: int, j: int) -> np.ndarray:
    if i == j:
        raise ValueError("rdm_pair needs two distinct sites")
    n = mps.n_sites
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sites ({i}, {j}) out of range for {n} sites")
    a, b = sorted((i, j))
    left, right = _environments(mps)
    norm = float(np.real(left[n][0, 0]))
    ta = mps.tensors[a]
    t = np.einsum("ab,asc,btd->stcd", left[a], ta, ta.conj())
    for k in range(a + 1, b):
        x = mps.tensors[k]
        t = np.einsum("stcd,cue,duf->stef", t, x, x.conj())
    tb = mps.tensors[b]
    rho = np.einsum("stcd,cue,dvf,ef->usvt", t, tb, tb.conj(), right[b + 1])
    rho = rho.transpose(1, 0, 3, 2).reshape(4, 4) / norm
    if i > j:
        rho = rho.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return rho
