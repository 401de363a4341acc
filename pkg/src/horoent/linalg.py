"""Dense complex linear algebra on small bipartite and multipartite operators.

All matrices are plain ``numpy`` arrays of dtype ``complex128``. Tensor
indices follow the row-major convention ``|i_1 ... i_m> -> sum_j i_j *
prod_{l>j} d_l`` with 0-based labels.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60
JACOBI_OFF_TOL = 1e-14
SVD_CUTOFF = 1e-12


class NotHermitianError(ValueError):
    """Input to a Hermitian routine deviates from its adjoint beyond tolerance."""


class EigenSolverError(RuntimeError):
    """Jacobi sweeps did not reduce the off-diagonal mass below tolerance."""


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class BipartiteState:
    """A density operator on ``C^dA (x) C^dB`` in the computational basis."""

    matrix: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dA, dB = (int(x) for x in self.dims)
        if m.shape != (dA * dB, dA * dB):
            raise DimensionError(f"matrix shape {m.shape} does not match dims {(dA, dB)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", (dA, dB))

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]


def _unpack(rho, dims):
    if isinstance(rho, BipartiteState):
        return rho.matrix, tuple(rho.dims) if dims is None else tuple(dims)
    rho = np.asarray(rho)
    if dims is None:
        n = int(round(math.isqrt(rho.shape[0])))
        if n * n != rho.shape[0]:
            raise DimensionError("cannot infer equal local dimensions; pass dims")
        dims = (n, n)
    return rho, tuple(int(d) for d in dims)


# --------------------------------------------------------------------------- #
# tensor indices                                                              #
# --------------------------------------------------------------------------- #

def flatten_index(labels: Sequence[int], dims: Sequence[int]) -> int:
    return int(np.ravel_multi_index(tuple(labels), tuple(dims)))


def unflatten_index(index: int, dims: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(index, tuple(dims)))


def kron(*mats: np.ndarray) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T), initial=0.0)) <= tol


def hermitian_part(a: np.ndarray, tol: float = HERMITIAN_TOL, strict: bool = True) -> np.ndarray:
    """Return ``(a + a^H) / 2``.

    With ``strict`` a deviation above ``tol`` raises :class:`NotHermitianError`;
    otherwise it is only logged.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    dev = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    if dev > tol:
        if strict:
            raise NotHermitianError(f"max|A - A^H| = {dev:.3e} exceeds {tol:.1e}")
        log.warning("symmetrized input with Hermiticity defect %.3e", dev)
    return 0.5 * (a + a.conj().T)


# --------------------------------------------------------------------------- #
# Jacobi eigensolver                                                          #
# --------------------------------------------------------------------------- #

def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle-method tournament: every pair (p, q) appears once per sweep and
    # the pairs inside a round are disjoint, so their rotations commute
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if max(p, q) < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def hermitian_eigen(
    a: np.ndarray,
    tol: float = HERMITIAN_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(w, v)`` with ``w`` ascending and ``a = v @ diag(w) @ v^H``.
    Sweeps stop once the off-diagonal Frobenius mass is below
    ``1e-14 * ||a||_F``.
    """
    a = hermitian_part(a, tol)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v
    a = a.copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    off_tol = JACOBI_OFF_TOL * scale
    rounds = _round_robin(n)
    mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        if np.sqrt(np.sum(np.abs(a[mask]) ** 2)) <= off_tol:
            break
        for p, q in rounds:
            apq = a[p, q]
            mag = np.abs(apq)
            # below this the rotation cannot move the off-diagonal mass
            active = mag > 1e-20 * scale
            if not active.any():
                continue
            p, q, apq, mag = p[active], q[active], apq[active], mag[active]
            phase = apq / mag
            app = a[p, p].real
            aqq = a[q, q].real
            theta = (aqq - app) / (2.0 * mag)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph = phase.conj()

            # A <- A G with G[:, p] = c e_p - s ph e_q,  G[:, q] = s e_p + c ph e_q
            cp_, cq_ = a[:, p], a[:, q]
            a[:, p] = cp_ * c - cq_ * (s * ph)
            a[:, q] = cp_ * s + cq_ * (c * ph)
            # A <- G^H A
            rp, rq = a[p, :], a[q, :]
            a[p, :] = rp * c[:, None] - rq * (s * phase)[:, None]
            a[q, :] = rp * s[:, None] + rq * (c * phase)[:, None]
            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * (s * ph)
            v[:, q] = vp * s + vq * (c * ph)

            a[p, q] = 0.0
            a[q, p] = 0.0
            a[p, p] = app - t * mag
            a[q, q] = aqq + t * mag
    else:
        if np.sqrt(np.sum(np.abs(a[mask]) ** 2)) > off_tol:
            raise EigenSolverError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = a.diagonal().real
    order = np.argsort(w, kind="stable")
    return w[order].copy(), v[:, order]


def eigvalsh(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    return hermitian_eigen(a, tol)[0]


def min_eig(a: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    return float(hermitian_eigen(a, tol)[0][0])


def _one_sided_jacobi(b: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    # Hestenes sweeps: rotate column pairs until they are mutually orthogonal.
    # Rotations come from column inner products, never from a squared Gram
    # matrix, so tiny singular values keep their relative accuracy.
    n = b.shape[1]
    rounds = _round_robin(n)
    eps = np.finfo(float).eps
    # inner products this small cannot move any singular value above eps * sigma_max
    floor = eps * eps * float(np.max(np.sum(np.abs(b) ** 2, axis=0), initial=0.0))
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            bp, bq = b[:, p], b[:, q]
            alpha = np.sum(np.abs(bp) ** 2, axis=0)
            beta = np.sum(np.abs(bq) ** 2, axis=0)
            gamma = np.sum(bp.conj() * bq, axis=0)
            mag = np.abs(gamma)
            active = (mag > n * eps * np.sqrt(alpha * beta)) & (mag > floor)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, mag, phase = alpha[active], beta[active], mag[active], gamma[active] / mag[active]
            theta = (beta - alpha) / (2.0 * mag)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph = phase.conj()
            bp, bq = b[:, p], b[:, q]
            b[:, p] = bp * c - bq * (s * ph)
            b[:, q] = bp * s + bq * (c * ph)
        if not rotated:
            return b
    raise EigenSolverError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values in nonincreasing order.

    Right singular vectors come from the Jacobi eigendecomposition of
    ``a^H a``; the columns of ``a v`` are then polished by one-sided Jacobi
    rotations and each value is read off as a column norm. The polish keeps
    small singular values accurate relative to ``sigma_max * eps`` rather
    than ``sigma_max * sqrt(eps)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] < a.shape[1]:
        a = a.conj().T
    if a.shape[1] == 0:
        return np.zeros(0)
    _, v = hermitian_eigen(a.conj().T @ a, tol=np.inf)
    sig = np.linalg.norm(_one_sided_jacobi(a @ v), axis=0)
    sig = np.sort(sig)[::-1]
    if sig.size and sig[0] > 0:
        sig[sig < SVD_CUTOFF * sig[0]] = 0.0
    return sig


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(singular_values(a)))


def operator_norm(a: np.ndarray) -> float:
    sig = singular_values(a)
    return float(sig[0]) if sig.size else 0.0


# --------------------------------------------------------------------------- #
# partial operations                                                          #
# --------------------------------------------------------------------------- #

def partial_transpose(rho, dims: Sequence[int] | None = None, sys: int | Sequence[int] = 1) -> np.ndarray:
    """Transpose the subsystems listed in ``sys`` (0-based).

    For a bipartite operator and ``sys=1``:
    ``<i j| rho^T_B |k l> = <i l| rho |k j>``. A leading batch axis is allowed.
    """
    mat, dims = _unpack(rho, dims)
    systems = [sys] if isinstance(sys, (int, np.integer)) else list(sys)
    m = len(dims)
    total = math.prod(dims)
    batch = mat.shape[:-2]
    if mat.shape[-2:] != (total, total):
        raise DimensionError(f"operator of shape {mat.shape[-2:]} does not act on dims {dims}")
    t = mat.reshape(batch + tuple(dims) * 2)
    nb = len(batch)
    axes = list(range(nb + 2 * m))
    for s in systems:
        if not 0 <= s < m:
            raise DimensionError(f"subsystem {s} out of range for {m} parties")
        axes[nb + s], axes[nb + m + s] = axes[nb + m + s], axes[nb + s]
    return t.transpose(axes).reshape(mat.shape)


def partial_trace(rho, dims: Sequence[int] | None = None, keep: int | Sequence[int] = 0) -> np.ndarray:
    """Trace out every subsystem not in ``keep``; kept parties stay in order."""
    mat, dims = _unpack(rho, dims)
    keep = sorted([keep] if isinstance(keep, (int, np.integer)) else set(keep))
    m = len(dims)
    total = math.prod(dims)
    if mat.shape[-2:] != (total, total):
        raise DimensionError(f"operator of shape {mat.shape[-2:]} does not act on dims {dims}")
    if any(not 0 <= k < m for k in keep):
        raise DimensionError(f"keep={keep} out of range for {m} parties")
    batch = mat.shape[:-2]
    nb = len(batch)
    t = mat.reshape(batch + tuple(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    bl = letters[:nb]
    rows = list(letters[nb:nb + m])
    cols = list(letters[nb + m:nb + 2 * m])
    for j in range(m):
        if j not in keep:
            cols[j] = rows[j]
    out = bl + "".join(rows[j] for j in keep) + "".join(cols[j] for j in keep)
    res = np.einsum(f"{bl}{''.join(rows)}{''.join(cols)}->{out}", t)
    dk = math.prod(dims[j] for j in keep)
    return res.reshape(batch + (dk, dk))


def realign(rho, dims: Sequence[int] | None = None) -> np.ndarray:
    """Realignment ``<i k| R |j l> = <i j| rho |k l>`` (shape ``dA^2 x dB^2``)."""
    mat, (dA, dB) = _unpack(rho, dims)
    if mat.shape != (dA * dB, dA * dB):
        raise DimensionError(f"matrix shape {mat.shape} does not match dims {(dA, dB)}")
    return mat.reshape(dA, dB, dA, dB).transpose(0, 2, 1, 3).reshape(dA * dA, dB * dB)


def unrealign(r: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    dA, dB = dims
    r = np.asarray(r)
    if r.shape != (dA * dA, dB * dB):
        raise DimensionError(f"realigned shape {r.shape} does not match dims {(dA, dB)}")
    return r.reshape(dA, dA, dB, dB).transpose(0, 2, 1, 3).reshape(dA * dB, dA * dB)


def operator_schmidt_rank(op: np.ndarray, dims: Sequence[int], tol: float = 1e-10) -> int:
    sig = singular_values(realign(op, dims))
    return int(np.sum(sig > tol * max(sig[0], 1.0)))


# --------------------------------------------------------------------------- #
# permutations and the symmetric subspace                                     #
# --------------------------------------------------------------------------- #

def permutation_operator(d: int, k: int, perm: Sequence[int]) -> np.ndarray:
    """Operator moving tensor factor ``j`` to slot ``perm[j]`` (0-based).

    Equivalently ``P|i_1..i_k> = |i_{perm^-1(1)} .. i_{perm^-1(k)}>``, so that
    ``P(perm) @ P(sigma) == P(perm o sigma)``.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of range({k})")
    n = d ** k
    basis = np.eye(n, dtype=complex).reshape((d,) * k + (n,))
    moved = np.moveaxis(basis, list(range(k)), list(perm))
    return moved.reshape(n, n)


def sym_basis_labels(d: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations_with_replacement(range(d), k))


def sym_isometry(d: int, k: int) -> np.ndarray:
    """Isometry ``V: Sym^k(C^d) -> (C^d)^{(x)k}``; columns are normalized orbit sums."""
    if d < 1 or k < 1:
        raise ValueError("need d >= 1 and k >= 1")
    labels = sym_basis_labels(d, k)
    v = np.zeros((d ** k, len(labels)), dtype=complex)
    dims = (d,) * k
    for col, lab in enumerate(labels):
        orbit = set(itertools.permutations(lab))
        amp = 1.0 / math.sqrt(len(orbit))
        for word in orbit:
            v[flatten_index(word, dims), col] = amp
    return v


def sym_projector(d: int, k: int) -> np.ndarray:
    perms = list(itertools.permutations(range(k)))
    return sum(permutation_operator(d, k, p) for p in perms) / len(perms)


def gell_mann_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis of ``n x n`` matrices under ``tr(A B)``.

    Order: ``I/sqrt(n)``, the generalized diagonal generators, then the
    symmetric and antisymmetric off-diagonal pairs ``(j, k)`` for ``j < k``.
    """
    out = np.zeros((n * n, n, n), dtype=complex)
    out[0] = np.eye(n) / math.sqrt(n)
    idx = 1
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1.0
        diag[l] = -l
        out[idx] = np.diag(diag) / math.sqrt(l * (l + 1))
        idx += 1
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    r = 1.0 / math.sqrt(2.0)
    for j, k in pairs:
        out[idx, j, k] = out[idx, k, j] = r
        idx += 1
    for j, k in pairs:
        out[idx, j, k] = -1j * r
        out[idx, k, j] = 1j * r
        idx += 1
    return out


def hermitian_coords(h: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Real coordinates ``tr(G_j h)``; ``h`` may carry a leading batch axis."""
    return np.einsum("jab,...ba->...j", basis, h).real


def from_coords(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.tensordot(x, basis, axes=(-1, 0))


def real_embedding(h: np.ndarray) -> np.ndarray:
    """``H -> [[Re H, -Im H], [Im H, Re H]]``, batched over leading axes."""
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def complex_from_embedding(z: np.ndarray) -> np.ndarray:
    """Hermitian ``Y`` with ``<embed(H), Z> = tr(H Y)`` for every Hermitian ``H``.

    ``Y`` is the compression ``U^H Z U`` with ``U = [I; -iI]``, so ``Z >= 0``
    implies ``Y >= 0``.
    """
    m = z.shape[-1] // 2
    z11, z12 = z[..., :m, :m], z[..., :m, m:]
    z21, z22 = z[..., m:, :m], z[..., m:, m:]
    return (z11 + z22) + 1j * (z21 - z12)
