"""The multi-parameter family of Horodecki-like PPT states in ``C^d (x) C^d``.

Basis labels are 0-based: the conventional 1-based label ``|k>`` with ``k = 1..d`` is
index ``k - 1`` here, and ``k + 1`` always wraps modulo ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import BipartiteState, partial_transpose


class InvalidParamsError(ValueError):
    pass


@dataclass(frozen=True)
class FamilyParams:
    """``(d, a, lambda_1 .. lambda_{d-1})``; ``lambda_d`` is pinned to 1."""

    d: int
    a: float
    lambdas: tuple[float, ...]

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 3:
            raise InvalidParamsError(f"d must be an integer >= 3, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "a", float(self.a))
        if len(lam) != self.d - 1:
            raise InvalidParamsError(f"expected {self.d - 1} lambdas for d={self.d}, got {len(lam)}")
        for name, v in [("a", self.a)] + [(f"lambda_{k + 1}", x) for k, x in enumerate(lam)]:
            if not (0.0 <= v <= 1.0):
                raise InvalidParamsError(f"{name}={v} outside [0, 1]")

    @classmethod
    def horodecki(cls, d: int, a: float) -> FamilyParams:
        """The one-parameter generalized Horodecki state (all lambdas zero)."""
        return cls(d, a, (0.0,) * (d - 1))

    @classmethod
    def from_json(cls, obj: dict) -> FamilyParams:
        return cls(obj["d"], obj["a"], tuple(obj["lambdas"]))

    def to_json(self) -> dict:
        return {"d": self.d, "a": self.a, "lambdas": list(self.lambdas)}

    @property
    def b(self) -> float:
        return (1.0 + self.a) / 2.0

    @property
    def c(self) -> float:
        return math.sqrt(1.0 - self.a * self.a) / 2.0

    @property
    def all_lambdas(self) -> tuple[float, ...]:
        return self.lambdas + (1.0,)

    def b_of(self, lam: float) -> float:
        return self.a + lam * (self.b - self.a)

    def c_of(self, lam: float) -> float:
        return lam * self.c

    def bk(self, k: int) -> float:
        """``b_k`` for the 0-based block index ``k`` (``k = d-1`` gives ``b``)."""
        return self.b_of(self.all_lambdas[k])

    def ck(self, k: int) -> float:
        return self.c_of(self.all_lambdas[k])

    @property
    def inv_norm(self) -> float:
        d, a = self.d, self.a
        return (d * d - 1) * a + 1.0 + (1.0 - a) * sum(self.lambdas)

    @property
    def norm(self) -> float:
        return 1.0 / self.inv_norm


def _ket(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k % d] = 1.0
    return e


def projector(d: int, k: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[k % d, k % d] = 1.0
    return p


def shift(d: int) -> np.ndarray:
    """Cyclic shift ``S|k> = |k+1 mod d>``."""
    s = np.zeros((d, d), dtype=complex)
    for k in range(d):
        s[(k + 1) % d, k] = 1.0
    return s


def x_lambda(d: int, a: float, lam: float) -> np.ndarray:
    """``X(lam) = b(lam)(P_1 + P_d) + c(lam)(|1><d| + |d><1|) + a sum_{k=2}^{d-1} P_k``."""
    if not (0.0 <= a <= 1.0 and 0.0 <= lam <= 1.0):
        raise InvalidParamsError(f"a={a}, lambda={lam} must lie in [0, 1]")
    b = (1.0 + a) / 2.0
    c = math.sqrt(1.0 - a * a) / 2.0
    bl = a + lam * (b - a)
    cl = lam * c
    x = np.zeros((d, d), dtype=complex)
    for k in range(1, d - 1):
        x[k, k] = a
    x[0, 0] = x[d - 1, d - 1] = bl
    x[0, d - 1] = x[d - 1, 0] = cl
    return x


def x_block(p: FamilyParams, k: int) -> np.ndarray:
    """Diagonal block ``rho_kk = S^{k+1} X(lambda_{k+1}) S^{k+1 dagger}`` for 0-based ``k``.

    Built entrywise: ``b_k`` on ``|k>, |k+1>``, ``c_k`` between them and ``a``
    elsewhere on the diagonal. Identical to the conjugation without rounding.
    """
    d = p.d
    x = np.zeros((d, d), dtype=complex)
    for j in range(d):
        x[j, j] = p.a
    k1 = (k + 1) % d
    x[k, k] = x[k1, k1] = p.bk(k)
    x[k, k1] = x[k1, k] = p.ck(k)
    return x


def unnormalized_state(p: FamilyParams) -> np.ndarray:
    d = p.d
    rho = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        rho[i * d:(i + 1) * d, i * d:(i + 1) * d] = x_block(p, i)
        for j in range(d):
            if i != j:
                rho[i * d + i, j * d + j] = p.a
    return rho


def make_state(p: FamilyParams) -> BipartiteState:
    """``rho_d = N_d sum_ij |i><j| (x) rho_ij`` with ``rho_ii = X_i``, ``rho_ij = a|i><j|``."""
    return BipartiteState(p.norm * unnormalized_state(p), (p.d, p.d))


def horodecki_3x3(a: float) -> np.ndarray:
    """The original 3x3 Horodecki state written out entry by entry."""
    b = (1.0 + a) / 2.0
    c = math.sqrt(1.0 - a * a) / 2.0
    m = np.zeros((9, 9), dtype=complex)
    for i in (0, 1, 2, 3, 5, 7):
        m[i, i] = a
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = a
    m[6, 6] = m[8, 8] = b
    m[6, 8] = m[8, 6] = c
    return m / (8 * a + 1)


def one_parameter_state(d: int, a: float) -> np.ndarray:
    """The d x d one-parameter generalization: ``rho_ii = a I`` (i < d), ``rho_dd = X``."""
    x = x_lambda(d, a, 1.0)
    rho = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            blk = rho[i * d:(i + 1) * d, j * d:(j + 1) * d]
            if i == j:
                blk[...] = x if i == d - 1 else a * np.eye(d)
            else:
                blk[i, j] = a
    return rho / ((d * d - 1) * a + 1)


def product_vector(p: FamilyParams, k: int) -> np.ndarray:
    """``psi_k = |k> (x) (sqrt((1-a)/2)|k> + sqrt((1+a)/2)|k+1>)``, 0-based ``k``."""
    if not 0 <= k < p.d:
        raise IndexError(f"k={k} outside 0..{p.d - 1}")
    return np.kron(_ket(p.d, k), b_factor(p, k))


def b_factor(p: FamilyParams, k: int) -> np.ndarray:
    d = p.d
    return math.sqrt((1.0 - p.a) / 2.0) * _ket(d, k) + math.sqrt((1.0 + p.a) / 2.0) * _ket(d, k + 1)


def max_entangled(d: int) -> np.ndarray:
    """Projector ``P+_d`` onto ``sum_i |ii> / sqrt(d)``."""
    phi = np.zeros(d * d, dtype=complex)
    phi[[i * d + i for i in range(d)]] = 1.0 / math.sqrt(d)
    return np.outer(phi, phi.conj())


def q_operator(p: FamilyParams) -> np.ndarray:
    d = p.d
    q = np.eye(d * d, dtype=complex)
    for k, lam in enumerate(p.all_lambdas):
        q[k * d + k, k * d + k] -= 1.0
        kk = k * d + (k + 1) % d
        q[kk, kk] -= lam
    return q


def ent_sep_split(p: FamilyParams) -> tuple[np.ndarray, np.ndarray]:
    """``(X_ent, X_sep)`` with ``rho_d = N_d (X_ent + X_sep)``."""
    d = p.d
    x_ent = p.a * (d * max_entangled(d) + q_operator(p))
    x_sep = np.zeros((d * d, d * d), dtype=complex)
    for k, lam in enumerate(p.all_lambdas):
        psi = product_vector(p, k)
        x_sep += lam * np.outer(psi, psi.conj())
    return x_ent, x_sep


# --------------------------------------------------------------------------- #
# index sets and invariant subspaces                                          #
# --------------------------------------------------------------------------- #

def pairs_one_dim(d: int) -> list[tuple[int, int]]:
    """Pairs ``(k, l)`` with ``k != l`` and ``l != k+1 (mod d)``; 0-based."""
    return [(k, l) for k in range(d) for l in range(d) if l != k and l != (k + 1) % d]


def pairs_two_dim(d: int) -> list[tuple[int, int]]:
    """Pairs ``k < l`` with ``l != k+1`` and ``k != l+1 (mod d)``; 0-based."""
    return [
        (k, l) for k in range(d) for l in range(k + 1, d)
        if l != (k + 1) % d and k != (l + 1) % d
    ]


def pairs_two_dim_bounds(d: int) -> list[tuple[int, int]]:
    """Same set as :func:`pairs_two_dim`, enumerated by explicit bounds on ``l``.

    1-based: ``k = 1..d-2``; ``l = k+2..d-1`` for ``k = 1`` and ``l = k+2..d``
    otherwise.
    """
    out = []
    for k in range(1, d - 1):
        top = d - 1 if k == 1 else d
        out.extend((k - 1, l - 1) for l in range(k + 2, top + 1))
    return out


def h0_basis(d: int) -> list[tuple[int, int]]:
    """Ordered basis of the 2d-dimensional block of ``rho``.

    Blocks ``(|ii>, |i,i+1>)`` for ``i < d-1`` followed by ``(|d,1>, |d,d>)``
    for the last one, so that the coupling blocks come out as ``A`` and
    ``A'`` and the rank-one vector as ``(1,0, ..., 1,0, 0,1)``.
    """
    basis = []
    for i in range(d - 1):
        basis += [(i, i), (i, i + 1)]
    basis += [(d - 1, 0), (d - 1, d - 1)]
    return basis


def pt_block_basis(d: int, i: int) -> list[tuple[int, int]]:
    j = (i + 1) % d
    return [(i, i), (i, j), (j, i)]


def _flat(d: int, kl: Sequence[tuple[int, int]]) -> list[int]:
    return [k * d + l for k, l in kl]


def state_sectors(d: int) -> np.ndarray:
    """Label per basis vector: 0 for the big block, ``1 + n`` for the n-th 1-dim block."""
    lab = np.zeros(d * d, dtype=int)
    for n, (k, l) in enumerate(pairs_one_dim(d)):
        lab[k * d + l] = n + 1
    return lab


def pt_sectors(d: int) -> np.ndarray:
    """Label per basis vector for the invariant blocks of ``rho^Gamma``."""
    lab = np.full(d * d, -1, dtype=int)
    for i in range(d):
        lab[_flat(d, pt_block_basis(d, i))] = i
    for n, (k, l) in enumerate(pairs_two_dim(d)):
        lab[[k * d + l, l * d + k]] = d + n
    return lab


@dataclass
class BlockForm:
    """Reduced blocks of ``N_d^{-1} rho`` and of its partial transpose."""

    m: np.ndarray                 # 2d x 2d block on the big subspace
    m_prime: np.ndarray           # block-diagonal part, m - a |phi><phi|
    phi: np.ndarray
    b_tilde: list[np.ndarray]     # lambda_i [[b-a, c], [c, b]] in the block's own order
    b_rest: list[np.ndarray]      # diagonal remainder m'_i - b_tilde_i
    m_tilde: list[np.ndarray]     # d blocks of size 3 of rho^Gamma
    pair_blocks: list[np.ndarray]  # d(d-3)/2 blocks of size 2 of rho^Gamma
    singles: np.ndarray           # diagonal entries on the 1-dim blocks of rho


def block_form(p: FamilyParams) -> BlockForm:
    d, a = p.d, p.a
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    for i in range(d):
        m[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[p.bk(i), p.ck(i)], [p.ck(i), p.bk(i)]]
    amat = np.array([[a, 0], [0, 0]], dtype=complex)
    aprime = np.array([[0, a], [0, 0]], dtype=complex)
    for i in range(d):
        for j in range(i + 1, d):
            blk = aprime if j == d - 1 else amat
            m[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk
            m[2 * j:2 * j + 2, 2 * i:2 * i + 2] = blk.T

    phi = np.zeros(2 * d, dtype=complex)
    phi[[2 * i for i in range(d - 1)]] = 1.0
    phi[2 * d - 1] = 1.0
    m_prime = m - a * np.outer(phi, phi)

    b_tilde, b_rest = [], []
    base = np.array([[p.b - a, p.c], [p.c, p.b]], dtype=complex)
    for i, lam in enumerate(p.all_lambdas):
        bt = lam * base
        if i == d - 1:
            # last block is ordered (|d,1>, |d,d>)
            bt = bt[::-1, ::-1]
        b_tilde.append(bt)
        b_rest.append(m_prime[2 * i:2 * i + 2, 2 * i:2 * i + 2] - bt)

    m_tilde = [
        np.array([[p.bk(k), p.ck(k), 0], [p.ck(k), p.bk(k), a], [0, a, a]], dtype=complex)
        for k in range(d)
    ]
    pair_blocks = [a * np.ones((2, 2), dtype=complex) for _ in pairs_two_dim(d)]
    singles = np.full(len(pairs_one_dim(d)), a)
    return BlockForm(m, m_prime, phi, b_tilde, b_rest, m_tilde, pair_blocks, singles)


def restrict(op: np.ndarray, d: int, kl: Sequence[tuple[int, int]]) -> np.ndarray:
    idx = _flat(d, kl)
    return op[np.ix_(idx, idx)]


# --------------------------------------------------------------------------- #
# symmetries                                                                  #
# --------------------------------------------------------------------------- #

def symmetry_unitary(p: FamilyParams | int, phases: Sequence[float]) -> np.ndarray:
    """``U = Pi_0 + sum_kl exp(i alpha_kl) P_k (x) P_l`` over :func:`pairs_one_dim`."""
    d = p.d if isinstance(p, FamilyParams) else int(p)
    pairs = pairs_one_dim(d)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (len(pairs),):
        raise ValueError(f"need {len(pairs)} phases for d={d}, got {phases.shape}")
    diag = np.ones(d * d, dtype=complex)
    for (k, l), alpha in zip(pairs, phases):
        diag[k * d + l] = np.exp(1j * alpha)
    return np.diag(diag)


def pt_symmetry_unitary(p: FamilyParams | int, betas: Sequence[float], gammas: Sequence[float]) -> np.ndarray:
    """``U~ = sum_m exp(i beta_m) Pi~_m + sum_kl exp(i gamma_kl) Pi~_kl``."""
    d = p.d if isinstance(p, FamilyParams) else int(p)
    pairs = pairs_two_dim(d)
    betas = np.asarray(betas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if betas.shape != (d,):
        raise ValueError(f"need {d} beta phases, got {betas.shape}")
    if gammas.shape != (len(pairs),):
        raise ValueError(f"need {len(pairs)} gamma phases for d={d}, got {gammas.shape}")
    diag = np.zeros(d * d, dtype=complex)
    for m, beta in enumerate(betas):
        diag[_flat(d, pt_block_basis(d, m))] = np.exp(1j * beta)
    for (k, l), gamma in zip(pairs, gammas):
        diag[[k * d + l, l * d + k]] = np.exp(1j * gamma)
    return np.diag(diag)


def state_pt(p: FamilyParams) -> np.ndarray:
    return partial_transpose(make_state(p))
