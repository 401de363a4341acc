"""Level-k PPT symmetric extensions as a block LMI, and witnesses from its dual.

A state ``rho`` on ``A (x) B`` passes level ``k`` if there is ``sigma >= 0`` on
``A (x) Sym^k(B)`` whose lift ``(I (x) V) sigma (I (x) V)^H`` has ``(A, B_1)``
marginal ``rho`` and stays positive after transposing the last ``m`` copies
of ``B`` for every ``m`` in ``cuts``. The feasibility question becomes

    maximize t  subject to  block - t I >= 0  for every block,

with the marginal constraint eliminated through a null-space
parametrization. ``t* < 0`` certifies entanglement.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import Outcome, Verdict
from .linalg import (
    BipartiteState,
    complex_from_embedding,
    from_coords,
    gell_mann_basis,
    hermitian_coords,
    hermitian_eigen,
    partial_trace,
    partial_transpose,
    permutation_operator,
    real_embedding,
    sym_isometry,
)
from .sdp import LmiProblem, SdpSolution, SolverOptions, SolverStatus, certify, solve

log = logging.getLogger(__name__)

EPS_ENT = 1e-6
EPS_FEAS = 1e-7
RANK_CUTOFF = 1e-10
MAX_LEVEL = 4


class InfeasibleConstructionError(ValueError):
    """No operator on the extension space reproduces the requested marginal."""


class WitnessError(RuntimeError):
    pass


class ExtensionStatus(str, enum.Enum):
    EXTENSION_FOUND = "ExtensionFound"
    NO_EXTENSION = "NoExtension"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class ExtensionSpec:
    level: int = 2
    with_ppt: bool = True
    cuts: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 2 <= self.level <= MAX_LEVEL:
            raise ValueError(f"level must be in 2..{MAX_LEVEL}, got {self.level}")
        if not self.with_ppt:
            cuts = ()
        elif self.cuts is None:
            cuts = tuple(range(1, self.level + 1))
        else:
            cuts = tuple(sorted(set(int(m) for m in self.cuts)))
            if not cuts or cuts[0] < 1 or cuts[-1] > self.level:
                raise ValueError(f"cuts {self.cuts} must be a nonempty subset of 1..{self.level}")
        object.__setattr__(self, "cuts", cuts)

    def lowered(self, level: int) -> ExtensionSpec:
        cuts = tuple(m for m in self.cuts if m <= level)
        return ExtensionSpec(level, self.with_ppt and bool(cuts), cuts or None)


def _lift_isometry(dA: int, dB: int, k: int) -> np.ndarray:
    return np.kron(np.eye(dA), sym_isometry(dB, k))


def _cut_isometry(dA: int, dB: int, k: int, m: int) -> np.ndarray:
    # support of the transposed lift: A (x) Sym^{k-m} (x) Sym^m
    q = np.eye(dA, dtype=complex)
    if k - m:
        q = np.kron(q, sym_isometry(dB, k - m))
    return np.kron(q, sym_isometry(dB, m))


@dataclass
class ExtensionProblem:
    """The LMI together with everything needed to map solutions back."""

    lmi: LmiProblem
    spec: ExtensionSpec
    dims: tuple[int, int]
    sigma_basis: np.ndarray
    rho_basis: np.ndarray
    constraint: np.ndarray      # E: sigma coordinates -> marginal coordinates
    particular: np.ndarray      # x0 with E x0 = coords(rho)
    null_space: np.ndarray      # columns span ker E
    rank: int
    block_names: list[str]
    lift: np.ndarray
    cut_isometries: dict[int, np.ndarray]

    @property
    def equality_rows(self) -> int:
        return self.constraint.shape[0]

    @property
    def sigma_dim(self) -> int:
        return self.sigma_basis.shape[1]

    def party_dims(self) -> tuple[int, ...]:
        dA, dB = self.dims
        return (dA,) + (dB,) * self.spec.level

    def sigma(self, x: np.ndarray) -> np.ndarray:
        """Extension on ``A (x) Sym^k(B)`` for LMI variables ``x = (z, t)``."""
        coords = self.particular + self.null_space @ np.asarray(x)[:-1]
        return from_coords(coords, self.sigma_basis)

    def lifted(self, sigma: np.ndarray) -> np.ndarray:
        return self.lift @ sigma @ self.lift.conj().T

    def cut_block(self, sigma: np.ndarray, m: int) -> np.ndarray:
        k = self.spec.level
        tm = partial_transpose(self.lifted(sigma), self.party_dims(), list(range(k - m + 1, k + 1)))
        q = self.cut_isometries[m]
        return q.conj().T @ tm @ q


def _marginal(lift: np.ndarray, ops: np.ndarray, party_dims: tuple[int, ...]) -> np.ndarray:
    lifted = np.matmul(np.matmul(lift, ops), lift.conj().T)
    return partial_trace(lifted, party_dims, keep=[0, 1])


def build_extension_problem(rho: BipartiteState, spec: ExtensionSpec) -> ExtensionProblem:
    """Assemble the equality-free LMI for the level-``k`` extension test.

    Variables are the null-space coordinates of ``sigma`` (in a generalized
    Gell-Mann basis) followed by ``t``. Blocks are ``sigma`` itself and one
    compressed partially transposed lift per cut, all real-embedded.
    """
    dA, dB = rho.dims
    k = spec.level
    n_s = dA * math.comb(dB + k - 1, k)
    party_dims = (dA,) + (dB,) * k
    lift = _lift_isometry(dA, dB, k)
    sigma_basis = gell_mann_basis(n_s)
    rho_basis = gell_mann_basis(dA * dB)

    marg = _marginal(lift, sigma_basis, party_dims)
    constraint = hermitian_coords(marg, rho_basis).T
    target = hermitian_coords(rho.matrix, rho_basis)

    u, sv, vt = np.linalg.svd(constraint)
    rank = int(np.sum(sv > RANK_CUTOFF * sv[0]))
    particular = vt[:rank].T @ ((u[:, :rank].T @ target) / sv[:rank])
    mismatch = np.linalg.norm(constraint @ particular - target)
    if mismatch > 1e-10 * (1.0 + np.linalg.norm(target)):
        raise InfeasibleConstructionError(f"marginal constraint inconsistent (residual {mismatch:.2e})")
    null_space = vt[rank:].T
    n_free = null_space.shape[1]

    sigma0 = from_coords(particular, sigma_basis)
    directions = np.tensordot(null_space.T, sigma_basis, axes=1)

    cut_isometries = {m: _cut_isometry(dA, dB, k, m) for m in spec.cuts}
    consts, coeffs, names = [], [], []

    def add_block(name: str, c0: np.ndarray, ci: np.ndarray):
        size = 2 * c0.shape[0]
        neg = -np.eye(size)[None]
        names.append(name)
        consts.append(real_embedding(c0))
        coeffs.append(np.concatenate([real_embedding(ci), neg], axis=0))

    add_block("sigma", sigma0, directions)
    for m in spec.cuts:
        q = cut_isometries[m]
        qh = q.conj().T
        sys = list(range(k - m + 1, k + 1))

        def cut(ops, q=q, qh=qh, sys=sys):
            lifted = np.matmul(np.matmul(lift, ops), lift.conj().T)
            return np.matmul(np.matmul(qh, partial_transpose(lifted, party_dims, sys)), q)

        add_block(f"cut{m}", cut(sigma0), cut(directions))

    objective = np.zeros(n_free + 1)
    objective[-1] = 1.0
    lmi = LmiProblem(objective, consts, coeffs)
    log.debug("level %d: %d free variables, blocks %s", k, n_free, lmi.block_sizes)
    return ExtensionProblem(
        lmi=lmi, spec=spec, dims=(dA, dB), sigma_basis=sigma_basis, rho_basis=rho_basis,
        constraint=constraint, particular=particular, null_space=null_space, rank=rank,
        block_names=names, lift=lift, cut_isometries=cut_isometries,
    )


# --------------------------------------------------------------------------- #
# verification                                                                #
# --------------------------------------------------------------------------- #

@dataclass
class VerificationReport:
    residuals: dict[str, float]
    tol: float

    @property
    def failures(self) -> list[str]:
        return [name for name, r in self.residuals.items() if r > self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_extension(sigma: np.ndarray, rho: BipartiteState, spec: ExtensionSpec,
                     tol: float = 1e-7) -> VerificationReport:
    """Check a candidate extension without any solver state.

    Cut positivity is tested on the full uncompressed space ``A (x) B^k``.
    Every residual is reported as a nonnegative defect.
    """
    dA, dB = rho.dims
    k = spec.level
    n_s = dA * math.comb(dB + k - 1, k)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (n_s, n_s):
        raise ValueError(f"sigma has shape {sigma.shape}, expected {(n_s, n_s)}")
    party_dims = (dA,) + (dB,) * k
    res = {"hermiticity": float(np.max(np.abs(sigma - sigma.conj().T)))}
    herm = 0.5 * (sigma + sigma.conj().T)
    res["positivity"] = max(0.0, -float(hermitian_eigen(herm, tol=np.inf)[0][0]))
    lift = _lift_isometry(dA, dB, k)
    big = lift @ herm @ lift.conj().T
    res["marginal"] = float(np.max(np.abs(partial_trace(big, party_dims, keep=[0, 1]) - rho.matrix)))
    perm_res = 0.0
    for perm in itertools.permutations(range(k)):
        p = np.kron(np.eye(dA), permutation_operator(dB, k, perm))
        perm_res = max(perm_res, float(np.max(np.abs(p @ big - big))), float(np.max(np.abs(big @ p - big))))
    res["permutation"] = perm_res
    cut_res = 0.0
    for m in spec.cuts:
        tm = partial_transpose(big, party_dims, list(range(k - m + 1, k + 1)))
        cut_res = max(cut_res, -float(hermitian_eigen(tm, tol=np.inf)[0][0]))
    res["cuts"] = max(0.0, cut_res)
    return VerificationReport(res, tol)


def product_extension(terms, dB: int, level: int) -> np.ndarray:
    """Bose-symmetric extension of ``sum_j w_j |x_j><x_j| (x) |y_j><y_j|``.

    ``terms`` yields ``(w, x, y)``; each product lifts to ``|x><x| (x) (|y><y|)^{(x)k}``
    written in the ``A (x) Sym^k`` coordinates.
    """
    v = sym_isometry(dB, level)
    out = 0
    for w, x, y in terms:
        yk = y
        for _ in range(level - 1):
            yk = np.kron(yk, y)
        vec = np.kron(x, v.conj().T @ yk)
        out = out + w * np.outer(vec, vec.conj())
    return np.asarray(out, dtype=complex)


# --------------------------------------------------------------------------- #
# solving                                                                     #
# --------------------------------------------------------------------------- #

@dataclass
class ExtensionResult:
    status: ExtensionStatus
    objective: float                 # t* reached by the primal iterate
    bound: float                     # dual objective, an upper bound on t*
    spec: ExtensionSpec
    problem: ExtensionProblem
    solution: SdpSolution
    sigma: np.ndarray | None = None
    dual_blocks: list[np.ndarray] = field(default_factory=list)
    verification: VerificationReport | None = None

    def verdict(self) -> Verdict:
        outcome = {
            ExtensionStatus.NO_EXTENSION: Outcome.ENTANGLED,
            ExtensionStatus.EXTENSION_FOUND: Outcome.SEPARABLE_CONSISTENT,
            ExtensionStatus.NUMERICAL_FAILURE: Outcome.NOT_DETECTED,
        }[self.status]
        evidence = self.bound if self.status is ExtensionStatus.NO_EXTENSION else self.objective
        return Verdict(f"dps{self.spec.level}", outcome, evidence, EPS_ENT)


def run_dps(rho: BipartiteState, spec: ExtensionSpec = ExtensionSpec(),
            options: SolverOptions | None = None) -> ExtensionResult:
    problem = build_extension_problem(rho, spec)
    sol = solve(problem.lmi, options)
    tol = (options or SolverOptions()).tol
    res = certify(problem.lmi, sol)
    duals = [complex_from_embedding(zb) for zb in sol.z]
    t_star = float(sol.x[-1])
    bound = sol.dual_objective

    status = ExtensionStatus.NUMERICAL_FAILURE
    sigma = None
    report = None
    if res.dual <= tol and res.dual_psd <= tol and bound < -EPS_ENT:
        status = ExtensionStatus.NO_EXTENSION
    elif sol.status is SolverStatus.OPTIMAL and t_star >= -EPS_FEAS:
        sigma = problem.sigma(sol.x)
        report = verify_extension(sigma, rho, spec, tol=EPS_FEAS)
        if report.passed:
            status = ExtensionStatus.EXTENSION_FOUND
        else:
            log.warning("extension failed verification: %s", report.failures)
    else:
        log.info("inconclusive: solver %s, t* = %.3e, bound = %.3e", sol.status.value, t_star, bound)
    return ExtensionResult(status, t_star, bound, spec, problem, sol, sigma, duals, report)


def run_dps_escalating(rho: BipartiteState, spec: ExtensionSpec = ExtensionSpec(),
                       options: SolverOptions | None = None, max_level: int = 3) -> list[ExtensionResult]:
    """Run ``spec.level``, then one level higher while an extension is still found."""
    results = [run_dps(rho, spec, options)]
    while results[-1].status is ExtensionStatus.EXTENSION_FOUND and results[-1].spec.level < max_level:
        prev = results[-1].spec
        up = ExtensionSpec(prev.level + 1, prev.with_ppt, None if prev.with_ppt else ())
        log.info("level %d found an extension, escalating to %d", prev.level, up.level)
        results.append(run_dps(rho, up, options))
    return results


# --------------------------------------------------------------------------- #
# witnesses                                                                   #
# --------------------------------------------------------------------------- #

@dataclass
class Witness:
    matrix: np.ndarray
    dims: tuple[int, int]
    value: float            # tr(W rho) after normalization
    shift: float            # multiple of the identity added to make W provably valid
    min_product: float      # smallest tr(W x (x) y) over the sampled products
    samples: int
    level: int

    def metadata(self) -> dict:
        return {"trace_W_rho": self.value, "identity_shift": self.shift,
                "min_sampled_product": self.min_product, "samples": self.samples, "level": self.level}


def product_expectations(w: np.ndarray, dims: tuple[int, int], samples: int,
                         rng: np.random.Generator) -> np.ndarray:
    """``<x y| W |x y>`` for Haar-random unit vectors ``x``, ``y``."""
    dA, dB = dims
    x = rng.normal(size=(samples, dA)) + 1j * rng.normal(size=(samples, dA))
    y = rng.normal(size=(samples, dB)) + 1j * rng.normal(size=(samples, dB))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    t = w.reshape(dA, dB, dA, dB)
    return np.einsum("si,sj,ijkl,sk,sl->s", x.conj(), y.conj(), t, x, y, optimize=True).real


def extract_witness(result: ExtensionResult, rho: BipartiteState, samples: int = 10_000,
                    seed: int = 0, product_tol: float = 1e-9) -> Witness:
    """Turn the dual certificate of a failed extension into a witness on ``A (x) B``.

    The duals ``Y_b >= 0`` define ``G = Y_sigma + sum_m L_m^*(Y_m)``, which is
    nonnegative on every lifted product state. Solving ``L^*(W) = G`` in the
    least-squares sense leaves a remainder ``G_perp``; adding
    ``lambda_max(G_perp) I`` (plus any negative dual eigenvalue) to ``W``
    restores ``tr(W x (x) y) >= 0`` exactly.
    """
    if result.status is not ExtensionStatus.NO_EXTENSION:
        raise WitnessError(f"no dual certificate: status {result.status.value}")
    prob = result.problem
    k = prob.spec.level
    party_dims = prob.party_dims()
    lift = prob.lift

    g = np.zeros((prob.sigma_dim, prob.sigma_dim), dtype=complex)
    psd_defect = 0.0
    for name, y in zip(prob.block_names, result.dual_blocks):
        y = 0.5 * (y + y.conj().T)
        psd_defect += max(0.0, -float(hermitian_eigen(y, tol=np.inf)[0][0]))
        if name == "sigma":
            g += y
        else:
            m = int(name[3:])
            q = prob.cut_isometries[m]
            back = partial_transpose(q @ y @ q.conj().T, party_dims, list(range(k - m + 1, k + 1)))
            g += lift.conj().T @ back @ lift

    g_coords = hermitian_coords(g, prob.sigma_basis)
    w_coords, *_ = np.linalg.lstsq(prob.constraint.T, g_coords, rcond=None)
    remainder = from_coords(g_coords - prob.constraint.T @ w_coords, prob.sigma_basis)
    shift = max(0.0, float(hermitian_eigen(remainder, tol=np.inf)[0][-1])) + psd_defect

    dA, dB = rho.dims
    w = from_coords(w_coords, prob.rho_basis) + shift * np.eye(dA * dB)
    w = 0.5 * (w + w.conj().T)
    tr = float(np.trace(w).real)
    if tr > 0:
        w = w / tr
    value = float(np.trace(w @ rho.matrix).real)
    if not value < 0:
        raise WitnessError(f"dual certificate does not separate rho: tr(W rho) = {value:.3e}")
    vals = product_expectations(w, rho.dims, samples, np.random.default_rng(seed)) if samples else np.array([0.0])
    min_prod = float(vals.min())
    if min_prod < -product_tol:
        raise WitnessError(f"witness negative on a product state: {min_prod:.3e}")
    return Witness(w, (dA, dB), value, shift, min_prod, samples, k)
