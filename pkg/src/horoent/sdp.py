"""Dense primal-dual interior-point solver for block LMI problems.

The problem is

    maximize    c . x
    subject to  S_b = F0_b + sum_i x_i F_i,b  >= 0      for every block b

with dual

    minimize    sum_b <F0_b, Z_b>
    subject to  sum_b <F_i,b, Z_b> = -c_i,   Z_b >= 0.

Every dual-feasible ``Z`` bounds the primal objective from above. Search
directions are HKM with a Mehrotra predictor-corrector; the Schur
complement is factored with a dense Cholesky.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


class SolverStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITERATIONS = "MaxIterations"
    LINEAR_ALGEBRA_FAILURE = "LinearAlgebraFailure"


class LmiError(ValueError):
    pass


@dataclass
class LmiProblem:
    """``objective`` has shape ``(n,)``; block ``b`` has ``constants[b]`` of
    shape ``(m, m)`` and ``coefficients[b]`` of shape ``(n, m, m)``."""

    objective: np.ndarray
    constants: list[np.ndarray]
    coefficients: list[np.ndarray]

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.constants = [np.asarray(f, dtype=float) for f in self.constants]
        self.coefficients = [np.asarray(f, dtype=float) for f in self.coefficients]
        n = self.objective.shape[0]
        if not self.constants or len(self.constants) != len(self.coefficients):
            raise LmiError("need at least one block and one coefficient stack per block")
        for b, (f0, fi) in enumerate(zip(self.constants, self.coefficients)):
            m = f0.shape[0]
            if m < 1 or f0.shape != (m, m) or fi.shape != (n, m, m):
                raise LmiError(f"block {b}: inconsistent shapes {f0.shape}, {fi.shape}")
            asym = max(np.max(np.abs(f0 - f0.T)), np.max(np.abs(fi - fi.transpose(0, 2, 1)), initial=0.0))
            if asym > 1e-12:
                raise LmiError(f"block {b}: F matrices not symmetric (defect {asym:.2e})")

    @property
    def n(self) -> int:
        return self.objective.shape[0]

    @property
    def block_sizes(self) -> list[int]:
        return [f.shape[0] for f in self.constants]

    def lmi(self, x: np.ndarray) -> list[np.ndarray]:
        """The blocks ``F0 + sum_i x_i F_i``."""
        return [f0 + np.tensordot(x, fi, axes=1) for f0, fi in zip(self.constants, self.coefficients)]

    def adjoint(self, z: Sequence[np.ndarray]) -> np.ndarray:
        """``(sum_b <F_i,b, Z_b>)_i``."""
        return sum(np.tensordot(fi, zb, axes=([1, 2], [0, 1])) for fi, zb in zip(self.coefficients, z))

    def dual_objective(self, z: Sequence[np.ndarray]) -> float:
        return float(sum(np.vdot(f0, zb) for f0, zb in zip(self.constants, z)))

    def scaled(self, factor: float) -> LmiProblem:
        return LmiProblem(self.objective * factor, [f * factor for f in self.constants],
                          [f * factor for f in self.coefficients])


@dataclass(frozen=True)
class Residuals:
    primal: float        # max(0, -min eig) over the LMI blocks at x
    dual: float          # || A*(Z) + c ||_2
    dual_psd: float      # max(0, -min eig) over the Z blocks
    gap: float           # <F0, Z> - c.x
    min_eig_primal: float
    min_eig_dual: float

    def ok(self, tol: float, objective: float) -> bool:
        return (self.primal <= tol and self.dual <= tol and self.dual_psd <= tol
                and abs(self.gap) <= tol * (1.0 + abs(objective)))


@dataclass
class IterationRecord:
    iteration: int
    primal_objective: float
    dual_objective: float
    mu: float
    step_primal: float
    step_dual: float


@dataclass
class SdpSolution:
    x: np.ndarray
    z: list[np.ndarray]
    objective: float
    dual_objective: float
    status: SolverStatus
    iterations: int
    residuals: Residuals
    history: list[IterationRecord] = field(default_factory=list)


def residuals(problem: LmiProblem, x: np.ndarray, z: Sequence[np.ndarray]) -> Residuals:
    """Recompute primal and dual feasibility and the gap from ``(x, Z)`` alone."""
    x = np.asarray(x, dtype=float)
    s = problem.lmi(x)
    min_p = min(float(np.linalg.eigvalsh(sb)[0]) for sb in s)
    min_d = min(float(np.linalg.eigvalsh(zb)[0]) for zb in z)
    dual_res = float(np.linalg.norm(problem.adjoint(z) + problem.objective))
    gap = problem.dual_objective(z) - float(problem.objective @ x)
    return Residuals(max(0.0, -min_p), dual_res, max(0.0, -min_d), gap, min_p, min_d)


def certify(problem: LmiProblem, sol: SdpSolution) -> Residuals:
    return residuals(problem, sol.x, sol.z)


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iterations: int = 200
    step_fraction: float = 0.98
    regularization: float = 1e-12


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    # largest alpha with x + alpha dx >= 0, from the spectrum of L^-1 dx L^-T
    lchol = np.linalg.cholesky(x)
    li = scipy.linalg.solve_triangular(lchol, np.eye(x.shape[0]), lower=True)
    w = np.linalg.eigvalsh(li @ dx @ li.T)
    return np.inf if w[0] >= 0 else -1.0 / w[0]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _initial_point(problem: LmiProblem):
    sizes = problem.block_sizes
    scale = 1.0 + max(np.max(np.abs(f0)) for f0 in problem.constants)
    c = problem.objective

    # dual start: a multiple of the identity if it satisfies the equalities exactly
    traces = problem.adjoint([np.eye(m) for m in sizes])
    z_scale = scale
    denom = float(traces @ traces)
    if denom > 0:
        xi = -float(traces @ c) / denom
        if xi > 0 and np.linalg.norm(xi * traces + c) <= 1e-12 * (1.0 + np.linalg.norm(c)):
            z_scale = xi
    z = [z_scale * np.eye(m) for m in sizes]

    # primal start: x = 0, lifted into the interior along a column with F_i = -gamma I
    x = np.zeros(problem.n)
    lam0 = min(float(np.linalg.eigvalsh(f0)[0]) for f0 in problem.constants)
    slack_col = None
    for i in range(problem.n):
        gam = -problem.coefficients[0][i, 0, 0]
        if gam > 0 and all(np.array_equal(fi[i], -gam * np.eye(m)) for fi, m in zip(problem.coefficients, sizes)):
            slack_col = (i, gam)
            break
    if slack_col is not None:
        i, gam = slack_col
        if lam0 < 1.0:
            x[i] = -(1.0 - lam0) / gam
        s = problem.lmi(x)
    elif lam0 > 0:
        s = problem.lmi(x)
    else:
        s = [scale * np.eye(m) for m in sizes]
    return x, s, z


def solve(problem: LmiProblem, options: SolverOptions | None = None) -> SdpSolution:
    """Primal-dual path following (HKM direction, Mehrotra predictor-corrector).

    Starting points are feasible whenever the problem admits the obvious ones
    (an identity multiple for ``Z``, a ``-gamma I`` column for ``x``); the
    Newton system carries the residual terms either way.
    """
    opts = options or SolverOptions()
    c = problem.objective
    sizes = problem.block_sizes
    n_total = sum(sizes)
    x, s, z = _initial_point(problem)
    coeffs = problem.coefficients
    flat = [fi.reshape(problem.n, -1) for fi in coeffs]
    history: list[IterationRecord] = []
    status = SolverStatus.MAX_ITERATIONS
    it = 0

    for it in range(1, opts.max_iterations + 1):
        rp = [sb - lb for sb, lb in zip(problem.lmi(x), s)]      # LMI residual F(x) - S
        rd = problem.adjoint(z) + c
        mu = sum(float(np.vdot(zb, sb)) for zb, sb in zip(z, s)) / n_total
        pobj = float(c @ x)
        dobj = problem.dual_objective(z)

        pres = max(float(np.max(np.abs(r))) for r in rp)
        dres = float(np.linalg.norm(rd))
        if pres <= opts.tol and dres <= opts.tol and abs(dobj - pobj) <= opts.tol * (1.0 + abs(pobj)):
            final = residuals(problem, x, z)
            if final.ok(opts.tol, pobj):
                status = SolverStatus.OPTIMAL
                it -= 1
                break

        try:
            s_inv = [scipy.linalg.cho_solve(scipy.linalg.cho_factor(sb), np.eye(sb.shape[0])) for sb in s]
        except np.linalg.LinAlgError:
            status = SolverStatus.LINEAR_ALGEBRA_FAILURE
            break
        s_inv = [_sym(si) for si in s_inv]

        schur = np.zeros((problem.n, problem.n))
        for fi, fl, zb, si in zip(coeffs, flat, z, s_inv):
            t = np.matmul(np.matmul(zb, fi), si)
            schur += fl @ t.reshape(problem.n, -1).T
        schur = _sym(schur)

        factor = None
        for reg in (0.0, opts.regularization):
            try:
                mat = schur + reg * max(1.0, float(np.max(np.diag(schur)))) * np.eye(problem.n) if reg else schur
                factor = scipy.linalg.cho_factor(mat)
                break
            except np.linalg.LinAlgError:
                log.debug("Schur complement not positive definite, regularizing")
        if factor is None:
            status = SolverStatus.LINEAR_ALGEBRA_FAILURE
            break

        def direction(targets):
            # targets[b] is the complementarity right-hand side K_b (Z S -> K)
            rhs = -c.copy()
            for fi, zb, si, rb, kb in zip(coeffs, z, s_inv, rp, targets):
                rhs -= np.tensordot(fi, kb @ si, axes=([1, 2], [1, 0]))
                rhs += np.tensordot(fi, zb @ rb @ si, axes=([1, 2], [1, 0]))
            # with A_i = -F_i the HKM normal equations read M dx = rhs
            dx = scipy.linalg.cho_solve(factor, -rhs)
            ds = [rb + np.tensordot(dx, fi, axes=1) for rb, fi in zip(rp, coeffs)]
            dz = [_sym((kb - zb @ dsb) @ si - zb) for kb, zb, dsb, si in zip(targets, z, ds, s_inv)]
            return dx, ds, dz

        def steps(ds, dz):
            ap = min(_max_step(sb, dsb) for sb, dsb in zip(s, ds))
            ad = min(_max_step(zb, dzb) for zb, dzb in zip(z, dz))
            return min(1.0, opts.step_fraction * ap), min(1.0, opts.step_fraction * ad)

        try:
            dx_a, ds_a, dz_a = direction([np.zeros_like(zb) for zb in z])
            ap, ad = steps(ds_a, dz_a)
            mu_aff = sum(float(np.vdot(zb + ad * dzb, sb + ap * dsb))
                         for zb, dzb, sb, dsb in zip(z, dz_a, s, ds_a)) / n_total
            sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
            targets = [sigma * mu * np.eye(m) - dzb @ dsb for m, dzb, dsb in zip(sizes, dz_a, ds_a)]
            dx, ds, dz = direction(targets)
            ap, ad = steps(ds, dz)
        except np.linalg.LinAlgError:
            status = SolverStatus.LINEAR_ALGEBRA_FAILURE
            break

        x = x + ap * dx
        s = [_sym(sb + ap * dsb) for sb, dsb in zip(s, ds)]
        z = [_sym(zb + ad * dzb) for zb, dzb in zip(z, dz)]
        history.append(IterationRecord(it, float(c @ x), problem.dual_objective(z),
                                       sum(float(np.vdot(zb, sb)) for zb, sb in zip(z, s)) / n_total, ap, ad))
        log.debug("iter %d  pobj %.10e  dobj %.10e  steps %.3f %.3f", it, history[-1].primal_objective,
                  history[-1].dual_objective, ap, ad)
    else:
        it = opts.max_iterations

    final = residuals(problem, x, z)
    return SdpSolution(
        x=x,
        z=z,
        objective=float(c @ x),
        dual_objective=problem.dual_objective(z),
        status=status,
        iterations=it,
        residuals=final,
        history=history,
    )
