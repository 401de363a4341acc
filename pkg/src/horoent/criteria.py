"""PPT, realignment and block-structure checks with uniform verdicts."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import BipartiteState, min_eig, partial_transpose, realign, trace_norm
from .states import (
    FamilyParams,
    block_form,
    h0_basis,
    pairs_one_dim,
    pairs_two_dim,
    pt_block_basis,
    pt_sectors,
    restrict,
    state_sectors,
    unnormalized_state,
)

DEFAULT_TOL = 1e-9


class Outcome(str, enum.Enum):
    ENTANGLED = "Entangled"
    NOT_DETECTED = "NotDetected"
    SEPARABLE_CONSISTENT = "SeparableConsistent"


@dataclass(frozen=True)
class Verdict:
    criterion: str
    outcome: Outcome
    evidence: float
    tol: float

    @property
    def entangled(self) -> bool:
        return self.outcome is Outcome.ENTANGLED

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "outcome": self.outcome.value,
                "evidence": self.evidence, "tol": self.tol}

    @classmethod
    def from_json(cls, obj: dict) -> Verdict:
        return cls(obj["criterion"], Outcome(obj["outcome"]), float(obj["evidence"]), float(obj["tol"]))


def ppt_check(rho: BipartiteState, tol: float = DEFAULT_TOL) -> Verdict:
    """Entangled iff the partial transpose has an eigenvalue below ``-tol``."""
    ev = min_eig(partial_transpose(rho))
    outcome = Outcome.ENTANGLED if ev < -tol else Outcome.NOT_DETECTED
    return Verdict("ppt", outcome, ev, tol)


def realignment_value(rho: BipartiteState) -> float:
    return trace_norm(realign(rho))


def realignment_check(rho: BipartiteState, tol: float = DEFAULT_TOL) -> Verdict:
    """Entangled iff ``||R(rho)||_1 > 1 + tol``; the raw norm is always returned."""
    val = realignment_value(rho)
    outcome = Outcome.ENTANGLED if val > 1.0 + tol else Outcome.NOT_DETECTED
    return Verdict("realignment", outcome, val, tol)


@dataclass
class CheckResult:
    passed: bool
    residual: float


@dataclass
class StructureReport:
    params: FamilyParams
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def add(self, name: str, residual: float, passed: bool):
        self.checks[name] = CheckResult(bool(passed), float(residual))

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "passed": self.passed,
            "checks": {k: {"passed": v.passed, "residual": v.residual} for k, v in self.checks.items()},
        }


def _off_sector_mass(op: np.ndarray, labels: np.ndarray) -> float:
    outside = labels[:, None] != labels[None, :]
    return float(np.max(np.abs(op[outside]), initial=0.0))


def structure_check(p: FamilyParams, psd_tol: float = 1e-10, identity_tol: float = 1e-13) -> StructureReport:
    """Verify the direct-sum structure of ``rho`` and ``rho^Gamma`` and block positivity.

    Works on ``N_d^{-1} rho`` so that the blocks compare without rescaling.
    Sparsity checks demand exact zeros.
    """
    d = p.d
    rep = StructureReport(p)
    u = unnormalized_state(p)
    upt = partial_transpose(u, (d, d))
    bf = block_form(p)

    rep.add("sparsity_rho", _off_sector_mass(u, state_sectors(d)), _off_sector_mass(u, state_sectors(d)) == 0.0)
    pt_lab = pt_sectors(d)
    rep.add("sparsity_rho_pt", _off_sector_mass(upt, pt_lab), _off_sector_mass(upt, pt_lab) == 0.0)

    res = float(np.max(np.abs(restrict(u, d, h0_basis(d)) - bf.m)))
    rep.add("m_matches_rho", res, res <= identity_tol)
    singles = np.array([u[k * d + l, k * d + l] for k, l in pairs_one_dim(d)])
    res = float(np.max(np.abs(singles - bf.singles), initial=0.0))
    rep.add("singles_match_rho", res, res <= identity_tol)

    res = max(float(np.max(np.abs(restrict(upt, d, pt_block_basis(d, i)) - bf.m_tilde[i]))) for i in range(d))
    rep.add("m_tilde_match_rho_pt", res, res <= identity_tol)
    res = max(
        (float(np.max(np.abs(restrict(upt, d, [(k, l), (l, k)]) - blk)))
         for (k, l), blk in zip(pairs_two_dim(d), bf.pair_blocks)),
        default=0.0,
    )
    rep.add("pair_blocks_match_rho_pt", res, res <= identity_tol)

    ev = min_eig(bf.m)
    rep.add("m_psd", ev, ev >= -psd_tol)
    ev = min(min_eig(mt) for mt in bf.m_tilde)
    rep.add("m_tilde_psd", ev, ev >= -psd_tol)

    # M = M' + a|phi><phi| with M' block diagonal
    mask = np.kron(np.eye(d), np.ones((2, 2))) == 0
    res = float(np.max(np.abs(bf.m_prime[mask])))
    rep.add("m_prime_block_diagonal", res, res <= identity_tol)
    res = float(np.max(np.abs(bf.m - bf.m_prime - p.a * np.outer(bf.phi, bf.phi))))
    rep.add("rank_one_correction", res, res <= identity_tol)
    # each diagonal block of M' is lambda_i [[b-a, c], [c, b]] plus a(1 - lambda_i) on |i,i+1>
    res = 0.0
    for i, (lam, rest) in enumerate(zip(p.all_lambdas, bf.b_rest)):
        expect = np.zeros((2, 2))
        expect[(0, 0) if i == d - 1 else (1, 1)] = p.a * (1.0 - lam)
        res = max(res, float(np.max(np.abs(rest - expect))))
    rep.add("m_prime_blocks", res, res <= identity_tol)
    ev = min(min_eig(bt) for bt in bf.b_tilde)
    rep.add("b_tilde_psd", ev, ev >= -psd_tol)
    return rep
