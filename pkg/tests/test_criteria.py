import json

import numpy as np
import pytest

from conftest import max_entangled_projector, random_unitary
from horoent import linalg as la
from horoent.criteria import (
    DEFAULT_TOL, Outcome, Verdict, ppt_check, realignment_check, realignment_value, structure_check,
)
from horoent.states import FamilyParams, make_state


def state(d, a, lams):
    return make_state(FamilyParams(d, a, lams))


# --- PPT ----------------------------------------------------------------------

def test_ppt_family_point_not_detected():
    v = ppt_check(state(3, 0.5, (0.5, 0.5)))
    assert v.outcome is Outcome.NOT_DETECTED
    assert v.evidence >= -1e-10
    assert v.criterion == "ppt" and v.tol == DEFAULT_TOL


def test_ppt_max_entangled():
    v = ppt_check(la.BipartiteState(max_entangled_projector(3), (3, 3)))
    assert v.outcome is Outcome.ENTANGLED
    assert v.evidence == pytest.approx(np.linalg.eigvalsh(la.partial_transpose(max_entangled_projector(3)))[0],
                                       abs=1e-12)
    assert v.evidence == pytest.approx(-1 / 3, abs=1e-9)


def test_ppt_maximally_mixed():
    v = ppt_check(la.BipartiteState(np.eye(9) / 9, (3, 3)))
    assert v.outcome is Outcome.NOT_DETECTED
    assert v.evidence == pytest.approx(1 / 9, abs=1e-15)


@pytest.mark.parametrize("d", [3, 4])
def test_ppt_never_fires_on_family(d):
    for a in [0.0, 0.25, 0.5, 0.75, 1.0]:
        for lam in [0.0, 0.5, 1.0]:
            v = ppt_check(state(d, a, (lam,) * (d - 1)))
            assert v.outcome is Outcome.NOT_DETECTED
            assert v.evidence >= -1e-10


# --- realignment --------------------------------------------------------------

def realignment_oracle(rho):
    return np.linalg.svd(la.realign(rho), compute_uv=False).sum()


@pytest.mark.parametrize("lams", [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)])
def test_realignment_detects_corners(lams):
    rho = state(3, 0.8, lams)
    v = realignment_check(rho)
    assert v.outcome is Outcome.ENTANGLED
    assert v.evidence == pytest.approx(realignment_oracle(rho.matrix), abs=1e-12)
    assert v.evidence > 1 + 1e-4


def test_realignment_misses_center():
    rho = state(3, 0.8, (0.5, 0.5))
    v = realignment_check(rho)
    assert v.outcome is Outcome.NOT_DETECTED
    assert v.evidence == pytest.approx(realignment_oracle(rho.matrix), abs=1e-12)
    assert v.evidence < 1


def test_realignment_horodecki_value():
    rho = state(3, 0.8, (0.0, 0.0))
    assert realignment_value(rho) == pytest.approx(realignment_oracle(rho.matrix), abs=1e-12)


def test_realignment_local_unitary_invariance(rng):
    rho = state(3, 0.6, (0.3, 0.7))
    base = realignment_value(rho)
    for _ in range(5):
        u = np.kron(random_unitary(rng, 3), random_unitary(rng, 3))
        moved = la.BipartiteState(u @ rho.matrix @ u.conj().T, (3, 3))
        assert abs(realignment_value(moved) - base) <= 1e-10


def test_realignment_separable_bound(rng):
    for lams in [(0.0, 0.0), (0.5, 0.5), (1.0, 0.2)]:
        assert realignment_value(state(3, 0.0, lams)) <= 1 + 1e-10
    for _ in range(5):
        x = rng.normal(size=3) + 1j * rng.normal(size=3)
        y = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi = np.kron(x / np.linalg.norm(x), y / np.linalg.norm(y))
        assert realignment_value(la.BipartiteState(np.outer(psi, psi.conj()), (3, 4))) <= 1 + 1e-10


def test_verdicts_deterministic():
    rho = state(3, 0.8, (0.2, 0.1))
    a, b = realignment_check(rho), realignment_check(rho)
    assert a.evidence.hex() == b.evidence.hex()
    assert ppt_check(rho).evidence.hex() == ppt_check(rho).evidence.hex()


def test_verdict_json_round_trip():
    v = realignment_check(state(3, 0.8, (0.0, 0.0)))
    obj = json.loads(json.dumps(v.to_json()))
    assert obj["criterion"] == "realignment" and obj["outcome"] == "Entangled"
    assert set(obj) == {"criterion", "outcome", "evidence", "tol"}
    assert Verdict.from_json(obj) == v
    assert v.entangled


def test_entangled_means_threshold_crossed():
    for lams in [(0.0, 0.0), (0.5, 0.5), (0.1, 0.9)]:
        v = realignment_check(state(3, 0.8, lams))
        assert v.entangled == (v.evidence > 1 + v.tol)


# --- structure ----------------------------------------------------------------

@pytest.mark.parametrize("d,a,lams", [
    (3, 0.5, (0.2, 0.9)), (3, 0.0, (0.4, 0.6)), (4, 0.7, (0.1, 0.4, 0.9)),
    (5, 1.0, (0.2, 0.4, 0.6, 0.8)), (5, 0.33, (1.0, 0.0, 0.5, 0.25)), (6, 0.9, (0.5,) * 5),
])
def test_structure_check_passes(d, a, lams):
    rep = structure_check(FamilyParams(d, a, lams))
    failed = {k: v for k, v in rep.checks.items() if not v.passed}
    assert rep.passed, failed
    expected = {"sparsity_rho", "sparsity_rho_pt", "m_psd", "m_tilde_psd", "rank_one_correction"}
    assert expected <= set(rep.checks)
    json.dumps(rep.to_json())


def test_structure_a_zero_correction_vanishes():
    rep = structure_check(FamilyParams(3, 0.0, (0.3, 0.3)))
    assert rep.checks["rank_one_correction"].residual == 0.0
