"""JSON wire formats for matrices, states, LMI problems and solutions.

Floats go through ``repr``, which round-trips IEEE doubles bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .linalg import BipartiteState
from .sdp import LmiProblem, Residuals, SdpSolution, SolverStatus


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    if m.ndim == 1:
        m = m[:, None]
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": np.real(m).tolist(),
        "im": np.imag(m).tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.array(obj["re"], dtype=float).reshape(obj["rows"], obj["cols"])
    im = np.array(obj["im"], dtype=float).reshape(obj["rows"], obj["cols"])
    return re + 1j * im


def state_to_json(state: BipartiteState, **extra) -> dict:
    obj = matrix_to_json(state.matrix)
    obj["dims"] = list(state.dims)
    obj.update(extra)
    return obj


def state_from_json(obj: dict) -> BipartiteState:
    return BipartiteState(matrix_from_json(obj), tuple(obj["dims"]))


def lmi_to_json(problem: LmiProblem) -> dict:
    return {
        "objective": problem.objective.tolist(),
        "blocks": [
            {"size": int(f0.shape[0]), "F0": matrix_to_json(f0), "Fi": [matrix_to_json(f) for f in fi]}
            for f0, fi in zip(problem.constants, problem.coefficients)
        ],
    }


def lmi_from_json(obj: dict) -> LmiProblem:
    n = len(obj["objective"])
    consts, coeffs = [], []
    for blk in obj["blocks"]:
        m = blk["size"]
        consts.append(matrix_from_json(blk["F0"]).real)
        fi = [matrix_from_json(f).real for f in blk["Fi"]]
        coeffs.append(np.array(fi).reshape(n, m, m))
    return LmiProblem(np.array(obj["objective"], dtype=float), consts, coeffs)


def solution_to_json(sol: SdpSolution) -> dict:
    r = sol.residuals
    return {
        "status": sol.status.value,
        "objective": sol.objective,
        "dual_objective": sol.dual_objective,
        "iterations": sol.iterations,
        "x": sol.x.tolist(),
        "Z": [matrix_to_json(z) for z in sol.z],
        "residuals": {"primal": r.primal, "dual": r.dual, "dual_psd": r.dual_psd, "gap": r.gap,
                      "min_eig_primal": r.min_eig_primal, "min_eig_dual": r.min_eig_dual},
    }


def solution_from_json(obj: dict) -> SdpSolution:
    return SdpSolution(
        x=np.array(obj["x"], dtype=float),
        z=[matrix_from_json(z).real for z in obj["Z"]],
        objective=obj["objective"],
        dual_objective=obj["dual_objective"],
        status=SolverStatus(obj["status"]),
        iterations=obj["iterations"],
        residuals=Residuals(**obj["residuals"]),
    )


def dump(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj))


def load(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
