"""Generalized Horodecki-like PPT entangled states in C^d (x) C^d.

Construction of the state family and its block structure, PPT and
realignment tests, and a PPT symmetric-extension test backed by a dense
interior-point SDP solver.
"""

from .criteria import Outcome, Verdict, ppt_check, realignment_check, structure_check
from .dps import (
    ExtensionResult,
    ExtensionSpec,
    ExtensionStatus,
    build_extension_problem,
    extract_witness,
    run_dps,
    verify_extension,
)
from .linalg import BipartiteState, partial_trace, partial_transpose, realign, trace_norm
from .sdp import LmiProblem, SdpSolution, certify, solve
from .states import FamilyParams, InvalidParamsError, ent_sep_split, make_state

__version__ = "0.1.0"
