"""Command-line interface: ``horoent {state,check,scan,witness}``.

Exit codes: 0 success, 2 invalid parameters, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import formats
from .criteria import DEFAULT_TOL, ppt_check, realignment_check
from .dps import ExtensionSpec, ExtensionStatus, WitnessError, extract_witness, run_dps_escalating
from .states import FamilyParams, InvalidParamsError, make_state

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
WORKERS_ENV = "HOROENT_WORKERS"

log = logging.getLogger("horoent")


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def _ints(text: str | None) -> tuple[int, ...] | None:
    return None if text is None else tuple(int(v) for v in text.split(","))


@dataclass(frozen=True)
class ScanSpec:
    d: int
    a: float
    criterion: str
    grid: int = 51
    points: tuple[tuple[float, ...], ...] = ()
    level: int = 2
    cuts: tuple[int, ...] | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.criterion not in ("realign", "ppt", "dps"):
            raise InvalidParamsError(f"unknown criterion {self.criterion!r}")
        if not self.points:
            if self.d != 3:
                raise InvalidParamsError("grid scans need d=3; pass explicit points for d > 3")
            if self.grid < 2:
                raise InvalidParamsError("grid resolution must be >= 2")
        for pt in self.lambda_points():
            FamilyParams(self.d, self.a, pt)

    def lambda_points(self) -> list[tuple[float, ...]]:
        if self.points:
            return [tuple(p) for p in self.points]
        g = np.linspace(0.0, 1.0, self.grid)
        return [(float(l1), float(l2)) for l1 in g for l2 in g]


def evaluate_point(d: int, a: float, lambdas: tuple[float, ...], criterion: str,
                   level: int = 2, cuts: tuple[int, ...] | None = None,
                   tol: float = DEFAULT_TOL) -> tuple[float, bool, str]:
    """``(evidence, detected, status)`` for one parameter point."""
    rho = make_state(FamilyParams(d, a, lambdas))
    if criterion == "realign":
        v = realignment_check(rho, tol)
        return v.evidence, v.entangled, v.outcome.value
    if criterion == "ppt":
        v = ppt_check(rho, tol)
        return v.evidence, v.entangled, v.outcome.value
    results = run_dps_escalating(rho, ExtensionSpec(level, True, cuts))
    last = results[-1]
    status = ">".join(f"{r.status.value}@{r.spec.level}" for r in results)
    evidence = last.bound if last.status is ExtensionStatus.NO_EXTENSION else last.objective
    return evidence, last.status is ExtensionStatus.NO_EXTENSION, status


def _evaluate_star(args):
    try:
        return evaluate_point(*args)
    except Exception as exc:  # recorded per row, the scan goes on
        return float("nan"), False, f"error:{type(exc).__name__}"


def run_scan(spec: ScanSpec, workers: int | None = None) -> str:
    """CSV text with one row per grid point, rows in lexicographic grid order."""
    points = spec.lambda_points()
    jobs = [(spec.d, spec.a, pt, spec.criterion, spec.level, spec.cuts, spec.tol) for pt in points]
    workers = workers or int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_evaluate_star(j) for j in jobs]

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"lambda{i + 1}" for i in range(spec.d - 1)] + ["evidence", "detected", "status"])
    for pt, (evidence, detected, status) in zip(points, rows):
        writer.writerow([repr(x) for x in pt] + [repr(float(evidence)), str(bool(detected)).lower(), status])
    return out.getvalue()


def _params(args) -> FamilyParams:
    return FamilyParams(args.d, args.a, _floats(args.lambdas))


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_state(args) -> int:
    p = _params(args)
    obj = formats.state_to_json(make_state(p), params=p.to_json())
    _write(json.dumps(obj) + "\n", args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    p = _params(args)
    rho = make_state(p)
    if args.criterion == "ppt":
        verdict = ppt_check(rho, args.tol)
    elif args.criterion == "realign":
        verdict = realignment_check(rho, args.tol)
    else:
        spec = ExtensionSpec(args.level, True, _ints(args.cuts))
        results = run_dps_escalating(rho, spec, max_level=args.level if args.no_escalate else args.level + 1)
        verdict = results[-1].verdict()
        if results[-1].status is ExtensionStatus.NUMERICAL_FAILURE:
            print(json.dumps(verdict.to_json()))
            return EXIT_SOLVER
    print(json.dumps(verdict.to_json()))
    return EXIT_OK


def cmd_scan(args) -> int:
    spec = ScanSpec(args.d, args.a, args.criterion, args.grid,
                    tuple(_floats(p) for p in args.point or ()), args.level, _ints(args.cuts), args.tol)
    _write(run_scan(spec, args.workers), args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    p = _params(args)
    rho = make_state(p)
    results = run_dps_escalating(rho, ExtensionSpec(args.level, True, _ints(args.cuts)))
    res = results[-1]
    if res.status is not ExtensionStatus.NO_EXTENSION:
        print(f"no entanglement certificate: {res.status.value} at level {res.spec.level}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        wit = extract_witness(res, rho, samples=args.samples, seed=args.seed)
    except WitnessError as exc:
        print(f"witness rejected: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    obj = formats.matrix_to_json(wit.matrix)
    obj["dims"] = list(wit.dims)
    obj["params"] = p.to_json()
    obj["metadata"] = wit.metadata() | {"seed": args.seed, "t_star_bound": res.bound}
    _write(json.dumps(obj) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="horoent", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def family(sp, lambdas=True):
        sp.add_argument("--d", type=int, required=True)
        sp.add_argument("--a", type=float, required=True)
        if lambdas:
            sp.add_argument("--lambdas", default="", help="comma-separated lambda_1..lambda_{d-1}")

    def dps_opts(sp):
        sp.add_argument("--level", type=int, default=2)
        sp.add_argument("--cuts", default=None, help="comma-separated transposed-copy counts")

    sp = sub.add_parser("state", help="write the state as JSON")
    family(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_state)

    sp = sub.add_parser("check", help="single-point verdict")
    sp.add_argument("criterion", choices=["ppt", "realign", "dps"])
    family(sp)
    dps_opts(sp)
    sp.add_argument("--no-escalate", action="store_true")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("scan", help="parameter scan as CSV")
    family(sp, lambdas=False)
    sp.add_argument("--criterion", choices=["realign", "ppt", "dps"], required=True)
    sp.add_argument("--grid", type=int, default=51)
    sp.add_argument("--point", action="append", help="explicit lambda vector (repeatable)")
    dps_opts(sp)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--workers", type=int, default=None, help=f"defaults to ${WORKERS_ENV} or 1")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("witness", help="entanglement witness from the extension dual")
    family(sp)
    dps_opts(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_witness)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidParamsError, ValueError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
