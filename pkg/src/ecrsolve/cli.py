"""Command-line front end: ``ecrsolve {build-zeros,solve,verify,bench}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .ecr import SeparableSystem, solve
from .errors import ConditionViolation, EcrError
from .matrices import build_m1, build_m2, laplacian
from .tridiag import UNIT_ROUNDOFF, TridiagonalMatrix
from .verify import (
    ErrorModel,
    check_appendix_identities,
    check_conditions,
    check_det_lemma,
    check_main_identity,
)
from .zeros import ZeroTable, build_zero_table

IDENTITY_TOL = 1e-9
_MASK = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator; ``uniform`` maps the top 53 bits to ``[-1, 1)``."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        vals = [(self.next_u64() >> 11) * 2.0 ** -53 for _ in range(count)]
        return (2.0 * np.array(vals) - 1.0).reshape(shape)


@dataclass
class RunConfig:
    command: str
    matrix_kind: str = "m1"
    k: int = 3
    m: int = 8
    kappa: float = UNIT_ROUNDOFF
    certify: bool = False
    seed: int = 0
    threads: int = 1
    rn_file: Optional[str] = None
    b_file: Optional[str] = None
    zeros: Optional[str] = None
    out: Optional[str] = None
    x_out: Optional[str] = None
    ks: Optional[List[int]] = None
    samples: int = 10

    def validate(self):
        if self.k < 1 or self.m < 1:
            raise ValueError("need k >= 1 and m >= 1")
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if self.matrix_kind == "file" and not self.rn_file:
            raise ValueError("--matrix file needs --rn-file")


class InputError(Exception):
    pass


def load_matrix(path: str) -> TridiagonalMatrix:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        return TridiagonalMatrix.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def build_rn(cfg: RunConfig) -> TridiagonalMatrix:
    n = 2 ** cfg.k - 1
    if cfg.matrix_kind == "m1":
        return build_m1(n)
    if cfg.matrix_kind == "m2":
        return build_m2(n)
    if cfg.matrix_kind == "poisson":
        return laplacian(n, 0.25)
    return load_matrix(cfg.rn_file)


def build_b(cfg: RunConfig) -> TridiagonalMatrix:
    if cfg.b_file:
        return load_matrix(cfg.b_file)
    return laplacian(cfg.m, 0.25)


def build_system(cfg: RunConfig) -> SeparableSystem:
    Rn, B = build_rn(cfg), build_b(cfg)
    return SeparableSystem(B, Rn, SplitMix64(cfg.seed).uniform((Rn.order, B.order)))


def empty_report(cfg: RunConfig) -> dict:
    return {
        "config": asdict(cfg),
        "timings_ms": {},
        "residual_rel": None,
        "bounds": {"C1": None, "C2": None, "C3": None, "Q_max": None, "xi": None},
        "checks": {"main_identity": None, "det_lemma": None, "appendix": None, "conditions": None},
        "certified": None,
        "bench": None,
        "error": None,
    }


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1e3, 3)


def _conditions_entry(check) -> dict:
    return {"pass": check.ok, "detail": {k: bool(v) for k, v in check.diagnostics["checks"].items()}}


def _load_or_build(cfg: RunConfig, Rn: TridiagonalMatrix, timings: dict) -> ZeroTable:
    t0 = time.perf_counter()
    if cfg.zeros:
        try:
            table = ZeroTable.load(cfg.zeros)
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg.zeros}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        except (OSError, ValueError) as exc:
            raise InputError(f"{cfg.zeros}: {exc}") from None
        timings["load_zeros"] = _ms(t0)
    else:
        table = build_zero_table(Rn, cfg.k, cfg.kappa, threads=cfg.threads)
        timings["build_zeros"] = _ms(t0)
    return table


def cmd_build_zeros(cfg: RunConfig, report: dict) -> int:
    Rn = build_rn(cfg)
    t0 = time.perf_counter()
    table = build_zero_table(Rn, cfg.k, cfg.kappa, threads=cfg.threads)
    report["timings_ms"]["build_zeros"] = _ms(t0)
    if not cfg.out:
        raise ValueError("build-zeros needs --out")
    table.save(cfg.out)
    return 0


def cmd_solve(cfg: RunConfig, report: dict) -> int:
    system = build_system(cfg)
    table = _load_or_build(cfg, system.Rn, report["timings_ms"])
    if cfg.certify:
        check = check_conditions(system)
        report["checks"]["conditions"] = _conditions_entry(check)
    t0 = time.perf_counter()
    sol, rep = solve(system, cfg.kappa, certify=cfg.certify, threads=cfg.threads, table=table)
    report["timings_ms"]["solve"] = _ms(t0)
    report["residual_rel"] = rep.residual_rel
    report["bounds"] = rep.bounds()
    report["certified"] = rep.certified if cfg.certify else None
    if cfg.x_out:
        with open(cfg.x_out, "w", encoding="utf-8") as fh:
            json.dump(sol.x.tolist(), fh)
    return 0


def cmd_verify(cfg: RunConfig, report: dict) -> int:
    system = build_system(cfg)
    Rn = system.Rn
    xs = -0.01 - 2.99 * (SplitMix64(cfg.seed).uniform((cfg.samples,)) + 1.0) / 2.0
    checks = report["checks"]
    t0 = time.perf_counter()
    value = check_main_identity(Rn, cfg.k, xs)
    checks["main_identity"] = {"discrepancy": value, "pass": value <= IDENTITY_TOL}
    if Rn.order >= 2:
        value = check_det_lemma(Rn)
        checks["det_lemma"] = {"discrepancy": value, "pass": value <= IDENTITY_TOL}
    if cfg.k >= 3:
        # exact evaluation: in floating point the identities cancel catastrophically
        value = check_appendix_identities(Rn, cfg.k, xs[:3], exact=True)
        checks["appendix"] = {"discrepancy": value, "pass": value <= IDENTITY_TOL}
    checks["conditions"] = _conditions_entry(check_conditions(system, ErrorModel()))
    report["timings_ms"]["verify"] = _ms(t0)
    ok = all(c["pass"] for name, c in checks.items() if c is not None and name != "conditions")
    return 0 if ok else 1


def cmd_bench(cfg: RunConfig, report: dict) -> int:
    rows = []
    for k in cfg.ks or list(range(1, cfg.k + 1)):
        sub = RunConfig(**{**asdict(cfg), "k": k, "zeros": None})
        system = build_system(sub)
        t0 = time.perf_counter()
        table = build_zero_table(system.Rn, k, cfg.kappa, threads=cfg.threads)
        t_zeros = _ms(t0)
        t0 = time.perf_counter()
        _, rep = solve(system, cfg.kappa, threads=cfg.threads, table=table)
        rows.append({"k": k, "n": system.n, "m": system.m, "zero_work": table.work,
                     "build_zeros_ms": t_zeros, "solve_ms": _ms(t0), "residual_rel": rep.residual_rel})
    report["bench"] = rows
    return 0


COMMANDS = {"build-zeros": cmd_build_zeros, "solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecrsolve", description="Extended cyclic reduction solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--matrix", dest="matrix_kind", choices=["m1", "m2", "poisson", "file"], default="m1")
        p.add_argument("--k", type=int, default=3, help="level count, n = 2**k - 1")
        p.add_argument("--m", type=int, default=8, help="order of B")
        p.add_argument("--kappa", type=float, default=UNIT_ROUNDOFF, help="bisection tolerance")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help="defaults to $ECR_THREADS or 1")
        p.add_argument("--rn-file", help="JSON tridiagonal matrix for Rn (with --matrix file)")
        p.add_argument("--b-file", help="JSON tridiagonal matrix for B (default tridiag(-1,2,-1)/4)")
        p.add_argument("--out", help="report path (zero table path for build-zeros)")
        if name == "build-zeros":
            p.add_argument("--report", help="report path for build-zeros")
        if name == "solve":
            p.add_argument("--certify", action="store_true")
            p.add_argument("--zeros", help="cached zero table")
            p.add_argument("--x-out", help="write the solution blocks as JSON")
        if name == "verify":
            p.add_argument("--samples", type=int, default=10)
        if name == "bench":
            p.add_argument("--ks", type=int, nargs="+")
    return parser


def _threads(value: Optional[int]) -> int:
    if value is not None:
        return max(1, value)
    try:
        return max(1, int(os.environ.get("ECR_THREADS", "1")))
    except ValueError:
        return 1


def run(cfg: RunConfig, report_path: Optional[str] = None) -> int:
    """Execute ``cfg``; write the JSON report and return the exit status."""
    report = empty_report(cfg)
    try:
        cfg.validate()
        status = COMMANDS[cfg.command](cfg, report)
    except ConditionViolation as exc:
        report["error"] = str(exc)
        report["certified"] = False
        status = 2
    except (EcrError, InputError, ValueError) as exc:
        report["error"] = str(exc)
        print(f"ecrsolve: {exc}", file=sys.stderr)
        status = 1
    text = json.dumps(report, indent=2, sort_keys=True)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return status


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    fields["threads"] = _threads(args.threads)
    cfg = RunConfig(**fields)
    if cfg.command == "build-zeros":
        return run(cfg, getattr(args, "report", None))
    report_path = cfg.out
    return run(cfg, report_path)


if __name__ == "__main__":
    sys.exit(main())
