"""Command-line workbench.

Subcommands: ``terms`` (trace-term report), ``verify`` (inequality grid
sweep), ``roundtrip`` (transform identities), ``enumerate`` (group ball
listing).  Exit codes: 0 success, 1 violated bound check, 2 validation
failure, 3 numeric or resource failure.  Errors are emitted as JSON on
stderr; outputs are byte-deterministic (sorted keys, 17-significant-digit
floats).  The environment variable DIRACTRACE_THREADS sets the worker
count of the trace engine.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import (
    BudgetExceededError,
    DomainError,
    NumericError,
    ValidationError,
)
from .groups import enumerate_ball, group_from_json, systole_estimate, counting_bound
from .halfplane import HPoint
from .report_io import dumps_json, validate_against_schema, write_csv
from .spin import SpinAssignment, epsilon, is_nontrivial
from .traceterms import (
    SurfaceModel,
    TraceSettings,
    parameter_schedule,
    smoothed_density,
)
from .verify import run_checks, rows_to_csv_payload
from .windows import WindowParams

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


@dataclass
class RunConfig:
    command: str
    group_path: Optional[str] = None
    spin_path: Optional[str] = None
    a: float = 0.0
    b: float = 2.0
    t: float = 1.0
    g: Optional[float] = None
    L: Optional[float] = None
    resolution: int = 64
    cusp_cutoff: float = 12.0
    budget: int = 200_000_000
    radius: float = 7.0
    max_word_len: int = 12
    out: Optional[str] = None
    fmt: str = "json"
    families: Optional[str] = None
    inject_bound_scale: float = 1.0

    def validate(self) -> None:
        if not (0.0 <= self.a <= self.b):
            raise ValidationError(f"window must satisfy 0 <= a <= b, got ({self.a}, {self.b})")
        if self.t <= 0.0:
            raise ValidationError(f"t must be positive, got {self.t}")
        if self.budget <= 0 or self.resolution <= 0:
            raise ValidationError("resolution and budget must be positive")
        if self.fmt not in ("json", "csv"):
            raise ValidationError(f"unknown format {self.fmt!r}")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fail(exc: Exception, code: int) -> int:
    doc = {
        "schema": "error.v1",
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    sys.stderr.write(dumps_json(doc))
    return code


def _load_model(cfg: RunConfig) -> SurfaceModel:
    if cfg.group_path:
        group = group_from_json(json.loads(Path(cfg.group_path).read_text()))
    else:
        from .groups import GroupPresentation

        group = GroupPresentation.gamma2()
    if cfg.spin_path:
        spin = SpinAssignment.from_json(json.loads(Path(cfg.spin_path).read_text()))
    else:
        spin = SpinAssignment(tuple([-1] * group.rank))
    settings = TraceSettings(
        resolution=cfg.resolution,
        cusp_cutoff=cfg.cusp_cutoff,
        budget=cfg.budget,
    )
    if group.model == "gamma2":
        return SurfaceModel.gamma2_reference(spin, settings)
    if group.model == "cyclic":
        return SurfaceModel(
            group=group, spin=spin, genus=2, cusps=0, settings=settings
        )
    raise ValidationError("trace evaluation supports the model groups only")


def cmd_terms(cfg: RunConfig) -> int:
    cfg.validate()
    model = _load_model(cfg)
    if not is_nontrivial(model.spin, model.group):
        raise ValidationError(
            f"spin assignment {list(model.spin.signs)} is trivial along a cusp"
        )
    p = WindowParams(cfg.a, cfg.b, cfg.t)
    report = smoothed_density(model, p, L=cfg.L)
    doc = report.to_json_dict()
    if cfg.g is not None:
        t_s, l_s, r_s = parameter_schedule(cfg.g)
        doc["schedule"] = {"g": cfg.g, "t": t_s, "L": l_s, "r": r_s}
    validate_against_schema(doc, "trace_report.v1")
    if cfg.fmt == "json":
        _emit(dumps_json(doc), cfg.out)
    else:
        header = list(report.CSV_FIELDS)
        _emit(write_csv(None, header, [report.csv_row()]), cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    cfg.validate()
    families = None
    if cfg.families is not None:
        families = [f for f in cfg.families.split(",") if f.strip()]
        if not families:
            raise ValidationError("empty check selection")
    rows = run_checks(families, inject_scale=cfg.inject_bound_scale)
    header, data = rows_to_csv_payload(rows)
    _emit(write_csv(None, header, data), cfg.out)
    failures = [r for r in rows if not r.passed]
    if failures:
        worst = min(failures, key=lambda r: r.margin)
        sys.stderr.write(
            dumps_json(
                {
                    "schema": "error.v1",
                    "error": "BoundViolation",
                    "message": (
                        f"{len(failures)} violated checks; worst: {worst.check_id} "
                        f"[{worst.params}] lhs={worst.lhs!r} rhs={worst.rhs!r}"
                    ),
                    "exit_code": EXIT_BOUND_VIOLATION,
                }
            )
        )
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    cfg.validate()
    from .roundtrip import full_report

    doc = full_report()
    validate_against_schema(doc, "roundtrip_report.v1")
    _emit(dumps_json(doc), cfg.out)
    return EXIT_OK if doc["passed"] else EXIT_BOUND_VIOLATION


def cmd_enumerate(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.group_path:
        group = group_from_json(json.loads(Path(cfg.group_path).read_text()))
    else:
        from .groups import GroupPresentation

        group = GroupPresentation.gamma2()
    if cfg.spin_path:
        spin = SpinAssignment.from_json(json.loads(Path(cfg.spin_path).read_text()))
    else:
        spin = SpinAssignment(tuple([-1] * group.rank))
    z0 = HPoint(0.0, 1.0)
    ball = enumerate_ball(group, z0, cfg.radius, cfg.max_word_len, budget=cfg.budget)
    header = ["word", "a", "b", "c", "d", "trace", "class", "displacement", "epsilon"]
    rows = []
    for el in ball:
        word_str = " ".join(str(k) for k in el.word)
        m = el.element
        rows.append([
            word_str, m.a, m.b, m.c, m.d, m.trace(), el.klass,
            el.displacement, epsilon(spin, m, group),
        ])
    text = write_csv(None, header, rows)
    systole = systole_estimate(group, min(cfg.max_word_len, 8))
    r = min(2.0, systole / 2.0)
    hyp_count = sum(1 for el in ball if el.klass == "hyperbolic")
    if cfg.radius > 0:
        bound = counting_bound(cfg.radius, r)
        ok = hyp_count <= bound
        text += (
            f"# lemma11 j={format(cfg.radius, '.17g')} r={format(r, '.17g')} "
            f"hyperbolic_count={hyp_count} bound={format(bound, '.17g')} "
            f"pass={1 if ok else 0}\n"
        )
    if ball.possibly_incomplete:
        text += "# warning possibly_incomplete=1\n"
    _emit(text, cfg.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="diractrace",
        description="Trace-term evaluation and bound verification workbench",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--group", dest="group_path", help="group JSON file")
        sp.add_argument("--spin", dest="spin_path", help="spin JSON file")
        sp.add_argument("--a", type=float, default=0.0)
        sp.add_argument("--b", type=float, default=2.0)
        sp.add_argument("--t", type=float, default=1.0)
        sp.add_argument("--g", type=float, default=None, help="genus for schedules")
        sp.add_argument("--L", type=float, default=None, help="thin/thick threshold")
        sp.add_argument("--resolution", type=int, default=64)
        sp.add_argument("--cusp-cutoff", dest="cusp_cutoff", type=float, default=12.0)
        sp.add_argument("--budget", type=int, default=200_000_000)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"),
                        default="json")

    sp = sub.add_parser("terms", help="evaluate the trace terms")
    common(sp)
    sp = sub.add_parser("verify", help="run the inequality sweep")
    common(sp)
    sp.add_argument("--families", default=None,
                    help="comma-separated check families (default: all)")
    sp.add_argument("--inject-bound-scale", dest="inject_bound_scale",
                    type=float, default=1.0,
                    help="test hook: scale every bound by this factor")
    sp = sub.add_parser("roundtrip", help="transform identity round trips")
    common(sp)
    sp = sub.add_parser("enumerate", help="enumerate a group ball as CSV")
    common(sp)
    sp.add_argument("--radius", type=float, default=7.0)
    sp.add_argument("--max-word-len", dest="max_word_len", type=int, default=12)
    return ap


_COMMANDS = {
    "terms": cmd_terms,
    "verify": cmd_verify,
    "roundtrip": cmd_roundtrip,
    "enumerate": cmd_enumerate,
}


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    fields = {f for f in RunConfig.__dataclass_fields__}
    kwargs = {k: v for k, v in vars(ns).items() if k in fields and v is not None}
    cfg = RunConfig(**kwargs)
    try:
        return _COMMANDS[cfg.command](cfg)
    except (ValidationError, DomainError) as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (NumericError, BudgetExceededError) as exc:
        return _fail(exc, EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
