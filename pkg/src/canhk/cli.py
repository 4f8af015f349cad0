"""Command-line front end.

Commands
--------
coeffs            exact coefficient table as CSV
verify-weil       graded identities and the curvature recursion
verify-structure  candidate selection and the field-level checks

Exit codes: 0 pass, 1 residual failure, 2 ambiguous selection, 64 usage.
A JSON config file may be given with ``--config`` or the ``CANHK_CONFIG``
environment variable; command-line flags override it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import fgen, geometry, hstruct, weil

EXIT_OK, EXIT_FAIL, EXIT_AMBIGUOUS, EXIT_USAGE = 0, 1, 2, 64

DEFAULT_C = {"flat": 0.0, "cpn": 2.0, "chn": -2.0}
DEFAULT_THRESHOLDS = {
    "operator": 1e-10,
    "sigma": 1e-12,
    "quaternion": 1e-12,
    "normalization": 1e-10,
    "field": 1e-6,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    model: str = "cpn"
    n: int = 1
    c: float | None = None
    model_file: str | None = None
    order: int = 8
    terms: int = 40
    step: float = 0.02
    seed: int = 0
    points: int = 100
    variant: str = "auto"
    slot: str = "auto"
    out: str | None = None
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def curvature(self) -> float:
        return DEFAULT_C[self.model] if self.c is None else float(self.c)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _rational(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: $CANHK_CONFIG)")
    common.add_argument("--model", choices=["flat", "cpn", "chn"])
    common.add_argument("--n", type=int)
    common.add_argument("--c", type=_rational)
    common.add_argument("--model-file", dest="model_file", help="JSON point model (overrides --model)")
    common.add_argument("--order", type=int)
    common.add_argument("--terms", type=int)
    common.add_argument("--step", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int)
    common.add_argument("--variant", choices=["f", "1pf", "auto"])
    common.add_argument("--slot", choices=["a", "b", "auto"])
    common.add_argument("--out")
    p = _Parser(prog="canhk", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("coeffs", parents=[common], help="coefficient table (CSV)")
    sub.add_parser("verify-weil", parents=[common], help="Weil algebra identities and recursion")
    sub.add_parser("verify-structure", parents=[common], help="hypercomplex structure checks")
    return p


def load_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    path = args.config or os.environ.get("CANHK_CONFIG")
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        for k, v in data.items():
            if k == "thresholds":
                cfg.thresholds.update(v)
            elif hasattr(cfg, k):
                setattr(cfg, k, v)
            else:
                raise UsageError(f"unknown config key {k!r}")
    for k, v in vars(args).items():
        if k != "config" and v is not None:
            setattr(cfg, k, v)
    if cfg.n < 1 and cfg.command != "coeffs":
        raise UsageError("--n must be >= 1")
    if cfg.model not in DEFAULT_C or cfg.variant not in ("f", "1pf", "auto") or cfg.slot not in ("a", "b", "auto"):
        raise UsageError("invalid model, variant or slot in config")
    if cfg.c is None:
        cfg.c = DEFAULT_C[cfg.model]
    if cfg.step <= 0 or cfg.points < 1 or cfg.order < 1:
        raise UsageError("step, points and order must be positive")
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"


def _model(cfg: RunConfig) -> geometry.KahlerModel:
    if cfg.model_file:
        with open(cfg.model_file) as fh:
            return geometry.KahlerModel.from_json(json.load(fh))
    try:
        return geometry.make_model(cfg.model, cfg.n, cfg.curvature())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_coeffs(cfg: RunConfig) -> int:
    if cfg.n < 1:
        raise UsageError("--n must be >= 1")
    s = fgen.coefficients(cfg.n)
    if cfg.out:
        fgen.write_csv(s, cfg.out)
    else:
        rows = ["p,numerator,denominator"]
        rows += [f"{p},{c.numerator},{c.denominator}" for p, c in enumerate(s.coeffs, start=1)]
        sys.stdout.write("\n".join(rows) + "\n")
    return EXIT_OK


def _graded_identities(n: int, max_aug: int) -> dict:
    """Commutation identities on every graded piece with m + n2 <= max_aug."""
    C, S = weil.make_C(n), weil.make_sigma(n)
    C10, C01 = weil.make_C(n, "1,0"), weil.make_C(n, "0,1")
    S10, S01 = weil.make_sigma(n, "-1,0"), weil.make_sigma(n, "0,-1")
    worst = {"C_sigma": 0.0, "C10_sigma10": 0.0, "C01_sigma01": 0.0, "cross": 0.0, "C_square": 0.0,
             "sigma_square": 0.0}
    pieces = 0
    for m in range(max_aug + 1):
        for n2 in range(max_aug + 1 - m):
            for p in range(m - n2, m - n2 + 2 * n + 1):
                for q in range(n2 - m, n2 - m + 2 * n + 1):
                    for mono in weil.piece_basis(n, p, q, m, n2):
                        pieces += 1
                        x = weil.WeilElement(n, {mono: 1.0})
                        worst["C_sigma"] = max(worst["C_sigma"], (C(S(x)) + S(C(x)) - x.scale(m + n2)).max_abs())
                        worst["C10_sigma10"] = max(worst["C10_sigma10"], (C10(S10(x)) + S10(C10(x)) - x.scale(m)).max_abs())
                        worst["C01_sigma01"] = max(worst["C01_sigma01"], (C01(S01(x)) + S01(C01(x)) - x.scale(n2)).max_abs())
                        worst["cross"] = max(
                            worst["cross"],
                            (C10(S01(x)) + S01(C10(x))).max_abs(),
                            (C01(S10(x)) + S10(C01(x))).max_abs(),
                        )
                        worst["C_square"] = max(worst["C_square"], C(C(x)).max_abs())
                        worst["sigma_square"] = max(worst["sigma_square"], S(S(x)).max_abs())
    worst["basis_elements"] = pieces
    return worst


def cmd_verify_weil(cfg: RunConfig) -> int:
    th = cfg.thresholds
    model = _model(cfg)
    checks = {k: {"ok": bool(ok), "residual": r} for k, (ok, r) in geometry.validate(model).items()}
    report = {"command": "verify-weil", "config": asdict(cfg), "model_validation": checks}
    failures = [f"model:{k}" for k, v in checks.items() if not v["ok"]]
    ident = _graded_identities(model.n, min(cfg.order, 4))
    report["graded_identities"] = ident
    failures += [f"identity:{k}" for k, v in ident.items() if k != "basis_elements" and v != 0.0]
    if not failures or all(f.startswith("model:") and "no_20" not in f for f in failures):
        try:
            rec = weil.run_recursion(model, cfg.order)
        except ValueError as exc:
            failures.append(f"recursion:{exc}")
        else:
            series = fgen.coefficients(max(1, cfg.order // 2))
            dd = weil.verify_d_square(rec)
            sg = weil.sigma_residuals(rec)
            fa = weil.fA_residuals(rec, series)
            hodge = {f"D_{k}": weil.check_weakly_hodge(d).ok for k, d in rec.D.items()}
            report["recursion"] = {
                "order": cfg.order,
                "d_square": {str(k): v for k, v in dd.items()},
                "sigma_D": {str(k): v for k, v in sg.items()},
                "fA": {str(k): v for k, v in fa.items()},
                "weakly_hodge": hodge,
                "D_norms": {str(k): d.max_abs() for k, d in rec.D.items()},
            }
            failures += [f"d_square:{k}" for k, v in dd.items() if v >= th["operator"]]
            failures += [f"sigma_D:{k}" for k, v in sg.items() if v >= th["sigma"]]
            failures += [f"fA:{k}" for k, v in fa.items() if v >= th["operator"]]
            failures += [f"weakly_hodge:{k}" for k, v in hodge.items() if not v]
    report["failures"] = failures
    report["status"] = "pass" if not failures else "fail"
    _emit(_dump(report), cfg.out)
    return EXIT_OK if not failures else EXIT_FAIL


def cmd_verify_structure(cfg: RunConfig) -> int:
    th = cfg.thresholds
    if cfg.model_file:
        raise UsageError("verify-structure works on the chart models only")
    _model(cfg)
    chart = geometry.ChartModel(cfg.model, cfg.n, cfg.curvature())
    steps = (cfg.step, cfg.step / 2, cfg.step / 4)
    variants = hstruct.VARIANTS if cfg.variant == "auto" else (cfg.variant,)
    slots = hstruct.SLOTS if cfg.slot == "auto" else (cfg.slot,)
    sel = hstruct.select_variant(chart, cfg.seed, steps=steps, terms=cfg.terms, variants=variants, slots=slots)
    report = {"command": "verify-structure", "config": asdict(cfg), "selection": sel.to_dict()}
    if sel.status != "selected":
        singular = all(c.excluded for c in sel.candidates)
        report["status"] = "singular" if singular else sel.status
        report["failures"] = [f"selection:{report['status']}"]
        _emit(_dump(report), cfg.out)
        for c in sel.candidates:
            sys.stderr.write(f"{report['status']}: variant={c.variant} slot={c.slot} {c.note}\n")
        return EXIT_AMBIGUOUS if sel.status == "ambiguous" else EXIT_FAIL
    slot = "a" if sel.slot == "any" else sel.slot
    fld = hstruct.StructureField(chart, sel.variant, slot, cfg.terms)
    rng = np.random.default_rng(cfg.seed + 1)
    pts = hstruct.sample_points(chart, rng, cfg.points)
    quat = max(hstruct.quaternion_residual(hstruct.build_J(fld, p)) for p in pts)
    norm = max(hstruct.normalization_residual(fld, p) for p in pts[:20])
    lin = max(hstruct.linear_rotation_residual(fld, p) for p in pts[:20])
    nij = {}
    for i, p in enumerate(pts[:3]):
        conv = hstruct.nijenhuis_convergence(fld, p, steps)
        nij[str(i)] = {k: {"residuals": list(c.residuals), "order": c.order, "extrapolated": c.extrapolated,
                           "passed": c.passes(limit=th["field"])} for k, c in conv.items()}
    report["checks"] = {
        "quaternion_max": quat,
        "normalization_max": norm,
        "linear_rotation_residual_max": lin,
        "nijenhuis": nij,
        "points": cfg.points,
        "seed": cfg.seed,
        "terms": cfg.terms,
    }
    failures = []
    if quat >= th["quaternion"]:
        failures.append("quaternion")
    if norm >= th["normalization"]:
        failures.append("normalization")
    failures += [f"nijenhuis:{i}:{k}" for i, d in nij.items() for k, v in d.items() if not v["passed"]]
    report["failures"] = failures
    report["status"] = "pass" if not failures else "fail"
    _emit(_dump(report), cfg.out)
    return EXIT_OK if not failures else EXIT_FAIL


COMMANDS = {"coeffs": cmd_coeffs, "verify-weil": cmd_verify_weil, "verify-structure": cmd_verify_structure}


def main(argv=None) -> int:
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
