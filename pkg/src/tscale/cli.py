"""Command line front end: ``tscale eval | check | export | gen | validate-report``.

Exit codes: 0 success (for ``check``: conclusion verified), 2 configuration
error, 3 math-domain error, 4 a hypothesis failed, 5 a conclusion
counterexample was found, 6 I/O error.

Relative output paths are resolved against ``$TSCALE_OUTPUT_DIR`` when it is
set.  ``--config FILE`` reads ``key = value`` lines whose keys are the long
flag names; flags given on the command line win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .calculus import (
    DerivativeFunction,
    DerivKind,
    ExprFunction,
    ScaleFunction,
    deriv,
    integral,
    quotient,
)
from .errors import ConfigError, InvalidRange, MathError, TScaleError
from .fuzz import run_fuzz
from .generators import function_to_json, instance_from_dict, rule_instance
from .report import build_document, dumps, grid_rows, rows_to_csv, validate_document
from .rules import DIAMOND_RULES, RULE_IDS, Tolerances, canonical_rule, check
from .timescale import TimeScale, parse_scale
from .yfunction import FunctionPair, y_function

EXIT_OK, EXIT_CONFIG, EXIT_MATH, EXIT_HYPOTHESIS, EXIT_CONCLUSION, EXIT_IO = 0, 2, 3, 4, 5, 6
OUTPUT_DIR_ENV = "TSCALE_OUTPUT_DIR"

_BOOL_KEYS = {"no_timestamp", "json"}


class IOFailure(TScaleError):
    pass


def _fraction(text: str, name: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: not a number: {text!r}") from None


def _number(text, name: str) -> Optional[float]:
    return None if text is None else float(_fraction(text, name))


def _alpha(text) -> Optional[Fraction]:
    if text is None:
        return None
    a = _fraction(text, "--alpha")
    if not 0 <= a <= 1:
        raise ConfigError(f"--alpha must lie in [0, 1], got {text}")
    return a


def output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _write(path: str, text: str) -> Path:
    p = output_path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot write {p}: {e.strerror or e}") from None
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot read {path}: {e.strerror or e}") from None


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


# -- run configuration --------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a ``check``/``export`` run needs, validated up front."""

    rule: str
    scale: Optional[TimeScale] = None
    phi: Optional[ScaleFunction] = None
    psi: Optional[ScaleFunction] = None
    a: Optional[float] = None
    b: Optional[float] = None
    alpha: Optional[Fraction] = None
    case: Optional[int] = None
    anchor: str = "alpha"
    p_split: Optional[float] = None
    dense_samples: int = 16
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: Optional[int] = None
    fuzz: Optional[int] = None
    jobs: int = 1
    instance: Optional[dict] = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        inst = None
        if ns.instance:
            try:
                inst = json.loads(_read(ns.instance))
            except json.JSONDecodeError as e:
                raise ConfigError(f"instance file is not valid JSON: {e}") from None
        rule = ns.rule or (inst or {}).get("rule")
        if not rule:
            raise ConfigError("--rule is required")
        cfg = cls(rule=canonical_rule(rule))
        cfg.dense_samples = int(ns.dense_samples)
        if cfg.dense_samples < 0:
            raise ConfigError("--dense-samples must be non-negative")
        cfg.tolerances = Tolerances(float(ns.tol_discrete), float(ns.tol_sampled),
                                    float(ns.tol_identity))
        cfg.jobs = int(ns.jobs)
        if cfg.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.seed = None if ns.seed is None else int(ns.seed)
        cfg.fuzz = None if ns.fuzz is None else int(ns.fuzz)
        cfg.anchor = ns.anchor or "alpha"
        if cfg.anchor not in ("alpha", "beta"):
            raise ConfigError("--anchor must be 'alpha' or 'beta'")
        cfg.alpha = _alpha(ns.alpha)
        cfg.case = None if ns.case is None else int(ns.case)
        if cfg.case is not None and cfg.case not in (1, 2, 3, 4):
            raise ConfigError("--case must be 1, 2, 3 or 4")

        if cfg.fuzz is not None:
            if cfg.fuzz < 1:
                raise ConfigError("--fuzz must be positive")
            if cfg.seed is None:
                cfg.seed = 0
            return cfg

        if inst is not None:
            loaded = instance_from_dict(inst)
            cfg.instance = loaded.to_dict()
            cfg.scale, cfg.phi, cfg.psi = loaded.pair.scale, loaded.pair.phi, loaded.pair.psi
            params = loaded.params
            cfg.anchor = ns.anchor or params.get("anchor", "alpha")
            cfg.case = cfg.case if cfg.case is not None else params.get("case")
            cfg.p_split = params.get("p_split")
            if cfg.alpha is None and params.get("alpha") is not None:
                cfg.alpha = Fraction(params["alpha"])
        else:
            if not ns.scale:
                raise ConfigError("--scale is required (or --instance / --fuzz)")
            if ns.phi is None or ns.psi is None:
                raise ConfigError("--phi and --psi are required")
            cfg.scale = parse_scale(ns.scale)
            cfg.phi, cfg.psi = ExprFunction(ns.phi), ExprFunction(ns.psi)
        if ns.split is not None:
            cfg.p_split = _number(ns.split, "--split")
        cfg.a, cfg.b = _number(ns.a, "--a"), _number(ns.b, "--b")
        for name, v in (("--a", cfg.a), ("--b", cfg.b), ("--split", cfg.p_split)):
            if v is not None:
                cfg.scale.point(v)
        lo = cfg.scale.point(cfg.a) if cfg.a is not None else cfg.scale.min
        hi = cfg.scale.point(cfg.b) if cfg.b is not None else cfg.scale.max
        if not lo < hi:
            raise InvalidRange(f"need a < b, got [{lo.value}, {hi.value}]")
        if cfg.rule in DIAMOND_RULES and cfg.alpha is None:
            raise ConfigError(f"{cfg.rule} needs --alpha")
        if cfg.rule == "MR2.2" and cfg.case is None:
            raise ConfigError("MR2.2 needs --case")
        if cfg.rule == "MR2.3" and cfg.p_split is None:
            raise ConfigError("MR2.3 needs --split")
        return cfg

    @property
    def pair(self) -> FunctionPair:
        return FunctionPair(self.phi, self.psi, self.scale)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "scale": None if self.scale is None else str(self.scale),
            "phi": None if self.phi is None else function_to_json(self.phi),
            "psi": None if self.psi is None else function_to_json(self.psi),
            "a": self.a,
            "b": self.b,
            "alpha": None if self.alpha is None else str(self.alpha),
            "case": self.case,
            "anchor": self.anchor,
            "p_split": self.p_split,
            "dense_samples": self.dense_samples,
            "tolerances": self.tolerances.to_dict(),
            "seed": self.seed,
            "fuzz": self.fuzz,
            "instance": self.instance,
        }


def execute(cfg: RunConfig):
    """Run a validated configuration; returns ``(report, fuzz_summary, exit_code)``."""
    if cfg.fuzz is not None:
        summary = run_fuzz(cfg.rule, cfg.fuzz, cfg.seed, cfg.jobs, cfg.case, cfg.alpha,
                           cfg.tolerances)
        out = summary["outcomes"]
        if out.get("CONCLUSION_FAILED"):
            code = EXIT_CONCLUSION
        elif out.get("HYPOTHESIS_FAILED"):
            code = EXIT_HYPOTHESIS
        else:
            code = EXIT_OK
        return None, summary, code
    rep = check(cfg.rule, cfg.pair, cfg.a, cfg.b, anchor=cfg.anchor, case=cfg.case,
                p_split=cfg.p_split, alpha=cfg.alpha, dense_samples=cfg.dense_samples,
                tolerances=cfg.tolerances)
    code = {"VERIFIED": EXIT_OK, "HYPOTHESIS_FAILED": EXIT_HYPOTHESIS,
            "CONCLUSION_FAILED": EXIT_CONCLUSION}[rep.outcome]
    return rep, None, code


# -- commands ----------------------------------------------------------------------

def cmd_eval(ns) -> int:
    ts = parse_scale(ns.scale)
    f = ExprFunction(ns.f)
    g = ExprFunction(ns.g) if ns.g is not None else None
    alpha = _alpha(ns.alpha)
    op = ns.op
    results = []
    if op == "integral":
        kind = DerivKind.parse(ns.kind, alpha) if ns.kind != "diamond" or alpha is not None \
            else None
        if kind is None:
            raise ConfigError("diamond integral needs --alpha")
        lo = ts.min if ns.lower is None else ts.point(_number(ns.lower, "--from"))
        hi = ts.max if ns.upper is None else ts.point(_number(ns.upper, "--to"))
        results.append((None, integral(f, ts, lo, hi, kind)))
    else:
        if not ns.at:
            raise ConfigError("--at is required for this operation")
        points = [ts.point(_number(t, "--at")) for t in ns.at]
        fn = _eval_op(op, f, g, ts, alpha)
        for p in points:
            results.append((p.value, fn(p)))
    if ns.json:
        print(json.dumps({"op": op, "scale": str(ts), "f": str(f.expr),
                          "values": [{"t": t, "value": _fmt(v)} for t, v in results]}, indent=2))
    else:
        for _, v in results:
            print(_fmt(v))
    return EXIT_OK


def _eval_op(op, f, g, ts, alpha):
    if op == "value":
        return f.value
    if op in ("sigma", "rho"):
        jump = ts.sigma if op == "sigma" else ts.rho
        return lambda p: jump(p).value
    if op in ("mu", "nu"):
        return ts.mu if op == "mu" else ts.nu
    if op in ("delta", "nabla", "diamond"):
        if op == "diamond" and alpha is None:
            raise ConfigError("--op diamond needs --alpha")
        k = DerivKind.parse(op, alpha)
        return lambda p: deriv(f, ts, p, k)
    if op in ("delta2", "nabla2", "diamond2"):
        base = op[:-1]
        if base == "diamond" and alpha is None:
            raise ConfigError(f"--op {op} needs --alpha")
        k = DerivKind.parse(base, alpha)
        d = DerivativeFunction(f, ts, k)
        return lambda p: deriv(d, ts, p, k)
    if g is None:
        raise ConfigError(f"--op {op} needs --g")
    k = DerivKind.nabla() if alpha is None else DerivKind.diamond(alpha)
    pair = FunctionPair(f, g, ts)
    if op == "y":
        yf = y_function(pair, k)
        return yf.value
    if op == "quotient":
        return lambda p: deriv(quotient(f, g), ts, p, k)
    raise ConfigError(f"unknown --op {op!r}")


def _emit(cfg: RunConfig, ns, command: str):
    rep, summary, code = execute(cfg)
    doc = build_document(command, cfg.to_dict(), rep, summary, timestamp=not ns.no_timestamp)
    validate_document(doc)
    text = dumps(doc)
    rows = None
    if rep is not None:
        rows = grid_rows(cfg.pair, cfg.a, cfg.b, cfg.alpha if cfg.rule in DIAMOND_RULES else None,
                         cfg.dense_samples)
    return doc, text, rows, code


def cmd_check(ns) -> int:
    cfg = RunConfig.from_args(ns)
    _, text, rows, code = _emit(cfg, ns, "check")
    if ns.output:
        _write(ns.output, text)
    else:
        sys.stdout.write(text)
    if ns.csv:
        if rows is None:
            raise ConfigError("--csv is not available with --fuzz")
        _write(ns.csv, rows_to_csv(rows))
    return code


def cmd_export(ns) -> int:
    cfg = RunConfig.from_args(ns)
    _, text, rows, _ = _emit(cfg, ns, "export")
    base = Path(ns.out_dir) if ns.out_dir else Path(".")
    written = [_write(str(base / ns.report_name), text)]
    if rows is not None and not ns.no_csv:
        written.append(_write(str(base / ns.csv_name), rows_to_csv(rows)))
    for p in written:
        print(p)
    return EXIT_OK


def cmd_validate(ns) -> int:
    try:
        doc = json.loads(_read(ns.file))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{ns.file} is not valid JSON: {e}") from None
    validate_document(doc)
    print(f"{ns.file}: valid")
    return EXIT_OK


def cmd_gen(ns) -> int:
    inst = rule_instance(canonical_rule(ns.rule), int(ns.seed), case=ns.case,
                         alpha=_alpha(ns.alpha))
    text = json.dumps(inst.to_dict(), indent=2) + "\n"
    if ns.output:
        _write(ns.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------------

def _run_args(p: argparse.ArgumentParser):
    p.add_argument("--rule", help=f"one of {', '.join(RULE_IDS)}")
    p.add_argument("--scale", help="scale literal, e.g. 'lattice(0,1,6)+interval(10,11)'")
    p.add_argument("--phi", "--f", dest="phi", help="numerator function of x")
    p.add_argument("--psi", "--g", dest="psi", help="denominator function of x")
    p.add_argument("--instance", help="instance JSON file (as written by 'gen')")
    p.add_argument("--a", help="left end of the range (default: scale minimum)")
    p.add_argument("--b", help="right end of the range (default: scale maximum)")
    p.add_argument("--alpha", help="diamond weight in [0, 1]")
    p.add_argument("--case", type=int, help="case 1-4 of MR2.2")
    p.add_argument("--anchor", choices=("alpha", "beta"), help="anchor end for MR2.1")
    p.add_argument("--split", help="split point p for MR2.3")
    p.add_argument("--dense-samples", type=int, default=16)
    p.add_argument("--tol-discrete", type=float, default=1e-12)
    p.add_argument("--tol-sampled", type=float, default=1e-9)
    p.add_argument("--tol-identity", type=float, default=1e-9)
    p.add_argument("--fuzz", type=int, help="check this many generated instances instead")
    p.add_argument("--seed", type=int, help="seed for --fuzz (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --fuzz")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("--config", help="key = value file with defaults for these flags")


def build_parser(defaults: Optional[dict] = None, command: Optional[str] = None
                 ) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tscale", description="Calculus and "
                                     "monotonicity rules on time scales.")
    parser.add_argument("--version", action="version", version=f"tscale {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="derivatives, integrals and Y-values at points")
    p.add_argument("--scale", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--g")
    p.add_argument("--op", default="value", choices=(
        "value", "sigma", "rho", "mu", "nu", "delta", "nabla", "diamond",
        "delta2", "nabla2", "diamond2", "y", "quotient", "integral"))
    p.add_argument("--at", action="append", help="point of the scale (repeatable)")
    p.add_argument("--alpha")
    p.add_argument("--kind", default="delta", choices=("delta", "nabla", "diamond"),
                   help="integral kind")
    p.add_argument("--from", dest="lower")
    p.add_argument("--to", dest="upper")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="verify a rule on one pair or a fuzz batch")
    _run_args(p)
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="also write grid values as CSV")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("export", help="write the JSON report and grid CSV to a directory")
    _run_args(p)
    p.add_argument("--out-dir", help=f"directory (relative to ${OUTPUT_DIR_ENV} if set)")
    p.add_argument("--report-name", default="report.json")
    p.add_argument("--csv-name", default="grid.csv")
    p.add_argument("--no-csv", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate-report", help="validate a JSON report against the schema")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen", help="print a generated instance as JSON")
    p.add_argument("--rule", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--case", type=int)
    p.add_argument("--alpha")
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen)

    if defaults and command in sub.choices:
        sub.choices[command].set_defaults(**defaults)
    return parser


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag spelling."""
    out = {}
    for n, line in enumerate(_read(path).splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key in _BOOL_KEYS:
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = value
    return out


def _with_config(argv) -> argparse.Namespace:
    ns = build_parser().parse_args(argv)
    path = getattr(ns, "config", None)
    if not path:
        return ns
    defaults = read_config_file(path)
    parser = build_parser(defaults, ns.command)
    known = {a.dest for a in parser._subparsers._group_actions[0].choices[ns.command]._actions}
    unknown = sorted(set(defaults) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = _with_config(argv)
        return ns.func(ns)
    except ConfigError as e:
        print(f"tscale: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MathError as e:
        print(f"tscale: math error: {e}", file=sys.stderr)
        return EXIT_MATH
    except IOFailure as e:
        print(f"tscale: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"tscale: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
