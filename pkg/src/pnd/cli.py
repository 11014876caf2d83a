"""Batch driver: check scripts and report verdicts as text or JSON."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Any, TextIO

from .categories import check_wff
from .errors import CategoryError, ParseError, PNDError
from .kernel import Development, Options, check_development
from .parser import parse_formula, parse_script, print_category, print_formula
from .semantics import OracleReport, eval_formula, validate_development
from .syntax import BASE, free_vars, resolve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    file: str
    dev: Development | None = None
    parse_error: ParseError | None = None
    oracle: OracleReport | None = None

    @property
    def ok(self) -> bool:
        if self.dev is None or not self.dev.ok:
            return False
        return self.oracle is None or self.oracle.ok

    def to_json(self) -> dict[str, Any]:
        dev = self.dev
        if dev is None:
            err = self.parse_error
            lines = [{
                "label": None, "status": "failed", "error": err.kind, "message": err.message,
                "span": {"line": err.line, "col": err.col},
            }]
        else:
            lines = [{
                "label": r.label, "status": r.status, "error": r.error, "message": r.message,
                "span": {"line": r.span.line, "col": r.span.col},
            } for r in dev.records]
        return {
            "file": self.file,
            "ok": self.ok,
            "lines": lines,
            "theorems": [{"label": k, "formula": print_formula(f)}
                         for k, f in (dev.theorems.items() if dev else ())],
            "rules": [{"name": s.name,
                       "premises": [print_formula(p) for p in s.premises],
                       "conclusion": print_formula(s.conclusion)}
                      for s in (dev.rules.values() if dev else ())],
            "signature": [{"name": n, "category": print_category(dev.signature.category(n))}
                          for n in (dev.signature if dev else ())],
            "oracle": None if self.oracle is None else {
                "checked": self.oracle.checked,
                "failed": list(self.oracle.failed),
                "skipped": [label for label, _ in self.oracle.skipped],
            },
        }


def _load(path: str, options: Options) -> RunReport:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    report = RunReport(path)
    try:
        script = parse_script(text)
    except ParseError as exc:
        report.parse_error = exc
        return report
    report.dev = check_development(script, options)
    return report


# -- human-readable output ----------------------------------------------------

def _write_lines(report: RunReport, out: TextIO, trace: bool) -> None:
    for r in report.dev.records:
        where = f"{r.span.line}:{r.span.col}"
        if r.ok:
            out.write(f"  {r.label:<8} verified  ({r.kind}, {where})\n")
        else:
            out.write(f"  {r.label:<8} FAILED    ({r.kind}, {where}) {r.error}: {r.message}\n")
        if trace and r.trace:
            for f in r.trace:
                out.write(f"             | {print_formula(f)}\n")


def _write_theorems(dev: Development, out: TextIO) -> None:
    out.write(f"theorems ({len(dev.theorems)}):\n")
    for label, f in dev.theorems.items():
        out.write(f"  {label:<4} {print_formula(f)}\n")


def _write_rules(dev: Development, out: TextIO) -> None:
    out.write(f"derived rules ({len(dev.rules)}):\n")
    for schema in dev.rules.values():
        out.write(f"  {schema}\n")


def _write_oracle(oracle: OracleReport, out: TextIO) -> None:
    out.write(f"oracle: {oracle.checked} checked, {len(oracle.failed)} failed, "
              f"{len(oracle.skipped)} skipped\n")
    for label in oracle.failed:
        out.write(f"  {label} is false in the two-valued model\n")
    for label, why in oracle.skipped:
        out.write(f"  {label} skipped: {why}\n")


def _write_human(report: RunReport, command: str, out: TextIO, trace: bool) -> None:
    out.write(f"{report.file}:\n")
    if report.dev is None:
        err = report.parse_error
        out.write(f"  ParseError at {err.line}:{err.col}: {err.message}\n")
        return
    dev = report.dev
    if command in ("check", "validate"):
        _write_lines(report, out, trace)
        _write_theorems(dev, out)
        _write_rules(dev, out)
        if report.oracle is not None:
            _write_oracle(report.oracle, out)
        n_bad = len(dev.failures)
        verdict = "ok" if report.ok else "FAILED"
        out.write(f"{verdict}: {len(dev.records) - n_bad} verified, {n_bad} failed\n")
    elif command == "theorems":
        _write_theorems(dev, out)
    elif command == "rules":
        _write_rules(dev, out)


# -- entry point --------------------------------------------------------------

def _flags(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    parser.add_argument("--allow-raa", action="store_true",
                        help="enable the reductio meta-rule")
    parser.add_argument("--oracle-cap", type=int, metavar="N",
                        help="largest domain the oracle will enumerate "
                             "(default: $PND_ORACLE_CAP or 2^20)")
    parser.add_argument("--json", action="store_true", help="emit a JSON report")
    parser.add_argument("--trace", action="store_true",
                        help="print intermediate formulas of each justification")
    return parser


def build_parser() -> argparse.ArgumentParser:
    # Flags are accepted before or after the subcommand; the subcommand copy
    # suppresses its defaults so it cannot reset a flag given earlier.
    common = _flags(argparse.ArgumentParser(add_help=False,
                                            argument_default=argparse.SUPPRESS))

    parser = _flags(argparse.ArgumentParser(
        prog="pnd", description="Check natural-deduction protothetic scripts."))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("check", "run the kernel"),
                            ("validate", "run the kernel and the semantic oracle"),
                            ("theorems", "list the theorems"),
                            ("rules", "list the derived rules")]:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("files", nargs="+", metavar="FILE")
    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a closed formula over a script's signature")
    p.add_argument("files", nargs=1, metavar="FILE")
    p.add_argument("formula", metavar="FORMULA")
    return parser


def _eval(report: RunReport, text: str, cap: int, out: TextIO, err: TextIO) -> int:
    sig = report.dev.signature
    try:
        f = resolve(parse_formula(text), sig)
        loose = sorted(free_vars(f))
        if loose:
            err.write(f"error: free variables in formula: {', '.join(loose)}\n")
            return EXIT_FAIL
        cat = check_wff(f, sig)
        if cat != BASE:
            raise CategoryError(f"{print_formula(f)} has category {cat}, not s")
        value = eval_formula(f, sig, cap=cap)
    except ParseError as exc:
        err.write(f"error: ParseError: {exc.message}\n")
        return EXIT_USAGE
    except PNDError as exc:
        err.write(f"error: {exc.kind}: {exc.message}\n")
        return EXIT_FAIL
    out.write(f"{value}\n")
    if not report.dev.ok:
        err.write(f"warning: {report.file} has {len(report.dev.failures)} failed lines\n")
        return EXIT_FAIL
    return EXIT_OK


def main(argv: list[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    options = Options(allow_raa=args.allow_raa)
    if args.oracle_cap is not None:
        if args.oracle_cap < 1:
            err.write("error: --oracle-cap must be positive\n")
            return EXIT_USAGE
        options = Options(allow_raa=args.allow_raa, oracle_cap=args.oracle_cap)

    reports: list[RunReport] = []
    for path in args.files:
        try:
            reports.append(_load(path, options))
        except OSError as exc:
            err.write(f"error: cannot read {path}: {exc.strerror}\n")
            return EXIT_USAGE

    if args.command == "eval":
        report = reports[0]
        if report.dev is None:
            e = report.parse_error
            err.write(f"{report.file}:{e.line}:{e.col}: ParseError: {e.message}\n")
            return EXIT_USAGE
        return _eval(report, args.formula, options.oracle_cap, out, err)

    if args.command == "validate":
        for r in reports:
            if r.dev is not None:
                r.oracle = validate_development(r.dev, options.oracle_cap)

    if args.json:
        docs = [r.to_json() for r in reports]
        payload = docs[0] if len(docs) == 1 else docs
        out.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    else:
        for r in reports:
            _write_human(r, args.command, out, args.trace)

    if any(r.dev is None for r in reports):
        return EXIT_USAGE
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
