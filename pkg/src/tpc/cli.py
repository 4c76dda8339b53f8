"""Command-line front end.

Subcommands::

    tpc analyze <file|@name> [--prior q0,q1,...] [--superposition a0,a1,...]
                [--q0-sweep v1,v2,...] [--q0 v] [--role alice|bob]
                [--optimize] [--out <path>]
    tpc sweep3x3 [--workers N] [--out <path>]
    tpc ot-demo
    tpc certify <file|@name> --povm <path> [--prior q0,q1,...] [--out <path>]

Exit codes: 0 success, 1 input error, 2 function outside implemented scope,
3 sweep assertion failure, 4 certification negative.

Machine-readable output (``--out``) is a line-delimited text document with a
``schema_version: 1`` header; field names match the attack-report fields and
every number is written with 17 significant digits so the document
round-trips losslessly.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import attacks, blackbox, discrim, funcspec
from .attacks import AttackReport, SweepFailure
from .discrim import CertificateResiduals
from .funcspec import FunctionFileError, FunctionSpec
from .tolerances import environment_summary

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SCOPE = 2
EXIT_SWEEP = 3
EXIT_NOT_OPTIMAL = 4


class ScopeError(Exception):
    """Function outside the implemented scope (exit code 2)."""


# --- report document --------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def _fmt_input(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, int):
        return f"honest:{value}"
    return "amps:" + ",".join(_fmt_complex(complex(z)) for z in value)


def _parse_input(text: str):
    if text == "-":
        return None
    if text.startswith("honest:"):
        return int(text.split(":", 1)[1])
    if text.startswith("amps:"):
        return tuple(complex(t) for t in text.split(":", 1)[1].split(","))
    raise ValueError(f"cannot parse input_used field {text!r}")


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n")


def _unescape(text: str) -> str:
    return text.replace("\\n", "\n").replace("\\\\", "\\")


@dataclass(frozen=True)
class ReportDocument:
    schema_version: int
    environment: str
    reports: tuple[AttackReport, ...]


def render_report_document(reports: Sequence[AttackReport]) -> str:
    lines = [
        f"schema_version: {SCHEMA_VERSION}",
        f"environment: {environment_summary()}",
        f"report_count: {len(reports)}",
    ]
    for r in reports:
        lines.append("---")
        lines.append(f"function_id: {r.function_id}")
        lines.append(f"scenario: {r.scenario}")
        lines.append("prior: " + ",".join(_fmt(p) for p in r.prior))
        lines.append(f"input_used: {_fmt_input(r.input_used)}")
        lines.append(f"p_honest: {_fmt(r.p_honest)}")
        lines.append(f"p_attack: {_fmt(r.p_attack)}")
        lines.append(f"advantage: {_fmt(r.advantage)}")
        lines.append(f"certified: {'true' if r.certified else 'false'}")
        if r.residuals is None:
            lines.append("residuals: -")
        else:
            lines.append(
                "residuals: "
                + ",".join(
                    _fmt(x)
                    for x in (
                        r.residuals.pairwise_max,
                        r.residuals.min_eigenvalue,
                        r.residuals.anti_hermitian_max,
                    )
                )
            )
        lines.append(f"notes: {_escape(r.notes)}")
    return "\n".join(lines) + "\n"


def parse_report_document(text: str) -> ReportDocument:
    lines = text.splitlines()

    def field(line: str, key: str) -> str:
        name, sep, value = line.partition(":")
        if not sep or name.strip() != key:
            raise ValueError(f"expected '{key}:' line, got {line!r}")
        return value.strip()

    version = int(field(lines[0], "schema_version"))
    environment = field(lines[1], "environment")
    count = int(field(lines[2], "report_count"))
    reports = []
    pos = 3
    for _ in range(count):
        if lines[pos] != "---":
            raise ValueError(f"expected report separator, got {lines[pos]!r}")
        pos += 1
        block = lines[pos : pos + 10]
        pos += 10
        residual_text = field(block[8], "residuals")
        residuals = None
        if residual_text != "-":
            parts = [float(x) for x in residual_text.split(",")]
            residuals = CertificateResiduals(*parts)
        reports.append(
            AttackReport(
                function_id=field(block[0], "function_id"),
                scenario=field(block[1], "scenario"),
                prior=tuple(float(x) for x in field(block[2], "prior").split(",")),
                input_used=_parse_input(field(block[3], "input_used")),
                p_honest=float(field(block[4], "p_honest")),
                p_attack=float(field(block[5], "p_attack")),
                advantage=float(field(block[6], "advantage")),
                certified=field(block[7], "certified") == "true",
                residuals=residuals,
                notes=_unescape(field(block[9], "notes")),
            )
        )
    return ReportDocument(version, environment, tuple(reports))


# --- POVM files -------------------------------------------------------------

def parse_povm_file(text: str) -> discrim.Povm:
    """POVM file: ``dim: <d>`` header, then one block per element holding d
    rows of d complex entries (``a+bi``, ``a``, or ``bi``); '#' comments."""
    rows = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((ln, s))
    if not rows:
        raise FunctionFileError(1, "empty POVM file")
    ln, s = rows[0]
    name, sep, value = s.partition(":")
    if not sep or name.strip() != "dim":
        raise FunctionFileError(ln, f"expected 'dim: <d>' header, got {s!r}")
    if not value.strip().isdigit():
        raise FunctionFileError(ln, f"dimension must be an integer, got {value!r}")
    dim = int(value.strip())
    body = rows[1:]
    if not body or len(body) % dim != 0:
        raise FunctionFileError(
            rows[-1][0], f"expected a multiple of {dim} matrix rows, got {len(body)}"
        )
    entries = []
    for ln, s in body:
        toks = s.split()
        if len(toks) != dim:
            raise FunctionFileError(ln, f"expected {dim} entries, got {len(toks)}")
        row = []
        for t in toks:
            try:
                row.append(complex(t.replace("i", "j")))
            except ValueError:
                raise FunctionFileError(ln, f"cannot parse complex entry {t!r}") from None
        entries.append(row)
    count = len(entries) // dim
    elements = tuple(
        np.array(entries[e * dim : (e + 1) * dim], dtype=complex) for e in range(count)
    )
    return discrim.Povm(elements, tuple(range(count)))


def render_povm(povm: discrim.Povm) -> str:
    lines = [f"dim: {povm.dim}"]
    for idx, e in enumerate(povm.elements):
        lines.append(f"# element {idx}")
        for row in e:
            lines.append(" ".join(f"{z.real:.17g}{z.imag:+.17g}i" for z in row))
    return "\n".join(lines) + "\n"


# --- shared helpers ---------------------------------------------------------

def _load_spec(ref: str) -> FunctionSpec:
    if ref.startswith("@"):
        try:
            return funcspec.builtin(ref)
        except KeyError as exc:
            raise FunctionFileError(1, str(exc)) from None
    path = Path(ref)
    if not path.is_file():
        raise FunctionFileError(1, f"no such function file: {ref}")
    return funcspec.parse_function_file(path.read_text())


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def _parse_amplitudes(text: str) -> tuple[complex, ...]:
    return tuple(complex(t) for t in text.split(","))


def _print_report(report: AttackReport) -> None:
    print(f"function: {report.function_id} ({report.scenario})")
    print("prior: " + ", ".join(_fmt(p) for p in report.prior))
    print(f"input: {_fmt_input(report.input_used)}")
    print(f"p_honest: {_fmt(report.p_honest)}")
    print(f"p_attack: {_fmt(report.p_attack)}")
    print(f"advantage: {_fmt(report.advantage)}")
    if report.residuals is None:
        print(f"certified optimal: {report.certified}")
    else:
        print(
            f"certified optimal: {report.certified} "
            f"(pairwise={report.residuals.pairwise_max:.3g}, "
            f"min_eig={report.residuals.min_eigenvalue:.3g}, "
            f"anti_herm={report.residuals.anti_hermitian_max:.3g})"
        )
    if report.notes:
        print(f"notes: {report.notes}")


def _write_out(path: str | None, reports: Sequence[AttackReport]) -> None:
    if path:
        Path(path).write_text(render_report_document(reports))


def _is_ot_table(f: FunctionSpec) -> bool:
    ot = funcspec.builtin("ot")
    return (
        f.kind == ot.kind
        and f.sided == ot.sided
        and (f.alice_arity, f.bob_arity, f.outcome_count)
        == (ot.alice_arity, ot.bob_arity, ot.outcome_count)
        and f.prob_table == ot.prob_table
    )


def _is_counterexample_table(f: FunctionSpec) -> bool:
    cx = funcspec.builtin("counterexample")
    return (
        f.kind == cx.kind
        and f.sided == cx.sided
        and (f.alice_arity, f.bob_arity, f.outcome_count)
        == (cx.alice_arity, cx.bob_arity, cx.outcome_count)
        and f.prob_table == cx.prob_table
    )


# --- subcommands ------------------------------------------------------------

def _dispatch_analyze(f: FunctionSpec, args) -> AttackReport:
    if args.role not in ("alice", "bob"):
        raise FunctionFileError(1, f"role must be alice or bob, got {args.role!r}")
    if _is_ot_table(f):
        return attacks.attack_oblivious_transfer()
    if args.role == "bob":
        f = funcspec.transpose(f)
    superposition = _parse_amplitudes(args.superposition) if args.superposition else None
    prior = _parse_floats(args.prior) if args.prior else None
    q0 = None
    if args.q0 is not None:
        q0 = float(args.q0)
    elif prior is not None and len(prior) == 2:
        q0 = prior[0]

    if f.kind == "deterministic":
        if (f.alice_arity, f.bob_arity) != (3, 3):
            raise ScopeError(
                "only 3x3 deterministic functions are implemented; larger alphabets: "
                "conjectured insecure, not verified"
            )
        check = funcspec.validate_conditions(f)
        if not check:
            raise ScopeError(
                "function is outside the attack's scope: "
                f"potentially_concealing={check.potentially_concealing}, "
                f"non_degenerate={check.non_degenerate}"
            )
        return attacks.attack_deterministic_3x3(
            f, superposition=superposition, prior=prior, optimize=args.optimize
        )

    if f.outcome_count != 2:
        raise ScopeError(
            "probabilistic functions with more than two outcomes (beyond the "
            "built-in oblivious-transfer table) are conjecture territory: "
            "conjectured insecure, not verified"
        )
    if f.sided == "two":
        if (f.alice_arity, f.bob_arity) != (2, 2):
            raise ScopeError(
                "only 2x2 binary two-sided tables are implemented; larger "
                "alphabets: conjectured insecure, not verified"
            )
        if _is_counterexample_table(f) and q0 == 0.5:
            return attacks.verify_counterexample()
        sweep = _parse_floats(args.q0_sweep) if args.q0_sweep else None
        if q0 is not None:
            sweep = (q0,) + tuple(sweep or ())
        return attacks.attack_nondet_two_sided(f, q0_sweep=sweep, superposition=superposition)
    if f.bob_arity != 2:
        raise ScopeError(
            "only binary one-sided tables with two partner inputs are implemented"
        )
    return attacks.attack_nondet_one_sided(f, 0.5 if q0 is None else q0)


def cmd_analyze(args) -> int:
    try:
        f = _load_spec(args.function)
    except FunctionFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = _dispatch_analyze(f, args)
    except ScopeError as exc:
        print(f"out of scope: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except (FunctionFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _print_report(report)
    _write_out(args.out, [report])
    return EXIT_OK


def cmd_sweep3x3(args) -> int:
    try:
        reports = attacks.sweep_all_3x3(workers=args.workers)
    except SweepFailure as exc:
        print(f"sweep failure: {exc}", file=sys.stderr)
        for r in exc.reports:
            print(f"  {r.function_id} advantage={_fmt(r.advantage)}", file=sys.stderr)
        return EXIT_SWEEP
    for r in reports:
        print(f"{r.function_id} advantage={_fmt(r.advantage)} p_attack={_fmt(r.p_attack)}")
    summary = attacks.summarize_sweep(reports)
    print(
        f"functions={int(summary['functions'])}"
        f" min_adv={_fmt(summary['min_adv'])}"
        f" median_adv={_fmt(summary['median_adv'])}"
        f" max_adv={_fmt(summary['max_adv'])}"
    )
    _write_out(args.out, reports)
    return EXIT_OK


def cmd_ot_demo(args) -> int:
    report = attacks.attack_oblivious_transfer()
    povm = attacks.ot_explicit_povm()
    print("oblivious transfer demo")
    print("closed-form receiver measurement, first element (basis |0>, |1>, |?>):")
    for row in povm.elements[0]:
        print("  " + "  ".join(f"{z.real:+.12f}" for z in row))
    _print_report(report)
    _write_out(args.out, [report])
    return EXIT_OK


def _certify_family(f: FunctionSpec):
    """Default state family used by `certify`: the function as given, probed
    with the uniform superposition (two-sided) or honest input 0 (one-sided)."""
    if _is_ot_table(f):
        return blackbox.output_family(f, 0, role="bob")
    if f.sided == "two":
        return blackbox.output_family(f, blackbox.uniform_superposition(f.alice_arity))
    return blackbox.output_family(f, 0)


def cmd_certify(args) -> int:
    try:
        f = _load_spec(args.function)
        povm_path = Path(args.povm)
        if not povm_path.is_file():
            raise FunctionFileError(1, f"no such POVM file: {args.povm}")
        povm = parse_povm_file(povm_path.read_text())
    except (FunctionFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        family = _certify_family(f)
        prior = (
            funcspec.validate_prior(_parse_floats(args.prior), len(family.states))
            if args.prior
            else funcspec.uniform_prior(len(family.states))
        )
        ok, residuals = discrim.certify_optimal(family, prior, povm)
        success = discrim.povm_success(family, prior, povm)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"success_probability: {_fmt(success)}")
    print(
        f"residuals: pairwise={_fmt(residuals.pairwise_max)}"
        f" min_eig={_fmt(residuals.min_eigenvalue)}"
        f" anti_herm={_fmt(residuals.anti_hermitian_max)}"
    )
    print(f"certified optimal: {ok}")
    return EXIT_OK if ok else EXIT_NOT_OPTIMAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpc",
        description="Verify superposition-input attacks on ideal two-party computation boxes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="attack one function file or built-in table")
    p.add_argument("function", help="function file path or built-in name (@ot, @counterexample, @neq3)")
    p.add_argument("--prior", help="comma-separated prior weights over the guessed inputs")
    p.add_argument("--superposition", help="comma-separated input amplitudes")
    p.add_argument("--q0-sweep", dest="q0_sweep", help="comma-separated prior weights to sweep")
    p.add_argument("--q0", type=float, help="single prior weight on input 0")
    p.add_argument("--role", default="alice", help="which party cheats (alice|bob)")
    p.add_argument("--optimize", action="store_true", help="also run the fixed-point POVM search")
    p.add_argument("--out", help="write a machine-readable report document")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep3x3", help="attack every valid 3x3 deterministic function")
    p.add_argument("--workers", type=int, default=None, help="parallel workers")
    p.add_argument("--out", help="write a machine-readable report document")
    p.set_defaults(func=cmd_sweep3x3)

    p = sub.add_parser("ot-demo", help="built-in oblivious transfer analysis")
    p.add_argument("--out", help="write a machine-readable report document")
    p.set_defaults(func=cmd_ot_demo)

    p = sub.add_parser("certify", help="check a POVM file against the optimality conditions")
    p.add_argument("function", help="function file path or built-in name")
    p.add_argument("--povm", required=True, help="POVM file path")
    p.add_argument("--prior", help="comma-separated prior weights")
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
