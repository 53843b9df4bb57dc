"""Command-line front end: ``surgcalc <verb> [inputs] [--json]``.

Exit codes: 0 success, 1 domain error (or a plan that fails verification),
2 parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from .abgroup import all_characters
from .linkform import LinkingForm, complexity, decompose
from .planner import ReductionPlan, diagnose_plan, reduction_plan
from .surgery import ParseError, homology, parse_diagram
from .invariants import (
    cw_lens,
    split_family,
    surgery_residual,
    torsion_connected_sum,
    torsion_lens,
    unknot_family,
)


class InputError(Exception):
    """Malformed command-line input (maps to exit code 2)."""


def fmt_rational(x) -> str:
    return str(Fraction(x))


def fmt_real(x: float) -> str:
    return format(x, ".12g")


def fmt_complex(z) -> str:
    if isinstance(z, Fraction):
        return fmt_rational(z)
    z = complex(z)
    if z.imag == 0:
        return fmt_real(z.real)
    return f"{fmt_real(z.real)}{'+' if z.imag >= 0 else '-'}{fmt_real(abs(z.imag))}i"


def parse_slope(text: str) -> tuple[int, int]:
    """``"p/q"`` or ``"p"`` as a literal pair (not reduced, so gcd checks still fire)."""
    num, _, den = text.strip().partition("/")
    try:
        return int(num), int(den) if den else 1
    except ValueError as exc:
        raise InputError(f"bad slope {text!r}") from exc


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def load_form(path: str) -> LinkingForm:
    """A form JSON file, or a diagram file whose homology supplies the form."""
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc
        return LinkingForm.from_json(data)
    return homology(parse_diagram(text)).form


def _emit(args, payload, text: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# verbs


def cmd_homology(args) -> int:
    d = parse_diagram(_read(args.file))
    h = homology(d)
    names = ["K"] if d.n == 1 else [f"K{i + 1}" for i in range(d.n)]
    links = [[h.form.eval(a, b) for b in h.knot_classes] for a in h.knot_classes]
    parts = [f"H = {h.group}"]
    for i in range(d.n):
        for j in range(i, d.n):
            parts.append(f"lk({names[i]},{names[j]}) = {fmt_rational(links[i][j])}")
    payload = {
        "group": list(h.group.invariant_factors),
        "form": h.form.to_json(),
        "knot_classes": [list(k.coords) for k in h.knot_classes],
        "knot_links": [[fmt_rational(x) for x in row] for row in links],
    }
    _emit(args, payload, ", ".join(parts))
    return 0


def cmd_linkform(args) -> int:
    f = load_form(args.file)
    _emit(args, f.to_json(), str(f))
    return 0


def cmd_decompose(args) -> int:
    f = load_form(args.file)
    blocks = decompose(f)
    payload = {
        "blocks": [{"kind": b.kind, "p": b.p, "k": b.k, "q": b.q} for b in blocks],
        "kappa": complexity(f),
    }
    _emit(args, payload, "\n".join(str(b) for b in blocks) or "(trivial)")
    return 0


def cmd_complexity(args) -> int:
    k = complexity(load_form(args.file))
    _emit(args, {"kappa": k}, str(k))
    return 0


def _lens_tables(slopes: Sequence[str]):
    tables = []
    for s in slopes:
        p, q = parse_slope(s)
        tables.append(torsion_lens(p, q))
    return tables


def cmd_cw(args) -> int:
    if args.lens:
        p, q = parse_slope(args.lens)
        value = cw_lens(p, q)
    else:
        value = sum((cw_lens(*parse_slope(s)) for s in args.sum), Fraction(0))
    _emit(args, {"cw": fmt_rational(value)}, fmt_rational(value))
    return 0


def cmd_torsion(args) -> int:
    if args.lens:
        table = torsion_lens(*parse_slope(args.lens))
    else:
        table = torsion_connected_sum(_lens_tables(args.sum))
    lines = [f"H = {table.group}", f"cw = {fmt_rational(table.cw)}"]
    for chi in all_characters(table.group):
        lines.append(f"{chi} = {fmt_complex(table[chi])}")
    _emit(args, table.to_json(), "\n".join(lines))
    return 0


def cmd_residual(args) -> int:
    p, q = parse_slope(args.slope)
    if args.family == "unknot":
        data = unknot_family(p, q)
    else:
        a, b = parse_slope(args.base)
        data = split_family(p, q, a, b)
    r = surgery_residual(*data)
    _emit(args, {"residual": r}, fmt_real(r))
    return 0


def cmd_plan(args) -> int:
    plan = reduction_plan(load_form(args.file))
    if args.json:
        print(plan.dumps())
        return 0
    lines = [f"kappa trace: {' -> '.join(map(str, plan.kappa_trace))}"]
    for mv in plan.moves:
        params = ", ".join(f"{k}={v}" for k, v in mv.params.items())
        lines.append(f"{mv.kind}({params}) -> kappa {mv.predicted_kappa}")
    lines.append("terminal: " + (" + ".join(str(b) for b in plan.terminal) or "(trivial)"))
    print("\n".join(lines))
    return 0


def cmd_verify(args) -> int:
    text = _read(args.file)
    try:
        data = json.loads(text)
        plan = ReductionPlan.from_json(data)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{args.file}: not a plan file ({exc})") from exc
    problems = diagnose_plan(plan, data.get("kappa_trace"))
    _emit(args, {"ok": not problems, "problems": problems}, "\n".join(["false"] + problems) if problems else "true")
    return 1 if problems else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surgcalc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, func, help_text, file_arg=True):
        p = sub.add_parser(name, help=help_text)
        if file_arg:
            p.add_argument("file", help="input file ('-' for stdin)")
        p.add_argument("--json", action="store_true", help="emit JSON")
        p.set_defaults(func=func)
        return p

    verb("homology", cmd_homology, "first homology and knot linking numbers of a diagram")
    verb("linkform", cmd_linkform, "linking form of a diagram or form file")
    verb("decompose", cmd_decompose, "block decomposition")
    verb("complexity", cmd_complexity, "complexity kappa")
    for name, func in (("cw", cmd_cw), ("torsion", cmd_torsion)):
        p = verb(name, func, f"{name} of a lens space or connected sum of lens spaces", file_arg=False)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--lens", metavar="P/Q")
        g.add_argument("--sum", nargs="+", metavar="P/Q")
    p = verb("residual", cmd_residual, "surgery-formula residual on a computable family", file_arg=False)
    p.add_argument("--family", choices=("unknot", "split"), required=True)
    p.add_argument("--slope", required=True, metavar="P/Q")
    p.add_argument("--base", default="3/1", metavar="A/B", help="split summand L(A,B)")
    verb("plan", cmd_plan, "complexity-reduction plan")
    verb("verify", cmd_verify, "replay a plan JSON file")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InputError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
