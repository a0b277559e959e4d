"""Command-line interface.

Exit status: 0 on success, 1 on validation failure (bad input, violated
hypotheses, failed law check), 2 on numerical failure (eigensolver,
clustering, conditioning).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import AzumayaPoint, apply, verify_ring_hom
from .division import Poly, poly_divide
from .errors import ConditioningWarning, NumericalError, ValidationError
from .expr import parse, taylor_jet
from .matrixalg import DEFAULT_TOL, MatrixTuple, matrix_to_json
from .spectral import GridSpec, MatrixFamily, defects, family_apply, sample_family, samples_to_csv, wall_detect

log = logging.getLogger("azumaya")


def dumps(obj, indent: int | None = None) -> str:
    """JSON with every float written to 17 significant digits."""

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ", " if indent is None else ","
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            x = float(o)
            if math.isnan(x) or math.isinf(x):
                return json.dumps(x)
            return format(x + 0.0, ".17g")
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, (complex, np.complexfloating)):
            return enc([o.real, o.imag], level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(str(k)) + ": " + enc(v, level + 1) for k, v in o.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            # keep numeric rows on one line
            if all(isinstance(x, (int, float, np.number)) and not isinstance(x, bool) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[" + sep.join(pad + enc(x, level + 1) for x in o) + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


def _read_json(path):
    try:
        text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
        return json.loads(text)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def _load_tuple(args) -> MatrixTuple:
    return MatrixTuple.from_json(_read_json(args.tuple), tol=args.tol)


def _matrix_payload(m):
    m = np.asarray(m)
    if np.all(m.imag == 0):
        return m.real.tolist()
    return matrix_to_json(m)


def cmd_apply(args):
    t = _load_tuple(args)
    f = parse(args.expr, t.n)
    F = apply(f, AzumayaPoint(t, args.seed))
    if args.format == "csv":
        F = np.asarray(F)
        if np.all(F.imag == 0):
            cells = [[format(z + 0.0, ".17g") for z in row] for row in F.real]
        else:
            cells = [[f"{z.real + 0.0:.17g},{z.imag + 0.0:.17g}" for z in row] for row in F]
        return _emit("\n".join(",".join(row) for row in cells), args.out)
    _emit(dumps(_matrix_payload(F)), args.out)


def cmd_spectrum(args):
    a = AzumayaPoint(_load_tuple(args), args.seed)
    _emit(dumps(a.spectrum.to_json(), indent=1), args.out)


def cmd_verify(args):
    t = _load_tuple(args)
    try:
        text = Path(args.exprs).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.exprs}: {exc}") from exc
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    fs = [parse(ln, t.n) for ln in lines if ln]
    rep = verify_ring_hom(AzumayaPoint(t, args.seed), fs, args.tol)
    _emit(dumps(rep.to_json(), indent=1), args.out)
    return 0 if rep.passed else 1


def cmd_family_scan(args):
    fam = MatrixFamily.from_json(_read_json(args.family))
    grid = GridSpec.parse(args.grid)
    samples = sample_family(fam, grid, args.tol, args.seed)
    walls = wall_detect(samples, grid)
    wall_json = {"walls": [w.to_json() for w in walls], "defects": defects(samples)}
    applied = None
    if args.expr:
        res = family_apply(parse(args.expr, fam.n), fam, grid, args.tol, args.seed, samples=samples)
        applied = {
            "values": [None if v is None else _matrix_payload(v) for v in res.values],
            "smoothness": res.report.to_json(),
        }
    if args.format == "json":
        payload = {"samples": [_sample_json(s) for s in samples], **wall_json}
        if applied:
            payload["apply"] = applied
        _emit(dumps(payload, indent=1), args.out)
        return 0
    _emit(samples_to_csv(samples, fam), args.out)
    if args.out:
        base = Path(args.out)
        base.with_suffix(".walls.json").write_text(dumps(wall_json, indent=1) + "\n")
        if applied:
            base.with_suffix(".apply.json").write_text(dumps(applied, indent=1) + "\n")
    return 0


def _sample_json(s):
    out = {"index": list(s.index), "point": list(s.point)}
    if s.ok:
        out.update(s=s.s, cond=s.cond, projector_norm=s.projector_norm,
                   points=[{"lambda": list(p.lam), "rank": p.rank, "nilpotency": p.nilpotency}
                           for p in s.spectrum.points])
    else:
        out["defect"] = s.defect
    return out


def cmd_divide(args):
    f = Poly.from_json(_read_json(args.dividend))
    h = Poly.from_json(_read_json(args.divisor))
    _emit(dumps(poly_divide(f, h).to_json(), indent=1), args.out)


def cmd_jet(args):
    point = [float(x) for x in args.point.split(",") if x.strip()]
    jet = taylor_jet(parse(args.expr, len(point)), point, args.order)
    _emit(dumps(jet.to_json(), indent=1), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="numerical tolerance (default 1e-8)")
    common.add_argument("--seed", type=int, default=0, help="seed for the random generic combination")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default: csv for family-scan, json otherwise)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="azumaya", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("apply", parents=[common], help="evaluate an expression at a commuting tuple")
    s.add_argument("--expr", required=True)
    s.add_argument("--tuple", required=True, help="tuple JSON file ('-' for stdin)")
    s.set_defaults(func=cmd_apply)

    s = sub.add_parser("spectrum", parents=[common], help="joint spectrum of a tuple")
    s.add_argument("--tuple", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("verify", parents=[common], help="check ring-homomorphism laws")
    s.add_argument("--tuple", required=True)
    s.add_argument("--exprs", required=True, help="file with one expression per line")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("family-scan", parents=[common], help="sample a matrix family on a grid")
    s.add_argument("--family", required=True)
    s.add_argument("--grid", required=True, help='"x1:min:max:count[,x2:...]"')
    s.add_argument("--expr", help="also evaluate this expression at every grid point")
    s.set_defaults(func=cmd_family_scan)

    s = sub.add_parser("divide", parents=[common], help="univariate polynomial division")
    s.add_argument("--dividend", required=True, help="Poly JSON")
    s.add_argument("--divisor", required=True, help="Poly JSON")
    s.set_defaults(func=cmd_divide)

    s = sub.add_parser("jet", parents=[common], help="truncated Taylor expansion at a point")
    s.add_argument("--expr", required=True)
    s.add_argument("--point", required=True, help="comma-separated coordinates")
    s.add_argument("--order", type=int, required=True)
    s.set_defaults(func=cmd_jet)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.format is None:
        args.format = "csv" if args.command == "family-scan" else "json"
    if not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", ConditioningWarning)
            return args.func(args) or 0
    except ValidationError as exc:
        print(f"validation error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ConditioningWarning) as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
