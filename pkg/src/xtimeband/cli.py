"""Command-line interface.

    xtimeband gram --family xhermite --n 7 --t 5 --precision 256 --format json
    xtimeband commutant --family xjacobi --alpha 3 --beta 4 --n 7 --t 1/3 --perline
    xtimeband reproduce hermite-eigs
    xtimeband rerun out.json.manifest.json

Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical
diagnostic failure (including a failed reproduction).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from ._numeric import ENV_PRECISION, backend, default_precision, normalize_precision
from .bispectral import build_eig_diagonal
from .commutant import DEFAULT_BANDWIDTH, JACOBI_PERLINE_BASIS, fit_perline_combination, solve_banded_commutant
from .errors import DomainError, NumericalDiagnosticError, QuadratureNonConvergence, SymmetrizationFailure, \
    Unsupported
from .families import FamilySpec
from .timeband import compute_gram

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST_SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    family: str | None
    parameters: dict
    N: int | None
    T: str | None
    precision_bits: int
    quad_tol: float | None
    format: str
    output: str | None
    timestamp: str
    version: str
    argv: list
    schema_version: int = MANIFEST_SCHEMA
    diagnostics: dict | None = None


# ---------------------------------------------------------------------------
# number formatting

def format_number(v, precision_bits: int) -> str:
    """Shortest round-trip decimal for doubles, 40 significant digits otherwise."""
    if precision_bits == 53:
        return repr(float(v))
    be = backend(precision_bits)
    return be.ctx.nstr(v, 40, strip_zeros=False, min_fixed=-5, max_fixed=40)


def parse_number(text: str, precision_bits: int):
    if precision_bits == 53:
        return float(text)
    return backend(precision_bits).ctx.mpf(text)


def matrix_to_csv(A, precision_bits: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(A):
        w.writerow(format_number(v, precision_bits) for v in row)
    return buf.getvalue()


def matrix_from_csv(text: str, precision_bits: int) -> np.ndarray:
    rows = [[parse_number(c, precision_bits) for c in r] for r in csv.reader(io.StringIO(text)) if r]
    return np.array(rows, dtype=float if precision_bits == 53 else object)


def _json_matrix(A, precision_bits: int):
    if precision_bits == 53:
        return [[float(v) for v in row] for row in np.asarray(A)]
    return [[format_number(v, precision_bits) for v in row] for row in np.asarray(A)]


# ---------------------------------------------------------------------------
# argument handling

def _parse_T(text: str):
    try:
        return Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read T = {text!r}") from None


def _parse_precision(text):
    if text is None:
        return default_precision()
    if str(text).lower() in ("double", "53"):
        return None
    try:
        return normalize_precision(int(text))
    except ValueError as exc:
        raise UsageError(f"bad precision {text!r}: {exc}") from None


def _family(args) -> FamilySpec:
    if args.family == "xhermite":
        return FamilySpec.xhermite()
    if args.alpha is None:
        raise UsageError(f"--alpha is required for {args.family}")
    alpha = _parse_param(args.alpha)
    if args.family == "xlaguerre":
        return FamilySpec.xlaguerre(alpha)
    if args.beta is None:
        raise UsageError("--beta is required for xjacobi")
    return FamilySpec.xjacobi(alpha, _parse_param(args.beta))


def _parse_param(text: str):
    v = Fraction(text)
    return int(v) if v.denominator == 1 else v


def _common(p):
    p.add_argument("--family", required=True, choices=["xhermite", "xjacobi", "xlaguerre"])
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p.add_argument("--n", type=int, required=True, help="matrix size N")
    p.add_argument("--t", required=True, help="time limit T (decimal or fraction such as 1/3)")
    p.add_argument("--precision", help=f"mantissa bits, or 'double' (default: ${ENV_PRECISION} or double)")
    p.add_argument("--quad-tol", type=float, help="absolute quadrature tolerance per entry")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o", help="output file (default: stdout); a manifest is written next to it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xtimeband", description="Time-and-band limiting for exceptional orthogonal polynomials")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gram", help="Gram matrix M_{T,N}")
    _common(g)

    c = sub.add_parser("commutant", help="banded matrix commuting with M_{T,N}")
    _common(c)
    c.add_argument("--bandwidth", type=int, help="half-bandwidth (default: 3 for xhermite, 2 otherwise)")
    c.add_argument("--zero-diagonal", type=int, help="1-based k with L[k,k] = 0 (default N)")
    c.add_argument("--unit-entry", help="1-based 'i,j' fixing the scale (default 'N,N-1')")
    c.add_argument("--unit-value", default="1", help="value of the scale entry (default 1)")
    c.add_argument("--perline", action="store_true", help="also fit the monomial combination in B and Lambda")
    c.add_argument("--basis", help="comma-separated monomial words for --perline")

    r = sub.add_parser("reproduce", help="re-run a published table and compare")
    r.add_argument("table", help="table id, or 'all'")

    m = sub.add_parser("rerun", help="re-run the command recorded in a manifest")
    m.add_argument("manifest")
    return parser


# ---------------------------------------------------------------------------
# commands

def _emit(text: str, args, manifest: RunManifest, out) -> None:
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        with open(args.output + ".manifest.json", "w") as fh:
            json.dump(asdict(manifest), fh, indent=2)
            fh.write("\n")
    else:
        out.write(text)


def _manifest(args, argv, fam: FamilySpec, precision_bits: int, quad_tol, diagnostics=None) -> RunManifest:
    params = {}
    if fam.alpha is not None:
        params["alpha"] = str(fam.alpha)
    if fam.beta is not None:
        params["beta"] = str(fam.beta)
    return RunManifest(args.command, fam.kind.value, params, args.n, args.t, precision_bits,
                       None if quad_tol is None else float(quad_tol), args.format, args.output,
                       datetime.now(timezone.utc).isoformat(), __version__, list(argv), diagnostics=diagnostics)


def cmd_gram(args, argv, out) -> int:
    fam = _family(args)
    bits = _parse_precision(args.precision)
    g = compute_gram(fam, args.n, _parse_T(args.t), bits, args.quad_tol)
    if args.format == "csv":
        text = matrix_to_csv(g.entries, g.precision_bits)
    else:
        text = json.dumps({"family": fam.kind.value, "parameters": {"alpha": _str(fam.alpha), "beta": _str(fam.beta)},
                           "N": g.N, "T": args.t, "precision_bits": g.precision_bits, "quad_tol": g.quad_tol,
                           "entries": _json_matrix(g.entries, g.precision_bits)}, indent=1) + "\n"
    _emit(text, args, _manifest(args, argv, fam, g.precision_bits, g.quad_tol), out)
    return EXIT_OK


def _str(v):
    return None if v is None else str(v)


def _pair(text: str):
    try:
        i, j = (int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"expected 'i,j', got {text!r}") from None
    return i, j


def cmd_commutant(args, argv, out) -> int:
    fam = _family(args)
    bits = _parse_precision(args.precision)
    g = compute_gram(fam, args.n, _parse_T(args.t), bits, args.quad_tol)
    w = args.bandwidth if args.bandwidth is not None else DEFAULT_BANDWIDTH[fam.kind.value]
    norm = {"unit_value": Fraction(args.unit_value) if "/" in args.unit_value else float(args.unit_value)}
    if args.zero_diagonal is not None:
        norm["zero_diagonal"] = args.zero_diagonal - 1
    if args.unit_entry is not None:
        i, j = _pair(args.unit_entry)
        norm["unit_entry"] = (i - 1, j - 1)
    res = solve_banded_commutant(g, w, **norm)
    diag = {"half_bandwidth": w, "commutator_residual": res.commutator_residual,
            "nullspace_dim": res.nullspace_dim, "singular_values": list(res.singular_values)}
    if args.perline:
        basis = tuple(s.strip() for s in args.basis.split(",")) if args.basis else JACOBI_PERLINE_BASIS
        lam = build_eig_diagonal(fam, args.n, bits)
        if fam.kind.value == "xjacobi":
            from .commutant import jacobi_perline_operands
            B, _ = jacobi_perline_operands(args.n, fam.alpha, fam.beta, bits)
        else:
            from .bispectral import build_hermite_B
            B = build_hermite_B(args.n, bits)
        fit = fit_perline_combination(res.L, B, lam, basis)
        diag["perline"] = {"basis": list(fit.basis), "gamma": [format_number(v, res.precision_bits) for v in fit.gamma],
                           "fit_residual": fit.fit_residual}
    Ld = res.L.to_dense()
    if args.format == "csv":
        text = matrix_to_csv(Ld, res.precision_bits)
        print(json.dumps(diag), file=sys.stderr)
    else:
        text = json.dumps({"family": fam.kind.value, "parameters": {"alpha": _str(fam.alpha), "beta": _str(fam.beta)},
                           "N": args.n, "T": args.t, "precision_bits": res.precision_bits,
                           "L": _json_matrix(Ld, res.precision_bits), **diag}, indent=1) + "\n"
    _emit(text, args, _manifest(args, argv, fam, res.precision_bits, g.quad_tol, diag), out)
    return EXIT_OK


def cmd_reproduce(args, argv, out) -> int:
    from .reproduce import TABLES, reproduce

    ids = list(TABLES) if args.table == "all" else [args.table]
    if any(t not in TABLES for t in ids):
        raise UsageError(f"unknown table id {args.table!r}; choose from all, {', '.join(TABLES)}")
    ok = True
    for t in ids:
        rep = reproduce(t)
        out.write("\n".join(rep.lines()) + "\n")
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_rerun(args, argv, out) -> int:
    try:
        with open(args.manifest) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
    if data.get("schema_version") != MANIFEST_SCHEMA:
        raise UsageError(f"unsupported manifest schema {data.get('schema_version')!r}")
    return main(data["argv"], out=out)


COMMANDS = {"gram": cmd_gram, "commutant": cmd_commutant, "reproduce": cmd_reproduce, "rerun": cmd_rerun}


def main(argv=None, out=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, argv, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, Unsupported) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalDiagnosticError, QuadratureNonConvergence, SymmetrizationFailure) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # bad parameters rejected by constructors (e.g. alpha <= -1)
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
