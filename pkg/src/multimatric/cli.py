"""``multimatric`` command line.

Exit codes: 0 success, 1 usage, 2 malformed or inconsistent data, 3 numeric
failure (non-convergence, singular anchors, failed checks).
"""

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .densities import FAMILY_NAMES, KERNEL_FAMILIES, logpdf, matrix_names
from .errors import DomainError, NearSingularError, ShapeError
from .estimation import MODELS, DegenerateSeedWarning, FitConfig, fit_beta2
from .io import DataError, collection_doc, dumps, read_collection, to_nested
from .kernels import parse_kernel
from .linalg import gram
from .rng import RngStream
from .samplers import sample_family
from .shapes import ExtendedShape
from .transforms import beta1_to_beta2, beta2_to_beta1, decompose_blocks, invert_spd, r_to_t, t_to_r

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return "%.17g" % x


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_shape(text, params=None):
    """``--shape m,n0,n1,..`` optionally overridden by ``--params a0=..,a=..``."""
    try:
        fields = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--shape must be integers 'm,n0,n1,...', got {text!r}") from None
    m, dof = fields[0], fields[1:]
    try:
        if params:
            a0, a = None, []
            for item in params.split(","):
                key, eq, value = item.partition("=")
                key = key.strip()
                if not eq or key not in ("a0", "a"):
                    raise UsageError(f"--params expects a0=..,a=..[,a=..], got {item!r}")
                try:
                    value = float(value)
                except ValueError:
                    raise UsageError(f"--params value for {key} is not a number: {value!r}") from None
                if key == "a0":
                    a0 = value
                else:
                    a.append(value)
            if a0 is None:
                raise UsageError("--params needs a0")
            return ExtendedShape(m, a0, tuple(a))
        if not dof:
            raise UsageError("--shape needs n0 (or give --params)")
        return ExtendedShape.from_dof(m, dof)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _kernel(text, shape, family):
    if family not in KERNEL_FAMILIES and text is None:
        return None
    try:
        return parse_kernel(text or "gaussian", shape.total_dim)
    except DomainError as exc:
        raise UsageError(f"--kernel: {exc}") from None


def _family(name):
    if name not in FAMILY_NAMES:
        raise UsageError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")
    return name


# ----------------------------------------------------------------------------
# commands


def cmd_fit(args):
    _, _, items = read_collection(args.input, kind="spd")
    seed = "univariate"
    if (args.seed_a0 is None) != (args.seed_a is None):
        raise UsageError("--seed-a0 and --seed-a go together")
    if args.seed_a0 is not None:
        seed = (args.seed_a0, args.seed_a)
    try:
        config = FitConfig(model=args.model, seed_strategy=seed, restarts=args.restarts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateSeedWarning)
        result = fit_beta2(np.stack(items), config)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write(json.dumps(result.to_dict()) + "\n", args.out)
    if not result.converged:
        print(f"warning: fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sample(args):
    name = _family(args.family)
    shape = _parse_shape(args.shape, args.params)
    kernel = _kernel(args.kernel or "gaussian", shape, "")
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    try:
        draws = sample_family(name, shape, kernel, args.n, RngStream(args.seed), split=args.split)
    except (DomainError, ShapeError) as exc:
        raise UsageError(str(exc)) from None
    names = matrix_names(name, shape, args.split)
    lines = []
    for i in range(args.n):
        record = {"draw": i, "matrices": {sym: to_nested(D[i]) for sym, D in zip(names, draws)}}
        lines.append(json.dumps(record) + "\n")
    _write("".join(lines), args.out)
    return EXIT_OK


def cmd_pdf(args):
    name = _family(args.family)
    shape = _parse_shape(args.shape, args.params)
    kernel = _kernel(args.kernel, shape, name)
    m, _, items = read_collection(args.input, validate=False, tuples=True)
    if m != shape.m:
        raise DataError(f"input matrices have {m} columns, --shape says m={shape.m}")
    expected = len(matrix_names(name, shape, args.split))
    out = []
    for i, mats in enumerate(items):
        if len(mats) != expected:
            raise DataError(f"items[{i}]: {name} needs {expected} matrices, got {len(mats)}")
        try:
            value = logpdf(name, mats, shape, kernel, args.split)
        except ShapeError as exc:
            raise DataError(f"items[{i}]: {exc}") from None
        if value == -math.inf:
            print(f"warning: items[{i}] lies outside the support", file=sys.stderr)
        out.append(_fmt(value) + "\n")
    _write("".join(out), args.out)
    return EXIT_OK


def cmd_gram(args):
    _, _, blocks = read_collection(args.input, kind="block")
    if args.anchor_index is None:
        mats = [gram(B) for B in blocks]
    else:
        idx = args.anchor_index
        if not -len(blocks) <= idx < len(blocks):
            raise UsageError(f"--anchor-index {idx} out of range for {len(blocks)} blocks")
        idx %= len(blocks)
        rest = [B for i, B in enumerate(blocks) if i != idx]
        _, mats = decompose_blocks([blocks[idx], *rest], "beta2")
    _write(dumps(collection_doc(mats, "spd")) + "\n", args.out)
    return EXIT_OK


_TRANSFORMS = {
    "t_to_r": ("block", "block", t_to_r),
    "r_to_t": ("block", "block", r_to_t),
    "invert_spd": ("spd", "spd", invert_spd),
    "beta1_to_beta2": ("spd", "spd", lambda S: beta1_to_beta2(S, return_log_jac=True)),
    "beta2_to_beta1": ("spd", "spd", lambda S: beta2_to_beta1(S, return_log_jac=True)),
}


def cmd_transform(args):
    kind_in, kind_out, func = _TRANSFORMS[args.op]
    _, _, items = read_collection(args.input, kind=kind_in, validate=kind_in == "spd")
    outs, jacs = [], []
    for A in items:
        Y, lj = func(A)
        outs.append(Y)
        jacs.append(float(lj))
    doc = collection_doc(outs, kind_out)
    doc["log_jac"] = jacs
    _write(dumps(doc) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args):
    from .verify import CHECKS, run_checks

    if args.list:
        print("\n".join(CHECKS))
        return EXIT_OK
    names = list(CHECKS) if args.all else args.names
    if not names:
        raise UsageError("name at least one check, or pass --all")
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}; see 'verify --list'")
    failed = 0
    for report in run_checks(names):
        if args.json:
            print(json.dumps(report.to_dict()), flush=True)
        else:
            status = "PASS" if report.passed else "FAIL"
            print(
                f"{status} {report.name} statistic={_fmt(report.statistic)} "
                f"target={report.target:g} tol={report.tolerance:g} ({report.detail})",
                flush=True,
            )
        failed += not report.passed
    return EXIT_NUMERIC if failed else EXIT_OK


# ----------------------------------------------------------------------------
# parser


def build_parser():
    parser = _Parser(prog="multimatric", description="Multimatrix variate densities, samplers and fits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="maximum-likelihood beta type II fit")
    p.add_argument("input", help="spd collection (JSON)")
    p.add_argument("--model", choices=MODELS, default="dependent")
    p.add_argument("--seed-a0", type=float)
    p.add_argument("--seed-a", type=float)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    def family_args(p, kernel_default=None):
        p.add_argument("--family", required=True, help=", ".join(FAMILY_NAMES))
        p.add_argument("--shape", required=True, help="m,n0,n1,... (m alone with --params)")
        p.add_argument("--params", help="a0=..,a=..[,a=..] real shape parameters")
        p.add_argument("--kernel", default=kernel_default, help="gaussian | pearson7:nu=.. | kotz:T=..,r=..,s=..")
        p.add_argument("--split", type=int, help="non-inverted count for the inverted families")
        p.add_argument("--out")

    p = sub.add_parser("sample", help="draw from a family (JSON lines)")
    family_args(p, "gaussian")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pdf", help="log-density of each input item")
    family_args(p)
    p.add_argument("input")
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("gram", help="reduce a block collection to SPD matrices")
    p.add_argument("input", help="block collection (JSON)")
    p.add_argument("--anchor-index", type=int, help="block used as X0; omitted gives plain X'X")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("transform", help="apply a change of variables to each item")
    p.add_argument("--op", required=True, choices=sorted(_TRANSFORMS))
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="run named numerical checks")
    p.add_argument("names", nargs="*")
    p.add_argument("--all", action="store_true")
    p.add_argument("--list", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"multimatric {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError) as exc:
        print(f"multimatric {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NearSingularError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"multimatric {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
