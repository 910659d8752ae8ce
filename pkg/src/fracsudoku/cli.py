"""Command-line entry point: ``fracsudoku <command> ...``.

Reports are plain ``key: value`` lines.  Exit codes: 0 success, 1 infeasible
or failed certificate, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import cache
from .core import (PuzzleError, SudokuShape, density_report, random_dense_puzzle, random_partial, read_puzzle,
                   serialize_puzzle)

log = logging.getLogger("fracsudoku")


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _shape(h: int, w: int) -> SudokuShape:
    try:
        return SudokuShape(h, w)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _options(args):
    from .solver import SolveOptions

    method = args.method or ("direct" if args.arith == "rational" else "neumann")
    try:
        return SolveOptions(eta=args.eta, method=method, tol=args.tol, arith=args.arith)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(lines) -> None:
    for line in lines:
        print(line)


# --- commands ----------------------------------------------------------------------------


def cmd_solve(args) -> int:
    from .solver import solution_text, solve

    S = read_puzzle(args.puzzle)
    opts = _options(args)
    _emit(density_report(S).lines())
    out = solve(S, opts)
    text = solution_text(out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        _emit(text.split("records:")[0].splitlines())
        print(f"solution_file: {args.output}")
    else:
        sys.stdout.write(text)
    return 0 if out.completed else 1


def cmd_thin_solve(args) -> int:
    from .solver import solution_text
    from .thin_box import ExtensionError, column_bundle_property, thin_complete

    S = read_puzzle(args.puzzle)
    opts = _options(args)
    _emit(density_report(S).lines())
    try:
        res = thin_complete(S, eps=args.eps, opts=opts)
    except ExtensionError as exc:
        print("status: extension_failed")
        print(f"certificate: {exc}")
        return 1
    print(f"added_entries: {len(res.added)}")
    print(f"bundle_property_violations: {len(column_bundle_property(res.S_prime))}")
    print(f"extension_eps: {res.eps}")
    print(f"extension_delta: {res.delta}")
    print(f"widened_columns: {len(res.extension.widened_columns)}")
    if args.show_extended:
        sys.stdout.write(serialize_puzzle(res.S_prime))
    sys.stdout.write(solution_text(res.outcome))
    return 0 if res.outcome.completed else 1


def cmd_verify(args) -> int:
    from .solver import certify, read_solution

    S = read_puzzle(args.puzzle)
    with open(args.solution) as fh:
        try:
            shape, f, _ = read_solution(fh.read())
        except ValueError as exc:
            raise UsageError(f"{args.solution}: {exc}") from None
    if shape != S.shape:
        raise UsageError(f"solution shape {shape} does not match puzzle shape {S.shape}")
    cert = certify(S, f, tol=args.tol)
    _emit(cert.lines())
    return 0 if cert.ok else 1


def _spectrum_payload(h: int, w: int) -> dict:
    from .incidence import build_M
    from .spectral import a_inverse_norm, eigenspace_dimension, k_norm

    shape = SudokuShape(h, w)
    n = shape.n
    mult = [eigenspace_dimension(shape, j) for j in range(5)]
    payload = {"n": n, "multiplicities": mult, "numeric": None}
    if n <= 16:
        ev = np.linalg.eigvalsh(build_M(shape).astype(float))
        near = np.rint(ev / n).astype(int)
        payload["numeric"] = {
            "multiplicities": [int((near == j).sum()) for j in range(5)],
            "max_deviation": float(np.abs(ev - near * n).max()),
        }
    inv = a_inverse_norm(shape)
    payload["a_inverse_norm_closed_form"] = str(inv.closed_form)
    payload["a_inverse_norm_computed"] = str(inv.computed)
    payload["k_norm"] = str(k_norm(shape))
    return payload


def cmd_spectrum(args) -> int:
    shape = _shape(args.h, args.w)
    p = cache.cached("spectrum", shape.h, shape.w, lambda: _spectrum_payload(shape.h, shape.w),
                     cache.cache_dir(args.cache))
    n = p["n"]
    ok = True
    print(f"shape: {shape.h} {shape.w}")
    for j, m in enumerate(p["multiplicities"]):
        line = f"eigenvalue: {j * n} multiplicity: {m}"
        if p["numeric"]:
            nm = p["numeric"]["multiplicities"][j]
            ok &= nm == m
            line += f" numeric_multiplicity: {nm}"
        print(line)
    if p["numeric"]:
        dev = p["numeric"]["max_deviation"]
        ok &= dev < 1e-8
        print(f"max_eigenvalue_deviation: {dev:.3g}")
    cf, comp = Fraction(p["a_inverse_norm_closed_form"]), Fraction(p["a_inverse_norm_computed"])
    ok &= cf == comp
    print(f"a_inverse_norm_closed_form: {cf} ({float(cf):.12g})")
    print(f"a_inverse_norm_computed: {comp} ({float(comp):.12g})")
    print(f"k_norm: {p['k_norm']} ({float(Fraction(p['k_norm'])):.12g})")
    print(f"consistent: {'yes' if ok else 'no'}")
    return 0 if ok else 1


def _algebra_payload(h: int, w: int, pairs: int, seed: int) -> dict:
    from .algebra import (AlgebraElement, compute_structure_constants, degrees_at, degrees_concrete,
                          element_to_matrix, express_M, relation_matrix, relation_types)
    from .incidence import build_M
    from .spectral import a_inverse_norm, generalized_inverse, inverse_from_table, shifted_matrix

    shape = SudokuShape(h, w)
    checks = {}
    checks["degrees"] = bool(np.array_equal(np.asarray(degrees_at(shape), dtype=np.int64),
                                            np.asarray(degrees_concrete(shape), dtype=np.int64)))
    checks["express_M"] = bool(np.array_equal(element_to_matrix(express_M(shape)), build_M(shape)))
    sc = compute_structure_constants().at(shape)
    first, second = relation_types()
    rng = np.random.default_rng(seed)
    good = 0
    for _ in range(pairs):
        # composable pairs only: A_i A_j vanishes unless types match
        i = int(rng.integers(1, 70))
        j = int(rng.choice(np.flatnonzero(first == second[i])))
        prod = relation_matrix(shape, i) @ relation_matrix(shape, j)
        pred = sum((int(sc[i, j, k]) * relation_matrix(shape, k) for k in range(1, 70) if sc[i, j, k]),
                   np.zeros_like(prod))
        good += bool(np.array_equal(prod, pred))
    checks["structure_constants"] = good == pairs
    Ainv = generalized_inverse(shape)
    checks["inverse"] = (shifted_matrix(shape) @ Ainv) == AlgebraElement.identity(shape)
    checks["inverse_table"] = inverse_from_table(shape) == Ainv
    checks["norm_closed_form"] = a_inverse_norm(shape).agree
    return {"checks": checks, "pairs": pairs}


def cmd_algebra_check(args) -> int:
    shape = _shape(args.h, args.w)
    if shape.n > 16:
        raise UsageError("algebra-check materializes relation matrices; use n <= 16")
    p = cache.cached(f"algebra-p{args.pairs}-s{args.seed}", shape.h, shape.w,
                     lambda: _algebra_payload(shape.h, shape.w, args.pairs, args.seed),
                     cache.cache_dir(args.cache))
    print(f"shape: {shape.h} {shape.w}")
    print(f"structure_constant_pairs: {p['pairs']}")
    for k, v in p["checks"].items():
        print(f"{k}: {'pass' if v else 'FAIL'}")
    return 0 if all(p["checks"].values()) else 1


def cmd_gen_barrier(args) -> int:
    from .thin_box import barrier_construct

    try:
        S = barrier_construct(args.w, args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = serialize_puzzle(S)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"puzzle_file: {args.output}")
        print(f"entries: {len(S)}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_pentadoku(args) -> int:
    from .polyomino import TilingError, nullity_study, read_tilings

    try:
        tilings = read_tilings(args.tilings)
    except TilingError as exc:
        raise UsageError(str(exc)) from None
    ok = True
    for rec in nullity_study(tilings, numeric=not args.exact_only):
        line = f"tiling {rec.index + 1 if rec.index >= 0 else '-'}: straight_box: {'yes' if rec.has_straight else 'no'}"
        line += f" nullity: {rec.nullity}"
        if rec.numeric_nullity is not None:
            line += f" numeric_nullity: {rec.numeric_nullity}"
        if rec.expected is not None:
            line += f" expected: {rec.expected}"
            ok &= rec.nullity == rec.expected
        ok &= rec.stable
        print(line)
    print(f"tilings: {len(tilings)}")
    print(f"consistent: {'yes' if ok else 'no'}")
    return 0 if ok else 1


def _bench_one(job):
    h, w, eps, entries, seed, opts = job
    from .solver import solve

    shape = SudokuShape(h, w)
    rng = np.random.default_rng(seed)
    S = random_dense_puzzle(shape, eps, rng) if entries is None else random_partial(shape, entries, rng)
    t0 = time.perf_counter()
    out = solve(S, opts)
    return (h, w, eps if entries is None else "-", seed, len(S), density_report(S).eps_effective, out.status,
            time.perf_counter() - t0)


def _parse_shapes(text: str) -> list[tuple[int, int]]:
    out = []
    for tok in text.split(","):
        try:
            h, w = (int(t) for t in tok.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad shape {tok!r}; use HxW") from None
        _shape(h, w)
        out.append((h, w))
    return out


def cmd_bench(args) -> int:
    opts = _options(args)
    shapes = _parse_shapes(args.shapes)
    if args.eps is not None and args.entries is not None:
        raise UsageError("--eps and --entries are mutually exclusive")
    base = 0 if args.seed is None else args.seed
    if args.entries is not None:
        grid = [(None, int(k)) for k in args.entries.split(",")]
    else:
        grid = [(_fraction(e), None) for e in (args.eps or "1/3,1/2").split(",")]
    jobs = [(h, w, e, k, base + r, opts) for h, w in shapes for e, k in grid for r in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    print("shape eps seed entries eps_effective status seconds")
    for h, w, e, seed, k, ee, status, sec in rows:
        print(f"{h}x{w} {e} {seed} {k} {ee} {status} {sec:.3f}")
    done = sum(r[6] == "completed" for r in rows)
    print(f"instances: {len(rows)}")
    print(f"completed: {done}")
    return 0


# --- parser ----------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eta", type=_fraction, default=None, help="shift eta (default 2n/3)")
    common.add_argument("--method", choices=("neumann", "direct"), default=None)
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--arith", choices=("float", "rational"), default="float")
    common.add_argument("--cache", default=None, help=f"cache directory (default ${cache.ENV_VAR})")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fracsudoku", description="Fractional Sudoku completion toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="fractional completion of a puzzle file")
    s.add_argument("puzzle")
    s.add_argument("-o", "--output", help="write the solution here instead of stdout")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("thin-solve", parents=[common], help="balance column bundles, then solve with K''")
    s.add_argument("puzzle")
    s.add_argument("--eps", type=_fraction, default=None, help="density passed to the extension step")
    s.add_argument("--show-extended", action="store_true", help="print the extended puzzle")
    s.set_defaults(func=cmd_thin_solve)

    s = sub.add_parser("verify", parents=[common], help="re-certify a solution file")
    s.add_argument("puzzle")
    s.add_argument("solution")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues of M and the norm of A^{-1}")
    s.add_argument("h", type=int)
    s.add_argument("w", type=int)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("algebra-check", parents=[common], help="verify structure constants and inverse")
    s.add_argument("h", type=int)
    s.add_argument("w", type=int)
    s.add_argument("--pairs", type=int, default=50, help="random relation pairs to multiply")
    s.set_defaults(func=cmd_algebra_check)

    s = sub.add_parser("gen-barrier", parents=[common], help="sparse puzzle with no fractional completion")
    s.add_argument("h", type=int)
    s.add_argument("w", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen_barrier)

    s = sub.add_parser("pentadoku-nullity", parents=[common], help="nullity of M' for polyomino tilings")
    s.add_argument("--tilings", default=None, help="tiling file (default: shipped pentomino tilings)")
    s.add_argument("--exact-only", action="store_true", help="skip the numeric rank cross-check")
    s.set_defaults(func=cmd_pentadoku)

    s = sub.add_parser("bench", parents=[common], help="solve random eps-dense puzzles")
    s.add_argument("--shapes", default="2x3,3x3")
    s.add_argument("--eps", default=None, help="comma-separated densities (default 1/3,1/2)")
    s.add_argument("--entries", default=None, help="comma-separated entry counts instead of densities")
    s.add_argument("--count", type=int, default=5)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.seed is None and args.command == "algebra-check":
        args.seed = 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, PuzzleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
