"""The eleven acceptance criteria, each at its stated tolerance.

Every test prints a single ``criterion N: PASS|FAIL`` line (collected again in
the terminal summary) before asserting.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

import oracles
from fracsudoku.algebra import (AlgebraElement, H_SYM, W_SYM, compute_structure_constants, degree_table,
                                relation_ids, relation_matrix, relation_types)
from fracsudoku.core import (PartialSudoku, SudokuShape, density_report, obstruction_left, obstruction_right,
                             parse_puzzle, random_dense_puzzle, random_partial)
from fracsudoku.incidence import build_M, build_restricted, nullity_formula, rank_and_nullity, rank_formula
from fracsudoku.polyomino import alpha_report, nullity_study, random_perturbed_boxmap, read_tilings
from fracsudoku.solver import certify, solve
from fracsudoku.spectral import (a_inverse_norm, eigenspace_dimension, generalized_inverse, inverse_from_table,
                                 norm_functions, projectors, shifted_matrix)
from fracsudoku.thin_box import (LatinRectangle, SymbolDemands, barrier_construct, check_extension_preconditions,
                                 extend_rectangle, thin_complete)

from pathlib import Path

DATA = Path(__file__).parent / "data"


def test_criterion_01_rank_nullity(report):
    bad, slowest = [], 0.0
    for h in (2, 3, 4):
        for w in (2, 3, 4):
            shape = SudokuShape(h, w)
            t0 = time.perf_counter()
            r = rank_and_nullity(build_M(shape), "exact")
            dt = time.perf_counter() - t0
            slowest = max(slowest, dt)
            if r.rank != rank_formula(shape) or r.nullity != nullity_formula(shape) or dt >= 60:
                bad.append((h, w, r.rank, r.nullity, round(dt, 1)))
    ok = report(1, not bad, f"exact rank/nullity on {{2,3,4}}^2; slowest {slowest:.2f}s; mismatches {bad}")
    assert ok


def test_criterion_02_spectrum(report):
    details, ok = [], True
    for shape in (SudokuShape(2, 3), SudokuShape(3, 3)):
        n = shape.n
        ev = np.linalg.eigvalsh(build_M(shape).astype(float))
        near = np.rint(ev / n)
        dev = float(np.abs(ev - near * n).max())
        mult = tuple(int((near == j).sum()) for j in range(5))
        want = tuple(eigenspace_dimension(shape, j) for j in range(5))
        ok &= dev < 1e-8 and mult == want and set(near.astype(int)) <= set(range(5))
        details.append(f"{shape} mult {mult} dev {dev:.1e}")
    ok &= tuple(eigenspace_dimension(SudokuShape(2, 3), j) for j in range(5)) == oracles.MULTIPLICITIES_2x3
    assert report(2, ok, "; ".join(details))


def test_criterion_03_inverse(report):
    ok, details = True, []
    for shape in (SudokuShape(2, 3), SudokuShape(2, 4), SudokuShape(3, 3)):
        Ainv = generalized_inverse(shape)  # x = 3/2, i.e. eta = 2n/3
        ident = (shifted_matrix(shape, Fraction(2 * shape.n, 3)) @ Ainv) == AlgebraElement.identity(shape)
        table = inverse_from_table(shape)
        coeff_ok = all(Fraction(a) == Fraction(b) for a, b in zip(table.coeffs, Ainv.coeffs))
        ok &= ident and coeff_ok
        details.append(f"{shape} A*Ainv=I {ident} table {coeff_ok}")
    assert report(3, ok, "; ".join(details))


def test_criterion_04_norm_closed_form(report):
    ok, details = True, []
    for shape in (SudokuShape(2, 3), SudokuShape(3, 3), SudokuShape(3, 4)):
        h, w, n = shape.h, shape.w, shape.n
        formula = (Fraction(15, 4 * n) - Fraction(7 * (h + w), 8 * n * n) - Fraction(4, 9 * n * n)
                   + Fraction(31 * (h + w) - 21, 72 * n**3))
        val = a_inverse_norm(shape).computed
        ok &= val == formula
        details.append(f"{shape} {val}")
    f = norm_functions(Fraction(3, 2))
    ok &= max(f) == Fraction(15, 4) and f[2] == Fraction(15, 4)
    details.append(f"f(3/2) = {tuple(str(v) for v in f)}")
    assert report(4, ok, "; ".join(details))


def test_criterion_05_degrees_and_constants(report):
    table = degree_table()
    sub = {oracles.h: H_SYM, oracles.w: W_SYM}
    deg_bad = [i for i in range(1, 70) if sympy.expand(oracles.degree(i).subs(sub) - table[i - 1]) != 0]
    shape = SudokuShape(2, 3)
    sc = compute_structure_constants().at(shape)
    first, second = relation_types()
    rng = np.random.default_rng(5)
    prod_bad = []
    for _ in range(50):
        i = int(rng.integers(1, 70))
        j = int(rng.choice(np.flatnonzero(first == second[i])))
        lhs = relation_matrix(shape, i) @ relation_matrix(shape, j)
        rhs = np.zeros_like(lhs)
        for k in np.flatnonzero(sc[i, j]):
            rhs += int(sc[i, j, k]) * relation_matrix(shape, int(k))
        if not np.array_equal(lhs, rhs):
            prod_bad.append((i, j))
    ok = report(5, not deg_bad and not prod_bad,
                f"degree mismatches {deg_bad}; product mismatches on 50 pairs at (2,3): {prod_bad}")
    assert ok


def _signed_kernel(shape):
    K = projectors(shape).K
    D = 1
    for c in K.coeffs:
        D = math.lcm(D, Fraction(c).denominator)
    table = np.array([0] + [int(Fraction(c) * D) for c in K.coeffs], dtype=np.int64)
    return table[relation_ids(shape)]


def test_criterion_06_orthogonality(report):
    shape = SudokuShape(3, 3)
    KD = _signed_kernel(shape)
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(20):
        S = random_partial(shape, int(rng.integers(0, 9)), rng)
        rs = build_restricted(S)
        KS = KD[np.ix_(rs.edges, rs.edges)]
        MS = rs.M_S.toarray().astype(np.int64)
        if np.any(KS.sum(axis=1) != 0) or np.any(KS @ MS != 0):
            bad += 1
    assert report(6, bad == 0, f"K[S]1 = 0 and K[S]M_S = O exactly on 20 puzzles at (3,3); failures {bad}")


def test_criterion_07_end_to_end(report):
    eps = Fraction(1, 101)
    fails, slowest, total, entries = [], 0.0, 0, 0
    for shape in (SudokuShape(3, 3), SudokuShape(3, 4)):
        rng = np.random.default_rng(7)
        for t in range(50):
            S = random_dense_puzzle(shape, eps, rng)
            assert density_report(S).eps_effective <= eps
            entries += len(S)
            t0 = time.perf_counter()
            out = solve(S)
            dt = time.perf_counter() - t0
            slowest = max(slowest, dt)
            total += 1
            cert = certify(S, out.assignment, tol=1e-8, neg_tol=1e-10) if out.completed else None
            if not (out.completed and cert.ok and cert.max_deviation <= 1e-8
                    and cert.min_weight >= -1e-10 and dt < 10):
                fails.append((str(shape), t, out.status))
    # eps <= 1/101 admits no entry at these shapes (one entry already gives density >= 1/w)
    ok = report(7, not fails, f"{total} puzzles (total entries {entries}); slowest {slowest:.2f}s; failures {fails}")
    assert ok


def test_criterion_08_obstructions(report):
    left, right = solve(obstruction_left()), solve(obstruction_right())
    ok = (not left.completed and bool(left.certificate)) and (not right.completed and bool(right.certificate))
    completed = []
    count = 0
    for w in (2, 3):
        for h in range(w, 13):
            count += 1
            if solve(barrier_construct(w, h)).completed:
                completed.append((h, w))
    ok &= not completed
    assert report(8, ok, f"left: {left.status} [{left.certificate}]; right: {right.status}; "
                         f"{count} barriers, completed: {completed}")


def _random_extension_instance(rng, m=12, n=24):
    eps = delta = Fraction(1, 7)
    g = np.zeros((m, n), dtype=np.int64)
    syms, cols = rng.permutation(n) + 1, rng.permutation(n)
    fill = np.zeros(m, dtype=int)
    used = 0
    for _ in range(int(rng.integers(4, 12))):
        r = int(rng.integers(m))
        if fill[r] >= 3:
            continue
        g[r, cols[used]] = syms[used]
        fill[r] += 1
        used += 1
    free = [int(s) for s in syms[used:]]
    rng.shuffle(free)
    sets = [[] for _ in range(n)]
    for j in rng.choice(n, size=int(rng.integers(5, 15)), replace=False):
        sets[int(j)].append(free.pop())
    return LatinRectangle(g), SymbolDemands.from_lists(sets), eps, delta


def test_criterion_09_thin_box(report):
    rng = np.random.default_rng(9)
    ext_bad = 0
    for _ in range(50):
        P, D, eps, delta = _random_extension_instance(rng)
        assert not check_extension_preconditions(P, D, eps, delta)
        R = extend_rectangle(P, D, eps, delta)
        if not (R.contains(P) and D.satisfied_by(R) and R.density() <= 3 * (eps + delta)):
            ext_bad += 1
    blocks = (DATA / "thin_6x2.txt").read_text().split("\n\n")
    thin = []
    for text in blocks:
        S = parse_puzzle(text)
        plain = solve(S)
        res = thin_complete(S)
        cert = certify(S, res.outcome.assignment) if res.outcome.completed else None
        thin.append(not plain.completed and res.outcome.completed and cert.ok)
    ok = ext_bad == 0 and all(thin) and len(thin) > 0
    assert report(9, ok, f"extend_rectangle failures {ext_bad}/50; thin_complete rescues "
                         f"{sum(thin)}/{len(thin)} plain-rejected (6,2) puzzles")


def test_criterion_10_pentadoku(report):
    tilings = read_tilings()
    t0 = time.perf_counter()
    recs = nullity_study(tilings, numeric=False)
    per = (time.perf_counter() - t0) / len(recs)
    bad = [r.index + 1 for r in recs if r.nullity != (27 if r.has_straight else 23)]
    with_i = sum(r.has_straight for r in recs)
    ok = not bad and per < 1 and with_i > 0 and with_i < len(recs)
    assert report(10, ok, f"{len(recs)} tilings ({with_i} with I); {per * 1000:.1f} ms each; mismatches {bad}")


def test_criterion_11_alpha_bound(report):
    # Any reassigned cell (i, j) changes 2n entries in row RC(i, j) of M - M', while
    # 4 alpha n < 2n whenever alpha < 1/2; such maps are expected to violate the bound.
    rng = np.random.default_rng(11)
    results = []
    for shape in (SudokuShape(2, 3), SudokuShape(3, 3)):
        for _ in range(20):
            bm = random_perturbed_boxmap(shape, rng, swaps=int(rng.integers(1, 4)))
            results.append((str(shape), alpha_report(bm, shape)))
    bad = [(s, str(r.alpha), r.norm, str(r.bound)) for s, r in results if not r.holds]
    ok = report(11, not bad, f"{len(results) - len(bad)}/{len(results)} maps satisfy ||M-M'|| <= 4 alpha n; "
                             f"first violations {bad[:3]}")
    assert ok
