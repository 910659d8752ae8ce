"""Thin boxes: the barrier construction, latin-rectangle extension and the K'' pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from .algebra import relation_ids
from .core import PartialSudoku, SudokuShape, edge_mask
from .solver import SolveOptions, SolveOutcome, solve


class ExtensionError(RuntimeError):
    """Raised when a demanded symbol cannot be matched into its column."""


class PreconditionError(ValueError):
    """Raised in strict mode when the density or demand-size hypotheses fail."""


# --- barrier --------------------------------------------------------------------------------


def barrier_parameter(h: int, w: int) -> int:
    return -(-(h + w) // 3)


def barrier_construct(w: int, h: int) -> PartialSudoku:
    """A sparse partial Sudoku of type (h, w), h >= w >= 2, with no fractional completion.

    With a = ceil((h+w)/3), symbols A = 1..a and A' = a+1..2a:
    (a) A' fills column 1 in rows 1..a;
    (b) A fills column j of the j-th box of the leftmost stack, j = 2..w;
    (c) A is placed right of the leftmost stack in rows a+1..2a-w+1, each row
        shifted w columns further right than the previous one.
    Rows of (c) are clipped to the first row bundle; this only matters at
    (h, w) = (2, 2) where 2a-w+1 exceeds h.
    """
    if not (h >= w >= 2):
        raise ValueError(f"need h >= w >= 2, got h={h}, w={w}")
    shape = SudokuShape(h, w)
    a = barrier_parameter(h, w)
    A = list(range(1, a + 1))
    A2 = list(range(a + 1, 2 * a + 1))
    entries: dict[tuple[int, int], int] = {}
    for i, k in enumerate(A2, start=1):
        entries[(i, 1)] = k
    for j in range(2, w + 1):
        top = (j - 1) * h
        for t, k in enumerate(A):
            entries[(top + 1 + t, j)] = k
    for t, row in enumerate(range(a + 1, min(2 * a - w + 1, h) + 1)):
        start = w + 1 + t * w
        for q, k in enumerate(A):
            entries[(row, start + q)] = k
    return PartialSudoku(shape, entries)


def barrier_free_cells(h: int, w: int) -> int:
    """Cells of column 1 in box 1 left for the symbols of A: h + w - 2a - 1."""
    a = barrier_parameter(h, w)
    return max(0, h + w - 2 * a - 1) if 2 * a - w + 1 <= h else max(0, h - a)


# --- latin rectangles --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LatinRectangle:
    """m x n partial latin rectangle on symbols 1..n (0 = empty)."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.int64)
        object.__setattr__(self, "grid", g)
        m, n = g.shape
        if m > n:
            raise ValueError("a latin rectangle needs m <= n")
        if g.min(initial=0) < 0 or g.max(initial=0) > n:
            raise ValueError(f"symbols must lie in 1..{n}")
        for axis, name in ((1, "row"), (0, "column")):
            for idx in range(g.shape[1 - axis]):
                line = g[idx] if axis == 1 else g[:, idx]
                vals = line[line > 0]
                if len(vals) != len(set(vals.tolist())):
                    raise ValueError(f"{name} {idx + 1} repeats a symbol")

    @property
    def m(self) -> int:
        return self.grid.shape[0]

    @property
    def n(self) -> int:
        return self.grid.shape[1]

    def density(self) -> Fraction:
        """Smallest eps for which the rectangle is eps-dense."""
        g = self.grid > 0
        sym = np.bincount(self.grid[g], minlength=self.n + 1)[1:]
        return max(Fraction(int(g.sum(axis=1).max(initial=0)), self.n),
                   Fraction(int(g.sum(axis=0).max(initial=0)), self.m),
                   Fraction(int(sym.max(initial=0)), self.m))

    def contains(self, other: "LatinRectangle") -> bool:
        f = other.grid > 0
        return bool(np.all(self.grid[f] == other.grid[f]))


@dataclass(frozen=True)
class SymbolDemands:
    """Sets A_1..A_n of symbols that must appear in the corresponding columns."""

    sets: tuple[frozenset, ...]

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "SymbolDemands":
        return cls(tuple(frozenset(int(k) for k in s) for s in lists))

    def max_size(self) -> int:
        return max((len(s) for s in self.sets), default=0)

    def max_multiplicity(self) -> int:
        counts: dict[int, int] = {}
        for s in self.sets:
            for k in s:
                counts[k] = counts.get(k, 0) + 1
        return max(counts.values(), default=0)

    def satisfied_by(self, R: LatinRectangle) -> bool:
        return all(set(s) <= set(R.grid[:, j].tolist()) for j, s in enumerate(self.sets))


@dataclass
class ExtensionReport:
    added: int = 0
    degree_checks: int = 0
    min_degree_slack: Optional[int] = None
    widened_columns: list[int] = field(default_factory=list)


def check_extension_preconditions(P: LatinRectangle, demands: SymbolDemands, eps, delta) -> list[str]:
    eps, delta = Fraction(eps), Fraction(delta)
    m = P.m
    problems = []
    if not (0 < eps < Fraction(1, 6) and 0 < delta < Fraction(1, 6)):
        problems.append(f"need 0 < eps, delta < 1/6 (eps={eps}, delta={delta})")
    if P.density() > eps:
        problems.append(f"rectangle is {P.density()}-dense, not {eps}-dense")
    if demands.max_size() >= delta * m:
        problems.append(f"some |A_j| = {demands.max_size()} >= delta m = {delta * m}")
    if demands.max_multiplicity() >= delta * m:
        problems.append(f"some symbol lies in {demands.max_multiplicity()} >= delta m sets")
    if len(demands.sets) != P.n:
        problems.append(f"expected {P.n} demand sets, got {len(demands.sets)}")
    return problems


def extend_rectangle(P: LatinRectangle, demands: SymbolDemands, eps, delta, strict: bool = True,
                     report: Optional[ExtensionReport] = None) -> LatinRectangle:
    """Add the symbols of A_j to column j, one column at a time, by bipartite matching.

    Candidate rows for column j are the ceil((eps + 2 delta) m) least-filled
    rows among those whose cell in column j is empty (ties by index).  In
    non-strict mode the hypotheses are not enforced and the candidate set is
    widened to all empty rows of the column if the matching falls short.
    """
    eps, delta = Fraction(eps), Fraction(delta)
    if len(demands.sets) != P.n:
        raise PreconditionError(f"expected {P.n} demand sets, got {len(demands.sets)}")
    if strict:
        problems = check_extension_preconditions(P, demands, eps, delta)
        if problems:
            raise PreconditionError("; ".join(problems))
    report = report if report is not None else ExtensionReport()
    g = P.grid.copy()
    m, n = g.shape
    size = math.ceil((eps + 2 * delta) * m)
    for j, want in enumerate(demands.sets):
        need = sorted(k for k in want if k not in set(g[:, j].tolist()))
        if not need:
            continue
        empty = np.flatnonzero(g[:, j] == 0)
        fill = (g[empty] > 0).sum(axis=1)
        order = empty[np.lexsort((empty, fill))]
        B = order[:size]

        def match(rows):
            adj = np.array([[k not in g[r] for r in rows] for k in need], dtype=np.int8)
            return adj, maximum_bipartite_matching(sp.csr_matrix(adj), perm_type="column")

        adj, mt = match(B)
        report.degree_checks += len(need)
        slack = int(adj.sum(axis=1).min()) - len(need) if len(need) else 0
        report.min_degree_slack = slack if report.min_degree_slack is None else min(report.min_degree_slack, slack)
        if strict and slack <= 0:
            raise ExtensionError(f"column {j + 1}: degree bound fails (slack {slack})")
        if np.any(mt < 0):
            if strict:
                raise ExtensionError(f"column {j + 1}: no matching covers {need}")
            B = order
            report.widened_columns.append(j + 1)
            adj, mt = match(B)
            if np.any(mt < 0):
                raise ExtensionError(f"column {j + 1}: no matching covers {need} even using all empty rows")
        for s, c in enumerate(mt):
            g[B[c], j] = need[s]
            report.added += 1
    return LatinRectangle(g)


# --- thin-box completion ---------------------------------------------------------------------------


@dataclass
class ThinOutcome:
    S: PartialSudoku
    S_prime: PartialSudoku
    added: dict[tuple[int, int], int]
    outcome: SolveOutcome
    extension: ExtensionReport
    eps: Fraction
    delta: Fraction

    @property
    def status(self) -> str:
        return self.outcome.status


def column_bundle_property(S: PartialSudoku) -> list[str]:
    """Violations of: every symbol of a box's column bundle also occurs in the box."""
    h, w, n = S.shape.h, S.shape.w, S.n
    grid = S.grid()
    bad = []
    for q in range(n // w):
        cols = grid[:, q * w:(q + 1) * w]
        bundle = set(cols[cols > 0].tolist())
        for p in range(n // h):
            box = cols[p * h:(p + 1) * h]
            missing = bundle - set(box[box > 0].tolist())
            if missing:
                bad.append(f"box {p * (n // w) + q + 1} misses {sorted(missing)} of its column bundle")
    return bad


SCB_RELATIONS = (34, 54, 58, 66)  # relations constrained by symbol and column bundle


def scb_leaks(S: PartialSudoku) -> dict[int, int]:
    """For each scb relation, the number of pairs (e, f) in it with e in E(G_S) and f not.

    All zero means these relations contribute nothing to K''.
    """
    mask = edge_mask(S)
    R = relation_ids(S.shape)
    sub = R[np.ix_(np.flatnonzero(mask), np.flatnonzero(~mask))]
    return {rid: int((sub == rid).sum()) for rid in SCB_RELATIONS}


def latin_density(S: PartialSudoku) -> Fraction:
    """Row/column/symbol/box density, ignoring the bundle conditions."""
    n = S.n
    grid = S.grid()
    f = grid > 0
    sym = np.bincount(grid[f], minlength=n + 1)[1:]
    box = np.bincount(S.box_grid[f], minlength=n)
    return Fraction(int(max(f.sum(axis=1).max(initial=0), f.sum(axis=0).max(initial=0),
                            sym.max(initial=0), box.max(initial=0))), n)


def thin_complete(S: PartialSudoku, eps=None, opts: Optional[SolveOptions] = None,
                  strict: bool = False) -> ThinOutcome:
    """Balance column bundles with the extension step, then solve using K''.

    For each row bundle, every symbol occurring in a column bundle but missing
    from the bundle's box there is demanded in a column of that box not yet
    containing it (least-loaded column first).  The extended puzzle S' has
    every column-bundle symbol inside each box, and is solved with the rows of
    K' outside E(G_S') zeroed.
    """
    opts = opts or SolveOptions()
    if opts.kernel_rows != "edges":
        from dataclasses import replace

        opts = replace(opts, kernel_rows="edges")
    shape = S.shape
    h, w, n = shape.h, shape.w, shape.n
    grid = S.grid()
    report = ExtensionReport()
    bundle_syms = []
    for q in range(n // w):
        cols = grid[:, q * w:(q + 1) * w]
        bundle_syms.append(set(cols[cols > 0].tolist()))
    worst_eps, worst_delta = Fraction(0), Fraction(0)
    for p in range(n // h):
        rows = slice(p * h, (p + 1) * h)
        sets: list[set] = [set() for _ in range(n)]
        for q in range(n // w):
            box = grid[rows, q * w:(q + 1) * w]
            missing = sorted(bundle_syms[q] - set(box[box > 0].tolist()))
            for k in missing:
                choices = [j for j in range(q * w, (q + 1) * w) if k not in grid[:, j]]
                if not choices:
                    raise ExtensionError(f"symbol {k} fills every column of stack {q + 1}")
                j = min(choices, key=lambda c: (len(sets[c]), c))
                sets[j].add(k)
        demands = SymbolDemands(tuple(frozenset(s) for s in sets))
        P = LatinRectangle(grid[rows])
        m = P.m
        e_p = eps if eps is not None else max(P.density(), Fraction(1, 10 * m))
        d_p = Fraction(max(demands.max_size(), demands.max_multiplicity()) + 1, m)
        worst_eps, worst_delta = max(worst_eps, Fraction(e_p)), max(worst_delta, d_p)
        ext = extend_rectangle(P, demands, e_p, d_p, strict=strict, report=report)
        grid[rows] = ext.grid
    entries = {(i + 1, j + 1): int(grid[i, j]) for i, j in zip(*np.nonzero(grid))}
    S_prime = PartialSudoku(shape, entries)
    added = {c: k for c, k in S_prime.entries.items() if c not in S.entries}
    outcome = solve(S_prime, opts)
    return ThinOutcome(S, S_prime, added, outcome, report, worst_eps, worst_delta)
