"""Puzzle model, the host graph G_hw / G_S, tiles and availability metrics.

Conventions used throughout the package:

* Public coordinates (cells, symbols, boxes) are 1-based, as in ``[n]``.
* Internal arrays are 0-based.
* Edges are globally indexed RC block, RS block, CS block, BS block, each
  block lexicographic in its two coordinates.  Edge ``(kind, a, b)`` with
  0-based ``a, b`` has index ``kind * n**2 + a * n + b``.
* Tile ``(i, j, k)`` (0-based) has index ``(i * n + j) * n + k``; its box is
  implied by the cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

RC, RS, CS, BS = 0, 1, 2, 3
EDGE_KINDS = ("RC", "RS", "CS", "BS")


class PuzzleError(ValueError):
    """Raised for malformed puzzle text or an invalid partial Sudoku."""


@dataclass(frozen=True)
class SudokuShape:
    h: int
    w: int

    def __post_init__(self):
        if not (isinstance(self.h, int) and isinstance(self.w, int)):
            raise TypeError("box dimensions must be integers")
        if self.h < 2 or self.w < 2:
            raise ValueError(f"box dimensions must be >= 2, got ({self.h}, {self.w})")

    @property
    def n(self) -> int:
        return self.h * self.w

    @property
    def num_edges(self) -> int:
        return 4 * self.n**2

    @property
    def num_tiles(self) -> int:
        return self.n**3

    def __str__(self):
        return f"({self.h},{self.w})"


def box_of(shape: SudokuShape, i: int, j: int) -> int:
    """Box index (1-based) of cell ``(i, j)``; boxes run left to right, top to bottom."""
    n = shape.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"cell ({i}, {j}) outside a {n}x{n} grid")
    return shape.h * ((i - 1) // shape.h) + (j - 1) // shape.w + 1


@lru_cache(maxsize=None)
def rect_box_grid(shape: SudokuShape) -> np.ndarray:
    """0-based box index of every cell for rectangular boxes."""
    n = shape.n
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    grid = shape.h * (i // shape.h) + j // shape.w
    grid.setflags(write=False)
    return grid


class EdgeId(NamedTuple):
    """An edge of G_hw: ``kind`` in RC/RS/CS/BS and two 1-based coordinates.

    RC(i, j) row-column, RS(i, k) row-symbol, CS(j, k) column-symbol,
    BS(l, k) box-symbol.
    """

    kind: str
    a: int
    b: int

    def __str__(self):
        return f"{self.kind}({self.a},{self.b})"

    def index(self, n: int) -> int:
        return EDGE_KINDS.index(self.kind) * n * n + (self.a - 1) * n + (self.b - 1)

    @classmethod
    def from_index(cls, idx: int, n: int) -> "EdgeId":
        kind, rest = divmod(int(idx), n * n)
        a, b = divmod(rest, n)
        return cls(EDGE_KINDS[kind], a + 1, b + 1)


class Tile(NamedTuple):
    i: int
    j: int
    k: int
    l: int  # noqa: E741

    def edges(self) -> tuple[EdgeId, EdgeId, EdgeId, EdgeId]:
        return (
            EdgeId("RC", self.i, self.j),
            EdgeId("RS", self.i, self.k),
            EdgeId("CS", self.j, self.k),
            EdgeId("BS", self.l, self.k),
        )


def all_edges(shape: SudokuShape) -> list[EdgeId]:
    n = shape.n
    return [EdgeId.from_index(e, n) for e in range(4 * n * n)]


def tile_edge_array(n: int, box_grid: np.ndarray) -> np.ndarray:
    """``(n**3, 4)`` array: edge indices RC, RS, CS, BS of each tile."""
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    box = box_grid[i, j]
    nn = n * n
    return np.stack(
        [i * n + j, nn + i * n + k, 2 * nn + j * n + k, 3 * nn + box * n + k], axis=1
    )


@lru_cache(maxsize=None)
def _rect_tile_edges(shape: SudokuShape) -> np.ndarray:
    arr = tile_edge_array(shape.n, rect_box_grid(shape))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PartialSudoku:
    """A valid partial Sudoku.

    ``entries`` maps 1-based cells ``(i, j)`` to 1-based symbols.  ``boxes``
    optionally replaces the rectangular box pattern by an arbitrary n-to-1
    labelling of the cells (an n x n grid of 1-based labels); the shape's
    ``(h, w)`` then only serves as the rectangular reference pattern.
    """

    shape: SudokuShape
    entries: Mapping[tuple[int, int], int] = field(default_factory=dict)
    boxes: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        n = self.shape.n
        entries = {(int(i), int(j)): int(k) for (i, j), k in dict(self.entries).items()}
        object.__setattr__(self, "entries", entries)
        if self.boxes is not None:
            boxes = tuple(tuple(int(v) for v in row) for row in self.boxes)
            object.__setattr__(self, "boxes", boxes)
            _check_box_labels(boxes, n)
        grid = self.box_grid
        seen: dict[tuple[str, int, int], tuple[int, int]] = {}
        for (i, j), k in sorted(entries.items()):
            if not (1 <= i <= n and 1 <= j <= n):
                raise PuzzleError(f"cell ({i},{j}) outside the {n}x{n} grid")
            if not 1 <= k <= n:
                raise PuzzleError(f"symbol {k} at cell ({i},{j}) outside [1,{n}]")
            for unit, idx in (("row", i), ("column", j), ("box", int(grid[i - 1, j - 1]) + 1)):
                key = (unit, idx, k)
                if key in seen:
                    other = seen[key]
                    raise PuzzleError(
                        f"{unit} conflict: symbol {k} at ({i},{j}) repeats {unit} {idx}"
                        f" (already at {other})"
                    )
                seen[key] = (i, j)

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def box_grid(self) -> np.ndarray:
        if self.boxes is None:
            return rect_box_grid(self.shape)
        return np.asarray(self.boxes, dtype=np.int64) - 1

    def __eq__(self, other):
        if not isinstance(other, PartialSudoku):
            return NotImplemented
        return (self.shape, self.entries, self.boxes) == (other.shape, other.entries, other.boxes)

    def __hash__(self):
        return hash((self.shape, frozenset(self.entries.items()), self.boxes))

    def __len__(self):
        return len(self.entries)

    def grid(self) -> np.ndarray:
        """n x n array of symbols, 0 for empty."""
        g = np.zeros((self.n, self.n), dtype=np.int64)
        for (i, j), k in self.entries.items():
            g[i - 1, j - 1] = k
        return g

    def with_entries(self, extra: Mapping[tuple[int, int], int]) -> "PartialSudoku":
        merged = dict(self.entries)
        for cell, k in extra.items():
            if cell in merged:
                raise PuzzleError(f"cell {cell} already filled")
            merged[cell] = k
        return PartialSudoku(self.shape, merged, self.boxes)

    def tile_edges(self) -> np.ndarray:
        if self.boxes is None:
            return _rect_tile_edges(self.shape)
        return tile_edge_array(self.n, self.box_grid)

    def filled_tiles(self) -> list[Tile]:
        grid = self.box_grid
        return [Tile(i, j, k, int(grid[i - 1, j - 1]) + 1) for (i, j), k in sorted(self.entries.items())]


def _check_box_labels(boxes, n):
    if len(boxes) != n or any(len(row) != n for row in boxes):
        raise PuzzleError(f"box map must be {n}x{n}")
    counts = np.bincount(np.asarray(boxes).ravel(), minlength=n + 1)
    if counts[0] or len(counts) != n + 1 or np.any(counts[1:] != n):
        raise PuzzleError("box map must use each label 1..n exactly n times")


# --- graph model -------------------------------------------------------------


def edge_mask(S: PartialSudoku) -> np.ndarray:
    """Boolean mask over all 4n^2 edges: True for edges of G_S."""
    n = S.n
    mask = np.ones(4 * n * n, dtype=bool)
    if S.entries:
        te = S.tile_edges()
        filled = [((i - 1) * n + (j - 1)) * n + (k - 1) for (i, j), k in S.entries.items()]
        mask[te[filled].ravel()] = False
    return mask


def graph_edges(S: PartialSudoku) -> set[EdgeId]:
    n = S.n
    return {EdgeId.from_index(e, n) for e in np.flatnonzero(edge_mask(S))}


def available_tile_mask(S: PartialSudoku, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Boolean mask over the n^3 tiles: True iff all four edges lie in G_S."""
    if mask is None:
        mask = edge_mask(S)
    return mask[S.tile_edges()].all(axis=1)


def tiles_available(S: PartialSudoku) -> set[Tile]:
    n = S.n
    grid = S.box_grid
    out = set()
    for t in np.flatnonzero(available_tile_mask(S)):
        ij, k = divmod(int(t), n)
        i, j = divmod(ij, n)
        out.add(Tile(i + 1, j + 1, k + 1, int(grid[i, j]) + 1))
    return out


def availability_vector(S: PartialSudoku, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """u(e) for every edge index (entries on deleted edges are meaningless and set to 0)."""
    if mask is None:
        mask = edge_mask(S)
    te = S.tile_edges()
    blocked = ~mask[te].all(axis=1)
    u = np.bincount(te[blocked].ravel(), minlength=4 * S.n**2)
    u[~mask] = 0
    return u


def availability_counts(S: PartialSudoku) -> dict[EdgeId, int]:
    """Number of unavailable tiles through each edge of G_S."""
    mask = edge_mask(S)
    u = availability_vector(S, mask)
    n = S.n
    return {EdgeId.from_index(e, n): int(u[e]) for e in np.flatnonzero(mask)}


@dataclass(frozen=True)
class DensityReport:
    max_row_fill: int
    max_col_fill: int
    max_box_fill: int
    max_row_bundle_symbol: int
    max_col_bundle_symbol: int
    eps_effective: Fraction
    delta_effective: Fraction
    u_max: int

    def is_dense(self, eps) -> bool:
        return self.eps_effective <= Fraction(eps)

    def lines(self) -> list[str]:
        return [
            f"max_row_fill: {self.max_row_fill}",
            f"max_col_fill: {self.max_col_fill}",
            f"max_box_fill: {self.max_box_fill}",
            f"max_row_bundle_symbol: {self.max_row_bundle_symbol}",
            f"max_col_bundle_symbol: {self.max_col_bundle_symbol}",
            f"eps_effective: {self.eps_effective} ({float(self.eps_effective):.6g})",
            f"delta_effective: {self.delta_effective} ({float(self.delta_effective):.6g})",
            f"u_max: {self.u_max}",
        ]


def density_report(S: PartialSudoku) -> DensityReport:
    shape, n = S.shape, S.n
    h, w = shape.h, shape.w
    grid = S.grid()
    filled = grid > 0
    boxes = S.box_grid
    row_fill = int(filled.sum(axis=1).max(initial=0))
    col_fill = int(filled.sum(axis=0).max(initial=0))
    box_fill = int(np.bincount(boxes[filled], minlength=n).max(initial=0))
    # occurrences of symbol k in row bundle p / column bundle q
    rb = np.zeros((n // h, n + 1), dtype=np.int64)
    cb = np.zeros((n // w, n + 1), dtype=np.int64)
    for (i, j), k in S.entries.items():
        rb[(i - 1) // h, k] += 1
        cb[(j - 1) // w, k] += 1
    rbm, cbm = int(rb.max(initial=0)), int(cb.max(initial=0))
    eps = max(
        Fraction(row_fill, n), Fraction(col_fill, n), Fraction(box_fill, n),
        Fraction(rbm, h), Fraction(cbm, w),
    )
    mask = edge_mask(S)
    u = availability_vector(S, mask)
    u_max = int(u[mask].max(initial=0))
    return DensityReport(row_fill, col_fill, box_fill, rbm, cbm, eps, Fraction(u_max, n), u_max)


# --- fractional assignments ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class FractionalAssignment:
    """Weights f(i, j, k) stored as an ``(n, n, n)`` array indexed 0-based."""

    shape: SudokuShape
    weights: np.ndarray

    def __post_init__(self):
        n = self.shape.n
        if self.weights.shape != (n, n, n):
            raise ValueError(f"weights must have shape {(n, n, n)}, got {self.weights.shape}")

    @classmethod
    def uniform(cls, shape: SudokuShape, exact: bool = False) -> "FractionalAssignment":
        n = shape.n
        if exact:
            return cls(shape, np.full((n, n, n), Fraction(1, n), dtype=object))
        return cls(shape, np.full((n, n, n), 1.0 / n))

    @classmethod
    def from_sudoku(cls, S: PartialSudoku) -> "FractionalAssignment":
        n = S.n
        f = np.zeros((n, n, n))
        for (i, j), k in S.entries.items():
            f[i - 1, j - 1, k - 1] = 1.0
        return cls(S.shape, f)


def _line_sums(values: Iterable) -> object:
    vals = list(values)
    if vals and isinstance(vals[0], (Fraction, int)) and not isinstance(vals[0], bool):
        return sum(vals, Fraction(0))
    return math.fsum(float(v) for v in vals)


def verify_fractional_completion(
    S: PartialSudoku, f: FractionalAssignment, tol: float = 1e-8
) -> tuple[bool, list[str]]:
    """Check that ``f`` is a fractional completion of ``S``.

    Returns ``(ok, violations)``; violations are human-readable and located.
    """
    n = S.n
    if f.shape.n != n:
        raise ValueError(f"assignment order {f.shape.n} does not match puzzle order {n}")
    W = f.weights
    bad: list[str] = []
    for (i, j), k in sorted(S.entries.items()):
        if abs(W[i - 1, j - 1, k - 1] - 1) > tol:
            bad.append(f"filled cell ({i},{j}) has f(.,.,{k}) = {float(W[i - 1, j - 1, k - 1]):.12g}")
    lo, hi = W.min(), W.max()
    if lo < -tol or hi > 1 + tol:
        idx = np.unravel_index(np.argmin(W) if lo < -tol else np.argmax(W), W.shape)
        bad.append(
            f"weight out of [0,1] at ({idx[0] + 1},{idx[1] + 1},{idx[2] + 1}): {float(W[idx]):.12g}"
        )
    boxes = S.box_grid
    cells_of_box = [list(zip(*np.nonzero(boxes == b))) for b in range(n)]

    def check(label, value):
        if abs(value - 1) > tol:
            bad.append(f"{label} sums to {float(value):.12g}")

    for a in range(n):
        for b in range(n):
            check(f"cell ({a + 1},{b + 1})", _line_sums(W[a, b, :]))
            check(f"row {a + 1} symbol {b + 1}", _line_sums(W[a, :, b]))
            check(f"column {a + 1} symbol {b + 1}", _line_sums(W[:, a, b]))
            check(f"box {a + 1} symbol {b + 1}", _line_sums(W[i, j, b] for i, j in cells_of_box[a]))
    return (not bad, bad)


# --- text format ---------------------------------------------------------------


def parse_puzzle(text: str) -> PartialSudoku:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PuzzleError("empty puzzle text")
    header = lines[0].split()
    if len(header) != 2 or not all(t.isdigit() for t in header):
        raise PuzzleError(f"line 1: expected header 'h w', got {lines[0]!r}")
    h, w = int(header[0]), int(header[1])
    try:
        shape = SudokuShape(h, w)
    except ValueError as exc:
        raise PuzzleError(f"line 1: {exc}") from None
    n = shape.n
    rows = lines[1:]
    if len(rows) != n:
        raise PuzzleError(f"expected {n} grid lines, got {len(rows)}")
    entries = {}
    for i, row in enumerate(rows, start=1):
        fields = row.split()
        if len(fields) != n:
            raise PuzzleError(f"line {i + 1}: expected {n} fields, got {len(fields)}")
        for j, tok in enumerate(fields, start=1):
            if tok == ".":
                continue
            if not tok.isdigit():
                raise PuzzleError(f"line {i + 1}, column {j}: bad field {tok!r}")
            k = int(tok)
            if not 1 <= k <= n:
                raise PuzzleError(f"line {i + 1}, column {j}: symbol {k} outside [1,{n}]")
            entries[(i, j)] = k
    return PartialSudoku(shape, entries)


def serialize_puzzle(S: PartialSudoku) -> str:
    n = S.n
    out = [f"{S.shape.h} {S.shape.w}"]
    for i in range(1, n + 1):
        out.append(" ".join(str(S.entries.get((i, j), ".")) for j in range(1, n + 1)))
    return "\n".join(out) + "\n"


def read_puzzle(path) -> PartialSudoku:
    with open(path) as fh:
        return parse_puzzle(fh.read())


# --- instances -------------------------------------------------------------------


def obstruction_left() -> PartialSudoku:
    """Symbols 1..8 fill the top-left 3x3 box except (3,3); symbol 9 sits at (3,4)."""
    entries = {(1, 1): 1, (1, 2): 2, (1, 3): 3, (2, 1): 4, (2, 2): 5, (2, 3): 6,
               (3, 1): 7, (3, 2): 8, (3, 4): 9}
    return PartialSudoku(SudokuShape(3, 3), entries)


def obstruction_right() -> PartialSudoku:
    """Symbols 1 and 2 are forced into cell (1,1) from outside the top-left box."""
    entries = {(6, 2): 2, (9, 3): 2, (5, 2): 1, (8, 3): 1,
               (2, 6): 2, (3, 9): 2, (2, 5): 1, (3, 8): 1}
    return PartialSudoku(SudokuShape(3, 3), entries)


def random_sudoku(shape: SudokuShape, rng: np.random.Generator) -> np.ndarray:
    """A uniformly relabelled and row/column-shuffled complete Sudoku (0-based symbols)."""
    h, w, n = shape.h, shape.w, shape.n
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    base = (w * (r % h) + r // h + c) % n
    bands = rng.permutation(n // h)
    rows = np.concatenate([b * h + rng.permutation(h) for b in bands])
    stacks = rng.permutation(n // w)
    cols = np.concatenate([s * w + rng.permutation(w) for s in stacks])
    relabel = rng.permutation(n)
    return relabel[base[np.ix_(rows, cols)]]


def random_partial(shape: SudokuShape, num_entries: int, rng: np.random.Generator) -> PartialSudoku:
    """A random completable partial Sudoku with ``num_entries`` filled cells."""
    n = shape.n
    sol = random_sudoku(shape, rng)
    cells = rng.choice(n * n, size=num_entries, replace=False)
    entries = {(int(c) // n + 1, int(c) % n + 1): int(sol[c // n, c % n]) + 1 for c in cells}
    return PartialSudoku(shape, entries)


def random_dense_puzzle(
    shape: SudokuShape, eps, rng: np.random.Generator, attempts: Optional[int] = None
) -> PartialSudoku:
    """Grow a random valid partial Sudoku while it stays ``eps``-dense.

    Cells of a random complete Sudoku are offered in random order and kept
    only if the puzzle remains ``eps``-dense; for ``eps * min(h, w) < 1``
    nothing can be kept and the empty puzzle is returned.
    """
    n = shape.n
    eps = Fraction(eps)
    sol = random_sudoku(shape, rng)
    order = rng.permutation(n * n)
    if attempts is not None:
        order = order[:attempts]
    S = PartialSudoku(shape)
    for c in order:
        i, j = divmod(int(c), n)
        trial = S.with_entries({(i + 1, j + 1): int(sol[i, j]) + 1})
        if density_report(trial).eps_effective <= eps:
            S = trial
    return S


def cells_by_box(box_grid: np.ndarray) -> Sequence[list[tuple[int, int]]]:
    n = box_grid.shape[0]
    out: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            out[int(box_grid[i, j])].append((i, j))
    return out
